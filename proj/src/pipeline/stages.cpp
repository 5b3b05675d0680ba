#include <algorithm>
#include <fstream>
#include <optional>

#include "wimpe/json_io.hpp"
#include "wimpe/pipeline.hpp"
#include "wimpe/points.hpp"
#include "wimpe/text.hpp"

namespace wimpe {

using nlohmann::json;

namespace {

// Errors that mean the run itself is misconfigured rather than one instance
// being bad.
bool is_fatal(const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const ConfigError&) {
    return true;
  } catch (const TemplateError&) {
    return true;
  } catch (...) {
    return false;
  }
}

// Runs compute(i) for i in [0, n) in parallel chunks and hands each chunk's
// results to emit(i, result) in index order, so the append order of every
// store is independent of scheduling. compute must catch per-item failures.
template <class R, class Compute, class Emit>
void run_chunked(std::size_t n, std::size_t workers, Compute compute, Emit emit) {
  const std::size_t chunk = std::max<std::size_t>(8, workers * 4);
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    const std::size_t end = std::min(n, begin + chunk);
    std::vector<std::optional<R>> results(end - begin);
    bounded_parallel_for(end - begin, workers, [&](std::size_t k) { results[k] = compute(begin + k); });
    for (std::size_t k = 0; k < results.size(); ++k) emit(begin + k, *results[k]);
  }
}

class JsonlAppender {
 public:
  explicit JsonlAppender(const fs::path& path) {
    fs::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::app);
    if (!out_) throw Error("cannot open " + path.string() + " for appending");
  }
  void write(const json& j) { out_ << dump_canonical(j) << '\n'; }
  void flush() {
    out_.flush();
    if (!out_) throw Error("write to store failed");
  }

 private:
  std::ofstream out_;
};

TemplateSet load_templates(const PipelineConfig& cfg) {
  if (cfg.templates_dir.empty()) return TemplateSet();
  if (!fs::is_directory(cfg.templates_dir)) {
    throw ConfigError("templates directory " + cfg.templates_dir.string() + " does not exist");
  }
  TemplateSet t(cfg.templates_dir);
  for (const auto& m : cfg.metrics) {
    if (is_builtin_metric(m)) continue;
    const fs::path p = cfg.templates_dir / (m + ".txt");
    if (fs::exists(p)) t.set(PromptTemplate::load(p));
  }
  return t;
}

// Per-item outcome: a value or an error message.
template <class T>
struct Outcome {
  std::optional<T> value;
  std::string error;
};

template <class T, class Fn>
Outcome<T> attempt(Fn fn) {
  Outcome<T> o;
  try {
    o.value = fn();
  } catch (const Error& e) {
    if (is_fatal(std::current_exception())) throw;
    o.error = e.what();
  }
  return o;
}

}  // namespace

int cmd_extract_points(const PipelineConfig& cfg, Judge& judge) {
  cfg.validate();
  const auto records = load_dataset(cfg.dataset);
  const TemplateSet templates = load_templates(cfg);
  const PromptTemplate& tpl = templates.get("points");
  RunManifest manifest = RunManifest::load_or_new(cfg);
  manifest.begin_stage("extract-points", cfg);

  const auto done = load_points(points_store(cfg));
  std::vector<const Record*> todo;
  for (const auto& r : records) {
    if (!done.contains(r.instance.id)) todo.push_back(&r);
  }

  std::vector<StageFailure> failures;
  JsonlAppender store(points_store(cfg));
  run_chunked<Outcome<std::vector<ScoringPoint>>>(
      todo.size(), cfg.judge.workers,
      [&](std::size_t i) {
        const Instance& inst = todo[i]->instance;
        return attempt<std::vector<ScoringPoint>>([&] {
          return generate_points(judge, inst.question, inst.reference_answer, cfg.parse_retries, tpl);
        });
      },
      [&](std::size_t i, const Outcome<std::vector<ScoringPoint>>& o) {
        const std::string& id = todo[i]->instance.id;
        if (o.value) {
          store.write(json{{"instance_id", id}, {"points", *o.value}});
        } else {
          failures.push_back({"extract-points", id, "", "", o.error});
        }
      });
  store.flush();

  const bool partial = !failures.empty();
  manifest.end_stage("extract-points", std::move(failures));
  manifest.save(cfg.out_dir);
  return partial ? kExitPartial : kExitOk;
}

int cmd_evaluate(const PipelineConfig& cfg, Judge& judge) {
  cfg.validate();
  if (cfg.metrics.empty()) throw ConfigError("no metrics requested");
  const auto records = load_dataset(cfg.dataset);
  const TemplateSet templates = load_templates(cfg);
  for (const auto& m : cfg.metrics) {
    if (is_builtin_metric(m)) continue;
    if (cfg.templates_dir.empty() || !fs::exists(cfg.templates_dir / (m + ".txt"))) {
      throw ConfigError("metric \"" + m + "\" is not built in and no rubric template " + m +
                        ".txt was found in the templates directory");
    }
  }
  RunManifest manifest = RunManifest::load_or_new(cfg);
  manifest.begin_stage("evaluate", cfg);

  const auto existing = load_evaluations(evaluations_store(cfg));
  const auto points = load_points(points_store(cfg));

  struct Job {
    const Record* rec;
    const GeneratedResponse* resp;
    std::vector<std::string> metrics;  // still to compute
    const InstanceEvaluation* prior;
  };
  std::vector<Job> jobs;
  std::set<std::string> missing_points;
  for (const auto& r : records) {
    for (const auto& resp : r.responses) {
      auto it = existing.find({r.instance.id, resp.model_id});
      const InstanceEvaluation* prior = it == existing.end() ? nullptr : &it->second;
      Job job{&r, &resp, {}, prior};
      for (const auto& m : cfg.metrics) {
        if (!prior || !prior->scores.contains(score_name_for(m))) job.metrics.push_back(m);
      }
      if (job.metrics.empty()) continue;
      const bool needs_points = std::any_of(job.metrics.begin(), job.metrics.end(),
                                            [](const std::string& m) { return m == "wpa" || m == "pcp"; });
      if (needs_points && !points.contains(r.instance.id)) missing_points.insert(r.instance.id);
      jobs.push_back(std::move(job));
    }
  }
  if (!missing_points.empty()) {
    std::string ids;
    for (const auto& id : missing_points) ids += (ids.empty() ? "" : ", ") + id;
    throw PreconditionError("no scoring points for instance(s) " + ids + "; run extract-points first");
  }

  auto evaluate_job = [&](const Job& job) {
    const Instance& inst = job.rec->instance;
    const std::string& answer = job.resp->text;
    InstanceEvaluation row;
    row.instance_id = inst.id;
    row.model_id = job.resp->model_id;
    auto record = [&](const std::string& metric, auto&& fn) {
      try {
        row.scores[score_name_for(metric)] = fn();
      } catch (const Error& e) {
        if (is_fatal(std::current_exception())) throw;
        row.failures[score_name_for(metric)] = e.what();
      }
    };
    for (const auto& m : job.metrics) {
      if (m == "bleu") {
        record(m, [&] { return bleu(answer, inst.reference_answer); });
      } else if (m == "rouge_l") {
        record(m, [&] { return rouge_l(answer, inst.reference_answer); });
      } else if (m == "wpa") {
        record(m, [&] {
          const auto& pts = points.at(inst.id);
          auto assessments =
              assess_alignment(judge, inst.question, pts, answer, cfg.parse_retries, templates.get("wpa"));
          for (auto& a : assessments) {
            if (a.alignment >= 1.0) continue;
            a.error_type = cfg.judge_error_types
                               ? classify_error_with_judge(judge, a.explanation, a.alignment, cfg.parse_retries)
                               : classify_error(a.explanation, a.alignment);
          }
          const double s = compute_wpa(pts, assessments);
          row.point_assessments = std::move(assessments);
          return s;
        });
      } else if (m == "pcp") {
        record(m, [&] {
          const auto& pts = points.at(inst.id);
          auto penalties = assess_conflicts(judge, inst.question, inst.reference_answer, pts, answer,
                                            cfg.parse_retries, templates.get("pcp"));
          const double s = compute_pcp(pts, penalties);
          row.penalty_assessments = std::move(penalties);
          return s;
        });
      } else if (m == "coarse3") {
        record(m, [&] {
          return coarse3(judge, inst.question, inst.reference_answer, answer, cfg.parse_retries,
                         templates.get("coarse3"))
              .rating;
        });
      } else if (m == "merge") {
        continue;  // after the loop, once its inputs exist
      } else {
        record(m, [&] {
          return rubric_score(judge, templates.get(m),
                              {{"question", inst.question},
                               {"reference_answer", inst.reference_answer},
                               {"generated_answer", answer},
                               {"context", inst.context}},
                              cfg.rubric_scale, cfg.parse_retries);
        });
      }
    }
    if (std::find(job.metrics.begin(), job.metrics.end(), "merge") != job.metrics.end()) {
      auto lookup = [&](std::string_view name) -> std::optional<double> {
        if (auto it = row.scores.find(std::string(name)); it != row.scores.end()) return it->second;
        if (job.prior) {
          if (auto it = job.prior->scores.find(std::string(name)); it != job.prior->scores.end()) return it->second;
        }
        return std::nullopt;
      };
      const auto c = lookup(score_names::kCoarse3);
      const auto w = lookup(score_names::kWpa);
      if (c && w) {
        record("merge", [&] { return compute_merge(*c, *w, cfg.merge); });
      } else {
        row.failures[std::string(score_names::kMerge)] = "merge needs both Coarse3 and WPA scores";
      }
    }
    validate_evaluation(row);
    return row;
  };

  std::vector<StageFailure> failures;
  JsonlAppender store(evaluations_store(cfg));
  run_chunked<InstanceEvaluation>(
      jobs.size(), cfg.judge.workers, [&](std::size_t i) { return evaluate_job(jobs[i]); },
      [&](std::size_t, const InstanceEvaluation& row) {
        store.write(row);
        for (const auto& [metric, why] : row.failures) {
          failures.push_back({"evaluate", row.instance_id, row.model_id, metric, why});
        }
      });
  store.flush();

  const bool partial = !failures.empty();
  manifest.end_stage("evaluate", std::move(failures));
  manifest.save(cfg.out_dir);
  return partial ? kExitPartial : kExitOk;
}

int cmd_star(const PipelineConfig& cfg, Judge& judge) {
  cfg.validate();
  const auto records = load_dataset(cfg.dataset);
  const TemplateSet templates = load_templates(cfg);
  const PromptTemplate& tpl = templates.get("rank");
  RunManifest manifest = RunManifest::load_or_new(cfg);
  manifest.begin_stage("star", cfg);

  std::set<std::string> done;
  for (const auto& l : load_labels(labels_store(cfg))) done.insert(l.instance_id);
  std::vector<const Record*> todo;
  for (const auto& r : records) {
    if (!done.contains(r.instance.id)) todo.push_back(&r);
  }

  std::vector<StageFailure> failures;
  JsonlAppender store(labels_store(cfg));
  run_chunked<Outcome<std::vector<StratifiedRanking>>>(
      todo.size(), cfg.judge.workers,
      [&](std::size_t i) {
        return attempt<std::vector<StratifiedRanking>>([&] {
          return build_pseudo_labels(judge, todo[i]->instance, todo[i]->responses, cfg.star, cfg.seed,
                                     cfg.parse_retries, tpl);
        });
      },
      [&](std::size_t i, const Outcome<std::vector<StratifiedRanking>>& o) {
        if (!o.value) {
          failures.push_back({"star", todo[i]->instance.id, "", "", o.error});
          return;
        }
        for (const auto& sr : *o.value) {
          store.write(json{{"instance_id", sr.instance_id},
                           {"offset", sr.offset},
                           {"selected_indices", sr.selected_indices},
                           {"selected_model_ids", sr.selected_model_ids}});
        }
      });
  store.flush();

  const bool partial = !failures.empty();
  manifest.end_stage("star", std::move(failures));
  manifest.save(cfg.out_dir);
  return partial ? kExitPartial : kExitOk;
}

}  // namespace wimpe
