#include <fstream>
#include <sstream>

#include "wimpe/json_io.hpp"
#include "wimpe/pipeline.hpp"
#include "wimpe/text.hpp"

namespace wimpe {

using nlohmann::json;

namespace {

using EvalMap = std::map<std::pair<std::string, std::string>, InstanceEvaluation>;

std::string num(double v) { return text::format_number(v); }
std::string num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }
json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

bool higher_is_better(const std::string& score_name) { return score_name != score_names::kPcp; }

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw Error("cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

std::vector<std::string> metric_names(const EvalMap& evals) {
  std::set<std::string> names;
  for (const auto& [key, ev] : evals) {
    for (const auto& [name, v] : ev.scores) names.insert(name);
  }
  return {names.begin(), names.end()};
}

ScoreTable table_for(const EvalMap& evals, const std::string& name) {
  ScoreTable t;
  for (const auto& [key, ev] : evals) {
    if (auto it = ev.scores.find(name); it != ev.scores.end()) t.emplace(key, it->second);
  }
  return t;
}

json summary_json(const CorrelationReport& r) {
  return json{{"mean_spearman", opt_json(r.mean_spearman)},
              {"mean_kendall", opt_json(r.mean_kendall)},
              {"sample_count", r.sample_count},
              {"excluded_count", r.excluded_count}};
}

const std::vector<ScoringPoint>& points_of(const std::map<std::string, std::vector<ScoringPoint>>& table,
                                           const std::string& id) {
  auto it = table.find(id);
  if (it == table.end()) throw PairingError("no scoring points stored for instance " + id);
  return it->second;
}

struct Inputs {
  std::vector<Record> records;
  EvalMap evals;
  std::vector<StratifiedRanking> labels;
  std::map<std::string, std::vector<ScoringPoint>> points;
  std::vector<std::string> metrics;
};

// Each study returns per-metric error messages; an empty map means success.
using StudyErrors = std::map<std::string, std::string>;

template <class Fn>
void per_metric(const std::vector<std::string>& metrics, StudyErrors& errors, Fn fn) {
  for (const auto& m : metrics) {
    try {
      fn(m);
    } catch (const PairingError& e) {
      errors[m] = e.what();
    } catch (const PreconditionError& e) {
      errors[m] = e.what();
    }
  }
}

StudyErrors study_correlation(const Inputs& in, const fs::path& dir) {
  StudyErrors errors;
  std::string csv = "metric,instance_id,offset,spearman,kendall\n";
  std::string dist = "metric,instance_id,model_id,score,normalized\n";
  json summary = json::object();
  per_metric(in.metrics, errors, [&](const std::string& m) {
    const ScoreTable t = table_for(in.evals, m);
    const auto r = instance_level_correlation(m, t, in.labels, higher_is_better(m));
    for (const auto& s : r.per_instance) {
      csv += m + "," + s.instance_id + "," + std::to_string(s.offset) + "," + num(s.spearman) + "," +
             num(s.kendall) + "\n";
    }
    json entry = summary_json(r);
    entry["higher_is_better"] = higher_is_better(m);
    summary[m] = entry;
    std::vector<double> raw;
    for (const auto& [key, v] : t) raw.push_back(v);
    if (raw.empty()) return;
    const auto norm = normalize_scores(raw);
    std::size_t k = 0;
    for (const auto& [key, v] : t) {
      dist += m + "," + key.first + "," + key.second + "," + num(v) + "," + num(norm[k++]) + "\n";
    }
  });
  write_file(dir / "correlation.csv", csv);
  write_file(dir / "score_distribution.csv", dist);
  write_json(dir / "correlation.json", json{{"metrics", summary}, {"errors", errors}});
  return errors;
}

// WPA recomputed from stored assessments with replacement weights and/or
// reduced alignments.
ScoreTable rescored_wpa(const Inputs& in, const std::function<std::vector<ScoringPoint>(const std::string&)>& pts_for,
                        bool reduce_alignment) {
  ScoreTable t;
  for (const auto& [key, ev] : in.evals) {
    if (!ev.point_assessments || !ev.scores.contains(std::string(score_names::kWpa))) continue;
    auto assessments = *ev.point_assessments;
    if (reduce_alignment) {
      for (auto& a : assessments) a.alignment = scale_reduce("alignment", a.alignment);
    }
    t.emplace(key, compute_wpa(pts_for(key.first), assessments));
  }
  return t;
}

StudyErrors study_ablation_scale(const Inputs& in, const fs::path& dir) {
  StudyErrors errors;
  std::string csv = "metric,variant,mean_spearman,mean_kendall,sample_count,excluded_count\n";
  json out = json::object();
  auto emit = [&](const std::string& m, const std::string& variant, const CorrelationReport& r) {
    csv += m + "," + variant + "," + num(r.mean_spearman) + "," + num(r.mean_kendall) + "," +
           std::to_string(r.sample_count) + "," + std::to_string(r.excluded_count) + "\n";
    out[m][variant] = summary_json(r);
  };
  per_metric(in.metrics, errors, [&](const std::string& m) {
    const ScoreTable t = table_for(in.evals, m);
    ScoreTable reduced;
    if (m == score_names::kWpa) {
      reduced = rescored_wpa(in, [&](const std::string& id) { return points_of(in.points, id); }, true);
    } else if (m == score_names::kCoarse3 || is_five_level_metric(m)) {
      for (const auto& [key, v] : t) reduced.emplace(key, scale_reduce(m, v));
    } else {
      return;  // no discrete scale to collapse
    }
    emit(m, "original", instance_level_correlation(m, t, in.labels, true));
    emit(m, "reduced", instance_level_correlation(m, reduced, in.labels, true));
  });
  write_file(dir / "ablation_scale.csv", csv);
  write_json(dir / "ablation_scale.json", json{{"metrics", out}, {"errors", errors}});
  return errors;
}

StudyErrors study_ablation_weights(const Inputs& in, std::uint64_t seed, const fs::path& dir) {
  StudyErrors errors;
  std::string csv = "metric,weights,mean_spearman,mean_kendall,sample_count,excluded_count\n";
  json out = json::object();
  std::map<std::string, std::vector<ScoringPoint>> equal, random;
  for (const auto& [id, pts] : in.points) {
    equal.emplace(id, disturb_weights(pts, WeightMode::equal, seed, id));
    random.emplace(id, disturb_weights(pts, WeightMode::random, seed, id));
  }
  const std::vector<std::pair<std::string, const std::map<std::string, std::vector<ScoringPoint>>*>> modes = {
      {"original", &in.points}, {"equal", &equal}, {"random", &random}};
  per_metric(in.metrics, errors, [&](const std::string& m) {
    if (m != score_names::kWpa && m != score_names::kPcp) return;
    for (const auto& [mode, table] : modes) {
      ScoreTable t;
      if (m == score_names::kWpa) {
        t = rescored_wpa(in, [&](const std::string& id) { return points_of(*table, id); }, false);
      } else {
        for (const auto& [key, ev] : in.evals) {
          if (!ev.penalty_assessments || !ev.scores.contains(m)) continue;
          t.emplace(key, compute_pcp(points_of(*table, key.first), *ev.penalty_assessments));
        }
      }
      const auto r = instance_level_correlation(m, t, in.labels, higher_is_better(m));
      csv += m + "," + mode + "," + num(r.mean_spearman) + "," + num(r.mean_kendall) + "," +
             std::to_string(r.sample_count) + "," + std::to_string(r.excluded_count) + "\n";
      out[m][mode] = summary_json(r);
    }
  });
  write_file(dir / "ablation_weights.csv", csv);
  write_json(dir / "ablation_weights.json", json{{"metrics", out}, {"errors", errors}, {"seed", seed}});
  return errors;
}

StudyErrors study_noise(const Inputs& in, const PipelineConfig& cfg, const fs::path& dir) {
  StudyErrors errors;
  std::string csv = "metric,sigma,mean_kendall\n";
  json out = json::object();
  per_metric(in.metrics, errors, [&](const std::string& m) {
    ScoreTable t = table_for(in.evals, m);
    // Orient so that a larger value is always better before normalizing.
    if (!higher_is_better(m)) {
      for (auto& [key, v] : t) v = -v;
    }
    const auto curve = noise_robustness(m, t, in.labels, cfg.sigma_grid, cfg.seed);
    for (std::size_t g = 0; g < curve.sigma_grid.size(); ++g) {
      csv += m + "," + num(curve.sigma_grid[g]) + "," + num(curve.mean_kendall_vs_original[g]) + "\n";
    }
    out[m] = json{{"sigma_grid", curve.sigma_grid},
                  {"mean_kendall_vs_original", curve.mean_kendall_vs_original},
                  {"samples_used", curve.samples_used},
                  {"samples_excluded", curve.samples_excluded}};
  });
  write_file(dir / "noise.csv", csv);
  write_json(dir / "noise.json", json{{"metrics", out}, {"errors", errors}, {"seed", cfg.seed}});
  return errors;
}

StudyErrors study_length_bins(const Inputs& in, int num_bins, const fs::path& dir) {
  StudyErrors errors;
  ScoreTable lengths;
  for (const auto& r : in.records) {
    for (const auto& resp : r.responses) {
      lengths.emplace(std::make_pair(r.instance.id, resp.model_id), static_cast<double>(resp.char_length()));
    }
  }
  std::string csv = "metric,bin,lower,upper,count,min,q1,median,q3,mean,max\n";
  json out = json::object();
  per_metric(in.metrics, errors, [&](const std::string& m) {
    const auto bins = length_bins(table_for(in.evals, m), in.labels, lengths, higher_is_better(m), num_bins);
    json arr = json::array();
    for (std::size_t b = 0; b < bins.size(); ++b) {
      const auto& bin = bins[b];
      csv += m + "," + std::to_string(b) + "," + num(bin.lower) + "," + num(bin.upper) + "," +
             std::to_string(bin.count);
      json jb{{"lower", bin.lower}, {"upper", bin.upper}, {"count", bin.count}};
      if (bin.stats) {
        const auto& s = *bin.stats;
        csv += "," + num(s.min) + "," + num(s.q1) + "," + num(s.median) + "," + num(s.q3) + "," + num(s.mean) +
               "," + num(s.max);
        jb["stats"] = json{{"min", s.min}, {"q1", s.q1}, {"median", s.median},
                           {"q3", s.q3},   {"mean", s.mean}, {"max", s.max}};
      } else {
        csv += ",,,,,,";
      }
      csv += "\n";
      arr.push_back(jb);
    }
    out[m] = arr;
  });
  write_file(dir / "length_bins.csv", csv);
  write_json(dir / "length_bins.json", json{{"metrics", out}, {"errors", errors}});
  return errors;
}

StudyErrors study_errors(const Inputs& in, const fs::path& dir) {
  std::map<std::string, std::string> dataset_of;
  for (const auto& r : in.records) dataset_of[r.instance.id] = r.instance.dataset;
  std::vector<ErrorRecord> records;
  for (const auto& [key, ev] : in.evals) {
    if (!ev.point_assessments) continue;
    for (const auto& a : *ev.point_assessments) {
      if (a.alignment >= 1.0 || !a.error_type) continue;
      records.push_back({ev.instance_id, dataset_of[ev.instance_id], ev.model_id, a.point_index, a.alignment,
                         *a.error_type});
    }
  }
  json out = json::object();
  for (const auto& [group_by, label] : {std::pair{GroupBy::model, "model"}, std::pair{GroupBy::dataset, "dataset"}}) {
    std::string csv = std::string(label) + ",error_type,proportion\n";
    json table = json::object();
    for (const auto& [group, row] : error_distribution(records, group_by)) {
      for (const auto& [type, p] : row) {
        csv += group + "," + std::string(to_string(type)) + "," + num(p) + "\n";
        table[group][std::string(to_string(type))] = p;
      }
    }
    write_file(dir / ("errors_by_" + std::string(label) + ".csv"), csv);
    out[std::string("by_") + label] = table;
  }
  std::string csv = "error_type,alignment,count\n";
  json cross = json::array();
  for (const auto& [cell, count] : error_by_alignment(records)) {
    csv += std::string(to_string(cell.first)) + "," + num(cell.second) + "," + std::to_string(count) + "\n";
    cross.push_back(json{{"error_type", to_string(cell.first)}, {"alignment", cell.second}, {"count", count}});
  }
  write_file(dir / "errors_by_alignment.csv", csv);
  out["by_alignment"] = cross;
  out["record_count"] = records.size();
  write_json(dir / "errors.json", out);
  return {};
}

}  // namespace

int cmd_analyze(const PipelineConfig& cfg) {
  cfg.validate();
  if (cfg.studies.empty()) throw ConfigError("no study requested");
  Inputs in;
  in.records = load_dataset(cfg.dataset);
  if (!fs::exists(evaluations_store(cfg))) {
    throw PreconditionError("evaluation store " + evaluations_store(cfg).string() + " not found; run evaluate first");
  }
  in.evals = load_evaluations(evaluations_store(cfg));
  in.metrics = metric_names(in.evals);
  const bool needs_labels = std::any_of(cfg.studies.begin(), cfg.studies.end(),
                                        [](const std::string& s) { return s != "errors"; });
  if (needs_labels) {
    if (!fs::exists(labels_store(cfg))) {
      throw PreconditionError("label store " + labels_store(cfg).string() + " not found; run star first");
    }
    in.labels = load_labels(labels_store(cfg));
  }
  const bool needs_points = std::any_of(cfg.studies.begin(), cfg.studies.end(), [](const std::string& s) {
    return s == "ablation_scale" || s == "ablation_weights";
  });
  if (needs_points) {
    if (!fs::exists(points_store(cfg))) {
      throw PreconditionError("points store " + points_store(cfg).string() + " not found; run extract-points first");
    }
    in.points = load_points(points_store(cfg));
  }

  RunManifest manifest = RunManifest::load_or_new(cfg);
  manifest.begin_stage("analyze", cfg);
  const fs::path dir = reports_dir(cfg);
  std::vector<StageFailure> failures;
  for (const auto& study : cfg.studies) {
    StudyErrors errs;
    if (study == "correlation") errs = study_correlation(in, dir);
    else if (study == "ablation_scale") errs = study_ablation_scale(in, dir);
    else if (study == "ablation_weights") errs = study_ablation_weights(in, cfg.seed, dir);
    else if (study == "noise") errs = study_noise(in, cfg, dir);
    else if (study == "length_bins") errs = study_length_bins(in, cfg.length_bins, dir);
    else if (study == "errors") errs = study_errors(in, dir);
    for (const auto& [metric, why] : errs) failures.push_back({"analyze:" + study, "", "", metric, why});
  }
  const bool partial = !failures.empty();
  manifest.end_stage("analyze", std::move(failures));
  manifest.save(cfg.out_dir);
  return partial ? kExitPartial : kExitOk;
}

int cmd_report(const PipelineConfig& cfg) {
  const fs::path dir = reports_dir(cfg);
  auto read = [&](const std::string& name) -> std::optional<json> {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) return std::nullopt;
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error("unreadable report " + (dir / name).string());
    return j;
  };
  auto cell = [](const json& v) { return v.is_null() ? std::string("n/a") : num(v.get<double>()); };

  std::ostringstream md;
  md << "# Evaluation report\n";
  bool any = false;
  if (auto j = read("correlation.json")) {
    any = true;
    md << "\n## Instance-level correlation with stratified rankings\n\n"
       << "| metric | mean Spearman | mean Kendall | samples | excluded |\n|---|---|---|---|---|\n";
    for (const auto& [m, e] : (*j)["metrics"].items()) {
      md << "| " << m << " | " << cell(e["mean_spearman"]) << " | " << cell(e["mean_kendall"]) << " | "
         << e["sample_count"].get<std::size_t>() << " | " << e["excluded_count"].get<std::size_t>() << " |\n";
    }
  }
  for (const auto& [file, title, col] :
       {std::tuple{"ablation_scale.json", "Scale reduction", "variant"},
        std::tuple{"ablation_weights.json", "Weight disturbance", "weights"}}) {
    auto j = read(file);
    if (!j) continue;
    any = true;
    md << "\n## " << title << "\n\n| metric | " << col << " | mean Spearman | mean Kendall |\n|---|---|---|---|\n";
    for (const auto& [m, variants] : (*j)["metrics"].items()) {
      for (const auto& [v, e] : variants.items()) {
        md << "| " << m << " | " << v << " | " << cell(e["mean_spearman"]) << " | " << cell(e["mean_kendall"])
           << " |\n";
      }
    }
  }
  if (auto j = read("noise.json")) {
    any = true;
    md << "\n## Noise robustness (mean Kendall vs noiseless)\n\n";
    for (const auto& [m, c] : (*j)["metrics"].items()) {
      md << "- " << m << ":";
      const auto& grid = c["sigma_grid"];
      const auto& tau = c["mean_kendall_vs_original"];
      for (std::size_t g = 0; g < grid.size(); ++g) {
        md << " " << num(grid[g].get<double>()) << "=" << num(tau[g].get<double>());
      }
      md << "\n";
    }
  }
  if (auto j = read("errors.json")) {
    any = true;
    md << "\n## Error types by model\n\n";
    for (const auto& [group, row] : (*j)["by_model"].items()) {
      md << "- " << group << ":";
      for (const auto& [type, p] : row.items()) md << " " << type << "=" << num(p.get<double>());
      md << "\n";
    }
  }
  if (!any) throw PreconditionError("no analysis reports in " + dir.string() + "; run analyze first");
  RunManifest manifest = RunManifest::load_or_new(cfg);
  manifest.begin_stage("report", cfg);
  write_file(dir / "report.md", md.str());
  manifest.end_stage("report", {});
  manifest.save(cfg.out_dir);
  return kExitOk;
}

}  // namespace wimpe
