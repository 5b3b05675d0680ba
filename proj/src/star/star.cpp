#include <set>

#include "wimpe/metrics.hpp"
#include "wimpe/retry.hpp"
#include "wimpe/rng.hpp"
#include "wimpe/star.hpp"

namespace wimpe {

void StarConfig::validate() const {
  if (num_groups < 1) throw ConfigError("number of groups must be >= 1");
  if (expected_candidates < num_groups) throw ConfigError("need at least one candidate per group");
  if (offsets.empty()) throw ConfigError("no stratification offsets configured");
  const int stride = (expected_candidates + num_groups - 1) / num_groups;
  std::set<int> seen;
  for (int n : offsets) {
    if (n < 1 || n > stride) {
      throw ConfigError("offset " + std::to_string(n) + " outside 1.." + std::to_string(stride));
    }
    if (!seen.insert(n).second) throw ConfigError("duplicate offset " + std::to_string(n));
  }
}

std::vector<int> presentation_order(std::uint64_t seed, std::string_view instance_id, std::size_t n) {
  std::vector<int> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  Rng rng = Rng::substream(seed, std::string("rank:") + std::string(instance_id));
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::string render_rank_prompt(const Instance& inst, const std::vector<GeneratedResponse>& responses,
                               const std::vector<int>& order, bool include_context,
                               const PromptTemplate& tpl) {
  std::string block;
  for (std::size_t j = 0; j < order.size(); ++j) {
    block += "[R" + std::to_string(j + 1) + "]\n" + responses.at(order[j]).text + "\n\n";
  }
  while (!block.empty() && block.back() == '\n') block.pop_back();
  std::string question = inst.question;
  if (include_context && !inst.context.empty()) {
    question = "Context:\n" + inst.context + "\n\nQuestion:\n" + inst.question;
  }
  return tpl.render({{"question", question},
                     {"reference_answer", inst.reference_answer},
                     {"responses", block}},
                    {"responses"});
}

std::vector<int> parse_ranking(std::string_view raw, std::size_t n) {
  const auto j = extract_json(raw, /*want_array=*/true);
  if (!j.is_array()) throw GrammarError("ranking is not a JSON array");
  if (j.size() != n) {
    throw GrammarError("ranking lists " + std::to_string(j.size()) + " labels for " + std::to_string(n) +
                       " responses");
  }
  std::vector<int> out;
  std::vector<bool> seen(n, false);
  for (const auto& item : j) {
    if (!item.is_string()) throw GrammarError("ranking entries must be label strings");
    const std::string label = item.get<std::string>();
    std::size_t pos = 0;
    if (label.size() >= 2 && (label[0] == 'R' || label[0] == 'r') &&
        label.find_first_not_of("0123456789", 1) == std::string::npos && label.size() <= 7) {
      pos = std::stoul(label.substr(1));
    }
    if (pos < 1 || pos > n) throw GrammarError("unknown response label \"" + label + "\"");
    if (seen[pos - 1]) throw GrammarError("duplicate response label \"" + label + "\"");
    seen[pos - 1] = true;
    out.push_back(static_cast<int>(pos - 1));
  }
  return out;
}

std::vector<int> rank_responses(Judge& judge, const Instance& inst,
                                const std::vector<GeneratedResponse>& responses, std::uint64_t seed,
                                int parse_retries, bool include_context, const PromptTemplate& tpl) {
  if (responses.size() < 2) throw PreconditionError("ranking needs at least two responses");
  const auto order = presentation_order(seed, inst.id, responses.size());
  JudgeRequest req{render_rank_prompt(inst, responses, order, include_context, tpl), std::string(tags::kRank)};
  const auto label_positions =
      call_with_parse_retries(judge, req, parse_retries, "response ranking",
                              [&](const std::string& raw) { return parse_ranking(raw, responses.size()); });
  std::vector<int> ranking;
  ranking.reserve(label_positions.size());
  for (int p : label_positions) ranking.push_back(order[p]);
  return ranking;
}

std::vector<int> stratified_select(int sorted_count, const StarConfig& cfg, int offset) {
  if (cfg.num_groups < 1) throw ConfigError("number of groups must be >= 1");
  if (sorted_count < cfg.num_groups) {
    throw ConfigError("cannot split " + std::to_string(sorted_count) + " responses into " +
                      std::to_string(cfg.num_groups) + " groups");
  }
  const int stride = (sorted_count + cfg.num_groups - 1) / cfg.num_groups;
  if (offset < 1 || offset > stride) {
    throw ConfigError("offset " + std::to_string(offset) + " outside 1.." + std::to_string(stride));
  }
  std::vector<int> out;
  out.reserve(cfg.num_groups);
  for (int l = 0; l < cfg.num_groups; ++l) {
    const int idx = l * stride + offset - 1;
    if (idx >= sorted_count) {
      throw ConfigError("offset " + std::to_string(offset) + " selects index " + std::to_string(idx) +
                        " but only " + std::to_string(sorted_count) + " responses are ranked");
    }
    out.push_back(idx);
  }
  return out;
}

std::vector<StratifiedRanking> build_pseudo_labels(Judge& judge, const Instance& inst,
                                                   const std::vector<GeneratedResponse>& responses,
                                                   const StarConfig& cfg, std::uint64_t seed,
                                                   int parse_retries, const PromptTemplate& tpl) {
  cfg.validate();
  if (static_cast<int>(responses.size()) != cfg.expected_candidates) {
    throw PreconditionError("instance " + inst.id + " has " + std::to_string(responses.size()) +
                            " responses, expected " + std::to_string(cfg.expected_candidates));
  }
  // Validate every offset before spending a judge call.
  std::vector<std::vector<int>> selections;
  for (int n : cfg.offsets) selections.push_back(stratified_select(cfg.expected_candidates, cfg, n));

  const auto ranking = rank_responses(judge, inst, responses, seed, parse_retries, cfg.include_context, tpl);
  std::vector<StratifiedRanking> out;
  for (std::size_t k = 0; k < cfg.offsets.size(); ++k) {
    StratifiedRanking sr{inst.id, cfg.offsets[k], selections[k], {}};
    for (int pos : selections[k]) sr.selected_model_ids.push_back(responses[ranking[pos]].model_id);
    out.push_back(std::move(sr));
  }
  return out;
}

}  // namespace wimpe
