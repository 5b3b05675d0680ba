#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "wimpe/core.hpp"
#include "wimpe/judge.hpp"
#include "wimpe/points.hpp"

namespace wimpe {

struct StarConfig {
  int num_groups = 3;                 // L
  std::vector<int> offsets = {1, 2};  // n, 1-based position inside each group
  int expected_candidates = 10;       // N
  bool include_context = false;       // show the instance context to the ranking judge

  void validate() const;
};

struct StratifiedRanking {
  std::string instance_id;
  int offset = 1;
  std::vector<int> selected_indices;           // 0-based positions in the judge order
  std::vector<std::string> selected_model_ids;  // best first

  bool operator==(const StratifiedRanking&) const = default;
};

// Order in which responses are shown to the ranking judge: element j is the
// original index of the response labelled R(j+1). Depends only on
// (seed, instance_id, n).
std::vector<int> presentation_order(std::uint64_t seed, std::string_view instance_id, std::size_t n);

std::string render_rank_prompt(const Instance& inst, const std::vector<GeneratedResponse>& responses,
                               const std::vector<int>& order, bool include_context,
                               const PromptTemplate& tpl = default_template("rank"));

// Parses a JSON array of labels R1..Rn (best first) into label positions
// (0-based). Throws GrammarError unless it is a permutation.
std::vector<int> parse_ranking(std::string_view raw, std::size_t n);

// Returns original response indices, best first.
std::vector<int> rank_responses(Judge& judge, const Instance& inst,
                                const std::vector<GeneratedResponse>& responses, std::uint64_t seed,
                                int parse_retries = 2, bool include_context = false,
                                const PromptTemplate& tpl = default_template("rank"));

// [k_l + n - 1 for l = 1..L] with stride ceil(N/L), k_l = (l-1)*stride.
std::vector<int> stratified_select(int sorted_count, const StarConfig& cfg, int offset);

// One ranking call, then one StratifiedRanking per configured offset.
std::vector<StratifiedRanking> build_pseudo_labels(Judge& judge, const Instance& inst,
                                                   const std::vector<GeneratedResponse>& responses,
                                                   const StarConfig& cfg, std::uint64_t seed,
                                                   int parse_retries = 2,
                                                   const PromptTemplate& tpl = default_template("rank"));

}  // namespace wimpe
