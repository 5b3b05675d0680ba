#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wimpe/core.hpp"
#include "wimpe/judge.hpp"
#include "wimpe/star.hpp"

namespace wimpe {

// ---- correlation kernels ----

// Average (fractional) ranks, 1-based; ties share the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> v);

// Pearson correlation of the average-rank vectors. nullopt when either input
// has zero rank variance.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

// Kendall tau-b. nullopt when either input is constant.
std::optional<double> kendall(std::span<const double> x, std::span<const double> y);

// (instance_id, model_id) -> score.
using ScoreTable = std::map<std::pair<std::string, std::string>, double>;

struct CorrelationSample {
  std::string instance_id;
  int offset = 0;
  std::optional<double> spearman;
  std::optional<double> kendall;
};

struct CorrelationReport {
  std::string metric_name;
  std::vector<CorrelationSample> per_instance;
  std::optional<double> mean_spearman;  // over defined samples only
  std::optional<double> mean_kendall;
  std::size_t sample_count = 0;    // every (instance, offset) pair
  std::size_t excluded_count = 0;  // samples with undefined correlation
};

// Correlates each StratifiedRanking's scores with its pseudo-rank order
// (best = highest), then averages across samples. With higher_is_better
// false the scores are negated first.
CorrelationReport instance_level_correlation(std::string metric_name, const ScoreTable& scores,
                                             const std::vector<StratifiedRanking>& labels,
                                             bool higher_is_better = true);

// ---- score transforms ----

// (v - min) / (max - min); an all-equal input maps to 0.5 everywhere.
std::vector<double> normalize_scores(std::span<const double> values);

// Binary scale collapse: five-level {1,2}->1, {3,4,5}->5; three-level and
// point alignment {0.5,1}->1, 0->0. Throws ValidationError for off-scale
// values or unknown metrics.
double scale_reduce(std::string_view metric_name, double value);
bool is_five_level_metric(std::string_view metric_name);

enum class WeightMode { equal, random };

// equal: every weight 1. random: i.i.d. uniform over {1,2,3}.
std::vector<ScoringPoint> disturb_weights(const std::vector<ScoringPoint>& points, WeightMode mode,
                                          std::uint64_t seed, std::string_view stream_key = {});

// ---- noise robustness ----

inline const std::vector<double> kDefaultSigmaGrid = {0.0, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2};

struct NoiseRobustnessCurve {
  std::string metric_name;
  std::vector<double> sigma_grid;
  std::vector<double> mean_kendall_vs_original;
  std::uint64_t seed = 0;
  std::size_t samples_used = 0;
  std::size_t samples_excluded = 0;  // noiseless scores all tied
};

// Scores are normalized over the whole table first. For each sigma, seeded
// Gaussian noise is added to the selected scores of every ranking and
// Kendall's tau against the noiseless scores is averaged over samples.
NoiseRobustnessCurve noise_robustness(std::string metric_name, const ScoreTable& scores,
                                      const std::vector<StratifiedRanking>& labels,
                                      const std::vector<double>& sigma_grid, std::uint64_t seed);

// ---- length bins ----

struct BoxStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, mean = 0, max = 0;
};

// Linear-interpolation quantiles. `values` must be non-empty.
BoxStats box_stats(std::vector<double> values);

struct LengthBin {
  double lower = 0;
  double upper = 0;
  std::size_t count = 0;
  std::optional<BoxStats> stats;  // absent for empty bins
};

struct LengthSample {
  double length = 0;
  double value = 0;
};

// Equal-width bins over [min length, max length]; the max falls in the last bin.
std::vector<LengthBin> bin_by_length(const std::vector<LengthSample>& samples, int num_bins = 4);

// Per-sample Spearman of `scores` against the labels, binned by the mean
// character length of the selected responses.
std::vector<LengthBin> length_bins(const ScoreTable& scores, const std::vector<StratifiedRanking>& labels,
                                   const ScoreTable& lengths, bool higher_is_better = true,
                                   int num_bins = 4);

// ---- error attribution ----

struct ErrorRecord {
  std::string instance_id;
  std::string dataset;
  std::string model_id;
  int point_index = 0;
  double alignment = 0.0;
  ErrorType error_type = ErrorType::other;
};

struct ErrorRules {
  // Checked in order; the first rule with a matching cue wins.
  std::vector<std::pair<ErrorType, std::vector<std::string>>> keyword_rules;
  // Two different numbers joined by a contrast word count as wrong information.
  bool numeric_conflict_rule = true;

  static const ErrorRules& defaults();
};

ErrorType classify_error(std::string_view explanation, double alignment,
                         const ErrorRules& rules = ErrorRules::defaults());

// Judge-backed classifier; falls back to the rules when the judge output is
// unusable after retries.
ErrorType classify_error_with_judge(Judge& judge, std::string_view explanation, double alignment,
                                    int parse_retries = 2);

enum class GroupBy { model, dataset };

using ProportionTable = std::map<std::string, std::map<ErrorType, double>>;

ProportionTable error_distribution(const std::vector<ErrorRecord>& records, GroupBy group_by);

std::map<std::pair<ErrorType, double>, std::size_t> error_by_alignment(
    const std::vector<ErrorRecord>& records);

}  // namespace wimpe
