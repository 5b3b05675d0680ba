#include <algorithm>
#include <cmath>
#include <numeric>

#include "wimpe/analysis.hpp"
#include "wimpe/rng.hpp"
#include "wimpe/text.hpp"

namespace wimpe {

namespace {

std::string squash_name(std::string_view name) {
  std::string out;
  for (char c : text::to_lower_ascii(name)) {
    if (c != '-' && c != '_' && c != ' ') out.push_back(c);
  }
  return out;
}

bool is_three_level_metric(std::string_view name) {
  const std::string n = squash_name(name);
  return n == "coarse3" || n == "alignment" || n == "match" || n == "matchscores";
}

}  // namespace

std::vector<double> normalize_scores(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("nothing to normalize");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double range = *hi - *lo;
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(range == 0.0 ? 0.5 : (v - min) / range);
  return out;
}

bool is_five_level_metric(std::string_view metric_name) {
  const std::string n = squash_name(metric_name);
  return n == "coarse5" || n == "checklist";
}

double scale_reduce(std::string_view metric_name, double value) {
  if (is_five_level_metric(metric_name)) {
    if (value == 1.0 || value == 2.0) return 1.0;
    if (value == 3.0 || value == 4.0 || value == 5.0) return 5.0;
    throw ValidationError("value " + text::format_number(value) + " is not on the 1-5 scale of " +
                          std::string(metric_name));
  }
  if (is_three_level_metric(metric_name)) {
    if (value == 0.0) return 0.0;
    if (value == 0.5 || value == 1.0) return 1.0;
    throw ValidationError("value " + text::format_number(value) + " is not on the 0/0.5/1 scale of " +
                          std::string(metric_name));
  }
  throw ValidationError("no scale reduction defined for metric " + std::string(metric_name));
}

std::vector<ScoringPoint> disturb_weights(const std::vector<ScoringPoint>& points, WeightMode mode,
                                          std::uint64_t seed, std::string_view stream_key) {
  if (points.empty()) throw PreconditionError("no scoring points to disturb");
  std::vector<ScoringPoint> out = points;
  if (mode == WeightMode::equal) {
    for (auto& p : out) p.weight = 1;
    return out;
  }
  Rng rng = Rng::substream(seed, std::string("weights:") + std::string(stream_key));
  for (auto& p : out) p.weight = 1 + static_cast<int>(rng.below(3));
  return out;
}

NoiseRobustnessCurve noise_robustness(std::string metric_name, const ScoreTable& scores,
                                      const std::vector<StratifiedRanking>& labels,
                                      const std::vector<double>& sigma_grid, std::uint64_t seed) {
  if (std::find(sigma_grid.begin(), sigma_grid.end(), 0.0) == sigma_grid.end()) {
    throw PreconditionError("noise grid must include sigma = 0");
  }
  for (double s : sigma_grid) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw PreconditionError("noise sigma must be >= 0");
  }
  NoiseRobustnessCurve curve;
  curve.metric_name = std::move(metric_name);
  curve.sigma_grid = sigma_grid;
  curve.seed = seed;

  std::vector<double> raw;
  raw.reserve(scores.size());
  for (const auto& [key, v] : scores) raw.push_back(v);
  if (raw.empty()) throw PreconditionError("no scores for " + curve.metric_name);
  const auto normalized_values = normalize_scores(raw);
  ScoreTable normalized;
  std::size_t k = 0;
  for (const auto& [key, v] : scores) normalized.emplace(key, normalized_values[k++]);

  struct Sample {
    std::string key;
    std::vector<double> base;
  };
  std::vector<Sample> samples;
  for (const auto& label : labels) {
    Sample s{label.instance_id + '\x1f' + std::to_string(label.offset), {}};
    for (const auto& model : label.selected_model_ids) {
      auto it = normalized.find({label.instance_id, model});
      if (it == normalized.end()) {
        throw PairingError("no " + curve.metric_name + " score for instance " + label.instance_id +
                           ", model " + model);
      }
      s.base.push_back(it->second);
    }
    if (s.base.size() < 2 ||
        std::all_of(s.base.begin(), s.base.end(), [&](double v) { return v == s.base.front(); })) {
      ++curve.samples_excluded;
      continue;
    }
    samples.push_back(std::move(s));
  }
  curve.samples_used = samples.size();
  if (samples.empty()) {
    throw PreconditionError("every ranking of " + curve.metric_name + " has tied scores; noise curve undefined");
  }

  for (std::size_t g = 0; g < sigma_grid.size(); ++g) {
    const double sigma = sigma_grid[g];
    double sum = 0.0;
    std::size_t defined = 0;
    for (const auto& s : samples) {
      std::vector<double> noisy = s.base;
      if (sigma > 0.0) {
        Rng rng = Rng::substream(seed, "noise:" + s.key + '\x1f' + std::to_string(g));
        for (double& v : noisy) v += sigma * rng.normal();
      }
      if (auto tau = kendall(noisy, s.base)) {
        sum += *tau;
        ++defined;
      }
    }
    curve.mean_kendall_vs_original.push_back(defined ? sum / static_cast<double>(defined) : 0.0);
  }
  return curve;
}

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw PreconditionError("box statistics of an empty sample");
  std::sort(values.begin(), values.end());
  auto quantile = [&](double p) {
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  BoxStats s;
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return s;
}

std::vector<LengthBin> bin_by_length(const std::vector<LengthSample>& samples, int num_bins) {
  if (num_bins < 1) throw PreconditionError("need at least one length bin");
  std::vector<LengthBin> bins(static_cast<std::size_t>(num_bins));
  if (samples.empty()) return bins;
  double lo = samples.front().length;
  double hi = lo;
  for (const auto& s : samples) {
    lo = std::min(lo, s.length);
    hi = std::max(hi, s.length);
  }
  const double width = (hi - lo) / num_bins;
  std::vector<std::vector<double>> members(bins.size());
  for (const auto& s : samples) {
    int b = width > 0.0 ? static_cast<int>((s.length - lo) / width) : 0;
    b = std::clamp(b, 0, num_bins - 1);
    members[b].push_back(s.value);
  }
  for (int b = 0; b < num_bins; ++b) {
    auto& bin = bins[b];
    bin.lower = lo + b * width;
    bin.upper = b == num_bins - 1 ? hi : lo + (b + 1) * width;
    bin.count = members[b].size();
    if (!members[b].empty()) bin.stats = box_stats(members[b]);
  }
  return bins;
}

std::vector<LengthBin> length_bins(const ScoreTable& scores, const std::vector<StratifiedRanking>& labels,
                                   const ScoreTable& lengths, bool higher_is_better, int num_bins) {
  const CorrelationReport report = instance_level_correlation("length", scores, labels, higher_is_better);
  std::vector<LengthSample> samples;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& sample = report.per_instance[i];
    if (!sample.spearman) continue;
    double total = 0.0;
    for (const auto& model : labels[i].selected_model_ids) {
      auto it = lengths.find({labels[i].instance_id, model});
      if (it == lengths.end()) {
        throw PairingError("no response length for instance " + labels[i].instance_id + ", model " + model);
      }
      total += it->second;
    }
    samples.push_back({total / static_cast<double>(labels[i].selected_model_ids.size()), *sample.spearman});
  }
  return bin_by_length(samples, num_bins);
}

}  // namespace wimpe
