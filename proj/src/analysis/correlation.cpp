#include <algorithm>
#include <cmath>
#include <numeric>

#include "wimpe/analysis.hpp"

namespace wimpe {

namespace {

void require_pairs(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw PreconditionError("correlation inputs differ in length");
  if (x.size() < 2) throw PreconditionError("correlation needs at least two observations");
}

int sign(double v) { return (v > 0) - (v < 0); }

}  // namespace

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    // Positions i..j (0-based) share the mean rank.
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;  // average ranks always sum to n(n+1)/2
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> kendall(std::span<const double> x, std::span<const double> y) {
  require_pairs(x, y);
  long long concordant_minus_discordant = 0;
  long long untied_x = 0;  // pairs not tied in x
  long long untied_y = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const int sx = sign(x[i] - x[j]);
      const int sy = sign(y[i] - y[j]);
      concordant_minus_discordant += sx * sy;
      untied_x += sx != 0;
      untied_y += sy != 0;
    }
  }
  if (untied_x == 0 || untied_y == 0) return std::nullopt;
  const double denom = std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y));
  return std::clamp(static_cast<double>(concordant_minus_discordant) / denom, -1.0, 1.0);
}

CorrelationReport instance_level_correlation(std::string metric_name, const ScoreTable& scores,
                                             const std::vector<StratifiedRanking>& labels,
                                             bool higher_is_better) {
  CorrelationReport report;
  report.metric_name = std::move(metric_name);
  double sum_rho = 0.0;
  double sum_tau = 0.0;
  std::size_t defined = 0;
  for (const auto& label : labels) {
    const std::size_t n = label.selected_model_ids.size();
    std::vector<double> metric(n);
    std::vector<double> quality(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto it = scores.find({label.instance_id, label.selected_model_ids[k]});
      if (it == scores.end()) {
        throw PairingError("no " + report.metric_name + " score for instance " + label.instance_id +
                           ", model " + label.selected_model_ids[k]);
      }
      metric[k] = higher_is_better ? it->second : -it->second;
      quality[k] = static_cast<double>(n - k);  // best first
    }
    CorrelationSample sample{label.instance_id, label.offset, std::nullopt, std::nullopt};
    if (n >= 2) {
      sample.spearman = spearman(metric, quality);
      sample.kendall = kendall(metric, quality);
    }
    if (sample.spearman && sample.kendall) {
      sum_rho += *sample.spearman;
      sum_tau += *sample.kendall;
      ++defined;
    } else {
      ++report.excluded_count;
    }
    report.per_instance.push_back(std::move(sample));
  }
  report.sample_count = labels.size();
  if (defined > 0) {
    report.mean_spearman = sum_rho / static_cast<double>(defined);
    report.mean_kendall = sum_tau / static_cast<double>(defined);
  }
  return report;
}

}  // namespace wimpe
