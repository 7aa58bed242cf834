#include "rcb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rcb {

double per_step_regret(std::span<const double> oracle_means, int chosen) {
  if (oracle_means.empty()) {
    throw std::invalid_argument("per_step_regret: oracle_means must be non-empty");
  }
  if (chosen < 0 || chosen >= static_cast<int>(oracle_means.size())) {
    throw std::invalid_argument("per_step_regret: chosen arm out of range");
  }
  double best = *std::max_element(oracle_means.begin(), oracle_means.end());
  return best - oracle_means[chosen];
}

double fraction_incorrect(const RunLog& log) {
  if (log.steps.empty()) {
    throw std::invalid_argument("fraction_incorrect: log is empty");
  }
  long wrong = 0;
  for (const auto& s : log.steps) {
    if (s.oracle_arm < 0) {
      throw std::invalid_argument(
          "fraction_incorrect: log has rounds without an oracle arm");
    }
    if (s.chosen != s.oracle_arm) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(log.steps.size());
}

double weighted_risk_score(std::span<const double> class_proportions,
                           std::span<const double> class_accuracy) {
  if (class_proportions.size() != class_accuracy.size() ||
      class_proportions.empty()) {
    throw std::invalid_argument(
        "weighted_risk_score: proportions and accuracies must be non-empty and aligned");
  }
  double total = 0.0;
  for (double p : class_proportions) {
    if (p < 0.0) {
      throw std::invalid_argument("weighted_risk_score: proportions must be nonnegative");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("weighted_risk_score: proportions must sum to 1");
  }
  double score = 0.0;
  for (std::size_t c = 0; c < class_proportions.size(); ++c) {
    score += class_proportions[c] * (2.0 * class_accuracy[c] - 1.0);
  }
  return score;
}

Eigen::MatrixXd ConfusionTable::row_proportions() const {
  Eigen::MatrixXd out = counts;
  for (int r = 0; r < out.rows(); ++r) {
    double total = out.row(r).sum();
    if (total > 0.0) out.row(r) /= total;
  }
  return out;
}

std::vector<double> ConfusionTable::class_proportions() const {
  double total = counts.sum();
  std::vector<double> out(num_classes(), 0.0);
  if (total == 0.0) return out;
  for (int r = 0; r < num_classes(); ++r) {
    out[r] = counts.row(r).sum() / total;
  }
  return out;
}

std::vector<double> ConfusionTable::class_accuracy() const {
  std::vector<double> out(num_classes(), 0.0);
  for (int r = 0; r < num_classes(); ++r) {
    double total = counts.row(r).sum();
    if (total > 0.0) out[r] = counts(r, r) / total;
  }
  return out;
}

ConfusionTable confusion_from_log(const RunLog& log, int num_classes) {
  if (num_classes < 1) {
    throw std::invalid_argument("confusion_from_log: need at least one class");
  }
  ConfusionTable table;
  table.counts = Eigen::MatrixXd::Zero(num_classes, num_classes);
  for (const auto& s : log.steps) {
    if (s.oracle_arm < 0 || s.oracle_arm >= num_classes || s.chosen < 0 ||
        s.chosen >= num_classes) {
      throw std::invalid_argument("confusion_from_log: class index out of range");
    }
    table.counts(s.oracle_arm, s.chosen) += 1.0;
  }
  return table;
}

GainSeries gain_series(const RunLog& log, int window, double epsilon) {
  if (window < 1) {
    throw std::invalid_argument("gain_series: window must be at least 1");
  }
  GainSeries out;
  out.reference = -epsilon;
  const std::size_t n = log.steps.size();
  out.t.reserve(n);
  out.raw.reserve(n);
  out.rolling.reserve(n);
  double window_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.t.push_back(log.steps[i].t);
    out.raw.push_back(log.steps[i].dbic_gain);
    window_sum += out.raw[i];
    if (i >= static_cast<std::size_t>(window)) {
      window_sum -= out.raw[i - window];
    }
    const auto filled = std::min<std::size_t>(i + 1, window);
    out.rolling.push_back(window_sum / static_cast<double>(filled));
  }
  return out;
}

MetricsSummary summarize(const RunLog& log, const SummaryOptions& options) {
  MetricsSummary summary;
  bool have_oracle = !log.steps.empty();
  for (const auto& s : log.steps) {
    summary.cumulative_regret += s.instant_regret;
    if (s.oracle_arm < 0) have_oracle = false;
    if (s.stage != RunStage::mpasc) {
      ++summary.counted_rounds;
      double level = options.epsilon;
      if (options.strict_dbic && s.stage == RunStage::exploit) {
        level = options.epsilon / options.num_arms;
      }
      if (s.dbic_gain < -level) ++summary.violation_rounds;
    }
  }
  summary.violation_fraction =
      summary.counted_rounds == 0
          ? 0.0
          : static_cast<double>(summary.violation_rounds) /
                static_cast<double>(summary.counted_rounds);
  summary.fraction_incorrect =
      have_oracle ? fraction_incorrect(log)
                  : std::numeric_limits<double>::quiet_NaN();
  if (options.confusion_classes > 0 && have_oracle) {
    summary.confusion = confusion_from_log(log, options.confusion_classes);
    summary.risk_score = weighted_risk_score(summary.confusion.class_proportions(),
                                             summary.confusion.class_accuracy());
  } else {
    summary.risk_score = std::numeric_limits<double>::quiet_NaN();
  }
  return summary;
}

}  // namespace rcb
