#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "rcb/user_model.hpp"

namespace rcb {

/// One logged round. oracle_arm is the best arm under the run's regret
/// oracle (-1 when the run has none).
struct StepRecord {
  long t = 0;
  RunStage stage = RunStage::mpasc;
  int recommended = 0;
  int chosen = 0;
  double reward = 0.0;
  double instant_regret = 0.0;
  double dbic_gain = 0.0;
  bool followed = true;
  int oracle_arm = -1;
};

/// Append-only per-run log; t starts at 1 and increases by one per row, and
/// the stage only ever moves forward (mpasc -> rasc -> exploit).
struct RunLog {
  std::vector<StepRecord> steps;
};

/// max(oracle_means) - oracle_means[chosen]; always nonnegative.
double per_step_regret(std::span<const double> oracle_means, int chosen);

/// Fraction of rounds whose chosen arm differs from the oracle arm.
/// Requires a non-empty log with oracle arms recorded.
double fraction_incorrect(const RunLog& log);

/// Sum over classes of proportion_c * (accuracy_c - (1 - accuracy_c)).
/// Proportions must sum to one; the result lies in [-1, 1].
double weighted_risk_score(std::span<const double> class_proportions,
                           std::span<const double> class_accuracy);

/// Counts of (true class, assigned class) pairs.
struct ConfusionTable {
  Eigen::MatrixXd counts;

  int num_classes() const { return static_cast<int>(counts.rows()); }
  /// Rows normalized to proportions (zero rows stay zero).
  Eigen::MatrixXd row_proportions() const;
  /// Share of rounds per true class.
  std::vector<double> class_proportions() const;
  /// Per-class accuracy: diagonal over row sum (zero rows give zero).
  std::vector<double> class_accuracy() const;
};

ConfusionTable confusion_from_log(const RunLog& log, int num_classes);

/// Rolling view of the per-step incentive gains.
struct GainSeries {
  std::vector<long> t;
  std::vector<double> raw;
  std::vector<double> rolling;  // mean over the trailing window, partial at the start
  double reference = 0.0;       // the -epsilon acceptance level
};

GainSeries gain_series(const RunLog& log, int window, double epsilon);

struct SummaryOptions {
  double epsilon = 0.0;
  int num_arms = 1;
  /// Strict mode judges exploitation rounds against -epsilon/K instead of
  /// -epsilon.
  bool strict_dbic = false;
  /// Classes of the confusion table; 0 skips it.
  int confusion_classes = 0;
};

struct MetricsSummary {
  double cumulative_regret = 0.0;
  /// Share of post-MPASC rounds whose gain fell below the acceptance level.
  double violation_fraction = 0.0;
  long violation_rounds = 0;
  long counted_rounds = 0;
  double fraction_incorrect = 0.0;  // NaN when the log has no oracle arms
  double risk_score = 0.0;          // NaN without a confusion table
  ConfusionTable confusion;
};

MetricsSummary summarize(const RunLog& log, const SummaryOptions& options);

}  // namespace rcb
