#pragma once

#include <vector>

#include "rcb/cold_start.hpp"
#include "rcb/linear_model.hpp"

namespace rcb {

/// Which stage of the protocol a round belongs to.
enum class RunStage { mpasc, rasc, exploit };

/// Outcome of one user's decision.
struct UserDecision {
  bool followed = true;
  int chosen = 0;
  double gain = 0.0;  // expected edge of the recommendation over the best alternative
};

/**
 * Public-information belief of the arriving users: the shared prior plus
 * outcomes of rounds where the recommendation was taken. During the cold
 * start the expectations condition only on the completed arms' quota samples;
 * from the exploitation stage on they condition on every followed round.
 * The prior covariance widens with calendar time per the inflation schedule.
 */
class UserBelief {
 public:
  UserBelief(std::vector<ArmBelief> priors, InflationSchedule inflation = {},
             long inflation_start = 0);

  int num_arms() const { return static_cast<int>(priors_.size()); }
  long clock() const { return clock_; }
  RunStage stage() const { return stage_; }

  void set_stage(RunStage stage);
  /// Re-anchors the widening clock; scale(t) thereafter uses t - start.
  void set_inflation_start(long start) { inflation_start_ = start; }
  /// Marks an arm's cold-start quota as filled (it joins the completed set).
  void mark_completed(int arm);
  /// Books the outcome of a followed round. quota_sample marks rounds the
  /// platform also retains toward an arm's cold-start quota.
  void record_followed(const Eigen::VectorXd& x, int arm, double y,
                       bool quota_sample);
  /// Advances calendar time by one round (drives the inflation schedule).
  void advance_clock() { ++clock_; }

  /// Expected reward per arm at covariate x under the user's current
  /// information set.
  std::vector<double> posterior_means(const Eigen::VectorXd& x) const;

  /// Expected edge of the recommended arm over the best alternative:
  /// means[recommended] - max_{j != recommended} means[j]. With a single arm
  /// there is no alternative and the gain is +infinity.
  double incentive_gain(const Eigen::VectorXd& x, int recommended) const;

  /// Arm the user would pick on her own: argmax of posterior_means, ties to
  /// the lowest index.
  int myopic_arm(const Eigen::VectorXd& x) const;

 private:
  const Eigen::VectorXd& coefficients(int arm) const;

  std::vector<ArmBelief> priors_;
  InflationSchedule inflation_;
  long inflation_start_;
  long clock_ = 0;
  RunStage stage_ = RunStage::mpasc;
  std::vector<char> completed_;
  std::vector<GaussianArmStats> quota_stats_;
  std::vector<GaussianArmStats> followed_stats_;
  std::vector<long> data_version_;
  // lazy per-arm coefficient cache, invalidated by new data, stage flips or
  // a change of the inflation scale
  mutable std::vector<Eigen::VectorXd> cached_coeffs_;
  mutable std::vector<long> cached_version_;
  mutable std::vector<double> cached_scale_;
  mutable std::vector<int> cached_stage_;
};

/// One user interaction: evaluates the gain of the recommendation, follows it
/// iff the gain is at least -epsilon (boundary counts as following), draws
/// the reward of the arm actually chosen and, on followed rounds only, books
/// the outcome into the belief. Advances the user's clock.
UserDecision user_step(UserBelief& user, const Eigen::VectorXd& x,
                       int recommended, double epsilon,
                       const RewardSource& rewards);

}  // namespace rcb
