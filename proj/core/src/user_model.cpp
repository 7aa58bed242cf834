#include "rcb/user_model.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace rcb {

UserBelief::UserBelief(std::vector<ArmBelief> priors,
                       InflationSchedule inflation, long inflation_start)
    : inflation_(inflation), inflation_start_(inflation_start) {
  if (priors.empty()) {
    throw std::invalid_argument("UserBelief: priors must be non-empty");
  }
  const int d = priors.front().dim();
  priors_.reserve(priors.size());
  for (auto& p : priors) {
    if (p.dim() != d) {
      throw std::invalid_argument("UserBelief: priors must share one dimension");
    }
    priors_.push_back(
        make_arm_belief(std::move(p.mean), std::move(p.covariance), p.noise_sigma));
  }
  const int k = num_arms();
  completed_.assign(k, 0);
  quota_stats_.assign(k, GaussianArmStats(d));
  followed_stats_.assign(k, GaussianArmStats(d));
  data_version_.assign(k, 0);
  cached_coeffs_.assign(k, Eigen::VectorXd());
  cached_version_.assign(k, -1);
  cached_scale_.assign(k, -1.0);
  cached_stage_.assign(k, -1);
}

void UserBelief::set_stage(RunStage stage) { stage_ = stage; }

void UserBelief::mark_completed(int arm) {
  if (arm < 0 || arm >= num_arms()) {
    throw std::invalid_argument("mark_completed: arm index out of range");
  }
  completed_[arm] = 1;
  ++data_version_[arm];
}

void UserBelief::record_followed(const Eigen::VectorXd& x, int arm, double y,
                                 bool quota_sample) {
  if (arm < 0 || arm >= num_arms()) {
    throw std::invalid_argument("record_followed: arm index out of range");
  }
  if (quota_sample) quota_stats_[arm].add(x, y);
  followed_stats_[arm].add(x, y);
  ++data_version_[arm];
}

const Eigen::VectorXd& UserBelief::coefficients(int arm) const {
  const bool cold = stage_ != RunStage::exploit;
  const double t_eff =
      static_cast<double>(std::max<long>(0, clock_ - inflation_start_));
  const double scale = inflation_.scale(t_eff);
  const int stage_key = cold ? 0 : 1;
  if (cached_version_[arm] == data_version_[arm] &&
      cached_scale_[arm] == scale && cached_stage_[arm] == stage_key) {
    return cached_coeffs_[arm];
  }
  const GaussianArmStats* stats = nullptr;
  if (cold) {
    if (completed_[arm]) stats = &quota_stats_[arm];
  } else {
    stats = &followed_stats_[arm];
  }
  if (stats == nullptr || stats->count() == 0) {
    cached_coeffs_[arm] = priors_[arm].mean;  // widening leaves the mean alone
  } else {
    ArmBelief prior = priors_[arm];
    prior.covariance *= scale;
    cached_coeffs_[arm] = stats->posterior_mean(prior);
  }
  cached_version_[arm] = data_version_[arm];
  cached_scale_[arm] = scale;
  cached_stage_[arm] = stage_key;
  return cached_coeffs_[arm];
}

std::vector<double> UserBelief::posterior_means(const Eigen::VectorXd& x) const {
  std::vector<double> means(num_arms());
  for (int i = 0; i < num_arms(); ++i) {
    means[i] = coefficients(i).dot(x);
  }
  return means;
}

double UserBelief::incentive_gain(const Eigen::VectorXd& x,
                                  int recommended) const {
  if (recommended < 0 || recommended >= num_arms()) {
    throw std::invalid_argument("incentive_gain: recommended arm out of range");
  }
  if (num_arms() == 1) {
    return std::numeric_limits<double>::infinity();
  }
  const std::vector<double> means = posterior_means(x);
  double best_other = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < num_arms(); ++j) {
    if (j != recommended) best_other = std::max(best_other, means[j]);
  }
  return means[recommended] - best_other;
}

int UserBelief::myopic_arm(const Eigen::VectorXd& x) const {
  const std::vector<double> means = posterior_means(x);
  int best = 0;
  for (int i = 1; i < num_arms(); ++i) {
    if (means[i] > means[best]) best = i;
  }
  return best;
}

UserDecision user_step(UserBelief& user, const Eigen::VectorXd& x,
                       int recommended, double epsilon,
                       const RewardSource& rewards) {
  if (epsilon < 0.0) {
    throw std::invalid_argument("user_step: epsilon must be nonnegative");
  }
  UserDecision decision;
  decision.gain = user.incentive_gain(x, recommended);
  decision.followed = decision.gain >= -epsilon;
  decision.chosen = decision.followed ? recommended : user.myopic_arm(x);
  const double y = rewards(decision.chosen);
  if (decision.followed) {
    user.record_followed(x, decision.chosen, y, false);
  }
  user.advance_clock();
  return decision;
}

}  // namespace rcb
