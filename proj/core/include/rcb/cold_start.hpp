#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rcb/linear_model.hpp"

namespace rcb {

/**
 * Constants that size the incentivized cold start. Defaults are placeholders;
 * every field is validated by validate() before the formulas run.
 *
 * tau_prior / rho_prior describe the prior level set (a gap tau_prior holds
 * with probability at least rho_prior under the shared prior), tau_post /
 * rho_post the corresponding posterior-level quantities, phi0 the smallest
 * eigenvalue of the covariate second-moment matrix.
 */
struct ColdStartConfig {
  int num_arms = 1;
  int dim = 1;
  double epsilon = 0.0;  // incentive budget, in [0, 1]
  double tau_prior = 1.0;
  double rho_prior = 1.0;
  double tau_post = 1.0;
  double rho_post = 1.0;
  double phi0 = 1.0;
  double noise_sigma = 1.0;  // >= 0
  std::optional<long> n_override;
};

void validate(const ColdStartConfig& cfg);

/// Per-arm sample quota: ceil((sigma^2 d + 1) K^3 / (phi0 (tau_post + epsilon)^2)),
/// or n_override when set.
long required_sample_size(const ColdStartConfig& cfg);

/// Dilution factor L of the randomized phase: 1 + (1 - epsilon) /
/// (tau_prior rho_prior + epsilon). Promoted rounds occur with probability 1/L.
double required_exploration_rate(const ColdStartConfig& cfg);

/// First exploitation epoch index: ceil(2 + log2(n)).
int m0_epoch(long n);

enum class ColdStartPhase { mpasc, rasc, done };

/// Reward for pulling an arm in the current round.
using RewardSource = std::function<double(int arm)>;

/**
 * Pull counts, retained samples and phase of the cold start. Arms whose count
 * reaches the quota join the completed set and are never pulled again by this
 * stage. Samples are only ever recorded through record_pull, so the sample
 * list length always matches the pull count.
 */
class ColdStartState {
 public:
  ColdStartState(int num_arms, long target);

  int num_arms() const { return static_cast<int>(pulls_.size()); }
  long target() const { return target_; }
  ColdStartPhase phase() const { return phase_; }
  long pulls(int arm) const { return pulls_.at(arm); }
  bool is_completed(int arm) const { return completed_.at(arm) != 0; }
  /// Completed arms in ascending index order.
  const std::vector<int>& completed_arms() const { return completed_list_; }
  const std::vector<Observation>& samples(int arm) const {
    return samples_.at(arm);
  }
  /// All retained samples as (x, arm, y) tuples, arms in ascending order.
  std::vector<ArmObservation> all_samples() const;

  /// Arm the deterministic phase recommends: highest prior mean, ties to the
  /// lowest index.
  int mpasc_arm(std::span<const double> prior_means) const;

  /// Promoted arm of the randomized phase: highest prior mean among arms not
  /// yet completed.
  int promoted_arm(std::span<const double> prior_means) const;

  /// Organic arm of the randomized phase: highest expected reward over all
  /// arms, where `beliefs` carries posterior beliefs for completed arms and
  /// prior beliefs for the rest.
  int organic_arm(std::span<const ArmBelief> beliefs,
                  const Eigen::VectorXd& x) const;

  /// Books one realized pull of `arm`; advances the phase when the arm
  /// reaches its quota (and to done once every arm has).
  void record_pull(int arm, Observation obs);

 private:
  long target_;
  ColdStartPhase phase_ = ColdStartPhase::mpasc;
  std::vector<long> pulls_;
  std::vector<char> completed_;
  std::vector<int> completed_list_;
  std::vector<std::vector<Observation>> samples_;
};

/// One deterministic-phase round: recommends per mpasc_arm, draws the reward
/// and books the pull. Returns (recommended arm, advanced state).
std::pair<int, ColdStartState> mpasc_step(const ColdStartState& state,
                                          const Eigen::VectorXd& x,
                                          std::span<const double> prior_means,
                                          const RewardSource& rewards);

/// One randomized-phase round. promoted_draw is the Bernoulli(1/L) outcome:
/// true recommends the promoted arm and books its sample, false recommends
/// the organic arm and leaves counts and samples untouched.
std::pair<int, ColdStartState> rasc_step(const ColdStartState& state,
                                         const Eigen::VectorXd& x,
                                         bool promoted_draw,
                                         std::span<const double> prior_means,
                                         std::span<const ArmBelief> beliefs,
                                         const RewardSource& rewards);

}  // namespace rcb
