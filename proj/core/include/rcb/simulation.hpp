#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "rcb/cold_start.hpp"
#include "rcb/environment.hpp"
#include "rcb/exploitation.hpp"
#include "rcb/metrics.hpp"
#include "rcb/rng.hpp"
#include "rcb/user_model.hpp"

namespace rcb {

/// Which arm the regret oracle plays: the true-parameter argmax, or the
/// argmax of a posterior fitted on everything observed so far.
enum class OracleMode { truth, posterior };

/// compliant users always take the recommendation (the incentive gain is
/// still measured and logged); myopic users deviate to their own argmax
/// whenever the gain falls below -epsilon.
enum class UserResponseMode { compliant, myopic };

enum class MspeEstimatorKind { analytic, cross_validation };

/// Hooks binding the protocol to an environment: a covariate stream, a
/// realized learning reward, and the per-arm true means driving regret.
/// oracle_label, when set, supplies the true class logged per step (for
/// confusion tables); otherwise the regret oracle's pick is logged.
struct EnvironmentHooks {
  std::function<Eigen::VectorXd(long t)> next_context;
  std::function<double(const Eigen::VectorXd& x, int arm)> realize_reward;
  std::function<std::vector<double>(long t, const Eigen::VectorXd& x)> true_means;
  std::function<int(long t)> oracle_label;
};

/// Everything the protocol itself needs, independent of how the environment
/// produces contexts and rewards.
struct ProtocolConfig {
  long horizon = 0;
  int num_arms = 1;
  int dim = 1;
  double noise_sigma = 1.0;
  double epsilon = 0.0;
  double tau_prior = 1.0;
  double rho_prior = 1.0;
  double tau_post = 1.0;
  double rho_post = 1.0;
  double phi0 = 1.0;
  std::optional<long> n_override;
  std::vector<ArmBelief> priors;
  InflationSchedule inflation;
  /// Start the widening clock when the cold start ends instead of at round 1.
  bool inflation_from_cold_end = false;
  UserResponseMode user_mode = UserResponseMode::compliant;
  /// Under myopic users, also feed deviant rounds' samples to the platform.
  bool ingest_deviant = false;
  OracleMode oracle = OracleMode::truth;
  MspeEstimatorKind mspe_estimator = MspeEstimatorKind::analytic;
  double c3 = 1.0;
};

/// Provenance of one run: how the stage boundaries and constants resolved.
struct RunInfo {
  long n_theorem = 0;        // formula-sized per-arm quota
  long n_used = 0;           // quota actually used (override may cap it)
  bool n_capped = false;
  double exploration_rate = 1.0;  // L; promoted rounds occur w.p. 1/L
  int m0 = 1;
  bool cold_start_finished = false;
  long cold_start_end = 0;     // last cold-start round, 0 if none ran
  long exploitation_start = 0; // first exploitation round, 0 if never reached
  int offline_fits = 0;
  EpochSchedule schedule;
};

struct RunResult {
  RunLog log;
  RunInfo info;
};

/// Runs the full two-stage protocol against the hooks. algo_rng drives the
/// platform's randomization (promoted-round coin, action sampling).
RunResult run_protocol(const ProtocolConfig& cfg, const EnvironmentHooks& hooks,
                       Rng& algo_rng);

/// Resolved constants of one synthetic experiment run.
struct SimParams {
  long horizon = 100000;
  int num_arms = 2;
  int dim = 3;
  double noise_sigma = 0.05;
  double epsilon = 0.05;
  double tau_prior = 0.01;
  double rho_prior = 0.95;
  double tau_post = 0.01;
  double rho_post = 0.95;
  double prior_variance = 0.2;
  int special_prior_arm = -1;  // arm given a constant prior mean vector
  double special_prior_mean = 0.0;
  std::optional<long> n_override;
  InflationSchedule inflation;
  bool inflation_from_cold_end = false;
  CovariateSampler sampler = CovariateSampler::box;
  UserResponseMode user_mode = UserResponseMode::compliant;
  bool ingest_deviant = false;
  OracleMode oracle = OracleMode::truth;
  MspeEstimatorKind mspe_estimator = MspeEstimatorKind::analytic;
  double c3 = 1.0;
  double delta = 0.05;  // carried for the cross-validation estimator
  bool strict_dbic = false;
  /// True coefficients are drawn from the prior unless fixed ones are given.
  std::vector<Eigen::VectorXd> fixed_betas;
};

void validate(const SimParams& params);

/// Shared prior of one synthetic run: zero-mean (or the special arm's
/// constant vector) with covariance prior_variance * I.
std::vector<ArmBelief> build_priors(const SimParams& params);

/// One synthetic run: environment and protocol randomness derive from `seed`
/// through the documented stream-splitting rule.
RunResult run_simulation(const SimParams& params, std::uint64_t seed);

}  // namespace rcb
