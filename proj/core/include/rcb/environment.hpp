#pragma once

#include <string>
#include <vector>

#include "rcb/linear_model.hpp"
#include "rcb/rng.hpp"

namespace rcb {

enum class CovariateSampler { box, sphere };

/// Linear-reward environment with fixed true coefficients per arm.
struct SyntheticEnv {
  std::vector<Eigen::VectorXd> true_betas;
  CovariateSampler sampler = CovariateSampler::box;
  double noise_sigma = 0.0;

  int num_arms() const { return static_cast<int>(true_betas.size()); }
  int dim() const {
    return true_betas.empty() ? 0 : static_cast<int>(true_betas.front().size());
  }
};

/// Draws one covariate: coordinates uniform on [-1/sqrt(d), 1/sqrt(d)] (box)
/// or a point uniform on the unit sphere surface (sphere). Either way the
/// norm never exceeds one.
Eigen::VectorXd sample_covariate(int dim, CovariateSampler sampler, Rng& rng);

/// Realized reward x^T beta_arm + N(0, sigma^2).
double realize_reward(const SyntheticEnv& env, const Eigen::VectorXd& x,
                      int arm, Rng& rng);

/// Samples true coefficients from the shared prior; draws whose norm exceeds
/// one are rescaled onto the unit sphere (direction preserved).
std::vector<Eigen::VectorXd> draw_true_params(
    const std::vector<ArmBelief>& priors, Rng& rng);

/// Smallest eigenvalue of E[x x^T] for the given sampler: 1/(3d) for the box,
/// 1/d for the sphere.
double phi0_analytic(int dim, CovariateSampler sampler);

/**
 * Bundle of experiment constants for one synthetic study. Grid fields list
 * the values the study sweeps; a concrete run picks one of each (the first
 * entry is the default).
 */
struct SettingPreset {
  std::string name;
  long horizon = 0;
  std::vector<int> num_arms_choices;
  std::vector<int> dim_choices;
  std::vector<double> epsilon_choices;
  std::vector<double> prior_variance_choices;
  std::vector<long> n_override_choices;         // empty: quota sized by formula
  std::vector<InflationKind> schedule_choices;  // empty: no widening
  double noise_sigma = 0.05;
  double tau_prior = 0.01;
  double rho_prior = 0.95;
  int special_prior_arm = -1;  // arm given a constant-vector prior mean, if any
  double special_prior_mean = 0.0;
};

/// Presets 1 through 4.
SettingPreset make_setting(int which);

}  // namespace rcb
