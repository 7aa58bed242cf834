#include "rcb/environment.hpp"

#include <cmath>
#include <stdexcept>

namespace rcb {

Eigen::VectorXd sample_covariate(int dim, CovariateSampler sampler, Rng& rng) {
  if (dim < 1) {
    throw std::invalid_argument("sample_covariate: dim must be at least 1");
  }
  Eigen::VectorXd x(dim);
  switch (sampler) {
    case CovariateSampler::box: {
      const double half_width = 1.0 / std::sqrt(static_cast<double>(dim));
      for (int i = 0; i < dim; ++i) {
        x[i] = (2.0 * rng.uniform01() - 1.0) * half_width;
      }
      return x;
    }
    case CovariateSampler::sphere: {
      double norm = 0.0;
      do {
        for (int i = 0; i < dim; ++i) x[i] = rng.normal();
        norm = x.norm();
      } while (norm == 0.0);
      return x / norm;
    }
  }
  throw std::logic_error("sample_covariate: unknown sampler");
}

double realize_reward(const SyntheticEnv& env, const Eigen::VectorXd& x,
                      int arm, Rng& rng) {
  if (arm < 0 || arm >= env.num_arms()) {
    throw std::invalid_argument("realize_reward: arm index out of range");
  }
  if (x.size() != env.true_betas[arm].size()) {
    throw std::invalid_argument("realize_reward: covariate dimension mismatch");
  }
  double mean = env.true_betas[arm].dot(x);
  return env.noise_sigma == 0.0 ? mean : mean + env.noise_sigma * rng.normal();
}

std::vector<Eigen::VectorXd> draw_true_params(
    const std::vector<ArmBelief>& priors, Rng& rng) {
  std::vector<Eigen::VectorXd> betas;
  betas.reserve(priors.size());
  for (const auto& prior : priors) {
    const int d = prior.dim();
    // PSD square root so a zero covariance degenerates to the mean exactly
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(prior.covariance);
    if (eig.info() != Eigen::Success) {
      throw std::runtime_error("draw_true_params: covariance eigendecomposition failed");
    }
    Eigen::VectorXd sqrt_values =
        eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    Eigen::VectorXd z(d);
    for (int i = 0; i < d; ++i) z[i] = rng.normal();
    Eigen::VectorXd beta =
        prior.mean + eig.eigenvectors() * sqrt_values.asDiagonal() * z;
    double norm = beta.norm();
    if (norm > 1.0) beta /= norm;
    betas.push_back(std::move(beta));
  }
  return betas;
}

double phi0_analytic(int dim, CovariateSampler sampler) {
  if (dim < 1) {
    throw std::invalid_argument("phi0_analytic: dim must be at least 1");
  }
  switch (sampler) {
    case CovariateSampler::box:
      return 1.0 / (3.0 * dim);
    case CovariateSampler::sphere:
      return 1.0 / dim;
  }
  throw std::logic_error("phi0_analytic: unknown sampler");
}

SettingPreset make_setting(int which) {
  SettingPreset p;
  switch (which) {
    case 1:
      p.name = "S1";
      p.horizon = 100000;
      p.num_arms_choices = {2, 5, 10};
      p.dim_choices = {3, 5, 10};
      p.epsilon_choices = {0.05};
      p.prior_variance_choices = {0.2};
      return p;
    case 2:
      p = make_setting(1);
      p.name = "S2";
      p.n_override_choices = {10, 100, 1000};
      return p;
    case 3:
      p.name = "S3";
      p.horizon = 50000;
      p.num_arms_choices = {5};
      p.dim_choices = {5};
      p.epsilon_choices = {0.01, 0.03, 0.05};
      p.prior_variance_choices = {1.0 / 3.0, 0.2, 0.1};
      return p;
    case 4:
      p.name = "S4";
      p.horizon = 50000;
      p.num_arms_choices = {5};
      p.dim_choices = {5};
      p.epsilon_choices = {0.05};
      p.prior_variance_choices = {0.02, 0.04, 0.1};
      p.schedule_choices = {InflationKind::linear, InflationKind::sqrt,
                            InflationKind::log};
      p.special_prior_arm = 0;
      p.special_prior_mean = 1.0;
      return p;
    default:
      throw std::invalid_argument("make_setting: setting must be 1, 2, 3 or 4");
  }
}

}  // namespace rcb
