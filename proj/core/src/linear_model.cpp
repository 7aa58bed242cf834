#include "rcb/linear_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rcb {

namespace {

void check_belief(const ArmBelief& b, const char* who) {
  const auto d = b.mean.size();
  if (d == 0) {
    throw std::invalid_argument(std::string(who) + ": mean must be non-empty");
  }
  if (b.covariance.rows() != d || b.covariance.cols() != d) {
    throw std::invalid_argument(std::string(who) +
                                ": covariance shape does not match mean");
  }
  double scale = std::max(1.0, b.covariance.cwiseAbs().maxCoeff());
  if ((b.covariance - b.covariance.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * scale) {
    throw std::invalid_argument(std::string(who) +
                                ": covariance must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(b.covariance);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument(std::string(who) +
                                ": covariance must be positive definite");
  }
  if (!(b.noise_sigma > 0.0)) {
    throw std::invalid_argument(std::string(who) +
                                ": noise_sigma must be positive");
  }
}

}  // namespace

ArmBelief make_arm_belief(Eigen::VectorXd mean, Eigen::MatrixXd covariance,
                          double noise_sigma) {
  ArmBelief b{std::move(mean), std::move(covariance), noise_sigma};
  check_belief(b, "make_arm_belief");
  return b;
}

void GaussianArmStats::add(const Eigen::VectorXd& x, double y) {
  if (x.size() != xty_.size()) {
    throw std::invalid_argument("GaussianArmStats::add: covariate dimension mismatch");
  }
  xtx_.noalias() += x * x.transpose();
  xty_.noalias() += x * y;
  ++count_;
}

ArmBelief GaussianArmStats::posterior(const ArmBelief& prior) const {
  check_belief(prior, "posterior_update");
  if (count_ == 0) return prior;
  if (prior.dim() != dim()) {
    throw std::invalid_argument("posterior_update: dimension mismatch");
  }
  const double s2 = prior.noise_sigma * prior.noise_sigma;
  const auto d = prior.mean.size();
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  Eigen::LLT<Eigen::MatrixXd> prior_llt(prior.covariance);
  Eigen::MatrixXd prior_precision = prior_llt.solve(eye);
  prior_precision = 0.5 * (prior_precision + prior_precision.transpose()).eval();

  Eigen::MatrixXd post_precision = prior_precision + xtx_ / s2;
  Eigen::LLT<Eigen::MatrixXd> post_llt(post_precision);
  if (post_llt.info() != Eigen::Success) {
    throw std::runtime_error("posterior_update: posterior precision not positive definite");
  }
  ArmBelief post;
  post.noise_sigma = prior.noise_sigma;
  post.mean = post_llt.solve(prior_precision * prior.mean + xty_ / s2);
  Eigen::MatrixXd cov = post_llt.solve(eye);
  post.covariance = 0.5 * (cov + cov.transpose());
  return post;
}

Eigen::VectorXd GaussianArmStats::posterior_mean(const ArmBelief& prior) const {
  if (count_ == 0) return prior.mean;
  const double s2 = prior.noise_sigma * prior.noise_sigma;
  const auto d = prior.mean.size();
  Eigen::LLT<Eigen::MatrixXd> prior_llt(prior.covariance);
  Eigen::MatrixXd prior_precision =
      prior_llt.solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::MatrixXd post_precision = prior_precision + xtx_ / s2;
  return Eigen::LLT<Eigen::MatrixXd>(post_precision)
      .solve(prior_precision * prior.mean + xty_ / s2);
}

ArmBelief posterior_update(const ArmBelief& prior,
                           std::span<const Observation> obs) {
  check_belief(prior, "posterior_update");
  GaussianArmStats stats(prior.dim());
  for (const auto& o : obs) {
    if (o.x.size() != prior.mean.size()) {
      throw std::invalid_argument("posterior_update: observation dimension mismatch");
    }
    stats.add(o.x, o.y);
  }
  return stats.posterior(prior);
}

double predict_mean(const ArmBelief& belief, const Eigen::VectorXd& x) {
  if (x.size() != belief.mean.size()) {
    throw std::invalid_argument("predict_mean: covariate dimension mismatch");
  }
  return belief.mean.dot(x);
}

std::vector<ArmBelief> fit_offline(const std::vector<ArmBelief>& priors,
                                   std::span<const ArmObservation> data) {
  const int num_arms = static_cast<int>(priors.size());
  if (num_arms == 0) {
    throw std::invalid_argument("fit_offline: priors must be non-empty");
  }
  std::vector<GaussianArmStats> stats;
  stats.reserve(priors.size());
  for (const auto& p : priors) stats.emplace_back(p.dim());
  for (const auto& row : data) {
    if (row.arm < 0 || row.arm >= num_arms) {
      throw std::invalid_argument("fit_offline: arm index " +
                                  std::to_string(row.arm) + " out of range");
    }
    stats[row.arm].add(row.x, row.y);
  }
  std::vector<ArmBelief> out;
  out.reserve(priors.size());
  for (int i = 0; i < num_arms; ++i) {
    out.push_back(stats[i].count() > 0 ? stats[i].posterior(priors[i])
                                       : priors[i]);
  }
  return out;
}

double InflationSchedule::scale(double t) const {
  if (rate < 0.0) {
    throw std::invalid_argument("InflationSchedule: rate must be nonnegative");
  }
  if (t < 0.0) {
    throw std::invalid_argument("InflationSchedule: t must be nonnegative");
  }
  switch (kind) {
    case InflationKind::none:
      return 1.0;
    case InflationKind::linear:
      return 1.0 + rate * t;
    case InflationKind::sqrt:
      return 1.0 + rate * std::sqrt(t);
    case InflationKind::log:
      return 1.0 + rate * std::log1p(t);
  }
  throw std::logic_error("InflationSchedule: unknown kind");
}

ArmBelief inflate(const InflationSchedule& schedule, const ArmBelief& belief,
                  double t) {
  check_belief(belief, "inflate");
  ArmBelief out = belief;
  out.covariance *= schedule.scale(t);
  return out;
}

double mspe_bound(const MspeConfig& cfg, long n) {
  if (!(cfg.c3 > 0.0)) throw std::invalid_argument("mspe_bound: c3 must be positive");
  if (!(cfg.phi0 > 0.0)) throw std::invalid_argument("mspe_bound: phi0 must be positive");
  if (cfg.d < 1) throw std::invalid_argument("mspe_bound: d must be at least 1");
  if (cfg.noise_sigma < 0.0) {
    throw std::invalid_argument("mspe_bound: noise_sigma must be nonnegative");
  }
  if (n < 1) throw std::invalid_argument("mspe_bound: n must be at least 1");
  return cfg.c3 * cfg.noise_sigma * cfg.noise_sigma * cfg.d /
         (cfg.phi0 * static_cast<double>(n));
}

double mspe_cross_validation(const std::vector<ArmBelief>& priors,
                             std::span<const ArmObservation> data, int folds) {
  if (folds < 2) {
    throw std::invalid_argument("mspe_cross_validation: need at least 2 folds");
  }
  if (data.size() < static_cast<std::size_t>(folds)) {
    throw std::invalid_argument("mspe_cross_validation: fewer rows than folds");
  }
  double sq_err = 0.0;
  long held_out = 0;
  for (int f = 0; f < folds; ++f) {
    std::vector<ArmObservation> train;
    train.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (static_cast<int>(i % folds) != f) train.push_back(data[i]);
    }
    std::vector<ArmBelief> fitted = fit_offline(priors, train);
    for (std::size_t i = f; i < data.size(); i += folds) {
      double err = data[i].y - predict_mean(fitted[data[i].arm], data[i].x);
      sq_err += err * err;
      ++held_out;
    }
  }
  double mse = sq_err / static_cast<double>(held_out);
  double s = priors.front().noise_sigma;
  // the holdout error contains the irreducible noise floor; keep the result
  // strictly positive so it can feed the spread parameter
  return std::max(mse - s * s, 1e-12);
}

}  // namespace rcb
