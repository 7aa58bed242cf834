#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace rcb {

/**
 * Gaussian belief over one arm's linear reward coefficients, with known
 * observation noise. Rewards are modelled as y = x^T beta + N(0, sigma^2),
 * beta ~ N(mean, covariance). The covariance is kept symmetric positive
 * definite through every update.
 */
struct ArmBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double noise_sigma = 1.0;

  int dim() const { return static_cast<int>(mean.size()); }
};

/// Validating constructor: dimensions must agree, covariance must be
/// symmetric positive definite and noise_sigma strictly positive.
ArmBelief make_arm_belief(Eigen::VectorXd mean, Eigen::MatrixXd covariance,
                          double noise_sigma);

/// One (covariate, reward) pair.
struct Observation {
  Eigen::VectorXd x;
  double y = 0.0;
};

/// One (covariate, arm, reward) tuple as collected during a run.
struct ArmObservation {
  Eigen::VectorXd x;
  int arm = 0;
  double y = 0.0;
};

/// Conjugate update of a Gaussian belief on a batch of observations.
/// Updating on the batch equals updating one observation at a time.
ArmBelief posterior_update(const ArmBelief& prior,
                           std::span<const Observation> obs);

/// Expected reward of the belief at covariate x, i.e. mean^T x.
double predict_mean(const ArmBelief& belief, const Eigen::VectorXd& x);

/// Per-arm batch refit: each arm's belief is updated on exactly its own rows
/// of `data`; arms with no rows are returned unchanged.
std::vector<ArmBelief> fit_offline(const std::vector<ArmBelief>& priors,
                                   std::span<const ArmObservation> data);

enum class InflationKind { none, linear, sqrt, log };

/**
 * Prior-covariance widening over calendar time. scale(t) multiplies the
 * covariance: 1 + rate*t (linear), 1 + rate*sqrt(t) (sqrt),
 * 1 + rate*ln(1+t) (log), or identically 1 (none). scale(0) = 1 and the
 * schedule never shrinks an eigenvalue.
 */
struct InflationSchedule {
  InflationKind kind = InflationKind::none;
  double rate = 0.0;  // >= 0

  double scale(double t) const;
};

/// Applies the schedule at time t: covariance scaled, mean untouched.
ArmBelief inflate(const InflationSchedule& schedule, const ArmBelief& belief,
                  double t);

/// Constants of the analytic prediction-error bound c3 * sigma^2 * d / (phi0 * n).
struct MspeConfig {
  double c3 = 1.0;
  double phi0 = 1.0;  // minimum eigenvalue of E[x x^T], > 0
  int d = 1;
  double noise_sigma = 1.0;  // >= 0 (zero noise degenerates to a zero bound)
};

/// Mean squared prediction error bound after n training samples.
double mspe_bound(const MspeConfig& cfg, long n);

/// Leave-out estimate of the same quantity: k-fold mean squared error of the
/// posterior mean predictor minus the known noise floor, floored at a tiny
/// positive value.
double mspe_cross_validation(const std::vector<ArmBelief>& priors,
                             std::span<const ArmObservation> data, int folds);

/**
 * Sufficient statistics (X^T X, X^T y, count) for incremental conjugate
 * updates. posterior(prior) equals posterior_update(prior, all added rows).
 */
class GaussianArmStats {
 public:
  GaussianArmStats() = default;
  explicit GaussianArmStats(int dim)
      : xtx_(Eigen::MatrixXd::Zero(dim, dim)),
        xty_(Eigen::VectorXd::Zero(dim)) {}

  void add(const Eigen::VectorXd& x, double y);
  long count() const { return count_; }
  int dim() const { return static_cast<int>(xty_.size()); }

  ArmBelief posterior(const ArmBelief& prior) const;
  /// Posterior mean only; cheaper than materialising the full belief.
  Eigen::VectorXd posterior_mean(const ArmBelief& prior) const;

 private:
  Eigen::MatrixXd xtx_;
  Eigen::VectorXd xty_;
  long count_ = 0;
};

}  // namespace rcb
