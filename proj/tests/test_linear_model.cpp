#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "rcb/linear_model.hpp"
#include "rcb/rng.hpp"

using namespace rcb;

namespace {

Eigen::VectorXd vec1(double a) {
  Eigen::VectorXd v(1);
  v << a;
  return v;
}

ArmBelief scalar_belief(double mean, double variance, double sigma) {
  return make_arm_belief(vec1(mean), variance * Eigen::MatrixXd::Identity(1, 1),
                         sigma);
}

// Closed-form scalar conjugate-normal posterior with known noise variance.
ArmBelief scalar_closed_form(const ArmBelief& prior,
                             const std::vector<Observation>& obs) {
  const double v0 = prior.covariance(0, 0);
  const double s2 = prior.noise_sigma * prior.noise_sigma;
  double precision = 1.0 / v0;
  double weighted = prior.mean[0] / v0;
  for (const auto& o : obs) {
    precision += o.x[0] * o.x[0] / s2;
    weighted += o.x[0] * o.y / s2;
  }
  ArmBelief post = prior;
  post.covariance(0, 0) = 1.0 / precision;
  post.mean[0] = weighted / precision;
  return post;
}

}  // namespace

TEST_CASE("scalar posterior: one unit observation halves the variance") {
  const ArmBelief prior = scalar_belief(0.0, 1.0, 1.0);
  const std::vector<Observation> obs{{vec1(1.0), 1.0}};
  const ArmBelief post = posterior_update(prior, obs);
  CHECK(post.mean[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(post.covariance(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  // the input belief is untouched
  CHECK(prior.mean[0] == 0.0);
  CHECK(prior.covariance(0, 0) == 1.0);
}

TEST_CASE("scalar posterior: two conflicting observations land on one third") {
  const ArmBelief prior = scalar_belief(0.0, 1.0, 1.0);
  const std::vector<Observation> obs{{vec1(1.0), 1.0}, {vec1(1.0), 0.0}};
  const ArmBelief post = posterior_update(prior, obs);
  CHECK(post.mean[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(post.covariance(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("empty observation list returns the belief verbatim") {
  Eigen::MatrixXd cov(2, 2);
  cov << 0.5, 0.1, 0.1, 0.7;
  Eigen::VectorXd mean(2);
  mean << 0.3, -0.4;
  const ArmBelief prior = make_arm_belief(mean, cov, 0.2);
  const ArmBelief post = posterior_update(prior, {});
  CHECK(post.mean == prior.mean);
  CHECK(post.covariance == prior.covariance);
  CHECK(post.noise_sigma == prior.noise_sigma);
}

TEST_CASE("predict_mean is the dot product of mean and covariate") {
  Eigen::VectorXd mean(2);
  mean << 0.5, -0.2;
  const ArmBelief belief =
      make_arm_belief(mean, Eigen::MatrixXd::Identity(2, 2), 1.0);
  Eigen::VectorXd x(2);
  x << 1.0, 1.0;
  CHECK(predict_mean(belief, x) == doctest::Approx(0.3).epsilon(1e-12));

  const ArmBelief zero =
      make_arm_belief(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), 1.0);
  CHECK(predict_mean(zero, x) == 0.0);
}

TEST_CASE("predict_mean composes with the scalar posterior") {
  const ArmBelief prior = scalar_belief(0.0, 1.0, 1.0);
  const std::vector<Observation> obs{{vec1(1.0), 1.0}};
  const ArmBelief post = posterior_update(prior, obs);
  CHECK(predict_mean(post, vec1(2.0)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("predict_mean rejects a covariate of the wrong length") {
  const ArmBelief belief = scalar_belief(0.0, 1.0, 1.0);
  Eigen::VectorXd x(2);
  x << 1.0, 1.0;
  CHECK_THROWS_AS(predict_mean(belief, x), std::invalid_argument);
}

TEST_CASE("posterior_update rejects mismatched observations") {
  const ArmBelief belief = scalar_belief(0.0, 1.0, 1.0);
  Eigen::VectorXd x(2);
  x << 1.0, 1.0;
  const std::vector<Observation> obs{{x, 1.0}};
  CHECK_THROWS_AS(posterior_update(belief, obs), std::invalid_argument);
}

TEST_CASE("make_arm_belief validates its inputs") {
  // dimension mismatch
  CHECK_THROWS_AS(
      make_arm_belief(vec1(0.0), Eigen::MatrixXd::Identity(2, 2), 1.0),
      std::invalid_argument);
  // non-symmetric covariance
  Eigen::MatrixXd asym(2, 2);
  asym << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS(make_arm_belief(Eigen::VectorXd::Zero(2), asym, 1.0),
                  std::invalid_argument);
  // non-positive-definite covariance
  Eigen::MatrixXd npd(2, 2);
  npd << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(make_arm_belief(Eigen::VectorXd::Zero(2), npd, 1.0),
                  std::invalid_argument);
  // nonpositive noise
  CHECK_THROWS_AS(
      make_arm_belief(vec1(0.0), Eigen::MatrixXd::Identity(1, 1), 0.0),
      std::invalid_argument);
}

TEST_CASE("inflation schedules scale the covariance, never the mean") {
  const ArmBelief belief = scalar_belief(0.7, 0.2, 1.0);

  SUBCASE("linear doubling at t = 100") {
    const InflationSchedule schedule{InflationKind::linear, 0.01};
    const ArmBelief widened = inflate(schedule, belief, 100.0);
    CHECK(widened.covariance(0, 0) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(widened.mean[0] == 0.7);
  }
  SUBCASE("any schedule is the identity at t = 0") {
    for (const auto kind : {InflationKind::none, InflationKind::linear,
                            InflationKind::sqrt, InflationKind::log}) {
      const InflationSchedule schedule{kind, 0.35};
      const ArmBelief same = inflate(schedule, belief, 0.0);
      CHECK(same.covariance == belief.covariance);
      CHECK(same.mean == belief.mean);
    }
  }
  SUBCASE("log schedule doubles at t = e - 1") {
    const InflationSchedule schedule{InflationKind::log, 1.0};
    CHECK(schedule.scale(std::exp(1.0) - 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("scale never shrinks and is nondecreasing") {
    for (const auto kind :
         {InflationKind::linear, InflationKind::sqrt, InflationKind::log}) {
      const InflationSchedule schedule{kind, 0.05};
      double prev = 0.0;
      for (int t = 0; t <= 1000; t += 50) {
        const double s = schedule.scale(t);
        CHECK(s >= 1.0);
        CHECK(s >= prev);
        prev = s;
      }
    }
  }
  SUBCASE("negative rate is rejected") {
    const InflationSchedule schedule{InflationKind::linear, -0.1};
    CHECK_THROWS_AS(schedule.scale(1.0), std::invalid_argument);
  }
}

TEST_CASE("analytic prediction-error bound arithmetic") {
  MspeConfig cfg;
  cfg.c3 = 1.0;
  cfg.noise_sigma = 0.1;
  cfg.d = 5;
  cfg.phi0 = 0.5;
  CHECK(mspe_bound(cfg, 100) == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(mspe_bound(cfg, 200) == doctest::Approx(0.0005).epsilon(1e-12));

  MspeConfig noiseless = cfg;
  noiseless.noise_sigma = 0.0;
  CHECK(mspe_bound(noiseless, 1) == 0.0);
  CHECK(mspe_bound(noiseless, 1000) == 0.0);

  CHECK_THROWS_AS(mspe_bound(cfg, 0), std::invalid_argument);
}

TEST_CASE("analytic bound is strictly decreasing and positive under noise") {
  MspeConfig cfg;
  cfg.c3 = 2.0;
  cfg.noise_sigma = 0.05;
  cfg.d = 3;
  cfg.phi0 = 1.0 / 9.0;
  double prev = mspe_bound(cfg, 1);
  CHECK(prev > 0.0);
  for (long n = 2; n <= 4096; n *= 2) {
    const double cur = mspe_bound(cfg, n);
    CHECK(cur > 0.0);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("fit_offline routes rows to their own arms only") {
  const ArmBelief prior = scalar_belief(0.0, 1.0, 1.0);
  const std::vector<ArmBelief> priors{prior, prior};

  SUBCASE("all data for the first arm leaves the second unchanged") {
    const std::vector<ArmObservation> data{{vec1(1.0), 0, 1.0},
                                           {vec1(1.0), 0, 0.0}};
    const auto fitted = fit_offline(priors, data);
    CHECK(fitted[0].mean[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(fitted[1].mean == prior.mean);
    CHECK(fitted[1].covariance == prior.covariance);
  }
  SUBCASE("single arm reduces to posterior_update") {
    const std::vector<ArmBelief> one{prior};
    const std::vector<ArmObservation> data{{vec1(1.0), 0, 1.0},
                                           {vec1(1.0), 0, 0.0}};
    const auto fitted = fit_offline(one, data);
    CHECK(fitted[0].mean[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("empty data is the identity") {
    const auto fitted = fit_offline(priors, {});
    for (int i = 0; i < 2; ++i) {
      CHECK(fitted[static_cast<std::size_t>(i)].mean == prior.mean);
      CHECK(fitted[static_cast<std::size_t>(i)].covariance == prior.covariance);
    }
  }
  SUBCASE("out-of-range arm index is rejected") {
    const std::vector<ArmObservation> data{{vec1(1.0), 2, 1.0}};
    CHECK_THROWS_AS(fit_offline(priors, data), std::invalid_argument);
  }
}

TEST_CASE("batch update equals sequential updates over random instances") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng.uniform01() * 3.0);
    Eigen::VectorXd mean(d);
    for (int i = 0; i < d; ++i) mean[i] = rng.normal();
    // random SPD covariance: A A^T + I scaled
    Eigen::MatrixXd a(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) a(r, c) = rng.normal();
    const Eigen::MatrixXd cov =
        a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
    const double sigma = 0.3 + rng.uniform01();
    const ArmBelief prior = make_arm_belief(mean, cov, sigma);

    const int n = 2 + static_cast<int>(rng.uniform01() * 5.0);
    std::vector<Observation> obs;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd x(d);
      for (int j = 0; j < d; ++j) x[j] = rng.normal();
      obs.push_back({x, rng.normal()});
    }

    const ArmBelief batch = posterior_update(prior, obs);
    ArmBelief seq = prior;
    for (const auto& o : obs) {
      seq = posterior_update(seq, std::vector<Observation>{o});
    }
    CHECK((batch.mean - seq.mean).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((batch.covariance - seq.covariance).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("scalar posterior matches the closed form to 1e-12") {
  Rng rng(202);
  for (int trial = 0; trial < 100; ++trial) {
    const ArmBelief prior = scalar_belief(rng.normal(), 0.2 + rng.uniform01(),
                                          0.3 + rng.uniform01());
    std::vector<Observation> obs;
    const int n = 1 + static_cast<int>(rng.uniform01() * 6.0);
    for (int i = 0; i < n; ++i) obs.push_back({vec1(rng.normal()), rng.normal()});

    const ArmBelief post = posterior_update(prior, obs);
    const ArmBelief oracle = scalar_closed_form(prior, obs);
    CHECK(std::abs(post.mean[0] - oracle.mean[0]) < 1e-12);
    CHECK(std::abs(post.covariance(0, 0) - oracle.covariance(0, 0)) < 1e-12);
  }
}

TEST_CASE("posterior covariance stays symmetric and never widens") {
  Rng rng(303);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + static_cast<int>(rng.uniform01() * 2.0);
    Eigen::MatrixXd a(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) a(r, c) = rng.normal();
    const Eigen::MatrixXd cov =
        a * a.transpose() + 0.25 * Eigen::MatrixXd::Identity(d, d);
    const ArmBelief prior = make_arm_belief(Eigen::VectorXd::Zero(d), cov, 0.5);

    std::vector<Observation> obs;
    for (int i = 0; i < 4; ++i) {
      Eigen::VectorXd x(d);
      for (int j = 0; j < d; ++j) x[j] = rng.normal();
      obs.push_back({x, rng.normal()});
    }
    const ArmBelief post = posterior_update(prior, obs);

    CHECK((post.covariance - post.covariance.transpose()).cwiseAbs().maxCoeff() ==
          0.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qe(post.covariance);
    CHECK(qe.eigenvalues().minCoeff() > 0.0);
    // data only ever tightens the belief: prior - posterior stays PSD
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gap(prior.covariance -
                                                             post.covariance);
    CHECK(gap.eigenvalues().minCoeff() >= -1e-10);
  }
}

TEST_CASE("sufficient statistics reproduce the batch posterior") {
  Rng rng(404);
  const int d = 3;
  Eigen::MatrixXd a(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) a(r, c) = rng.normal();
  const Eigen::MatrixXd cov =
      a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd mean(d);
  mean << 0.1, -0.2, 0.3;
  const ArmBelief prior = make_arm_belief(mean, cov, 0.4);

  GaussianArmStats stats(d);
  std::vector<Observation> obs;
  for (int i = 0; i < 12; ++i) {
    Eigen::VectorXd x(d);
    for (int j = 0; j < d; ++j) x[j] = rng.normal();
    const double y = rng.normal();
    stats.add(x, y);
    obs.push_back({x, y});
  }
  CHECK(stats.count() == 12);

  const ArmBelief via_stats = stats.posterior(prior);
  const ArmBelief via_batch = posterior_update(prior, obs);
  CHECK((via_stats.mean - via_batch.mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((via_stats.covariance - via_batch.covariance).cwiseAbs().maxCoeff() <
        1e-10);
  CHECK((stats.posterior_mean(prior) - via_batch.mean).cwiseAbs().maxCoeff() <
        1e-10);
}

TEST_CASE("cross-validated error estimate stays positive and tracks noise") {
  Rng rng(505);
  const int d = 2;
  const ArmBelief prior =
      make_arm_belief(Eigen::VectorXd::Zero(d),
                      0.5 * Eigen::MatrixXd::Identity(d, d), 0.1);
  Eigen::VectorXd beta(d);
  beta << 0.4, -0.3;
  std::vector<ArmObservation> data;
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd x(d);
    for (int j = 0; j < d; ++j) x[j] = rng.uniform01() - 0.5;
    data.push_back({x, 0, beta.dot(x) + 0.1 * rng.normal()});
  }
  const double est = mspe_cross_validation({prior}, data, 5);
  CHECK(est > 0.0);
  CHECK(est < 0.05);

  CHECK_THROWS_AS(mspe_cross_validation({prior}, data, 1), std::invalid_argument);
  const std::vector<ArmObservation> tiny(data.begin(), data.begin() + 3);
  CHECK_THROWS_AS(mspe_cross_validation({prior}, tiny, 5), std::invalid_argument);
}
