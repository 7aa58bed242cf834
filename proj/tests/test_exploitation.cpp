#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rcb/exploitation.hpp"
#include "rcb/linear_model.hpp"
#include "rcb/rng.hpp"

using namespace rcb;

TEST_CASE("epoch indexing follows powers of two") {
  CHECK(epoch_of(1) == 1);
  CHECK(epoch_of(8) == 4);
  CHECK(epoch_of(15) == 4);
  CHECK(epoch_of(16) == 5);
  CHECK_THROWS_AS(epoch_of(0), std::invalid_argument);

  CHECK(epoch_start(1) == 1);
  CHECK(epoch_end(1) == 2);
  CHECK(epoch_start(4) == 8);
  CHECK(epoch_end(4) == 16);
  CHECK_THROWS_AS(epoch_start(0), std::invalid_argument);
  CHECK_THROWS_AS(epoch_end(63), std::invalid_argument);
}

TEST_CASE("epochs partition the calendar") {
  for (long t = 1; t <= 4096; ++t) {
    const int m = epoch_of(t);
    CHECK(epoch_start(m) <= t);
    CHECK(t < epoch_end(m));
    CHECK(epoch_end(m) == 2 * epoch_start(m));
  }
}

TEST_CASE("spread parameter arithmetic") {
  CHECK(spread_parameter(4, 0.04) == doctest::Approx(40.0).epsilon(1e-14));
  CHECK_THROWS_AS(spread_parameter(4, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(spread_parameter(4, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(spread_parameter(0, 0.1), std::invalid_argument);

  SUBCASE("algebraic inverse recovers the error input") {
    for (int k : {1, 2, 5, 10}) {
      for (double mspe : {1e-4, 0.01, 0.5, 2.0}) {
        const double gamma = spread_parameter(k, mspe);
        CHECK(16.0 * k / (gamma * gamma) == doctest::Approx(mspe).epsilon(1e-12));
      }
    }
  }
  SUBCASE("composes with the analytic error bound") {
    MspeConfig cfg;
    cfg.c3 = 1.0;
    cfg.noise_sigma = 0.1;
    cfg.d = 5;
    cfg.phi0 = 0.5;
    const double gamma = spread_parameter(4, mspe_bound(cfg, 100));
    CHECK(gamma == doctest::Approx(252.98221281347034).epsilon(1e-12));
  }
}

TEST_CASE("spread parameter grows as the nominal sample count doubles") {
  MspeConfig cfg;
  cfg.c3 = 1.0;
  cfg.noise_sigma = 0.05;
  cfg.d = 3;
  cfg.phi0 = 1.0 / 9.0;
  double prev = 0.0;
  for (long n = 16; n <= 1L << 20; n *= 2) {
    const double gamma = spread_parameter(3, mspe_bound(cfg, n));
    CHECK(gamma > prev);
    prev = gamma;
  }
}

TEST_CASE("inverse-gap weighting on the reference instance") {
  const std::vector<double> mu{0.5, 0.3, 0.1};
  const ActionDistribution dist = action_distribution(mu, 10.0);
  CHECK(dist.best_arm == 0);
  REQUIRE(dist.probs.size() == 3);
  CHECK(dist.probs[0] == doctest::Approx(23.0 / 35.0).epsilon(1e-12));
  CHECK(dist.probs[1] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(dist.probs[2] == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  double sum = 0.0;
  for (double p : dist.probs) sum += p;
  CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("equal estimates spread the mass uniformly") {
  const std::vector<double> mu{0.4, 0.4, 0.4, 0.4};
  const ActionDistribution dist = action_distribution(mu, 50.0);
  CHECK(dist.best_arm == 0);
  for (double p : dist.probs) CHECK(p == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("two-arm instance lands on thirds") {
  const std::vector<double> mu{0.4, 0.2};
  const ActionDistribution dist = action_distribution(mu, 5.0);
  CHECK(dist.best_arm == 0);
  CHECK(dist.probs[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(dist.probs[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("distribution invariants hold across random instances") {
  Rng rng(7101);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>(rng.uniform01() * 10.0);
    const double gamma = 1.0 + rng.uniform01() * 9999.0;
    std::vector<double> mu(static_cast<std::size_t>(k));
    for (auto& m : mu) m = rng.normal();

    const ActionDistribution dist = action_distribution(mu, gamma);
    double best = mu[0];
    for (double m : mu) best = std::max(best, m);
    CHECK(mu[static_cast<std::size_t>(dist.best_arm)] == best);

    double sum = 0.0;
    double min_p = 1.0;
    for (double p : dist.probs) {
      sum += p;
      min_p = std::min(min_p, p);
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
    CHECK(min_p > 0.0);
    CHECK(dist.probs[static_cast<std::size_t>(dist.best_arm)] >=
          1.0 / static_cast<double>(k) - 1e-15);

    // probabilities never increase as the gap to the best arm grows
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        if (i == dist.best_arm || j == dist.best_arm) continue;
        if (mu[static_cast<std::size_t>(i)] <= mu[static_cast<std::size_t>(j)]) {
          CHECK(dist.probs[static_cast<std::size_t>(i)] <=
                dist.probs[static_cast<std::size_t>(j)] + 1e-15);
        }
      }
    }
  }
}

TEST_CASE("gamma must be positive and ties break low") {
  const std::vector<double> mu{0.5, 0.5, 0.1};
  CHECK_THROWS_AS(action_distribution(mu, 0.0), std::invalid_argument);
  CHECK(action_distribution(mu, 3.0).best_arm == 0);
}

TEST_CASE("inverse-CDF sampling walks the reference cells") {
  const std::vector<double> mu{0.5, 0.3, 0.1};
  const ActionDistribution dist = action_distribution(mu, 10.0);
  CHECK(sample_action(dist, 0.0) == 0);
  CHECK(sample_action(dist, 0.7) == 1);
  CHECK(sample_action(dist, 0.9) == 2);
  CHECK(sample_action(dist, 0.65) == 0);   // just inside the first cell
  CHECK(sample_action(dist, 0.9999999) == 2);
  CHECK_THROWS_AS(sample_action(dist, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_action(dist, -0.1), std::invalid_argument);
}

TEST_CASE("sampling frequencies match the law within total variation 0.01") {
  const std::vector<double> mu{0.5, 0.3, 0.1};
  const ActionDistribution dist = action_distribution(mu, 10.0);
  Rng rng(424242);
  const int draws = 100000;
  std::vector<long> counts(3, 0);
  for (int i = 0; i < draws; ++i) {
    ++counts[static_cast<std::size_t>(sample_action(dist, rng.uniform01()))];
  }
  double tv = 0.0;
  for (int i = 0; i < 3; ++i) {
    tv += std::abs(static_cast<double>(counts[static_cast<std::size_t>(i)]) /
                       draws -
                   dist.probs[static_cast<std::size_t>(i)]);
  }
  tv *= 0.5;
  CHECK(tv <= 0.01);
}

TEST_CASE("a huge spread parameter concentrates play on the best arm") {
  const std::vector<double> mu{0.5, 0.3, 0.1};
  const ActionDistribution dist = action_distribution(mu, 1e6);
  Rng rng(55);
  const int draws = 10000;
  long best = 0;
  for (int i = 0; i < draws; ++i) {
    if (sample_action(dist, rng.uniform01()) == dist.best_arm) ++best;
  }
  CHECK(static_cast<double>(best) / draws >= 0.99);
}
