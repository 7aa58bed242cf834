#include <doctest.h>

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "rcb/cold_start.hpp"
#include "rcb/rng.hpp"

using namespace rcb;

namespace {

Eigen::VectorXd vec1(double a) {
  Eigen::VectorXd v(1);
  v << a;
  return v;
}

ColdStartConfig base_config() {
  ColdStartConfig cfg;
  cfg.num_arms = 5;
  cfg.dim = 5;
  cfg.epsilon = 0.05;
  cfg.tau_prior = 0.01;
  cfg.rho_prior = 0.95;
  cfg.tau_post = 0.01;
  cfg.rho_post = 0.95;
  cfg.phi0 = 0.2;
  cfg.noise_sigma = 0.05;
  return cfg;
}

ArmBelief scalar_belief(double mean) {
  return make_arm_belief(vec1(mean), Eigen::MatrixXd::Identity(1, 1), 1.0);
}

}  // namespace

TEST_CASE("per-arm quota formula") {
  SUBCASE("reference constants") {
    const ColdStartConfig cfg = base_config();
    CHECK(required_sample_size(cfg) == 175782);
  }
  SUBCASE("noiseless two-arm case") {
    ColdStartConfig cfg = base_config();
    cfg.noise_sigma = 0.0;
    cfg.dim = 7;  // with zero noise the dimension drops out
    cfg.num_arms = 2;
    cfg.phi0 = 1.0;
    cfg.tau_post = 0.5;
    cfg.epsilon = 0.5;
    CHECK(required_sample_size(cfg) == 8);
  }
  SUBCASE("larger incentive budget shrinks the quota") {
    ColdStartConfig cfg = base_config();
    cfg.epsilon = 0.1;
    CHECK(required_sample_size(cfg) == 52299);
    CHECK(required_sample_size(cfg) < 175782);
  }
  SUBCASE("override wins when set") {
    ColdStartConfig cfg = base_config();
    cfg.n_override = 123;
    CHECK(required_sample_size(cfg) == 123);
  }
}

TEST_CASE("quota monotonicity over a parameter grid") {
  // nonincreasing in epsilon, phi0, tau_post; nondecreasing in K, d, sigma
  const std::vector<double> epsilons{0.0, 0.05, 0.1};
  const std::vector<double> phis{0.1, 0.2, 0.4};
  const std::vector<double> taus{0.01, 0.02, 0.05};
  const std::vector<int> arms{2, 3, 5};
  const std::vector<int> dims{1, 3, 5};
  const std::vector<double> sigmas{0.0, 0.05, 0.1};

  ColdStartConfig cfg = base_config();
  for (double phi : phis)
    for (double tau : taus) {
      cfg.phi0 = phi;
      cfg.tau_post = tau;
      long prev = -1;
      for (auto it = epsilons.rbegin(); it != epsilons.rend(); ++it) {
        cfg.epsilon = *it;  // descending epsilon -> nondecreasing quota
        const long n = required_sample_size(cfg);
        CHECK(n >= prev);
        prev = n;
      }
    }

  cfg = base_config();
  for (double eps : epsilons) {
    cfg.epsilon = eps;
    long prev = -1;
    for (auto it = phis.rbegin(); it != phis.rend(); ++it) {
      cfg.phi0 = *it;
      const long n = required_sample_size(cfg);
      CHECK(n >= prev);
      prev = n;
    }
    prev = -1;
    cfg.phi0 = 0.2;
    for (auto it = taus.rbegin(); it != taus.rend(); ++it) {
      cfg.tau_post = *it;
      const long n = required_sample_size(cfg);
      CHECK(n >= prev);
      prev = n;
    }
    cfg.tau_post = 0.01;
    prev = -1;
    for (int k : arms) {
      cfg.num_arms = k;
      const long n = required_sample_size(cfg);
      CHECK(n >= prev);
      prev = n;
    }
    cfg.num_arms = 5;
    prev = -1;
    for (int d : dims) {
      cfg.dim = d;
      const long n = required_sample_size(cfg);
      CHECK(n >= prev);
      prev = n;
    }
    cfg.dim = 5;
    prev = -1;
    for (double s : sigmas) {
      cfg.noise_sigma = s;
      const long n = required_sample_size(cfg);
      CHECK(n >= prev);
      prev = n;
    }
    cfg.noise_sigma = 0.05;
  }
}

TEST_CASE("dilution factor formula") {
  SUBCASE("reference constants") {
    const ColdStartConfig cfg = base_config();
    CHECK(required_exploration_rate(cfg) ==
          doctest::Approx(16.96638655462185).epsilon(1e-14));
  }
  SUBCASE("full budget needs no mixing") {
    ColdStartConfig cfg = base_config();
    cfg.epsilon = 1.0;
    CHECK(required_exploration_rate(cfg) == 1.0);
  }
  SUBCASE("zero budget with prior level product one half") {
    ColdStartConfig cfg = base_config();
    cfg.epsilon = 0.0;
    cfg.tau_prior = 0.5;
    cfg.rho_prior = 1.0;
    CHECK(required_exploration_rate(cfg) == doctest::Approx(3.0).epsilon(1e-14));
  }
  SUBCASE("always at least one") {
    ColdStartConfig cfg = base_config();
    for (double eps : {0.0, 0.2, 0.5, 0.9, 1.0}) {
      cfg.epsilon = eps;
      CHECK(required_exploration_rate(cfg) >= 1.0);
    }
  }
}

TEST_CASE("first exploitation epoch index") {
  CHECK(m0_epoch(1) == 2);
  CHECK(m0_epoch(4) == 4);
  CHECK(m0_epoch(1000) == 12);
  CHECK(m0_epoch(175782) == 20);
  CHECK_THROWS_AS(m0_epoch(0), std::invalid_argument);
}

TEST_CASE("config validation rejects out-of-range fields") {
  auto expect_reject = [](auto mutate) {
    ColdStartConfig cfg = base_config();
    mutate(cfg);
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  };
  expect_reject([](ColdStartConfig& c) { c.num_arms = 0; });
  expect_reject([](ColdStartConfig& c) { c.dim = 0; });
  expect_reject([](ColdStartConfig& c) { c.epsilon = -0.1; });
  expect_reject([](ColdStartConfig& c) { c.epsilon = 1.5; });
  expect_reject([](ColdStartConfig& c) { c.tau_prior = 0.0; });
  expect_reject([](ColdStartConfig& c) { c.rho_prior = 0.0; });
  expect_reject([](ColdStartConfig& c) { c.rho_prior = 1.5; });
  expect_reject([](ColdStartConfig& c) { c.tau_post = 0.0; });
  expect_reject([](ColdStartConfig& c) { c.rho_post = 0.0; });
  expect_reject([](ColdStartConfig& c) { c.phi0 = 0.0; });
  expect_reject([](ColdStartConfig& c) { c.noise_sigma = -0.01; });
  expect_reject([](ColdStartConfig& c) { c.n_override = 0; });
  CHECK_NOTHROW(validate(base_config()));
}

TEST_CASE("deterministic phase recommends the highest prior mean") {
  const ColdStartState state(2, 3);
  const std::vector<double> means{0.3, 0.5};
  CHECK(state.mpasc_arm(means) == 1);

  const ColdStartState single(1, 3);
  const std::vector<double> one{0.4};
  CHECK(single.mpasc_arm(one) == 0);

  // ties break toward the lowest index
  const ColdStartState tied(3, 3);
  const std::vector<double> flat{0.5, 0.5, 0.2};
  CHECK(tied.mpasc_arm(flat) == 0);
}

TEST_CASE("deterministic phase fills one quota then hands over") {
  ColdStartState state(2, 3);
  const std::vector<double> means{0.3, 0.5};
  const Eigen::VectorXd x = vec1(1.0);
  const RewardSource rewards = [](int) { return 0.25; };

  for (int round = 1; round <= 3; ++round) {
    REQUIRE(state.phase() == ColdStartPhase::mpasc);
    auto [arm, next] = mpasc_step(state, x, means, rewards);
    CHECK(arm == 1);
    state = next;
    CHECK(state.pulls(1) == round);
  }
  CHECK(state.phase() == ColdStartPhase::rasc);
  CHECK(state.is_completed(1));
  CHECK_FALSE(state.is_completed(0));
  CHECK(state.completed_arms() == std::vector<int>{1});
  CHECK(state.pulls(0) == 0);
  CHECK(state.samples(1).size() == 3);
  for (const auto& s : state.samples(1)) CHECK(s.y == 0.25);

  // the deterministic step refuses to run once its phase is over
  CHECK_THROWS_AS(mpasc_step(state, x, means, rewards), std::logic_error);
}

TEST_CASE("randomized phase: organic branch recommends over mixed beliefs") {
  // arm 0 is completed with posterior mean 0.6 at x; arms 1, 2 keep prior
  // means 0.2 and 0.4
  ColdStartState state(3, 2);
  state.record_pull(0, Observation{vec1(1.0), 0.5});
  state.record_pull(0, Observation{vec1(1.0), 0.5});
  REQUIRE(state.phase() == ColdStartPhase::rasc);
  REQUIRE(state.is_completed(0));

  const std::vector<ArmBelief> beliefs{scalar_belief(0.6), scalar_belief(0.2),
                                       scalar_belief(0.4)};
  const std::vector<double> prior_means{0.0, 0.2, 0.4};
  const Eigen::VectorXd x = vec1(1.0);
  const RewardSource rewards = [](int) { return 1.0; };

  CHECK(state.organic_arm(beliefs, x) == 0);

  auto [arm, next] = rasc_step(state, x, /*promoted_draw=*/false, prior_means,
                               beliefs, rewards);
  CHECK(arm == 0);
  // organic rounds leave counts and samples untouched
  for (int i = 0; i < 3; ++i) {
    CHECK(next.pulls(i) == state.pulls(i));
    CHECK(next.samples(i).size() == state.samples(i).size());
  }
  CHECK(next.phase() == ColdStartPhase::rasc);
}

TEST_CASE("randomized phase: promoted branch recommends the best incomplete arm") {
  ColdStartState state(3, 2);
  state.record_pull(0, Observation{vec1(1.0), 0.5});
  state.record_pull(0, Observation{vec1(1.0), 0.5});
  REQUIRE(state.phase() == ColdStartPhase::rasc);

  const std::vector<ArmBelief> beliefs{scalar_belief(0.9), scalar_belief(0.2),
                                       scalar_belief(0.4)};
  // completed arm 0 carries the highest prior mean but is out of the running
  const std::vector<double> prior_means{0.9, 0.2, 0.4};
  const Eigen::VectorXd x = vec1(1.0);
  const RewardSource rewards = [](int) { return 1.0; };

  CHECK(state.promoted_arm(prior_means) == 2);

  auto [arm, next] = rasc_step(state, x, /*promoted_draw=*/true, prior_means,
                               beliefs, rewards);
  CHECK(arm == 2);
  CHECK(next.pulls(2) == state.pulls(2) + 1);
  CHECK(next.samples(2).size() == state.samples(2).size() + 1);
  CHECK(next.pulls(1) == state.pulls(1));
}

TEST_CASE("randomized phase: a singleton remainder is recommended regardless") {
  ColdStartState state(3, 1);
  state.record_pull(0, Observation{vec1(1.0), 0.5});
  state.record_pull(2, Observation{vec1(1.0), 0.5});
  REQUIRE(state.phase() == ColdStartPhase::rasc);
  REQUIRE(state.is_completed(0));
  REQUIRE(state.is_completed(2));

  // arm 1 has the lowest prior mean yet is the only incomplete arm
  const std::vector<double> prior_means{0.9, -5.0, 0.8};
  CHECK(state.promoted_arm(prior_means) == 1);

  const std::vector<ArmBelief> beliefs{scalar_belief(0.9), scalar_belief(-5.0),
                                       scalar_belief(0.8)};
  const RewardSource rewards = [](int) { return 0.0; };
  auto [arm, next] =
      rasc_step(state, vec1(1.0), true, prior_means, beliefs, rewards);
  CHECK(arm == 1);
  CHECK(next.phase() == ColdStartPhase::done);
  CHECK(next.completed_arms() == std::vector<int>{0, 1, 2});
}

TEST_CASE("randomized step refuses to run in the wrong phase") {
  ColdStartState fresh(2, 3);
  const std::vector<double> means{0.1, 0.2};
  const std::vector<ArmBelief> beliefs{scalar_belief(0.1), scalar_belief(0.2)};
  const RewardSource rewards = [](int) { return 0.0; };
  CHECK_THROWS_AS(rasc_step(fresh, vec1(1.0), true, means, beliefs, rewards),
                  std::logic_error);
}

TEST_CASE("every arm meets its quota at completion") {
  ColdStartState state(3, 4);
  const Eigen::VectorXd x = vec1(0.5);
  for (int arm = 0; arm < 3; ++arm) {
    for (int i = 0; i < 4; ++i) state.record_pull(arm, Observation{x, 0.1});
  }
  CHECK(state.phase() == ColdStartPhase::done);
  for (int arm = 0; arm < 3; ++arm) CHECK(state.pulls(arm) >= state.target());

  // finished stages accept no more pulls, completed arms never did
  CHECK_THROWS_AS(state.record_pull(0, Observation{x, 0.1}), std::logic_error);

  const auto rows = state.all_samples();
  CHECK(rows.size() == 12);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i - 1].arm <= rows[i].arm);
  }
}

TEST_CASE("pulling a completed arm again is an error") {
  ColdStartState state(2, 1);
  state.record_pull(0, Observation{vec1(1.0), 0.0});
  CHECK(state.is_completed(0));
  CHECK_THROWS_AS(state.record_pull(0, Observation{vec1(1.0), 0.0}),
                  std::logic_error);
}

TEST_CASE("state constructor validation") {
  CHECK_THROWS_AS(ColdStartState(0, 5), std::invalid_argument);
  CHECK_THROWS_AS(ColdStartState(2, 0), std::invalid_argument);
}

TEST_CASE("promoted rounds occur at the configured frequency") {
  // constants chosen so the dilution factor is exactly 4
  ColdStartConfig cfg = base_config();
  cfg.epsilon = 0.0;
  cfg.tau_prior = 1.0 / 3.0;
  cfg.rho_prior = 1.0;
  const double rate = required_exploration_rate(cfg);
  CHECK(rate == doctest::Approx(4.0).epsilon(1e-14));

  Rng rng(20240817);
  const int draws = 10000;
  int promoted = 0;
  for (int i = 0; i < draws; ++i) promoted += rng.bernoulli(1.0 / rate) ? 1 : 0;
  const double fraction = static_cast<double>(promoted) / draws;
  CHECK(fraction >= 0.23);
  CHECK(fraction <= 0.27);
}
