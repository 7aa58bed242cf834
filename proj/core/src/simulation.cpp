#include "rcb/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rcb {

namespace {

int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

struct OracleTracker {
  OracleMode mode;
  const std::vector<ArmBelief>* priors = nullptr;
  std::vector<GaussianArmStats> stats;
  std::vector<Eigen::VectorXd> coeffs;
  std::vector<bool> dirty;

  OracleTracker(OracleMode m, const std::vector<ArmBelief>& p) : mode(m), priors(&p) {
    const int k = static_cast<int>(p.size());
    const int d = p.front().dim();
    stats.assign(k, GaussianArmStats(d));
    coeffs.reserve(k);
    for (int i = 0; i < k; ++i) coeffs.push_back(p[static_cast<std::size_t>(i)].mean);
    dirty.assign(k, false);
  }

  // Argmax over the platform's running posterior, using info up to t-1.
  int pick(const Eigen::VectorXd& x) {
    const int k = static_cast<int>(coeffs.size());
    int best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      if (dirty[idx]) {
        coeffs[idx] = stats[idx].posterior_mean((*priors)[idx]);
        dirty[idx] = false;
      }
      const double val = coeffs[idx].dot(x);
      if (val > best_val) {
        best_val = val;
        best = i;
      }
    }
    return best;
  }

  void observe(const Eigen::VectorXd& x, int arm, double y) {
    if (mode != OracleMode::posterior) return;
    stats[static_cast<std::size_t>(arm)].add(x, y);
    dirty[static_cast<std::size_t>(arm)] = true;
  }
};

struct StepOutcome {
  int recommended = 0;
  int chosen = 0;
  bool followed = false;
  double gain = 0.0;
  double reward = 0.0;
};

// Resolves the user's response and realizes the reward for one round.
StepOutcome resolve_step(const ProtocolConfig& cfg, const EnvironmentHooks& hooks,
                         UserBelief& user, const Eigen::VectorXd& x, int recommended) {
  StepOutcome out;
  out.recommended = recommended;
  out.gain = user.incentive_gain(x, recommended);
  if (cfg.user_mode == UserResponseMode::compliant) {
    out.chosen = recommended;
    out.followed = true;
  } else {
    out.followed = out.gain >= -cfg.epsilon;
    out.chosen = out.followed ? recommended : user.myopic_arm(x);
  }
  out.reward = hooks.realize_reward(x, out.chosen);
  return out;
}

void log_step(RunLog& log, long t, RunStage stage, const StepOutcome& out,
              double regret, int oracle_arm) {
  StepRecord rec;
  rec.t = t;
  rec.stage = stage;
  rec.recommended = out.recommended;
  rec.chosen = out.chosen;
  rec.reward = out.reward;
  rec.instant_regret = regret;
  rec.dbic_gain = std::isinf(out.gain) ? 0.0 : out.gain;
  rec.followed = out.followed;
  rec.oracle_arm = oracle_arm;
  log.steps.push_back(rec);
}

double epoch_mspe(const ProtocolConfig& cfg, long nominal_n,
                  const std::vector<ArmBelief>& priors,
                  const std::vector<ArmObservation>& rows) {
  if (cfg.mspe_estimator == MspeEstimatorKind::cross_validation) {
    const int folds = 5;
    if (static_cast<long>(rows.size()) >= folds) {
      return mspe_cross_validation(priors, rows, folds);
    }
  }
  MspeConfig mcfg;
  mcfg.c3 = cfg.c3;
  mcfg.phi0 = cfg.phi0;
  mcfg.d = cfg.dim;
  mcfg.noise_sigma = cfg.noise_sigma;
  return mspe_bound(mcfg, std::max<long>(1, nominal_n));
}

}  // namespace

RunResult run_protocol(const ProtocolConfig& cfg, const EnvironmentHooks& hooks,
                       Rng& algo_rng) {
  if (cfg.horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (static_cast<int>(cfg.priors.size()) != cfg.num_arms) {
    throw std::invalid_argument("priors must cover every arm");
  }
  if (cfg.noise_sigma <= 0.0) throw std::invalid_argument("noise_sigma must be positive");
  if (!hooks.next_context || !hooks.realize_reward || !hooks.true_means) {
    throw std::invalid_argument("all environment hooks must be set");
  }

  ColdStartConfig ccfg;
  ccfg.num_arms = cfg.num_arms;
  ccfg.dim = cfg.dim;
  ccfg.epsilon = cfg.epsilon;
  ccfg.tau_prior = cfg.tau_prior;
  ccfg.rho_prior = cfg.rho_prior;
  ccfg.tau_post = cfg.tau_post;
  ccfg.rho_post = cfg.rho_post;
  ccfg.phi0 = cfg.phi0;
  ccfg.noise_sigma = cfg.noise_sigma;
  validate(ccfg);

  RunResult result;
  RunInfo& info = result.info;
  info.n_theorem = required_sample_size(ccfg);
  info.n_used = cfg.n_override.value_or(info.n_theorem);
  if (info.n_used < 1) throw std::invalid_argument("per-arm quota must be at least 1");
  info.n_capped = cfg.n_override.has_value() && *cfg.n_override < info.n_theorem;
  info.exploration_rate = required_exploration_rate(ccfg);
  info.m0 = m0_epoch(info.n_used);
  info.schedule.m0 = info.m0;
  const double promote_prob = 1.0 / info.exploration_rate;

  const long inflation_never = cfg.horizon + 1;
  UserBelief user(cfg.priors, cfg.inflation,
                  cfg.inflation_from_cold_end ? inflation_never : 0);
  ColdStartState cold(cfg.num_arms, info.n_used);
  std::vector<ArmBelief> platform_beliefs = cfg.priors;
  OracleTracker oracle(cfg.oracle, cfg.priors);
  RunLog& log = result.log;
  log.steps.reserve(static_cast<std::size_t>(cfg.horizon));

  std::vector<double> prior_means(static_cast<std::size_t>(cfg.num_arms));
  std::vector<double> mu_hats(static_cast<std::size_t>(cfg.num_arms));

  const auto score_regret = [&](long t, const Eigen::VectorXd& x, int chosen,
                                int& oracle_arm) {
    const std::vector<double> tm = hooks.true_means(t, x);
    const int pick = cfg.oracle == OracleMode::posterior ? oracle.pick(x)
                                                         : argmax_lowest(tm);
    oracle_arm = hooks.oracle_label ? hooks.oracle_label(t) : pick;
    return tm[static_cast<std::size_t>(pick)] - tm[static_cast<std::size_t>(chosen)];
  };

  const auto ingest_cold = [&](int arm, const Eigen::VectorXd& x, double y) {
    cold.record_pull(arm, Observation{x, y});
    if (cold.is_completed(arm)) {
      platform_beliefs[static_cast<std::size_t>(arm)] = posterior_update(
          cfg.priors[static_cast<std::size_t>(arm)], cold.samples(arm));
      user.mark_completed(arm);
    }
  };

  long t = 1;

  // Stage one: fill each arm's quota, first via the prior argmax, then via
  // the randomized promoted/organic mixture.
  while (t <= cfg.horizon && cold.phase() != ColdStartPhase::done) {
    const Eigen::VectorXd x = hooks.next_context(t);
    for (int i = 0; i < cfg.num_arms; ++i) {
      prior_means[static_cast<std::size_t>(i)] =
          cfg.priors[static_cast<std::size_t>(i)].mean.dot(x);
    }

    RunStage stage;
    int recommended;
    bool quota_round;
    if (cold.phase() == ColdStartPhase::mpasc) {
      stage = RunStage::mpasc;
      recommended = cold.mpasc_arm(prior_means);
      quota_round = true;
    } else {
      stage = RunStage::rasc;
      const bool promoted = algo_rng.bernoulli(promote_prob);
      recommended = promoted ? cold.promoted_arm(prior_means)
                             : cold.organic_arm(platform_beliefs, x);
      quota_round = promoted;
    }
    user.set_stage(stage);

    const StepOutcome out = resolve_step(cfg, hooks, user, x, recommended);
    if (out.chosen == recommended) {
      user.record_followed(x, out.chosen, out.reward, quota_round);
      if (quota_round) ingest_cold(recommended, x, out.reward);
    } else if (cfg.ingest_deviant && !cold.is_completed(out.chosen)) {
      ingest_cold(out.chosen, x, out.reward);
    }

    int oracle_arm = 0;
    const double regret = score_regret(t, x, out.chosen, oracle_arm);
    oracle.observe(x, out.chosen, out.reward);
    log_step(log, t, stage, out, regret, oracle_arm);
    user.advance_clock();
    ++t;
  }

  info.cold_start_finished = cold.phase() == ColdStartPhase::done;
  info.cold_start_end = t - 1;
  if (!info.cold_start_finished) {
    info.cold_start_end = cfg.horizon;
    return result;
  }
  if (cfg.inflation_from_cold_end) user.set_inflation_start(user.clock());

  // If the quotas filled before the first exploitation epoch opens, keep
  // recommending the organic argmax without recording until it does.
  const long first_exploit = epoch_start(info.m0) + 1;
  while (t <= cfg.horizon && t < first_exploit) {
    const Eigen::VectorXd x = hooks.next_context(t);
    const int recommended = cold.organic_arm(platform_beliefs, x);
    user.set_stage(RunStage::rasc);
    const StepOutcome out = resolve_step(cfg, hooks, user, x, recommended);
    if (out.chosen == recommended) user.record_followed(x, out.chosen, out.reward, false);
    int oracle_arm = 0;
    const double regret = score_regret(t, x, out.chosen, oracle_arm);
    oracle.observe(x, out.chosen, out.reward);
    log_step(log, t, RunStage::rasc, out, regret, oracle_arm);
    user.advance_clock();
    ++t;
  }
  if (t > cfg.horizon) return result;

  // Stage two: freeze a fitted model and spread parameter per epoch, refit at
  // each calendar boundary on the previous epoch's recorded rows.
  info.exploitation_start = t;
  user.set_stage(RunStage::exploit);

  const std::vector<ArmObservation> quota_rows = cold.all_samples();
  std::vector<ArmBelief> fitted = fit_offline(cfg.priors, quota_rows);
  long nominal_n = 1L << std::max(0, info.m0 - 2);
  double gamma = spread_parameter(cfg.num_arms,
                                  epoch_mspe(cfg, nominal_n, cfg.priors, quota_rows));
  int current_epoch = epoch_of(t);
  info.schedule.gammas[current_epoch] = gamma;
  info.offline_fits = 1;
  std::vector<ArmObservation> epoch_rows;

  while (t <= cfg.horizon) {
    if (epoch_of(t) != current_epoch) {
      current_epoch = epoch_of(t);
      std::vector<bool> has_rows(static_cast<std::size_t>(cfg.num_arms), false);
      for (const auto& row : epoch_rows) has_rows[static_cast<std::size_t>(row.arm)] = true;
      std::vector<ArmBelief> base = cfg.priors;
      for (int i = 0; i < cfg.num_arms; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (!has_rows[idx]) base[idx] = fitted[idx];
      }
      fitted = fit_offline(base, epoch_rows);
      nominal_n = 1L << std::max(0, current_epoch - 2);
      gamma = spread_parameter(cfg.num_arms,
                               epoch_mspe(cfg, nominal_n, cfg.priors, epoch_rows));
      info.schedule.gammas[current_epoch] = gamma;
      ++info.offline_fits;
      epoch_rows.clear();
    }

    const Eigen::VectorXd x = hooks.next_context(t);
    for (int i = 0; i < cfg.num_arms; ++i) {
      mu_hats[static_cast<std::size_t>(i)] =
          predict_mean(fitted[static_cast<std::size_t>(i)], x);
    }
    const ActionDistribution dist = action_distribution(mu_hats, gamma);
    const int recommended = sample_action(dist, algo_rng.uniform01());

    const StepOutcome out = resolve_step(cfg, hooks, user, x, recommended);
    if (out.chosen == recommended) {
      user.record_followed(x, out.chosen, out.reward, false);
      epoch_rows.push_back(ArmObservation{x, out.chosen, out.reward});
    } else if (cfg.ingest_deviant) {
      epoch_rows.push_back(ArmObservation{x, out.chosen, out.reward});
    }

    int oracle_arm = 0;
    const double regret = score_regret(t, x, out.chosen, oracle_arm);
    oracle.observe(x, out.chosen, out.reward);
    log_step(log, t, RunStage::exploit, out, regret, oracle_arm);
    user.advance_clock();
    ++t;
  }
  return result;
}

void validate(const SimParams& params) {
  if (params.horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (params.num_arms < 1) throw std::invalid_argument("num_arms must be at least 1");
  if (params.dim < 1) throw std::invalid_argument("dim must be at least 1");
  if (params.noise_sigma <= 0.0) {
    throw std::invalid_argument("noise_sigma must be positive");
  }
  if (!(params.epsilon >= 0.0 && params.epsilon < 1.0)) {
    throw std::invalid_argument("epsilon must lie in [0, 1)");
  }
  if (params.prior_variance <= 0.0) {
    throw std::invalid_argument("prior_variance must be positive");
  }
  if (params.special_prior_arm >= params.num_arms) {
    throw std::invalid_argument("special_prior_arm is out of range");
  }
  if (params.n_override && *params.n_override < 1) {
    throw std::invalid_argument("n_override must be at least 1");
  }
  if (params.c3 <= 0.0) throw std::invalid_argument("c3 must be positive");
  if (!params.fixed_betas.empty()) {
    if (static_cast<int>(params.fixed_betas.size()) != params.num_arms) {
      throw std::invalid_argument("fixed_betas must cover every arm");
    }
    for (const auto& beta : params.fixed_betas) {
      if (beta.size() != params.dim) {
        throw std::invalid_argument("fixed_betas entries must match dim");
      }
    }
  }
  ColdStartConfig ccfg;
  ccfg.num_arms = params.num_arms;
  ccfg.dim = params.dim;
  ccfg.epsilon = params.epsilon;
  ccfg.tau_prior = params.tau_prior;
  ccfg.rho_prior = params.rho_prior;
  ccfg.tau_post = params.tau_post;
  ccfg.rho_post = params.rho_post;
  ccfg.phi0 = phi0_analytic(params.dim, params.sampler);
  ccfg.noise_sigma = params.noise_sigma;
  validate(ccfg);
}

std::vector<ArmBelief> build_priors(const SimParams& params) {
  std::vector<ArmBelief> priors;
  priors.reserve(static_cast<std::size_t>(params.num_arms));
  const Eigen::MatrixXd cov =
      params.prior_variance * Eigen::MatrixXd::Identity(params.dim, params.dim);
  for (int i = 0; i < params.num_arms; ++i) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(params.dim);
    if (i == params.special_prior_arm) {
      mean.setConstant(params.special_prior_mean);
    }
    priors.push_back(make_arm_belief(mean, cov, params.noise_sigma));
  }
  return priors;
}

RunResult run_simulation(const SimParams& params, std::uint64_t seed) {
  validate(params);

  Rng env_rng(Rng::derive(seed, 0));
  Rng algo_rng(Rng::derive(seed, 1));

  const std::vector<ArmBelief> priors = build_priors(params);
  SyntheticEnv env;
  env.sampler = params.sampler;
  env.noise_sigma = params.noise_sigma;
  env.true_betas =
      params.fixed_betas.empty() ? draw_true_params(priors, env_rng) : params.fixed_betas;

  ProtocolConfig cfg;
  cfg.horizon = params.horizon;
  cfg.num_arms = params.num_arms;
  cfg.dim = params.dim;
  cfg.noise_sigma = params.noise_sigma;
  cfg.epsilon = params.epsilon;
  cfg.tau_prior = params.tau_prior;
  cfg.rho_prior = params.rho_prior;
  cfg.tau_post = params.tau_post;
  cfg.rho_post = params.rho_post;
  cfg.phi0 = phi0_analytic(params.dim, params.sampler);
  cfg.n_override = params.n_override;
  cfg.priors = priors;
  cfg.inflation = params.inflation;
  cfg.inflation_from_cold_end = params.inflation_from_cold_end;
  cfg.user_mode = params.user_mode;
  cfg.ingest_deviant = params.ingest_deviant;
  cfg.oracle = params.oracle;
  cfg.mspe_estimator = params.mspe_estimator;
  cfg.c3 = params.c3;

  EnvironmentHooks hooks;
  hooks.next_context = [&](long) {
    return sample_covariate(params.dim, params.sampler, env_rng);
  };
  hooks.realize_reward = [&](const Eigen::VectorXd& x, int arm) {
    return realize_reward(env, x, arm, env_rng);
  };
  hooks.true_means = [&](long, const Eigen::VectorXd& x) {
    std::vector<double> means(static_cast<std::size_t>(params.num_arms));
    for (int i = 0; i < params.num_arms; ++i) {
      means[static_cast<std::size_t>(i)] =
          env.true_betas[static_cast<std::size_t>(i)].dot(x);
    }
    return means;
  };

  return run_protocol(cfg, hooks, algo_rng);
}

}  // namespace rcb
