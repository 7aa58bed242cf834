#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rcb/runner.hpp"

namespace {

using rcb::cli::RunConfig;

// Flags land in `staged`; only the ones the user actually passed are copied
// onto the config, so they override presets and config files alike.
struct SimFlags {
  RunConfig staged;
  int setting = 0;
  std::string config_file;

  void attach(CLI::App* cmd, bool warfarin) {
    cmd->add_option("--config", config_file, "JSON config file (config.echo format)");
    cmd->add_option("--seed", staged.seed, "master seed");
    cmd->add_option("--out", staged.out_dir, "output directory");
    cmd->add_option("--threads", staged.threads, "worker threads (0 = auto)");
    cmd->add_option("--epsilon", staged.epsilon, "incentive budget");
    cmd->add_option("--prior-var", staged.prior_variance, "prior covariance scale");
    cmd->add_option("--n-override", staged.n_override,
                    "per-arm quota override (0 = formula-sized)");
    cmd->add_option("--tau-prior", staged.tau_prior, "prior gap level");
    cmd->add_option("--rho-prior", staged.rho_prior, "prior gap probability");
    cmd->add_option("--tau-post", staged.tau_post, "posterior gap level");
    cmd->add_option("--rho-post", staged.rho_post, "posterior gap probability");
    cmd->add_option("--inflation", staged.inflation,
                    "prior widening schedule: none|linear|sqrt|log");
    cmd->add_option("--inflation-rate", staged.inflation_rate, "widening rate");
    cmd->add_option("--user-model", staged.user_model,
                    "user response: compliant|myopic");
    cmd->add_flag("--ingest-deviant", staged.ingest_deviant,
                  "also learn from deviant rounds (myopic users)");
    cmd->add_flag("--strict-dbic", staged.strict_dbic,
                  "count violations against -epsilon/K in the second stage");
    cmd->add_option("--mspe", staged.mspe, "prediction-error estimator: analytic|cv");
    cmd->add_option("--c3", staged.c3, "analytic bound constant");
    cmd->add_option("--gain-window", staged.gain_window,
                    "rolling window of the gain curve");
    if (warfarin) {
      cmd->add_option("--data", staged.data_path, "patient CSV export")->required();
      cmd->add_option("--manifest", staged.manifest_path, "feature manifest JSON");
      cmd->add_option("--perms", staged.permutations, "arrival permutations");
      cmd->add_option("--medium-prior-mean", staged.medium_prior_mean,
                      "per-coordinate prior mean of the Medium arm");
    } else {
      cmd->add_option("--setting", setting, "experiment preset 1..4");
      cmd->add_option("--T,--horizon", staged.horizon, "rounds");
      cmd->add_option("--K,--arms", staged.num_arms, "number of arms");
      cmd->add_option("--d,--dim", staged.dim, "covariate dimension");
      cmd->add_option("--sigma", staged.noise_sigma, "reward noise");
      cmd->add_option("--special-arm", staged.special_prior_arm,
                      "arm given a constant prior mean vector (-1: none)");
      cmd->add_option("--special-mean", staged.special_prior_mean,
                      "coordinate value of that prior mean");
      cmd->add_flag("--inflation-from-cold-end", staged.inflation_from_cold_end,
                    "start the widening clock when the cold start ends");
      cmd->add_option("--sampler", staged.sampler, "covariate law: box|sphere");
      cmd->add_option("--oracle", staged.oracle, "regret oracle: truth|posterior");
      cmd->add_option("--reps", staged.replications, "independent replications");
      cmd->add_option("--delta", staged.delta, "confidence level knob");
    }
  }

  // Builds the final config: file < preset < explicit flags.
  RunConfig resolve(CLI::App* cmd, RunConfig base) const {
    if (cmd->count("--config")) base = rcb::cli::load_config_file(config_file);
    if (cmd->get_option_no_throw("--setting") != nullptr &&
        cmd->count("--setting")) {
      rcb::cli::apply_setting(base, setting);
    }

    const auto take = [&](const std::string& flag, auto member) {
      if (cmd->count(flag)) base.*member = staged.*member;
    };
    take("--seed", &RunConfig::seed);
    take("--out", &RunConfig::out_dir);
    take("--threads", &RunConfig::threads);
    take("--epsilon", &RunConfig::epsilon);
    take("--prior-var", &RunConfig::prior_variance);
    take("--n-override", &RunConfig::n_override);
    take("--tau-prior", &RunConfig::tau_prior);
    take("--rho-prior", &RunConfig::rho_prior);
    take("--tau-post", &RunConfig::tau_post);
    take("--rho-post", &RunConfig::rho_post);
    take("--inflation", &RunConfig::inflation);
    take("--inflation-rate", &RunConfig::inflation_rate);
    take("--user-model", &RunConfig::user_model);
    take("--ingest-deviant", &RunConfig::ingest_deviant);
    take("--strict-dbic", &RunConfig::strict_dbic);
    take("--mspe", &RunConfig::mspe);
    take("--c3", &RunConfig::c3);
    take("--gain-window", &RunConfig::gain_window);
    if (base.mode == "warfarin" || cmd->get_name() == "run-warfarin") {
      take("--data", &RunConfig::data_path);
      take("--manifest", &RunConfig::manifest_path);
      take("--perms", &RunConfig::permutations);
      take("--medium-prior-mean", &RunConfig::medium_prior_mean);
    } else {
      take("--T", &RunConfig::horizon);
      take("--K", &RunConfig::num_arms);
      take("--d", &RunConfig::dim);
      take("--sigma", &RunConfig::noise_sigma);
      take("--special-arm", &RunConfig::special_prior_arm);
      take("--special-mean", &RunConfig::special_prior_mean);
      take("--inflation-from-cold-end", &RunConfig::inflation_from_cold_end);
      take("--sampler", &RunConfig::sampler);
      take("--oracle", &RunConfig::oracle);
      take("--reps", &RunConfig::replications);
      take("--delta", &RunConfig::delta);
    }
    return base;
  }
};

RunConfig warfarin_defaults() {
  RunConfig base;
  base.mode = "warfarin";
  base.epsilon = 0.025;
  base.prior_variance = 0.4;
  base.tau_prior = 0.005;
  base.tau_post = 0.005;
  base.inflation = "linear";
  base.inflation_rate = 0.01;
  base.inflation_from_cold_end = true;
  base.manifest_path = "data/warfarin_feature_manifest.json";
  return base;
}

int run_and_report(const RunConfig& config) {
  const rcb::cli::ExecResult result = rcb::cli::execute(config);
  std::cout << "wrote " << result.dir.string() << "/{";
  for (std::size_t i = 0; i < result.files.size(); ++i) {
    if (i) std::cout << ", ";
    std::cout << result.files[i];
  }
  std::cout << "}\n";
  return 0;
}

int show_config(int setting) {
  if (setting == 0) {
    std::cout << rcb::cli::to_json(RunConfig{}) << "\n";
    return 0;
  }
  const rcb::SettingPreset preset = rcb::make_setting(setting);
  nlohmann::json j;
  j["name"] = preset.name;
  j["horizon"] = preset.horizon;
  j["num_arms_choices"] = preset.num_arms_choices;
  j["dim_choices"] = preset.dim_choices;
  j["epsilon_choices"] = preset.epsilon_choices;
  j["prior_variance_choices"] = preset.prior_variance_choices;
  j["n_override_choices"] = preset.n_override_choices;
  std::vector<std::string> schedules;
  for (const auto kind : preset.schedule_choices) {
    switch (kind) {
      case rcb::InflationKind::none: schedules.emplace_back("none"); break;
      case rcb::InflationKind::linear: schedules.emplace_back("linear"); break;
      case rcb::InflationKind::sqrt: schedules.emplace_back("sqrt"); break;
      case rcb::InflationKind::log: schedules.emplace_back("log"); break;
    }
  }
  j["schedule_choices"] = schedules;
  j["noise_sigma"] = preset.noise_sigma;
  j["tau_prior"] = preset.tau_prior;
  j["rho_prior"] = preset.rho_prior;
  j["special_prior_arm"] = preset.special_prior_arm;
  j["special_prior_mean"] = preset.special_prior_mean;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage incentive-compatible contextual bandit runner"};
  app.require_subcommand(1);

  SimFlags sim_flags;
  CLI::App* run_sim = app.add_subcommand("run-sim", "synthetic experiment");
  sim_flags.attach(run_sim, false);

  SimFlags warfarin_flags;
  CLI::App* run_warfarin =
      app.add_subcommand("run-warfarin", "dosing replay on a patient export");
  warfarin_flags.attach(run_warfarin, true);

  int show_setting = 0;
  CLI::App* show = app.add_subcommand("show-config", "print a preset or the defaults");
  show->add_option("--setting", show_setting, "experiment preset 1..4");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_sim->parsed()) {
      return run_and_report(sim_flags.resolve(run_sim, RunConfig{}));
    }
    if (run_warfarin->parsed()) {
      return run_and_report(warfarin_flags.resolve(run_warfarin, warfarin_defaults()));
    }
    return show_config(show_setting);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
