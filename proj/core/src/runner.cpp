#include "rcb/runner.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "rcb/io.hpp"

namespace rcb::cli {

namespace {

using nlohmann::json;

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

InflationKind parse_inflation(const std::string& name) {
  if (name == "none") return InflationKind::none;
  if (name == "linear") return InflationKind::linear;
  if (name == "sqrt") return InflationKind::sqrt;
  if (name == "log") return InflationKind::log;
  throw std::invalid_argument("inflation must be one of none|linear|sqrt|log");
}

std::string inflation_name(InflationKind kind) {
  switch (kind) {
    case InflationKind::none: return "none";
    case InflationKind::linear: return "linear";
    case InflationKind::sqrt: return "sqrt";
    case InflationKind::log: return "log";
  }
  return "none";
}

const char* stage_name(RunStage stage) {
  switch (stage) {
    case RunStage::mpasc: return "mpasc";
    case RunStage::rasc: return "rasc";
    case RunStage::exploit: return "exploit";
  }
  return "?";
}

json summary_to_json(const MetricsSummary& s) {
  json j;
  j["cumulative_regret"] = s.cumulative_regret;
  j["violation_fraction"] = s.violation_fraction;
  j["violation_rounds"] = s.violation_rounds;
  j["counted_rounds"] = s.counted_rounds;
  j["fraction_incorrect"] =
      std::isnan(s.fraction_incorrect) ? json() : json(s.fraction_incorrect);
  j["risk_score"] = std::isnan(s.risk_score) ? json() : json(s.risk_score);
  return j;
}

json info_to_json(const RunInfo& info) {
  json j;
  j["n_theorem"] = info.n_theorem;
  j["n_used"] = info.n_used;
  j["n_capped"] = info.n_capped;
  j["exploration_rate"] = info.exploration_rate;
  j["m0"] = info.m0;
  j["cold_start_finished"] = info.cold_start_finished;
  j["cold_start_end"] = info.cold_start_end;
  j["exploitation_start"] = info.exploitation_start;
  j["offline_fits"] = info.offline_fits;
  json gammas = json::object();
  for (const auto& [epoch, gamma] : info.schedule.gammas) {
    gammas[std::to_string(epoch)] = gamma;
  }
  j["gammas"] = gammas;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed while writing: " + path.string());
}

void write_steps_csv(const std::filesystem::path& path,
                     const std::vector<RunResult>& runs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "rep,t,stage,recommended,chosen,reward,instant_regret,dbic_gain,followed\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (const StepRecord& s : runs[r].log.steps) {
      out << r << ',' << s.t << ',' << stage_name(s.stage) << ',' << s.recommended
          << ',' << s.chosen << ',' << format_double(s.reward) << ','
          << format_double(s.instant_regret) << ',' << format_double(s.dbic_gain)
          << ',' << (s.followed ? 1 : 0) << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed while writing: " + path.string());
}

// Long-format series: mean cumulative regret, mean rolling gain, and the
// -epsilon acceptance level, averaged across replications at each t.
void write_curves_csv(const std::filesystem::path& path,
                      const std::vector<RunResult>& runs, double epsilon,
                      int gain_window) {
  std::size_t max_len = 0;
  for (const auto& run : runs) max_len = std::max(max_len, run.log.steps.size());

  std::vector<double> regret_sum(max_len, 0.0);
  std::vector<double> gain_sum(max_len, 0.0);
  std::vector<long> alive(max_len, 0);
  for (const auto& run : runs) {
    const GainSeries gains = gain_series(run.log, gain_window, epsilon);
    double cum = 0.0;
    for (std::size_t i = 0; i < run.log.steps.size(); ++i) {
      cum += run.log.steps[i].instant_regret;
      regret_sum[i] += cum;
      gain_sum[i] += gains.rolling[i];
      ++alive[i];
    }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "series,t,value\n";
  for (std::size_t i = 0; i < max_len; ++i) {
    out << "cum_regret_mean," << (i + 1) << ','
        << format_double(regret_sum[i] / static_cast<double>(alive[i])) << '\n';
  }
  for (std::size_t i = 0; i < max_len; ++i) {
    out << "gain_rolling_mean," << (i + 1) << ','
        << format_double(gain_sum[i] / static_cast<double>(alive[i])) << '\n';
  }
  for (std::size_t i = 0; i < max_len; ++i) {
    out << "neg_epsilon," << (i + 1) << ',' << format_double(-epsilon) << '\n';
  }
  if (!out) throw std::runtime_error("failed while writing: " + path.string());
}

void write_confusion_csv(const std::filesystem::path& path,
                         const ConfusionTable& table) {
  const char* bucket_names[3] = {"low", "medium", "high"};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "true_bucket,low,medium,high\n";
  const Eigen::MatrixXd props = table.row_proportions();
  for (int r = 0; r < 3; ++r) {
    out << bucket_names[r];
    for (int c = 0; c < 3; ++c) out << ',' << format_double(props(r, c));
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed while writing: " + path.string());
}

ExecResult execute_sim(const RunConfig& config, const std::filesystem::path& dir) {
  const SimParams params = to_sim_params(config);

  std::vector<RunResult> runs(static_cast<std::size_t>(config.replications));
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int workers = std::max(
      1, std::min(config.replications,
                  config.threads > 0 ? config.threads : std::max(1, hw)));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        int r;
        while ((r = next.fetch_add(1)) < config.replications) {
          runs[static_cast<std::size_t>(r)] = run_simulation(
              params, Rng::derive(config.seed, static_cast<std::uint64_t>(r)));
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  SummaryOptions opts;
  opts.epsilon = config.epsilon;
  opts.num_arms = config.num_arms;
  opts.strict_dbic = config.strict_dbic;

  json per_rep = json::array();
  double regret_sum = 0.0;
  double violation_sum = 0.0;
  for (const auto& run : runs) {
    const MetricsSummary s = summarize(run.log, opts);
    json entry = summary_to_json(s);
    entry["info"] = info_to_json(run.info);
    per_rep.push_back(std::move(entry));
    regret_sum += s.cumulative_regret;
    violation_sum += s.violation_fraction;
  }
  const double reps = static_cast<double>(config.replications);
  json summary;
  summary["mode"] = "sim";
  summary["replications"] = config.replications;
  summary["aggregate"] = {
      {"cumulative_regret_mean", regret_sum / reps},
      {"violation_fraction_mean", violation_sum / reps},
  };
  summary["per_replication"] = std::move(per_rep);

  ExecResult result;
  result.dir = dir;
  write_steps_csv(dir / "steps.csv", runs);
  result.files.push_back("steps.csv");
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  result.files.push_back("summary.json");
  write_curves_csv(dir / "curves.csv", runs, config.epsilon, config.gain_window);
  result.files.push_back("curves.csv");
  write_text(dir / "config.echo", to_json(config) + "\n");
  result.files.push_back("config.echo");
  return result;
}

ExecResult execute_warfarin(const RunConfig& config,
                            const std::filesystem::path& dir) {
  namespace wf = rcb::warfarin;
  const wf::FeatureManifest manifest = wf::load_manifest(config.manifest_path);
  const std::vector<wf::PatientRecord> records =
      wf::ingest(config.data_path, manifest);
  const wf::GroundTruth truth = wf::fit_ground_truth(records);
  const wf::BaselineScores baseline = wf::physician_baseline(records);

  const wf::ReplayConfig rcfg = to_replay_config(config);
  const wf::ReplayResult replay = wf::replay(records, truth, rcfg, config.seed);

  json per_perm = json::array();
  for (std::size_t p = 0; p < replay.per_permutation.size(); ++p) {
    json entry = summary_to_json(replay.per_permutation[p]);
    entry["info"] = info_to_json(replay.runs[p].info);
    per_perm.push_back(std::move(entry));
  }
  json summary;
  summary["mode"] = "warfarin";
  summary["records"] = records.size();
  summary["bucket_counts"] = truth.bucket_counts;
  summary["sigma_hat"] = truth.sigma_hat;
  summary["phi0"] = replay.phi0;
  summary["baseline"] = {
      {"risk_score", baseline.risk_score},
      {"fraction_incorrect", baseline.fraction_incorrect},
  };
  summary["aggregate"] = summary_to_json(replay.mean_summary);
  summary["per_permutation"] = std::move(per_perm);

  ExecResult result;
  result.dir = dir;
  write_steps_csv(dir / "steps.csv", replay.runs);
  result.files.push_back("steps.csv");
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  result.files.push_back("summary.json");
  write_curves_csv(dir / "curves.csv", replay.runs, config.epsilon,
                   config.gain_window);
  result.files.push_back("curves.csv");
  write_confusion_csv(dir / "confusion.csv", replay.mean_summary.confusion);
  result.files.push_back("confusion.csv");
  write_text(dir / "config.echo", to_json(config) + "\n");
  result.files.push_back("config.echo");
  return result;
}

}  // namespace

void validate(const RunConfig& c) {
  require(c.mode == "sim" || c.mode == "warfarin",
          "mode must be either 'sim' or 'warfarin'");
  require(c.setting >= 0 && c.setting <= 4, "setting must lie in 0..4");
  require(c.horizon >= 1, "horizon must be at least 1");
  require(c.num_arms >= 1, "num_arms must be at least 1");
  require(c.dim >= 1, "dim must be at least 1");
  require(c.noise_sigma > 0.0, "noise_sigma must be positive");
  require(c.epsilon >= 0.0 && c.epsilon < 1.0, "epsilon must lie in [0,1)");
  require(c.tau_prior > 0.0, "tau_prior must be positive");
  require(c.rho_prior > 0.0 && c.rho_prior <= 1.0, "rho_prior must lie in (0,1]");
  require(c.tau_post > 0.0, "tau_post must be positive");
  require(c.rho_post > 0.0 && c.rho_post <= 1.0, "rho_post must lie in (0,1]");
  require(c.prior_variance > 0.0, "prior_variance must be positive");
  require(c.special_prior_arm < c.num_arms, "special_prior_arm is out of range");
  require(c.n_override >= 0, "n_override must be nonnegative (0 means formula-sized)");
  parse_inflation(c.inflation);
  require(c.inflation_rate >= 0.0, "inflation_rate must be nonnegative");
  require(c.sampler == "box" || c.sampler == "sphere",
          "sampler must be either 'box' or 'sphere'");
  require(c.oracle == "truth" || c.oracle == "posterior",
          "oracle must be either 'truth' or 'posterior'");
  require(c.user_model == "compliant" || c.user_model == "myopic",
          "user_model must be either 'compliant' or 'myopic'");
  require(c.mspe == "analytic" || c.mspe == "cv",
          "mspe must be either 'analytic' or 'cv'");
  require(c.c3 > 0.0, "c3 must be positive");
  require(c.delta > 0.0 && c.delta < 1.0, "delta must lie in (0,1)");
  require(c.replications >= 1, "replications must be at least 1");
  require(!c.out_dir.empty(), "out_dir must not be empty");
  require(c.threads >= 0, "threads must be nonnegative (0 means auto)");
  require(c.gain_window >= 1, "gain_window must be at least 1");
  require(c.permutations >= 1, "permutations must be at least 1");
  require(std::isfinite(c.medium_prior_mean),
          "medium_prior_mean must be finite");
  if (c.mode == "warfarin") {
    require(!c.data_path.empty(), "data_path must point to the patient CSV export");
    require(!c.manifest_path.empty(),
            "manifest_path must point to the feature manifest JSON");
  }
}

void apply_setting(RunConfig& config, int setting) {
  const SettingPreset preset = make_setting(setting);
  config.setting = setting;
  config.horizon = preset.horizon;
  config.num_arms = preset.num_arms_choices.front();
  config.dim = preset.dim_choices.front();
  config.epsilon = preset.epsilon_choices.front();
  config.prior_variance = preset.prior_variance_choices.front();
  config.noise_sigma = preset.noise_sigma;
  config.tau_prior = preset.tau_prior;
  config.rho_prior = preset.rho_prior;
  config.tau_post = preset.tau_prior;
  config.rho_post = preset.rho_prior;
  config.special_prior_arm = preset.special_prior_arm;
  config.special_prior_mean = preset.special_prior_mean;
  config.n_override =
      preset.n_override_choices.empty() ? 0 : preset.n_override_choices.front();
  if (preset.schedule_choices.empty()) {
    config.inflation = "none";
    config.inflation_rate = 0.0;
  } else {
    config.inflation = inflation_name(preset.schedule_choices.front());
    if (config.inflation_rate == 0.0) config.inflation_rate = 0.01;
  }
}

std::string to_json(const RunConfig& c) {
  json j;
  j["mode"] = c.mode;
  j["setting"] = c.setting;
  j["horizon"] = c.horizon;
  j["num_arms"] = c.num_arms;
  j["dim"] = c.dim;
  j["noise_sigma"] = c.noise_sigma;
  j["epsilon"] = c.epsilon;
  j["tau_prior"] = c.tau_prior;
  j["rho_prior"] = c.rho_prior;
  j["tau_post"] = c.tau_post;
  j["rho_post"] = c.rho_post;
  j["prior_variance"] = c.prior_variance;
  j["special_prior_arm"] = c.special_prior_arm;
  j["special_prior_mean"] = c.special_prior_mean;
  j["n_override"] = c.n_override;
  j["inflation"] = c.inflation;
  j["inflation_rate"] = c.inflation_rate;
  j["inflation_from_cold_end"] = c.inflation_from_cold_end;
  j["sampler"] = c.sampler;
  j["oracle"] = c.oracle;
  j["user_model"] = c.user_model;
  j["ingest_deviant"] = c.ingest_deviant;
  j["strict_dbic"] = c.strict_dbic;
  j["mspe"] = c.mspe;
  j["c3"] = c.c3;
  j["delta"] = c.delta;
  j["replications"] = c.replications;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["threads"] = c.threads;
  j["gain_window"] = c.gain_window;
  j["data_path"] = c.data_path;
  j["manifest_path"] = c.manifest_path;
  j["permutations"] = c.permutations;
  j["medium_prior_mean"] = c.medium_prior_mean;
  return j.dump(2);
}

RunConfig from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config is not valid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw std::invalid_argument("config must be a JSON object");

  RunConfig c;
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "mode") c.mode = value.get<std::string>();
      else if (key == "setting") c.setting = value.get<int>();
      else if (key == "horizon") c.horizon = value.get<long>();
      else if (key == "num_arms") c.num_arms = value.get<int>();
      else if (key == "dim") c.dim = value.get<int>();
      else if (key == "noise_sigma") c.noise_sigma = value.get<double>();
      else if (key == "epsilon") c.epsilon = value.get<double>();
      else if (key == "tau_prior") c.tau_prior = value.get<double>();
      else if (key == "rho_prior") c.rho_prior = value.get<double>();
      else if (key == "tau_post") c.tau_post = value.get<double>();
      else if (key == "rho_post") c.rho_post = value.get<double>();
      else if (key == "prior_variance") c.prior_variance = value.get<double>();
      else if (key == "special_prior_arm") c.special_prior_arm = value.get<int>();
      else if (key == "special_prior_mean") c.special_prior_mean = value.get<double>();
      else if (key == "n_override") c.n_override = value.get<long>();
      else if (key == "inflation") c.inflation = value.get<std::string>();
      else if (key == "inflation_rate") c.inflation_rate = value.get<double>();
      else if (key == "inflation_from_cold_end") c.inflation_from_cold_end = value.get<bool>();
      else if (key == "sampler") c.sampler = value.get<std::string>();
      else if (key == "oracle") c.oracle = value.get<std::string>();
      else if (key == "user_model") c.user_model = value.get<std::string>();
      else if (key == "ingest_deviant") c.ingest_deviant = value.get<bool>();
      else if (key == "strict_dbic") c.strict_dbic = value.get<bool>();
      else if (key == "mspe") c.mspe = value.get<std::string>();
      else if (key == "c3") c.c3 = value.get<double>();
      else if (key == "delta") c.delta = value.get<double>();
      else if (key == "replications") c.replications = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "out_dir") c.out_dir = value.get<std::string>();
      else if (key == "threads") c.threads = value.get<int>();
      else if (key == "gain_window") c.gain_window = value.get<int>();
      else if (key == "data_path") c.data_path = value.get<std::string>();
      else if (key == "manifest_path") c.manifest_path = value.get<std::string>();
      else if (key == "permutations") c.permutations = value.get<int>();
      else if (key == "medium_prior_mean") c.medium_prior_mean = value.get<double>();
      else throw std::invalid_argument("unknown config key '" + key + "'");
    } catch (const json::exception& e) {
      throw std::invalid_argument("config key '" + key + "' has the wrong type: " +
                                  std::string(e.what()));
    }
  }
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json(text);
}

std::filesystem::path resolve_output_dir(const RunConfig& config) {
  std::filesystem::path dir(config.out_dir);
  if (dir.is_relative()) {
    if (const char* root = std::getenv("RCB_OUTPUT_ROOT")) {
      if (*root != '\0') dir = std::filesystem::path(root) / dir;
    }
  }
  return dir;
}

SimParams to_sim_params(const RunConfig& c) {
  SimParams p;
  p.horizon = c.horizon;
  p.num_arms = c.num_arms;
  p.dim = c.dim;
  p.noise_sigma = c.noise_sigma;
  p.epsilon = c.epsilon;
  p.tau_prior = c.tau_prior;
  p.rho_prior = c.rho_prior;
  p.tau_post = c.tau_post;
  p.rho_post = c.rho_post;
  p.prior_variance = c.prior_variance;
  p.special_prior_arm = c.special_prior_arm;
  p.special_prior_mean = c.special_prior_mean;
  if (c.n_override > 0) p.n_override = c.n_override;
  p.inflation.kind = parse_inflation(c.inflation);
  p.inflation.rate = c.inflation_rate;
  p.inflation_from_cold_end = c.inflation_from_cold_end;
  p.sampler = c.sampler == "sphere" ? CovariateSampler::sphere : CovariateSampler::box;
  p.user_mode = c.user_model == "myopic" ? UserResponseMode::myopic
                                         : UserResponseMode::compliant;
  p.ingest_deviant = c.ingest_deviant;
  p.oracle = c.oracle == "posterior" ? OracleMode::posterior : OracleMode::truth;
  p.mspe_estimator = c.mspe == "cv" ? MspeEstimatorKind::cross_validation
                                    : MspeEstimatorKind::analytic;
  p.c3 = c.c3;
  p.delta = c.delta;
  p.strict_dbic = c.strict_dbic;
  return p;
}

rcb::warfarin::ReplayConfig to_replay_config(const RunConfig& c) {
  rcb::warfarin::ReplayConfig r;
  r.epsilon = c.epsilon;
  r.prior_variance = c.prior_variance;
  r.medium_prior_mean = c.medium_prior_mean;
  r.tau_prior = c.tau_prior;
  r.rho_prior = c.rho_prior;
  r.tau_post = c.tau_post;
  r.rho_post = c.rho_post;
  if (c.n_override > 0) r.n_override = c.n_override;
  r.inflation.kind = parse_inflation(c.inflation);
  r.inflation.rate = c.inflation_rate;
  r.permutations = c.permutations;
  r.user_mode = c.user_model == "myopic" ? UserResponseMode::myopic
                                         : UserResponseMode::compliant;
  r.ingest_deviant = c.ingest_deviant;
  r.strict_dbic = c.strict_dbic;
  r.mspe_estimator = c.mspe == "cv" ? MspeEstimatorKind::cross_validation
                                    : MspeEstimatorKind::analytic;
  r.c3 = c.c3;
  r.threads = c.threads;
  return r;
}

ExecResult execute(const RunConfig& config) {
  validate(config);
  const std::filesystem::path dir = resolve_output_dir(config);
  std::filesystem::create_directories(dir);
  if (config.mode == "warfarin") return execute_warfarin(config, dir);
  return execute_sim(config, dir);
}

}  // namespace rcb::cli
