#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rcb/simulation.hpp"
#include "rcb/warfarin.hpp"

namespace rcb::cli {

/**
 * Flat, fully-serializable description of one experiment. Every field has a
 * validated default; the resolved bundle is echoed to the output directory as
 * config.echo (JSON) and re-running from that echo reproduces every output
 * byte to byte.
 */
struct RunConfig {
  std::string mode = "sim";  // "sim" or "warfarin"
  int setting = 0;           // 1..4 applies a preset; 0 uses the fields below

  long horizon = 100000;
  int num_arms = 2;
  int dim = 3;
  double noise_sigma = 0.05;
  double epsilon = 0.05;
  double tau_prior = 0.01;
  double rho_prior = 0.95;
  double tau_post = 0.01;
  double rho_post = 0.95;
  double prior_variance = 0.2;
  int special_prior_arm = -1;
  double special_prior_mean = 0.0;
  long n_override = 0;  // 0: formula-sized quota
  std::string inflation = "none";  // none | linear | sqrt | log
  double inflation_rate = 0.0;
  bool inflation_from_cold_end = false;
  std::string sampler = "box";          // box | sphere
  std::string oracle = "truth";         // truth | posterior
  std::string user_model = "compliant"; // compliant | myopic
  bool ingest_deviant = false;
  bool strict_dbic = false;
  std::string mspe = "analytic";  // analytic | cv
  double c3 = 1.0;
  double delta = 0.05;
  int replications = 1;
  std::uint64_t seed = 1;
  std::string out_dir = "rcb-out";
  int threads = 0;      // 0: one worker per hardware thread
  int gain_window = 100;  // rolling-mean window of the gain curve

  // warfarin mode
  std::string data_path;
  std::string manifest_path;
  int permutations = 10;
  double medium_prior_mean = 0.05;
};

/// Validates every field; throws std::invalid_argument naming the field and
/// its constraint.
void validate(const RunConfig& config);

/// Overwrites the experiment-shape fields with a preset's first choices
/// (individual flags can then override them).
void apply_setting(RunConfig& config, int setting);

/// Serializes the full bundle as pretty JSON (the config.echo format).
std::string to_json(const RunConfig& config);

/// Parses a config.echo-style JSON document. Unknown keys are rejected.
RunConfig from_json(const std::string& text);

RunConfig load_config_file(const std::string& path);

/// Resolves out_dir against the RCB_OUTPUT_ROOT environment variable
/// (relative paths are placed under it when it is set).
std::filesystem::path resolve_output_dir(const RunConfig& config);

struct ExecResult {
  std::filesystem::path dir;
  std::vector<std::string> files;  // names written, in order
};

/**
 * Runs the experiment and writes steps.csv, summary.json, curves.csv and
 * config.echo (plus confusion.csv in warfarin mode) into the resolved output
 * directory. Replications fan out across threads; outputs are merged in
 * replication order, so bytes depend only on (config, seed).
 */
ExecResult execute(const RunConfig& config);

/// The simulation parameter bundle a sim-mode config resolves to.
SimParams to_sim_params(const RunConfig& config);

/// The replay bundle a warfarin-mode config resolves to.
rcb::warfarin::ReplayConfig to_replay_config(const RunConfig& config);

}  // namespace rcb::cli
