#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcb/linear_model.hpp"
#include "rcb/metrics.hpp"
#include "rcb/simulation.hpp"

namespace rcb::warfarin {

/// Width of the patient design vector built by the shipped column manifest.
inline constexpr int kFeatureCount = 70;

/// Daily-dose arms: Low under 3 mg/day, Medium 3 to 7 mg/day (both ends
/// included), High over 7 mg/day.
enum class DoseBucket : int { low = 0, medium = 1, high = 2 };

DoseBucket bucket_dose(double dose_mg_per_day);

struct DoseBounds {
  double min_dose = 0.0;
  double max_dose = 1.0;
};

/// Min-max scaling of a dose into [0,1] under dataset-wide bounds.
double scale_dose(double dose, const DoseBounds& bounds);

struct PatientRecord {
  Eigen::VectorXd features;  // finite; missing source values read as 0
  double optimal_dose_mg_per_day = 0.0;
  DoseBucket bucket = DoseBucket::low;
  double scaled_dose = 0.0;
};

/**
 * Declarative mapping from a raw CSV export to the design vector. Each entry
 * emits one feature:
 *  - numeric:   the cell parsed as a number (missing or unparseable -> 0)
 *  - indicator: 1 when the cell equals one of `match`
 *  - other:     1 when the cell is present but matches none of `match`
 *  - present:   1 when the cell is non-missing
 *  - missing:   1 when the cell is missing
 * Cells equal to "", "NA", "N/A" or "NaN" (any case, after trimming) count as
 * missing. The optimal dose is read from dose_column and divided by
 * dose_divisor to obtain mg/day.
 */
struct FeatureManifest {
  struct Column {
    std::string name;
    std::string source;
    std::string kind;
    std::vector<std::string> match;
  };
  std::vector<Column> features;
  std::string dose_column;
  double dose_divisor = 1.0;
};

/// Parses a manifest JSON file; validates kinds and the feature count.
FeatureManifest load_manifest(const std::string& path);

/// Builds patient records from a raw CSV export per the manifest. Rows whose
/// dose cell is missing, unparseable or nonpositive are dropped. Unknown
/// source columns are reported by name.
std::vector<PatientRecord> ingest(const std::string& csv_path,
                                  const FeatureManifest& manifest);

/**
 * Per-bucket linear ground truth fitted on the full dataset: least squares of
 * the scaled dose on the features over each bucket's own rows (buckets with
 * no rows get zero coefficients; a rank-deficient normal system falls back to
 * a tiny ridge). sigma_hat is the pooled residual root-mean-square error.
 */
struct GroundTruth {
  std::vector<Eigen::VectorXd> betas;  // low, medium, high
  DoseBounds bounds;
  double sigma_hat = 0.0;
  std::array<long, 3> bucket_counts{0, 0, 0};
};

GroundTruth fit_ground_truth(const std::vector<PatientRecord>& records);

/// Scores of the fixed always-Medium dosing rule on the dataset.
struct BaselineScores {
  double risk_score = 0.0;
  double fraction_incorrect = 0.0;
};

BaselineScores physician_baseline(const std::vector<PatientRecord>& records);

struct ReplayConfig {
  double epsilon = 0.025;
  double prior_variance = 0.4;
  double medium_prior_mean = 0.05;  // per-coordinate prior mean of the Medium arm
  double tau_prior = 0.005;
  double rho_prior = 0.95;
  double tau_post = 0.005;
  double rho_post = 0.95;
  /// Per-arm quota; defaults to ceil(T / 20) so the cold start fits the data.
  std::optional<long> n_override;
  InflationSchedule inflation{InflationKind::linear, 0.01};
  int permutations = 10;
  UserResponseMode user_mode = UserResponseMode::compliant;
  bool ingest_deviant = false;
  bool strict_dbic = false;
  MspeEstimatorKind mspe_estimator = MspeEstimatorKind::analytic;
  double c3 = 1.0;
  int threads = 0;  // 0: one per hardware thread, capped at the permutation count
};

struct ReplayResult {
  /// Doubles averaged over permutations; violation counts and the confusion
  /// table pooled across them.
  MetricsSummary mean_summary;
  std::vector<MetricsSummary> per_permutation;
  std::vector<RunResult> runs;  // one log per permutation, arrival order
  double phi0 = 0.0;            // empirical, floored at 1e-6
  double sigma_hat = 0.0;
};

/**
 * Offline replay: each permutation reshuffles patient arrivals, runs the full
 * two-stage protocol with learning reward 1{chosen bucket = true bucket} and
 * regret against the fitted scaled-dose means (wrong arms count as 0), then
 * results are averaged. Permutation p derives its streams from (seed, p), so
 * a fixed seed is bit-reproducible regardless of thread count.
 */
ReplayResult replay(const std::vector<PatientRecord>& records,
                    const GroundTruth& truth, const ReplayConfig& cfg,
                    std::uint64_t seed);

}  // namespace rcb::warfarin
