#include "rcb/warfarin.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "rcb/io.hpp"

namespace rcb::warfarin {

DoseBucket bucket_dose(double dose_mg_per_day) {
  if (!(dose_mg_per_day > 0.0)) {
    throw std::invalid_argument("dose must be positive (mg/day)");
  }
  if (dose_mg_per_day < 3.0) return DoseBucket::low;
  if (dose_mg_per_day <= 7.0) return DoseBucket::medium;
  return DoseBucket::high;
}

double scale_dose(double dose, const DoseBounds& bounds) {
  if (!(bounds.max_dose > bounds.min_dose)) {
    throw std::invalid_argument("scaling bounds must satisfy max > min");
  }
  return (dose - bounds.min_dose) / (bounds.max_dose - bounds.min_dose);
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool is_missing(const std::string& cell) {
  const std::string t = trim(cell);
  if (t.empty()) return true;
  std::string lower(t.size(), '\0');
  std::transform(t.begin(), t.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower == "na" || lower == "n/a" || lower == "nan";
}

bool parse_number(const std::string& cell, double& out) {
  const std::string t = trim(cell);
  if (t.empty()) return false;
  try {
    std::size_t pos = 0;
    const double v = std::stod(t, &pos);
    if (pos != t.size() || !std::isfinite(v)) return false;
    out = v;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

FeatureManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("manifest is not valid JSON: " + std::string(e.what()));
  }

  FeatureManifest manifest;
  manifest.dose_column = doc.at("dose_column").get<std::string>();
  manifest.dose_divisor = doc.value("dose_divisor", 1.0);
  if (!(manifest.dose_divisor > 0.0)) {
    throw std::runtime_error("manifest dose_divisor must be positive");
  }
  for (const auto& entry : doc.at("features")) {
    FeatureManifest::Column col;
    col.name = entry.at("name").get<std::string>();
    col.source = entry.at("source").get<std::string>();
    col.kind = entry.at("kind").get<std::string>();
    if (entry.contains("match")) {
      for (const auto& m : entry.at("match")) {
        col.match.push_back(m.get<std::string>());
      }
    }
    const bool known = col.kind == "numeric" || col.kind == "indicator" ||
                       col.kind == "other" || col.kind == "present" ||
                       col.kind == "missing";
    if (!known) {
      throw std::runtime_error("manifest feature '" + col.name +
                               "' has unknown kind '" + col.kind + "'");
    }
    if ((col.kind == "indicator" || col.kind == "other") && col.match.empty()) {
      throw std::runtime_error("manifest feature '" + col.name +
                               "' needs a non-empty match list");
    }
    manifest.features.push_back(std::move(col));
  }
  if (static_cast<int>(manifest.features.size()) != kFeatureCount) {
    throw std::runtime_error("manifest must define exactly " +
                             std::to_string(kFeatureCount) + " features, got " +
                             std::to_string(manifest.features.size()));
  }
  return manifest;
}

std::vector<PatientRecord> ingest(const std::string& csv_path,
                                  const FeatureManifest& manifest) {
  const CsvTable table = read_csv(csv_path);

  const int dose_col = table.column(manifest.dose_column);
  if (dose_col < 0) {
    throw std::runtime_error("CSV is missing the dose column '" +
                             manifest.dose_column + "'");
  }
  std::vector<int> src_cols;
  src_cols.reserve(manifest.features.size());
  for (const auto& feat : manifest.features) {
    const int c = table.column(feat.source);
    if (c < 0) {
      throw std::runtime_error("CSV is missing column '" + feat.source +
                               "' required by feature '" + feat.name + "'");
    }
    src_cols.push_back(c);
  }

  std::vector<PatientRecord> records;
  records.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    double dose_raw = 0.0;
    if (is_missing(row[static_cast<std::size_t>(dose_col)]) ||
        !parse_number(row[static_cast<std::size_t>(dose_col)], dose_raw)) {
      continue;
    }
    const double dose = dose_raw / manifest.dose_divisor;
    if (!(dose > 0.0)) continue;

    PatientRecord rec;
    rec.optimal_dose_mg_per_day = dose;
    rec.bucket = bucket_dose(dose);
    rec.features.resize(static_cast<Eigen::Index>(manifest.features.size()));
    for (std::size_t f = 0; f < manifest.features.size(); ++f) {
      const auto& feat = manifest.features[f];
      const std::string& cell = row[static_cast<std::size_t>(src_cols[f])];
      const bool missing = is_missing(cell);
      double value = 0.0;
      if (feat.kind == "numeric") {
        if (!missing) parse_number(cell, value);
      } else if (feat.kind == "indicator") {
        const std::string t = trim(cell);
        if (!missing &&
            std::find(feat.match.begin(), feat.match.end(), t) != feat.match.end()) {
          value = 1.0;
        }
      } else if (feat.kind == "other") {
        const std::string t = trim(cell);
        if (!missing &&
            std::find(feat.match.begin(), feat.match.end(), t) == feat.match.end()) {
          value = 1.0;
        }
      } else if (feat.kind == "present") {
        value = missing ? 0.0 : 1.0;
      } else {  // missing
        value = missing ? 1.0 : 0.0;
      }
      rec.features[static_cast<Eigen::Index>(f)] = value;
    }
    records.push_back(std::move(rec));
  }

  if (records.empty()) {
    throw std::runtime_error("no usable rows in " + csv_path +
                             " (every row lacks a dose)");
  }
  DoseBounds bounds;
  bounds.min_dose = records.front().optimal_dose_mg_per_day;
  bounds.max_dose = bounds.min_dose;
  for (const auto& rec : records) {
    bounds.min_dose = std::min(bounds.min_dose, rec.optimal_dose_mg_per_day);
    bounds.max_dose = std::max(bounds.max_dose, rec.optimal_dose_mg_per_day);
  }
  if (bounds.max_dose > bounds.min_dose) {
    for (auto& rec : records) {
      rec.scaled_dose = scale_dose(rec.optimal_dose_mg_per_day, bounds);
    }
  }
  return records;
}

GroundTruth fit_ground_truth(const std::vector<PatientRecord>& records) {
  if (records.empty()) throw std::invalid_argument("no records to fit");
  const Eigen::Index d = records.front().features.size();

  GroundTruth truth;
  truth.bounds.min_dose = records.front().optimal_dose_mg_per_day;
  truth.bounds.max_dose = truth.bounds.min_dose;
  for (const auto& rec : records) {
    truth.bounds.min_dose = std::min(truth.bounds.min_dose, rec.optimal_dose_mg_per_day);
    truth.bounds.max_dose = std::max(truth.bounds.max_dose, rec.optimal_dose_mg_per_day);
    ++truth.bucket_counts[static_cast<std::size_t>(rec.bucket)];
  }

  truth.betas.assign(3, Eigen::VectorXd::Zero(d));
  double sq_residual = 0.0;
  long fitted_rows = 0;
  for (int b = 0; b < 3; ++b) {
    std::vector<const PatientRecord*> rows;
    for (const auto& rec : records) {
      if (static_cast<int>(rec.bucket) == b) rows.push_back(&rec);
    }
    if (rows.empty()) continue;

    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(d);
    for (const auto* rec : rows) {
      xtx.noalias() += rec->features * rec->features.transpose();
      xty.noalias() += rec->features * rec->scaled_dose;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(xtx);
    Eigen::VectorXd beta;
    if (llt.info() == Eigen::Success) {
      beta = llt.solve(xty);
    } else {
      // rank-deficient normal system: tiny ridge keeps it solvable
      const double ridge = 1e-8 * std::max(1.0, xtx.trace() / static_cast<double>(d));
      beta = (xtx + ridge * Eigen::MatrixXd::Identity(d, d)).llt().solve(xty);
    }
    truth.betas[static_cast<std::size_t>(b)] = beta;
    for (const auto* rec : rows) {
      const double r = rec->scaled_dose - rec->features.dot(beta);
      sq_residual += r * r;
    }
    fitted_rows += static_cast<long>(rows.size());
  }
  truth.sigma_hat =
      fitted_rows > 0 ? std::sqrt(sq_residual / static_cast<double>(fitted_rows)) : 0.0;
  return truth;
}

BaselineScores physician_baseline(const std::vector<PatientRecord>& records) {
  if (records.empty()) throw std::invalid_argument("no records to score");
  std::array<double, 3> proportions{0.0, 0.0, 0.0};
  for (const auto& rec : records) {
    proportions[static_cast<std::size_t>(rec.bucket)] += 1.0;
  }
  for (auto& p : proportions) p /= static_cast<double>(records.size());

  // Always-Medium is right exactly on the Medium class.
  const std::vector<double> props(proportions.begin(), proportions.end());
  const std::vector<double> accuracy{0.0, 1.0, 0.0};
  BaselineScores scores;
  scores.risk_score = weighted_risk_score(props, accuracy);
  scores.fraction_incorrect = 1.0 - proportions[1];
  return scores;
}

namespace {

double empirical_phi0(const std::vector<PatientRecord>& records) {
  const Eigen::Index d = records.front().features.size();
  Eigen::MatrixXd second_moment = Eigen::MatrixXd::Zero(d, d);
  for (const auto& rec : records) {
    second_moment.noalias() += rec.features * rec.features.transpose();
  }
  second_moment /= static_cast<double>(records.size());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(second_moment);
  return std::max(solver.eigenvalues().minCoeff(), 1e-6);
}

RunResult replay_one(const std::vector<PatientRecord>& records,
                     const GroundTruth& truth, const ReplayConfig& cfg,
                     double phi0, double model_sigma, std::uint64_t perm_seed) {
  const long T = static_cast<long>(records.size());
  const int d = static_cast<int>(records.front().features.size());

  Rng env_rng(Rng::derive(perm_seed, 0));
  Rng algo_rng(Rng::derive(perm_seed, 1));

  // Fisher-Yates shuffle of arrival order, driven by the environment stream.
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(env_rng.uniform01() * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }

  ProtocolConfig pcfg;
  pcfg.horizon = T;
  pcfg.num_arms = 3;
  pcfg.dim = d;
  pcfg.noise_sigma = model_sigma;
  pcfg.epsilon = cfg.epsilon;
  pcfg.tau_prior = cfg.tau_prior;
  pcfg.rho_prior = cfg.rho_prior;
  pcfg.tau_post = cfg.tau_post;
  pcfg.rho_post = cfg.rho_post;
  pcfg.phi0 = phi0;
  pcfg.n_override = cfg.n_override.value_or((T + 19) / 20);
  pcfg.inflation = cfg.inflation;
  pcfg.inflation_from_cold_end = true;
  pcfg.user_mode = cfg.user_mode;
  pcfg.ingest_deviant = cfg.ingest_deviant;
  pcfg.oracle = OracleMode::truth;
  pcfg.mspe_estimator = cfg.mspe_estimator;
  pcfg.c3 = cfg.c3;

  const Eigen::MatrixXd cov = cfg.prior_variance * Eigen::MatrixXd::Identity(d, d);
  for (int arm = 0; arm < 3; ++arm) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    if (arm == static_cast<int>(DoseBucket::medium)) {
      mean.setConstant(cfg.medium_prior_mean);
    }
    pcfg.priors.push_back(make_arm_belief(std::move(mean), cov, model_sigma));
  }

  const auto patient_at = [&](long t) -> const PatientRecord& {
    return records[order[static_cast<std::size_t>(t - 1)]];
  };

  EnvironmentHooks hooks;
  // next_context runs exactly once per round, before the reward draw, so the
  // cursor always names the arriving patient.
  long cursor = 1;
  hooks.next_context = [&](long t) {
    cursor = t;
    return patient_at(t).features;
  };
  hooks.realize_reward = [&](const Eigen::VectorXd&, int arm) {
    return arm == static_cast<int>(patient_at(cursor).bucket) ? 1.0 : 0.0;
  };
  hooks.true_means = [&](long t, const Eigen::VectorXd& x) {
    const PatientRecord& rec = patient_at(t);
    std::vector<double> means(3, 0.0);
    const auto b = static_cast<std::size_t>(rec.bucket);
    means[b] = x.dot(truth.betas[b]);
    return means;
  };
  hooks.oracle_label = [&](long t) { return static_cast<int>(patient_at(t).bucket); };

  return run_protocol(pcfg, hooks, algo_rng);
}

}  // namespace

ReplayResult replay(const std::vector<PatientRecord>& records,
                    const GroundTruth& truth, const ReplayConfig& cfg,
                    std::uint64_t seed) {
  if (records.empty()) throw std::invalid_argument("no records to replay");
  if (cfg.permutations < 1) {
    throw std::invalid_argument("permutations must be at least 1");
  }
  if (static_cast<int>(records.front().features.size()) == 0) {
    throw std::invalid_argument("records carry empty feature vectors");
  }
  if (truth.betas.size() != 3) {
    throw std::invalid_argument("ground truth must carry three coefficient vectors");
  }

  ReplayResult result;
  result.phi0 = empirical_phi0(records);
  result.sigma_hat = truth.sigma_hat;
  const double model_sigma = std::max(truth.sigma_hat, 1e-6);

  result.runs.resize(static_cast<std::size_t>(cfg.permutations));
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int workers =
      std::max(1, std::min(cfg.permutations, cfg.threads > 0 ? cfg.threads
                                                             : std::max(1, hw)));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        int p;
        while ((p = next.fetch_add(1)) < cfg.permutations) {
          result.runs[static_cast<std::size_t>(p)] =
              replay_one(records, truth, cfg, result.phi0, model_sigma,
                         Rng::derive(seed, static_cast<std::uint64_t>(p)));
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
  opts.epsilon = cfg.epsilon;
  opts.num_arms = 3;
  opts.strict_dbic = cfg.strict_dbic;
  opts.confusion_classes = 3;

  MetricsSummary& mean = result.mean_summary;
  mean.confusion.counts = Eigen::MatrixXd::Zero(3, 3);
  double sum_regret = 0.0;
  double sum_incorrect = 0.0;
  long violations = 0;
  long counted = 0;
  for (const auto& run : result.runs) {
    MetricsSummary s = summarize(run.log, opts);
    sum_regret += s.cumulative_regret;
    sum_incorrect += s.fraction_incorrect;
    violations += s.violation_rounds;
    counted += s.counted_rounds;
    mean.confusion.counts += s.confusion.counts;
    result.per_permutation.push_back(std::move(s));
  }
  const double perms = static_cast<double>(cfg.permutations);
  mean.cumulative_regret = sum_regret / perms;
  mean.fraction_incorrect = sum_incorrect / perms;
  mean.violation_rounds = violations;
  mean.counted_rounds = counted;
  mean.violation_fraction =
      counted > 0 ? static_cast<double>(violations) / static_cast<double>(counted) : 0.0;
  mean.risk_score = weighted_risk_score(mean.confusion.class_proportions(),
                                        mean.confusion.class_accuracy());
  return result;
}

}  // namespace rcb::warfarin
