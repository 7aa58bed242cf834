#include "rcb/cold_start.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rcb {

void validate(const ColdStartConfig& cfg) {
  if (cfg.num_arms < 1) {
    throw std::invalid_argument("ColdStartConfig: num_arms must be at least 1");
  }
  if (cfg.dim < 1) {
    throw std::invalid_argument("ColdStartConfig: dim must be at least 1");
  }
  if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0)) {
    throw std::invalid_argument("ColdStartConfig: epsilon must lie in [0, 1]");
  }
  if (!(cfg.tau_prior > 0.0)) {
    throw std::invalid_argument("ColdStartConfig: tau_prior must be positive");
  }
  if (!(cfg.rho_prior > 0.0 && cfg.rho_prior <= 1.0)) {
    throw std::invalid_argument("ColdStartConfig: rho_prior must lie in (0, 1]");
  }
  if (!(cfg.tau_post > 0.0)) {
    throw std::invalid_argument("ColdStartConfig: tau_post must be positive");
  }
  if (!(cfg.rho_post > 0.0 && cfg.rho_post <= 1.0)) {
    throw std::invalid_argument("ColdStartConfig: rho_post must lie in (0, 1]");
  }
  if (!(cfg.phi0 > 0.0)) {
    throw std::invalid_argument("ColdStartConfig: phi0 must be positive");
  }
  if (cfg.noise_sigma < 0.0) {
    throw std::invalid_argument("ColdStartConfig: noise_sigma must be nonnegative");
  }
  if (cfg.n_override && *cfg.n_override < 1) {
    throw std::invalid_argument("ColdStartConfig: n_override must be at least 1");
  }
}

long required_sample_size(const ColdStartConfig& cfg) {
  validate(cfg);
  if (cfg.n_override) return *cfg.n_override;
  const double k = static_cast<double>(cfg.num_arms);
  const double numerator =
      (cfg.noise_sigma * cfg.noise_sigma * cfg.dim + 1.0) * k * k * k;
  const double gap = cfg.tau_post + cfg.epsilon;
  const double denominator = cfg.phi0 * gap * gap;
  return static_cast<long>(std::ceil(numerator / denominator));
}

double required_exploration_rate(const ColdStartConfig& cfg) {
  validate(cfg);
  return 1.0 + (1.0 - cfg.epsilon) /
                   (cfg.tau_prior * cfg.rho_prior + cfg.epsilon);
}

int m0_epoch(long n) {
  if (n < 1) throw std::invalid_argument("m0_epoch: n must be at least 1");
  // ceil(2 + log2 n) = 2 + ceil(log2 n), computed exactly on integers
  const auto u = static_cast<unsigned long long>(n);
  return 2 + static_cast<int>(std::bit_width(u - 1));
}

namespace {

int argmax_lowest(std::span<const double> values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace

ColdStartState::ColdStartState(int num_arms, long target)
    : target_(target),
      pulls_(num_arms, 0),
      completed_(num_arms, 0),
      samples_(num_arms) {
  if (num_arms < 1) {
    throw std::invalid_argument("ColdStartState: num_arms must be at least 1");
  }
  if (target < 1) {
    throw std::invalid_argument("ColdStartState: target must be at least 1");
  }
}

std::vector<ArmObservation> ColdStartState::all_samples() const {
  std::vector<ArmObservation> out;
  for (int arm = 0; arm < num_arms(); ++arm) {
    for (const auto& o : samples_[arm]) out.push_back({o.x, arm, o.y});
  }
  return out;
}

int ColdStartState::mpasc_arm(std::span<const double> prior_means) const {
  if (static_cast<int>(prior_means.size()) != num_arms()) {
    throw std::invalid_argument("mpasc_arm: prior_means size mismatch");
  }
  return argmax_lowest(prior_means);
}

int ColdStartState::promoted_arm(std::span<const double> prior_means) const {
  if (static_cast<int>(prior_means.size()) != num_arms()) {
    throw std::invalid_argument("promoted_arm: prior_means size mismatch");
  }
  int best = -1;
  for (int i = 0; i < num_arms(); ++i) {
    if (completed_[i]) continue;
    if (best < 0 || prior_means[i] > prior_means[best]) best = i;
  }
  if (best < 0) {
    throw std::logic_error("promoted_arm: no incomplete arm remains");
  }
  return best;
}

int ColdStartState::organic_arm(std::span<const ArmBelief> beliefs,
                                const Eigen::VectorXd& x) const {
  if (static_cast<int>(beliefs.size()) != num_arms()) {
    throw std::invalid_argument("organic_arm: beliefs size mismatch");
  }
  int best = 0;
  double best_value = predict_mean(beliefs[0], x);
  for (int i = 1; i < num_arms(); ++i) {
    double v = predict_mean(beliefs[i], x);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

void ColdStartState::record_pull(int arm, Observation obs) {
  if (arm < 0 || arm >= num_arms()) {
    throw std::invalid_argument("record_pull: arm index out of range");
  }
  if (phase_ == ColdStartPhase::done) {
    throw std::logic_error("record_pull: cold start already finished");
  }
  if (completed_[arm]) {
    throw std::logic_error("record_pull: arm " + std::to_string(arm) +
                           " already completed");
  }
  samples_[arm].push_back(std::move(obs));
  ++pulls_[arm];
  if (pulls_[arm] >= target_) {
    completed_[arm] = 1;
    completed_list_.push_back(arm);
    std::sort(completed_list_.begin(), completed_list_.end());
    const bool all_done =
        static_cast<int>(completed_list_.size()) == num_arms();
    phase_ = all_done ? ColdStartPhase::done : ColdStartPhase::rasc;
  }
}

std::pair<int, ColdStartState> mpasc_step(const ColdStartState& state,
                                          const Eigen::VectorXd& x,
                                          std::span<const double> prior_means,
                                          const RewardSource& rewards) {
  if (state.phase() != ColdStartPhase::mpasc) {
    throw std::logic_error("mpasc_step: state is not in the deterministic phase");
  }
  ColdStartState next = state;
  const int arm = next.mpasc_arm(prior_means);
  next.record_pull(arm, {x, rewards(arm)});
  return {arm, std::move(next)};
}

std::pair<int, ColdStartState> rasc_step(const ColdStartState& state,
                                         const Eigen::VectorXd& x,
                                         bool promoted_draw,
                                         std::span<const double> prior_means,
                                         std::span<const ArmBelief> beliefs,
                                         const RewardSource& rewards) {
  if (state.phase() != ColdStartPhase::rasc) {
    throw std::logic_error("rasc_step: state is not in the randomized phase");
  }
  ColdStartState next = state;
  if (promoted_draw) {
    const int arm = next.promoted_arm(prior_means);
    next.record_pull(arm, {x, rewards(arm)});
    return {arm, std::move(next)};
  }
  const int arm = next.organic_arm(beliefs, x);
  return {arm, std::move(next)};
}

}  // namespace rcb
