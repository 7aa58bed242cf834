#include "rcb/exploitation.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace rcb {

int epoch_of(long t) {
  if (t < 1) throw std::invalid_argument("epoch_of: t must be at least 1");
  return static_cast<int>(std::bit_width(static_cast<unsigned long long>(t)));
}

long epoch_start(int m) {
  if (m < 1 || m > 62) throw std::invalid_argument("epoch_start: m out of range");
  return 1L << (m - 1);
}

long epoch_end(int m) {
  if (m < 1 || m > 62) throw std::invalid_argument("epoch_end: m out of range");
  return 1L << m;
}

double spread_parameter(int num_arms, double mspe) {
  if (num_arms < 1) {
    throw std::invalid_argument("spread_parameter: num_arms must be at least 1");
  }
  if (!(mspe > 0.0)) {
    throw std::invalid_argument("spread_parameter: mspe must be positive");
  }
  return 4.0 * std::sqrt(static_cast<double>(num_arms) / mspe);
}

ActionDistribution action_distribution(std::span<const double> mu_hats,
                                       double gamma) {
  const int k = static_cast<int>(mu_hats.size());
  if (k < 1) {
    throw std::invalid_argument("action_distribution: need at least one arm");
  }
  if (!(gamma > 0.0)) {
    throw std::invalid_argument("action_distribution: gamma must be positive");
  }
  int best = 0;
  for (int i = 1; i < k; ++i) {
    if (mu_hats[i] > mu_hats[best]) best = i;
  }
  ActionDistribution dist;
  dist.best_arm = best;
  dist.probs.assign(k, 0.0);
  double others = 0.0;
  for (int i = 0; i < k; ++i) {
    if (i == best) continue;
    dist.probs[i] = 1.0 / (k + gamma * (mu_hats[best] - mu_hats[i]));
    others += dist.probs[i];
  }
  dist.probs[best] = 1.0 - others;
  return dist;
}

int sample_action(const ActionDistribution& dist, double u) {
  if (!(u >= 0.0 && u < 1.0)) {
    throw std::invalid_argument("sample_action: u must lie in [0, 1)");
  }
  double cumulative = 0.0;
  const int k = static_cast<int>(dist.probs.size());
  for (int i = 0; i < k; ++i) {
    cumulative += dist.probs[i];
    if (u < cumulative) return i;
  }
  return k - 1;  // guards against cumulative rounding just below 1
}

}  // namespace rcb
