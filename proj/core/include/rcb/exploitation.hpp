#pragma once

#include <map>
#include <span>
#include <vector>

namespace rcb {

/// Epoch index m such that 2^(m-1) <= t < 2^m, for calendar round t >= 1.
int epoch_of(long t);

/// First round of epoch m (inclusive), i.e. tau_{m-1} = 2^(m-1).
long epoch_start(int m);

/// One past the last round of epoch m, i.e. tau_m = 2^m.
long epoch_end(int m);

/// Spread parameter gamma = 4 * sqrt(num_arms / mspe). Larger gamma
/// concentrates play on the predicted best arm.
double spread_parameter(int num_arms, double mspe);

/**
 * Inverse-gap-weighted play probabilities. The predicted best arm (ties to
 * the lowest index) receives the leftover mass, every other arm i receives
 * 1 / (K + gamma * (mu_best - mu_i)). The best arm's probability is always
 * at least 1/K and the vector sums to one.
 */
struct ActionDistribution {
  std::vector<double> probs;
  int best_arm = 0;
};

ActionDistribution action_distribution(std::span<const double> mu_hats,
                                       double gamma);

/// Inverse-CDF draw: cumulative sums in ascending arm order, u in [0, 1).
int sample_action(const ActionDistribution& dist, double u);

/// Record of the exploitation stage's fit schedule: first epoch index and the
/// spread parameter frozen for each epoch that performed a fit.
struct EpochSchedule {
  int m0 = 1;
  std::map<int, double> gammas;
};

}  // namespace rcb
