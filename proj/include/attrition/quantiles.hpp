#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "attrition/testing.hpp"

namespace attrition {

// H^t_{k,c}: the k-th sorted individual effect among treated units is at
// most c. kappa is the slack of the saturating effect gamma; any positive
// value gives the same p-value.
struct QuantileHypothesis {
  int k = 1;
  double c = 0.0;
  double kappa = 1.0;

  void validate(int n1) const;
};

enum class BandPopulation : std::uint8_t { Treated, Control, Observed, All };

std::string population_name(BandPopulation pop);

// One-sided simultaneous prediction/confidence limits: interval j is
// [lower[j], +inf) for the rank stored in ranks[j]; -inf marks an
// uninformative limit. `guarantee` is the joint coverage level.
struct QuantileBand {
  BandPopulation population = BandPopulation::Treated;
  double alpha = 0.1;
  double guarantee = 0.9;
  std::vector<int> ranks;
  std::vector<double> lower;
};

// Inputs of the multivariate-hypergeometric correction: target ranks
// k_1 < ... < k_J among all n units and observed ranks k'_1 <= ... <= k'_J
// within the |S| observed units.
struct DeltaHSpec {
  int n = 0;
  int n_observed = 0;
  std::vector<int> target_ranks;
  std::vector<int> observed_ranks;

  void validate() const;
};

struct DeltaHMethod {
  bool monte_carlo = false;
  std::int64_t draws = 100000;
  std::uint64_t seed = 0;
  int exact_max_targets = 12;
  int exact_max_n = 5000;
};

// The worst-case hypothesized effect vector over H^t_{k,c}: the
// L = min(n1 - k, n11) treated-observed units with the largest observed
// outcomes get the saturating effect gamma, everyone else gets c.
EffectVector xi_vector(const Dataset& ds, const QuantileHypothesis& hyp);

// Valid p-value for H^t_{k,c} under the general or monotone mechanisms, at
// the recommended b.
TestResult quantile_test(const Dataset& ds, const QuantileHypothesis& hyp,
                         Mechanism mech, const StatConfig& cfg,
                         const NullDistribution& null);

// Simultaneous one-sided prediction band for effect quantiles among treated
// (or, via label switching with the mechanism flipped, control) units.
// Limits are exact infima over the cross-arm breakpoint grid.
QuantileBand prediction_band(const Dataset& ds, Mechanism mech,
                             const StatConfig& cfg, double alpha,
                             NullCache& nulls,
                             BandPopulation population = BandPopulation::Treated,
                             double kappa = 1.0);

// Simultaneous band for effect quantiles among treated units with observed
// outcomes under sharp missingness or MAR: inference runs entirely inside S
// with the top L = n_S1 - k treated outcomes suppressed to -inf.
// `arm` selects treated (default) or, via label switching, control units.
QuantileBand band_observed_subsample(const Dataset& ds, const StatConfig& cfg,
                                     double alpha, Mechanism mech,
                                     NullCache& nulls,
                                     BandPopulation arm = BandPopulation::Treated);

// Pools treated-observed and control-observed bands into sorted nested
// intervals over S, prepends n_missing all-of-R intervals for unobserved
// units, and reports the 1 - 2*alpha joint guarantee.
QuantileBand combine_all_units_sharp(const QuantileBand& band_treated_obs,
                                     const QuantileBand& band_control_obs,
                                     int n_missing, double alpha);

// Failure probability of extrapolating observed-unit quantile bounds to all
// units under MAR. ExactDP runs the suffix-sum dynamic program over the
// multivariate hypergeometric; Monte Carlo samples the coloring draw.
double delta_H(const DeltaHSpec& spec, const DeltaHMethod& method = {});

// All-units confidence band under MAR: maps each target rank k_j to the
// S-band interval at k'_j (all of R when k'_j = 0); joint guarantee
// 1 - 2*alpha - delta_H.
QuantileBand band_all_units_mar(const Dataset& ds, const StatConfig& cfg,
                                double alpha,
                                const std::vector<int>& target_ranks,
                                const std::vector<int>& observed_ranks,
                                NullCache& nulls,
                                const DeltaHMethod& method = {});

// Greedy helper: largest common downward offset from the proportional map
// k'_j ~ k_j |S| / n keeping delta_H within budget. No optimality claim.
std::vector<int> suggest_observed_ranks(int n, int n_observed,
                                        const std::vector<int>& target_ranks,
                                        double budget,
                                        const DeltaHMethod& method = {});

}  // namespace attrition
