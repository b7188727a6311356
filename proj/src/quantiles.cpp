#include "attrition/quantiles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "attrition/detail/monotone_invert.hpp"
#include "attrition/errors.hpp"
#include "attrition/hypergeom.hpp"
#include "attrition/parallel.hpp"
#include "attrition/rng.hpp"

namespace attrition {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void QuantileHypothesis::validate(int n1) const {
  if (k < 1 || k > n1) {
    throw config_error("quantile rank k must lie in 1..n1");
  }
  if (!(kappa > 0.0)) throw config_error("kappa must be positive");
  if (!std::isfinite(c)) throw config_error("threshold c must be finite");
}

std::string population_name(BandPopulation pop) {
  switch (pop) {
    case BandPopulation::Treated: return "treated";
    case BandPopulation::Control: return "control";
    case BandPopulation::Observed: return "observed";
    case BandPopulation::All: return "all";
  }
  return "?";
}

void DeltaHSpec::validate() const {
  const std::size_t J = target_ranks.size();
  if (J == 0 || observed_ranks.size() != J) {
    throw config_error("delta_H: rank lists must be nonempty and aligned");
  }
  if (n_observed < 0 || n_observed > n || n < 1) {
    throw config_error("delta_H: need 0 <= |S| <= n");
  }
  for (std::size_t j = 0; j < J; ++j) {
    if (target_ranks[j] < 1 || target_ranks[j] > n) {
      throw config_error("delta_H: target ranks must lie in 1..n");
    }
    if (j > 0 && target_ranks[j] <= target_ranks[j - 1]) {
      throw config_error("delta_H: target ranks must be strictly increasing");
    }
    if (observed_ranks[j] < 0 || observed_ranks[j] > n_observed) {
      throw config_error("delta_H: observed ranks must lie in 0..|S|");
    }
    if (j > 0 && observed_ranks[j] < observed_ranks[j - 1]) {
      throw config_error("delta_H: observed ranks must be nondecreasing");
    }
  }
}

namespace {

// Treated-observed units sorted ascending by (observed outcome, index); the
// suffix of length L is the set J_L of the largest outcomes.
std::vector<int> treated_observed_sorted(const Dataset& ds) {
  std::vector<int> units;
  for (int i = 0; i < ds.n(); ++i) {
    if (ds.z()[i] && ds.observed(i)) units.push_back(i);
  }
  std::sort(units.begin(), units.end(), [&](int a, int b) {
    if (ds.y(a) != ds.y(b)) return ds.y(a) < ds.y(b);
    return a < b;
  });
  return units;
}

std::vector<double> cross_arm_breakpoints(const Dataset& ds) {
  std::vector<double> breaks;
  for (int i = 0; i < ds.n(); ++i) {
    if (!(ds.z()[i] && ds.observed(i))) continue;
    for (int j = 0; j < ds.n(); ++j) {
      if (ds.z()[j] || !ds.observed(j)) continue;
      breaks.push_back(ds.y(i) - ds.y(j));
    }
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  return breaks;
}

}  // namespace

EffectVector xi_vector(const Dataset& ds, const QuantileHypothesis& hyp) {
  hyp.validate(ds.n1());
  const std::vector<int> sorted = treated_observed_sorted(ds);
  const int n11 = static_cast<int>(sorted.size());
  const int L = std::min(ds.n1() - hyp.k, n11);
  double gamma = hyp.kappa;
  if (ds.n11() >= 1 && ds.n01() >= 1) {
    double max_to = -kInf, min_co = kInf;
    for (int i = 0; i < ds.n(); ++i) {
      if (!ds.observed(i)) continue;
      if (ds.z()[i]) max_to = std::max(max_to, ds.y(i));
      else min_co = std::min(min_co, ds.y(i));
    }
    gamma = max_to - min_co + hyp.kappa;
  }
  EffectVector xi = EffectVector::constant(ds.n(), hyp.c);
  for (int t = n11 - L; t < n11; ++t) xi.delta[sorted[t]] = gamma;
  return xi;
}

TestResult quantile_test(const Dataset& ds, const QuantileHypothesis& hyp,
                         Mechanism mech, const StatConfig& cfg,
                         const NullDistribution& null) {
  if (mech != Mechanism::General && mech != Mechanism::MonotonePos &&
      mech != Mechanism::MonotoneNeg) {
    throw config_error(
        "quantile_test covers general/monotone mechanisms; use "
        "band_observed_subsample under sharp or MAR");
  }
  return sharp_test(ds, xi_vector(ds, hyp), mech, cfg, null,
                    recommended_b(mech));
}

namespace {

QuantileBand treated_band_core(const Dataset& ds, Mechanism mech,
                               const StatConfig& cfg, double alpha,
                               NullCache& nulls, BandPopulation label,
                               double kappa) {
  const NullDistribution& null = nulls.get(DesignSpec{ds.n(), ds.n1()}, cfg);
  const std::vector<double> breaks = cross_arm_breakpoints(ds);
  QuantileBand band;
  band.population = label;
  band.alpha = alpha;
  band.guarantee = 1.0 - alpha;
  band.ranks.resize(ds.n1());
  band.lower.assign(ds.n1(), -kInf);
  std::iota(band.ranks.begin(), band.ranks.end(), 1);
  for (int k = 1; k <= ds.n1(); ++k) {
    const auto pval = [&](double c) {
      return quantile_test(ds, QuantileHypothesis{k, c, kappa}, mech, cfg,
                           null).p_value;
    };
    band.lower[k - 1] = detail::invert_monotone_lower(breaks, pval, alpha);
  }
  return band;
}

}  // namespace

QuantileBand prediction_band(const Dataset& ds, Mechanism mech,
                             const StatConfig& cfg, double alpha,
                             NullCache& nulls, BandPopulation population,
                             double kappa) {
  if (population == BandPopulation::Treated) {
    return treated_band_core(ds, mech, cfg, alpha, nulls, population, kappa);
  }
  if (population == BandPopulation::Control) {
    auto [switched, unused] =
        label_switch(ds, EffectVector::constant(ds.n(), 0.0));
    (void)unused;
    return treated_band_core(switched, switched_mechanism(mech), cfg, alpha,
                             nulls, BandPopulation::Control, kappa);
  }
  throw config_error(
      "prediction_band covers treated/control; use band_observed_subsample "
      "or combine_all_units_sharp for the other populations");
}

QuantileBand band_observed_subsample(const Dataset& ds, const StatConfig& cfg,
                                     double alpha, Mechanism mech,
                                     NullCache& nulls, BandPopulation arm) {
  if (mech != Mechanism::SharpMissing && mech != Mechanism::MAR) {
    throw config_error(
        "band_observed_subsample requires the sharp or MAR mechanism");
  }
  if (arm == BandPopulation::Control) {
    auto [switched, unused] =
        label_switch(ds, EffectVector::constant(ds.n(), 0.0));
    (void)unused;
    QuantileBand band = band_observed_subsample(switched, cfg, alpha, mech,
                                                nulls, BandPopulation::Treated);
    band.population = BandPopulation::Control;
    return band;
  }
  if (arm != BandPopulation::Treated) {
    throw config_error("band_observed_subsample covers treated/control arms");
  }

  auto [sub, index_map] = restrict_observed(ds);
  (void)index_map;
  const int nS = sub.n();
  const int nS1 = sub.n1();
  const NullDistribution& null = nulls.get(DesignSpec{nS, nS1}, cfg);
  const std::vector<int> sorted = treated_observed_sorted(sub);
  const std::vector<double> breaks = cross_arm_breakpoints(sub);

  QuantileBand band;
  band.population = BandPopulation::Treated;
  band.alpha = alpha;
  band.guarantee = 1.0 - alpha;
  band.ranks.resize(nS1);
  band.lower.assign(nS1, -kInf);
  std::iota(band.ranks.begin(), band.ranks.end(), 1);

  ExtVector y(static_cast<std::size_t>(nS));
  for (int k = 1; k <= nS1; ++k) {
    const int L = nS1 - k;
    const auto pval = [&](double c) {
      for (int s = 0; s < nS; ++s) {
        y[s] = ExtValue::finite(sub.y(s) - c * sub.z()[s]);
      }
      for (int t = static_cast<int>(sorted.size()) - L;
           t < static_cast<int>(sorted.size()); ++t) {
        y[sorted[t]] = ExtValue::neg_inf();
      }
      return null.tail_prob(
          statistic(std::span<const std::uint8_t>(sub.z()), y, cfg));
    };
    band.lower[k - 1] = detail::invert_monotone_lower(breaks, pval, alpha);
  }
  return band;
}

QuantileBand combine_all_units_sharp(const QuantileBand& band_treated_obs,
                                     const QuantileBand& band_control_obs,
                                     int n_missing, double alpha) {
  if (band_treated_obs.alpha != alpha || band_control_obs.alpha != alpha) {
    throw config_error("combine_all_units_sharp: band levels do not match");
  }
  if (n_missing < 0) throw config_error("n_missing must be nonnegative");
  QuantileBand out;
  out.population = BandPopulation::All;
  out.alpha = alpha;
  out.guarantee = 1.0 - 2.0 * alpha;
  out.lower.assign(static_cast<std::size_t>(n_missing), -kInf);
  out.lower.insert(out.lower.end(), band_treated_obs.lower.begin(),
                   band_treated_obs.lower.end());
  out.lower.insert(out.lower.end(), band_control_obs.lower.begin(),
                   band_control_obs.lower.end());
  // Sorting ascending makes interval k contain interval k+1.
  std::sort(out.lower.begin() + n_missing, out.lower.end());
  out.ranks.resize(out.lower.size());
  std::iota(out.ranks.begin(), out.ranks.end(), 1);
  return out;
}

double delta_H(const DeltaHSpec& spec, const DeltaHMethod& method) {
  spec.validate();
  const int n = spec.n;
  const int nS = spec.n_observed;
  const std::vector<int>& ks = spec.target_ranks;
  const std::vector<int>& kps = spec.observed_ranks;
  const int J = static_cast<int>(ks.size());

  if (!method.monte_carlo) {
    if (J > method.exact_max_targets || n > method.exact_max_n) {
      throw capacity_error(
          "delta_H: spec exceeds the exact-DP capacity (J <= " +
          std::to_string(method.exact_max_targets) + ", n <= " +
          std::to_string(method.exact_max_n) + "); use Monte Carlo");
    }
    // Suffix counts T_j = #sampled units with all-units rank > k_j. Walk j
    // from J down to 1; at each stage prune (and accumulate) the mass that
    // violates T_j <= nS - k'_j. With nothing pruned the result is exactly 0.
    std::vector<double> dist(static_cast<std::size_t>(nS) + 1, 0.0);
    double failed = 0.0;
    const int top = n - ks[J - 1];
    for (int t = 0; t <= nS; ++t) {
      dist[t] = hypergeom_pmf(n, top, nS, t);
    }
    for (int j = J; j >= 1; --j) {
      const int cap = nS - kps[j - 1];
      for (int t = cap + 1; t <= nS; ++t) {
        failed += dist[t];
        dist[t] = 0.0;
      }
      if (j == 1) break;
      // T_{j-1} = T_j + draws from the stratum (k_{j-1}, k_j], sampled from
      // the k_j units at or below rank k_j.
      const int stratum = ks[j - 1] - ks[j - 2];
      const int below = ks[j - 1];
      std::vector<double> next(static_cast<std::size_t>(nS) + 1, 0.0);
      for (int t = 0; t <= nS; ++t) {
        if (dist[t] == 0.0) continue;
        const int remaining = nS - t;
        const int hi = std::min(stratum, remaining);
        for (int h = 0; h <= hi; ++h) {
          const double w = hypergeom_pmf(below, stratum, remaining, h);
          if (w > 0.0) next[t + h] += dist[t] * w;
        }
      }
      dist.swap(next);
    }
    return std::min(1.0, failed);
  }

  // Monte Carlo over the coloring draw: sample which nS of the n sorted
  // units are observed and check the union event directly.
  const std::int64_t B = method.draws;
  if (B <= 0) throw config_error("delta_H Monte Carlo requires draws > 0");
  std::int64_t hits = 0;
  std::vector<int> scratch, subset;
  std::vector<int> suffix(static_cast<std::size_t>(J), 0);
  for (std::int64_t b = 0; b < B; ++b) {
    Rng rng(method.seed, static_cast<std::uint64_t>(b));
    sample_subset(rng, n, nS, scratch, subset);
    std::fill(suffix.begin(), suffix.end(), 0);
    for (const int x : subset) {
      const int rank = x + 1;
      // contributes to T_j for every j with k_j < rank
      const auto it = std::lower_bound(ks.begin(), ks.end(), rank);
      const int strictly_below = static_cast<int>(it - ks.begin());
      for (int j = 0; j < strictly_below; ++j) ++suffix[j];
    }
    bool fail = false;
    for (int j = 0; j < J && !fail; ++j) {
      fail = suffix[j] > nS - kps[j];
    }
    hits += fail ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(B);
}

QuantileBand band_all_units_mar(const Dataset& ds, const StatConfig& cfg,
                                double alpha,
                                const std::vector<int>& target_ranks,
                                const std::vector<int>& observed_ranks,
                                NullCache& nulls, const DeltaHMethod& method) {
  const QuantileBand treated = band_observed_subsample(
      ds, cfg, alpha, Mechanism::MAR, nulls, BandPopulation::Treated);
  const QuantileBand control = band_observed_subsample(
      ds, cfg, alpha, Mechanism::MAR, nulls, BandPopulation::Control);
  const QuantileBand pooled =
      combine_all_units_sharp(treated, control, 0, alpha);

  const int nS = static_cast<int>(pooled.lower.size());
  DeltaHSpec spec{ds.n(), nS, target_ranks, observed_ranks};
  spec.validate();
  const double correction = delta_H(spec, method);

  QuantileBand out;
  out.population = BandPopulation::All;
  out.alpha = alpha;
  out.guarantee = 1.0 - 2.0 * alpha - correction;
  out.ranks = target_ranks;
  out.lower.reserve(target_ranks.size());
  for (const int kp : observed_ranks) {
    out.lower.push_back(kp == 0 ? -kInf : pooled.lower[kp - 1]);
  }
  return out;
}

std::vector<int> suggest_observed_ranks(int n, int n_observed,
                                        const std::vector<int>& target_ranks,
                                        double budget,
                                        const DeltaHMethod& method) {
  if (!(budget >= 0.0)) throw config_error("budget must be nonnegative");
  const auto ranks_at_offset = [&](int offset) {
    std::vector<int> kps;
    kps.reserve(target_ranks.size());
    for (const int k : target_ranks) {
      const long prop =
          static_cast<long>(k) * static_cast<long>(n_observed) / n;
      kps.push_back(std::clamp<long>(prop - offset, 0, n_observed));
    }
    return kps;
  };
  const auto admissible = [&](int offset) {
    DeltaHSpec spec{n, n_observed, target_ranks, ranks_at_offset(offset)};
    return delta_H(spec, method) <= budget;
  };
  int lo = 0, hi = n_observed;
  if (admissible(lo)) return ranks_at_offset(lo);
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    if (admissible(mid)) hi = mid;
    else lo = mid + 1;
  }
  return ranks_at_offset(lo);
}

}  // namespace attrition
