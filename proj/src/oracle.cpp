#include "attrition/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "attrition/errors.hpp"

namespace attrition::oracle {

void for_each_assignment(
    int n, int n1,
    const std::function<void(const std::vector<std::uint8_t>&)>& fn) {
  std::vector<int> comb(n1);
  for (int i = 0; i < n1; ++i) comb[i] = i;
  std::vector<std::uint8_t> z(static_cast<std::size_t>(n), 0);
  while (true) {
    std::fill(z.begin(), z.end(), 0);
    for (const int i : comb) z[i] = 1;
    fn(z);
    int pos = n1 - 1;
    while (pos >= 0 && comb[pos] == n - n1 + pos) --pos;
    if (pos < 0) break;
    ++comb[pos];
    for (int q = pos + 1; q < n1; ++q) comb[q] = comb[q - 1] + 1;
  }
}

namespace {

enum class Cell : std::uint8_t { Fixed, Binary, Free };

struct UnitSpec {
  Cell cell = Cell::Fixed;
  ExtValue fixed;        // Fixed value, or the current choice during search
  ExtValue alt_a, alt_b; // Binary choices
};

// Candidate values for a Free coordinate: one value inside every gap of the
// sorted distinct finite knowns, plus the exact sentinel b when feasible.
std::vector<ExtValue> free_candidates(const std::vector<double>& finite_known,
                                      CompositeB b) {
  std::vector<double> sorted(finite_known);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<ExtValue> cands;
  if (sorted.empty()) {
    cands.push_back(ExtValue::finite(0.0));
  } else {
    cands.push_back(ExtValue::finite(sorted.front() - 1.0));
    for (std::size_t g = 0; g + 1 < sorted.size(); ++g) {
      cands.push_back(ExtValue::finite(0.5 * (sorted[g] + sorted[g + 1])));
    }
    cands.push_back(ExtValue::finite(sorted.back() + 1.0));
  }
  if (!b.is_finite()) cands.push_back(b);
  return cands;
}

double min_over_completions(const Dataset& ds, std::vector<UnitSpec>& units,
                            const StatConfig& cfg, CompositeB b) {
  const int n = ds.n();
  std::vector<int> binary_idx, free_idx;
  std::vector<double> finite_known;
  for (int i = 0; i < n; ++i) {
    switch (units[i].cell) {
      case Cell::Fixed:
        if (units[i].fixed.is_finite()) finite_known.push_back(units[i].fixed.raw());
        break;
      case Cell::Binary:
        binary_idx.push_back(i);
        if (units[i].alt_a.is_finite()) finite_known.push_back(units[i].alt_a.raw());
        if (units[i].alt_b.is_finite()) finite_known.push_back(units[i].alt_b.raw());
        break;
      case Cell::Free:
        free_idx.push_back(i);
        break;
    }
  }
  const std::vector<ExtValue> cands = free_candidates(finite_known, b);

  const std::size_t nb = binary_idx.size();
  const std::size_t nf = free_idx.size();
  double total_configs = std::ldexp(1.0, static_cast<int>(nb));
  for (std::size_t f = 0; f < nf; ++f) total_configs *= static_cast<double>(cands.size());
  if (total_configs > 4e6) {
    throw capacity_error("oracle: completion space too large");
  }

  ExtVector y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) y[i] = units[i].fixed;

  double best = std::numeric_limits<double>::infinity();
  const std::span<const std::uint8_t> z(ds.z());
  std::vector<std::size_t> free_choice(nf, 0);
  for (std::uint64_t mask = 0; mask < (1ull << nb); ++mask) {
    for (std::size_t bi = 0; bi < nb; ++bi) {
      y[binary_idx[bi]] =
          (mask >> bi) & 1 ? units[binary_idx[bi]].alt_b : units[binary_idx[bi]].alt_a;
    }
    std::fill(free_choice.begin(), free_choice.end(), 0);
    while (true) {
      for (std::size_t f = 0; f < nf; ++f) y[free_idx[f]] = cands[free_choice[f]];
      best = std::min(best, statistic(z, y, cfg));
      std::size_t f = 0;
      while (f < nf && ++free_choice[f] == cands.size()) {
        free_choice[f] = 0;
        ++f;
      }
      if (f == nf) break;
    }
  }
  return best;
}

std::vector<UnitSpec> classify_units(const Dataset& ds,
                                     const EffectVector& delta, Mechanism mech,
                                     CompositeB b) {
  const int n = ds.n();
  std::vector<UnitSpec> units(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const bool z = ds.z()[i] != 0;
    const bool m = ds.observed(i);
    UnitSpec& u = units[i];
    if (!z && m) {
      u.cell = Cell::Fixed;
      u.fixed = ExtValue::finite(ds.y(i));
    } else if (!z && !m) {
      u.cell = Cell::Fixed;
      u.fixed = b;
    } else if (z && m) {
      const ExtValue shifted = ExtValue::finite(ds.y(i) - delta[i]);
      if (mech == Mechanism::General || mech == Mechanism::MonotonePos) {
        u.cell = Cell::Binary;
        u.alt_a = shifted;
        u.alt_b = b;
      } else {  // MonotoneNeg, SharpMissing: M_i(0) pinned to 1
        u.cell = Cell::Fixed;
        u.fixed = shifted;
      }
    } else {  // z && !m
      if (mech == Mechanism::MonotonePos || mech == Mechanism::SharpMissing) {
        u.cell = Cell::Fixed;  // M_i(0) pinned to 0
        u.fixed = b;
      } else {
        u.cell = Cell::Free;  // any real, or exactly b
      }
    }
  }
  return units;
}

}  // namespace

double brute_force_worst_statistic(const Dataset& ds, const EffectVector& delta,
                                   Mechanism mech, const StatConfig& cfg,
                                   std::optional<CompositeB> b) {
  if (mech == Mechanism::MAR) {
    throw config_error("oracle: MAR has no worst-case completion");
  }
  if (ds.n() > 8) throw capacity_error("oracle: worst-case search caps at n = 8");
  delta.validate(ds.n());
  const CompositeB bb = b.value_or(recommended_b(mech));
  std::vector<UnitSpec> units = classify_units(ds, delta, mech, bb);
  return min_over_completions(ds, units, cfg, bb);
}

std::vector<double> brute_force_null(const DesignSpec& design,
                                     const StatConfig& cfg, const ExtVector& y) {
  design.validate();
  if (static_cast<int>(y.size()) != design.n) {
    throw config_error("oracle: outcome length does not match design");
  }
  const auto count = design.assignment_count(100000);
  if (!count) throw capacity_error("oracle: null enumeration caps at 1e5");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(*count));
  for_each_assignment(design.n, design.n1,
                      [&](const std::vector<std::uint8_t>& z) {
                        values.push_back(statistic(
                            std::span<const std::uint8_t>(z), y, cfg));
                      });
  std::sort(values.begin(), values.end());
  return values;
}

double brute_force_quantile_worst(const Dataset& ds,
                                  const QuantileHypothesis& hyp,
                                  Mechanism mech, const StatConfig& cfg) {
  if (ds.n() > 7) throw capacity_error("oracle: quantile search caps at n = 7");
  hyp.validate(ds.n1());
  // gamma exactly as the closed form defines it, so the oracle explores the
  // same {c, gamma} grid the closed form optimizes over.
  double gamma = hyp.kappa;
  if (ds.n11() >= 1 && ds.n01() >= 1) {
    double max_to = -std::numeric_limits<double>::infinity();
    double min_co = std::numeric_limits<double>::infinity();
    for (int i = 0; i < ds.n(); ++i) {
      if (!ds.observed(i)) continue;
      if (ds.z()[i]) max_to = std::max(max_to, ds.y(i));
      else min_co = std::min(min_co, ds.y(i));
    }
    gamma = max_to - min_co + hyp.kappa;
  }
  std::vector<int> treated_obs;
  for (int i = 0; i < ds.n(); ++i) {
    if (ds.z()[i] && ds.observed(i)) treated_obs.push_back(i);
  }
  const int n11 = static_cast<int>(treated_obs.size());
  const int L = std::min(ds.n1() - hyp.k, n11);

  double best = std::numeric_limits<double>::infinity();
  const std::uint64_t subsets = 1ull << n11;
  for (std::uint64_t mask = 0; mask < subsets; ++mask) {
    if (__builtin_popcountll(mask) > L) continue;
    EffectVector delta = EffectVector::constant(ds.n(), hyp.c);
    for (int t = 0; t < n11; ++t) {
      if ((mask >> t) & 1) delta.delta[treated_obs[t]] = gamma;
    }
    best = std::min(best,
                    brute_force_worst_statistic(ds, delta, mech, cfg));
  }
  return best;
}

}  // namespace attrition::oracle
