#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "attrition/dataset.hpp"
#include "attrition/imputation.hpp"
#include "attrition/null_dist.hpp"
#include "attrition/quantiles.hpp"
#include "attrition/rank_stats.hpp"

// Brute-force implementations used by tests (and the hidden `oracle-check`
// CLI command) to certify the closed-form worst cases and the null
// enumeration on tiny instances. Deliberately naive: no Gray code, no
// incremental updates, no closed forms.

namespace attrition::oracle {

// All C(n, n1) assignments in lexicographic order.
void for_each_assignment(
    int n, int n1, const std::function<void(const std::vector<std::uint8_t>&)>& fn);

// Minimum of the statistic over every feasible completion of the unknown
// composite control potential outcomes, enumerated by insertion position
// (gaps between the sorted known values, plus the exact sentinel b where the
// mechanism permits it). Rank statistics depend only on relative order, and
// treated-to-treated order is immaterial, so the enumeration is exhaustive
// for instances whose known finite values are distinct. n <= 8.
double brute_force_worst_statistic(const Dataset& ds, const EffectVector& delta,
                                   Mechanism mech, const StatConfig& cfg,
                                   std::optional<CompositeB> b = std::nullopt);

// Naive enumeration of the permutation distribution of the statistic on a
// fixed outcome vector; sorted values. C(n, n1) <= 1e5.
std::vector<double> brute_force_null(const DesignSpec& design,
                                     const StatConfig& cfg, const ExtVector& y);

// Minimum of the statistic over hypothesized effect vectors in H^t_{k,c}
// (each treated-observed unit at c or at the saturating gamma, with at most
// n1 - k exceedances) jointly with the mechanism unknowns. n <= 7.
double brute_force_quantile_worst(const Dataset& ds,
                                  const QuantileHypothesis& hyp,
                                  Mechanism mech, const StatConfig& cfg);

}  // namespace attrition::oracle
