#pragma once

#include <utility>
#include <vector>

#include "attrition/dataset.hpp"
#include "attrition/ext_value.hpp"

namespace attrition {

// Hypothesized individual treatment effects, one entry per unit. Entries for
// units with z_i = 0 or m_i = 0 are carried but never affect any output.
struct EffectVector {
  std::vector<double> delta;

  static EffectVector constant(int n, double d) {
    return EffectVector{std::vector<double>(static_cast<std::size_t>(n), d)};
  }
  int size() const { return static_cast<int>(delta.size()); }
  double operator[](int i) const { return delta[i]; }

  void validate(int n) const;
};

// The composite constant b: the value a control composite outcome takes when
// the outcome would be missing under control. The recommended choices are
// the infinities, which need no special-casing here.
using CompositeB = ExtValue;

// Worst-case configuration of the (composite) control potential outcomes
// given the observed data, the hypothesized effects, the mechanism, and b.
// Per unit, by (z, m) cell:
//   General:      (1,1) min{Y-d, b}; (1,0) -inf; (0,1) Y; (0,0) b
//   MonotonePos:  (1,1) min{Y-d, b}; (1,0) b;    (0,1) Y; (0,0) b
//   MonotoneNeg:  (1,1) Y-d;         (1,0) -inf; (0,1) Y; (0,0) b
//   SharpMissing: (m=1) Y - d*z;     (m=0) b
// MAR has no worst-case configuration; use restrict_observed instead.
ExtVector worst_case(const Dataset& ds, const EffectVector& delta,
                     Mechanism mech, CompositeB b);

// The power-maximizing b for each mechanism: +inf except MonotoneNeg (-inf).
CompositeB recommended_b(Mechanism mech);

// Restriction to the units with observed outcomes (the set S), returned as a
// standalone dataset plus the map from S-positions to original indices.
// The sub-design has n = |S|, n1 = n11, n0 = n01.
std::pair<Dataset, std::vector<int>> restrict_observed(const Dataset& ds);

}  // namespace attrition
