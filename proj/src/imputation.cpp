#include "attrition/imputation.hpp"

#include <cmath>

#include "attrition/errors.hpp"

namespace attrition {

void EffectVector::validate(int n) const {
  if (size() != n) {
    throw config_error("EffectVector length " + std::to_string(size()) +
                       " does not match n = " + std::to_string(n));
  }
  for (const double d : delta) {
    if (!std::isfinite(d)) {
      throw config_error("EffectVector entries must be finite");
    }
  }
}

ExtVector worst_case(const Dataset& ds, const EffectVector& delta,
                     Mechanism mech, CompositeB b) {
  if (mech == Mechanism::MAR) {
    throw config_error(
        "worst_case is undefined under MAR; use restrict_observed with the "
        "subsample test");
  }
  delta.validate(ds.n());
  const int n = ds.n();
  ExtVector out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const bool z = ds.z()[i] != 0;
    const bool m = ds.observed(i);
    ExtValue v;
    if (!z && m) {
      v = ExtValue::finite(ds.y(i));
    } else if (!z && !m) {
      v = b;
    } else if (z && m) {
      const ExtValue shifted = ExtValue::finite(ds.y(i) - delta[i]);
      switch (mech) {
        case Mechanism::General:
        case Mechanism::MonotonePos:
          v = min(shifted, b);
          break;
        case Mechanism::MonotoneNeg:
        case Mechanism::SharpMissing:
          v = shifted;
          break;
        default:
          break;
      }
    } else {  // z && !m
      switch (mech) {
        case Mechanism::General:
        case Mechanism::MonotoneNeg:
          v = ExtValue::neg_inf();
          break;
        case Mechanism::MonotonePos:
        case Mechanism::SharpMissing:
          v = b;
          break;
        default:
          break;
      }
    }
    out[i] = v;
  }
  return out;
}

CompositeB recommended_b(Mechanism mech) {
  switch (mech) {
    case Mechanism::General:
    case Mechanism::MonotonePos:
    case Mechanism::SharpMissing:
      return ExtValue::pos_inf();
    case Mechanism::MonotoneNeg:
      return ExtValue::neg_inf();
    case Mechanism::MAR:
      break;
  }
  throw config_error("recommended_b is undefined under MAR");
}

std::pair<Dataset, std::vector<int>> restrict_observed(const Dataset& ds) {
  if (ds.n11() < 1 || ds.n01() < 1) {
    throw data_error(
        "restrict_observed: observed units must include at least one treated "
        "and one control unit");
  }
  std::vector<std::uint8_t> z, m;
  std::vector<double> y;
  std::vector<int> index_map;
  for (int i = 0; i < ds.n(); ++i) {
    if (!ds.observed(i)) continue;
    z.push_back(ds.z()[i]);
    m.push_back(1);
    y.push_back(ds.y(i));
    index_map.push_back(i);
  }
  return {Dataset(std::move(z), std::move(m), std::move(y)),
          std::move(index_map)};
}

}  // namespace attrition
