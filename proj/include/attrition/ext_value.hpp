#pragma once

#include <cassert>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

namespace attrition {

// A point on the extended real line: -inf < every finite value < +inf.
//
// Backed by an IEEE double whose infinities encode the two sentinels, so the
// native comparison operators already implement the required total order on
// values (ties between equal values, including between two like-signed
// sentinels, are resolved by unit index at the call sites that need it).
// NaN is not a legal state.
class ExtValue {
 public:
  constexpr ExtValue() : v_(0.0) {}

  static constexpr ExtValue neg_inf() {
    return ExtValue(-std::numeric_limits<double>::infinity());
  }
  static constexpr ExtValue pos_inf() {
    return ExtValue(std::numeric_limits<double>::infinity());
  }
  static ExtValue finite(double x) {
    assert(std::isfinite(x));
    return ExtValue(x);
  }
  // Accepts any non-NaN double, mapping IEEE infinities to the sentinels.
  static ExtValue from_double(double x) {
    assert(!std::isnan(x));
    return ExtValue(x);
  }

  constexpr bool is_finite() const { return v_ > -kInf && v_ < kInf; }
  constexpr bool is_neg_inf() const { return v_ == -kInf; }
  constexpr bool is_pos_inf() const { return v_ == kInf; }

  // The underlying double; +-inf for the sentinels.
  constexpr double raw() const { return v_; }

  friend constexpr bool operator==(ExtValue a, ExtValue b) { return a.v_ == b.v_; }
  friend constexpr bool operator!=(ExtValue a, ExtValue b) { return a.v_ != b.v_; }
  friend constexpr bool operator<(ExtValue a, ExtValue b) { return a.v_ < b.v_; }
  friend constexpr bool operator>(ExtValue a, ExtValue b) { return a.v_ > b.v_; }
  friend constexpr bool operator<=(ExtValue a, ExtValue b) { return a.v_ <= b.v_; }
  friend constexpr bool operator>=(ExtValue a, ExtValue b) { return a.v_ >= b.v_; }

  friend constexpr ExtValue min(ExtValue a, ExtValue b) { return a < b ? a : b; }
  friend constexpr ExtValue max(ExtValue a, ExtValue b) { return a < b ? b : a; }

  friend std::ostream& operator<<(std::ostream& os, ExtValue v) {
    if (v.is_neg_inf()) return os << "-inf";
    if (v.is_pos_inf()) return os << "inf";
    return os << v.v_;
  }

 private:
  explicit constexpr ExtValue(double v) : v_(v) {}
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  double v_;
};

// Outcome vector over the extended real line; length matches the dataset it
// was derived from.
using ExtVector = std::vector<ExtValue>;

}  // namespace attrition
