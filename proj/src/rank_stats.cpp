#include "attrition/rank_stats.hpp"

#include <algorithm>
#include <cmath>

#include "attrition/errors.hpp"

namespace attrition {

void StatConfig::validate() const {
  switch (transform) {
    case RankTransform::Identity:
      break;
    case RankTransform::StephensonBinom:
      if (family != StatFamily::RankSum) {
        throw config_error("StephensonBinom transform requires the RankSum family");
      }
      if (s < 2 || s > kMaxS) {
        throw config_error("StephensonBinom s must lie in [2, " +
                           std::to_string(kMaxS) + "]");
      }
      break;
    case RankTransform::Power:
      if (family != StatFamily::MannWhitneyU) {
        throw config_error("Power transform requires the MannWhitneyU family");
      }
      if (s < 2 || s > kMaxS) {
        throw config_error("Power s must lie in [2, " + std::to_string(kMaxS) + "]");
      }
      break;
    case RankTransform::Table:
      if (table.empty()) {
        throw config_error("Table transform requires a nonempty table");
      }
      for (std::size_t r = 1; r < table.size(); ++r) {
        if (table[r] < table[r - 1]) {
          throw config_error("Table transform must be nondecreasing");
        }
      }
      break;
  }
}

double StatConfig::phi(int r) const {
  switch (transform) {
    case RankTransform::Identity:
      return static_cast<double>(r);
    case RankTransform::StephensonBinom: {
      // C(r-1, s-1), kept as an exact integer in doubles while it fits by
      // multiplying and dividing in the order that preserves integrality.
      if (r < s) return 0.0;
      double acc = 1.0;
      for (int u = 1; u <= s - 1; ++u) {
        acc = acc * static_cast<double>(r - s + u) / static_cast<double>(u);
      }
      // The running product equals C(r-s+u, u) after step u, so every
      // intermediate below 2^53 is exact; round to pin the integer lattice.
      return acc < 9.007199254740992e15 ? std::round(acc) : acc;
    }
    case RankTransform::Power: {
      double acc = 1.0;
      for (int u = 0; u < s - 1; ++u) acc *= static_cast<double>(r);
      return acc;
    }
    case RankTransform::Table: {
      if (r < 0 || static_cast<std::size_t>(r) >= table.size()) {
        throw config_error("Table transform: rank " + std::to_string(r) +
                           " outside table");
      }
      return table[static_cast<std::size_t>(r)];
    }
  }
  return 0.0;
}

std::string StatConfig::family_name() const {
  return family == StatFamily::RankSum ? "ranksum" : "mwu";
}

std::string StatConfig::transform_name() const {
  switch (transform) {
    case RankTransform::Identity: return "identity";
    case RankTransform::StephensonBinom: return "stephenson";
    case RankTransform::Power: return "power";
    case RankTransform::Table: return "table";
  }
  return "?";
}

int psi(std::size_t i, std::size_t j, ExtValue yi, ExtValue yj) {
  if (i == j) throw config_error("psi requires i != j");
  if (yi > yj) return 1;
  if (yi == yj && i >= j) return 1;
  return 0;
}

namespace {

// Strict total order realizing the psi tie-break: unit i precedes j iff
// y_i < y_j, or y_i == y_j and i < j.
struct IndexedLess {
  const ExtVector& y;
  bool operator()(int a, int b) const {
    if (y[a] < y[b]) return true;
    if (y[b] < y[a]) return false;
    return a < b;
  }
};

}  // namespace

std::vector<int> ranks(const ExtVector& y) {
  const int n = static_cast<int>(y.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), IndexedLess{y});
  std::vector<int> rank(n);
  for (int pos = 0; pos < n; ++pos) rank[order[pos]] = pos + 1;
  return rank;
}

std::vector<int> control_relative_ranks(std::span<const std::uint8_t> z,
                                        const ExtVector& y) {
  const int n = static_cast<int>(y.size());
  if (static_cast<int>(z.size()) != n) {
    throw config_error("control_relative_ranks: length mismatch");
  }
  // Controls sorted by (value, index); a treated unit's relative rank is the
  // count of control pairs strictly preceding (y_i, i) in that order, which
  // matches psi's tie-break without materializing the n x n comparisons.
  std::vector<int> controls;
  controls.reserve(n);
  for (int j = 0; j < n; ++j) {
    if (!z[j]) controls.push_back(j);
  }
  std::sort(controls.begin(), controls.end(), IndexedLess{y});
  std::vector<int> out;
  out.reserve(n - controls.size());
  for (int i = 0; i < n; ++i) {
    if (!z[i]) continue;
    const auto it = std::lower_bound(controls.begin(), controls.end(), i,
                                     IndexedLess{y});
    out.push_back(static_cast<int>(it - controls.begin()));
  }
  return out;
}

double statistic(std::span<const std::uint8_t> z, const ExtVector& y,
                 const StatConfig& cfg) {
  const int n = static_cast<int>(y.size());
  if (static_cast<int>(z.size()) != n) {
    throw config_error("statistic: length mismatch");
  }
  cfg.validate();
  double total = 0.0;
  if (cfg.family == StatFamily::RankSum) {
    const std::vector<int> r = ranks(y);
    for (int i = 0; i < n; ++i) {
      if (z[i]) total += cfg.phi(r[i]);
    }
  } else {
    const std::vector<int> r = control_relative_ranks(z, y);
    for (const int ri : r) total += cfg.phi(ri);
  }
  return total;
}

}  // namespace attrition
