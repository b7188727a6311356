#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "attrition/ext_value.hpp"

namespace attrition {

enum class StatFamily : std::uint8_t { RankSum, MannWhitneyU };

enum class RankTransform : std::uint8_t {
  Identity,
  StephensonBinom,  // phi(r) = C(r-1, s-1) * 1{r >= s}, rank-sum only
  Power,            // phi(r) = r^(s-1), Mann-Whitney only
  Table,            // user-supplied nondecreasing table, phi(r) = table[r]
};

// Fixes the test statistic t_{R,phi}: a family (rank-sum over the full
// sample, or Mann-Whitney relative ranks against controls) plus a
// nondecreasing rank transformation.
struct StatConfig {
  StatFamily family = StatFamily::RankSum;
  RankTransform transform = RankTransform::Identity;
  int s = 2;                  // StephensonBinom / Power parameter, >= 2
  std::vector<double> table;  // Table transform: phi(r) = table[r], r >= 0

  static constexpr int kMaxS = 50;  // larger s overflows doubles for useful n

  static StatConfig rank_sum_identity() { return {}; }
  static StatConfig rank_sum_stephenson(int s) {
    return {StatFamily::RankSum, RankTransform::StephensonBinom, s, {}};
  }
  static StatConfig mann_whitney_identity() {
    return {StatFamily::MannWhitneyU, RankTransform::Identity, 2, {}};
  }
  static StatConfig mann_whitney_power(int s) {
    return {StatFamily::MannWhitneyU, RankTransform::Power, s, {}};
  }

  // Throws config_error on illegal family/transform pairings or s out of
  // range or a non-monotone table.
  void validate() const;

  // phi evaluated at an integer (relative) rank r >= 0. Values are exact
  // integers in doubles while below 2^53; beyond that, rounded but computed
  // identically wherever the same r appears, so comparisons stay consistent.
  double phi(int r) const;

  bool operator==(const StatConfig& other) const {
    return family == other.family && transform == other.transform &&
           s == other.s && table == other.table;
  }

  std::string family_name() const;
  std::string transform_name() const;
};

// Pairwise comparison indicator: 1{yi > yj} + 1{yi == yj} * 1{i >= j}.
// i and j are the stored unit indices (0-based works identically); i == j is
// a misuse and throws.
int psi(std::size_t i, std::size_t j, ExtValue yi, ExtValue yj);

// rank_i(y) = sum_j psi(i, j, y_i, y_j) for all i, with the self term equal
// to one. Returns a permutation of 1..n. O(n log n).
std::vector<int> ranks(const ExtVector& y);

// Relative rank of each treated unit against the controls:
// r_i = sum_{j: z_j = 0} psi(i, j, y_i, y_j), reported for treated units in
// increasing unit-index order. O(n log n).
std::vector<int> control_relative_ranks(std::span<const std::uint8_t> z,
                                        const ExtVector& y);

// t_{R,phi}(z, y). RankSum sums phi over the full-sample ranks of treated
// units; MannWhitneyU sums phi over their control-relative ranks. Treated
// terms are accumulated in increasing unit-index order so equal
// configurations produce bit-identical values.
double statistic(std::span<const std::uint8_t> z, const ExtVector& y,
                 const StatConfig& cfg);

}  // namespace attrition
