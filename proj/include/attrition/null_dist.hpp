#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "attrition/rank_stats.hpp"

namespace attrition {

// The completely randomized experiment: n1 of n units assigned to treatment,
// uniformly over all subsets.
struct DesignSpec {
  int n = 0;
  int n1 = 0;

  void validate() const;
  int n0() const { return n - n1; }
  // C(n, n1) if it fits in the cap, otherwise nullopt.
  std::optional<std::int64_t> assignment_count(std::int64_t cap) const;
};

enum class NullMode : std::uint8_t { Auto, Exact, MonteCarlo };

struct NullRequest {
  NullMode mode = NullMode::Auto;
  std::int64_t draws = 100000;            // Monte Carlo sample size B
  std::uint64_t seed = 0;                 // Monte Carlo seed
  std::int64_t exact_cap = 2'000'000;     // largest C(n, n1) enumerated
  int threads = 0;                        // 0 = hardware default
};

// Permutation law G_{R,phi} of the statistic under the CRE, distribution-free
// in the outcome vector. Exact mode holds all C(n, n1) values; Monte Carlo
// holds B values drawn with a counter-based stream. Immutable once built;
// tail queries are lock-free binary searches.
class NullDistribution {
 public:
  double tail_prob(double t) const;

  const DesignSpec& design() const { return design_; }
  const StatConfig& config() const { return cfg_; }
  bool exact() const { return exact_; }
  std::int64_t draw_count() const {
    return static_cast<std::int64_t>(values_.size());
  }
  std::uint64_t seed() const { return seed_; }
  const std::vector<double>& sorted_values() const { return values_; }

  // Smallest p-value this distribution can report.
  double min_p() const;

  std::string mode_name() const { return exact_ ? "exact" : "mc"; }

  void save(const std::string& path) const;
  static NullDistribution load(const std::string& path);

 private:
  friend NullDistribution build_null(const DesignSpec&, const StatConfig&,
                                     const NullRequest&);
  NullDistribution() = default;

  DesignSpec design_;
  StatConfig cfg_;
  bool exact_ = true;
  std::uint64_t seed_ = 0;
  std::vector<double> values_;  // sorted nondecreasing
};

// Builds G_{R,phi} for the design against the fixed reference vector
// (1, 2, ..., n); by distribution-freeness the result applies to any outcome
// vector of that length under the same config. Exact mode enumerates the
// assignments in revolving-door Gray-code order; Monte Carlo draws
// request.draws assignments with per-draw streams derived from (seed, b).
NullDistribution build_null(const DesignSpec& design, const StatConfig& cfg,
                            const NullRequest& request = {});

// Revolving-door enumeration of all k-subsets of {0, ..., n-1}: successive
// subsets differ by exactly one exchange. visit() is called once per subset,
// after the corresponding swap(out, in) has been applied by the caller's
// callbacks. Exposed for the incremental statistic update and for tests.
void for_each_subset_revolving_door(
    int n, int k, const std::function<void(int out, int in)>& swap,
    const std::function<void()>& visit);

}  // namespace attrition
