#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "attrition/dataset.hpp"
#include "attrition/imputation.hpp"
#include "attrition/null_dist.hpp"
#include "attrition/rank_stats.hpp"

namespace attrition {

// Outcome of a single randomization test: a worst-case-valid upper-side
// p-value plus the pieces needed to report it reproducibly.
struct TestResult {
  double p_value = 1.0;
  double statistic = 0.0;
  Mechanism mechanism = Mechanism::General;
  CompositeB b = ExtValue::pos_inf();
  StatConfig config;
  DesignSpec null_design;
  bool null_exact = true;
  std::int64_t null_draws = 0;
  std::uint64_t null_seed = 0;

  void fill_null_meta(const NullDistribution& null);
};

// Intermediate quantities of the two-step procedure, kept for reporting and
// for the trace invariants (D_i >= 0, trimmed set = the m_lower smallest D).
struct TwoStepTrace {
  double beta = 0.0;
  int M_hat = 0;
  int m_lower = 0;
  std::vector<int> treated_observed;  // unit indices, increasing
  std::vector<int> A;                 // aligned with treated_observed
  std::vector<int> B;
  std::vector<double> D;              // phi(A_i) - phi(B_i)
  std::vector<int> trimmed;           // unit indices set to +inf
};

// Builds (and caches) null distributions keyed by design and statistic
// config. Safe for concurrent use; entries are immutable once built.
class NullCache {
 public:
  explicit NullCache(NullRequest request = {}) : request_(request) {}

  const NullDistribution& get(const DesignSpec& design, const StatConfig& cfg);

  const NullRequest& request() const { return request_; }

 private:
  using Key = std::tuple<int, int, int, int, int, std::vector<double>>;
  NullRequest request_;
  std::mutex mutex_;
  std::map<Key, std::unique_ptr<NullDistribution>> cache_;
};

// Worst-case randomization p-value for the sharp null H_delta (also valid
// for the bounded null tau <= delta). b defaults to recommended_b(mech).
// The null must match (n, n1) and cfg.
TestResult sharp_test(const Dataset& ds, const EffectVector& delta,
                      Mechanism mech, const StatConfig& cfg,
                      const NullDistribution& null,
                      std::optional<CompositeB> b = std::nullopt);

// Subsample randomization test for the sharp/MAR mechanisms: drops units
// with missing outcomes, imputes controls as Y - delta o Z on S, and
// evaluates against the null for the (|S|, n11) sub-design.
TestResult sharp_test_subsample(const Dataset& ds, const EffectVector& delta,
                                const StatConfig& cfg,
                                const NullDistribution& null_S);

// Exact hypergeometric upper confidence bound: the largest total T of
// control potential observation indicators consistent with observing n01
// successes in the n0 control draws at level 1 - beta. Guarantees
// P(T_true <= M_hat) >= 1 - beta under the CRE.
int upper_conf_total_m0(int n, int n0, int n01, double beta);

// Two-step test under MonotonePos with the Mann-Whitney family: bounds the
// number of treated-observed units that would be missing under control at
// level beta, trims that many (lowest-D) units to +inf, and adds beta to the
// tail probability. forced_M_hat substitutes for step 1 when provided.
std::pair<TestResult, TwoStepTrace> two_step_test(
    const Dataset& ds, const EffectVector& delta, const StatConfig& cfg,
    double alpha, double beta, const NullDistribution& null,
    std::optional<int> forced_M_hat = std::nullopt);

// Switches treatment labels and flips outcome signs; individual effects are
// invariant, and MonotonePos and MonotoneNeg exchange roles.
std::pair<Dataset, EffectVector> label_switch(const Dataset& ds,
                                              const EffectVector& delta);

Mechanism switched_mechanism(Mechanism mech);

// One- or two-sided confidence interval for a constant treatment effect by
// test inversion over the exact breakpoint grid of candidate values. The
// worst-case mechanisms invert sharp_test; sharp/MAR invert the subsample
// test. The opposite side comes from the effect-negating mirror (labels
// switched, outcomes kept, mechanism flipped).
struct ConstantEffectInterval {
  double lower;  // -inf when unbounded below
  double upper;  // +inf when unbounded above
};

enum class CiSide { Lower, Upper, TwoSided };

ConstantEffectInterval invert_constant_ci(const Dataset& ds, Mechanism mech,
                                          const StatConfig& cfg, double alpha,
                                          NullCache& nulls,
                                          CiSide side = CiSide::TwoSided,
                                          std::optional<CompositeB> b = std::nullopt);

}  // namespace attrition
