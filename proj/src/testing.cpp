#include "attrition/testing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "attrition/detail/monotone_invert.hpp"
#include "attrition/errors.hpp"
#include "attrition/hypergeom.hpp"

namespace attrition {

void TestResult::fill_null_meta(const NullDistribution& null) {
  null_design = null.design();
  null_exact = null.exact();
  null_draws = null.exact() ? 0 : null.draw_count();
  null_seed = null.seed();
}

const NullDistribution& NullCache::get(const DesignSpec& design,
                                       const StatConfig& cfg) {
  Key key{design.n, design.n1, static_cast<int>(cfg.family),
          static_cast<int>(cfg.transform), cfg.s, cfg.table};
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    auto built = std::make_unique<NullDistribution>(
        build_null(design, cfg, request_));
    it = cache_.emplace(std::move(key), std::move(built)).first;
  }
  return *it->second;
}

namespace {

void require_null_match(const Dataset& ds, const StatConfig& cfg,
                        const NullDistribution& null) {
  if (null.design().n != ds.n() || null.design().n1 != ds.n1()) {
    throw config_error("null distribution built for a different design");
  }
  if (!(null.config() == cfg)) {
    throw config_error("null distribution built for a different statistic");
  }
}

}  // namespace

TestResult sharp_test(const Dataset& ds, const EffectVector& delta,
                      Mechanism mech, const StatConfig& cfg,
                      const NullDistribution& null,
                      std::optional<CompositeB> b) {
  if (mech == Mechanism::MAR) {
    throw config_error("sharp_test does not support MAR; use sharp_test_subsample");
  }
  require_null_match(ds, cfg, null);
  const CompositeB bb = b.value_or(recommended_b(mech));
  const ExtVector imputed = worst_case(ds, delta, mech, bb);
  TestResult res;
  res.statistic = statistic(std::span<const std::uint8_t>(ds.z()), imputed, cfg);
  res.p_value = null.tail_prob(res.statistic);
  res.mechanism = mech;
  res.b = bb;
  res.config = cfg;
  res.fill_null_meta(null);
  return res;
}

TestResult sharp_test_subsample(const Dataset& ds, const EffectVector& delta,
                                const StatConfig& cfg,
                                const NullDistribution& null_S) {
  delta.validate(ds.n());
  auto [sub, index_map] = restrict_observed(ds);
  require_null_match(sub, cfg, null_S);
  ExtVector y(static_cast<std::size_t>(sub.n()));
  for (int s = 0; s < sub.n(); ++s) {
    const int i = index_map[s];
    y[s] = ExtValue::finite(ds.y(i) - delta[i] * ds.z()[i]);
  }
  TestResult res;
  res.statistic = statistic(std::span<const std::uint8_t>(sub.z()), y, cfg);
  res.p_value = null_S.tail_prob(res.statistic);
  res.mechanism = Mechanism::MAR;
  res.b = ExtValue::pos_inf();  // unused by this path
  res.config = cfg;
  res.fill_null_meta(null_S);
  return res;
}

int upper_conf_total_m0(int n, int n0, int n01, double beta) {
  if (!(n01 >= 0 && n01 <= n0 && n0 <= n) || n0 < 1) {
    throw config_error("upper_conf_total_m0: inconsistent counts");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw config_error("upper_conf_total_m0: beta must lie in (0, 1)");
  }
  // T ranges over the totals consistent with the data; P_T(X <= n01) is
  // nonincreasing in T, so the bound is found by bisection.
  int lo = n01;                    // cdf = 1 here
  int hi = n - (n0 - n01);
  while (lo < hi) {
    const int mid = lo + (hi - lo + 1) / 2;
    if (hypergeom_cdf(n, mid, n0, n01) >= beta) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

std::pair<TestResult, TwoStepTrace> two_step_test(
    const Dataset& ds, const EffectVector& delta, const StatConfig& cfg,
    double alpha, double beta, const NullDistribution& null,
    std::optional<int> forced_M_hat) {
  if (cfg.family != StatFamily::MannWhitneyU) {
    throw config_error("two_step_test requires the MannWhitneyU family");
  }
  if (!(beta > 0.0 && beta < alpha && alpha < 1.0)) {
    throw config_error("two_step_test requires 0 < beta < alpha < 1");
  }
  require_null_match(ds, cfg, null);
  delta.validate(ds.n());
  const int n = ds.n();

  TwoStepTrace trace;
  trace.beta = beta;
  trace.M_hat = forced_M_hat.value_or(
      upper_conf_total_m0(n, ds.n0(), ds.n01(), beta));
  trace.m_lower =
      std::clamp(ds.n11() + ds.n01() - trace.M_hat, 0, ds.n11());

  // Composite control column: observed controls keep Y, missing controls
  // are +inf (the b = +inf composite).
  std::vector<int> controls;
  ExtVector control_value;
  for (int j = 0; j < n; ++j) {
    if (ds.z()[j]) continue;
    controls.push_back(j);
    control_value.push_back(ds.observed(j) ? ExtValue::finite(ds.y(j))
                                           : ExtValue::pos_inf());
  }
  for (int i = 0; i < n; ++i) {
    if (!(ds.z()[i] && ds.observed(i))) continue;
    int a = 0, bsum = 0;
    const ExtValue yi = ExtValue::finite(ds.y(i) - delta[i]);
    for (std::size_t c = 0; c < controls.size(); ++c) {
      a += psi(i, controls[c], ExtValue::pos_inf(), control_value[c]);
      bsum += psi(i, controls[c], yi, control_value[c]);
    }
    trace.treated_observed.push_back(i);
    trace.A.push_back(a);
    trace.B.push_back(bsum);
    trace.D.push_back(cfg.phi(a) - cfg.phi(bsum));
  }

  // Ascending D, ties by unit index (stable over the index-sorted input).
  std::vector<int> order(trace.treated_observed.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return trace.D[a] < trace.D[b]; });
  for (int t = 0; t < trace.m_lower; ++t) {
    trace.trimmed.push_back(trace.treated_observed[order[t]]);
  }

  ExtVector imputed(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (ds.z()[i]) {
      imputed[i] = ds.observed(i) ? ExtValue::finite(ds.y(i) - delta[i])
                                  : ExtValue::pos_inf();
    } else {
      imputed[i] = ds.observed(i) ? ExtValue::finite(ds.y(i))
                                  : ExtValue::pos_inf();
    }
  }
  for (const int i : trace.trimmed) imputed[i] = ExtValue::pos_inf();

  TestResult res;
  res.statistic = statistic(std::span<const std::uint8_t>(ds.z()), imputed, cfg);
  res.p_value = std::min(1.0, null.tail_prob(res.statistic) + beta);
  res.mechanism = Mechanism::MonotonePos;
  res.b = ExtValue::pos_inf();
  res.config = cfg;
  res.fill_null_meta(null);
  return {res, trace};
}

std::pair<Dataset, EffectVector> label_switch(const Dataset& ds,
                                              const EffectVector& delta) {
  delta.validate(ds.n());
  std::vector<std::uint8_t> z(ds.z());
  std::vector<std::uint8_t> m(ds.m());
  std::vector<double> y(ds.y_raw());
  for (int i = 0; i < ds.n(); ++i) {
    z[i] = 1 - z[i];
    if (m[i]) y[i] = -y[i];
  }
  return {Dataset(std::move(z), std::move(m), std::move(y)), delta};
}

Mechanism switched_mechanism(Mechanism mech) {
  switch (mech) {
    case Mechanism::MonotonePos: return Mechanism::MonotoneNeg;
    case Mechanism::MonotoneNeg: return Mechanism::MonotonePos;
    default: return mech;
  }
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cross-arm breakpoints of the worst-case imputation as a function of a
// constant shift of treated-observed outcomes: differences against observed
// control outcomes, plus differences against a finite composite b.
std::vector<double> constant_shift_breakpoints(const Dataset& ds,
                                               CompositeB b) {
  std::vector<double> breaks;
  for (int i = 0; i < ds.n(); ++i) {
    if (!(ds.z()[i] && ds.observed(i))) continue;
    for (int j = 0; j < ds.n(); ++j) {
      if (ds.z()[j] || !ds.observed(j)) continue;
      breaks.push_back(ds.y(i) - ds.y(j));
    }
    if (b.is_finite()) breaks.push_back(ds.y(i) - b.raw());
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  return breaks;
}

double lower_endpoint(const Dataset& ds, Mechanism mech, const StatConfig& cfg,
                      double alpha, NullCache& nulls,
                      std::optional<CompositeB> b) {
  if (mech == Mechanism::MAR || mech == Mechanism::SharpMissing) {
    // Subsample route: drop missing units, invert the FRT on S. The
    // breakpoints are the observed cross-arm differences, i.e. the b = +inf
    // set without composite entries.
    auto [sub, map] = restrict_observed(ds);
    (void)map;
    const NullDistribution& null =
        nulls.get(DesignSpec{sub.n(), sub.n1()}, cfg);
    const auto pval = [&](double d) {
      return sharp_test_subsample(ds, EffectVector::constant(ds.n(), d), cfg,
                                  null).p_value;
    };
    return detail::invert_monotone_lower(
        constant_shift_breakpoints(ds, ExtValue::pos_inf()), pval, alpha);
  }
  const CompositeB bb = b.value_or(recommended_b(mech));
  const NullDistribution& null =
      nulls.get(DesignSpec{ds.n(), ds.n1()}, cfg);
  const auto pval = [&](double d) {
    return sharp_test(ds, EffectVector::constant(ds.n(), d), mech, cfg, null,
                      bb).p_value;
  };
  return detail::invert_monotone_lower(constant_shift_breakpoints(ds, bb),
                                       pval, alpha);
}

// Mirror experiment: labels switched, outcomes kept, so individual effects
// negate and the upper-side machinery on it bounds -tau from below.
Dataset mirror_dataset(const Dataset& ds) {
  std::vector<std::uint8_t> z(ds.z());
  for (auto& zi : z) zi = 1 - zi;
  return Dataset(std::move(z), std::vector<std::uint8_t>(ds.m()),
                 std::vector<double>(ds.y_raw()));
}

}  // namespace

ConstantEffectInterval invert_constant_ci(const Dataset& ds, Mechanism mech,
                                          const StatConfig& cfg, double alpha,
                                          NullCache& nulls, CiSide side,
                                          std::optional<CompositeB> b) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw config_error("invert_constant_ci: alpha must lie in (0, 1)");
  }
  const double side_alpha = side == CiSide::TwoSided ? alpha / 2.0 : alpha;
  ConstantEffectInterval out{-kInf, kInf};
  if (side != CiSide::Upper) {
    out.lower = lower_endpoint(ds, mech, cfg, side_alpha, nulls, b);
  }
  if (side != CiSide::Lower) {
    const Dataset mirrored = mirror_dataset(ds);
    const double mirrored_lower = lower_endpoint(
        mirrored, switched_mechanism(mech), cfg, side_alpha, nulls, b);
    out.upper = -mirrored_lower;
  }
  return out;
}

}  // namespace attrition
