#include "doctest.h"

#include <set>

#include "attrition/errors.hpp"
#include "attrition/oracle.hpp"
#include "attrition/rng.hpp"

using namespace attrition;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Dataset random_tiny(Rng& rng, int n_min, int n_max, double missing_rate) {
  while (true) {
    const int n = n_min + static_cast<int>(rng.next_below(n_max - n_min + 1));
    std::vector<std::uint8_t> z(n, 0), m(n, 1);
    std::vector<double> y(n, kNaN);
    const int n1 = 1 + static_cast<int>(rng.next_below(n - 1));
    for (int i = 0; i < n1; ++i) z[i] = 1;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.next_below(i + 1));
      std::swap(z[i], z[j]);
    }
    for (int i = 0; i < n; ++i) {
      m[i] = rng.next_uniform() >= missing_rate;
      if (m[i]) y[i] = static_cast<double>(rng.next_below(800)) / 8.0;
    }
    int n1c = 0;
    for (const auto zi : z) n1c += zi;
    if (n1c == 0 || n1c == n) continue;
    return Dataset(std::move(z), std::move(m), std::move(y));
  }
}

}  // namespace

TEST_CASE("assignment enumeration is complete and duplicate-free") {
  for (const auto [n, n1] : {std::pair{5, 2}, {6, 3}, {7, 1}}) {
    std::set<std::vector<std::uint8_t>> seen;
    oracle::for_each_assignment(n, n1, [&](const std::vector<std::uint8_t>& z) {
      int count = 0;
      for (const auto zi : z) count += zi;
      CHECK(count == n1);
      CHECK(seen.insert(z).second);
    });
    long expect = 1;
    for (int u = 1; u <= n1; ++u) expect = expect * (n - n1 + u) / u;
    CHECK(static_cast<long>(seen.size()) == expect);
  }
}

TEST_CASE("complete data leaves the oracle nothing to enumerate") {
  const Dataset ds({1, 0, 1, 0}, {1, 1, 1, 1}, {4.0, 1.0, 3.0, 2.0});
  const EffectVector delta = EffectVector::constant(4, 0.5);
  const StatConfig cfg = StatConfig::rank_sum_identity();
  for (const auto mech : {Mechanism::General, Mechanism::MonotonePos,
                          Mechanism::MonotoneNeg, Mechanism::SharpMissing}) {
    const ExtVector wc = worst_case(ds, delta, mech, recommended_b(mech));
    CHECK(oracle::brute_force_worst_statistic(ds, delta, mech, cfg) ==
          statistic(std::span<const std::uint8_t>(ds.z()), wc, cfg));
  }
}

TEST_CASE("closed-form worst case equals the brute-force minimum") {
  Rng rng(89, 0);
  const StatConfig configs[] = {
      StatConfig::rank_sum_identity(), StatConfig::rank_sum_stephenson(3),
      StatConfig::mann_whitney_identity(), StatConfig::mann_whitney_power(3)};
  const Mechanism mechs[] = {Mechanism::General, Mechanism::MonotonePos,
                             Mechanism::MonotoneNeg, Mechanism::SharpMissing};
  for (int trial = 0; trial < 150; ++trial) {
    const Dataset ds = random_tiny(rng, 4, 7, 0.35);
    EffectVector delta = EffectVector::constant(ds.n(), 0.0);
    if (trial % 3 == 1) delta = EffectVector::constant(ds.n(), 1.5);
    if (trial % 3 == 2) {
      for (auto& d : delta.delta) {
        d = -2.0 + static_cast<double>(rng.next_below(9));
      }
    }
    const StatConfig& cfg = configs[trial % 4];
    for (const auto mech : mechs) {
      const ExtVector wc = worst_case(ds, delta, mech, recommended_b(mech));
      const double closed =
          statistic(std::span<const std::uint8_t>(ds.z()), wc, cfg);
      const double brute =
          oracle::brute_force_worst_statistic(ds, delta, mech, cfg);
      CHECK(closed == brute);
    }
  }
}

TEST_CASE("finite-b worst case equals the brute-force minimum") {
  Rng rng(97, 0);
  const StatConfig cfg = StatConfig::rank_sum_identity();
  for (int trial = 0; trial < 80; ++trial) {
    const Dataset ds = random_tiny(rng, 4, 6, 0.4);
    const EffectVector delta = EffectVector::constant(ds.n(), 0.0);
    // Offset keeps b off the observed-value lattice, as the insertion
    // argument assumes distinct knowns.
    const CompositeB b =
        ExtValue::finite(static_cast<double>(rng.next_below(120)) / 8.0 + 0.3);
    for (const auto mech : {Mechanism::General, Mechanism::MonotonePos,
                            Mechanism::MonotoneNeg, Mechanism::SharpMissing}) {
      const ExtVector wc = worst_case(ds, delta, mech, b);
      CHECK(statistic(std::span<const std::uint8_t>(ds.z()), wc, cfg) ==
            oracle::brute_force_worst_statistic(ds, delta, mech, cfg, b));
    }
  }
}

TEST_CASE("monotone mechanisms dominate the general one in the oracle too") {
  Rng rng(101, 0);
  const StatConfig cfg = StatConfig::mann_whitney_power(2);
  for (int trial = 0; trial < 60; ++trial) {
    const Dataset ds = random_tiny(rng, 4, 7, 0.4);
    const EffectVector delta = EffectVector::constant(ds.n(), 0.0);
    const double general_hi = oracle::brute_force_worst_statistic(
        ds, delta, Mechanism::General, cfg, ExtValue::pos_inf());
    const double mp = oracle::brute_force_worst_statistic(
        ds, delta, Mechanism::MonotonePos, cfg, ExtValue::pos_inf());
    const double general_lo = oracle::brute_force_worst_statistic(
        ds, delta, Mechanism::General, cfg, ExtValue::neg_inf());
    const double mn = oracle::brute_force_worst_statistic(
        ds, delta, Mechanism::MonotoneNeg, cfg, ExtValue::neg_inf());
    CHECK(mp >= general_hi);
    CHECK(mn >= general_lo);
  }
}

TEST_CASE("quantile worst case equals the brute-force double minimum") {
  Rng rng(103, 0);
  NullCache nulls;
  const StatConfig configs[] = {StatConfig::rank_sum_identity(),
                                StatConfig::mann_whitney_power(2)};
  for (int trial = 0; trial < 60; ++trial) {
    const Dataset ds = random_tiny(rng, 4, 6, 0.3);
    const int k = 1 + static_cast<int>(rng.next_below(ds.n1()));
    const QuantileHypothesis hyp{k, -1.0 + static_cast<double>(rng.next_below(5)),
                                 1.0};
    const StatConfig& cfg = configs[trial % 2];
    const auto& null = nulls.get(DesignSpec{ds.n(), ds.n1()}, cfg);
    for (const auto mech : {Mechanism::General, Mechanism::MonotonePos,
                            Mechanism::MonotoneNeg}) {
      const double closed = quantile_test(ds, hyp, mech, cfg, null).statistic;
      const double brute =
          oracle::brute_force_quantile_worst(ds, hyp, mech, cfg);
      CHECK(closed == brute);
    }
  }
}

TEST_CASE("quantile oracle reduces to the sharp oracle at k = n1") {
  Rng rng(107, 0);
  const StatConfig cfg = StatConfig::rank_sum_identity();
  for (int trial = 0; trial < 40; ++trial) {
    const Dataset ds = random_tiny(rng, 4, 6, 0.3);
    const double c = 0.5;
    CHECK(oracle::brute_force_quantile_worst(
              ds, QuantileHypothesis{ds.n1(), c, 1.0}, Mechanism::General,
              cfg) ==
          oracle::brute_force_worst_statistic(
              ds, EffectVector::constant(ds.n(), c), Mechanism::General, cfg));
  }
}

TEST_CASE("oracle capacity limits") {
  std::vector<std::uint8_t> z(9, 0), m(9, 1);
  std::vector<double> y(9, 1.0);
  for (int i = 0; i < 4; ++i) z[i] = 1;
  for (int i = 0; i < 9; ++i) y[i] = i;
  const Dataset big(std::move(z), std::move(m), std::move(y));
  CHECK_THROWS_AS(oracle::brute_force_worst_statistic(
                      big, EffectVector::constant(9, 0.0), Mechanism::General,
                      StatConfig::rank_sum_identity()),
                  capacity_error);
  ExtVector ref;
  for (int i = 0; i < 40; ++i) ref.push_back(ExtValue::finite(i));
  CHECK_THROWS_AS(oracle::brute_force_null(DesignSpec{40, 20},
                                           StatConfig::rank_sum_identity(), ref),
                  capacity_error);
}
