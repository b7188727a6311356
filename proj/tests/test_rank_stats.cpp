#include "doctest.h"

#include <cmath>

#include "attrition/errors.hpp"
#include "attrition/rank_stats.hpp"
#include "attrition/rng.hpp"

using namespace attrition;

namespace {

ExtVector finite_vec(std::initializer_list<double> xs) {
  ExtVector v;
  for (const double x : xs) v.push_back(ExtValue::finite(x));
  return v;
}

std::vector<std::uint8_t> zvec(std::initializer_list<int> zs) {
  std::vector<std::uint8_t> z;
  for (const int x : zs) z.push_back(static_cast<std::uint8_t>(x));
  return z;
}

// Random vector with occasional sentinels, random 0/1 assignment.
struct RandomInstance {
  std::vector<std::uint8_t> z;
  ExtVector y;
};

RandomInstance random_instance(Rng& rng, int n_min = 3, int n_max = 12) {
  const int n = n_min + static_cast<int>(rng.next_below(n_max - n_min + 1));
  RandomInstance inst;
  inst.z.resize(n);
  inst.y.resize(n);
  int n1 = 1 + static_cast<int>(rng.next_below(n - 1));
  for (int i = 0; i < n; ++i) inst.z[i] = i < n1;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_below(i + 1));
    std::swap(inst.z[i], inst.z[j]);
  }
  for (int i = 0; i < n; ++i) {
    const auto kind = rng.next_below(8);
    if (kind == 0) inst.y[i] = ExtValue::neg_inf();
    else if (kind == 1) inst.y[i] = ExtValue::pos_inf();
    else inst.y[i] = ExtValue::finite(static_cast<double>(rng.next_below(40)) / 4.0);
  }
  return inst;
}

}  // namespace

TEST_CASE("psi pairwise comparison with index tie-break") {
  CHECK(psi(2, 1, ExtValue::finite(3), ExtValue::finite(3)) == 1);
  CHECK(psi(1, 2, ExtValue::finite(3), ExtValue::finite(3)) == 0);
  CHECK(psi(1, 2, ExtValue::neg_inf(), ExtValue::finite(0)) == 0);
  CHECK(psi(1, 2, ExtValue::pos_inf(), ExtValue::finite(0)) == 1);
  CHECK(psi(3, 1, ExtValue::pos_inf(), ExtValue::pos_inf()) == 1);
  CHECK(psi(1, 3, ExtValue::pos_inf(), ExtValue::pos_inf()) == 0);
  CHECK_THROWS_AS(psi(2, 2, ExtValue::finite(0), ExtValue::finite(0)),
                  config_error);
}

TEST_CASE("ranks match the psi sums") {
  CHECK(ranks(finite_vec({2, 1})) == std::vector<int>{2, 1});
  CHECK(ranks(finite_vec({1, 1, 1})) == std::vector<int>{1, 2, 3});
  ExtVector y{ExtValue::neg_inf(), ExtValue::finite(0), ExtValue::pos_inf(),
              ExtValue::finite(0)};
  CHECK(ranks(y) == std::vector<int>{1, 2, 4, 3});
}

TEST_CASE("ranks equal direct psi summation on random inputs") {
  Rng rng(7, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = random_instance(rng);
    const int n = static_cast<int>(inst.y.size());
    const std::vector<int> r = ranks(inst.y);
    for (int i = 0; i < n; ++i) {
      int direct = 1;  // self term
      for (int j = 0; j < n; ++j) {
        if (j != i) direct += psi(i, j, inst.y[i], inst.y[j]);
      }
      CHECK(r[i] == direct);
    }
  }
}

TEST_CASE("statistic worked examples") {
  const auto z = zvec({1, 1, 0, 0});
  const auto y = finite_vec({3, 4, 1, 2});
  CHECK(statistic(z, y, StatConfig::rank_sum_identity()) == 7.0);
  CHECK(statistic(z, y, StatConfig::rank_sum_stephenson(2)) == 5.0);
  CHECK(statistic(zvec({1, 0}), finite_vec({2, 1}),
                  StatConfig::mann_whitney_power(2)) == 1.0);
}

TEST_CASE("mann-whitney relative ranks match direct psi sums") {
  Rng rng(11, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = random_instance(rng);
    const int n = static_cast<int>(inst.y.size());
    const std::vector<int> rel =
        control_relative_ranks(std::span<const std::uint8_t>(inst.z), inst.y);
    std::size_t at = 0;
    for (int i = 0; i < n; ++i) {
      if (!inst.z[i]) continue;
      int direct = 0;
      for (int j = 0; j < n; ++j) {
        if (!inst.z[j]) direct += psi(i, j, inst.y[i], inst.y[j]);
      }
      CHECK(rel[at++] == direct);
    }
  }
}

TEST_CASE("label-switch duality for the identity rank sum") {
  Rng rng(13, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = random_instance(rng);
    const int n = static_cast<int>(inst.y.size());
    std::vector<std::uint8_t> flipped(inst.z);
    for (auto& b : flipped) b = 1 - b;
    const double a =
        statistic(std::span<const std::uint8_t>(inst.z), inst.y,
                  StatConfig::rank_sum_identity());
    const double b =
        statistic(std::span<const std::uint8_t>(flipped), inst.y,
                  StatConfig::rank_sum_identity());
    CHECK(a + b == static_cast<double>(n) * (n + 1) / 2.0);
  }
}

TEST_CASE("wilcoxon equivalence: rank sum minus U is n1(n1+1)/2") {
  Rng rng(17, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = random_instance(rng);
    int n1 = 0;
    for (const auto zi : inst.z) n1 += zi;
    const double rs = statistic(std::span<const std::uint8_t>(inst.z), inst.y,
                                StatConfig::rank_sum_identity());
    const double u = statistic(std::span<const std::uint8_t>(inst.z), inst.y,
                               StatConfig::mann_whitney_identity());
    CHECK(rs - u == static_cast<double>(n1) * (n1 + 1) / 2.0);
  }
}

TEST_CASE("effect-increasing: raising treated or lowering control values") {
  Rng rng(19, 0);
  const StatConfig configs[] = {
      StatConfig::rank_sum_identity(), StatConfig::rank_sum_stephenson(3),
      StatConfig::mann_whitney_identity(), StatConfig::mann_whitney_power(3)};
  for (int trial = 0; trial < 500; ++trial) {
    const auto inst = random_instance(rng);
    const int n = static_cast<int>(inst.y.size());
    ExtVector shifted = inst.y;
    const int i = static_cast<int>(rng.next_below(n));
    // Push one coordinate in the statistic-increasing direction.
    if (inst.z[i]) {
      if (rng.next_below(4) == 0) shifted[i] = ExtValue::pos_inf();
      else if (shifted[i].is_finite())
        shifted[i] = ExtValue::finite(shifted[i].raw() + 1.0 + rng.next_below(5));
    } else {
      if (rng.next_below(4) == 0) shifted[i] = ExtValue::neg_inf();
      else if (shifted[i].is_finite())
        shifted[i] = ExtValue::finite(shifted[i].raw() - 1.0 - rng.next_below(5));
    }
    for (const auto& cfg : configs) {
      const double before =
          statistic(std::span<const std::uint8_t>(inst.z), inst.y, cfg);
      const double after =
          statistic(std::span<const std::uint8_t>(inst.z), shifted, cfg);
      CHECK(before <= after);
    }
  }
}

TEST_CASE("extended-real reduction leaves ranks and statistics unchanged") {
  Rng rng(23, 0);
  const StatConfig configs[] = {
      StatConfig::rank_sum_identity(), StatConfig::rank_sum_stephenson(3),
      StatConfig::mann_whitney_power(2)};
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = random_instance(rng);
    double lo = 0.0, hi = 0.0;
    bool any_finite = false;
    for (const auto v : inst.y) {
      if (!v.is_finite()) continue;
      lo = any_finite ? std::min(lo, v.raw()) : v.raw();
      hi = any_finite ? std::max(hi, v.raw()) : v.raw();
      any_finite = true;
    }
    const double a = 1.0 + rng.next_below(9);
    const double b = 1.0 + rng.next_below(9);
    ExtVector reduced = inst.y;
    for (auto& v : reduced) {
      if (v.is_neg_inf()) v = ExtValue::finite((any_finite ? lo : 0.0) - a);
      if (v.is_pos_inf()) v = ExtValue::finite((any_finite ? hi : 0.0) + b);
    }
    CHECK(ranks(inst.y) == ranks(reduced));
    for (const auto& cfg : configs) {
      CHECK(statistic(std::span<const std::uint8_t>(inst.z), inst.y, cfg) ==
            statistic(std::span<const std::uint8_t>(inst.z), reduced, cfg));
    }
  }
}

TEST_CASE("transforms are nondecreasing and validated") {
  for (int r = 1; r < 60; ++r) {
    CHECK(StatConfig::rank_sum_stephenson(6).phi(r) <=
          StatConfig::rank_sum_stephenson(6).phi(r + 1));
    CHECK(StatConfig::mann_whitney_power(4).phi(r) <=
          StatConfig::mann_whitney_power(4).phi(r + 1));
  }
  CHECK(StatConfig::rank_sum_stephenson(6).phi(5) == 0.0);
  CHECK(StatConfig::rank_sum_stephenson(6).phi(6) == 1.0);
  CHECK(StatConfig::rank_sum_stephenson(2).phi(4) == 3.0);
  CHECK(StatConfig::mann_whitney_power(3).phi(4) == 16.0);
  CHECK(StatConfig::mann_whitney_power(2).phi(0) == 0.0);

  StatConfig bad = StatConfig::rank_sum_stephenson(3);
  bad.family = StatFamily::MannWhitneyU;
  CHECK_THROWS_AS(bad.validate(), config_error);
  CHECK_THROWS_AS(StatConfig::rank_sum_stephenson(51).validate(), config_error);
  CHECK_THROWS_AS(StatConfig::mann_whitney_power(1).validate(), config_error);

  StatConfig table{StatFamily::RankSum, RankTransform::Table, 2, {0, 1, 3, 2}};
  CHECK_THROWS_AS(table.validate(), config_error);
  table.table = {0, 1, 3, 9};
  CHECK_NOTHROW(table.validate());
  CHECK(statistic(zvec({1, 0, 0}), finite_vec({5, 1, 2}), table) == 9.0);
}

TEST_CASE("stephenson values stay on the integer lattice within range") {
  // C(9, 5) = 126 and C(29, 9) = 10015005 must come out exact.
  CHECK(StatConfig::rank_sum_stephenson(6).phi(10) == 126.0);
  CHECK(StatConfig::rank_sum_stephenson(10).phi(30) == 10015005.0);
}
