#include "doctest.h"

#include <cstdio>
#include <set>

#include "attrition/errors.hpp"
#include "attrition/null_dist.hpp"
#include "attrition/oracle.hpp"
#include "attrition/rng.hpp"

using namespace attrition;

TEST_CASE("exact null for the 4-choose-2 rank sum") {
  const NullDistribution dist =
      build_null(DesignSpec{4, 2}, StatConfig::rank_sum_identity());
  CHECK(dist.exact());
  CHECK(dist.sorted_values() == std::vector<double>{3, 4, 5, 5, 6, 7});
  CHECK(dist.tail_prob(7.0) == doctest::Approx(1.0 / 6.0));
  CHECK(dist.tail_prob(3.0) == 1.0);
  CHECK(dist.tail_prob(5.0) == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("exact null for the smallest design") {
  const NullDistribution dist =
      build_null(DesignSpec{2, 1}, StatConfig::rank_sum_identity());
  CHECK(dist.sorted_values() == std::vector<double>{1, 2});
}

TEST_CASE("revolving door enumerates each subset once via single exchanges") {
  for (const auto [n, k] : {std::pair{5, 2}, {6, 3}, {7, 1}, {7, 6}, {8, 4}}) {
    std::set<int> current;
    for (int i = 0; i < k; ++i) current.insert(i);
    std::set<std::set<int>> seen;
    int swaps = 0;
    for_each_subset_revolving_door(
        n, k,
        [&](int out, int in) {
          REQUIRE(current.count(out) == 1);
          REQUIRE(current.count(in) == 0);
          current.erase(out);
          current.insert(in);
          ++swaps;
        },
        [&]() { CHECK(seen.insert(current).second); });
    long expect = 1;
    for (int u = 1; u <= k; ++u) expect = expect * (n - k + u) / u;
    CHECK(static_cast<long>(seen.size()) == expect);
    CHECK(swaps == expect - 1);
  }
}

TEST_CASE("exact null equals the naive oracle for every family") {
  const StatConfig configs[] = {
      StatConfig::rank_sum_identity(), StatConfig::rank_sum_stephenson(3),
      StatConfig::mann_whitney_identity(), StatConfig::mann_whitney_power(3)};
  ExtVector reference;
  for (int i = 1; i <= 6; ++i) reference.push_back(ExtValue::finite(i));
  for (const auto& cfg : configs) {
    const NullDistribution dist = build_null(DesignSpec{6, 3}, cfg);
    const std::vector<double> naive =
        oracle::brute_force_null(DesignSpec{6, 3}, cfg, reference);
    CHECK(dist.sorted_values() == naive);
  }
}

TEST_CASE("distribution-freeness: any strictly increasing vector gives the same law") {
  Rng rng(3, 0);
  const StatConfig cfg = StatConfig::rank_sum_stephenson(3);
  const NullDistribution dist = build_null(DesignSpec{7, 3}, cfg);
  for (int trial = 0; trial < 20; ++trial) {
    ExtVector y;
    double v = -50.0;
    for (int i = 0; i < 7; ++i) {
      v += 0.25 + static_cast<double>(rng.next_below(100)) / 10.0;
      y.push_back(ExtValue::finite(v));
    }
    CHECK(oracle::brute_force_null(DesignSpec{7, 3}, cfg, y) ==
          dist.sorted_values());
  }
}

TEST_CASE("exact validity: sub-uniform p-values over all assignments") {
  const StatConfig cfg = StatConfig::rank_sum_identity();
  for (const auto [n, n1] : {std::pair{6, 3}, {8, 3}, {9, 5}}) {
    const NullDistribution dist = build_null(DesignSpec{n, n1}, cfg);
    ExtVector y;
    for (int i = 0; i < n; ++i) y.push_back(ExtValue::finite(i * 1.0));
    for (const double alpha : {0.05, 0.1, 0.25, 0.5}) {
      long hits = 0, total = 0;
      oracle::for_each_assignment(n, n1, [&](const std::vector<std::uint8_t>& z) {
        const double t = statistic(std::span<const std::uint8_t>(z), y, cfg);
        hits += dist.tail_prob(t) <= alpha ? 1 : 0;
        ++total;
      });
      CHECK(static_cast<double>(hits) / total <= alpha + 1e-12);
    }
  }
}

TEST_CASE("monte carlo mode is seeded, deterministic, and thread-independent") {
  NullRequest req;
  req.mode = NullMode::MonteCarlo;
  req.draws = 5000;
  req.seed = 99;
  req.threads = 1;
  const NullDistribution a = build_null(DesignSpec{30, 12},
                                        StatConfig::mann_whitney_power(2), req);
  req.threads = 4;
  const NullDistribution b = build_null(DesignSpec{30, 12},
                                        StatConfig::mann_whitney_power(2), req);
  CHECK(a.sorted_values() == b.sorted_values());
  CHECK_FALSE(a.exact());
  // Add-one correction keeps every tail probability positive.
  CHECK(a.tail_prob(1e18) == doctest::Approx(1.0 / 5001.0));
  CHECK(a.tail_prob(1e18) >= a.min_p());
}

TEST_CASE("monte carlo approximates the exact law") {
  NullRequest req;
  req.mode = NullMode::MonteCarlo;
  req.draws = 20000;
  req.seed = 5;
  const StatConfig cfg = StatConfig::rank_sum_stephenson(6);
  const NullDistribution mc = build_null(DesignSpec{10, 5}, cfg, req);
  const NullDistribution exact = build_null(DesignSpec{10, 5}, cfg);
  double ks = 0.0;
  for (const double t : exact.sorted_values()) {
    ks = std::max(ks, std::fabs(mc.tail_prob(t) - exact.tail_prob(t)));
  }
  CHECK(ks < 0.02);
}

TEST_CASE("capacity errors and auto fallback") {
  NullRequest req;
  req.mode = NullMode::Exact;
  CHECK_THROWS_AS(build_null(DesignSpec{100, 50}, StatConfig::rank_sum_identity(), req),
                  capacity_error);
  req.mode = NullMode::Auto;
  req.draws = 100;
  const NullDistribution dist =
      build_null(DesignSpec{100, 50}, StatConfig::rank_sum_identity(), req);
  CHECK_FALSE(dist.exact());
  CHECK(dist.draw_count() == 100);
}

TEST_CASE("cache file round-trips") {
  NullRequest req;
  req.mode = NullMode::MonteCarlo;
  req.draws = 300;
  req.seed = 17;
  const NullDistribution dist =
      build_null(DesignSpec{40, 20}, StatConfig::rank_sum_stephenson(4), req);
  const std::string path = "null_cache_test.bin";
  dist.save(path);
  const NullDistribution loaded = NullDistribution::load(path);
  std::remove(path.c_str());
  CHECK(loaded.sorted_values() == dist.sorted_values());
  CHECK(loaded.design().n == 40);
  CHECK(loaded.design().n1 == 20);
  CHECK(loaded.config() == dist.config());
  CHECK(loaded.exact() == dist.exact());
  CHECK(loaded.seed() == dist.seed());
}
