#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "attrition/dataset.hpp"
#include "attrition/null_dist.hpp"
#include "attrition/testing.hpp"

using namespace attrition;

// The CLI wraps these file-facing surfaces; the binary itself is exercised
// by the cli_* ctest entries.

TEST_CASE("dataset files load via the path helper") {
  const std::string path = "cli_data_test.csv";
  {
    std::ofstream out(path);
    out << "z,y\n1,3.25\n1,NA\n0,1.5\n0,0.75\n";
  }
  const Dataset ds = load_dataset_file(path);
  CHECK(ds.n() == 4);
  CHECK(ds.n10() == 1);

  const Dataset shuffled = load_dataset_file(path, 9);
  CHECK(shuffled.n() == 4);
  CHECK(shuffled.n10() == 1);
  std::remove(path.c_str());
}

TEST_CASE("null cache reuses built distributions") {
  NullRequest req;
  req.draws = 500;
  req.seed = 4;
  NullCache cache(req);
  const auto& a = cache.get(DesignSpec{12, 5}, StatConfig::rank_sum_identity());
  const auto& b = cache.get(DesignSpec{12, 5}, StatConfig::rank_sum_identity());
  CHECK(&a == &b);
  const auto& c = cache.get(DesignSpec{12, 6}, StatConfig::rank_sum_identity());
  CHECK(&a != &c);
  const auto& d =
      cache.get(DesignSpec{12, 5}, StatConfig::rank_sum_stephenson(3));
  CHECK(&a != &d);
}
