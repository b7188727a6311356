#include "attrition/hypergeom.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace attrition {

double log_binom(int a, int b) {
  if (b < 0 || b > a) throw std::domain_error("log_binom: need 0 <= b <= a");
  return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
}

double hypergeom_pmf(int population, int successes, int draws, int x) {
  if (successes < 0 || successes > population || draws < 0 ||
      draws > population) {
    throw std::domain_error("hypergeom_pmf: inconsistent parameters");
  }
  const int lo = std::max(0, draws - (population - successes));
  const int hi = std::min(draws, successes);
  if (x < lo || x > hi) return 0.0;
  return std::exp(log_binom(successes, x) +
                  log_binom(population - successes, draws - x) -
                  log_binom(population, draws));
}

double hypergeom_cdf(int population, int successes, int draws, int x) {
  const int lo = std::max(0, draws - (population - successes));
  const int hi = std::min(draws, successes);
  if (x < lo) return 0.0;
  if (x >= hi) return 1.0;
  double acc = 0.0;
  for (int v = lo; v <= x; ++v) {
    acc += hypergeom_pmf(population, successes, draws, v);
  }
  return std::min(acc, 1.0);
}

}  // namespace attrition
