#pragma once

namespace attrition {

// log C(a, b); 0 <= b <= a.
double log_binom(int a, int b);

// P(X = x) for X ~ Hypergeometric(population, successes, draws): the number
// of successes in a simple random sample of `draws` units without
// replacement.
double hypergeom_pmf(int population, int successes, int draws, int x);

// P(X <= x), summed over the feasible support.
double hypergeom_cdf(int population, int successes, int draws, int x);

}  // namespace attrition
