#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace attrition::detail {

// inf{x : p(x) > alpha} for a nondecreasing right-steppy p whose jump points
// lie in the sorted unique `breaks`. Evaluates p only on the exact grid
// (breakpoints, midpoints, and one sentinel beyond each end), so results are
// bit-reproducible. Returns -inf when the whole line qualifies and +inf when
// no point does.
inline double invert_monotone_lower(const std::vector<double>& breaks,
                                    const std::function<double(double)>& pval,
                                    double alpha) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (breaks.empty()) {
    return pval(0.0) > alpha ? -kInf : kInf;
  }
  std::vector<double> pts;
  std::vector<double> anchor;  // breakpoint each grid point resolves to
  pts.reserve(breaks.size() * 2 + 1);
  anchor.reserve(breaks.size() * 2 + 1);
  pts.push_back(breaks.front() - 1.0);
  anchor.push_back(-kInf);
  for (std::size_t k = 0; k < breaks.size(); ++k) {
    pts.push_back(breaks[k]);
    anchor.push_back(breaks[k]);
    const double beyond = (k + 1 < breaks.size())
                              ? 0.5 * (breaks[k] + breaks[k + 1])
                              : breaks[k] + 1.0;
    pts.push_back(beyond);
    anchor.push_back(breaks[k]);
  }
  std::vector<std::size_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto it = std::partition_point(
      idx.begin(), idx.end(),
      [&](std::size_t i) { return pval(pts[i]) <= alpha; });
  if (it == idx.end()) return kInf;
  if (it == idx.begin()) return -kInf;
  return anchor[*it];
}

}  // namespace attrition::detail
