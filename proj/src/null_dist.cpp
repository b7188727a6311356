#include "attrition/null_dist.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "attrition/errors.hpp"
#include "attrition/parallel.hpp"
#include "attrition/rng.hpp"

namespace attrition {

void DesignSpec::validate() const {
  if (n < 2 || n1 < 1 || n1 > n - 1) {
    throw config_error("DesignSpec requires 1 <= n1 <= n-1");
  }
}

std::optional<std::int64_t> DesignSpec::assignment_count(std::int64_t cap) const {
  // C(n, n1) with early bail-out once past the cap.
  const int k = std::min(n1, n - n1);
  long double acc = 1.0L;
  for (int u = 1; u <= k; ++u) {
    acc = acc * static_cast<long double>(n - k + u) / static_cast<long double>(u);
    if (acc > static_cast<long double>(cap) * 2.0L) return std::nullopt;
  }
  const auto count = static_cast<std::int64_t>(llroundl(acc));
  if (count > cap) return std::nullopt;
  return count;
}

namespace {

// Walks the revolving-door order R(n,k) = R(n-1,k) followed by the reverse
// of R(n-1,k-1) with element n-1 adjoined. first(R(n,k)) = {0..k-1} and
// last(R(n,k)) = {0..k-2, n-1}, so the seam between the two halves is the
// single exchange (k-2 out, n-1 in), degenerating to (n-2 out, n-1 in) when
// k = 1.
struct RevolvingDoor {
  const std::function<void(int, int)>& swap;
  const std::function<void()>& visit;

  // Transitions of R(n,k) from first to last; elements >= n are never moved,
  // so a caller may pin adjoined elements.
  void forward(int n, int k) {
    if (k == 0 || k == n) return;
    forward(n - 1, k);
    const int other = (k >= 2) ? (k - 2) : (n - 2);
    swap(other, n - 1);
    visit();
    backward(n - 1, k - 1);
  }

  // Transitions of reverse(R(n,k)) from last back to first.
  void backward(int n, int k) {
    if (k == 0 || k == n) return;
    forward(n - 1, k - 1);
    const int other = (k >= 2) ? (k - 2) : (n - 2);
    swap(n - 1, other);
    visit();
    backward(n - 1, k);
  }
};

// phi(reference rank) table for positions 0..n-1 (reference vector 1..n has
// rank_i = i+1).
std::vector<double> reference_phi(const StatConfig& cfg, int n) {
  std::vector<double> phi(n + 1);
  for (int r = 0; r <= n; ++r) phi[r] = cfg.phi(r);
  return phi;
}

// Mann-Whitney value of a sorted subset of positions (0-based) under the
// reference vector: the treated unit at sorted position s_k (1-based rank
// s_k+1) has s_k - k controls below it, k being its 0-based order in the
// subset. Summation runs in ascending-position order to match the generic
// statistic() path bit-for-bit.
double mwu_value_sorted(const std::vector<int>& sorted_subset,
                        const std::vector<double>& phi) {
  double total = 0.0;
  for (std::size_t k = 0; k < sorted_subset.size(); ++k) {
    total += phi[sorted_subset[k] - static_cast<int>(k)];
  }
  return total;
}

}  // namespace

void for_each_subset_revolving_door(
    int n, int k, const std::function<void(int out, int in)>& swap,
    const std::function<void()>& visit) {
  visit();  // first subset {0..k-1}, prepared by the caller
  RevolvingDoor rd{swap, visit};
  rd.forward(n, k);
}

NullDistribution build_null(const DesignSpec& design, const StatConfig& cfg,
                            const NullRequest& request) {
  design.validate();
  cfg.validate();
  const int n = design.n;
  const int n1 = design.n1;
  const std::vector<double> phi = reference_phi(cfg, n);

  NullDistribution dist;
  dist.design_ = design;
  dist.cfg_ = cfg;

  const std::optional<std::int64_t> exact_count =
      design.assignment_count(request.exact_cap);
  const bool use_exact =
      request.mode == NullMode::Exact ||
      (request.mode == NullMode::Auto && exact_count.has_value());
  if (request.mode == NullMode::Exact && !exact_count) {
    throw capacity_error(
        "exact null requested but C(n, n1) exceeds the enumeration cap (" +
        std::to_string(request.exact_cap) + "); use Monte Carlo mode");
  }

  if (use_exact) {
    dist.exact_ = true;
    dist.values_.reserve(static_cast<std::size_t>(*exact_count));
    std::vector<int> sorted_subset(n1);
    for (int i = 0; i < n1; ++i) sorted_subset[i] = i;
    const bool rank_sum = cfg.family == StatFamily::RankSum;
    // Rank-sum value is maintained incrementally across the one-exchange
    // steps; within the exact cap the phi values are exact integers in
    // doubles, so the running sum is order-independent.
    double rs_value = 0.0;
    for (int i = 0; i < n1; ++i) rs_value += phi[i + 1];
    const auto swap_fn = [&](int out, int in) {
      const auto it =
          std::lower_bound(sorted_subset.begin(), sorted_subset.end(), out);
      sorted_subset.erase(it);
      sorted_subset.insert(
          std::lower_bound(sorted_subset.begin(), sorted_subset.end(), in), in);
      if (rank_sum) rs_value += phi[in + 1] - phi[out + 1];
    };
    const auto visit_fn = [&]() {
      dist.values_.push_back(rank_sum ? rs_value
                                      : mwu_value_sorted(sorted_subset, phi));
    };
    for_each_subset_revolving_door(n, n1, swap_fn, visit_fn);
  } else {
    dist.exact_ = false;
    dist.seed_ = request.seed;
    const std::int64_t draws = request.draws;
    if (draws <= 0) throw config_error("Monte Carlo null requires draws > 0");
    dist.values_.assign(static_cast<std::size_t>(draws), 0.0);
    const bool rank_sum = cfg.family == StatFamily::RankSum;
    parallel_for_chunks(draws, request.threads, [&](std::int64_t lo,
                                                    std::int64_t hi) {
      std::vector<int> scratch, subset;
      for (std::int64_t b = lo; b < hi; ++b) {
        Rng rng(request.seed, static_cast<std::uint64_t>(b));
        sample_subset(rng, n, n1, scratch, subset);
        double value = 0.0;
        if (rank_sum) {
          for (const int pos : subset) value += phi[pos + 1];
        } else {
          std::sort(subset.begin(), subset.end());
          value = mwu_value_sorted(subset, phi);
        }
        dist.values_[static_cast<std::size_t>(b)] = value;
      }
    });
  }
  std::sort(dist.values_.begin(), dist.values_.end());
  return dist;
}

double NullDistribution::tail_prob(double t) const {
  // Statistic values live on an integer lattice of phi sums; the relative
  // slack absorbs double rounding of very large phi without merging truly
  // distinct small values.
  const double slack = 1e-9 * std::max(1.0, std::abs(t));
  const auto it =
      std::lower_bound(values_.begin(), values_.end(), t - slack);
  const auto ge = static_cast<double>(values_.end() - it);
  const auto total = static_cast<double>(values_.size());
  if (exact_) return ge / total;
  return (1.0 + ge) / (total + 1.0);
}

double NullDistribution::min_p() const {
  const auto total = static_cast<double>(values_.size());
  return exact_ ? 1.0 / total : 1.0 / (total + 1.0);
}

namespace {

struct CacheHeader {
  char magic[4];
  std::uint32_t n;
  std::uint64_t seed;
  std::uint32_t n1;
  std::uint8_t family;
  std::uint8_t transform;
  std::uint8_t s;
  std::uint8_t mode;  // 0 exact, 1 Monte Carlo
  std::uint32_t draws;
  std::uint32_t value_count;
};
static_assert(sizeof(CacheHeader) == 32, "cache header is 32 bytes");

constexpr char kMagic[4] = {'G', 'R', 'P', 'H'};

}  // namespace

void NullDistribution::save(const std::string& path) const {
  if (cfg_.transform == RankTransform::Table) {
    throw config_error("table-transform null distributions are not cacheable");
  }
  CacheHeader h{};
  std::memcpy(h.magic, kMagic, 4);
  h.n = static_cast<std::uint32_t>(design_.n);
  h.n1 = static_cast<std::uint32_t>(design_.n1);
  h.family = static_cast<std::uint8_t>(cfg_.family);
  h.transform = static_cast<std::uint8_t>(cfg_.transform);
  h.s = static_cast<std::uint8_t>(cfg_.s);
  h.mode = exact_ ? 0 : 1;
  h.draws = exact_ ? 0u : static_cast<std::uint32_t>(values_.size());
  h.seed = seed_;
  h.value_count = static_cast<std::uint32_t>(values_.size());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write null cache: " + path);
  out.write(reinterpret_cast<const char*>(&h), sizeof(h));
  out.write(reinterpret_cast<const char*>(values_.data()),
            static_cast<std::streamsize>(values_.size() * sizeof(double)));
  if (!out) throw data_error("short write to null cache: " + path);
}

NullDistribution NullDistribution::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open null cache: " + path);
  CacheHeader h{};
  in.read(reinterpret_cast<char*>(&h), sizeof(h));
  if (!in || std::memcmp(h.magic, kMagic, 4) != 0) {
    throw data_error("bad null cache header: " + path);
  }
  NullDistribution dist;
  dist.design_ = DesignSpec{static_cast<int>(h.n), static_cast<int>(h.n1)};
  dist.cfg_.family = static_cast<StatFamily>(h.family);
  dist.cfg_.transform = static_cast<RankTransform>(h.transform);
  dist.cfg_.s = h.s;
  dist.exact_ = h.mode == 0;
  dist.seed_ = h.seed;
  dist.values_.resize(h.value_count);
  in.read(reinterpret_cast<char*>(dist.values_.data()),
          static_cast<std::streamsize>(dist.values_.size() * sizeof(double)));
  if (!in) throw data_error("truncated null cache: " + path);
  if (!std::is_sorted(dist.values_.begin(), dist.values_.end())) {
    throw data_error("corrupt null cache (values not sorted): " + path);
  }
  return dist;
}

}  // namespace attrition
