#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace attrition {

// Missingness mechanism linking the potential missingness indicators to the
// observed data. MonotonePos encodes M_i(1) >= M_i(0) (treatment discourages
// missingness), MonotoneNeg the reverse, SharpMissing M_i(1) == M_i(0).
enum class Mechanism : std::uint8_t {
  General,
  MonotonePos,
  MonotoneNeg,
  SharpMissing,
  MAR,
};

std::string mechanism_name(Mechanism mech);
Mechanism parse_mechanism(const std::string& name);

// Observed data of a two-arm completely randomized experiment with possibly
// missing outcomes. Immutable after construction and safe to share across
// threads.
class Dataset {
 public:
  // z_i in {0,1}; m_i = 1 iff the outcome of unit i is observed; y_i is the
  // observed outcome (finite) for m_i = 1 and ignored otherwise.
  Dataset(std::vector<std::uint8_t> z, std::vector<std::uint8_t> m,
          std::vector<double> y);

  int n() const { return static_cast<int>(z_.size()); }
  int n1() const { return n1_; }
  int n0() const { return n() - n1_; }
  int n11() const { return n11_; }
  int n10() const { return n10_; }
  int n01() const { return n01_; }
  int n00() const { return n00_; }

  const std::vector<std::uint8_t>& z() const { return z_; }
  const std::vector<std::uint8_t>& m() const { return m_; }

  bool observed(int i) const { return m_[i] != 0; }
  // Observed outcome of unit i; requires m_i = 1.
  double y(int i) const;

  // Raw outcome column: finite where observed, NaN where missing.
  const std::vector<double>& y_raw() const { return y_; }

 private:
  std::vector<std::uint8_t> z_;
  std::vector<std::uint8_t> m_;
  std::vector<double> y_;
  int n1_ = 0, n11_ = 0, n10_ = 0, n01_ = 0, n00_ = 0;
};

// Parses a CSV byte stream with header `z,m,y` or `z,y` (any column order;
// extra columns rejected). Missing outcomes are an empty field or "NA"
// (case-insensitive). An explicit m column must be consistent with y's
// emptiness. If shuffle_seed is given, units are permuted once by a seeded
// uniform shuffle before index assignment, so downstream index tie-breaking
// is randomized yet reproducible.
Dataset load_dataset(std::istream& source,
                     std::optional<std::uint64_t> shuffle_seed = std::nullopt);

Dataset load_dataset_file(const std::string& path,
                          std::optional<std::uint64_t> shuffle_seed = std::nullopt);

}  // namespace attrition
