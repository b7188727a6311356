#include "attrition/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "attrition/errors.hpp"
#include "attrition/rng.hpp"

namespace attrition {

std::string mechanism_name(Mechanism mech) {
  switch (mech) {
    case Mechanism::General: return "general";
    case Mechanism::MonotonePos: return "mp";
    case Mechanism::MonotoneNeg: return "mn";
    case Mechanism::SharpMissing: return "sharp";
    case Mechanism::MAR: return "mar";
  }
  return "?";
}

Mechanism parse_mechanism(const std::string& name) {
  if (name == "general") return Mechanism::General;
  if (name == "mp") return Mechanism::MonotonePos;
  if (name == "mn") return Mechanism::MonotoneNeg;
  if (name == "sharp") return Mechanism::SharpMissing;
  if (name == "mar") return Mechanism::MAR;
  throw config_error("unknown mechanism: " + name);
}

Dataset::Dataset(std::vector<std::uint8_t> z, std::vector<std::uint8_t> m,
                 std::vector<double> y)
    : z_(std::move(z)), m_(std::move(m)), y_(std::move(y)) {
  const std::size_t n = z_.size();
  if (m_.size() != n || y_.size() != n) {
    throw data_error("Dataset: column lengths differ");
  }
  if (n == 0) throw data_error("Dataset: no rows");
  for (std::size_t i = 0; i < n; ++i) {
    if (z_[i] > 1 || m_[i] > 1) throw data_error("Dataset: z and m must be 0/1");
    if (m_[i] && !std::isfinite(y_[i])) {
      throw data_error("Dataset: unit " + std::to_string(i + 1) +
                       " marked observed but has no finite outcome");
    }
    if (!m_[i]) y_[i] = std::numeric_limits<double>::quiet_NaN();
    n1_ += z_[i];
    n11_ += z_[i] & m_[i];
    n10_ += z_[i] & (1 - m_[i]);
    n01_ += (1 - z_[i]) & m_[i];
    n00_ += (1 - z_[i]) & (1 - m_[i]);
  }
  if (n1_ == 0 || n1_ == static_cast<int>(n)) {
    throw data_error("Dataset: degenerate design (all units in one arm)");
  }
}

double Dataset::y(int i) const {
  if (!m_[i]) {
    throw data_error("Dataset: outcome of unit " + std::to_string(i + 1) +
                     " is missing");
  }
  return y_[i];
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool is_missing_token(const std::string& field) {
  return field.empty() || lower(field) == "na";
}

struct Row {
  std::uint8_t z;
  std::uint8_t m;
  double y;  // NaN when missing
};

}  // namespace

Dataset load_dataset(std::istream& source,
                     std::optional<std::uint64_t> shuffle_seed) {
  std::string line;
  if (!std::getline(source, line)) throw data_error("CSV: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  int col_z = -1, col_m = -1, col_y = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = lower(header[c]);
    if (name == "z") col_z = static_cast<int>(c);
    else if (name == "m") col_m = static_cast<int>(c);
    else if (name == "y") col_y = static_cast<int>(c);
    else throw data_error("CSV: unknown column '" + header[c] + "'");
  }
  if (col_z < 0 || col_y < 0) {
    throw data_error("CSV: header must contain columns z and y");
  }

  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw data_error("CSV line " + std::to_string(line_no) +
                       ": expected " + std::to_string(header.size()) +
                       " fields, found " + std::to_string(fields.size()));
    }
    Row row{};
    const std::string& zf = fields[col_z];
    if (zf == "0") row.z = 0;
    else if (zf == "1") row.z = 1;
    else {
      throw data_error("CSV line " + std::to_string(line_no) +
                       ": z must be 0 or 1, found '" + zf + "'");
    }
    const std::string& yf = fields[col_y];
    bool y_missing = is_missing_token(yf);
    if (!y_missing) {
      try {
        std::size_t used = 0;
        row.y = std::stod(yf, &used);
        if (used != yf.size()) throw std::invalid_argument(yf);
      } catch (const std::exception&) {
        throw data_error("CSV line " + std::to_string(line_no) +
                         ": cannot parse outcome '" + yf + "'");
      }
      if (!std::isfinite(row.y)) {
        throw data_error("CSV line " + std::to_string(line_no) +
                         ": outcome must be finite");
      }
    } else {
      row.y = std::numeric_limits<double>::quiet_NaN();
    }
    if (col_m >= 0) {
      const std::string& mf = fields[col_m];
      if (mf == "0") row.m = 0;
      else if (mf == "1") row.m = 1;
      else {
        throw data_error("CSV line " + std::to_string(line_no) +
                         ": m must be 0 or 1, found '" + mf + "'");
      }
      if (row.m && y_missing) {
        throw data_error("CSV line " + std::to_string(line_no) +
                         ": m=1 but outcome is missing");
      }
      if (!row.m && !y_missing) {
        throw data_error("CSV line " + std::to_string(line_no) +
                         ": m=0 but outcome is present");
      }
    } else {
      row.m = y_missing ? 0 : 1;
    }
    rows.push_back(row);
  }
  if (rows.empty()) throw data_error("CSV: no data rows");

  if (shuffle_seed) {
    Rng rng(*shuffle_seed, /*stream=*/0x5u);
    for (std::size_t i = rows.size() - 1; i > 0; --i) {
      const std::size_t j = rng.next_below(i + 1);
      std::swap(rows[i], rows[j]);
    }
  }

  std::vector<std::uint8_t> z, m;
  std::vector<double> y;
  z.reserve(rows.size());
  m.reserve(rows.size());
  y.reserve(rows.size());
  for (const Row& r : rows) {
    z.push_back(r.z);
    m.push_back(r.m);
    y.push_back(r.y);
  }
  return Dataset(std::move(z), std::move(m), std::move(y));
}

Dataset load_dataset_file(const std::string& path,
                          std::optional<std::uint64_t> shuffle_seed) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open data file: " + path);
  return load_dataset(in, shuffle_seed);
}

}  // namespace attrition
