#include "attrition/simharness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "attrition/errors.hpp"
#include "attrition/parallel.hpp"
#include "attrition/rng.hpp"

#include "json.hpp"

namespace attrition {

std::string miss_family_name(MissFamily f) {
  switch (f) {
    case MissFamily::Threshold: return "threshold";
    case MissFamily::MonotonePos: return "mp";
    case MissFamily::MonotoneNeg: return "mn";
    case MissFamily::MAR: return "mar";
    case MissFamily::Sharp: return "sharp";
  }
  return "?";
}

MissFamily parse_miss_family(const std::string& name) {
  if (name == "threshold") return MissFamily::Threshold;
  if (name == "mp") return MissFamily::MonotonePos;
  if (name == "mn") return MissFamily::MonotoneNeg;
  if (name == "mar") return MissFamily::MAR;
  if (name == "sharp") return MissFamily::Sharp;
  throw config_error("unknown missingness family: " + name);
}

std::vector<double> Population::tau() const {
  std::vector<double> t(y0.size());
  for (std::size_t i = 0; i < y0.size(); ++i) t[i] = y1[i] - y0[i];
  return t;
}

void SimSpec::validate() const {
  if (n < 2 || n1 < 1 || n1 > n - 1) throw config_error("SimSpec: bad design");
  if (reps < 1) throw config_error("SimSpec: reps must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("SimSpec: bad alpha");
  switch (family) {
    case MissFamily::Threshold:
      if (!(p > 0 && p < 1 && q > 0 && q < 1)) {
        throw config_error("SimSpec: threshold family needs p, q in (0,1)");
      }
      break;
    case MissFamily::MonotonePos:
    case MissFamily::MonotoneNeg:
      if (!(q > 0 && p - q > 0 && p + q < 1)) {
        throw config_error("SimSpec: monotone family needs 0 < p-q, p+q < 1");
      }
      break;
    case MissFamily::MAR:
    case MissFamily::Sharp:
      if (!(p > 0 && p < 1)) throw config_error("SimSpec: need p in (0,1)");
      break;
  }
}

int SimSpec::effective_quantile_k() const {
  if (quantile_k > 0) return quantile_k;
  return static_cast<int>(std::ceil(0.95 * n1));
}

std::string ProcedureSpec::display_name() const {
  if (!name.empty()) return name;
  std::ostringstream os;
  switch (kind) {
    case Kind::WorstCaseSharp: os << "worst-" << mechanism_name(mech); break;
    case Kind::NaiveSubsample: os << "naive"; break;
    case Kind::TwoStep: os << "twostep"; break;
    case Kind::QuantileWorst: os << "quantile-" << mechanism_name(mech); break;
  }
  os << ":" << cfg.family_name() << ":" << cfg.transform_name();
  if (cfg.transform != RankTransform::Identity) os << ":" << cfg.s;
  return os.str();
}

Population generate_population(const SimSpec& spec, std::int64_t rep_index) {
  const int n = spec.n;
  Population pop;
  pop.y0.resize(n);
  pop.y1.resize(n);
  pop.m0.resize(n);
  pop.m1.resize(n);
  Rng rng(spec.seed, static_cast<std::uint64_t>(rep_index) * 2);
  for (int i = 0; i < n; ++i) pop.y0[i] = inverse_normal_cdf(rng.next_uniform());
  if (spec.sigma > 0.0) {
    for (int i = 0; i < n; ++i) {
      pop.y1[i] = spec.sigma * inverse_normal_cdf(rng.next_uniform());
    }
  } else {
    pop.y1 = pop.y0;
  }
  switch (spec.family) {
    case MissFamily::Threshold: {
      // Selection on the realized outcome of each arm: observation under
      // control requires a small Y(0), observation under treatment a large
      // Y(1). The treatment-arm cutoff is the q-quantile of Y(1)'s own law,
      // which keeps the missing share at p/q regardless of sigma; with the
      // null effect model the two arms threshold the same variable.
      const double cp = inverse_normal_cdf(spec.p);
      const double scale1 = spec.sigma > 0.0 ? spec.sigma : 1.0;
      const double cq = scale1 * inverse_normal_cdf(spec.q);
      for (int i = 0; i < n; ++i) {
        pop.m0[i] = pop.y0[i] <= cp;
        pop.m1[i] = pop.y1[i] >= cq;
      }
      break;
    }
    case MissFamily::MonotonePos: {
      const double hi = inverse_normal_cdf(spec.p + spec.q);
      const double lo = inverse_normal_cdf(spec.p - spec.q);
      for (int i = 0; i < n; ++i) {
        pop.m1[i] = pop.y0[i] <= hi;
        pop.m0[i] = pop.y0[i] <= lo;
      }
      break;
    }
    case MissFamily::MonotoneNeg: {
      const double hi = inverse_normal_cdf(spec.p + spec.q);
      const double lo = inverse_normal_cdf(spec.p - spec.q);
      for (int i = 0; i < n; ++i) {
        pop.m1[i] = pop.y0[i] >= hi;
        pop.m0[i] = pop.y0[i] >= lo;
      }
      break;
    }
    case MissFamily::MAR: {
      for (int i = 0; i < n; ++i) pop.m0[i] = rng.next_bernoulli(spec.p);
      for (int i = 0; i < n; ++i) pop.m1[i] = rng.next_bernoulli(spec.p);
      break;
    }
    case MissFamily::Sharp: {
      const double cp = inverse_normal_cdf(spec.p);
      for (int i = 0; i < n; ++i) {
        pop.m0[i] = pop.y0[i] <= cp;
        pop.m1[i] = pop.m0[i];
      }
      break;
    }
  }
  return pop;
}

std::vector<std::uint8_t> draw_assignment(const SimSpec& spec,
                                          std::int64_t rep_index) {
  Rng rng(spec.seed, static_cast<std::uint64_t>(rep_index) * 2 + 1);
  std::vector<int> scratch, subset;
  sample_subset(rng, spec.n, spec.n1, scratch, subset);
  std::vector<std::uint8_t> z(static_cast<std::size_t>(spec.n), 0);
  for (const int i : subset) z[i] = 1;
  return z;
}

Dataset realize_observed(const Population& pop,
                         const std::vector<std::uint8_t>& z) {
  const int n = static_cast<int>(pop.y0.size());
  std::vector<std::uint8_t> m(n);
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    m[i] = z[i] ? pop.m1[i] : pop.m0[i];
    y[i] = m[i] ? (z[i] ? pop.y1[i] : pop.y0[i])
                : std::numeric_limits<double>::quiet_NaN();
  }
  return Dataset(std::vector<std::uint8_t>(z), std::move(m), std::move(y));
}

namespace {

// Shared state of one experiment run: a full-design cache (prebuilt, so
// worker threads never race on the expensive builds) and a per-subdesign
// cache for the naive drop-missing baseline.
struct ExperimentContext {
  // Null-draw streams are keyed off rotated seeds so they never collide
  // with the (seed, 2*rep) population and (seed, 2*rep+1) assignment
  // streams of the replicate loop.
  ExperimentContext(const SimSpec& spec)
      : full_nulls(NullRequest{NullMode::Auto, spec.null_draws,
                               spec.seed ^ 0xd1b54a32d192ed03ull, 2'000'000,
                               spec.threads}),
        naive_nulls(NullRequest{NullMode::Auto, spec.naive_draws,
                                spec.seed ^ 0x9e3779b97f4a7c15ull, 200'000, 1}) {}
  NullCache full_nulls;
  NullCache naive_nulls;
};

double reject_or_throw(const SimSpec& spec, const ProcedureSpec& proc,
                       const Dataset& ds, ExperimentContext& ctx) {
  const DesignSpec design{spec.n, spec.n1};
  switch (proc.kind) {
    case ProcedureSpec::Kind::WorstCaseSharp: {
      const auto& null = ctx.full_nulls.get(design, proc.cfg);
      return sharp_test(ds, EffectVector::constant(ds.n(), 0.0), proc.mech,
                        proc.cfg, null, proc.b).p_value;
    }
    case ProcedureSpec::Kind::NaiveSubsample: {
      auto [sub, map] = restrict_observed(ds);
      (void)map;
      const auto& null =
          ctx.naive_nulls.get(DesignSpec{sub.n(), sub.n1()}, proc.cfg);
      return sharp_test_subsample(ds, EffectVector::constant(ds.n(), 0.0),
                                  proc.cfg, null).p_value;
    }
    case ProcedureSpec::Kind::TwoStep: {
      const auto& null = ctx.full_nulls.get(design, proc.cfg);
      return two_step_test(ds, EffectVector::constant(ds.n(), 0.0), proc.cfg,
                           spec.alpha, proc.beta, null).first.p_value;
    }
    case ProcedureSpec::Kind::QuantileWorst: {
      const auto& null = ctx.full_nulls.get(design, proc.cfg);
      return quantile_test(ds,
                           QuantileHypothesis{spec.effective_quantile_k(),
                                              spec.quantile_c, 1.0},
                           proc.mech, proc.cfg, null).p_value;
    }
  }
  throw config_error("unknown procedure kind");
}

}  // namespace

ExperimentReport run_experiment(ExperimentKind kind, const SimSpec& spec,
                                const std::vector<ProcedureSpec>& procedures) {
  spec.validate();
  if (procedures.empty()) throw config_error("no procedures requested");
  for (const auto& proc : procedures) proc.cfg.validate();

  ExperimentContext ctx(spec);
  // Prebuild the shared full-design nulls with all threads before the
  // replicate loop goes wide.
  for (const auto& proc : procedures) {
    if (proc.kind != ProcedureSpec::Kind::NaiveSubsample) {
      ctx.full_nulls.get(DesignSpec{spec.n, spec.n1}, proc.cfg);
    }
  }

  const std::size_t P = procedures.size();
  const int reps = spec.reps;
  // success[r*P + p] = 1 when procedure p rejects (Type1/Power) or covers
  // (QuantileBand) on replicate r.
  std::vector<std::uint8_t> success(static_cast<std::size_t>(reps) * P, 0);
  std::vector<double> band_lower_store;
  const int n1 = spec.n1;
  if (kind == ExperimentKind::QuantileBand && spec.collect_band_medians) {
    band_lower_store.assign(static_cast<std::size_t>(reps) * P * n1, 0.0);
  }

  parallel_for_chunks(reps, spec.threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t rep = lo; rep < hi; ++rep) {
      const Population pop = generate_population(spec, rep);
      const std::vector<std::uint8_t> z = draw_assignment(spec, rep);
      const Dataset ds = realize_observed(pop, z);
      for (std::size_t pi = 0; pi < P; ++pi) {
        const ProcedureSpec& proc = procedures[pi];
        if (kind == ExperimentKind::QuantileBand) {
          // True effect quantiles among treated units. Coverage of rank k
          // holds iff the true tau_t(k) is not rejected, i.e. the p-value at
          // c = tau_t(k) exceeds alpha; the band itself need not be built.
          std::vector<double> tau_t;
          const std::vector<double> tau = pop.tau();
          for (int i = 0; i < spec.n; ++i) {
            if (z[i]) tau_t.push_back(tau[i]);
          }
          std::sort(tau_t.begin(), tau_t.end());
          const auto& null =
              ctx.full_nulls.get(DesignSpec{spec.n, spec.n1}, proc.cfg);
          bool covered = true;
          for (int k = n1; k >= 1 && covered; --k) {
            const double p =
                quantile_test(ds, QuantileHypothesis{k, tau_t[k - 1], 1.0},
                              proc.mech, proc.cfg, null).p_value;
            covered = p > spec.alpha;
          }
          success[rep * P + pi] = covered ? 1 : 0;
          if (spec.collect_band_medians) {
            const QuantileBand band =
                prediction_band(ds, proc.mech, proc.cfg, spec.alpha,
                                ctx.full_nulls, BandPopulation::Treated);
            for (int k = 0; k < n1; ++k) {
              band_lower_store[(rep * P + pi) * n1 + k] = band.lower[k];
            }
          }
        } else {
          const double p = reject_or_throw(spec, proc, ds, ctx);
          success[rep * P + pi] = p <= spec.alpha ? 1 : 0;
        }
      }
    }
  });

  ExperimentReport report;
  report.kind = kind;
  for (std::size_t pi = 0; pi < P; ++pi) {
    std::int64_t count = 0;
    for (int rep = 0; rep < reps; ++rep) count += success[rep * P + pi];
    ProcedureReport row;
    row.name = procedures[pi].display_name();
    row.reps = reps;
    row.estimate = static_cast<double>(count) / reps;
    row.std_error =
        std::sqrt(row.estimate * (1.0 - row.estimate) / reps);
    report.rows.push_back(std::move(row));
    if (kind == ExperimentKind::QuantileBand && spec.collect_band_medians) {
      std::vector<double> medians(n1);
      std::vector<double> column(reps);
      for (int k = 0; k < n1; ++k) {
        for (int rep = 0; rep < reps; ++rep) {
          column[rep] = band_lower_store[(rep * P + pi) * n1 + k];
        }
        std::sort(column.begin(), column.end());
        medians[k] = reps % 2 ? column[reps / 2]
                              : 0.5 * (column[reps / 2 - 1] + column[reps / 2]);
      }
      report.band_median_lower.push_back(std::move(medians));
    }
  }
  return report;
}

namespace {

std::string trim_copy(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

StatConfig parse_stat_token(const std::string& token) {
  // family:s with s = 1 meaning the identity transform.
  const auto colon = token.find(':');
  const std::string fam = colon == std::string::npos ? token : token.substr(0, colon);
  const int s = colon == std::string::npos ? 1 : std::stoi(token.substr(colon + 1));
  if (fam == "ranksum") {
    return s <= 1 ? StatConfig::rank_sum_identity()
                  : StatConfig::rank_sum_stephenson(s);
  }
  if (fam == "mwu") {
    return s <= 1 ? StatConfig::mann_whitney_identity()
                  : StatConfig::mann_whitney_power(s);
  }
  throw config_error("unknown statistic family: " + fam);
}

ProcedureSpec parse_procedure_token(const std::string& token) {
  // kind[:mech]:family:s, e.g. worst:general:ranksum:1, naive:ranksum:1,
  // twostep:mwu:6, quantile:mp:mwu:6.
  std::vector<std::string> parts;
  std::stringstream ss(token);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(trim_copy(part));
  if (parts.empty()) throw config_error("empty procedure token");
  ProcedureSpec proc;
  std::size_t at = 1;
  if (parts[0] == "worst") {
    proc.kind = ProcedureSpec::Kind::WorstCaseSharp;
    proc.mech = parse_mechanism(parts.at(at++));
  } else if (parts[0] == "naive") {
    proc.kind = ProcedureSpec::Kind::NaiveSubsample;
  } else if (parts[0] == "twostep") {
    proc.kind = ProcedureSpec::Kind::TwoStep;
    proc.mech = Mechanism::MonotonePos;
  } else if (parts[0] == "quantile") {
    proc.kind = ProcedureSpec::Kind::QuantileWorst;
    proc.mech = parse_mechanism(parts.at(at++));
  } else {
    throw config_error("unknown procedure kind: " + parts[0]);
  }
  if (at >= parts.size()) throw config_error("procedure missing statistic: " + token);
  std::string stat = parts[at];
  if (at + 1 < parts.size()) stat += ":" + parts[at + 1];
  proc.cfg = parse_stat_token(stat);
  return proc;
}

}  // namespace

SimFile parse_sim_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open simulation spec: " + path);
  SimFile file;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim_copy(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw data_error("spec line " + std::to_string(line_no) +
                       ": expected key=value");
    }
    const std::string key = trim_copy(t.substr(0, eq));
    const std::string value = trim_copy(t.substr(eq + 1));
    try {
      if (key == "kind") {
        if (value == "type1") file.kind = ExperimentKind::Type1;
        else if (value == "power") file.kind = ExperimentKind::Power;
        else if (value == "quantile-band") file.kind = ExperimentKind::QuantileBand;
        else throw config_error("unknown kind: " + value);
      } else if (key == "n") file.spec.n = std::stoi(value);
      else if (key == "n1") file.spec.n1 = std::stoi(value);
      else if (key == "mech") file.spec.family = parse_miss_family(value);
      else if (key == "p") file.spec.p = std::stod(value);
      else if (key == "q") file.spec.q = std::stod(value);
      else if (key == "sigma") file.spec.sigma = std::stod(value);
      else if (key == "reps") file.spec.reps = std::stoi(value);
      else if (key == "alpha") file.spec.alpha = std::stod(value);
      else if (key == "seed") file.spec.seed = std::stoull(value);
      else if (key == "threads") file.spec.threads = std::stoi(value);
      else if (key == "null_draws") file.spec.null_draws = std::stoll(value);
      else if (key == "naive_draws") file.spec.naive_draws = std::stoll(value);
      else if (key == "quantile_k") file.spec.quantile_k = std::stoi(value);
      else if (key == "quantile_c") file.spec.quantile_c = std::stod(value);
      else if (key == "band_medians") file.spec.collect_band_medians = value == "1" || value == "true";
      else if (key == "out") file.out_prefix = value;
      else if (key == "procedures") {
        std::stringstream ss(value);
        std::string token;
        while (std::getline(ss, token, ',')) {
          const std::string pt = trim_copy(token);
          if (!pt.empty()) file.procedures.push_back(parse_procedure_token(pt));
        }
      } else {
        throw config_error("unknown key: " + key);
      }
    } catch (const std::invalid_argument&) {
      throw data_error("spec line " + std::to_string(line_no) +
                       ": cannot parse value '" + value + "'");
    }
  }
  if (file.procedures.empty()) {
    throw data_error("simulation spec names no procedures");
  }
  return file;
}

void write_reports(const SimFile& file, const ExperimentReport& report) {
  {
    std::ofstream csv(file.out_prefix + ".csv");
    csv << "procedure,estimate,std_error,reps\n";
    for (const auto& row : report.rows) {
      csv << row.name << "," << row.estimate << "," << row.std_error << ","
          << row.reps << "\n";
    }
  }
  {
    nlohmann::json j;
    j["kind"] = file.kind == ExperimentKind::Type1
                    ? "type1"
                    : (file.kind == ExperimentKind::Power ? "power"
                                                          : "quantile-band");
    j["n"] = file.spec.n;
    j["n1"] = file.spec.n1;
    j["mech"] = miss_family_name(file.spec.family);
    j["reps"] = file.spec.reps;
    j["alpha"] = file.spec.alpha;
    j["seed"] = file.spec.seed;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : report.rows) {
      j["rows"].push_back({{"procedure", row.name},
                           {"estimate", row.estimate},
                           {"std_error", row.std_error},
                           {"reps", row.reps}});
    }
    std::ofstream js(file.out_prefix + ".json");
    js << j.dump(2) << "\n";
  }
  for (std::size_t pi = 0; pi < report.band_median_lower.size(); ++pi) {
    std::ofstream csv(file.out_prefix + "_band_" + std::to_string(pi) + ".csv");
    csv << "k,lower_median\n";
    const auto& med = report.band_median_lower[pi];
    for (std::size_t k = 0; k < med.size(); ++k) {
      csv << (k + 1) << "," << med[k] << "\n";
    }
  }
}

}  // namespace attrition
