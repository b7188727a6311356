#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "attrition/dataset.hpp"
#include "attrition/quantiles.hpp"
#include "attrition/testing.hpp"

namespace attrition {

// Missingness generators of the simulation study. The threshold family
// selects on each arm's realized outcome (cutoffs at the p/q quantiles of
// that arm's own law); the monotone families threshold the control outcome
// in both arms so the monotonicity constraint holds pointwise.
enum class MissFamily : std::uint8_t {
  Threshold,    // M(0) = 1{Y0 <= qnorm(p)},   M(1) = 1{Y1 >= quantile_q(Y1)}
  MonotonePos,  // M(1) = 1{Y0 <= qnorm(p+q)}, M(0) = 1{Y0 <= qnorm(p-q)}
  MonotoneNeg,  // M(1) = 1{Y0 >= qnorm(p+q)}, M(0) = 1{Y0 >= qnorm(p-q)}
  MAR,          // M(0), M(1) iid Bernoulli(p), independent of outcomes
  Sharp,        // M(0) = M(1) = 1{Y0 <= qnorm(p)}
};

std::string miss_family_name(MissFamily f);
MissFamily parse_miss_family(const std::string& name);

// Fixed potential outcomes and potential missingness of one replicate.
struct Population {
  std::vector<double> y0, y1;
  std::vector<std::uint8_t> m0, m1;

  std::vector<double> tau() const;
};

struct SimSpec {
  int n = 500;
  int n1 = 250;
  MissFamily family = MissFamily::Threshold;
  double p = 0.95;
  double q = 0.05;
  double sigma = 0.0;  // 0: null model y1 = y0; else y1 ~ N(0, sigma^2)
  int reps = 2000;
  double alpha = 0.1;
  std::uint64_t seed = 1;
  int threads = 0;
  std::int64_t null_draws = 100000;   // full-design Monte Carlo null size
  std::int64_t naive_draws = 20000;   // per-subdesign null size (naive test)
  int quantile_k = 0;                 // 0: ceil(0.95 * n1)
  double quantile_c = 0.0;
  bool collect_band_medians = false;  // per-k medians (QuantileBand kind)

  void validate() const;
  int effective_quantile_k() const;
};

struct ProcedureSpec {
  enum class Kind : std::uint8_t {
    WorstCaseSharp,   // sharp_test under `mech` at b (default recommended)
    NaiveSubsample,   // drop-missing FRT regardless of mechanism
    TwoStep,          // MonotonePos two-step, Mann-Whitney family
    QuantileWorst,    // quantile_test under `mech` at recommended b
  };
  Kind kind = Kind::WorstCaseSharp;
  Mechanism mech = Mechanism::General;
  StatConfig cfg;
  std::optional<CompositeB> b;
  double beta = 0.05;  // two-step only
  std::string name;

  std::string display_name() const;
};

enum class ExperimentKind : std::uint8_t { Type1, Power, QuantileBand };

struct ProcedureReport {
  std::string name;
  double estimate = 0.0;   // rejection rate or joint coverage
  double std_error = 0.0;
  int reps = 0;
};

struct ExperimentReport {
  ExperimentKind kind = ExperimentKind::Type1;
  std::vector<ProcedureReport> rows;
  // QuantileBand kind with collect_band_medians: median lower limit per rank
  // (one block per procedure, aligned with rows).
  std::vector<std::vector<double>> band_median_lower;
};

Population generate_population(const SimSpec& spec, std::int64_t rep_index);

// Treatment draw and the observed dataset it realizes.
std::vector<std::uint8_t> draw_assignment(const SimSpec& spec,
                                          std::int64_t rep_index);
Dataset realize_observed(const Population& pop,
                         const std::vector<std::uint8_t>& z);

// Runs the requested experiment; deterministic in (spec, seed) and
// independent of the thread count.
ExperimentReport run_experiment(ExperimentKind kind, const SimSpec& spec,
                                const std::vector<ProcedureSpec>& procedures);

// Key=value spec-file support for the `simulate` CLI subcommand.
struct SimFile {
  ExperimentKind kind = ExperimentKind::Type1;
  SimSpec spec;
  std::vector<ProcedureSpec> procedures;
  std::string out_prefix = "report";
};

SimFile parse_sim_file(const std::string& path);
void write_reports(const SimFile& file, const ExperimentReport& report);

}  // namespace attrition
