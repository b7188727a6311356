#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "attrition/rng.hpp"
#include "attrition/simharness.hpp"

using namespace attrition;

TEST_CASE("inverse normal cdf hits standard quantiles") {
  CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(inverse_normal_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-9));
  CHECK(inverse_normal_cdf(0.05) == doctest::Approx(-1.6448536269514722).epsilon(1e-9));
  CHECK(inverse_normal_cdf(0.9999) == doctest::Approx(3.71901648545568).epsilon(1e-8));
}

TEST_CASE("population generators satisfy their mechanism invariants") {
  SimSpec spec;
  spec.n = 200;
  spec.n1 = 100;
  spec.seed = 5;

  spec.family = MissFamily::MonotonePos;
  spec.p = 0.95;
  spec.q = 0.03;
  for (int rep = 0; rep < 25; ++rep) {
    const Population pop = generate_population(spec, rep);
    for (int i = 0; i < spec.n; ++i) CHECK(pop.m1[i] >= pop.m0[i]);
  }

  spec.family = MissFamily::MonotoneNeg;
  spec.p = 0.05;
  spec.q = 0.03;
  for (int rep = 0; rep < 25; ++rep) {
    const Population pop = generate_population(spec, rep);
    for (int i = 0; i < spec.n; ++i) CHECK(pop.m1[i] <= pop.m0[i]);
  }

  spec.family = MissFamily::Sharp;
  spec.p = 0.9;
  for (int rep = 0; rep < 25; ++rep) {
    const Population pop = generate_population(spec, rep);
    CHECK(pop.m0 == pop.m1);
  }

  spec.family = MissFamily::Threshold;
  spec.p = 0.95;
  spec.q = 0.05;
  const Population pop = generate_population(spec, 0);
  const std::vector<double> tau = pop.tau();
  for (const double t : tau) CHECK(t == 0.0);  // null effect model
}

TEST_CASE("mar generator hits the nominal missing share") {
  SimSpec spec;
  spec.n = 500;
  spec.n1 = 250;
  spec.family = MissFamily::MAR;
  spec.p = 0.9;
  spec.seed = 11;
  double missing = 0.0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    const Population pop = generate_population(spec, rep);
    const auto z = draw_assignment(spec, rep);
    const Dataset ds = realize_observed(pop, z);
    missing += static_cast<double>(ds.n10() + ds.n00()) / spec.n;
  }
  missing /= reps;
  CHECK(missing == doctest::Approx(0.10).epsilon(0.07));
}

TEST_CASE("replication is deterministic and realize_observed is consistent") {
  SimSpec spec;
  spec.n = 60;
  spec.n1 = 25;
  spec.family = MissFamily::Threshold;
  spec.seed = 21;
  const Population a = generate_population(spec, 7);
  const Population b = generate_population(spec, 7);
  CHECK(a.y0 == b.y0);
  CHECK(a.m1 == b.m1);
  const auto za = draw_assignment(spec, 7);
  const auto zb = draw_assignment(spec, 7);
  CHECK(za == zb);
  int n1 = 0;
  for (const auto zi : za) n1 += zi;
  CHECK(n1 == spec.n1);

  const Dataset ds = realize_observed(a, za);
  for (int i = 0; i < spec.n; ++i) {
    const bool m = za[i] ? a.m1[i] : a.m0[i];
    CHECK(ds.observed(i) == m);
    if (m) CHECK(ds.y(i) == (za[i] ? a.y1[i] : a.y0[i]));
  }
}

TEST_CASE("experiments are reproducible and thread-count independent") {
  SimSpec spec;
  spec.n = 40;
  spec.n1 = 20;
  spec.family = MissFamily::Threshold;
  spec.p = 0.9;
  spec.q = 0.1;
  spec.reps = 40;
  spec.alpha = 0.1;
  spec.seed = 31;
  spec.null_draws = 4000;
  spec.naive_draws = 2000;

  ProcedureSpec worst;
  worst.kind = ProcedureSpec::Kind::WorstCaseSharp;
  worst.mech = Mechanism::General;
  worst.cfg = StatConfig::rank_sum_identity();
  ProcedureSpec naive;
  naive.kind = ProcedureSpec::Kind::NaiveSubsample;
  naive.cfg = StatConfig::rank_sum_identity();

  spec.threads = 1;
  const ExperimentReport a =
      run_experiment(ExperimentKind::Type1, spec, {worst, naive});
  spec.threads = 4;
  const ExperimentReport b =
      run_experiment(ExperimentKind::Type1, spec, {worst, naive});
  REQUIRE(a.rows.size() == 2);
  CHECK(a.rows[0].estimate == b.rows[0].estimate);
  CHECK(a.rows[1].estimate == b.rows[1].estimate);
  CHECK(a.rows[0].name == "worst-general:ranksum:identity");
}

TEST_CASE("power experiment runs the quantile procedure") {
  SimSpec spec;
  spec.n = 30;
  spec.n1 = 15;
  spec.family = MissFamily::Threshold;
  spec.p = 0.9;
  spec.q = 0.1;
  spec.sigma = 3.0;
  spec.reps = 30;
  spec.seed = 41;
  spec.null_draws = 4000;
  spec.quantile_k = 14;

  ProcedureSpec quant;
  quant.kind = ProcedureSpec::Kind::QuantileWorst;
  quant.mech = Mechanism::General;
  quant.cfg = StatConfig::mann_whitney_power(4);
  const ExperimentReport rep =
      run_experiment(ExperimentKind::Power, spec, {quant});
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].estimate >= 0.0);
  CHECK(rep.rows[0].estimate <= 1.0);
  CHECK(rep.rows[0].reps == 30);
}

TEST_CASE("sim spec files parse and drive reports") {
  const std::string path = "sim_spec_test.txt";
  {
    std::ofstream out(path);
    out << "# tiny smoke spec\n";
    out << "kind = type1\n";
    out << "n = 24\nn1 = 12\nmech = mar\np = 0.9\n";
    out << "reps = 10\nalpha = 0.1\nseed = 3\n";
    out << "null_draws = 1500\nnaive_draws = 1500\n";
    out << "procedures = naive:ranksum:1, worst:general:ranksum:1\n";
    out << "out = sim_report_test\n";
  }
  const SimFile file = parse_sim_file(path);
  CHECK(file.kind == ExperimentKind::Type1);
  CHECK(file.spec.n == 24);
  REQUIRE(file.procedures.size() == 2);
  CHECK(file.procedures[0].kind == ProcedureSpec::Kind::NaiveSubsample);
  CHECK(file.procedures[1].mech == Mechanism::General);

  const ExperimentReport report =
      run_experiment(file.kind, file.spec, file.procedures);
  write_reports(file, report);
  std::ifstream csv("sim_report_test.csv");
  REQUIRE(csv.good());
  std::string header;
  std::getline(csv, header);
  CHECK(header == "procedure,estimate,std_error,reps");
  std::remove(path.c_str());
  std::remove("sim_report_test.csv");
  std::remove("sim_report_test.json");
}
