// Command-line front end: sharp/two-step tests, constant-effect confidence
// intervals, quantile bands, the simulation harness, and the hidden
// oracle-check sweep. All randomness flows from explicit seeds; JSON goes to
// stdout, optional CSV artifacts to --out.

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "attrition/dataset.hpp"
#include "attrition/errors.hpp"
#include "attrition/oracle.hpp"
#include "attrition/parallel.hpp"
#include "attrition/quantiles.hpp"
#include "attrition/rng.hpp"
#include "attrition/simharness.hpp"
#include "attrition/testing.hpp"

namespace {

using namespace attrition;
using nlohmann::json;

struct CommonOpts {
  std::string data_path;
  std::string mechanism = "general";
  std::string stat = "ranksum";
  int s = 1;
  std::string b_text;
  std::string delta_text = "0";
  double alpha = 0.1;
  double beta = -1.0;
  std::string null_mode = "auto";
  std::int64_t draws = 100000;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> shuffle_seed;
  int threads = 0;
  std::string out_path;
  std::string null_cache_path;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_data = true) {
  if (needs_data) {
    cmd->add_option("--data", o.data_path, "CSV with header z,m,y or z,y")
        ->required();
  }
  cmd->add_option("--mechanism", o.mechanism,
                  "general|mp|mn|sharp|mar (default general)");
  cmd->add_option("--stat", o.stat, "ranksum|mwu (default ranksum)");
  cmd->add_option("--s", o.s,
                  "transform parameter; 1 = identity, >= 2 = Stephenson "
                  "(ranksum) or power (mwu)");
  cmd->add_option("--b", o.b_text, "composite constant: inf, -inf, or a float");
  cmd->add_option("--delta", o.delta_text,
                  "hypothesized effect: a float or @vector.csv");
  cmd->add_option("--alpha", o.alpha, "test level (default 0.1)");
  cmd->add_option("--beta", o.beta, "two-step budget (default alpha/2)");
  cmd->add_option("--null", o.null_mode, "exact|mc|auto (default auto)");
  cmd->add_option("--draws", o.draws, "Monte Carlo draws (default 1e5)");
  cmd->add_option("--seed", o.seed, "Monte Carlo seed (required for mc)");
  cmd->add_option("--shuffle-seed", o.shuffle_seed,
                  "seeded unit reshuffle before index assignment");
  cmd->add_option("--threads", o.threads, "worker threads (default: all)");
  cmd->add_option("--out", o.out_path, "also write the result to this path");
  cmd->add_option("--null-cache", o.null_cache_path,
                  "reuse the null distribution from this file, building and "
                  "saving it on first use");
}

StatConfig stat_config(const CommonOpts& o) {
  if (o.stat == "ranksum") {
    return o.s <= 1 ? StatConfig::rank_sum_identity()
                    : StatConfig::rank_sum_stephenson(o.s);
  }
  if (o.stat == "mwu") {
    return o.s <= 1 ? StatConfig::mann_whitney_identity()
                    : StatConfig::mann_whitney_power(o.s);
  }
  throw config_error("unknown statistic: " + o.stat);
}

double parse_double_flag(const std::string& text, const std::string& flag) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) {
      throw std::invalid_argument(text);
    }
    return v;
  } catch (const std::exception&) {
    throw config_error(flag + ": expected a finite number, got '" + text + "'");
  }
}

std::optional<CompositeB> parse_b(const std::string& text) {
  if (text.empty()) return std::nullopt;
  if (text == "inf" || text == "+inf") return ExtValue::pos_inf();
  if (text == "-inf") return ExtValue::neg_inf();
  return ExtValue::finite(parse_double_flag(text, "--b"));
}

EffectVector parse_delta(const std::string& text, int n) {
  if (!text.empty() && text[0] == '@') {
    std::ifstream in(text.substr(1));
    if (!in) throw data_error("cannot open delta vector: " + text.substr(1));
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line == "delta") continue;
      values.push_back(parse_double_flag(line, "--delta vector entry"));
    }
    EffectVector ev{std::move(values)};
    ev.validate(n);
    return ev;
  }
  return EffectVector::constant(n, parse_double_flag(text, "--delta"));
}

NullRequest null_request(const CommonOpts& o, std::uint64_t fallback_stream) {
  NullRequest req;
  if (o.null_mode == "exact") req.mode = NullMode::Exact;
  else if (o.null_mode == "mc") req.mode = NullMode::MonteCarlo;
  else if (o.null_mode == "auto") req.mode = NullMode::Auto;
  else throw config_error("unknown null mode: " + o.null_mode);
  req.draws = o.draws;
  req.threads = o.threads;
  if (o.seed) {
    req.seed = *o.seed;
  } else if (req.mode == NullMode::MonteCarlo) {
    throw config_error("--null mc requires --seed");
  } else {
    req.seed = fallback_stream;
  }
  return req;
}

const NullDistribution& null_for(NullCache& cache, const DesignSpec& design,
                                 const StatConfig& cfg, const CommonOpts& o) {
  // Auto mode may fall back to Monte Carlo: insist on an explicit seed then.
  const auto count = cache.request().exact_cap;
  if (cache.request().mode == NullMode::Auto && !o.seed &&
      !design.assignment_count(count)) {
    throw config_error(
        "design exceeds the exact enumeration cap; pass --seed (Monte Carlo)");
  }
  return cache.get(design, cfg);
}

std::string b_to_text(CompositeB b) {
  if (b.is_pos_inf()) return "inf";
  if (b.is_neg_inf()) return "-inf";
  std::ostringstream os;
  os << b.raw();
  return os.str();
}

void emit(const json& j, const std::string& out_path) {
  const std::string text = j.dump(2);
  std::cout << text << "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw data_error("cannot write: " + out_path);
    out << text << "\n";
  }
}

json result_json(const std::string& command, const CommonOpts& o,
                 const TestResult& res) {
  json j;
  j["command"] = command;
  j["mechanism"] = mechanism_name(res.mechanism);
  j["family"] = res.config.family_name();
  j["s"] = res.config.transform == RankTransform::Identity ? 1 : res.config.s;
  j["b"] = b_to_text(res.b);
  j["delta"] = o.delta_text;
  j["p_value"] = res.p_value;
  j["statistic"] = res.statistic;
  j["null_mode"] = res.null_exact ? "exact" : "mc";
  j["seed"] = res.null_seed;
  return j;
}

// Build the null, or reuse a compatible cached one when --null-cache names a
// readable file; a fresh build is saved back to that path.
NullDistribution cached_null(const CommonOpts& o, const DesignSpec& design,
                             const StatConfig& cfg) {
  if (!o.null_cache_path.empty()) {
    std::ifstream probe(o.null_cache_path, std::ios::binary);
    if (probe.good()) {
      NullDistribution loaded = NullDistribution::load(o.null_cache_path);
      if (loaded.design().n == design.n && loaded.design().n1 == design.n1 &&
          loaded.config() == cfg) {
        return loaded;
      }
      throw config_error("--null-cache file was built for a different "
                         "design or statistic: " + o.null_cache_path);
    }
  }
  NullRequest req = null_request(o, 0);
  if (req.mode == NullMode::Auto && !o.seed &&
      !design.assignment_count(req.exact_cap)) {
    throw config_error(
        "design exceeds the exact enumeration cap; pass --seed (Monte Carlo)");
  }
  NullDistribution built = build_null(design, cfg, req);
  if (!o.null_cache_path.empty()) built.save(o.null_cache_path);
  return built;
}

int run_test(const CommonOpts& o, const std::string& sharp_path) {
  const Dataset ds = load_dataset_file(o.data_path, o.shuffle_seed);
  const StatConfig cfg = stat_config(o);
  const Mechanism mech = parse_mechanism(o.mechanism);
  const EffectVector delta = parse_delta(o.delta_text, ds.n());

  TestResult res;
  if (mech == Mechanism::MAR ||
      (mech == Mechanism::SharpMissing && sharp_path == "subsample")) {
    auto [sub, map] = restrict_observed(ds);
    (void)map;
    const NullDistribution null =
        cached_null(o, DesignSpec{sub.n(), sub.n1()}, cfg);
    res = sharp_test_subsample(ds, delta, cfg, null);
    res.mechanism = mech;
  } else {
    const NullDistribution null =
        cached_null(o, DesignSpec{ds.n(), ds.n1()}, cfg);
    res = sharp_test(ds, delta, mech, cfg, null, parse_b(o.b_text));
  }
  emit(result_json("test", o, res), o.out_path);
  return 0;
}

int run_two_step(const CommonOpts& o) {
  Dataset ds = load_dataset_file(o.data_path, o.shuffle_seed);
  const StatConfig cfg = stat_config(o);
  Mechanism mech = parse_mechanism(o.mechanism);
  EffectVector delta = parse_delta(o.delta_text, ds.n());
  const double beta = o.beta > 0 ? o.beta : o.alpha / 2.0;

  bool switched = false;
  if (mech == Mechanism::MonotoneNeg) {
    std::tie(ds, delta) = label_switch(ds, delta);
    switched = true;
  } else if (mech != Mechanism::MonotonePos) {
    throw config_error("two-step requires --mechanism mp or mn");
  }
  NullCache cache(null_request(o, 0));
  const auto& null = null_for(cache, DesignSpec{ds.n(), ds.n1()}, cfg, o);
  auto [res, trace] = two_step_test(ds, delta, cfg, o.alpha, beta, null);

  json j = result_json("two-step", o, res);
  j["mechanism"] = o.mechanism;
  j["label_switched"] = switched;
  j["beta"] = beta;
  j["M_hat"] = trace.M_hat;
  j["m_lower"] = trace.m_lower;
  emit(j, o.out_path);
  return 0;
}

int run_ci(const CommonOpts& o, const std::string& side_text) {
  const Dataset ds = load_dataset_file(o.data_path, o.shuffle_seed);
  const StatConfig cfg = stat_config(o);
  const Mechanism mech = parse_mechanism(o.mechanism);
  CiSide side = CiSide::TwoSided;
  if (side_text == "upper") side = CiSide::Upper;
  else if (side_text == "lower") side = CiSide::Lower;
  else if (side_text != "two") throw config_error("--side must be two|upper|lower");

  NullCache cache(null_request(o, 0));
  if (cache.request().mode == NullMode::Auto && !o.seed &&
      !DesignSpec{ds.n(), ds.n1()}.assignment_count(cache.request().exact_cap)) {
    throw config_error(
        "design exceeds the exact enumeration cap; pass --seed (Monte Carlo)");
  }
  const ConstantEffectInterval ci =
      invert_constant_ci(ds, mech, cfg, o.alpha, cache, side, parse_b(o.b_text));

  json j;
  j["command"] = "ci-constant";
  j["mechanism"] = o.mechanism;
  j["family"] = cfg.family_name();
  j["s"] = cfg.transform == RankTransform::Identity ? 1 : cfg.s;
  j["alpha"] = o.alpha;
  j["side"] = side_text;
  j["lower"] = std::isinf(ci.lower) ? json("-inf") : json(ci.lower);
  j["upper"] = std::isinf(ci.upper) ? json("inf") : json(ci.upper);
  emit(j, o.out_path);
  return 0;
}

int run_band(const CommonOpts& o, const std::string& population,
             const std::string& ranks_text, const std::string& observed_text,
             double kappa, double dh_budget) {
  const Dataset ds = load_dataset_file(o.data_path, o.shuffle_seed);
  const StatConfig cfg = stat_config(o);
  const Mechanism mech = parse_mechanism(o.mechanism);
  NullCache cache(null_request(o, 0));

  const auto parse_int_list = [](const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    return out;
  };

  QuantileBand band;
  if (population == "treated" || population == "control") {
    const BandPopulation pop = population == "treated"
                                   ? BandPopulation::Treated
                                   : BandPopulation::Control;
    if (mech == Mechanism::SharpMissing || mech == Mechanism::MAR) {
      band = band_observed_subsample(ds, cfg, o.alpha, mech, cache, pop);
    } else {
      band = prediction_band(ds, mech, cfg, o.alpha, cache, pop, kappa);
    }
  } else if (population == "observed") {
    if (mech != Mechanism::SharpMissing && mech != Mechanism::MAR) {
      throw config_error("--population observed requires --mechanism sharp|mar");
    }
    const QuantileBand t = band_observed_subsample(ds, cfg, o.alpha, mech,
                                                   cache, BandPopulation::Treated);
    const QuantileBand c = band_observed_subsample(ds, cfg, o.alpha, mech,
                                                   cache, BandPopulation::Control);
    band = combine_all_units_sharp(t, c, 0, o.alpha);
    band.population = BandPopulation::Observed;
  } else if (population == "all") {
    if (mech == Mechanism::SharpMissing) {
      const QuantileBand t = band_observed_subsample(ds, cfg, o.alpha, mech,
                                                     cache, BandPopulation::Treated);
      const QuantileBand c = band_observed_subsample(ds, cfg, o.alpha, mech,
                                                     cache, BandPopulation::Control);
      band = combine_all_units_sharp(t, c, ds.n10() + ds.n00(), o.alpha);
    } else if (mech == Mechanism::MAR) {
      std::vector<int> ks = parse_int_list(ranks_text);
      std::vector<int> kps = parse_int_list(observed_text);
      if (ks.empty()) throw config_error("--population all with mar needs --ranks");
      if (kps.empty()) {
        DeltaHMethod method;
        method.seed = o.seed.value_or(0);
        kps = suggest_observed_ranks(ds.n(), ds.n11() + ds.n01(), ks,
                                     dh_budget, method);
      }
      DeltaHMethod method;
      method.seed = o.seed.value_or(0);
      band = band_all_units_mar(ds, cfg, o.alpha, ks, kps, cache, method);
    } else {
      throw config_error("--population all requires --mechanism sharp|mar");
    }
  } else {
    throw config_error("--population must be treated|control|observed|all");
  }

  json j;
  j["command"] = "quantile-band";
  j["mechanism"] = o.mechanism;
  j["family"] = cfg.family_name();
  j["s"] = cfg.transform == RankTransform::Identity ? 1 : cfg.s;
  j["alpha"] = o.alpha;
  j["population"] = population_name(band.population);
  j["guarantee"] = band.guarantee;
  j["band"] = json::array();
  for (std::size_t i = 0; i < band.lower.size(); ++i) {
    j["band"].push_back(
        {{"k", band.ranks[i]},
         {"lower", std::isinf(band.lower[i]) ? json("-inf") : json(band.lower[i])},
         {"population", population_name(band.population)},
         {"alpha", band.alpha},
         {"guarantee", band.guarantee}});
  }
  emit(j, "");
  if (!o.out_path.empty()) {
    std::ofstream csv(o.out_path);
    if (!csv) throw data_error("cannot write: " + o.out_path);
    csv << "k,lower\n";
    for (std::size_t i = 0; i < band.lower.size(); ++i) {
      csv << band.ranks[i] << "," << band.lower[i] << "\n";
    }
  }
  return 0;
}

int run_simulate(const std::string& spec_path) {
  const SimFile file = parse_sim_file(spec_path);
  const ExperimentReport report =
      run_experiment(file.kind, file.spec, file.procedures);
  write_reports(file, report);
  for (const auto& row : report.rows) {
    std::cout << row.name << ": " << 100.0 * row.estimate << "% (se "
              << 100.0 * row.std_error << " pp, " << row.reps << " reps)\n";
  }
  return 0;
}

// Small randomized oracle sweep; exits nonzero on the first mismatch.
int run_oracle_check(std::uint64_t seed, int instances) {
  const StatConfig configs[] = {
      StatConfig::rank_sum_identity(), StatConfig::rank_sum_stephenson(3),
      StatConfig::mann_whitney_identity(), StatConfig::mann_whitney_power(3)};
  const Mechanism mechs[] = {Mechanism::General, Mechanism::MonotonePos,
                             Mechanism::MonotoneNeg, Mechanism::SharpMissing};
  Rng rng(seed, 0xfeed);
  for (int t = 0; t < instances; ++t) {
    const int n = 4 + static_cast<int>(rng.next_below(4));  // 4..7
    const int n1 = 1 + static_cast<int>(rng.next_below(n - 1));
    std::vector<std::uint8_t> z(n, 0), m(n, 1);
    std::vector<double> y(n);
    for (int i = 0; i < n1; ++i) z[i] = 1;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.next_below(i + 1));
      std::swap(z[i], z[j]);
    }
    for (int i = 0; i < n; ++i) {
      m[i] = rng.next_below(4) != 0;  // ~25% missing
      y[i] = m[i] ? static_cast<double>(rng.next_below(1000)) / 10.0
                  : std::numeric_limits<double>::quiet_NaN();
    }
    Dataset ds(std::move(z), std::move(m), std::move(y));
    const EffectVector delta = EffectVector::constant(n, 0.0);
    for (const auto& mech : mechs) {
      for (const auto& cfg : configs) {
        const ExtVector wc = worst_case(ds, delta, mech, recommended_b(mech));
        const double closed =
            statistic(std::span<const std::uint8_t>(ds.z()), wc, cfg);
        const double brute =
            oracle::brute_force_worst_statistic(ds, delta, mech, cfg);
        if (closed != brute) {
          std::cerr << "oracle-check mismatch: instance " << t << " mech "
                    << mechanism_name(mech) << " stat " << cfg.family_name()
                    << " closed " << closed << " brute " << brute << "\n";
          return 1;
        }
      }
    }
  }
  std::cout << "oracle-check: " << instances << " instances ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design-based randomization inference under sample attrition"};
  app.require_subcommand(1);

  CommonOpts topt, wopt, copt, qopt;
  std::string sharp_path = "subsample";
  std::string side = "two";
  std::string population = "treated";
  std::string ranks_text, observed_text;
  double kappa = 1.0;
  double dh_budget = 0.01;
  std::string sim_spec;
  std::uint64_t oracle_seed = 1;
  int oracle_instances = 200;

  CLI::App* test = app.add_subcommand("test", "worst-case sharp-null test");
  add_common(test, topt);
  test->add_option("--sharp-path", sharp_path,
                   "sharp mechanism route: subsample|composite");

  CLI::App* twostep = app.add_subcommand("two-step", "two-step monotone test");
  add_common(twostep, wopt);

  CLI::App* ci = app.add_subcommand("ci-constant",
                                    "constant-effect CI by test inversion");
  add_common(ci, copt);
  ci->add_option("--side", side, "two|upper|lower (default two)");

  CLI::App* band = app.add_subcommand("quantile-band",
                                      "simultaneous effect-quantile band");
  add_common(band, qopt);
  band->add_option("--population", population, "treated|control|observed|all");
  band->add_option("--ranks", ranks_text, "target ranks k1,k2,... (mar all)");
  band->add_option("--observed-ranks", observed_text,
                   "observed ranks k'1,k'2,... (mar all)");
  band->add_option("--kappa", kappa, "saturating-effect slack (default 1)");
  band->add_option("--dh-budget", dh_budget,
                   "extrapolation budget for suggested observed ranks "
                   "(default 0.01)");

  CLI::App* sim = app.add_subcommand("simulate", "run a simulation spec file");
  sim->add_option("--spec", sim_spec, "key=value spec file")->required();

  CLI::App* oracle_cmd = app.add_subcommand("oracle-check", "");
  oracle_cmd->group("");  // hidden
  oracle_cmd->add_option("--seed", oracle_seed, "sweep seed");
  oracle_cmd->add_option("--instances", oracle_instances, "instance count");

  try {
    app.parse(argc, argv);
    if (test->parsed()) return run_test(topt, sharp_path);
    if (twostep->parsed()) return run_two_step(wopt);
    if (ci->parsed()) return run_ci(copt, side);
    if (band->parsed()) return run_band(qopt, population, ranks_text,
                                        observed_text, kappa, dh_budget);
    if (sim->parsed()) return run_simulate(sim_spec);
    if (oracle_cmd->parsed()) return run_oracle_check(oracle_seed,
                                                      oracle_instances);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const config_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 1;
  } catch (const capacity_error& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
