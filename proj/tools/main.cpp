// equicalib command-line interface.
//
//   equicalib test          --margin M (--data FILE | --n1 --n2 --xbar1 --xbar2 --sigma-p) [--r R] [--json]
//   equicalib calibrate     [--config FILE] [--n ..] [--margin ..] [--r ..] [--alpha ..] [--nsim N] [--seed S] --out FILE
//   equicalib simulate      [--config FILE] --calibration FILE --out FILE
//   equicalib boundary      [--axis sigma_p|m] [--calibration FILE | --bf-threshold B --hdi-mass Z] --out FILE
//   equicalib reverse-alpha [--bf-threshold B..] [--n ..] [--margin ..] [--r ..] [--out FILE]
//
// Flags override config-file values, which override defaults. Exit codes:
// 0 success, 2 usage or configuration error, 3 missing calibration,
// 4 numerical failure.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "equicalib/boundary.hpp"
#include "equicalib/calibration.hpp"
#include "equicalib/csv.hpp"
#include "equicalib/equivtests.hpp"
#include "equicalib/simulation.hpp"

namespace {

using namespace equicalib;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitMissingCalibration = 3;
constexpr int kExitNumerical = 4;

// Options shared by the grid-shaped subcommands. Unset optionals fall back
// to the config file, then to the study defaults.
struct GridFlags {
  std::string config;
  std::vector<double> delta;
  std::vector<int> n;
  std::vector<double> margin;
  std::vector<double> r;
  std::vector<double> alpha;
  std::optional<int> nsim;
  std::optional<std::uint64_t> seed;
};

struct Common {
  std::optional<int> threads;
  std::string out;
  bool json = false;
};

void add_grid_flags(CLI::App* cmd, GridFlags& g, bool with_delta) {
  cmd->add_option("--config", g.config, "JSON config / grid spec file")->check(CLI::ExistingFile);
  if (with_delta) cmd->add_option("--delta", g.delta, "Population differences")->delimiter(',');
  cmd->add_option("--n", g.n, "Per-group sample sizes")->delimiter(',');
  cmd->add_option("--margin", g.margin, "Equivalence margins")->delimiter(',');
  cmd->add_option("--r", g.r, "Cauchy prior scales")->delimiter(',');
  cmd->add_option("--alpha", g.alpha, "Target type 1 error rates")->delimiter(',');
  cmd->add_option("--nsim", g.nsim, "Replications per scenario")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", g.seed, "Master seed");
}

nlohmann::json read_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    auto j = nlohmann::json::parse(buffer.str());
    if (!j.is_object()) throw ConfigError(fmt::format("config '{}' must be a JSON object", path));
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path, e.what()));
  }
}

template <class T>
T config_value(const nlohmann::json& config, const char* key, T fallback) {
  if (!config.contains(key)) return fallback;
  try {
    return config.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("config key '{}' has the wrong type: {}", key, e.what()));
  }
}

/// Flags > config file > study defaults, for every grid axis independently.
GridSpec resolve_grid(const GridFlags& flags, const nlohmann::json& config, bool with_delta) {
  const GridSpec defaults = GridSpec::study_defaults();
  GridSpec g;
  g.delta = with_delta ? (!flags.delta.empty() ? flags.delta : config_value(config, "delta", defaults.delta))
                       : std::vector<double>{};
  g.n = !flags.n.empty() ? flags.n : config_value(config, "n", defaults.n);
  g.m = !flags.margin.empty() ? flags.margin : config_value(config, "m", defaults.m);
  g.r = !flags.r.empty() ? flags.r : config_value(config, "r", defaults.r);
  g.alpha = !flags.alpha.empty() ? flags.alpha : config_value(config, "alpha", defaults.alpha);
  g.nsim = flags.nsim ? *flags.nsim : config_value(config, "nsim", defaults.nsim);
  g.seed = flags.seed ? *flags.seed : config_value(config, "seed", defaults.seed);
  g.validate();
  return g;
}

int resolve_threads(const Common& common, const nlohmann::json& config) {
  if (common.threads) return *common.threads;
  if (config.contains("threads")) return config_value(config, "threads", 0);
  if (const char* env = std::getenv("EQUICALIB_THREADS")) {
    try {
      return std::stoi(env);
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("EQUICALIB_THREADS='{}' is not an integer", env));
    }
  }
  return 0;
}

std::string resolve_path(const std::string& flag, const nlohmann::json& config, const char* key,
                         const std::string& fallback) {
  if (!flag.empty()) return flag;
  return config_value(config, key, fallback);
}

void print_progress(std::size_t done, std::size_t total) {
  if (done == total || done % 10 == 0) std::cerr << fmt::format("\r{}/{} cells", done, total) << std::flush;
  if (done == total) std::cerr << "\n";
}

// ---- test -----------------------------------------------------------------

struct TestArgs {
  std::string data;
  std::optional<int> n1, n2;
  std::optional<double> xbar1, xbar2, sigma_p;
  double margin = 0.0;
  double r = 1.0 / std::sqrt(2.0);
};

/// Two columns per line: group label (1 or 2) and value. A non-numeric
/// first line is taken as a header.
SummaryStats read_data_file(const std::string& path) {
  const auto lines = csv::read_lines(path);
  std::vector<double> g1, g2;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;
    const auto fields = csv::split(line);
    if (fields.size() != 2) throw ConfigError(fmt::format("{}:{}: expected 'group,value'", path, i + 1));
    long long group = 0;
    double value = 0.0;
    try {
      group = csv::parse_integer(fields[0], "group");
      value = csv::parse_number(fields[1], "value");
    } catch (const ConfigError&) {
      if (i == 0) continue;
      throw ConfigError(fmt::format("{}:{}: cannot parse '{}'", path, i + 1, line));
    }
    if (group == 1) {
      g1.push_back(value);
    } else if (group == 2) {
      g2.push_back(value);
    } else {
      throw ConfigError(fmt::format("{}:{}: group must be 1 or 2", path, i + 1));
    }
  }
  if (g1.size() < 2 || g2.size() < 2) throw ConfigError(fmt::format("{}: each group needs at least 2 values", path));
  return summarize(g1, g2);
}

int run_test(const TestArgs& a, const Common& common) {
  SummaryStats s;
  if (!a.data.empty()) {
    s = read_data_file(a.data);
  } else {
    if (!a.n1 || !a.n2 || !a.xbar1 || !a.xbar2 || !a.sigma_p) {
      throw ConfigError("test needs --data or all of --n1 --n2 --xbar1 --xbar2 --sigma-p");
    }
    s = {*a.n1, *a.n2, *a.xbar1, *a.xbar2, *a.sigma_p};
  }
  s.validate();
  if (!(a.margin > 0.0)) throw ConfigError("--margin must be > 0");
  const PriorSpec prior(a.r);
  const double tost = tost_p(s, a.margin);
  const double optimal = optimal_p(s, a.margin);
  const BayesianEvidence e = bayesian_evidence(s, a.margin, prior);

  if (common.json) {
    nlohmann::json j = {{"n1", s.n1},      {"n2", s.n2},         {"xbar1", s.xbar1}, {"xbar2", s.xbar2},
                        {"sigma_p", s.sigma_p}, {"margin", a.margin}, {"r", a.r},         {"tost", tost},
                        {"optimal", optimal},   {"bf", e.bf},         {"hdi_rope", e.q_star}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << fmt::format("n1={} n2={} xbar1={:.7g} xbar2={:.7g} sigma_p={:.7g} margin={:.7g} r={:.7g}\n", s.n1, s.n2,
                             s.xbar1, s.xbar2, s.sigma_p, a.margin, a.r);
    std::cout << fmt::format("tost {:.10g}\noptimal {:.10g}\nbf {:.10g}\nhdi_rope {:.10g}\n", tost, optimal, e.bf,
                             e.q_star);
  }
  return kExitOk;
}

// ---- calibrate / simulate -----------------------------------------------------

int run_calibrate(const GridFlags& flags, const Common& common) {
  const auto config = read_config(flags.config);
  const GridSpec grid = resolve_grid(flags, config, false);
  const std::string out = resolve_path(common.out, config, "calibration", "calibration.csv");
  const CalibrationTable table = calibrate_grid(grid, out, resolve_threads(common, config));
  std::cerr << fmt::format("wrote {} calibration entries to {}\n", table.entries().size(), out);
  return kExitOk;
}

int run_simulate(const GridFlags& flags, const Common& common, const std::string& calibration_flag) {
  const auto config = read_config(flags.config);
  const GridSpec grid = resolve_grid(flags, config, true);
  const std::string out = resolve_path(common.out, config, "out", "results.csv");
  const std::string calibration_path = resolve_path(calibration_flag, config, "calibration", "");
  CalibrationTable table;
  if (!grid.empty()) {
    if (calibration_path.empty()) throw MissingCalibrationError("simulate needs --calibration FILE for bf and hdi_rope");
    if (!std::filesystem::exists(calibration_path)) {
      throw MissingCalibrationError(fmt::format("calibration file '{}' does not exist", calibration_path));
    }
    table = CalibrationTable::read_csv(calibration_path);
  }
  GridRunOptions options;
  options.threads = resolve_threads(common, config);
  options.progress = print_progress;
  const auto rows = run_grid(grid, table, out, options);
  std::cerr << fmt::format("wrote {} rows to {}\n", rows.size(), out);
  return kExitOk;
}

// ---- boundary -------------------------------------------------------------

struct BoundaryArgs {
  std::string axis = "sigma_p";
  std::vector<std::string> procedures = {"tost", "optimal", "bf", "hdi_rope"};
  std::string calibration;
  std::optional<double> bf_threshold;
  std::optional<double> hdi_mass;
  int n = 100;
  double margin = 0.3;
  double sigma_p = 1.0;
  double r = 1.0 / std::sqrt(2.0);
  double alpha = 0.05;
  int points = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::string density_out;
  int density_count = 100000;
  std::uint64_t seed = 1;
};

double bayesian_threshold(Procedure p, const BoundaryArgs& a, const CalibrationTable& table) {
  const std::optional<double>& manual = p == Procedure::BayesFactor ? a.bf_threshold : a.hdi_mass;
  if (manual) return *manual;
  const CalibrationEntry* e = table.find(p, a.n, a.margin, a.r, a.alpha);
  if (!e) {
    throw MissingCalibrationError(fmt::format("no calibration entry for {} n={} m={} r={} alpha={}", to_string(p), a.n,
                                              csv::format_number(a.margin), csv::format_number(a.r),
                                              csv::format_number(a.alpha)));
  }
  if (!e->attainable) {
    throw MissingCalibrationError(fmt::format("calibration for {} n={} m={} alpha={} is not attainable", to_string(p),
                                              a.n, csv::format_number(a.margin), csv::format_number(a.alpha)));
  }
  return e->threshold;
}

int run_boundary(BoundaryArgs a, const Common& common) {
  const bool by_sigma = a.axis == "sigma_p";
  if (!by_sigma && a.axis != "m") throw ConfigError("--axis must be 'sigma_p' or 'm'");
  if (a.points == 0) a.points = by_sigma ? 200 : 191;
  if (a.lo == 0.0 && a.hi == 0.0) {
    a.lo = by_sigma ? 0.7 : 0.02;
    a.hi = by_sigma ? 1.3 : 0.4;
  }
  if (!(a.lo > 0.0 && a.hi >= a.lo)) throw ConfigError("axis range must satisfy 0 < lo <= hi");
  const std::vector<double> grid = linspace(a.lo, a.hi, a.points);

  CalibrationTable table;
  if (!a.calibration.empty()) table = CalibrationTable::read_csv(a.calibration);

  std::vector<BoundaryCurve> curves;
  for (const auto& name : a.procedures) {
    const Procedure p = parse_procedure(name);
    const double threshold = is_frequentist(p) ? a.alpha : bayesian_threshold(p, a, table);
    curves.push_back(by_sigma ? boundary_curve(p, grid, a.n, a.margin, a.r, threshold)
                              : margin_sensitivity_curve(p, grid, a.sigma_p, a.n, a.r, threshold));
  }
  const std::string out = common.out.empty() ? "boundary.csv" : common.out;
  write_curves_csv(out, curves);
  std::cerr << fmt::format("wrote {} curves to {}\n", curves.size(), out);

  if (!a.density_out.empty()) {
    const auto points = density_sample(a.n, 0.0, a.density_count, a.seed, common.threads.value_or(0));
    write_density_csv(a.density_out, points);
    std::cerr << fmt::format("wrote {} density points to {}\n", points.size(), a.density_out);
  }
  return kExitOk;
}

// ---- reverse-alpha ----------------------------------------------------------

int run_reverse_alpha(const GridFlags& flags, const Common& common, const std::vector<double>& bf_thresholds) {
  const auto config = read_config(flags.config);
  const GridSpec grid = resolve_grid(flags, config, false);
  const int threads = resolve_threads(common, config);
  std::string text = "bf_threshold,n,m,r,alpha,nsim,seed\n";
  for (double bf : bf_thresholds) {
    for (int n : grid.n) {
      for (double m : grid.m) {
        for (double r : grid.r) {
          const double alpha = reverse_alpha(bf, n, m, r, grid.nsim, grid.seed, threads);
          text += fmt::format("{},{},{},{},{},{},{}\n", csv::format_number(bf), n, csv::format_number(m),
                              csv::format_number(r), csv::format_number(alpha), grid.nsim, grid.seed);
        }
      }
    }
  }
  if (common.out.empty()) {
    std::cout << text;
  } else {
    csv::write_file_atomic(common.out, text);
    std::cerr << fmt::format("wrote {}\n", common.out);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibrated two-sample equivalence testing: TOST, optimal test, BF interval null, HDI-ROPE"};
  app.require_subcommand(1);

  Common common;
  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--threads", common.threads, "Worker threads (default: EQUICALIB_THREADS or all cores)");
    cmd->add_option("--out", common.out, "Output path");
  };

  TestArgs test_args;
  auto* test = app.add_subcommand("test", "Evaluate all four procedures on one dataset");
  test->add_option("--data", test_args.data, "CSV file of 'group,value' lines")->check(CLI::ExistingFile);
  test->add_option("--n1", test_args.n1);
  test->add_option("--n2", test_args.n2);
  test->add_option("--xbar1", test_args.xbar1);
  test->add_option("--xbar2", test_args.xbar2);
  test->add_option("--sigma-p", test_args.sigma_p, "Pooled standard deviation");
  test->add_option("--margin", test_args.margin, "Equivalence margin")->required();
  test->add_option("--r", test_args.r, "Cauchy prior scale");
  test->add_flag("--json", common.json, "Print a JSON report");

  GridFlags cal_flags;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate BF and HDI-ROPE thresholds at delta = m");
  add_grid_flags(calibrate, cal_flags, false);
  add_common(calibrate);

  GridFlags sim_flags;
  std::string sim_calibration;
  auto* simulate = app.add_subcommand("simulate", "Run the scenario grid");
  add_grid_flags(simulate, sim_flags, true);
  simulate->add_option("--calibration", sim_calibration, "Calibration CSV from 'calibrate'");
  add_common(simulate);

  BoundaryArgs bnd;
  auto* boundary = app.add_subcommand("boundary", "Decision boundaries and margin-sensitivity curves");
  boundary->add_option("--axis", bnd.axis, "sigma_p (boundary in sigma_p) or m (margin sensitivity)");
  boundary->add_option("--procedure", bnd.procedures, "Procedures to trace")->delimiter(',');
  boundary->add_option("--calibration", bnd.calibration, "Calibration CSV supplying BF / HDI thresholds")
      ->check(CLI::ExistingFile);
  boundary->add_option("--bf-threshold", bnd.bf_threshold, "BF threshold (overrides calibration)");
  boundary->add_option("--hdi-mass", bnd.hdi_mass, "HDI mass (overrides calibration)");
  boundary->add_option("--n", bnd.n, "Per-group sample size");
  boundary->add_option("--margin", bnd.margin, "Margin (fixed on the sigma_p axis; calibration key on both)");
  boundary->add_option("--sigma-p", bnd.sigma_p, "Pooled SD held fixed on the m axis");
  boundary->add_option("--r", bnd.r, "Cauchy prior scale");
  boundary->add_option("--alpha", bnd.alpha, "Frequentist alpha and calibration key");
  boundary->add_option("--points", bnd.points, "Grid points")->check(CLI::PositiveNumber);
  boundary->add_option("--from", bnd.lo, "Axis start");
  boundary->add_option("--to", bnd.hi, "Axis end");
  boundary->add_option("--density-out", bnd.density_out, "Also write a null-data (|d|, sigma_p) sample");
  boundary->add_option("--density-count", bnd.density_count, "Datasets in the density sample");
  boundary->add_option("--seed", bnd.seed, "Seed of the density sample");
  add_common(boundary);

  GridFlags rev_flags;
  std::vector<double> rev_bf = {3.0};
  auto* reverse = app.add_subcommand("reverse-alpha", "Alpha matching an uncalibrated BF threshold at delta = m");
  add_grid_flags(reverse, rev_flags, false);
  reverse->add_option("--bf-threshold", rev_bf, "BF thresholds")->delimiter(',');
  add_common(reverse);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*test) return run_test(test_args, common);
    if (*calibrate) return run_calibrate(cal_flags, common);
    if (*simulate) return run_simulate(sim_flags, common, sim_calibration);
    if (*boundary) return run_boundary(bnd, common);
    if (*reverse) return run_reverse_alpha(rev_flags, common, rev_bf);
  } catch (const MissingCalibrationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingCalibration;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
