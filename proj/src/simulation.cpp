#include "equicalib/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <omp.h>

#include "json.hpp"

#include "equicalib/calibration.hpp"
#include "equicalib/csv.hpp"
#include "equicalib/rng.hpp"

namespace equicalib {

namespace {

void evaluate_replication(const EvidenceRequest& request, std::span<const PriorSpec> priors, std::size_t i,
                          EvidenceBatch& out) {
  auto engine = rng::replication_engine(request.seed, i);
  const TwoSamples data = generate_dataset(request.n, request.delta, engine);
  const SummaryStats s = summarize(data.group1, data.group2);
  if (request.frequentist) {
    out.tost[i] = tost_p(s, request.m);
    out.optimal[i] = optimal_p(s, request.m);
  }
  for (std::size_t k = 0; k < priors.size(); ++k) {
    const BayesianEvidence e = bayesian_evidence(s, request.m, priors[k]);
    out.bf[k][i] = e.bf;
    out.q_star[k][i] = e.q_star;
  }
}

std::vector<PriorSpec> prepare(const EvidenceRequest& request, EvidenceBatch& out) {
  if (request.n < 2) throw DomainError("simulate_evidence: n must be >= 2");
  if (request.nsim < 1) throw DomainError("simulate_evidence: nsim must be >= 1");
  if (!(request.m > 0.0)) throw DomainError("simulate_evidence: margin must be > 0");
  std::vector<PriorSpec> priors;
  for (double r : request.prior_scales) priors.emplace_back(r);
  const auto size = static_cast<std::size_t>(request.nsim);
  if (request.frequentist) {
    out.tost.assign(size, 0.0);
    out.optimal.assign(size, 0.0);
  }
  out.bf.assign(priors.size(), std::vector<double>(size, 0.0));
  out.q_star.assign(priors.size(), std::vector<double>(size, 0.0));
  return priors;
}

using ScenarioKey = std::tuple<std::uint64_t, int, std::uint64_t, std::uint64_t>;

ScenarioKey scenario_key(double delta, int n, double m, double r) {
  return {rng::quantize(delta), n, rng::quantize(m), rng::quantize(r)};
}

int procedure_rank(Procedure p) {
  return static_cast<int>(std::find(kAllProcedures.begin(), kAllProcedures.end(), p) - kAllProcedures.begin());
}

std::string describe_missing(const std::vector<std::string>& missing) {
  std::string text = fmt::format("{} calibration entr{} missing: ", missing.size(), missing.size() == 1 ? "y" : "ies");
  const std::size_t shown = std::min<std::size_t>(missing.size(), 12);
  for (std::size_t i = 0; i < shown; ++i) text += (i ? "; " : "") + missing[i];
  if (shown < missing.size()) text += fmt::format("; ... ({} more)", missing.size() - shown);
  return text;
}

}  // namespace

TwoSamples generate_dataset(int n, double delta, std::mt19937_64& engine) {
  if (n < 2) throw DomainError("generate_dataset: n must be >= 2");
  TwoSamples out;
  out.group1.resize(static_cast<std::size_t>(n));
  out.group2.resize(static_cast<std::size_t>(n));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& x : out.group1) x = normal(engine);
  for (double& x : out.group2) x = delta + normal(engine);
  return out;
}

SummaryStats summarize(std::span<const double> group1, std::span<const double> group2) {
  if (group1.size() < 2 || group2.size() < 2) throw DomainError("summarize: each sample needs at least 2 values");
  const auto mean = [](std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  };
  const auto sum_sq = [](std::span<const double> x, double centre) {
    double acc = 0.0;
    for (double v : x) acc += (v - centre) * (v - centre);
    return acc;
  };
  SummaryStats s;
  s.n1 = static_cast<int>(group1.size());
  s.n2 = static_cast<int>(group2.size());
  s.xbar1 = mean(group1);
  s.xbar2 = mean(group2);
  const double ss = sum_sq(group1, s.xbar1) + sum_sq(group2, s.xbar2);
  s.sigma_p = std::sqrt(ss / (s.n1 + s.n2 - 2));
  if (!(s.sigma_p > 0.0)) throw DegenerateDataError("summarize: both samples are constant, pooled SD is zero");
  return s;
}

EvidenceBatch simulate_evidence_serial(const EvidenceRequest& request) {
  EvidenceBatch out;
  const std::vector<PriorSpec> priors = prepare(request, out);
  for (std::size_t i = 0; i < static_cast<std::size_t>(request.nsim); ++i) evaluate_replication(request, priors, i, out);
  return out;
}

EvidenceBatch simulate_evidence(const EvidenceRequest& request, int threads) {
  EvidenceBatch out;
  const std::vector<PriorSpec> priors = prepare(request, out);
  const int team = threads > 0 ? threads : omp_get_max_threads();
  const auto count = static_cast<std::int64_t>(request.nsim);
  std::int64_t failed_at = std::numeric_limits<std::int64_t>::max();
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic, 16) num_threads(team)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      evaluate_replication(request, priors, static_cast<std::size_t>(i), out);
    } catch (...) {
#pragma omp critical(equicalib_kernel_failure)
      {
        if (i < failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

GridSpec GridSpec::study_defaults() {
  GridSpec g;
  for (int i = 0; i <= 50; ++i) g.delta.push_back(i / 100.0);
  g.n = {50, 100, 250, 500};
  g.m = {0.1, 0.2, 0.3};
  g.r = {0.5 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 2.0 / std::sqrt(2.0)};
  g.alpha = {0.05, 0.5};
  return g;
}

GridSpec GridSpec::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("grid spec is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw ConfigError("grid spec must be a JSON object");
  GridSpec g;
  try {
    if (j.contains("delta")) g.delta = j.at("delta").get<std::vector<double>>();
    if (j.contains("n")) g.n = j.at("n").get<std::vector<int>>();
    if (j.contains("m")) g.m = j.at("m").get<std::vector<double>>();
    if (j.contains("r")) g.r = j.at("r").get<std::vector<double>>();
    if (j.contains("alpha")) g.alpha = j.at("alpha").get<std::vector<double>>();
    if (j.contains("nsim")) g.nsim = j.at("nsim").get<int>();
    if (j.contains("seed")) g.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("grid spec has a field of the wrong type: {}", e.what()));
  }
  g.validate();
  return g;
}

GridSpec GridSpec::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open grid spec '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

void GridSpec::validate() const {
  if (nsim < 1) throw ConfigError("grid spec: nsim must be >= 1");
  for (double v : delta) {
    if (!std::isfinite(v)) throw ConfigError("grid spec: delta values must be finite");
  }
  for (int v : n) {
    if (v < 2) throw ConfigError(fmt::format("grid spec: n = {} is below 2", v));
  }
  for (double v : m) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("grid spec: margins must be > 0");
  }
  for (double v : r) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("grid spec: prior scales must be > 0");
  }
  for (double v : alpha) {
    if (!(v > 0.0 && v < 1.0)) throw ConfigError("grid spec: alpha values must lie in (0, 1)");
  }
}

std::string format_result_row(const ResultRow& row) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{}", csv::format_number(row.delta), row.n, csv::format_number(row.m),
                     csv::format_number(row.r), csv::format_number(row.alpha), to_string(row.procedure),
                     csv::format_optional(row.threshold), csv::format_optional(row.proportion), row.nsim, row.seed);
}

ResultRow parse_result_row(const std::string& line) {
  const auto f = csv::split(line);
  if (f.size() != 10) throw ConfigError(fmt::format("results row has {} fields, expected 10: '{}'", f.size(), line));
  ResultRow row;
  row.delta = csv::parse_number(f[0], "delta");
  row.n = static_cast<int>(csv::parse_integer(f[1], "n"));
  row.m = csv::parse_number(f[2], "m");
  row.r = csv::parse_number(f[3], "r");
  row.alpha = csv::parse_number(f[4], "alpha");
  row.procedure = parse_procedure(f[5]);
  row.threshold = csv::parse_optional(f[6], "threshold");
  row.proportion = csv::parse_optional(f[7], "proportion");
  row.nsim = static_cast<int>(csv::parse_integer(f[8], "nsim"));
  row.seed = csv::parse_unsigned(f[9], "seed");
  return row;
}

bool result_row_less(const ResultRow& a, const ResultRow& b) {
  const auto key = [](const ResultRow& x) {
    return std::make_tuple(x.delta, x.n, x.m, x.r, x.alpha, procedure_rank(x.procedure));
  };
  return key(a) < key(b);
}

std::vector<ResultRow> run_grid(const GridSpec& grid, const CalibrationTable& calibration,
                                const std::filesystem::path& out, const GridRunOptions& options) {
  grid.validate();

  std::vector<std::string> missing;
  for (int n : grid.n) {
    for (double m : grid.m) {
      for (double r : grid.r) {
        for (double alpha : grid.alpha) {
          for (Procedure p : {Procedure::BayesFactor, Procedure::HdiRope}) {
            if (!calibration.find(p, n, m, r, alpha)) {
              missing.push_back(fmt::format("{} n={} m={} r={} alpha={}", to_string(p), n, csv::format_number(m),
                                            csv::format_number(r), csv::format_number(alpha)));
            }
          }
        }
      }
    }
  }
  if (!missing.empty()) throw MissingCalibrationError(describe_missing(missing));

  // Rows of an earlier run are kept only for scenarios that are complete and
  // were produced with the same nsim and seeds.
  const std::size_t rows_per_scenario = kAllProcedures.size() * grid.alpha.size();
  std::map<ScenarioKey, std::vector<ResultRow>> previous;
  if (std::filesystem::exists(out)) {
    const auto lines = csv::read_lines(out);
    if (!lines.empty() && lines.front() != kResultsHeader) {
      throw ConfigError(fmt::format("'{}' exists but is not a results CSV", out.string()));
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      try {
        const ResultRow row = parse_result_row(lines[i]);
        previous[scenario_key(row.delta, row.n, row.m, row.r)].push_back(row);
      } catch (const std::exception&) {
        if (i + 1 != lines.size()) throw;  // only a torn final line is tolerated
      }
    }
  }
  std::set<double> wanted_alpha(grid.alpha.begin(), grid.alpha.end());
  std::set<ScenarioKey> in_grid;
  for (double delta : grid.delta) {
    for (int n : grid.n) {
      for (double m : grid.m) {
        for (double r : grid.r) in_grid.insert(scenario_key(delta, n, m, r));
      }
    }
  }
  std::map<ScenarioKey, std::vector<ResultRow>> done;
  for (auto& [key, rows] : previous) {
    if (!in_grid.count(key)) continue;
    const auto& first = rows.front();
    const std::uint64_t seed = rng::scenario_seed(grid.seed, first.delta, first.n, first.m);
    const bool complete = rows.size() == rows_per_scenario && std::all_of(rows.begin(), rows.end(), [&](const ResultRow& r) {
                            return r.nsim == grid.nsim && r.seed == seed && wanted_alpha.count(r.alpha);
                          });
    if (complete) done.emplace(key, std::move(rows));
  }

  std::vector<ResultRow> all;
  for (const auto& [key, rows] : done) all.insert(all.end(), rows.begin(), rows.end());
  {
    std::string text = std::string(kResultsHeader) + "\n";
    for (const auto& row : all) text += format_result_row(row) + "\n";
    csv::write_file_atomic(out, text);
  }

  const std::size_t total = grid.delta.size() * grid.n.size() * grid.m.size();
  std::size_t finished = 0;
  for (double delta : grid.delta) {
    for (int n : grid.n) {
      for (double m : grid.m) {
        std::vector<double> todo;
        for (double r : grid.r) {
          if (!done.count(scenario_key(delta, n, m, r))) todo.push_back(r);
        }
        if (!todo.empty()) {
          EvidenceRequest request;
          request.n = n;
          request.delta = delta;
          request.m = m;
          request.prior_scales = todo;
          request.nsim = grid.nsim;
          request.seed = rng::scenario_seed(grid.seed, delta, n, m);
          const EvidenceBatch batch = simulate_evidence(request, options.threads);

          std::string text;
          for (std::size_t k = 0; k < todo.size(); ++k) {
            std::vector<ResultRow> rows;
            for (double alpha : grid.alpha) {
              ResultRow base;
              base.delta = delta;
              base.n = n;
              base.m = m;
              base.r = todo[k];
              base.alpha = alpha;
              base.nsim = grid.nsim;
              base.seed = request.seed;
              const auto proportion = [&](Procedure p, std::span<const double> values, double threshold) {
                std::size_t hits = 0;
                for (double v : values) hits += decide({p, v}, threshold) ? 1 : 0;
                return static_cast<double>(hits) / static_cast<double>(values.size());
              };
              for (Procedure p : kAllProcedures) {
                ResultRow row = base;
                row.procedure = p;
                if (is_frequentist(p)) {
                  row.threshold = alpha;
                  row.proportion = proportion(p, p == Procedure::Tost ? batch.tost : batch.optimal, alpha);
                } else {
                  const CalibrationEntry* entry = calibration.find(p, n, m, todo[k], alpha);
                  if (entry->attainable) {
                    row.threshold = entry->threshold;
                    row.proportion =
                        proportion(p, p == Procedure::BayesFactor ? batch.bf[k] : batch.q_star[k], entry->threshold);
                  }
                }
                rows.push_back(row);
              }
            }
            for (const auto& row : rows) text += format_result_row(row) + "\n";
            all.insert(all.end(), rows.begin(), rows.end());
          }
          csv::append_to_file(out, text);
        }
        ++finished;
        if (options.progress) options.progress(finished, total);
      }
    }
  }

  std::sort(all.begin(), all.end(), result_row_less);
  std::string text = std::string(kResultsHeader) + "\n";
  for (const auto& row : all) text += format_result_row(row) + "\n";
  csv::write_file_atomic(out, text);
  return all;
}

}  // namespace equicalib
