#include "equicalib/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "equicalib/csv.hpp"
#include "equicalib/rng.hpp"
#include "equicalib/simulation.hpp"

namespace equicalib {

namespace {

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("calibration: alpha must lie in (0, 1)");
}

auto entry_key(Procedure p, int n, double m, std::optional<double> r, double alpha) {
  const int rank =
      static_cast<int>(std::find(kAllProcedures.begin(), kAllProcedures.end(), p) - kAllProcedures.begin());
  const std::uint64_t r_key = r ? rng::quantize(*r) : ~std::uint64_t{0};
  return std::make_tuple(rank, n, rng::quantize(m), r_key, rng::quantize(alpha));
}

auto entry_key(const CalibrationEntry& e) { return entry_key(e.procedure, e.n, e.m, e.r, e.alpha); }

}  // namespace

BayesRiskSpec::BayesRiskSpec(double k, double q) : k_(k), q_(q) {
  if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("BayesRiskSpec: k must be > 0");
  if (!(q > 0.0 && q < 1.0)) throw DomainError("BayesRiskSpec: q must lie in (0, 1)");
}

double bayes_risk_threshold(const BayesRiskSpec& spec) { return spec.k() * (1.0 - spec.q()) / spec.q(); }

double empirical_quantile(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw DomainError("empirical_quantile: empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("empirical_quantile: prob must lie in [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::vector<BoundaryEvidence> simulate_boundary_evidence(int n, double m, std::span<const double> prior_scales,
                                                         int nsim, std::uint64_t seed, int threads) {
  EvidenceRequest request;
  request.n = n;
  request.delta = m;
  request.m = m;
  request.prior_scales.assign(prior_scales.begin(), prior_scales.end());
  request.frequentist = false;
  request.nsim = nsim;
  request.seed = rng::calibration_seed(seed, n, m);
  EvidenceBatch batch = simulate_evidence(request, threads);

  std::vector<BoundaryEvidence> out;
  for (std::size_t k = 0; k < prior_scales.size(); ++k) {
    BoundaryEvidence e;
    e.n = n;
    e.m = m;
    e.r = prior_scales[k];
    e.nsim = nsim;
    e.seed = seed;
    e.bf = std::move(batch.bf[k]);
    e.q_star = std::move(batch.q_star[k]);
    std::sort(e.bf.begin(), e.bf.end());
    std::sort(e.q_star.begin(), e.q_star.end());
    out.push_back(std::move(e));
  }
  return out;
}

CalibrationEntry threshold_from_sample(Procedure procedure, const BoundaryEvidence& sample, double alpha) {
  require_alpha(alpha);
  if (is_frequentist(procedure)) {
    throw DomainError(fmt::format("{} is a frequentist procedure and is not calibrated", to_string(procedure)));
  }
  CalibrationEntry e;
  e.procedure = procedure;
  e.n = sample.n;
  e.m = sample.m;
  e.r = sample.r;
  e.alpha = alpha;
  e.nsim = sample.nsim;
  e.seed = sample.seed;
  const auto& values = procedure == Procedure::BayesFactor ? sample.bf : sample.q_star;
  e.threshold = empirical_quantile(values, 1.0 - alpha);
  e.attainable = procedure == Procedure::BayesFactor ? e.threshold > 0.0 : e.threshold >= kHdiMassFloor;
  return e;
}

CalibrationEntry calibrate_threshold(Procedure procedure, int n, double m, double r, double alpha, int nsim,
                                     std::uint64_t seed, int threads) {
  require_alpha(alpha);
  if (is_frequentist(procedure)) {
    throw DomainError(fmt::format("{} is a frequentist procedure and is not calibrated", to_string(procedure)));
  }
  const double scales[1] = {r};
  const auto samples = simulate_boundary_evidence(n, m, scales, nsim, seed, threads);
  return threshold_from_sample(procedure, samples.front(), alpha);
}

std::vector<CalibrationEntry> calibrate_cell(int n, double m, std::span<const double> prior_scales,
                                             std::span<const double> alphas, int nsim, std::uint64_t seed,
                                             int threads) {
  for (double alpha : alphas) require_alpha(alpha);
  const auto samples = simulate_boundary_evidence(n, m, prior_scales, nsim, seed, threads);
  std::vector<CalibrationEntry> out;
  for (const auto& sample : samples) {
    for (double alpha : alphas) {
      for (Procedure p : {Procedure::BayesFactor, Procedure::HdiRope}) out.push_back(threshold_from_sample(p, sample, alpha));
    }
  }
  return out;
}

double reverse_alpha(double bf_threshold, int n, double m, double r, int nsim, std::uint64_t seed, int threads) {
  if (!(bf_threshold > 0.0)) throw DomainError("reverse_alpha: BF threshold must be > 0");
  const double scales[1] = {r};
  const auto samples = simulate_boundary_evidence(n, m, scales, nsim, seed, threads);
  const auto& bf = samples.front().bf;
  const auto above = static_cast<std::size_t>(bf.end() - std::upper_bound(bf.begin(), bf.end(), bf_threshold));
  return static_cast<double>(above) / static_cast<double>(bf.size());
}

void CalibrationTable::upsert(const CalibrationEntry& entry) {
  const auto key = entry_key(entry);
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                                   [](const CalibrationEntry& e, const auto& k) { return entry_key(e) < k; });
  if (it != entries_.end() && entry_key(*it) == key) {
    *it = entry;
  } else {
    entries_.insert(it, entry);
  }
}

const CalibrationEntry* CalibrationTable::find(Procedure procedure, int n, double m, std::optional<double> r,
                                               double alpha) const {
  const auto key = entry_key(procedure, n, m, r, alpha);
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                                   [](const CalibrationEntry& e, const auto& k) { return entry_key(e) < k; });
  if (it != entries_.end() && entry_key(*it) == key) return &*it;
  return nullptr;
}

CalibrationTable CalibrationTable::read_csv(const std::filesystem::path& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty() || lines.front() != kHeader) {
    throw ConfigError(fmt::format("'{}' is not a calibration CSV (expected header '{}')", path.string(), kHeader));
  }
  CalibrationTable table;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = csv::split(lines[i]);
    if (f.size() != 9) {
      throw ConfigError(fmt::format("{}:{}: expected 9 fields, found {}", path.string(), i + 1, f.size()));
    }
    CalibrationEntry e;
    e.procedure = parse_procedure(f[0]);
    e.n = static_cast<int>(csv::parse_integer(f[1], "n"));
    e.m = csv::parse_number(f[2], "m");
    e.r = csv::parse_optional(f[3], "r");
    e.alpha = csv::parse_number(f[4], "alpha");
    e.threshold = csv::parse_number(f[5], "threshold");
    e.attainable = csv::parse_bool(f[6], "attainable");
    e.nsim = static_cast<int>(csv::parse_integer(f[7], "nsim"));
    e.seed = csv::parse_unsigned(f[8], "seed");
    table.upsert(e);
  }
  return table;
}

std::string CalibrationTable::to_csv() const {
  std::string text = std::string(kHeader) + "\n";
  for (const auto& e : entries_) {
    text += fmt::format("{},{},{},{},{},{},{},{},{}\n", to_string(e.procedure), e.n, csv::format_number(e.m),
                        csv::format_optional(e.r), csv::format_number(e.alpha), csv::format_number(e.threshold),
                        e.attainable ? "true" : "false", e.nsim, e.seed);
  }
  return text;
}

void CalibrationTable::write_csv(const std::filesystem::path& path) const { csv::write_file_atomic(path, to_csv()); }

CalibrationTable calibrate_grid(const GridSpec& grid, const std::filesystem::path& out, int threads) {
  grid.validate();
  CalibrationTable table;
  if (std::filesystem::exists(out)) table = CalibrationTable::read_csv(out);
  for (int n : grid.n) {
    for (double m : grid.m) {
      bool complete = true;
      for (double r : grid.r) {
        for (double alpha : grid.alpha) {
          for (Procedure p : {Procedure::BayesFactor, Procedure::HdiRope}) {
            const CalibrationEntry* e = table.find(p, n, m, r, alpha);
            complete = complete && e && e->nsim == grid.nsim && e->seed == grid.seed;
          }
        }
      }
      if (complete) continue;
      for (const auto& e : calibrate_cell(n, m, grid.r, grid.alpha, grid.nsim, grid.seed, threads)) table.upsert(e);
      table.write_csv(out);
    }
  }
  table.write_csv(out);
  return table;
}

}  // namespace equicalib
