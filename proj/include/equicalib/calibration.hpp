#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "equicalib/equivtests.hpp"
#include "equicalib/simulation.hpp"

namespace equicalib {

/// HDI masses below this cannot be resolved from the simulated q* sample.
inline constexpr double kHdiMassFloor = 1e-4;

/// Calibrated decision threshold for one Bayesian procedure and scenario.
struct CalibrationEntry {
  Procedure procedure = Procedure::BayesFactor;
  int n = 0;
  double m = 0.0;
  std::optional<double> r;
  double alpha = 0.0;
  double threshold = 0.0;
  bool attainable = true;
  int nsim = 0;
  std::uint64_t seed = 0;
};

/// Loss ratio k (type 1 vs type 2) and prior weight q on the alternative.
class BayesRiskSpec {
 public:
  BayesRiskSpec(double k, double q);
  double k() const { return k_; }
  double q() const { return q_; }

 private:
  double k_;
  double q_;
};

/// BF threshold k (1 - q) / q minimizing the Bayes risk.
double bayes_risk_threshold(const BayesRiskSpec& spec);

/// Type-7 quantile of an ascending sample: linear interpolation between
/// order statistics at position (size - 1) * prob.
double empirical_quantile(std::span<const double> sorted, double prob);

/// Sorted Bayesian evidence at the null boundary delta = m for one prior scale.
struct BoundaryEvidence {
  int n = 0;
  double m = 0.0;
  double r = 0.0;
  int nsim = 0;
  std::uint64_t seed = 0;  ///< master seed
  std::vector<double> bf;
  std::vector<double> q_star;
};

/// Simulates nsim datasets at delta = m from rng::calibration_seed(seed, n, m)
/// and evaluates both Bayesian procedures for every prior scale. All scales
/// share the same datasets.
std::vector<BoundaryEvidence> simulate_boundary_evidence(int n, double m, std::span<const double> prior_scales,
                                                         int nsim, std::uint64_t seed, int threads = 0);

/// Threshold at which `procedure` predicts equivalence for a fraction alpha
/// of the boundary sample: the (1 - alpha) quantile of its evidence.
CalibrationEntry threshold_from_sample(Procedure procedure, const BoundaryEvidence& sample, double alpha);

/// calibrate_threshold for one procedure; throws DomainError for the
/// frequentist procedures, which need no calibration.
CalibrationEntry calibrate_threshold(Procedure procedure, int n, double m, double r, double alpha, int nsim,
                                     std::uint64_t seed, int threads = 0);

/// Entries for both Bayesian procedures, every prior scale and every alpha,
/// reusing one simulation per (n, m).
std::vector<CalibrationEntry> calibrate_cell(int n, double m, std::span<const double> prior_scales,
                                             std::span<const double> alphas, int nsim, std::uint64_t seed,
                                             int threads = 0);

/// Fraction of boundary datasets with BF > bf_threshold: the alpha at which
/// the optimal test matches the uncalibrated BF test at delta = m.
double reverse_alpha(double bf_threshold, int n, double m, double r, int nsim, std::uint64_t seed, int threads = 0);

/// Calibration entries keyed by (procedure, n, m, r, alpha) at 1e-9 resolution.
class CalibrationTable {
 public:
  static constexpr const char* kHeader = "procedure,n,m,r,alpha,threshold,attainable,nsim,seed";

  /// Insert, replacing an entry with the same key.
  void upsert(const CalibrationEntry& entry);
  const CalibrationEntry* find(Procedure procedure, int n, double m, std::optional<double> r, double alpha) const;
  const std::vector<CalibrationEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  static CalibrationTable read_csv(const std::filesystem::path& path);
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;

 private:
  std::vector<CalibrationEntry> entries_;  // kept sorted by key
};

/// Calibrates both Bayesian procedures for every (n, m, r, alpha) of the
/// grid (delta is ignored) and writes the table to `out` after each (n, m)
/// cell. Entries already in `out` with the grid's nsim and seed are reused,
/// so an interrupted run resumes. Returns the full table.
CalibrationTable calibrate_grid(const GridSpec& grid, const std::filesystem::path& out, int threads = 0);

}  // namespace equicalib
