#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "equicalib/equivtests.hpp"

namespace equicalib {

class CalibrationTable;

/// One simulation cell.
struct Scenario {
  double delta = 0.0;
  int n = 0;
  double m = 0.0;
  double r = 0.0;
  int nsim = 0;
  std::uint64_t seed = 0;
};

struct TwoSamples {
  std::vector<double> group1;
  std::vector<double> group2;
};

/// Group 1 ~ N(0, 1) and group 2 ~ N(delta, 1), n draws each; group 1 is
/// drawn first.
TwoSamples generate_dataset(int n, double delta, std::mt19937_64& engine);

/// Means and the pooled SD with the (n1 + n2 - 2) denominator. Throws
/// DomainError for a sample shorter than 2 and DegenerateDataError when both
/// samples are constant.
SummaryStats summarize(std::span<const double> group1, std::span<const double> group2);

/// What the evidence kernel computes for every replication of a cell.
struct EvidenceRequest {
  int n = 0;
  double delta = 0.0;
  double m = 0.0;
  std::vector<double> prior_scales;  ///< Bayesian evidence for each r; may be empty
  bool frequentist = true;
  int nsim = 0;
  std::uint64_t seed = 0;
};

/// Evidence values indexed by replication; Bayesian ones by [r index][replication].
struct EvidenceBatch {
  std::vector<double> tost;
  std::vector<double> optimal;
  std::vector<std::vector<double>> bf;
  std::vector<std::vector<double>> q_star;
};

/// Replication i draws its dataset from rng::replication_engine(seed, i),
/// so the batch is independent of scheduling. `threads` <= 0 uses the
/// OpenMP default.
EvidenceBatch simulate_evidence(const EvidenceRequest& request, int threads = 0);

/// Single-threaded reference for simulate_evidence; bit-identical output.
EvidenceBatch simulate_evidence_serial(const EvidenceRequest& request);

/// Scenario grid plus replication settings, read from JSON:
/// {"delta": [...], "n": [...], "m": [...], "r": [...], "alpha": [...],
///  "nsim": 2500, "seed": 1}. A missing array is empty; a missing nsim or
/// seed keeps the default below.
struct GridSpec {
  std::vector<double> delta;
  std::vector<int> n;
  std::vector<double> m;
  std::vector<double> r;
  std::vector<double> alpha;
  int nsim = 2500;
  std::uint64_t seed = 1;

  /// delta = 0, 0.01, ..., 0.5; n = 50, 100, 250, 500; m = 0.1, 0.2, 0.3;
  /// r = (0.5, 1, 2) / sqrt(2); alpha = 0.05, 0.5.
  static GridSpec study_defaults();
  static GridSpec from_json_text(const std::string& text);
  static GridSpec from_json_file(const std::filesystem::path& path);

  /// Throws ConfigError on empty-but-required or out-of-range values.
  void validate() const;
  bool empty() const { return delta.empty() || n.empty() || m.empty() || r.empty() || alpha.empty(); }
};

/// One results CSV row. Thresholds and proportions are absent for an HDI
/// calibration that was not attainable.
struct ResultRow {
  double delta = 0.0;
  int n = 0;
  double m = 0.0;
  double r = 0.0;
  double alpha = 0.0;
  Procedure procedure = Procedure::Tost;
  std::optional<double> threshold;
  std::optional<double> proportion;
  int nsim = 0;
  std::uint64_t seed = 0;
};

inline constexpr const char* kResultsHeader = "delta,n,m,r,alpha,procedure,threshold,proportion,nsim,seed";

std::string format_result_row(const ResultRow& row);
ResultRow parse_result_row(const std::string& line);

/// Sort key: delta, n, m, r, alpha, then procedure order tost, optimal, bf, hdi_rope.
bool result_row_less(const ResultRow& a, const ResultRow& b);

struct GridRunOptions {
  int threads = 0;
  /// Called after each finished (delta, n, m) cell with (done, total).
  std::function<void(std::size_t, std::size_t)> progress;
};

/// Runs every (delta, n, m, r) scenario of the grid, evaluating all four
/// procedures on each dataset, and writes one row per scenario x procedure
/// x alpha to `out`, sorted canonically. Scenarios whose rows are already
/// complete in an existing `out` are kept and not recomputed; finished
/// cells are appended as they complete, so an interrupted run resumes.
/// Throws MissingCalibrationError naming every missing (procedure, n, m, r,
/// alpha) before any simulation starts.
std::vector<ResultRow> run_grid(const GridSpec& grid, const CalibrationTable& calibration,
                                const std::filesystem::path& out, const GridRunOptions& options = {});

}  // namespace equicalib
