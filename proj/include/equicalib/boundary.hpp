#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "equicalib/equivtests.hpp"

namespace equicalib {

/// Largest |xbar1 - xbar2| at which `procedure` still predicts equivalence,
/// for two groups of size n with pooled SD sigma_p. std::nullopt when even
/// a zero difference is not declared equivalent.
///
/// TOST: m - se * t_{1-alpha, 2n-2}. Optimal test: the alpha-quantile of the
/// folded normal N_F(m, se^2). Bayesian procedures: root of the evidence
/// function in |d| (log BF - log threshold, or q* - threshold). `r` is
/// ignored by the frequentist procedures. Throws DomainError for an invalid
/// threshold and NumericalError when no bracket is found.
std::optional<double> critical_diff(Procedure procedure, double sigma_p, int n, double m, double r, double threshold);

enum class CurveAxis { SigmaP, Margin };

std::string_view to_string(CurveAxis axis);

struct BoundaryCurve {
  Procedure procedure = Procedure::Optimal;
  CurveAxis axis = CurveAxis::SigmaP;
  std::vector<double> abscissae;
  std::vector<std::optional<double>> critical_d;
  int n = 0;
  double fixed = 0.0;  ///< m when axis is SigmaP, sigma_p when axis is Margin
  std::optional<double> r;
  double threshold = 0.0;
};

/// critical_diff over a sigma_p grid with n and m held fixed. A point whose
/// root search fails is reported as unattainable.
BoundaryCurve boundary_curve(Procedure procedure, std::span<const double> sigma_grid, int n, double m, double r,
                             double threshold);

/// critical_diff over a margin grid with n and sigma_p held fixed.
BoundaryCurve margin_sensitivity_curve(Procedure procedure, std::span<const double> margin_grid, double sigma_p, int n,
                                       double r, double threshold);

/// `count` evenly spaced points from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, int count);

inline constexpr const char* kCurveHeader = "procedure,abscissa,critical_d,attainable";

/// Curve CSV: one '#' line of fixed parameters per curve, then the column
/// header and the rows of every curve. Unattainable points have critical_d NA.
std::string curves_to_csv(std::span<const BoundaryCurve> curves);
void write_curves_csv(const std::filesystem::path& path, std::span<const BoundaryCurve> curves);

struct DensityPoint {
  double abs_diff = 0.0;
  double sigma_p = 0.0;
};

/// (|xbar1 - xbar2|, sigma_p) of `count` simulated datasets with n per group
/// and true difference delta, seeded by rng::density_seed(seed, n, delta).
std::vector<DensityPoint> density_sample(int n, double delta, int count, std::uint64_t seed, int threads = 0);

inline constexpr const char* kDensityHeader = "abs_diff,sigma_p";

void write_density_csv(const std::filesystem::path& path, std::span<const DensityPoint> points);

}  // namespace equicalib
