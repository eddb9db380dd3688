#pragma once

// Special functions and numerical utilities shared by the four equivalence
// procedures. Everything here is pure and reentrant.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "equicalib/errors.hpp"

namespace equicalib::numerics {

inline constexpr double kPi = 3.14159265358979323846;

namespace detail {
std::string fmt_g(double v);
}

/// Standard normal CDF.
double normal_cdf(double z);

/// Student t CDF with integer degrees of freedom. Throws DomainError for df < 1.
double student_t_cdf(double x, int df);

/// Inverse of student_t_cdf.
double student_t_quantile(double p, int df);

/// Folded normal N_F(location, scale^2): the law of |X| for X ~ N(location, scale^2).
class FoldedNormalParams {
 public:
  FoldedNormalParams(double location, double scale);

  double location() const { return location_; }
  double scale() const { return scale_; }

 private:
  double location_;
  double scale_;
};

/// F(x) = Phi((x-m)/s) + Phi((x+m)/s) - 1 for x >= 0.
double folded_normal_cdf(double x, const FoldedNormalParams& p);

/// Smallest x >= 0 with folded_normal_cdf(x) = alpha, for 0 < alpha < 1.
double folded_normal_quantile(double alpha, const FoldedNormalParams& p);

/// Log density of the noncentral t distribution.
///
/// Evaluated from the chi mixture f(t) = E_s[s * phi(t*s - ncp)], with
/// s = sqrt(V/df) and V ~ chi^2_df. In u = log(s) the integrand is smooth,
/// unimodal, with a closed-form mode; a trapezoid sum stepped outward from
/// the mode converges geometrically. Relative error is below 1e-10 for
/// df >= 8 and below 1e-8 for df in [1, 8).
double noncentral_t_log_pdf(double t, int df, double ncp);

double noncentral_t_pdf(double t, int df, double ncp);

/// Log of the noncentral t density with the t-independent normalizing
/// constant dropped. Cheaper inside a posterior where only ratios matter.
double noncentral_t_log_kernel(double t, int df, double ncp);

/// Mass of a centred Cauchy(0, scale) on (lo, hi); infinite bounds allowed.
double truncated_cauchy_mass(double lo, double hi, double scale);

double cauchy_log_pdf(double x, double scale);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

struct RootResult {
  double x = 0.0;
  int iterations = 0;
};

/// Bracketing root finder: regula falsi with the Illinois weight update,
/// falling back to a bisection step whenever the bracket fails to shrink by
/// half. Requires f(lo) and f(hi) of opposite sign (or one of them zero).
/// Stops when the bracket is narrower than abs_tol or holds no double
/// strictly inside it.
template <class F>
RootResult find_root(F&& f, double lo, double hi, double abs_tol = 1e-4, int max_iter = 200) {
  if (!(lo < hi)) throw DomainError("find_root: empty bracket");
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return {lo, 0};
  if (fhi == 0.0) return {hi, 0};
  if (std::signbit(flo) == std::signbit(fhi) || std::isnan(flo) || std::isnan(fhi)) {
    throw NumericalError("find_root: bracket [" + std::to_string(lo) + ", " + std::to_string(hi) +
                         "] does not change sign (f=" + std::to_string(flo) + ", " +
                         std::to_string(fhi) + ")");
  }
  int side = 0;
  for (int it = 1; it <= max_iter; ++it) {
    const double width = hi - lo;
    double x = (lo * fhi - hi * flo) / (fhi - flo);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    double fx = f(x);
    if (fx == 0.0) return {x, it};
    if (std::signbit(fx) == std::signbit(flo)) {
      lo = x;
      flo = fx;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = x;
      fhi = fx;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
    if (hi - lo > 0.5 * width) {
      const double mid = 0.5 * (lo + hi);
      const double fm = f(mid);
      if (fm == 0.0) return {mid, it};
      if (std::signbit(fm) == std::signbit(flo)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
        fhi = fm;
      }
      side = 0;
    }
    if (hi - lo < abs_tol || std::nextafter(lo, hi) >= hi) return {0.5 * (lo + hi), it};
  }
  throw NumericalError("find_root: no convergence after " + std::to_string(max_iter) + " iterations");
}

namespace detail {

struct KronrodEstimate {
  double lo = 0.0;
  double hi = 0.0;
  double value = 0.0;
  double error = 0.0;
};

// 7-point Gauss / 15-point Kronrod pair with the QUADPACK error heuristic.
template <class F>
KronrodEstimate kronrod15(F& f, double lo, double hi) {
  static constexpr double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                    0.207784955007898467600689403773245, 0.0};
  static constexpr double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                   0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  double fv1[7];
  double fv2[7];
  const double fc = f(center);
  double kronrod = fc * wgk[7];
  double gauss = fc * wg[3];
  double abs_sum = std::abs(kronrod);
  for (int j = 0; j < 7; ++j) {
    const double dx = half * xgk[j];
    fv1[j] = f(center - dx);
    fv2[j] = f(center + dx);
    const double pair = fv1[j] + fv2[j];
    kronrod += wgk[j] * pair;
    abs_sum += wgk[j] * (std::abs(fv1[j]) + std::abs(fv2[j]));
    if (j % 2 == 1) gauss += wg[j / 2] * pair;
  }
  const double mean = 0.5 * kronrod;
  double asc = wgk[7] * std::abs(fc - mean);
  for (int j = 0; j < 7; ++j) asc += wgk[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));

  const double value = kronrod * half;
  const double abs_value = abs_sum * std::abs(half);
  asc *= std::abs(half);
  double error = std::abs((kronrod - gauss) * half);
  if (asc != 0.0 && error != 0.0) error = asc * std::min(1.0, std::pow(200.0 * error / asc, 1.5));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (abs_value > std::numeric_limits<double>::min() / (50.0 * eps)) error = std::max(50.0 * eps * abs_value, error);
  return {lo, hi, value, error};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (G7/K15) quadrature over the pieces
/// [points[0], points[1]], [points[1], points[2]], ...: the piece with the
/// largest error estimate is bisected until the summed error is below
/// max(abs_tol, rel_tol * |integral|). Throws NumericalError after
/// max_intervals pieces.
template <class F>
double integrate_pieces(F&& f, std::span<const double> points, double rel_tol = 1e-8, double abs_tol = 0.0,
                        int max_intervals = 400) {
  if (points.size() < 2) return 0.0;
  std::vector<detail::KronrodEstimate> pieces;
  pieces.reserve(points.size() + 32);
  double total = 0.0;
  double total_error = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i] > points[i - 1])) continue;
    pieces.push_back(detail::kronrod15(f, points[i - 1], points[i]));
    total += pieces.back().value;
    total_error += pieces.back().error;
  }
  const auto worse = [](const detail::KronrodEstimate& x, const detail::KronrodEstimate& y) {
    return x.error < y.error;
  };
  while (total_error > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (static_cast<int>(pieces.size()) >= max_intervals || !std::isfinite(total)) {
      throw NumericalError("integrate: no convergence on [" + detail::fmt_g(points.front()) + ", " +
                           detail::fmt_g(points.back()) + "], value " + detail::fmt_g(total) + ", error " +
                           detail::fmt_g(total_error));
    }
    const auto worst = std::max_element(pieces.begin(), pieces.end(), worse);
    const detail::KronrodEstimate parent = *worst;
    const double mid = 0.5 * (parent.lo + parent.hi);
    if (!(mid > parent.lo && mid < parent.hi)) {
      throw NumericalError("integrate: interval [" + detail::fmt_g(parent.lo) + ", " + detail::fmt_g(parent.hi) +
                           "] cannot be bisected further");
    }
    *worst = detail::kronrod15(f, parent.lo, mid);
    pieces.push_back(detail::kronrod15(f, mid, parent.hi));
    total = 0.0;
    total_error = 0.0;
    for (const auto& p : pieces) {
      total += p.value;
      total_error += p.error;
    }
  }
  if (!std::isfinite(total)) throw NumericalError("integrate: non-finite integral");
  return total;
}

/// Adaptive quadrature on a single finite interval.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-8, double abs_tol = 0.0) {
  if (a == b) return 0.0;
  if (a > b) return -integrate(f, b, a, rel_tol, abs_tol);
  const double points[2] = {a, b};
  return integrate_pieces(f, std::span<const double>(points, 2), rel_tol, abs_tol);
}

/// Density tabulated on an increasing grid.
class GridDensity {
 public:
  /// Throws DomainError unless abscissae are strictly increasing, the
  /// densities nonnegative and finite, and both have the same length >= 2.
  GridDensity(std::vector<double> support, std::vector<double> density);

  /// Build from unnormalized log densities and normalize by the trapezoid rule.
  static GridDensity from_log_density(std::vector<double> support, std::span<const double> log_density);

  /// Rescale so the trapezoid integral is one.
  void normalize();

  std::span<const double> support() const { return support_; }
  std::span<const double> density() const { return density_; }
  bool normalized() const { return normalized_; }
  std::size_t size() const { return support_.size(); }

  double trapezoid_mass() const;

 private:
  std::vector<double> support_;
  std::vector<double> density_;
  bool normalized_ = false;
};

/// Shortest grid interval holding at least `mass` probability, grown
/// outward from the mode one point at a time toward the higher neighbour.
/// Requires a normalized, unimodal density; a density that rises again
/// after falling throws NumericalError.
Interval hdi_of_grid_density(const GridDensity& d, double mass);

}  // namespace equicalib::numerics
