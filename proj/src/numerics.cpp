#include "equicalib/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace equicalib::numerics {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

void require_df(int df, const char* who) {
  if (df < 1) throw DomainError(std::string(who) + ": degrees of freedom must be >= 1");
}

}  // namespace

std::string detail::fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double student_t_cdf(double x, int df) {
  require_df(df, "student_t_cdf");
  if (std::isnan(x)) throw DomainError("student_t_cdf: x is NaN");
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  return boost::math::cdf(boost::math::students_t_distribution<double>(df), x);
}

double student_t_quantile(double p, int df) {
  require_df(df, "student_t_quantile");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("student_t_quantile: p must lie in (0, 1)");
  return boost::math::quantile(boost::math::students_t_distribution<double>(df), p);
}

FoldedNormalParams::FoldedNormalParams(double location, double scale) : location_(location), scale_(scale) {
  if (!std::isfinite(location)) throw DomainError("FoldedNormalParams: location must be finite");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("FoldedNormalParams: scale must be > 0");
}

double folded_normal_cdf(double x, const FoldedNormalParams& p) {
  if (std::isnan(x) || x < 0.0) throw DomainError("folded_normal_cdf: x must be >= 0");
  if (std::isinf(x)) return 1.0;
  const double m = std::abs(p.location());
  const double s = p.scale();
  // Phi((x+m)/s) - 1 = -Phi(-(x+m)/s) keeps both terms away from 1.
  const double value = normal_cdf((x - m) / s) - normal_cdf(-(x + m) / s);
  return std::clamp(value, 0.0, 1.0);
}

double folded_normal_quantile(double alpha, const FoldedNormalParams& p) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("folded_normal_quantile: alpha must lie in (0, 1)");
  const double m = std::abs(p.location());
  const double s = p.scale();
  double hi = m + 10.0 * s;
  while (folded_normal_cdf(hi, p) < alpha) hi += 10.0 * s;
  const auto f = [&](double x) { return folded_normal_cdf(x, p) - alpha; };
  const double root = find_root(f, 0.0, hi, 1e-13 * s, 400).x;
  return std::max(root, 0.0);
}

double noncentral_t_log_kernel(double t, int df, double ncp) {
  require_df(df, "noncentral_t_pdf");
  const double nu = df;
  // Integrand exp(g(u)), g(u) = (nu+1)u - nu e^{2u}/2 - (t e^u - ncp)^2/2.
  // g'(u) = 0 reduces to a quadratic in s = e^u.
  const double a = nu + t * t;
  const double b = t * ncp;
  const double s0 = (b + std::sqrt(b * b + 4.0 * a * (nu + 1.0))) / (2.0 * a);
  const double u0 = std::log(s0);
  const auto g = [&](double s, double u) {
    const double r = t * s - ncp;
    return (nu + 1.0) * u - 0.5 * nu * s * s - 0.5 * r * r;
  };
  // -g''(u0), simplified with the mode equation; always positive.
  const double curvature = a * s0 * s0 + nu + 1.0;
  const double sd = 1.0 / std::sqrt(curvature);
  const double h = (df >= 8 ? 0.5 : 0.2) * sd;
  const double g0 = g(s0, u0);
  const double step = std::exp(h);

  double sum = 1.0;
  for (int direction : {1, -1}) {
    const double ratio = direction > 0 ? step : 1.0 / step;
    double s = s0;
    for (int k = 1; k <= 2000; ++k) {
      s *= ratio;
      const double term = std::exp(g(s, u0 + direction * k * h) - g0);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
  }
  return g0 + std::log(sum * h);
}

double noncentral_t_log_pdf(double t, int df, double ncp) {
  require_df(df, "noncentral_t_pdf");
  const double nu = df;
  const double log_const =
      std::log(2.0) + 0.5 * nu * std::log(0.5 * nu) - boost::math::lgamma(0.5 * nu) - kLogSqrt2Pi;
  return log_const + noncentral_t_log_kernel(t, df, ncp);
}

double noncentral_t_pdf(double t, int df, double ncp) { return std::exp(noncentral_t_log_pdf(t, df, ncp)); }

double truncated_cauchy_mass(double lo, double hi, double scale) {
  if (!(scale > 0.0)) throw DomainError("truncated_cauchy_mass: scale must be > 0");
  if (!(lo < hi)) throw DomainError("truncated_cauchy_mass: requires lo < hi");
  return (std::atan(hi / scale) - std::atan(lo / scale)) / kPi;
}

double cauchy_log_pdf(double x, double scale) {
  const double z = x / scale;
  return -std::log(kPi * scale) - std::log1p(z * z);
}

GridDensity::GridDensity(std::vector<double> support, std::vector<double> density)
    : support_(std::move(support)), density_(std::move(density)) {
  if (support_.size() != density_.size()) throw DomainError("GridDensity: support and density lengths differ");
  if (support_.size() < 2) throw DomainError("GridDensity: need at least two points");
  for (std::size_t i = 1; i < support_.size(); ++i) {
    if (!(support_[i] > support_[i - 1])) throw DomainError("GridDensity: abscissae must be strictly increasing");
  }
  for (double v : density_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("GridDensity: densities must be finite and >= 0");
  }
}

GridDensity GridDensity::from_log_density(std::vector<double> support, std::span<const double> log_density) {
  if (log_density.size() != support.size()) throw DomainError("GridDensity: support and density lengths differ");
  const double top = *std::max_element(log_density.begin(), log_density.end());
  if (!std::isfinite(top)) throw DomainError("GridDensity: log density has no finite maximum");
  std::vector<double> density(log_density.size());
  std::transform(log_density.begin(), log_density.end(), density.begin(),
                 [top](double v) { return std::exp(v - top); });
  GridDensity out(std::move(support), std::move(density));
  out.normalize();
  return out;
}

double GridDensity::trapezoid_mass() const {
  double mass = 0.0;
  for (std::size_t i = 1; i < support_.size(); ++i) {
    mass += 0.5 * (density_[i] + density_[i - 1]) * (support_[i] - support_[i - 1]);
  }
  return mass;
}

void GridDensity::normalize() {
  const double mass = trapezoid_mass();
  if (!(mass > 0.0)) throw DomainError("GridDensity: zero total mass");
  for (double& v : density_) v /= mass;
  normalized_ = true;
}

Interval hdi_of_grid_density(const GridDensity& d, double mass) {
  if (!d.normalized()) throw DomainError("hdi_of_grid_density: density must be normalized");
  if (!(mass >= 0.0 && mass <= 1.0)) throw DomainError("hdi_of_grid_density: mass must lie in [0, 1]");
  const auto x = d.support();
  const auto y = d.density();
  const std::size_t n = y.size();
  const auto mode_it = std::max_element(y.begin(), y.end());
  const std::size_t mode = static_cast<std::size_t>(mode_it - y.begin());

  const double slack = 1e-9 * *mode_it;
  for (std::size_t i = 1; i <= mode; ++i) {
    if (y[i] + slack < y[i - 1]) throw NumericalError("hdi_of_grid_density: density is not unimodal");
  }
  for (std::size_t i = mode + 1; i < n; ++i) {
    if (y[i] > y[i - 1] + slack) throw NumericalError("hdi_of_grid_density: density is not unimodal");
  }

  std::size_t lo = mode;
  std::size_t hi = mode;
  double acc = 0.0;
  while (acc < mass && (lo > 0 || hi + 1 < n)) {
    const bool take_left = hi + 1 >= n || (lo > 0 && y[lo - 1] >= y[hi + 1]);
    if (take_left) {
      acc += 0.5 * (y[lo] + y[lo - 1]) * (x[lo] - x[lo - 1]);
      --lo;
    } else {
      acc += 0.5 * (y[hi] + y[hi + 1]) * (x[hi + 1] - x[hi]);
      ++hi;
    }
  }
  return {x[lo], x[hi]};
}

}  // namespace equicalib::numerics
