#include "equicalib/boundary.hpp"

#include <cmath>

#include <fmt/format.h>
#include <omp.h>

#include "equicalib/csv.hpp"
#include "equicalib/rng.hpp"
#include "equicalib/simulation.hpp"

namespace equicalib {

namespace {

constexpr double kRootTol = 1e-9;

SummaryStats at_difference(double d, double sigma_p, int n) { return {n, n, d, 0.0, sigma_p}; }

}  // namespace

std::optional<double> critical_diff(Procedure procedure, double sigma_p, int n, double m, double r, double threshold) {
  if (!(sigma_p > 0.0) || !std::isfinite(sigma_p)) throw DomainError("critical_diff: sigma_p must be > 0");
  if (n < 2) throw DomainError("critical_diff: n must be >= 2");
  if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("critical_diff: margin must be > 0");
  if (!valid_threshold(procedure, threshold) || (procedure == Procedure::HdiRope && threshold == 0.0)) {
    throw DomainError(fmt::format("critical_diff: threshold {} invalid for {}", threshold, to_string(procedure)));
  }
  const SummaryStats base = at_difference(0.0, sigma_p, n);
  const double se = base.standard_error();

  switch (procedure) {
    case Procedure::Tost: {
      const double d = m - se * numerics::student_t_quantile(1.0 - threshold, base.df());
      if (d > 0.0) return d;
      return std::nullopt;
    }
    case Procedure::Optimal:
      return numerics::folded_normal_quantile(threshold, numerics::FoldedNormalParams(m, se));
    case Procedure::BayesFactor:
    case Procedure::HdiRope:
      break;
  }

  const PriorSpec prior(r);
  const bool bf = procedure == Procedure::BayesFactor;
  // Positive while the procedure predicts equivalence.
  const auto margin_of_decision = [&](double d) {
    const BayesianEvidence e = bayesian_evidence(at_difference(d, sigma_p, n), m, prior);
    return bf ? std::log(e.bf) - std::log(threshold) : e.q_star - threshold;
  };
  const double at_zero = margin_of_decision(0.0);
  if (bf ? !(at_zero > 0.0) : !(at_zero >= 0.0)) return std::nullopt;

  double hi = m + 3.0 * se;
  int expansions = 0;
  while (margin_of_decision(hi) >= 0.0) {
    if (++expansions > 40) {
      throw NumericalError(fmt::format("critical_diff: no bracket for {} up to |d| = {} (sigma_p={}, n={}, m={})",
                                       to_string(procedure), hi, sigma_p, n, m));
    }
    hi *= 2.0;
  }
  return numerics::find_root(margin_of_decision, 0.0, hi, kRootTol).x;
}

std::string_view to_string(CurveAxis axis) { return axis == CurveAxis::SigmaP ? "sigma_p" : "m"; }

BoundaryCurve boundary_curve(Procedure procedure, std::span<const double> sigma_grid, int n, double m, double r,
                             double threshold) {
  BoundaryCurve curve;
  curve.procedure = procedure;
  curve.axis = CurveAxis::SigmaP;
  curve.abscissae.assign(sigma_grid.begin(), sigma_grid.end());
  curve.n = n;
  curve.fixed = m;
  if (!is_frequentist(procedure)) curve.r = r;
  curve.threshold = threshold;
  for (double sigma_p : sigma_grid) {
    try {
      curve.critical_d.push_back(critical_diff(procedure, sigma_p, n, m, r, threshold));
    } catch (const NumericalError&) {
      curve.critical_d.push_back(std::nullopt);
    }
  }
  return curve;
}

BoundaryCurve margin_sensitivity_curve(Procedure procedure, std::span<const double> margin_grid, double sigma_p, int n,
                                       double r, double threshold) {
  BoundaryCurve curve;
  curve.procedure = procedure;
  curve.axis = CurveAxis::Margin;
  curve.abscissae.assign(margin_grid.begin(), margin_grid.end());
  curve.n = n;
  curve.fixed = sigma_p;
  if (!is_frequentist(procedure)) curve.r = r;
  curve.threshold = threshold;
  for (double m : margin_grid) {
    try {
      curve.critical_d.push_back(critical_diff(procedure, sigma_p, n, m, r, threshold));
    } catch (const NumericalError&) {
      curve.critical_d.push_back(std::nullopt);
    }
  }
  return curve;
}

std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 1) throw DomainError("linspace: count must be >= 1");
  if (count == 1) return {lo};
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
  return out;
}

std::string curves_to_csv(std::span<const BoundaryCurve> curves) {
  std::string text;
  for (const auto& c : curves) {
    text += fmt::format("# {}: axis={} n={} {}={} r={} threshold={}\n", to_string(c.procedure), to_string(c.axis), c.n,
                        c.axis == CurveAxis::SigmaP ? "m" : "sigma_p", csv::format_number(c.fixed),
                        csv::format_optional(c.r), csv::format_number(c.threshold));
  }
  text += std::string(kCurveHeader) + "\n";
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < c.abscissae.size(); ++i) {
      text += fmt::format("{},{},{},{}\n", to_string(c.procedure), csv::format_number(c.abscissae[i]),
                          csv::format_optional(c.critical_d[i]), c.critical_d[i] ? "true" : "false");
    }
  }
  return text;
}

void write_curves_csv(const std::filesystem::path& path, std::span<const BoundaryCurve> curves) {
  csv::write_file_atomic(path, curves_to_csv(curves));
}

std::vector<DensityPoint> density_sample(int n, double delta, int count, std::uint64_t seed, int threads) {
  if (n < 2) throw DomainError("density_sample: n must be >= 2");
  if (count < 0) throw DomainError("density_sample: count must be >= 0");
  const std::uint64_t stream = rng::density_seed(seed, n, delta);
  std::vector<DensityPoint> out(static_cast<std::size_t>(count));
  const int team = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(team)
  for (int i = 0; i < count; ++i) {
    auto engine = rng::replication_engine(stream, static_cast<std::uint64_t>(i));
    const TwoSamples data = generate_dataset(n, delta, engine);
    const SummaryStats s = summarize(data.group1, data.group2);
    out[static_cast<std::size_t>(i)] = {std::abs(s.difference()), s.sigma_p};
  }
  return out;
}

void write_density_csv(const std::filesystem::path& path, std::span<const DensityPoint> points) {
  std::string text = std::string(kDensityHeader) + "\n";
  for (const auto& p : points) text += fmt::format("{},{}\n", csv::format_number(p.abs_diff), csv::format_number(p.sigma_p));
  csv::write_file_atomic(path, text);
}

}  // namespace equicalib
