#include "equicalib/equivtests.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/tools/minima.hpp>

namespace equicalib {

namespace {

using numerics::kPi;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuadratureTol = 1e-10;

double log_sum_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double validated_t(const SummaryStats& s) {
  s.validate();
  return s.t_statistic();
}

void require_margin(double margin) {
  if (!(margin > 0.0) || !std::isfinite(margin)) throw DomainError("margin must be a finite value > 0");
}

}  // namespace

std::string_view to_string(Procedure p) {
  switch (p) {
    case Procedure::Tost:
      return "tost";
    case Procedure::Optimal:
      return "optimal";
    case Procedure::BayesFactor:
      return "bf";
    case Procedure::HdiRope:
      return "hdi_rope";
  }
  return "unknown";
}

Procedure parse_procedure(std::string_view name) {
  for (Procedure p : kAllProcedures) {
    if (to_string(p) == name) return p;
  }
  throw ConfigError("unknown procedure '" + std::string(name) + "'");
}

void SummaryStats::validate() const {
  if (n1 < 2 || n2 < 2) throw DomainError("SummaryStats: each group needs at least 2 observations");
  if (!std::isfinite(xbar1) || !std::isfinite(xbar2)) throw DomainError("SummaryStats: means must be finite");
  if (!(sigma_p > 0.0) || !std::isfinite(sigma_p)) throw DomainError("SummaryStats: sigma_p must be > 0");
}

double SummaryStats::standard_error() const { return sigma_p * std::sqrt(1.0 / n1 + 1.0 / n2); }

double SummaryStats::effective_n() const {
  return std::sqrt(static_cast<double>(n1) * n2 / (static_cast<double>(n1) + n2));
}

PriorSpec::PriorSpec(double scale) : scale_(scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("PriorSpec: scale must be > 0");
}

double tost_p(const SummaryStats& s, double margin) {
  s.validate();
  require_margin(margin);
  const double se = s.standard_error();
  const double d = s.difference();
  const int df = s.df();
  const double t_lower = (d + margin) / se;
  const double t_upper = (d - margin) / se;
  const double p_lower = numerics::student_t_cdf(-t_lower, df);  // P(T > t_lower)
  const double p_upper = numerics::student_t_cdf(t_upper, df);   // P(T < t_upper)
  return std::max(p_lower, p_upper);
}

double optimal_p(const SummaryStats& s, double margin) {
  s.validate();
  require_margin(margin);
  return numerics::folded_normal_cdf(std::abs(s.difference()), numerics::FoldedNormalParams(margin, s.standard_error()));
}

EffectPosterior::EffectPosterior(double t, int df, double effective_n, const PriorSpec& prior)
    : t_(t), df_(df), neff_(effective_n), scale_(prior.scale()) {
  if (df < 1) throw DomainError("EffectPosterior: df must be >= 1");
  if (!std::isfinite(t)) throw DomainError("EffectPosterior: t must be finite");
  if (!(effective_n > 0.0)) throw DomainError("EffectPosterior: effective_n must be > 0");
  peak_ = t / neff_;
  width_ = std::sqrt(1.0 + t * t / (2.0 * df)) / neff_;
}

EffectPosterior::EffectPosterior(const SummaryStats& s, const PriorSpec& prior)
    : EffectPosterior(validated_t(s), s.df(), s.effective_n(), prior) {}

double EffectPosterior::log_likelihood(double delta) const {
  return numerics::noncentral_t_log_kernel(t_, df_, delta * neff_);
}

double EffectPosterior::mode() const {
  const double lo = std::min(0.0, peak_) - 2.0 * width_;
  const double hi = std::max(0.0, peak_) + 2.0 * width_;
  std::uintmax_t iterations = 200;
  const auto [x, value] = boost::math::tools::brent_find_minima(
      [this](double delta) { return -log_density(delta); }, lo, hi, 40, iterations);
  (void)value;
  if (iterations >= 200) throw NumericalError("EffectPosterior::mode: Brent search did not converge");
  return x;
}

double EffectPosterior::log_mass(double a, double b) const {
  if (!(a < b)) return -kInf;
  const double ref_point = std::clamp(peak_, a, b);
  const double ref = log_likelihood(ref_point);
  if (!std::isfinite(ref)) throw NumericalError("EffectPosterior::log_mass: non-finite likelihood reference");

  // Beyond a drop of kNegligible the integrand no longer affects the sum.
  // Away from the peak the likelihood falls on the shorter scale
  // width^2 / distance, so a range starting in a tail gets its own ladder.
  constexpr double kNegligible = 50.0;
  const double distance = std::abs(ref_point - peak_);
  const double decay = distance > width_ ? width_ * width_ / distance : width_;
  const auto cut_off = [&](double from, double dir, double bound) {
    double step = distance > width_ ? kNegligible * decay : 12.0 * width_;
    double x = from + dir * step;
    for (int i = 0; i < 60; ++i) {
      if (dir * (x - bound) >= 0.0) return bound;
      if (log_likelihood(x) - ref < -kNegligible) return x;
      x += dir * step;
    }
    throw NumericalError("EffectPosterior::log_mass: likelihood tail does not decay");
  };
  const double lo = ref_point > a ? cut_off(ref_point, -1.0, a) : a;
  const double hi = ref_point < b ? cut_off(ref_point, 1.0, b) : b;

  std::vector<double> cuts;
  cuts.reserve(12);
  for (double k : {-8.0, -3.0, -1.0, 0.0, 1.0, 3.0, 8.0}) cuts.push_back(peak_ + k * width_);
  if (distance > width_) {
    const double dir = ref_point > peak_ ? 1.0 : -1.0;
    for (double k : {1.0, 4.0, 16.0}) cuts.push_back(ref_point + dir * k * decay);
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> theta{std::atan(lo / scale_)};
  for (double c : cuts) {
    if (c > lo && c < hi) theta.push_back(std::atan(c / scale_));
  }
  theta.push_back(std::atan(hi / scale_));

  const auto integrand = [&](double th) {
    const double delta = scale_ * std::tan(th);
    return std::exp(log_likelihood(delta) - ref);
  };
  const double sum = numerics::integrate_pieces(integrand, theta, kQuadratureTol);
  if (!(sum > 0.0)) return -kInf;
  return ref + std::log(sum / kPi);
}

BayesianEvidence EffectPosterior::evidence(double rope) const {
  if (!(rope > 0.0)) throw DomainError("EffectPosterior: ROPE half-width must be > 0");
  const double log_in = log_mass(-rope, rope);
  const double log_out = log_sum_exp(log_mass(-kInf, -rope), log_mass(rope, kInf));
  // Prior masses; 1 - (2/pi) atan(x) = (2/pi) atan(1/x) avoids cancellation.
  const double prior_in = 2.0 / kPi * std::atan(rope / scale_);
  const double prior_out = 2.0 / kPi * std::atan(scale_ / rope);

  BayesianEvidence out;
  out.bf = std::exp(log_in - std::log(prior_in) - log_out + std::log(prior_out));

  const double center = mode();
  if (std::abs(center) >= rope) {
    out.q_star = 0.0;
    return out;
  }
  const double lp_lo = log_density(-rope);
  const double lp_hi = log_density(rope);
  double a = -rope;
  double b = rope;
  const double tol = 1e-12 * rope;
  if (lp_hi > lp_lo) {
    a = numerics::find_root([&](double x) { return log_density(x) - lp_hi; }, -rope, center, tol).x;
  } else if (lp_lo > lp_hi) {
    b = numerics::find_root([&](double x) { return log_density(x) - lp_lo; }, center, rope, tol).x;
  }
  const double log_total = log_sum_exp(log_in, log_out);
  out.q_star = std::clamp(std::exp(log_mass(a, b) - log_total), 0.0, 1.0);
  return out;
}

double EffectPosterior::bayes_factor(double rope) const { return evidence(rope).bf; }

double EffectPosterior::hdi_mass_inside(double rope) const { return evidence(rope).q_star; }

BayesianEvidence bayesian_evidence(const SummaryStats& s, double margin, const PriorSpec& prior) {
  require_margin(margin);
  const EffectPosterior posterior(s, prior);
  return posterior.evidence(margin / s.sigma_p);
}

double bf_interval(const SummaryStats& s, double margin, const PriorSpec& prior) {
  return bayesian_evidence(s, margin, prior).bf;
}

double hdi_rope_q(const SummaryStats& s, double margin, const PriorSpec& prior) {
  return bayesian_evidence(s, margin, prior).q_star;
}

TestOutcome evaluate(Procedure p, const SummaryStats& s, double margin, const PriorSpec& prior) {
  switch (p) {
    case Procedure::Tost:
      return {p, tost_p(s, margin)};
    case Procedure::Optimal:
      return {p, optimal_p(s, margin)};
    case Procedure::BayesFactor:
      return {p, bf_interval(s, margin, prior)};
    case Procedure::HdiRope:
      return {p, hdi_rope_q(s, margin, prior)};
  }
  throw DomainError("evaluate: unknown procedure");
}

bool valid_threshold(Procedure p, double threshold) {
  switch (p) {
    case Procedure::Tost:
    case Procedure::Optimal:
      return threshold > 0.0 && threshold < 1.0;
    case Procedure::BayesFactor:
      return threshold > 0.0 && std::isfinite(threshold);
    case Procedure::HdiRope:
      return threshold >= 0.0 && threshold <= 1.0;
  }
  return false;
}

bool decide(const TestOutcome& outcome, double threshold) {
  if (!valid_threshold(outcome.procedure, threshold)) {
    throw DomainError("decide: threshold " + std::to_string(threshold) + " invalid for " +
                      std::string(to_string(outcome.procedure)));
  }
  switch (outcome.procedure) {
    case Procedure::Tost:
    case Procedure::Optimal:
      return outcome.value < threshold;
    case Procedure::BayesFactor:
      return outcome.value > threshold;
    case Procedure::HdiRope:
      return outcome.value >= threshold;
  }
  return false;
}

}  // namespace equicalib
