#pragma once

#include <array>
#include <string>
#include <string_view>

#include "equicalib/numerics.hpp"

namespace equicalib {

enum class Procedure { Tost, Optimal, BayesFactor, HdiRope };

inline constexpr std::array<Procedure, 4> kAllProcedures = {Procedure::Tost, Procedure::Optimal,
                                                            Procedure::BayesFactor, Procedure::HdiRope};

/// CSV / CLI names: "tost", "optimal", "bf", "hdi_rope".
std::string_view to_string(Procedure p);
Procedure parse_procedure(std::string_view name);

inline bool is_frequentist(Procedure p) { return p == Procedure::Tost || p == Procedure::Optimal; }

/// Sufficient statistics of a two-group dataset.
struct SummaryStats {
  int n1 = 0;
  int n2 = 0;
  double xbar1 = 0.0;
  double xbar2 = 0.0;
  double sigma_p = 1.0;  ///< pooled standard deviation

  /// Throws DomainError unless n1, n2 >= 2 and sigma_p > 0 (all finite).
  void validate() const;

  double difference() const { return xbar1 - xbar2; }
  double standard_error() const;
  double t_statistic() const { return difference() / standard_error(); }
  int df() const { return n1 + n2 - 2; }
  /// sqrt(n1 n2 / (n1 + n2)); noncentrality = effective_n * standardized effect.
  double effective_n() const;
};

/// Cauchy prior scale on the standardized effect.
class PriorSpec {
 public:
  explicit PriorSpec(double scale);
  double scale() const { return scale_; }

 private:
  double scale_;
};

struct TestOutcome {
  Procedure procedure = Procedure::Tost;
  double value = 0.0;
};

/// TOST p-value: max of the two one-sided t-test p-values.
double tost_p(const SummaryStats& s, double margin);

/// Folded-normal optimal test p-value, F(|d|; margin, se). Rejecting for
/// p < alpha is the rule |d| < u_alpha.
double optimal_p(const SummaryStats& s, double margin);

/// Interval-null Bayes factor BF01 (inside vs outside (-m_s, m_s), m_s = margin / sigma_p).
double bf_interval(const SummaryStats& s, double margin, const PriorSpec& prior);

/// Largest HDI probability whose HDI still fits inside the ROPE (-m_s, m_s).
double hdi_rope_q(const SummaryStats& s, double margin, const PriorSpec& prior);

struct BayesianEvidence {
  double bf = 0.0;
  double q_star = 0.0;
};

/// Both Bayesian evidence values from one posterior.
BayesianEvidence bayesian_evidence(const SummaryStats& s, double margin, const PriorSpec& prior);

/// Evidence value of one procedure. `prior` is ignored by frequentist procedures.
TestOutcome evaluate(Procedure p, const SummaryStats& s, double margin, const PriorSpec& prior);

/// Thresholded decision (true = predict equivalence).
/// Frequentist p < alpha, BF > threshold, q* >= mass.
bool decide(const TestOutcome& outcome, double threshold);

/// Whether `threshold` is a valid decision threshold for `p`; decide()
/// throws DomainError otherwise.
bool valid_threshold(Procedure p, double threshold);

/// Posterior of the standardized effect delta under a Cauchy(0, r) prior,
/// given the observed t statistic: p(delta) ~ f_nct(t; df, delta * n_eff) * Cauchy(delta; r).
///
/// Integrals use delta = r tan(theta), which turns the prior measure into
/// d theta / pi on (-pi/2, pi/2). Every integral is returned on the log
/// scale, relative to the likelihood at its best point in the range.
class EffectPosterior {
 public:
  EffectPosterior(double t, int df, double effective_n, const PriorSpec& prior);
  EffectPosterior(const SummaryStats& s, const PriorSpec& prior);

  double log_likelihood(double delta) const;
  /// Unnormalized log posterior density.
  double log_density(double delta) const { return log_likelihood(delta) + numerics::cauchy_log_pdf(delta, scale_); }

  /// Approximate maximizer of the likelihood in delta (t / n_eff).
  double likelihood_peak() const { return peak_; }
  /// Width of the likelihood in delta units (normal approximation).
  double likelihood_width() const { return width_; }
  /// Posterior mode (Brent search between 0 and the likelihood peak).
  double mode() const;

  /// log of int_a^b L(delta) Cauchy(delta; r) d delta; infinite bounds allowed.
  double log_mass(double a, double b) const;

  /// BF01 for the interval (-rope, rope).
  double bayes_factor(double rope) const;
  /// q* for the ROPE (-rope, rope).
  double hdi_mass_inside(double rope) const;
  BayesianEvidence evidence(double rope) const;

 private:
  double t_;
  int df_;
  double neff_;
  double scale_;
  double peak_ = 0.0;
  double width_ = 1.0;
};

}  // namespace equicalib
