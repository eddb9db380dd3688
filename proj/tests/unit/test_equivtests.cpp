#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "equicalib/csv.hpp"
#include "equicalib/equivtests.hpp"

using namespace equicalib;

namespace {

const double kR = 1.0 / std::sqrt(2.0);

SummaryStats stats(int n, double d, double sp) { return {n, n, d, 0.0, sp}; }

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

// q* from a 4001-point posterior grid over mode +- 8 widths: the largest
// mass whose grid HDI still lies inside the ROPE, found by bisection.
double grid_q_star(const SummaryStats& s, double margin, double r) {
  const EffectPosterior post(s, PriorSpec(r));
  const double rope = margin / s.sigma_p;
  const double centre = post.mode();
  const double w = post.likelihood_width();
  std::vector<double> x(4001), logd(4001);
  for (int i = 0; i < 4001; ++i) {
    x[i] = centre - 8.0 * w + 16.0 * w * i / 4000.0;
    logd[i] = numerics::noncentral_t_log_pdf(s.t_statistic(), s.df(), x[i] * s.effective_n()) +
              numerics::cauchy_log_pdf(x[i], r);
  }
  const auto grid = numerics::GridDensity::from_log_density(x, logd);
  const auto inside = [&](double mass) {
    const auto h = numerics::hdi_of_grid_density(grid, mass);
    return h.lo > -rope && h.hi < rope;
  };
  if (!inside(1e-9)) return 0.0;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

TEST_CASE("SummaryStats") {
  const SummaryStats s{100, 260, 0.2, 0.1, 0.9};
  CHECK(s.difference() == doctest::Approx(0.1));
  CHECK(s.df() == 358);
  CHECK(s.standard_error() == doctest::Approx(0.9 * std::sqrt(1.0 / 100 + 1.0 / 260)));
  CHECK(s.effective_n() == doctest::Approx(std::sqrt(100.0 * 260 / 360)));
  CHECK_THROWS_AS((SummaryStats{1, 5, 0, 0, 1}.validate()), DomainError);
  CHECK_THROWS_AS((SummaryStats{5, 5, 0, 0, 0}.validate()), DomainError);
  CHECK_THROWS_AS(PriorSpec(0.0), DomainError);
  CHECK(parse_procedure("hdi_rope") == Procedure::HdiRope);
  CHECK(to_string(Procedure::Optimal) == "optimal");
  CHECK_THROWS_AS(parse_procedure("mbi"), ConfigError);
}

TEST_CASE("tost_p") {
  CHECK(tost_p(stats(100, 0.3, 1.0), 0.3) >= 0.5);
  CHECK(tost_p(stats(40, -0.2, 0.8), 0.2) >= 0.5);
  // mpmath, tests/oracles/scalar_oracle.py
  CHECK(std::abs(tost_p(stats(100, 0.05, 1.0), 0.3) - 0.039320026606982332) < 1e-12);
  CHECK_THROWS_AS(tost_p(stats(100, 0.05, 1.0), 0.0), DomainError);
}

TEST_CASE("optimal_p") {
  CHECK(optimal_p(stats(100, 0.0, 1.0), 0.3) == 0.0);
  CHECK(std::abs(optimal_p(stats(100, 0.05, 1.0), 0.3) - 0.031885771481362107) < 1e-13);
  CHECK_THROWS_AS(optimal_p(stats(100, 0.05, 1.0), -1.0), DomainError);
}

TEST_CASE("frequentist p-values against the reference implementation") {
  // tests/oracles/reference_oracle.py: an independent port of the published
  // reference code (R's uniroot emulated at tol 1e-4) plus exact values.
  const auto lines = csv::read_lines(std::string(EQUICALIB_TEST_DATA) + "/reference_oracle.csv");
  REQUIRE(lines.size() == 103);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = csv::split(lines[i]);
    const SummaryStats s{static_cast<int>(csv::parse_integer(f[1], "n1")), static_cast<int>(csv::parse_integer(f[2], "n2")),
                         csv::parse_number(f[3], "xbar1"), csv::parse_number(f[4], "xbar2"),
                         csv::parse_number(f[5], "sigma_p")};
    const double margin = csv::parse_number(f[6], "margin");
    CAPTURE(lines[i]);
    CHECK(std::abs(tost_p(s, margin) - csv::parse_number(f[7], "tost")) < 1e-10);
    CHECK(std::abs(optimal_p(s, margin) - csv::parse_number(f[8], "optim_uniroot")) < 1e-4);
    CHECK(std::abs(optimal_p(s, margin) - csv::parse_number(f[9], "optim_exact")) < 1e-10);
  }
}

TEST_CASE("interval-null Bayes factor and q* against frozen high-precision values") {
  // mpmath at 40 digits; tests/oracles/nct_oracle.py
  struct Case {
    int n;
    double d, sp, m, r, bf, q;
  };
  const Case cases[] = {
      {100, 0.1, 1.0, 0.3, kR, 40.083856887244303, 0.86913939703824815},
      {100, -0.1, 1.0, 0.3, kR, 40.083856887244303, 0.86913939703824815},
      {50, 0.05, 0.9, 0.2, 0.5 * kR, 7.4176856325801533, 0.73424934405281356},
      {250, 0.25, 1.1, 0.3, 2.0 * kR, 16.973234953760635, 0.40177948344139376},
  };
  for (const auto& c : cases) {
    CAPTURE(c.n);
    CAPTURE(c.d);
    const SummaryStats s = stats(c.n, c.d, c.sp);
    CHECK(rel_err(bf_interval(s, c.m, PriorSpec(c.r)), c.bf) < 1e-7);
    CHECK(std::abs(hdi_rope_q(s, c.m, PriorSpec(c.r)) - c.q) < 1e-7);
  }
}

TEST_CASE("q* agrees with the grid posterior HDI") {
  struct Case {
    int n;
    double d, sp, m, r;
  };
  const Case cases[] = {{100, 0.1, 1.0, 0.3, kR},   {100, 0.0, 1.0, 0.3, kR},  {50, 0.15, 1.1, 0.3, 2 * kR},
                        {250, -0.05, 0.9, 0.1, kR}, {500, 0.2, 1.0, 0.3, 0.5 * kR}, {50, 0.02, 1.0, 0.1, kR}};
  for (const auto& c : cases) {
    CAPTURE(c.n);
    CAPTURE(c.d);
    const SummaryStats s = stats(c.n, c.d, c.sp);
    CHECK(std::abs(hdi_rope_q(s, c.m, PriorSpec(c.r)) - grid_q_star(s, c.m, c.r)) < 0.005);
  }
}

TEST_CASE("Bayesian evidence: qualitative contracts") {
  const PriorSpec prior(kR);
  CHECK(bf_interval(stats(100, 0.13, 1.0), 0.3, prior) == doctest::Approx(bf_interval(stats(100, -0.13, 1.0), 0.3, prior)).epsilon(1e-12));
  CHECK(bf_interval(stats(500, 0.0, 1.0), 1.0, prior) > 1000.0);
  CHECK(hdi_rope_q(stats(100, 0.5, 1.0), 0.3, prior) == 0.0);
  CHECK(hdi_rope_q(stats(100000, 0.0, 1.0), 0.3, prior) > 0.999999);

  const auto both = bayesian_evidence(stats(100, 0.1, 1.0), 0.3, prior);
  CHECK(both.bf == bf_interval(stats(100, 0.1, 1.0), 0.3, prior));
  CHECK(both.q_star == hdi_rope_q(stats(100, 0.1, 1.0), 0.3, prior));
  CHECK(evaluate(Procedure::BayesFactor, stats(100, 0.1, 1.0), 0.3, prior).value == both.bf);
  CHECK(evaluate(Procedure::Tost, stats(100, 0.1, 1.0), 0.3, prior).value == tost_p(stats(100, 0.1, 1.0), 0.3));
}

TEST_CASE("evidence is monotone in |d|") {
  for (int n : {50, 100, 500}) {
    for (double m : {0.1, 0.3}) {
      for (double r : {0.5 * kR, 2.0 * kR}) {
        const PriorSpec prior(r);
        double p_tost = 0.0, p_opt = 0.0, bf = INFINITY, q = 1.0;
        for (int i = 0; i <= 30; ++i) {
          const SummaryStats s = stats(n, 3.0 * m * i / 30.0, 1.0);
          CAPTURE(n);
          CAPTURE(m);
          CAPTURE(s.xbar1);
          const double t = tost_p(s, m), o = optimal_p(s, m);
          const auto e = bayesian_evidence(s, m, prior);
          CHECK(t >= p_tost);
          CHECK(o >= p_opt);
          CHECK(e.bf <= bf * (1.0 + 1e-9));
          CHECK(e.q_star <= q + 1e-9);
          p_tost = t;
          p_opt = o;
          bf = e.bf;
          q = e.q_star;
        }
      }
    }
  }
}

TEST_CASE("Bayesian evidence depends on data only through t, n and m / sigma_p") {
  const PriorSpec prior(kR);
  for (double c : {0.3, 2.5, 40.0}) {
    const auto a = bayesian_evidence(stats(100, 0.12, 1.05), 0.3, prior);
    const auto b = bayesian_evidence(stats(100, 0.12 * c, 1.05 * c), 0.3 * c, prior);
    CHECK(rel_err(b.bf, a.bf) < 1e-9);
    CHECK(std::abs(b.q_star - a.q_star) < 1e-9);
  }
}

TEST_CASE("at |d| = m TOST is at least 0.5 while the optimal test is at most 0.5") {
  for (int n : {50, 100, 250, 500}) {
    for (double m : {0.1, 0.2, 0.3}) {
      const SummaryStats s = stats(n, m, 1.0);
      CHECK(tost_p(s, m) >= 0.5);
      CHECK(optimal_p(s, m) == doctest::Approx(0.5 - numerics::normal_cdf(-2.0 * m / s.standard_error())).epsilon(1e-12));
      CHECK(optimal_p(s, m) <= 0.5);
    }
  }
}

TEST_CASE("q* is nondecreasing in the margin") {
  const PriorSpec prior(kR);
  const SummaryStats s = stats(100, 0.08, 1.0);
  double previous = 0.0;
  for (double m = 0.02; m <= 0.6; m += 0.02) {
    const double q = hdi_rope_q(s, m, prior);
    CHECK(q >= previous - 1e-12);
    previous = q;
  }
}

TEST_CASE("decide") {
  CHECK(decide({Procedure::Tost, 0.03}, 0.05));
  CHECK_FALSE(decide({Procedure::Optimal, 0.05}, 0.05));
  CHECK_FALSE(decide({Procedure::BayesFactor, 3.0}, 3.0));
  CHECK(decide({Procedure::BayesFactor, 3.0001}, 3.0));
  CHECK(decide({Procedure::HdiRope, 0.913}, 0.913));
  CHECK_FALSE(decide({Procedure::HdiRope, 0.912}, 0.913));
  CHECK_THROWS_AS(decide({Procedure::Tost, 0.03}, 1.5), DomainError);
  CHECK_THROWS_AS(decide({Procedure::BayesFactor, 3.0}, -1.0), DomainError);
  CHECK_THROWS_AS(decide({Procedure::HdiRope, 0.5}, 1.2), DomainError);
}
