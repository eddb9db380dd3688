#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "equicalib/calibration.hpp"
#include "equicalib/rng.hpp"
#include "equicalib/simulation.hpp"

using namespace equicalib;

namespace {

const double kR = 1.0 / std::sqrt(2.0);

std::filesystem::path tmp_dir() {
  std::filesystem::path p = EQUICALIB_TEST_TMP;
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("empirical_quantile is type 7") {
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
  CHECK(empirical_quantile(x, 0.5) == 2.5);
  CHECK(empirical_quantile(x, 0.0) == 1.0);
  CHECK(empirical_quantile(x, 1.0) == 4.0);
  CHECK(empirical_quantile(x, 0.25) == doctest::Approx(1.75));
  const std::vector<double> one = {7.0};
  CHECK(empirical_quantile(one, 0.3) == 7.0);
  CHECK_THROWS_AS(empirical_quantile(std::vector<double>{}, 0.5), DomainError);
  CHECK_THROWS_AS(empirical_quantile(x, 1.5), DomainError);
}

TEST_CASE("bayes_risk_threshold") {
  CHECK(bayes_risk_threshold(BayesRiskSpec(1.0, 0.5)) == 1.0);
  CHECK(bayes_risk_threshold(BayesRiskSpec(1.0, 0.25)) == doctest::Approx(3.0));
  CHECK(bayes_risk_threshold(BayesRiskSpec(10.0, 0.5)) == 10.0);
  CHECK_THROWS_AS(BayesRiskSpec(0.0, 0.5), DomainError);
  CHECK_THROWS_AS(BayesRiskSpec(1.0, 1.0), DomainError);
}

TEST_CASE("calibrate_threshold preconditions") {
  CHECK_THROWS_AS(calibrate_threshold(Procedure::Tost, 50, 0.3, kR, 0.05, 10, 1), DomainError);
  CHECK_THROWS_AS(calibrate_threshold(Procedure::BayesFactor, 50, 0.3, kR, 0.0, 10, 1), DomainError);
  CHECK_THROWS_AS(calibrate_threshold(Procedure::BayesFactor, 50, 0.3, kR, 1.0, 10, 1), DomainError);
}

TEST_CASE("calibration is deterministic and monotone in alpha") {
  const double scales[] = {kR};
  const double alphas[] = {0.01, 0.05, 0.2, 0.5};
  const auto a = calibrate_cell(50, 0.3, scales, alphas, 400, 9);
  const auto b = calibrate_cell(50, 0.3, scales, alphas, 400, 9, 2);
  REQUIRE(a.size() == 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].threshold == b[i].threshold);
    CHECK(a[i].attainable == b[i].attainable);
  }
  const auto single = calibrate_threshold(Procedure::HdiRope, 50, 0.3, kR, 0.05, 400, 9);
  CHECK(single.threshold == a[3].threshold);
  CHECK(single.nsim == 400);
  CHECK(single.seed == 9);
  // Entries are ordered alpha-major, BF before HDI.
  for (std::size_t i = 2; i < a.size(); i += 2) {
    CHECK(a[i].threshold <= a[i - 2].threshold);
    CHECK(a[i + 1].threshold <= a[i - 1].threshold);
  }
}

TEST_CASE("calibrated thresholds hold alpha on a fresh seed") {
  const int nsim_cal = 8000;
  const int nsim_check = 2000;
  for (double alpha : {0.05, 0.5}) {
    const double scales[] = {kR};
    const double alphas[] = {alpha};
    const auto entries = calibrate_cell(50, 0.2, scales, alphas, nsim_cal, 101);
    const auto fresh = simulate_boundary_evidence(50, 0.2, scales, nsim_check, 202);
    for (const auto& e : entries) {
      if (!e.attainable) continue;
      const auto& values = e.procedure == Procedure::BayesFactor ? fresh[0].bf : fresh[0].q_star;
      std::size_t hits = 0;
      for (double v : values) hits += decide({e.procedure, v}, e.threshold) ? 1 : 0;
      const double rate = static_cast<double>(hits) / nsim_check;
      CAPTURE(alpha);
      CAPTURE(to_string(e.procedure));
      CHECK(std::abs(rate - alpha) <= 2.58 * std::sqrt(alpha * (1 - alpha) / nsim_check));
    }
  }
}

TEST_CASE("small HDI calibration targets are flagged unattainable") {
  BoundaryEvidence sample;
  sample.n = 50;
  sample.m = 0.1;
  sample.r = kR;
  sample.nsim = 10;
  sample.bf = {1, 1, 1, 1, 1, 2, 2, 2, 2, 2};
  sample.q_star = {0, 0, 0, 0, 0, 0, 0, 0, 0.2, 0.4};
  const auto hdi = threshold_from_sample(Procedure::HdiRope, sample, 0.5);
  CHECK_FALSE(hdi.attainable);
  CHECK(hdi.threshold < kHdiMassFloor);
  const auto bf = threshold_from_sample(Procedure::BayesFactor, sample, 0.5);
  CHECK(bf.attainable);
  CHECK(bf.threshold == 1.5);
}

TEST_CASE("reverse_alpha") {
  CHECK(reverse_alpha(1e-12, 50, 0.2, kR, 300, 4) == 1.0);
  CHECK(reverse_alpha(1e12, 50, 0.2, kR, 300, 4) == 0.0);
  CHECK_THROWS_AS(reverse_alpha(0.0, 50, 0.2, kR, 300, 4), DomainError);
  double previous = 1.0;
  for (double thr : {0.5, 1.0, 2.0, 3.0, 5.0, 10.0}) {
    const double a = reverse_alpha(thr, 50, 0.2, kR, 600, 4);
    CHECK(a <= previous);
    previous = a;
  }
  // Independent seeds agree within 3 standard errors of the difference.
  const int nsim = 2000;
  const double a1 = reverse_alpha(3.0, 100, 0.3, kR, nsim, 11);
  const double a2 = reverse_alpha(3.0, 100, 0.3, kR, nsim, 12);
  const double p = 0.5 * (a1 + a2);
  CHECK(std::abs(a1 - a2) <= 3.0 * std::sqrt(2.0 * p * (1 - p) / nsim));
}

TEST_CASE("calibration table lookup and CSV round trip") {
  CalibrationTable t;
  CalibrationEntry e;
  e.procedure = Procedure::HdiRope;
  e.n = 100;
  e.m = 0.3;
  e.r = kR;
  e.alpha = 0.05;
  e.threshold = 0.913;
  e.nsim = 25000;
  e.seed = 18446744073709551557ULL;
  t.upsert(e);
  e.procedure = Procedure::BayesFactor;
  e.threshold = 58.1;
  t.upsert(e);
  e.threshold = 58.2;
  t.upsert(e);
  CHECK(t.entries().size() == 2);
  REQUIRE(t.find(Procedure::BayesFactor, 100, 0.3, kR, 0.05));
  CHECK(t.find(Procedure::BayesFactor, 100, 0.3, 0.70710678118654757, 0.05)->threshold == 58.2);
  CHECK(t.find(Procedure::BayesFactor, 100, 0.3 + 1e-12, kR, 0.05));
  CHECK_FALSE(t.find(Procedure::BayesFactor, 100, 0.2, kR, 0.05));
  CHECK_FALSE(t.find(Procedure::BayesFactor, 100, 0.3, std::nullopt, 0.05));

  const auto path = tmp_dir() / "calibration_roundtrip.csv";
  t.write_csv(path);
  const auto back = CalibrationTable::read_csv(path);
  CHECK(back.to_csv() == t.to_csv());
  CHECK(back.find(Procedure::HdiRope, 100, 0.3, kR, 0.05)->seed == 18446744073709551557ULL);
}

TEST_CASE("calibrate_grid resumes from its own output") {
  GridSpec g;
  g.n = {50};
  g.m = {0.2, 0.3};
  g.r = {kR, 2 * kR};
  g.alpha = {0.05, 0.5};
  g.nsim = 200;
  g.seed = 5;
  const auto path = tmp_dir() / "calibrate_grid.csv";
  std::filesystem::remove(path);
  const auto full = calibrate_grid(g, path);
  CHECK(full.entries().size() == 16);

  // Drop the m = 0.3 cell; the rerun recomputes exactly that cell.
  CalibrationTable partial;
  for (const auto& e : full.entries()) {
    if (e.m < 0.25) partial.upsert(e);
  }
  partial.write_csv(path);
  const auto resumed = calibrate_grid(g, path);
  CHECK(resumed.to_csv() == full.to_csv());
}
