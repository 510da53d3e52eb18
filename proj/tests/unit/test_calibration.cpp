#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "oracles.hpp"
#include "specdiff/calibration.hpp"
#include "specdiff/errors.hpp"
#include "specdiff/lineshape.hpp"

using namespace specdiff;

namespace {

CalibConfig analytic_config() {
  CalibConfig c;
  c.monte_carlo = false;
  return c;
}

}  // namespace

TEST_SUITE("calibration") {

TEST_CASE("broadening law") {
  const BroadeningLaw law;
  CHECK(target_fwhm(0.0, law) == doctest::Approx(1.01));
  CHECK(target_fwhm(30.0, law) == doctest::Approx(1.01 + 3.77e-5 * 27000.0));
  CHECK(target_fwhm(30.0, law) == doctest::Approx(2.0279));
  CHECK(target_fwhm(20.0, law) == doctest::Approx(1.3116));
  for (double T = 1.0; T < 60.0; T += 1.0) CHECK(target_fwhm(T + 0.5, law) > target_fwhm(T, law));
  CHECK(temperature_for_fwhm(target_fwhm(25.91, law), law) == doctest::Approx(25.91));
  CHECK_THROWS_AS(temperature_for_fwhm(0.5, law), InvalidInput);
}

TEST_CASE("apply multipliers") {
  Baseline b;
  b.sigma0 = 0.8;
  b.lambdaJ0_hz = 1e8;
  b.sigmaJ0 = 0.02;
  const auto p = apply_multipliers(b, {});
  CHECK(p.S == 0.8);
  CHECK(p.lambda_j_hz() == doctest::Approx(1e8));
  CHECK(p.sigma_j == 0.02);
  CHECK(p.tau_sd == b.tau_sd);

  // sigma_J = sigmaJ0 m_sigma m_sigmaJ.
  const auto q = apply_multipliers(b, {2.0, 10.0, 5.0, 20.0});
  CHECK(q.sigma_j == doctest::Approx(b.sigmaJ0 * 10.0));
  const auto r = apply_multipliers(b, {2.2, 10.0, 5.0, 30.0});
  CHECK(r.S / q.S == doctest::Approx(1.1));

  // Homogeneity: sigma0 * c with m_sigma / c.
  Baseline b2 = b;
  b2.sigma0 *= 4.0;
  const auto s1 = apply_multipliers(b, {2.0, 1.5, 3.0, 10.0});
  const auto s2 = apply_multipliers(b2, {0.5, 1.5, 3.0, 10.0});
  CHECK(s1.S == doctest::Approx(s2.S));
}

TEST_CASE("reference baseline reproduces its anchors") {
  const BroadeningLaw law;
  const auto b = Baseline::reference(law);
  CHECK(analytic_fwhm(apply_multipliers(b, {1, 1, 1, 4})) == doctest::Approx(target_fwhm(4.0, law)).epsilon(1e-10));
  CHECK(analytic_fwhm(apply_multipliers(b, {1, 1, 5, 20})) == doctest::Approx(target_fwhm(20.0, law)).epsilon(1e-10));
  // Independent check of the closed form: V = S^2/4 + lambda sigma_J^2 tau / 2.
  const double v20 = oracle::continuous_variance(b.sigma0, b.tau_sd, b.lambdaJ0_hz * 1e-9, 5.0 * b.sigmaJ0);
  CHECK(oracle::gaussian_fwhm(std::sqrt(v20)) == doctest::Approx(1.3116).epsilon(1e-9));
}

TEST_CASE("identity solution at T0") {
  const BroadeningLaw law;
  const auto b = Baseline::reference(law);
  const auto r = calibrate(4.0, b, law, analytic_config());
  CHECK(r.multipliers.m_sigma == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.multipliers.m_lambda == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.multipliers.m_sigmaJ == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(std::abs(r.residual) < kDefaultTolerance);
}

TEST_CASE("Monte-Carlo calibration at 20 K and monotonicity at 30 K") {
  const BroadeningLaw law;
  const auto b = Baseline::reference(law);
  CalibConfig c;
  c.mc_grid.n_traj = 4000;
  const auto r20 = calibrate(20.0, b, law, c);
  CHECK(r20.monte_carlo);
  CHECK(std::abs(r20.achieved_fwhm - 1.3116) < 0.05);
  CHECK(std::abs(r20.residual) < c.tolerance);
  // Surrogate consistency.
  CHECK(std::abs(r20.surrogate_fwhm - r20.achieved_fwhm) < 0.03 * r20.achieved_fwhm);

  const auto r30 = calibrate_at(30.0, b, law, c, r20.multipliers);
  CHECK(std::abs(r30.residual) < c.tolerance);
  CHECK(r30.multipliers.m_sigma >= r20.multipliers.m_sigma - 1e-6);
  CHECK(r30.multipliers.m_lambda >= r20.multipliers.m_lambda - 1e-6);
  CHECK(r30.multipliers.m_sigmaJ >= r20.multipliers.m_sigmaJ - 1e-6);
}

TEST_CASE("curve: single temperature equals calibrate") {
  const BroadeningLaw law;
  const auto b = Baseline::reference(law);
  const auto c = analytic_config();
  const std::vector<double> T{12.0};
  const auto curve = calibrate_curve(T, b, law, c);
  const auto one = calibrate(12.0, b, law, c);
  REQUIRE(curve.size() == 1);
  CHECK(curve[0].multipliers.vector() == one.multipliers.vector());
}

TEST_CASE("curve: sigmaJ-dominated growth and monotone multipliers") {
  const BroadeningLaw law;
  const auto b = Baseline::reference(law);
  const std::vector<double> T{5.0, 20.0, 30.0};
  const auto curve = calibrate_curve(T, b, law, analytic_config());
  REQUIRE(curve.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(curve[i].achieved_fwhm - target_fwhm(T[i], law)) < 0.05);
  for (std::size_t i = 1; i < 3; ++i) {
    CHECK(curve[i].multipliers.m_sigma >= curve[i - 1].multipliers.m_sigma - 1e-6);
    CHECK(curve[i].multipliers.m_lambda >= curve[i - 1].multipliers.m_lambda - 1e-6);
    CHECK(curve[i].multipliers.m_sigmaJ >= curve[i - 1].multipliers.m_sigmaJ - 1e-6);
  }
  const double growth = curve[1].multipliers.m_sigmaJ / curve[0].multipliers.m_sigmaJ;
  CHECK(growth > 4.0);
  CHECK(growth < 6.0);
  CHECK(curve[1].multipliers.m_lambda / curve[0].multipliers.m_lambda < 1.05);
}

TEST_CASE("curve: input validation") {
  const BroadeningLaw law;
  const auto b = Baseline::reference(law);
  const std::vector<double> unsorted{20.0, 5.0};
  CHECK_THROWS_AS(calibrate_curve(unsorted, b, law, analytic_config()), InvalidInput);
  CHECK_THROWS_AS(calibrate(2.0, b, law, analytic_config()), InvalidInput);
  CHECK_THROWS_AS(calibrate(100.0, b, law, analytic_config()), InvalidInput);
}

TEST_CASE("unreachable target raises CalibrationFailure") {
  const BroadeningLaw law;
  auto b = Baseline::reference(law);
  auto c = analytic_config();
  c.box_max = 1.01;
  try {
    calibrate(40.0, b, law, c);
    FAIL("expected CalibrationFailure");
  } catch (const CalibrationFailure& e) {
    CHECK(std::abs(e.best().residual) >= c.tolerance);
  }
}

TEST_CASE("csv round trip") {
  const BroadeningLaw law;
  const auto b = Baseline::reference(law);
  const std::vector<double> T{5.0, 20.0};
  const auto curve = calibrate_curve(T, b, law, analytic_config());
  std::ostringstream out;
  write_calibration_csv(out, curve);
  CHECK(out.str().rfind("T_K,m_sigma,m_lambda,m_sigmaJ,S_GHz,lambdaJ_Hz,sigmaJ_GHz,target_GHz,achieved_GHz,residual_GHz\n", 0) == 0);
  std::istringstream in(out.str());
  const auto back = read_calibration_csv(in, b);
  REQUIRE(back.size() == 2);
  CHECK(back[1].multipliers.m_sigmaJ == doctest::Approx(curve[1].multipliers.m_sigmaJ).epsilon(1e-8));
  CHECK(back[1].params.sigma_j == doctest::Approx(curve[1].params.sigma_j).epsilon(1e-8));
}

}
