#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gradiometer/constants.hpp"
#include "gradiometer/ellipse_fit.hpp"
#include "gradiometer/errors.hpp"
#include "gradiometer/pipeline.hpp"
#include "gradiometer/rng.hpp"
#include "gradiometer/sensitivity.hpp"

using namespace gradiometer;

TEST_CASE("demonstrated sensitivity: 360 pT/rtHz") {
  SensitivityParams p;
  p.n_atoms = 1e5;
  p.T = 3e-3;
  p.t_shot = 25.0;
  p.kappa = 3.0;
  CHECK(sql_sensitivity(p) == doctest::Approx(360e-12).epsilon(0.03));
}

TEST_CASE("prospective in-trap sensitivity: ~600 fT/rtHz") {
  SensitivityParams p;
  p.n_atoms = 1e6;
  p.T = 0.2;
  p.t_shot = 25.0;  // duty cycle 0.008
  p.kappa = 1.0;
  CHECK(p.duty() == doctest::Approx(0.008));
  const double db = sql_sensitivity(p);
  CHECK(db == doctest::Approx(5.7e-13).epsilon(0.01));
  CHECK(db == doctest::Approx(600e-15).epsilon(0.10));
}

TEST_CASE("quadrupling the atom number halves the sensitivity") {
  SensitivityParams p;
  const double base = sql_sensitivity(p);
  p.n_atoms *= 4.0;
  CHECK(sql_sensitivity(p) == doctest::Approx(0.5 * base).epsilon(1e-12));
}

TEST_CASE("sql sensitivity power laws over three decades") {
  SensitivityParams p;
  const double base = sql_sensitivity(p);
  for (int decade = 1; decade <= 3; ++decade) {
    SensitivityParams q = p;
    q.n_atoms = p.n_atoms * std::pow(10.0, decade);
    CHECK(sql_sensitivity(q) ==
          doctest::Approx(base * std::pow(10.0, -0.5 * decade))
              .epsilon(1e-12));
    SensitivityParams r = p;
    r.T = p.T * std::pow(10.0, decade);  // enters as T * D = T^2 / t_shot
    CHECK(sql_sensitivity(r) ==
          doctest::Approx(base * std::pow(10.0, -decade)).epsilon(1e-12));
  }
}

TEST_CASE("parameter validation") {
  SensitivityParams p;
  p.T = 30.0;
  p.t_shot = 25.0;  // duty > 1
  CHECK_THROWS_AS(sql_sensitivity(p), ConfigError);
  p = SensitivityParams{};
  p.kappa = 0.5;
  CHECK_THROWS_AS(sql_sensitivity(p), ConfigError);
}

TEST_CASE("spatiotemporal metric reproduces the demonstrated value") {
  SensitivityParams p;
  p.n_atoms = 1e5;
  p.T = 3e-3;
  p.t_shot = 25.0;
  p.kappa = 3.0;
  const double db = sql_sensitivity(p);
  // 2e-5 mm^3 sensor volume
  CHECK(spatiotemporal(db, 2e-14) == doctest::Approx(51e-15).epsilon(0.05));
}

TEST_CASE("spatiotemporal metric for the prospective magnetometer") {
  SensitivityParams p;
  p.n_atoms = 1e6;
  p.T = 0.2;
  p.t_shot = 25.0;
  p.kappa = 1.0;
  const double db = sql_sensitivity(p);
  // (20 um)^3
  CHECK(spatiotemporal(db, 8e-15) == doctest::Approx(0.05e-15).epsilon(0.05));
}

TEST_CASE("spatiotemporal scaling: 4V doubles the metric") {
  const double base = spatiotemporal(1e-12, 1e-14);
  CHECK(spatiotemporal(1e-12, 4e-14) ==
        doctest::Approx(2.0 * base).epsilon(1e-12));
}

TEST_CASE("energy resolution lands near 10 hbar for the prospective case") {
  SensitivityParams p;
  p.n_atoms = 1e6;
  p.T = 0.2;
  p.t_shot = 25.0;
  p.kappa = 1.0;
  const double eps = energy_resolution_hbar(sql_sensitivity(p), 0.2, 8e-15);
  CHECK(eps > 5.0);
  CHECK(eps < 20.0);
  CHECK(eps == doctest::Approx(9.76).epsilon(0.02));
  CHECK(energy_resolution_hbar(0.0, 0.2, 8e-15) == 0.0);
}

TEST_CASE("energy resolution of a vapor-cell reference is 50-100 hbar") {
  // 0.16 fT cm^(3/2)/rtHz class sensor, quoted per 1 mm^3 of cell volume
  const double volume = 1e-9;  // m^3
  const double db = 0.16e-15 / std::sqrt(volume * 1e6);
  const double eps = energy_resolution_hbar(db, 1.0, volume);
  CHECK(eps > 50.0);
  CHECK(eps < 100.0);
}

TEST_CASE("freefall sensor volume: static sphere and capsule growth") {
  const double r = 10e-6;
  CHECK(freefall_sensor_volume(r, 0.0, 0.0, 0.0) ==
        doctest::Approx((4.0 / 3.0) * std::numbers::pi * r * r * r));

  // doubling the drop adds exactly the cylindrical term
  const double v1 = freefall_sensor_volume(r, 1e-3, 3e-3, 44e-6);
  const double v2 = freefall_sensor_volume(r, 1e-3, 3e-3, 88e-6);
  const double rbar = r + 0.5 * 1e-3 * 3e-3;
  CHECK(v2 - v1 ==
        doctest::Approx(std::numbers::pi * rbar * rbar * 44e-6)
            .epsilon(1e-12));
}

TEST_CASE("freefall sensor volume: demonstrated geometry is order 1e-5 mm^3") {
  const double T = 3e-3;
  const double drop = 0.5 * 9.81 * T * T;
  const double v = freefall_sensor_volume(10e-6, 1.5e-3, T, drop);
  CHECK(v > 0.5e-14);  // 0.5e-5 mm^3
  CHECK(v < 10e-14);   // 10e-5 mm^3
}

TEST_CASE("cmrr arithmetic") {
  CHECK(cmrr_db(1.0, 1.0) == doctest::Approx(0.0));
  CHECK(cmrr_db(1000.0, 1.0) == doctest::Approx(60.0));
  CHECK_THROWS_AS(cmrr_db(1.0, 0.0), ZeroDenominator);
  CHECK(larmor_frequency_noise(2.0 * std::numbers::pi * 192.0 * 3e-3, 3e-3) ==
        doctest::Approx(2.0 * std::numbers::pi * 192.0));
}

TEST_CASE("monte carlo ellipse noise follows the 1/sqrt(N M) scaling") {
  // The closed-form quantum-limit formula is a scaling law; the ellipse
  // estimator carries a constant efficiency factor (~2.8 measured here), so
  // the check is that the MC/formula ratio is N-independent and that the
  // 1/sqrt(M) shot scaling holds.
  const double kappa = 3.0;
  const auto mc_sigma = [&](double n_total, int m, std::uint64_t seed) {
    const double sigma_f = kappa / std::sqrt(n_total);
    std::vector<double> phases;
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma_f);
    for (int rep = 0; rep < 400; ++rep) {
      std::vector<Point2> pts;
      for (int k = 0; k < m; ++k) {
        const double t = 2.0 * std::numbers::pi * k / m;
        pts.emplace_back(std::cos(t) + gauss(rng),
                         std::cos(t + std::numbers::pi / 2) + gauss(rng));
      }
      phases.push_back(relative_phase(fit_conic(pts)).abs_dphi);
    }
    double mean = 0.0;
    for (double p : phases) mean += p;
    mean /= phases.size();
    double ss = 0.0;
    for (double p : phases) ss += (p - mean) * (p - mean);
    return std::sqrt(ss / (phases.size() - 1));
  };

  double ratios[3];
  int idx = 0;
  for (double n : {1e3, 1e4, 1e5}) {
    const double sql = kappa / std::sqrt(n * 24.0);
    ratios[idx++] = mc_sigma(n, 24, 100 + idx) / sql;
  }
  const double rmin = std::min({ratios[0], ratios[1], ratios[2]});
  const double rmax = std::max({ratios[0], ratios[1], ratios[2]});
  CHECK(rmax / rmin < 1.2);

  const double s12 = mc_sigma(1e4, 12, 7);
  const double s48 = mc_sigma(1e4, 48, 8);
  CHECK(s12 / s48 == doctest::Approx(2.0).epsilon(0.2));
}
