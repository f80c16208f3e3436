#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gradiometer/constants.hpp"
#include "gradiometer/errors.hpp"
#include "gradiometer/field_model.hpp"

using namespace gradiometer;

namespace {

// central-difference oracle for the gradient tensor
Mat3 fd_gradient(const FieldScene& scene, const Vec3& r, double h) {
  Mat3 g;
  for (int j = 0; j < 3; ++j) {
    Vec3 dr = Vec3::Zero();
    dr(j) = h;
    g.col(j) = (field_at(scene, r + dr) - field_at(scene, r - dr)) / (2.0 * h);
  }
  return g;
}

Mat3 random_maxwell_tensor(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> gauss(0.0, scale);
  Mat3 s;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s(i, j) = gauss(rng);
  Mat3 sym = 0.5 * (s + s.transpose());
  sym -= (sym.trace() / 3.0) * Mat3::Identity();
  return sym;
}

}  // namespace

TEST_CASE("uniform field returns its value everywhere") {
  FieldScene scene;
  scene.sources.push_back(UniformField{Vec3(0.0, 0.0, 50e-6)});
  CHECK(field_at(scene, Vec3(0.1, -0.2, 0.3)) == Vec3(0.0, 0.0, 50e-6));
  CHECK(gradient_tensor_at(scene, Vec3(1.0, 2.0, 3.0)).norm() == 0.0);
}

TEST_CASE("coil loop center field matches mu0 I / 2R") {
  const double radius = 0.05;
  const double current = 2.0;
  FieldScene scene;
  scene.sources.push_back(
      CoilLoop{Vec3::Zero(), Vec3::UnitZ(), radius, current, 360});
  const Vec3 b = field_at(scene, Vec3::Zero());
  const double expected = constants::mu0 * current / (2.0 * radius);
  CHECK(std::abs(b(2) - expected) < 1e-3 * expected);
  CHECK(std::abs(b(0)) < 1e-12 * expected);
  CHECK(std::abs(b(1)) < 1e-12 * expected);
}

TEST_CASE("dipole on-axis field has the closed form") {
  const double m = 3.0;
  const double d = 0.4;
  FieldScene scene;
  scene.sources.push_back(DipoleField{Vec3(0.0, 0.0, m), Vec3::Zero()});
  const Vec3 b = field_at(scene, Vec3(0.0, 0.0, d));
  const double expected = constants::mu0 * m / (2.0 * std::numbers::pi * d * d * d);
  CHECK(b(2) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(b(0)) < 1e-18);
  CHECK(std::abs(b(1)) < 1e-18);
}

TEST_CASE("linear gradient source evaluates b0 + G (r - origin)") {
  Mat3 g;
  g << 1.0, 2.0, 3.0, 2.0, -4.0, 5.0, 3.0, 5.0, 3.0;  // symmetric traceless
  g *= 1e-5;
  const Vec3 b0(1e-6, -2e-6, 3e-6);
  const Vec3 origin(0.01, 0.02, -0.01);
  FieldScene scene;
  scene.sources.push_back(LinearGradientField::make(b0, g, origin));
  const Vec3 r(0.03, -0.04, 0.05);
  CHECK((field_at(scene, r) - (b0 + g * (r - origin))).norm() < 1e-18);
  CHECK((gradient_tensor_at(scene, r) - g).norm() == 0.0);
}

TEST_CASE("maxwell_valid construction rejects unphysical tensors") {
  Mat3 bad = Mat3::Zero();
  bad(1, 1) = 1e-5;  // nonzero trace
  CHECK_THROWS_AS(LinearGradientField::make(Vec3::Zero(), bad),
                  std::invalid_argument);
  Mat3 skew = Mat3::Zero();
  skew(0, 1) = 1e-5;
  skew(1, 0) = -1e-5;
  CHECK_THROWS_AS(LinearGradientField::make(Vec3::Zero(), skew),
                  std::invalid_argument);
  // explicitly non-Maxwellian tensors are allowed with the flag off
  CHECK_NOTHROW(LinearGradientField::make(Vec3::Zero(), bad, Vec3::Zero(),
                                          false));
}

TEST_CASE("singular points are rejected") {
  FieldScene scene;
  scene.sources.push_back(DipoleField{Vec3(1.0, 0.0, 0.0), Vec3(0.1, 0.0, 0.0)});
  CHECK_THROWS_AS(field_at(scene, Vec3(0.1, 0.0, 0.0)), SingularPoint);

  FieldScene coil;
  coil.sources.push_back(CoilLoop{Vec3::Zero(), Vec3::UnitZ(), 0.05, 1.0, 180});
  CHECK_THROWS_AS(field_at(coil, Vec3(0.05, 0.0, 0.0)), SingularPoint);
}

TEST_CASE("coil loop validates the segment count") {
  FieldScene scene;
  scene.sources.push_back(CoilLoop{Vec3::Zero(), Vec3::UnitZ(), 0.05, 1.0, 6});
  CHECK_THROWS_AS(field_at(scene, Vec3(0.0, 0.0, 0.01)),
                  std::invalid_argument);
}

TEST_CASE("anti-Helmholtz pair: diag(-g/2, -g/2, g) at the center") {
  FieldScene scene;
  scene.sources.push_back(make_coil_pair(Vec3::Zero(), Vec3::UnitZ(), 0.1,
                                         0.1, 5.0, true, 360));
  CHECK(field_at(scene, Vec3::Zero()).norm() < 1e-15);
  const Mat3 g = gradient_tensor_at(scene, Vec3::Zero());
  const double gz = g(2, 2);
  CHECK(gz != 0.0);
  CHECK(g(0, 0) == doctest::Approx(-0.5 * gz).epsilon(1e-6));
  CHECK(g(1, 1) == doctest::Approx(-0.5 * gz).epsilon(1e-6));
  CHECK(std::abs(g.trace()) < 1e-12 * std::abs(gz));
  CHECK((g - g.transpose()).norm() < 1e-9 * g.norm());
  // finite-difference oracle at an off-center point
  const Vec3 r(0.004, -0.003, 0.006);
  const Mat3 gfd = fd_gradient(scene, r, 1e-5);
  CHECK((gfd - gradient_tensor_at(scene, r)).norm() < 1e-6 * gfd.norm());
}

TEST_CASE("dipole tensor matches finite differences over step sizes") {
  FieldScene scene;
  scene.sources.push_back(DipoleField{Vec3(1.0, -2.0, 0.5), Vec3(0.5, 0.4, -0.3)});
  const Vec3 r(0.01, -0.02, 0.03);
  const Mat3 g = gradient_tensor_at(scene, r);
  for (double h : {1e-7, 1e-6, 1e-5}) {
    CHECK((fd_gradient(scene, r, h) - g).norm() < 1e-6 * g.norm());
  }
}

TEST_CASE("field_at is additive over source concatenation") {
  std::mt19937_64 rng(41);
  FieldScene a, b, both;
  a.sources.push_back(UniformField{Vec3(1e-6, 2e-6, -1e-6)});
  a.sources.push_back(DipoleField{Vec3(0.5, 1.0, -0.2), Vec3(0.4, 0.0, 0.1)});
  b.sources.push_back(
      LinearGradientField::make(Vec3::Zero(), random_maxwell_tensor(rng, 1e-5)));
  both.sources = a.sources;
  both.sources.insert(both.sources.end(), b.sources.begin(), b.sources.end());
  const Vec3 r(0.02, 0.01, -0.015);
  CHECK((field_at(both, r) - (field_at(a, r) + field_at(b, r))).norm() <
        1e-18);
}

TEST_CASE("grad magnitude: uniform field gives zero") {
  FieldScene scene;
  scene.sources.push_back(UniformField{Vec3(3e-5, -1e-5, 2e-5)});
  CHECK(grad_magnitude_at(scene, Vec3(0.1, 0.0, 0.0)).norm() == 0.0);
}

TEST_CASE("grad magnitude throws on zero field") {
  FieldScene scene;
  scene.sources.push_back(UniformField{Vec3::Zero()});
  CHECK_THROWS_AS(grad_magnitude_at(scene, Vec3::Zero()), ZeroField);
}

TEST_CASE("grad magnitude is exact sign(Bx) d Bx/dx_i for a pure x field") {
  std::mt19937_64 rng(7);
  Mat3 g = random_maxwell_tensor(rng, 1e-5);
  // make field purely along x at the probe point: choose b0 so the other
  // components vanish there
  const Vec3 r(0.003, -0.002, 0.004);
  Vec3 db = g * r;
  FieldScene scene;
  scene.sources.push_back(LinearGradientField::make(
      Vec3(40e-6 - db(0), -db(1), -db(2)), g));
  const Vec3 grad = grad_magnitude_at(scene, r);
  for (int i = 0; i < 3; ++i) {
    CHECK(grad(i) == doctest::Approx(g(0, i)).epsilon(1e-12));
  }
}

TEST_CASE("grad magnitude matches finite differences of |B|") {
  std::mt19937_64 rng(11);
  FieldScene scene;
  scene.sources.push_back(LinearGradientField::make(
      Vec3(50e-6, 5e-6, 0.0), random_maxwell_tensor(rng, 2e-5)));
  scene.sources.push_back(DipoleField{Vec3(0.2, 0.4, -0.1), Vec3(0.5, 0.2, 0.4)});
  const Vec3 r(0.002, 0.001, -0.003);
  const Vec3 grad = grad_magnitude_at(scene, r);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    Vec3 dr = Vec3::Zero();
    dr(i) = h;
    const double fd = (field_at(scene, r + dr).norm() -
                       field_at(scene, r - dr).norm()) / (2.0 * h);
    CHECK(grad(i) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("dominant-bias approximation error is bounded by B_perp/B_par") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat3 g = random_maxwell_tensor(rng, 1e-4);
    std::uniform_real_distribution<double> perp(0.0, 5e-6);
    const Vec3 b0(40e-6, perp(rng), perp(rng));
    FieldScene scene;
    scene.sources.push_back(LinearGradientField::make(b0, g));
    const Vec3 exact = grad_magnitude_at(scene, Vec3::Zero());
    const Vec3 approx = g.row(0).transpose();  // sign(Bx) = +1
    const double bpar = std::abs(b0(0));
    const double bperp = std::hypot(b0(1), b0(2));
    CHECK((exact - approx).norm() <= (bperp / bpar) * g.norm() + 1e-18);
  }
}

TEST_CASE("maxwell residual diagnostics") {
  std::mt19937_64 rng(17);
  const Mat3 good = random_maxwell_tensor(rng, 1e-5);
  const MaxwellResiduals res = maxwell_residuals(good);
  CHECK(res.trace_rel < 1e-12);
  CHECK(res.asymmetry_rel < 1e-12);
  Mat3 bad = good;
  bad(0, 1) += 0.5 * good.norm();
  CHECK(maxwell_residuals(bad).asymmetry_rel > 0.1);
}

TEST_CASE("finite-difference agreement across step sizes for every source") {
  FieldScene scene;
  scene.sources.push_back(UniformField{Vec3(20e-6, -5e-6, 10e-6)});
  Mat3 g;
  g << 3.0, 1.0, -2.0, 1.0, -1.0, 4.0, -2.0, 4.0, -2.0;
  scene.sources.push_back(LinearGradientField::make(Vec3::Zero(), Mat3(g * 1e-5)));
  scene.sources.push_back(DipoleField{Vec3(1.0, 2.0, -0.5), Vec3(0.5, 0.3, -0.4)});
  scene.sources.push_back(CoilLoop{Vec3(0.0, 0.25, 0.0), Vec3::UnitY(), 0.12, 3.0, 180});
  scene.sources.push_back(make_coil_pair(Vec3(0.3, 0.0, 0.1), Vec3::UnitX(),
                                         0.1, 0.12, 2.0, true, 180));
  const Vec3 r(0.005, -0.01, 0.008);
  const Mat3 analytic = gradient_tensor_at(scene, r);
  for (double h : {1e-7, 1e-6, 1e-5}) {
    const Mat3 fd = fd_gradient(scene, r, h);
    CHECK((fd - analytic).norm() < 1e-6 * analytic.norm());
  }
}
