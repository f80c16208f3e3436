#include "gradiometer/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gradiometer/constants.hpp"
#include "gradiometer/errors.hpp"
#include "gradiometer/io.hpp"
#include "gradiometer/parallel.hpp"
#include "gradiometer/pipeline.hpp"
#include "gradiometer/rng.hpp"
#include "gradiometer/sensitivity.hpp"

namespace gradiometer {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNTmm = 1e-6;  // nT/mm in T/m

// Reference in-plane gradient components (nT/mm): columns x and z of the
// demonstrated ambient-field tensor, with their quoted uncertainties.
InPlaneMeasurements reference_measurements() {
  struct Entry {
    int component, axis;
    double value, sigma;
  };
  const Entry entries[] = {
      {0, 0, -57.1, 0.7}, {1, 0, -69.2, 0.4}, {2, 0, 149.5, 0.3},
      {0, 2, 147.0, 0.7}, {1, 2, 26.6, 0.4},  {2, 2, -94.7, 0.3},
  };
  InPlaneMeasurements in_plane;
  for (const auto& e : entries) {
    GradientMeasurement m;
    m.component = e.component;
    m.axis = e.axis;
    m.value = e.value * kNTmm;
    m.sigma = e.sigma * kNTmm;
    in_plane.set(m);
  }
  return in_plane;
}

// Gradient scene whose directional derivative of B_y along the z' baseline
// equals `dby_dzp` (T/m), built as a symmetric traceless lab-frame tensor.
Scenario gradient_scenario(double dby_dzp, std::uint64_t seed) {
  Scenario sc;
  const double q = dby_dzp / std::numbers::sqrt2;
  Mat3 g = Mat3::Zero();
  g(1, 0) = g(0, 1) = q;
  g(1, 2) = g(2, 1) = -q;
  sc.scene.sources.push_back(LinearGradientField::make(Vec3::Zero(), g));
  // Larmor-frequency common-mode noise 2 pi x 192 Hz expressed in tesla.
  sc.scene.common_noise_sigma = 2.0 * kPi * 192.0 / constants::gamma_rb87;
  sc.bias_axis = Vec3::UnitY();
  sc.bias_tesla = 37e-6;
  sc.baseline_frame = "zp";
  sc.baseline_m = 840e-6;
  sc.phi_list = uniform_phase_grid(24);
  sc.noise.n_atoms = 50000;
  sc.noise.projection_noise = true;
  sc.noise.kappa = 3.0;
  sc.noise.seed = seed;
  sc.bootstrap_resamples = 300;
  return sc;
}

Scenario fig3_scenario(std::uint64_t seed) {
  Scenario sc = gradient_scenario(-53.3 * kNTmm, seed);
  // grid placed to keep every folded |dphi| inside [0.15, pi-0.15]
  sc.T_list = {0.3e-3, 0.6e-3, 0.9e-3, 1.2e-3, 1.4e-3,
               1.8e-3, 2.1e-3, 2.4e-3, 2.7e-3, 3.0e-3};
  return sc;
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream out;
  out.precision(prec);
  out << v;
  return out.str();
}

// --------------------------- criterion 1 ----------------------------------

CriterionResult c1_tensor_completion() {
  CriterionResult r{1, "tensor completion from in-plane components", false, ""};
  const GradientTensor t = complete_tensor(reference_measurements());
  const Vec3 inferred(t.raw(0, 1), t.raw(1, 1), t.raw(2, 1));
  const Vec3 target(-69.2 * kNTmm, 151.8 * kNTmm, 26.6 * kNTmm);
  const double worst = (inferred - target).cwiseAbs().maxCoeff();
  const double trace = std::abs(t.raw.trace());
  const double asym = t.asymmetry;
  // 0.05 nT/mm covers the rounding of the printed reference values; the
  // trace must vanish to double rounding (entries are ~1e-4 T/m).
  const bool ok_col = worst <= 0.05 * kNTmm;
  const bool ok_trace = trace <= 1e-18;
  const bool ok_asym = std::abs(asym - 2.5 * kNTmm) <= 1e-12;
  r.pass = ok_col && ok_trace && ok_asym;
  r.detail = "inferred column y (" + fmt(inferred(0) / kNTmm) + ", " +
             fmt(inferred(1) / kNTmm) + ", " + fmt(inferred(2) / kNTmm) +
             ") nT/mm vs (-69.2, 151.8, 26.6), max dev " +
             fmt(worst / kNTmm, 2) + " nT/mm (tol 0.05); |trace| = " +
             fmt(trace, 2) + " T/m; asymmetry " + fmt(asym / kNTmm, 2) +
             " nT/mm";
  return r;
}

// --------------------------- criterion 2 ----------------------------------

CriterionResult c2_gradient_recovery(std::uint64_t seed, int threads) {
  CriterionResult r{2, "synthetic gradient sweep recovers -53.3 nT/mm", false,
                    ""};
  const Scenario sc = fig3_scenario(derive_seed(seed, 2));
  const GradientMeasurement m = measure_gradient(sc, threads);
  const double target = -53.3 * kNTmm;
  const double dev = std::abs(m.value - target);
  const bool ok_sigma = m.sigma <= 0.4 * kNTmm && m.sigma > 0.0;
  const bool ok_value = dev <= 2.0 * m.sigma;
  r.pass = ok_sigma && ok_value;
  r.detail = "recovered " + fmt(m.value / kNTmm) + " +- " +
             fmt(m.sigma / kNTmm, 2) + " nT/mm (target -53.3, |dev| = " +
             fmt(dev / kNTmm, 2) + " <= 2 sigma; sigma tol 0.4)";
  return r;
}

// --------------------------- criterion 3 ----------------------------------

struct CmrrStats {
  std::vector<double> dphi;
  std::vector<double> draws;
  double mean_phase_contrast = 0.0;
  double mean_ellipse_contrast = 0.0;
  int degenerate = 0;
};

CmrrStats cmrr_ensemble(const Scenario& base, double T, int reps,
                        std::uint64_t seed, int threads) {
  CmrrStats stats;
  std::vector<double> phase_contrast(static_cast<std::size_t>(reps), 0.0);
  std::vector<double> ellipse_contrast(static_cast<std::size_t>(reps), 0.0);
  std::vector<double> dphi(static_cast<std::size_t>(reps),
                           std::numeric_limits<double>::quiet_NaN());
  std::vector<std::vector<double>> draws(static_cast<std::size_t>(reps));

  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t rep) {
    Scenario sc = base;
    sc.T_list = {T};
    sc.noise.seed = derive_seed(seed, 0xC3, rep);
    const auto shots = simulate_shots(sc, 1);
    std::vector<Point2> pts;
    std::vector<double> phi, f1;
    for (const Shot& s : shots) {
      pts.emplace_back(s.cloud1.fz, s.cloud2.fz);
      phi.push_back(s.phi);
      f1.push_back(s.cloud1.fz);
      draws[rep].push_back(s.common_draw);
    }
    phase_contrast[rep] = fit_phase_fringe(phi, f1).contrast;
    try {
      const Conic conic = fit_conic(pts, fit_options(sc));
      dphi[rep] = relative_phase(conic).abs_dphi;
      const auto ext = ellipse_extents(conic);
      ellipse_contrast[rep] = std::min(ext[0], ext[1]);
    } catch (const DegenerateConic&) {
      ellipse_contrast[rep] = 0.0;
    }
  });

  for (int rep = 0; rep < reps; ++rep) {
    const auto u = static_cast<std::size_t>(rep);
    stats.mean_phase_contrast += phase_contrast[u];
    if (std::isnan(dphi[u])) {
      ++stats.degenerate;
    } else {
      stats.dphi.push_back(dphi[u]);
      stats.mean_ellipse_contrast += ellipse_contrast[u];
    }
    for (double d : draws[u]) stats.draws.push_back(d);
  }
  stats.mean_phase_contrast /= reps;
  if (!stats.dphi.empty()) {
    stats.mean_ellipse_contrast /= static_cast<double>(stats.dphi.size());
  }
  return stats;
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

CriterionResult c3_cmrr(std::uint64_t seed, int threads) {
  CriterionResult r{3, "common-mode rejection >= 50 dB at T = 3 ms", false,
                    ""};
  // Gradient sized so |dphi|(3 ms) sits near pi/2, away from degeneracy.
  const double slope_target = 0.5 * kPi / 3e-3;  // rad/s
  const double grad = slope_target / (constants::gamma_rb87 * 840e-6);
  Scenario sc = gradient_scenario(-grad, 0);
  const int reps = 500;

  const CmrrStats at3ms =
      cmrr_ensemble(sc, 3e-3, reps, derive_seed(seed, 3, 1), threads);
  const CmrrStats at15ms =
      cmrr_ensemble(sc, 1.5e-3, reps, derive_seed(seed, 3, 2), threads);
  // short interrogation: phase-domain fringes still resolved
  const CmrrStats at01ms =
      cmrr_ensemble(sc, 0.1e-3, 100, derive_seed(seed, 3, 3), threads);

  // Single-interferometer phase spread, measured from the common-mode draws
  // actually applied this run.
  const double sigma_b = sample_std(at3ms.draws);
  const double sigma_single = constants::gamma_rb87 * sigma_b * 3e-3;
  const double sigma_diff = sample_std(at3ms.dphi);
  const double rejection = cmrr_db(sigma_single, sigma_diff);

  const bool ok_cmrr = rejection >= 50.0;
  const bool ok_phase_contrast =
      at3ms.mean_phase_contrast < 0.5 && at15ms.mean_phase_contrast < 0.5 &&
      at01ms.mean_phase_contrast > 0.9;
  const bool ok_ellipse_contrast = at3ms.mean_ellipse_contrast > 0.95 &&
                                   at15ms.mean_ellipse_contrast > 0.95;
  const bool ok_yield = at3ms.degenerate <= reps / 20;
  r.pass = ok_cmrr && ok_phase_contrast && ok_ellipse_contrast && ok_yield;
  r.detail = "rejection " + fmt(rejection) + " dB (>= 50); single sigma " +
             fmt(sigma_single) + " rad vs ellipse sigma " + fmt(sigma_diff) +
             " rad; phase-domain contrast " + fmt(at01ms.mean_phase_contrast, 2) +
             " @0.1ms (> 0.9) vs " + fmt(at15ms.mean_phase_contrast, 2) +
             " @1.5ms / " + fmt(at3ms.mean_phase_contrast, 2) +
             " @3ms (< 0.5); ellipse contrast " +
             fmt(at3ms.mean_ellipse_contrast, 3) + " (> 0.95); degenerate " +
             std::to_string(at3ms.degenerate) + "/" + std::to_string(reps);
  return r;
}

// --------------------------- criterion 4 ----------------------------------

CriterionResult c4_sensitivity() {
  CriterionResult r{4, "sensitivity figures of merit", false, ""};
  SensitivityParams demonstrated;
  demonstrated.n_atoms = 1e5;
  demonstrated.T = 3e-3;
  demonstrated.t_shot = 25.0;
  demonstrated.kappa = 3.0;
  demonstrated.volume = 2e-14;  // 2e-5 mm^3
  const double db_demo = sql_sensitivity(demonstrated);

  SensitivityParams prospective;
  prospective.n_atoms = 1e6;
  prospective.T = 0.2;
  prospective.t_shot = 25.0;  // duty cycle 0.008
  prospective.kappa = 1.0;
  prospective.volume = 8e-15;  // (20 um)^3
  const double db_pros = sql_sensitivity(prospective);

  const double spatio_demo = spatiotemporal(db_demo, demonstrated.volume);
  const double spatio_pros = spatiotemporal(db_pros, prospective.volume);
  const double eps =
      energy_resolution_hbar(db_pros, prospective.T, prospective.volume);

  const bool ok1 = std::abs(db_demo - 360e-12) <= 0.03 * 360e-12;
  const bool ok2 = std::abs(db_pros - 600e-15) <= 0.10 * 600e-15;
  const bool ok3 = std::abs(spatio_demo - 51e-15) <= 0.05 * 51e-15;
  const bool ok4 = std::abs(spatio_pros - 0.05e-15) <= 0.05 * 0.05e-15;
  const bool ok5 = eps >= 5.0 && eps <= 20.0;
  r.pass = ok1 && ok2 && ok3 && ok4 && ok5;
  r.detail = fmt(db_demo * 1e12) + " pT/rtHz (360 +- 3%); " +
             fmt(db_pros * 1e15) + " fT/rtHz (600 +- 10%); " +
             fmt(spatio_demo * 1e15) + " fT cm^1.5/rtHz (51 +- 5%); " +
             fmt(spatio_pros * 1e15, 3) + " (0.05 +- 5%); energy " +
             fmt(eps, 3) + " hbar (in [5, 20])";
  return r;
}

// --------------------------- criterion 5 ----------------------------------

CriterionResult c5_dipole_bearing(std::uint64_t seed) {
  CriterionResult r{5, "dipole bearing from the gradient tensor", false, ""};
  auto rng = make_rng(derive_seed(seed, 5));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> dist_d(0.3, 2.0);
  std::uniform_real_distribution<double> dist_m(0.5, 2.0);

  int reliable = 0, hits = 0, flagged = 0;
  double worst_reliable_deg = 0.0;
  for (int k = 0; k < 100; ++k) {
    Vec3 n(gauss(rng), gauss(rng), gauss(rng));
    n.normalize();
    Vec3 mdir(gauss(rng), gauss(rng), gauss(rng));
    mdir.normalize();
    const double d = dist_d(rng);
    const double mmag = dist_m(rng);

    FieldScene scene;
    scene.sources.push_back(DipoleField{mmag * mdir, d * n});
    const Mat3 g = gradient_tensor_at(scene, Vec3::Zero());
    try {
      const BearingResult b = dipole_bearing(g);
      // bearing is an axis: the source sits along -n from the sensor
      const double angle_deg =
          std::acos(std::min(1.0, std::abs(b.direction.dot(n)))) * 180.0 / kPi;
      if (b.reliable) {
        ++reliable;
        worst_reliable_deg = std::max(worst_reliable_deg, angle_deg);
        if (angle_deg <= 5.0) ++hits;
      } else {
        ++flagged;
      }
    } catch (const DegenerateEigenvalues&) {
      ++flagged;
    }
  }
  const bool ok = reliable >= 1 && hits * 10 >= reliable * 9;
  r.pass = ok;
  r.detail = std::to_string(hits) + "/" + std::to_string(reliable) +
             " above-threshold bearings within 5 deg (worst " +
             fmt(worst_reliable_deg, 3) + " deg); " + std::to_string(flagged) +
             "/100 below the separation threshold, flagged not dropped";
  return r;
}

// --------------------------- criterion 6 ----------------------------------

CriterionResult c6_maxwell_suite(std::uint64_t seed) {
  CriterionResult r{6, "gradient tensors obey the vacuum field equations",
                    false, ""};
  auto rng = make_rng(derive_seed(seed, 6));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  const auto random_unit = [&] {
    Vec3 v(gauss(rng), gauss(rng), gauss(rng));
    return Vec3(v.normalized());
  };

  double worst_trace = 0.0, worst_asym = 0.0, worst_fd = 0.0;
  int failures = 0;
  const int n_cases = 1000;
  for (int k = 0; k < n_cases; ++k) {
    FieldScene scene;
    // a random symmetric traceless linear gradient keeps ||G|| well scaled
    Mat3 s;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) s(i, j) = gauss(rng) * 1e-4;
    Mat3 sym = 0.5 * (s + s.transpose());
    sym -= (sym.trace() / 3.0) * Mat3::Identity();
    scene.sources.push_back(
        LinearGradientField::make(Vec3::Zero(), sym, Vec3::Zero(), true));
    if (uni(rng) < 0.7) {
      scene.sources.push_back(
          UniformField{random_unit() * 50e-6 * uni(rng)});
    }
    const double pick = uni(rng);
    if (pick < 0.30) {
      scene.sources.push_back(DipoleField{
          Vec3(gauss(rng), gauss(rng), gauss(rng)) * (1.0 + 4.0 * uni(rng)),
          random_unit() * (0.4 + 0.6 * uni(rng))});
    } else if (pick < 0.55) {
      // keep every wire at least ~6 cm from the evaluation ball so the
      // finite-difference oracle stays in its quadratic regime
      const double radius = 0.1 + 0.1 * uni(rng);
      scene.sources.push_back(
          CoilLoop{random_unit() * (radius + 0.08 + 0.3 * uni(rng)),
                   random_unit(), radius, 1.0 + 9.0 * uni(rng), 180});
    } else if (pick < 0.70) {
      const double radius = 0.1 + 0.1 * uni(rng);
      const double separation = 0.1 + 0.1 * uni(rng);
      scene.sources.push_back(make_coil_pair(
          random_unit() * (radius + 0.5 * separation + 0.08 + 0.3 * uni(rng)),
          random_unit(), radius, separation, 1.0 + 9.0 * uni(rng),
          uni(rng) < 0.5, 180));
    }

    const Vec3 point = Vec3(gauss(rng), gauss(rng), gauss(rng)) * 0.01;
    const Mat3 g = gradient_tensor_at(scene, point);
    const MaxwellResiduals res = maxwell_residuals(g);

    Mat3 fd;
    const double h = 1e-5;
    for (int j = 0; j < 3; ++j) {
      Vec3 dr = Vec3::Zero();
      dr(j) = h;
      fd.col(j) =
          (field_at(scene, point + dr) - field_at(scene, point - dr)) /
          (2.0 * h);
    }
    const double fd_rel = (fd - g).norm() / g.norm();

    worst_trace = std::max(worst_trace, res.trace_rel);
    worst_asym = std::max(worst_asym, res.asymmetry_rel);
    worst_fd = std::max(worst_fd, fd_rel);
    if (res.trace_rel > 1e-10 || res.asymmetry_rel > 1e-10 ||
        fd_rel > 1e-6) {
      ++failures;
    }
  }
  r.pass = failures == 0;
  r.detail = std::to_string(n_cases - failures) + "/" +
             std::to_string(n_cases) + " scenes pass; worst trace " +
             fmt(worst_trace, 2) + ", worst asymmetry " + fmt(worst_asym, 2) +
             " (tol 1e-10), worst finite-difference deviation " +
             fmt(worst_fd, 2) + " (tol 1e-6)";
  return r;
}

// --------------------------- criterion 7 ----------------------------------

CriterionResult c7_ellipse_roundtrip(std::uint64_t seed) {
  CriterionResult r{7, "ellipse phase round trip and bias guard", false, ""};
  const int m = 24;
  const std::vector<double> grid = uniform_phase_grid(m);

  // noiseless recovery over [0.15, pi - 0.15]
  double worst_noiseless = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double dphi = 0.15 + (kPi - 0.30) * k / 49.0;
    std::vector<Point2> pts;
    for (double t : grid) pts.emplace_back(std::cos(t), std::cos(t + dphi));
    const double rec = relative_phase(fit_conic(pts)).abs_dphi;
    worst_noiseless = std::max(worst_noiseless, std::abs(rec - dphi));
  }

  // bias with kappa = 3 noise on 1e5 total atoms
  const double sigma_f = 3.0 / std::sqrt(1e5);
  FitOptions noisy_opts;
  noisy_opts.noise_floor = sigma_f;
  double worst_bias = 0.0;
  auto rng = make_rng(derive_seed(seed, 7));
  std::normal_distribution<double> gauss(0.0, sigma_f);
  for (int k = 0; k < 50; ++k) {
    const double dphi = 0.15 + (kPi - 0.30) * k / 49.0;
    double mean = 0.0;
    int good = 0;
    for (int rep = 0; rep < 400; ++rep) {
      std::vector<Point2> pts;
      for (double t : grid) {
        pts.emplace_back(std::cos(t) + gauss(rng),
                         std::cos(t + dphi) + gauss(rng));
      }
      try {
        mean += relative_phase(fit_conic(pts, noisy_opts)).abs_dphi;
        ++good;
      } catch (const DegenerateConic&) {
      }
    }
    if (good < 350) {
      r.detail = "excess degenerate fits inside the working band";
      return r;
    }
    worst_bias = std::max(worst_bias, std::abs(mean / good - dphi));
  }

  // degeneracy band must refuse rather than return a biased phase
  int band_raised = 0;
  const double band_inputs[] = {0.02, kPi - 0.02};
  for (double dphi : band_inputs) {
    std::vector<Point2> pts;
    for (double t : grid) {
      pts.emplace_back(std::cos(t) + gauss(rng),
                       std::cos(t + dphi) + gauss(rng));
    }
    try {
      (void)fit_conic(pts, noisy_opts);
    } catch (const DegenerateConic&) {
      ++band_raised;
    }
  }
  {
    std::vector<Point2> pts;  // dphi = 0 exactly: collapsed onto Y = X
    for (double t : grid) pts.emplace_back(std::cos(t), std::cos(t));
    try {
      (void)fit_conic(pts);
    } catch (const DegenerateConic&) {
      ++band_raised;
    }
  }

  const bool ok = worst_noiseless <= 1e-6 && worst_bias < 0.01 &&
                  band_raised == 3;
  r.pass = ok;
  r.detail = "noiseless worst |error| " + fmt(worst_noiseless, 2) +
             " rad (tol 1e-6); worst noisy bias " + fmt(worst_bias, 2) +
             " rad (tol 0.01); " + std::to_string(band_raised) +
             "/3 degeneracy-band inputs raised DegenerateConic";
  return r;
}

// --------------------------- criterion 8 ----------------------------------

CriterionResult c8_freefall_cubic(std::uint64_t seed, int threads) {
  CriterionResult r{8, "freefall T^3 systematic matches the quadrature oracle",
                    false, ""};
  Scenario sc;
  sc.bias_axis = Vec3::UnitX();
  sc.bias_tesla = 50e-6;
  sc.baseline_frame = "xp";
  sc.baseline_m = 680e-6;
  sc.phi_list = uniform_phase_grid(24);
  sc.noise.projection_noise = false;
  sc.noise.seed = derive_seed(seed, 8);
  sc.T_list = {0.3e-3, 0.6e-3, 0.9e-3, 1.2e-3, 1.5e-3,
               1.8e-3, 2.1e-3, 2.4e-3, 2.7e-3, 3.0e-3};

  // dipole scaled so the slope is ~700 rad/s; |B| curvature along the fall
  // then produces a resolvable cubic term
  DipoleField dip{Vec3(2.0, -1.0, 3.0), Vec3(0.45, -0.35, 0.25)};
  {
    FieldScene probe;
    probe.sources.push_back(UniformField{sc.bias_axis * sc.bias_tesla});
    probe.sources.push_back(dip);
    const auto [t1, t2] = cloud_trajectories(sc);
    const double f0 = field_at(probe, t1.r0).norm() -
                      field_at(probe, t2.r0).norm();
    const double target = 700.0 / constants::gamma_rb87;
    dip.moment *= target / f0;
  }
  sc.scene.sources.push_back(dip);

  // pipeline: simulated shots, ellipse extraction, unwrap, forced-cubic fit
  const auto shots = simulate_shots(sc, threads);
  AnalysisOptions opts;
  opts.fit = fit_options(sc);
  opts.bootstrap_resamples = 100;
  opts.seed = sc.noise.seed;
  const auto points = analyze_shots(shots, opts, threads);
  std::vector<UnwrapInput> series;
  for (const auto& p : points) {
    if (p.degenerate) {
      r.detail = "unexpected degenerate ellipse at T = " + fmt(p.T);
      return r;
    }
    series.push_back({p.T, p.phase.abs_dphi, p.phase.sigma});
  }
  const UnwrapResult unwrapped =
      unwrap(series, sign_hint_from_fringes(shots));

  // quadrature oracle: exact differential phases over the same grid, fitted
  // with the same weights so the comparison isolates the extraction path
  const FieldScene full = scene_with_bias(sc);
  const auto [t1, t2] = cloud_trajectories(sc);
  const CloudTrajectory a1 = t1.advanced(sc.pre_pulse_delay_s);
  const CloudTrajectory a2 = t2.advanced(sc.pre_pulse_delay_s);
  UnwrapResult oracle;
  for (std::size_t i = 0; i < sc.T_list.size(); ++i) {
    const double T = sc.T_list[i];
    oracle.T.push_back(T);
    oracle.phase.push_back(larmor_phase(full, a1, T) -
                           larmor_phase(full, a2, T));
    oracle.sigma.push_back(unwrapped.sigma[i]);
  }
  const LineFit oracle_fit = fit_phase_slope(oracle, /*force_cubic=*/true);
  const GradientMeasurement m =
      fit_gradient(unwrapped, sc.baseline_m, bias_sign(sc),
                   /*force_cubic=*/true);

  const double cubic_rel =
      std::abs(m.fit.cubic - oracle_fit.cubic) / std::abs(oracle_fit.cubic);
  const double true_gradient =
      bias_sign(sc) * oracle_fit.slope /
      (constants::gamma_rb87 * sc.baseline_m);
  const double grad_dev = std::abs(m.value - true_gradient);
  const bool ok_cubic = cubic_rel <= 1e-3;
  const bool ok_grad = grad_dev <= std::max(m.sigma, 1e-6 * std::abs(true_gradient));
  r.pass = ok_cubic && ok_grad;
  r.detail = "cubic coefficient " + fmt(m.fit.cubic) + " vs oracle " +
             fmt(oracle_fit.cubic) + " rad/s^3 (rel dev " + fmt(cubic_rel, 2) +
             ", tol 1e-3); gradient " + fmt(m.value / kNTmm) +
             " nT/mm within " + fmt(m.sigma / kNTmm, 2) + " of " +
             fmt(true_gradient / kNTmm);
  return r;
}

// --------------------------- criterion 9 ----------------------------------

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CriterionResult c9_determinism(std::uint64_t seed, int threads,
                               const std::optional<std::filesystem::path>&
                                   artifact_dir) {
  CriterionResult r{9, "seeded runs emit byte-identical outputs", false, ""};
  namespace fs = std::filesystem;
  const fs::path base = artifact_dir
                            ? *artifact_dir / "determinism"
                            : fs::temp_directory_path() /
                                  ("gradiometer_det_" + std::to_string(seed));
  const fs::path run_a = base / "run_a";
  const fs::path run_b = base / "run_b";
  fs::create_directories(run_a);
  fs::create_directories(run_b);
  emit_reference_bundle(seed, run_a, threads);
  emit_reference_bundle(seed, run_b, threads);

  int compared = 0, mismatched = 0;
  for (const auto& entry : fs::directory_iterator(run_a)) {
    ++compared;
    if (read_file(entry.path()) != read_file(run_b / entry.path().filename())) {
      ++mismatched;
    }
  }
  if (!artifact_dir) fs::remove_all(base);
  r.pass = compared >= 4 && mismatched == 0;
  r.detail = std::to_string(compared) + " files compared, " +
             std::to_string(mismatched) + " mismatched";
  return r;
}

}  // namespace

void emit_reference_bundle(std::uint64_t seed,
                           const std::filesystem::path& dir, int threads) {
  std::filesystem::create_directories(dir);
  Scenario sc = fig3_scenario(seed);
  const FileMeta meta{seed, config_hash(scenario_to_json(sc))};

  const auto shots = simulate_shots(sc, threads);
  write_shot_table(dir / "gradient_sweep_shots.csv", shots, meta);

  AnalysisOptions opts;
  opts.fit = fit_options(sc);
  opts.bootstrap_resamples = sc.bootstrap_resamples;
  opts.seed = sc.noise.seed;
  const auto points = analyze_shots(shots, opts, threads);
  write_phase_table(dir / "gradient_sweep_phases.csv", points, meta);

  const GradientTensor tensor = complete_tensor(reference_measurements());
  const BearingResult bearing = dipole_bearing(tensor.symmetrized);
  const NullingReport nulling = grad_nulling_advice(tensor.symmetrized);
  write_json(dir / "tensor.json", tensor_report(tensor, bearing, nulling, meta));

  SensitivityParams p;
  p.n_atoms = 1e5;
  p.T = 3e-3;
  p.t_shot = 25.0;
  p.kappa = 3.0;
  p.volume = 2e-14;
  write_json(dir / "sensitivity.json", sensitivity_report(p, meta));
}

std::vector<std::string> acceptance_names() {
  return {
      "tensor completion from in-plane components",
      "synthetic gradient sweep recovers -53.3 nT/mm",
      "common-mode rejection >= 50 dB at T = 3 ms",
      "sensitivity figures of merit",
      "dipole bearing from the gradient tensor",
      "gradient tensors obey the vacuum field equations",
      "ellipse phase round trip and bias guard",
      "freefall T^3 systematic matches the quadrature oracle",
      "seeded runs emit byte-identical outputs",
  };
}

CriterionResult run_criterion(
    int id, std::uint64_t seed, int threads,
    const std::optional<std::filesystem::path>& artifact_dir) {
  switch (id) {
    case 1: return c1_tensor_completion();
    case 2: return c2_gradient_recovery(seed, threads);
    case 3: return c3_cmrr(seed, threads);
    case 4: return c4_sensitivity();
    case 5: return c5_dipole_bearing(seed);
    case 6: return c6_maxwell_suite(seed);
    case 7: return c7_ellipse_roundtrip(seed);
    case 8: return c8_freefall_cubic(seed, threads);
    case 9: return c9_determinism(seed, threads, artifact_dir);
    default: throw ConfigError("unknown acceptance criterion id");
  }
}

std::vector<CriterionResult> run_all_acceptance(
    std::uint64_t seed, int threads,
    const std::optional<std::filesystem::path>& artifact_dir) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= 9; ++id) {
    try {
      out.push_back(run_criterion(id, seed, threads, artifact_dir));
    } catch (const std::exception& ex) {
      // a stage failure is recorded, not fatal; the rest still runs
      CriterionResult r;
      r.id = id;
      r.name = acceptance_names()[static_cast<std::size_t>(id - 1)];
      r.pass = false;
      r.detail = std::string("exception: ") + ex.what();
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace gradiometer
