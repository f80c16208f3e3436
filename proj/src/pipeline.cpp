#include "gradiometer/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>

#include "gradiometer/constants.hpp"
#include "gradiometer/errors.hpp"
#include "gradiometer/jacobi3.hpp"
#include "gradiometer/parallel.hpp"
#include "gradiometer/rng.hpp"

namespace gradiometer {

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 horizontal_axis(double angle_deg) {
  const double a = angle_deg * kPi / 180.0;
  return Vec3(std::cos(a), 0.0, std::sin(a));
}

double wrap_pi(double x) {
  x = std::fmod(x + kPi, 2.0 * kPi);
  if (x < 0.0) x += 2.0 * kPi;
  return x - kPi;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenario helpers
// ---------------------------------------------------------------------------

std::vector<double> uniform_phase_grid(int m) {
  std::vector<double> phi(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) phi[static_cast<std::size_t>(k)] = 2.0 * kPi * k / m;
  return phi;
}

Vec3 baseline_axis(const Scenario& sc) {
  if (sc.baseline_frame == "x") return Vec3::UnitX();
  if (sc.baseline_frame == "y") return Vec3::UnitY();
  if (sc.baseline_frame == "z") return Vec3::UnitZ();
  if (sc.baseline_frame == "xp") return horizontal_axis(sc.beam_angle_xp_deg);
  if (sc.baseline_frame == "zp") return horizontal_axis(sc.beam_angle_zp_deg);
  throw ConfigError("unknown baseline frame '" + sc.baseline_frame + "'");
}

FieldScene scene_with_bias(const Scenario& sc) {
  FieldScene full = sc.scene;
  full.sources.insert(full.sources.begin(),
                      UniformField{sc.bias_axis.normalized() * sc.bias_tesla});
  return full;
}

std::pair<CloudTrajectory, CloudTrajectory> cloud_trajectories(
    const Scenario& sc) {
  const Vec3 half = 0.5 * sc.baseline_m * baseline_axis(sc);
  CloudTrajectory t1{sc.center + half, Vec3::Zero(), sc.gravity};
  CloudTrajectory t2{sc.center - half, Vec3::Zero(), sc.gravity};
  return {t1, t2};
}

int bias_component(const Scenario& sc) {
  int idx = 0;
  sc.bias_axis.cwiseAbs().maxCoeff(&idx);
  return idx;
}

int bias_sign(const Scenario& sc) {
  return sc.bias_axis(bias_component(sc)) >= 0.0 ? 1 : -1;
}

double resolve_omega_ref(const Scenario& sc) {
  if (sc.omega_ref != 0.0) return sc.omega_ref;
  const auto [t1, t2] = cloud_trajectories(sc);
  return default_reference_frequency(scene_with_bias(sc), t1, t2);
}

FitOptions fit_options(const Scenario& sc) {
  FitOptions opts;
  opts.refine = sc.refine_fit;
  if (sc.noise.projection_noise) {
    opts.noise_floor =
        sc.noise.kappa / std::sqrt(2.0 * static_cast<double>(sc.noise.n_atoms));
  }
  return opts;
}

// ---------------------------------------------------------------------------
// Shot generation / analysis
// ---------------------------------------------------------------------------

std::vector<Shot> simulate_shots(const Scenario& sc, int threads) {
  if (sc.T_list.empty() || sc.phi_list.empty()) {
    throw ConfigError("scenario needs nonempty T_list and phi_list");
  }
  const FieldScene full = scene_with_bias(sc);
  const auto [t1, t2] = cloud_trajectories(sc);
  const CloudTrajectory a1 = t1.advanced(sc.pre_pulse_delay_s);
  const CloudTrajectory a2 = t2.advanced(sc.pre_pulse_delay_s);
  const double omega_ref = resolve_omega_ref(sc);

  const std::size_t n_t = sc.T_list.size();
  const std::size_t n_phi = sc.phi_list.size();
  std::vector<Shot> shots(n_t * n_phi);
  parallel_for(n_t * n_phi, threads, [&](std::size_t idx) {
    const std::size_t ti = idx / n_phi;
    const std::size_t pi = idx % n_phi;
    auto rng = make_rng(derive_seed(sc.noise.seed, ti, pi));
    shots[idx] = ramsey_shot(full, a1, a2, sc.T_list[ti], sc.phi_list[pi],
                             sc.noise, rng, omega_ref, sc.pulse_area_error);
  });
  return shots;
}

std::vector<SweepPoint> analyze_shots(std::span<const Shot> shots,
                                      const AnalysisOptions& opts,
                                      int threads) {
  std::map<double, std::vector<Point2>> groups;
  for (const Shot& s : shots) {
    groups[s.T].push_back(Point2(s.cloud1.fz, s.cloud2.fz));
  }

  std::vector<double> t_values;
  std::vector<const std::vector<Point2>*> point_sets;
  for (const auto& [t, pts] : groups) {
    t_values.push_back(t);
    point_sets.push_back(&pts);
  }

  std::vector<SweepPoint> out(t_values.size());
  parallel_for(t_values.size(), threads, [&](std::size_t i) {
    SweepPoint& sp = out[i];
    sp.T = t_values[i];
    const auto& pts = *point_sets[i];
    try {
      const Conic conic = fit_conic(pts, opts.fit);
      sp.phase = relative_phase(conic);
      sp.phase.n_points = static_cast<int>(pts.size());
      if (opts.fit.refine) sp.phase.method = "direct+refine";
      const auto boot = phase_uncertainty(
          pts, opts.bootstrap_resamples,
          derive_seed(opts.seed, 0xB007u, i), opts.fit);
      sp.phase.sigma = boot.sigma;
      sp.bootstrap_discarded = boot.n_discarded;
    } catch (const DegenerateConic& ex) {
      sp.degenerate = true;
      sp.note = ex.what();
    } catch (const TooFewPoints& ex) {
      sp.degenerate = true;
      sp.note = ex.what();
    }
  });
  return out;
}

std::vector<SweepPoint> sweep(const Scenario& sc, int threads) {
  if (sc.T_list.size() < 3) {
    throw ConfigError("sweep needs at least 3 interrogation times");
  }
  if (sc.phi_list.size() < 6) {
    throw ConfigError("sweep needs at least 6 pulse phases per ellipse");
  }
  const auto shots = simulate_shots(sc, threads);
  AnalysisOptions opts;
  opts.fit = fit_options(sc);
  opts.bootstrap_resamples = sc.bootstrap_resamples;
  opts.seed = sc.noise.seed;
  return analyze_shots(shots, opts, threads);
}

FringeFit fit_phase_fringe(std::span<const double> phi,
                           std::span<const double> fz) {
  std::complex<double> z{0.0, 0.0};
  for (std::size_t i = 0; i < phi.size(); ++i) {
    z += fz[i] * std::exp(std::complex<double>(0.0, -phi[i]));
  }
  z *= 2.0 / static_cast<double>(phi.size());
  return FringeFit{std::abs(z), -std::arg(z)};
}

int sign_hint_from_fringes(std::span<const Shot> shots) {
  double t_min = std::numeric_limits<double>::infinity();
  for (const Shot& s : shots) t_min = std::min(t_min, s.T);
  std::vector<double> phi, f1, f2;
  for (const Shot& s : shots) {
    if (s.T == t_min) {
      phi.push_back(s.phi);
      f1.push_back(s.cloud1.fz);
      f2.push_back(s.cloud2.fz);
    }
  }
  const FringeFit a = fit_phase_fringe(phi, f1);
  const FringeFit b = fit_phase_fringe(phi, f2);
  return wrap_pi(a.phase - b.phase) >= 0.0 ? 1 : -1;
}

// ---------------------------------------------------------------------------
// Unwrapping
// ---------------------------------------------------------------------------

namespace {

// Candidate branch values s*|dphi| + 2 pi n near a prediction, deduplicated
// (at |dphi| = 0 or pi the two signs coincide in value).
std::vector<double> branch_candidates(double abs_dphi, double center,
                                      int width = 2) {
  std::vector<double> out;
  const int n0 = static_cast<int>(std::lround(center / (2.0 * kPi)));
  for (int n = n0 - width; n <= n0 + width; ++n) {
    for (double v : {abs_dphi + 2.0 * kPi * n, -abs_dphi + 2.0 * kPi * n}) {
      bool dup = false;
      for (double seen : out) dup = dup || std::abs(seen - v) < 1e-12;
      if (!dup) out.push_back(v);
    }
  }
  return out;
}

double nearest_candidate(double abs_dphi, double pred) {
  double best = std::numeric_limits<double>::infinity();
  double chosen = pred;
  for (double cand : branch_candidates(abs_dphi, pred)) {
    const double dist = std::abs(cand - pred);
    if (dist < best ||
        (dist == best && std::abs(cand) < std::abs(chosen))) {
      best = dist;
      chosen = cand;
    }
  }
  return chosen;
}

// The differential phase vanishes identically at T = 0 (both interferometers
// coincide), so branch selection fits a line through the origin; a free
// intercept would admit aliased assignments with an intercept near pi.
double slope_through_origin(std::span<const double> t,
                            std::span<const double> y) {
  double sty = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sty += t[i] * y[i];
    stt += t[i] * t[i];
  }
  return stt > 0.0 ? sty / stt : 0.0;
}

double origin_line_rss(std::span<const double> t, std::span<const double> y,
                       double slope) {
  double rss = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = y[i] - slope * t[i];
    rss += r * r;
  }
  return rss;
}

}  // namespace

UnwrapResult unwrap(std::span<const UnwrapInput> series, int sign_hint) {
  if (series.size() < 2) {
    throw ConfigError("unwrap needs at least two points");
  }
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (series[i].T <= series[i - 1].T) {
      throw ConfigError("unwrap requires strictly ascending T");
    }
  }
  if (sign_hint != 1 && sign_hint != -1) {
    throw ConfigError("sign hint must be +1 or -1");
  }

  const std::size_t n = series.size();
  std::vector<double> t(n), sig(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = series[i].T;
    sig[i] = series[i].sigma;  // branch selection is unweighted; sigmas
  }                            // report through to the slope fit

  // The smallest T is pinned to the principal branch by the sign hint; the
  // second point enumerates slope hypotheses, and each later point snaps to
  // the branch nearest the running line (folding reflects at multiples of
  // pi, so prediction must come from the line, not the previous point).
  const double v0 = sign_hint * series[0].abs_dphi;
  const auto assign = [&](double v1) {
    std::vector<double> y(n);
    y[0] = v0;
    if (n > 1) y[1] = v1;
    for (std::size_t i = 2; i < n; ++i) {
      const double slope = slope_through_origin(std::span(t).first(i),
                                                std::span(y).first(i));
      y[i] = nearest_candidate(series[i].abs_dphi, slope * t[i]);
    }
    // polish: re-snap everything but the seed to the full-series line
    for (int pass = 0; pass < 8; ++pass) {
      const double slope = slope_through_origin(t, y);
      bool changed = false;
      for (std::size_t i = 1; i < n; ++i) {
        const double snap =
            nearest_candidate(series[i].abs_dphi, slope * t[i]);
        changed = changed || snap != y[i];
        y[i] = snap;
      }
      if (!changed) break;
    }
    return y;
  };

  std::vector<double> best_y;
  double best_rss = std::numeric_limits<double>::infinity();
  {
    std::vector<std::vector<double>> assignments;
    for (double v1 : branch_candidates(series[1].abs_dphi, v0)) {
      if (std::abs(v1 - v0) > kPi + 1e-9) continue;  // sampling precondition
      assignments.push_back(assign(v1));
    }
    if (assignments.empty()) {
      throw AmbiguousUnwrap("no branch of the second point lies within pi of "
                            "the seeded first point");
    }
    std::vector<double> rss_list;
    for (const auto& y : assignments) {
      rss_list.push_back(origin_line_rss(t, y, slope_through_origin(t, y)));
      if (rss_list.back() < best_rss) {
        best_rss = rss_list.back();
        best_y = y;
      }
    }
    for (std::size_t k = 0; k < assignments.size(); ++k) {
      if (assignments[k] != best_y && rss_list[k] < 2.0 * best_rss) {
        throw AmbiguousUnwrap(
            "two branch assignments fit within a factor 2 of each other");
      }
    }
  }

  // Runner-up scan: force each point onto its second-closest branch; a
  // competing assignment within a factor 2 of the best residual means the
  // sampling cannot resolve the cycle count.
  const double best_slope = slope_through_origin(t, best_y);
  for (std::size_t i = 1; i < n; ++i) {
    const double pred = best_slope * t[i];
    double second = std::numeric_limits<double>::quiet_NaN();
    double second_dist = std::numeric_limits<double>::infinity();
    for (double cand : branch_candidates(series[i].abs_dphi, pred)) {
      const double dist = std::abs(cand - pred);
      if (cand != best_y[i] && dist < second_dist) {
        second_dist = dist;
        second = cand;
      }
    }
    if (!std::isfinite(second)) continue;
    std::vector<double> alt(best_y);
    alt[i] = second;
    const double alt_rss =
        origin_line_rss(t, alt, slope_through_origin(t, alt));
    if (alt_rss < 2.0 * best_rss) {
      throw AmbiguousUnwrap(
          "two branch assignments fit within a factor 2 of each other");
    }
  }

  // straight-line consistency: a correct assignment leaves every residual
  // far below the half-branch spacing
  for (std::size_t i = 0; i < n; ++i) {
    const double resid = best_y[i] - best_slope * t[i];
    if (std::abs(resid) > 0.5) {
      throw AmbiguousUnwrap("unwrapped series fails the straight-line "
                            "residual test; sampling is too sparse");
    }
  }

  UnwrapResult out;
  out.T = std::move(t);
  out.phase = std::move(best_y);
  out.sigma = std::move(sig);
  out.rss = best_rss;
  return out;
}

// ---------------------------------------------------------------------------
// Slope fit and gradient conversion
// ---------------------------------------------------------------------------

namespace {

struct WlsFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov;
  double max_std_residual = 0.0;
};

WlsFit wls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
           const Eigen::VectorXd& sigma) {
  const Eigen::Index n = x.rows();
  Eigen::VectorXd w(n);
  // Floor the weights at 1e-3 of the median positive sigma so no single
  // point can dominate the fit on claimed precision alone; with all-zero
  // sigmas (noiseless input) the fit degrades to ordinary least squares.
  std::vector<double> positive_sigmas;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sigma(i) > 0.0) positive_sigmas.push_back(sigma(i));
  }
  double floor = 1.0;
  if (!positive_sigmas.empty()) {
    std::nth_element(positive_sigmas.begin(),
                     positive_sigmas.begin() + positive_sigmas.size() / 2,
                     positive_sigmas.end());
    floor = std::max(1e-3 * positive_sigmas[positive_sigmas.size() / 2], 1e-300);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = std::max(sigma(i), floor);
    w(i) = 1.0 / (s * s);
  }
  Eigen::MatrixXd xtwx = x.transpose() * w.asDiagonal() * x;
  Eigen::VectorXd xtwy = x.transpose() * w.asDiagonal() * y;
  WlsFit fit;
  fit.beta = xtwx.ldlt().solve(xtwy);
  fit.cov = xtwx.inverse();
  const Eigen::VectorXd resid = y - x * fit.beta;
  for (Eigen::Index i = 0; i < n; ++i) {
    fit.max_std_residual =
        std::max(fit.max_std_residual, std::abs(resid(i)) * std::sqrt(w(i)));
  }
  return fit;
}

Eigen::MatrixXd design_matrix(std::span<const double> t, bool cubic) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(t.size()), cubic ? 3 : 2);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = 1.0;
    x(r, 1) = t[i];
    if (cubic) x(r, 2) = t[i] * t[i] * t[i];
  }
  return x;
}

}  // namespace

LineFit fit_phase_slope(const UnwrapResult& series, bool force_cubic) {
  const std::size_t n = series.T.size();
  if (n < 3) {
    throw ConfigError("slope fit needs at least 3 points");
  }
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  Eigen::VectorXd sig(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    y(static_cast<Eigen::Index>(i)) = series.phase[i];
    sig(static_cast<Eigen::Index>(i)) = series.sigma[i];
  }

  const WlsFit base = wls(design_matrix(series.T, false), y, sig);
  LineFit out;
  out.intercept = base.beta(0);
  out.slope = base.beta(1);
  out.slope_sigma_stat = std::sqrt(std::max(0.0, base.cov(1, 1)));
  out.max_std_residual = base.max_std_residual;

  const bool can_cubic = n >= 5;
  double systematic = 0.0;
  if (can_cubic) {
    const WlsFit ext = wls(design_matrix(series.T, true), y, sig);
    systematic = std::abs(ext.beta(1) - base.beta(1));
    const bool want_cubic = force_cubic || base.max_std_residual > 3.0;
    if (want_cubic) {
      out.used_cubic = true;
      out.intercept = ext.beta(0);
      out.slope = ext.beta(1);
      out.slope_sigma_stat = std::sqrt(std::max(0.0, ext.cov(1, 1)));
      out.cubic = ext.beta(2);
      out.cubic_sigma = std::sqrt(std::max(0.0, ext.cov(2, 2)));
    }
  }
  out.slope_sigma = std::hypot(out.slope_sigma_stat, systematic);
  return out;
}

GradientMeasurement fit_gradient(const UnwrapResult& series, double baseline_m,
                                 int bias_sign, bool force_cubic) {
  if (baseline_m <= 0.0) {
    throw ConfigError("baseline length must be positive");
  }
  GradientMeasurement m;
  m.fit = fit_phase_slope(series, force_cubic);
  const double conv = constants::gamma_rb87 * baseline_m;
  m.value = bias_sign * m.fit.slope / conv;
  m.sigma = m.fit.slope_sigma / conv;
  m.bias_sign = bias_sign;
  return m;
}

GradientMeasurement measure_gradient(const Scenario& sc, int threads) {
  const auto shots = simulate_shots(sc, threads);
  AnalysisOptions opts;
  opts.fit = fit_options(sc);
  opts.bootstrap_resamples = sc.bootstrap_resamples;
  opts.seed = sc.noise.seed;
  const auto points = analyze_shots(shots, opts, threads);

  std::vector<UnwrapInput> series;
  for (const auto& p : points) {
    if (!p.degenerate) {
      series.push_back({p.T, p.phase.abs_dphi, p.phase.sigma});
    }
  }
  if (series.size() < 3) {
    throw DegenerateConic("fewer than 3 usable interrogation times in sweep");
  }
  const int hint =
      sc.sign_hint != 0 ? sc.sign_hint : sign_hint_from_fringes(shots);
  const UnwrapResult unwrapped = unwrap(series, hint);

  GradientMeasurement m =
      fit_gradient(unwrapped, sc.baseline_m, bias_sign(sc));
  m.component = bias_component(sc);
  m.frame = sc.baseline_frame;
  if (sc.baseline_frame == "x") m.axis = 0;
  else if (sc.baseline_frame == "y") m.axis = 1;
  else if (sc.baseline_frame == "z") m.axis = 2;
  else m.axis = (sc.baseline_frame == "xp") ? 0 : 2;  // beam frame, in-plane
  return m;
}

std::pair<GradientMeasurement, GradientMeasurement> rotate_frame(
    const GradientMeasurement& along_u, const GradientMeasurement& along_v,
    double angle_u_deg, double angle_v_deg) {
  if (along_u.component != along_v.component) {
    throw ConfigError("rotate_frame needs the same field component");
  }
  const double au = angle_u_deg * kPi / 180.0;
  const double av = angle_v_deg * kPi / 180.0;
  const double det = std::sin(av - au);
  if (std::abs(det) < std::sin(5.0 * kPi / 180.0)) {
    throw SingularFrame("baseline directions are within 5 deg of parallel");
  }
  // [m_u; m_v] = [[cos au, sin au],[cos av, sin av]] [g_x; g_z]
  const double gx =
      (along_u.value * std::sin(av) - along_v.value * std::sin(au)) / det;
  const double gz =
      (along_v.value * std::cos(au) - along_u.value * std::cos(av)) / det;
  const double sx = std::hypot(along_u.sigma * std::sin(av),
                               along_v.sigma * std::sin(au)) / std::abs(det);
  const double sz = std::hypot(along_v.sigma * std::cos(au),
                               along_u.sigma * std::cos(av)) / std::abs(det);

  GradientMeasurement mx = along_u;
  mx.frame = "lab";
  mx.axis = 0;
  mx.value = gx;
  mx.sigma = sx;
  GradientMeasurement mz = along_v;
  mz.frame = "lab";
  mz.axis = 2;
  mz.value = gz;
  mz.sigma = sz;
  return {mx, mz};
}

// ---------------------------------------------------------------------------
// Completion / bearing / nulling
// ---------------------------------------------------------------------------

void InPlaneMeasurements::set(const GradientMeasurement& m) {
  if (m.component < 0 || m.component > 2 || (m.axis != 0 && m.axis != 2)) {
    throw ConfigError("in-plane measurement must be d(Bx|By|Bz)/d(x|z)");
  }
  slot[m.component][m.axis == 0 ? 0 : 1] = m;
}

const GradientMeasurement& InPlaneMeasurements::get(int component,
                                                    int axis) const {
  const auto& opt = slot[component][axis == 0 ? 0 : 1];
  if (!opt) {
    static const char* names = "xyz";
    throw MissingComponent(std::string("missing in-plane component dB_") +
                           names[component] + "/d" + (axis == 0 ? "x" : "z"));
  }
  return *opt;
}

GradientTensor complete_tensor(const InPlaneMeasurements& in_plane) {
  GradientTensor out;
  Mat3& g = out.raw;
  Mat3& s = out.sigma;
  for (int j = 0; j < 3; ++j) {
    const auto& mx = in_plane.get(j, 0);
    const auto& mz = in_plane.get(j, 2);
    g(j, 0) = mx.value;
    s(j, 0) = mx.sigma;
    g(j, 2) = mz.value;
    s(j, 2) = mz.sigma;
  }

  // Curl-free: dBx/dy = dBy/dx and dBz/dy = dBy/dz.
  g(0, 1) = g(1, 0);
  s(0, 1) = s(1, 0);
  g(2, 1) = g(1, 2);
  s(2, 1) = s(1, 2);
  // Divergence-free: dBy/dy closes the trace.
  g(1, 1) = -(g(0, 0) + g(2, 2));
  s(1, 1) = std::hypot(s(0, 0), s(2, 2));
  out.inferred[0][1] = out.inferred[1][1] = out.inferred[2][1] = true;

  out.asymmetry = std::abs(g(0, 2) - g(2, 0));

  out.symmetrized = g;
  const double avg = 0.5 * (g(0, 2) + g(2, 0));
  out.symmetrized(0, 2) = out.symmetrized(2, 0) = avg;
  return out;
}

namespace {

EigenDecomposition3 sorted_by_abs(const Mat3& g) {
  EigenDecomposition3 eig = jacobi_eigen3(g);
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(eig.values(a)) > std::abs(eig.values(b));
  });
  EigenDecomposition3 out;
  for (int k = 0; k < 3; ++k) {
    out.values(k) = eig.values(order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = eig.vectors.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

Vec3 orient_positive(const Vec3& v) {
  for (int k = 0; k < 3; ++k) {
    if (v(k) > 0.0) return v;
    if (v(k) < 0.0) return -v;
  }
  return v;
}

}  // namespace

BearingResult dipole_bearing(const Mat3& g, double degeneracy_tolerance,
                             double confidence_threshold) {
  const EigenDecomposition3 eig = sorted_by_abs(g);
  const double l1 = std::abs(eig.values(0));
  const double l2 = std::abs(eig.values(1));
  if (l1 <= 0.0 || (l1 - l2) <= degeneracy_tolerance * l1) {
    throw DegenerateEigenvalues(
        "largest-|eigenvalue| pair is degenerate; bearing undefined");
  }
  BearingResult out;
  out.eigenvalues = eig.values;
  out.eigenvectors = eig.vectors;
  out.direction = orient_positive(eig.vectors.col(0).normalized());
  out.separation = 1.0 - l2 / l1;
  out.reliable = out.separation >= confidence_threshold;
  return out;
}

NullingReport grad_nulling_advice(const Mat3& g) {
  const EigenDecomposition3 eig = sorted_by_abs(g);
  NullingReport rep;
  rep.eigenvalues = eig.values;
  rep.eigenaxes = eig.vectors;
  rep.eigenframe_corrections = -eig.values;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int k = 0; k < 3; ++k) {
    rep.grad_b_cardinal[static_cast<std::size_t>(k)] =
        (g * Vec3::Unit(k)).norm();
    rep.grad_b_eigen[static_cast<std::size_t>(k)] = std::abs(eig.values(k));
    lo = std::min({lo, rep.grad_b_cardinal[static_cast<std::size_t>(k)],
                   rep.grad_b_eigen[static_cast<std::size_t>(k)]});
    hi = std::max({hi, rep.grad_b_cardinal[static_cast<std::size_t>(k)],
                   rep.grad_b_eigen[static_cast<std::size_t>(k)]});
  }
  rep.anisotropy_ratio = lo > 0.0 ? hi / lo : (hi > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
  return rep;
}

// ---------------------------------------------------------------------------
// Co-magnetometer
// ---------------------------------------------------------------------------

ComagResult comagnetometer_diff(std::span<const Point2> points, double T,
                                int sign, int n_cycles, int n_resamples,
                                std::uint64_t seed, const FitOptions& opts) {
  if (T <= 0.0) {
    throw ConfigError("interrogation time must be positive");
  }
  const PhaseEstimate est = relative_phase(fit_conic(points, opts));
  const BootstrapResult boot =
      phase_uncertainty(points, n_resamples, seed, opts);
  ComagResult out;
  out.T = T;
  out.delta_phi = sign * est.abs_dphi + 2.0 * kPi * n_cycles;
  out.delta_phi_sigma = boot.sigma;
  out.bootstrap_discarded = boot.n_discarded;
  const double conv = constants::gamma_rb87 * T;
  out.delta_b = out.delta_phi / conv;
  out.delta_b_sigma = boot.sigma / conv;
  return out;
}

}  // namespace gradiometer
