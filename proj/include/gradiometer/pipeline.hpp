#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gradiometer/ellipse_fit.hpp"
#include "gradiometer/field_model.hpp"
#include "gradiometer/spin_sim.hpp"

namespace gradiometer {

// ---------------------------------------------------------------------------
// Scenario: one gradiometer configuration (scene, bias, baseline, sequence).
// ---------------------------------------------------------------------------

struct Scenario {
  FieldScene scene;                 // ambient sources, bias excluded
  Vec3 bias_axis = Vec3::UnitY();   // unit vector
  double bias_tesla = 37e-6;        // operating range ~30-60 uT

  // Baseline frame: "x"/"y"/"z" are lab axes; "xp"/"zp" are the beam axes in
  // the horizontal x-z plane at the configured angles from x-hat.
  std::string baseline_frame = "zp";
  double baseline_m = 840e-6;
  double beam_angle_xp_deg = 45.0;
  double beam_angle_zp_deg = -45.0;

  Vec3 center = Vec3::Zero();       // midpoint of the pair at release
  Vec3 gravity = Vec3(0.0, -9.81, 0.0);
  double pre_pulse_delay_s = 100e-6;

  std::vector<double> T_list;       // s, ascending
  std::vector<double> phi_list;     // rad
  NoiseModel noise;

  double omega_ref = 0.0;           // 0 = gamma |B| at the pair midpoint
  double pulse_area_error = 0.0;
  int sign_hint = 0;                // 0 = derive from short-T phase fringes
  int bootstrap_resamples = 300;
  bool refine_fit = false;
};

// M second-pulse phases uniformly covering [0, 2pi).
std::vector<double> uniform_phase_grid(int m);

Vec3 baseline_axis(const Scenario& sc);
FieldScene scene_with_bias(const Scenario& sc);
std::pair<CloudTrajectory, CloudTrajectory> cloud_trajectories(
    const Scenario& sc);
int bias_component(const Scenario& sc);  // index of dominant |bias| entry
int bias_sign(const Scenario& sc);
double resolve_omega_ref(const Scenario& sc);
FitOptions fit_options(const Scenario& sc);

// ---------------------------------------------------------------------------
// Shot generation and per-T ellipse analysis
// ---------------------------------------------------------------------------

// The full T x phi grid; shot (ti, pi) uses an RNG stream derived from
// (noise.seed, ti, pi), so results are identical for any execution order.
std::vector<Shot> simulate_shots(const Scenario& sc, int threads = 1);

struct SweepPoint {
  double T = 0.0;
  PhaseEstimate phase;
  bool degenerate = false;
  std::string note;          // failure reason when degenerate
  int bootstrap_discarded = 0;
};

struct AnalysisOptions {
  FitOptions fit;
  int bootstrap_resamples = 300;
  std::uint64_t seed = 0;
};

// Groups shots by T (ascending), fits one ellipse per group and bootstraps
// its uncertainty. Degenerate groups are flagged, never dropped.
std::vector<SweepPoint> analyze_shots(std::span<const Shot> shots,
                                      const AnalysisOptions& opts,
                                      int threads = 1);

std::vector<SweepPoint> sweep(const Scenario& sc, int threads = 1);

// Quadrature fringe estimator F_z(phi) ~ contrast * cos(phi - phase).
struct FringeFit {
  double contrast = 0.0;
  double phase = 0.0;
};
FringeFit fit_phase_fringe(std::span<const double> phi,
                           std::span<const double> fz);

// Sign of the differential phase from phase-domain fringes at the shortest T
// (+1/-1). Valid while |dphi| at that T is below pi.
int sign_hint_from_fringes(std::span<const Shot> shots);

// ---------------------------------------------------------------------------
// Unwrapping and gradient extraction
// ---------------------------------------------------------------------------

struct UnwrapInput {
  double T = 0.0;
  double abs_dphi = 0.0;  // rad, in [0, pi]
  double sigma = 0.0;
};

struct UnwrapResult {
  std::vector<double> T;
  std::vector<double> phase;  // branch-resolved dphi
  std::vector<double> sigma;
  double rss = 0.0;           // weighted residual of the line consistency fit
};

// Resolves the +-|dphi| + 2 pi n branch per point against a straight-line
// model, seeded by sign_hint at the smallest T (which must lie within the
// first half cycle). Throws AmbiguousUnwrap when a competing assignment fits
// within a factor 2 of the best residual.
UnwrapResult unwrap(std::span<const UnwrapInput> series, int sign_hint);

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;         // rad/s
  double slope_sigma = 0.0;   // statistical + model-dependence systematic
  double slope_sigma_stat = 0.0;
  double cubic = 0.0;         // rad/s^3 when the T^3 term is fitted
  double cubic_sigma = 0.0;
  bool used_cubic = false;
  double max_std_residual = 0.0;
};

// Weighted least squares of phase(T) on {1, T}, extended with a T^3 basis
// term when standardized residuals exceed 3 (freefall curvature systematic).
LineFit fit_phase_slope(const UnwrapResult& series, bool force_cubic = false);

struct GradientMeasurement {
  int component = 0;       // j of dB_j / dx_i
  int axis = 0;            // i
  std::string frame = "lab";
  double value = 0.0;      // tesla/m
  double sigma = 0.0;      // tesla/m
  int bias_sign = 1;
  LineFit fit;
};

// dB_j/dx_i = sign(B_j) * slope / (gamma * baseline).
GradientMeasurement fit_gradient(const UnwrapResult& series, double baseline_m,
                                 int bias_sign, bool force_cubic = false);

// Full single-component measurement: sweep, sign hint, unwrap, slope fit.
GradientMeasurement measure_gradient(const Scenario& sc, int threads = 1);

// Directional derivatives measured along two in-plane baselines (angles from
// x-hat toward z-hat, degrees) mapped to derivatives along x and z. Throws
// SingularFrame when the baselines are within 5 degrees of parallel.
std::pair<GradientMeasurement, GradientMeasurement> rotate_frame(
    const GradientMeasurement& along_u, const GradientMeasurement& along_v,
    double angle_u_deg, double angle_v_deg);

// ---------------------------------------------------------------------------
// Maxwell completion, source bearing, nulling advice
// ---------------------------------------------------------------------------

struct InPlaneMeasurements {
  std::optional<GradientMeasurement> slot[3][2];  // [component][0: d/dx, 1: d/dz]

  void set(const GradientMeasurement& m);
  const GradientMeasurement& get(int component, int axis) const;
};

struct GradientTensor {
  Mat3 raw = Mat3::Zero();          // measured entries plus inferred column y
  Mat3 symmetrized = Mat3::Zero();  // measured symmetric pair averaged
  Mat3 sigma = Mat3::Zero();
  std::array<std::array<bool, 3>, 3> inferred{};
  double asymmetry = 0.0;           // max |G_ij - G_ji| over measured pairs
};

// Fills dB_x/dy := dB_y/dx, dB_z/dy := dB_y/dz (curl-free) and
// dB_y/dy := -dB_x/dx - dB_z/dz (divergence-free).
GradientTensor complete_tensor(const InPlaneMeasurements& in_plane);

// Separation threshold above which a point-dipole bearing is within 5 deg
// (traceless symmetric tensors have separation <= 0.5, reached only by a
// uniaxial tensor).
inline constexpr double kBearingConfidenceSeparation = 0.495;

struct BearingResult {
  Vec3 direction = Vec3::UnitX();  // sign-disambiguated toward +x
  Vec3 eigenvalues = Vec3::Zero(); // sorted by |value| descending
  Mat3 eigenvectors = Mat3::Identity();
  double separation = 0.0;         // 1 - |lambda2/lambda1|
  bool reliable = false;
};

// Largest-|eigenvalue| eigenvector of the symmetric tensor. Throws
// DegenerateEigenvalues below degeneracy_tolerance.
BearingResult dipole_bearing(
    const Mat3& g, double degeneracy_tolerance = 1e-6,
    double confidence_threshold = kBearingConfidenceSeparation);

struct NullingReport {
  Vec3 eigenvalues = Vec3::Zero();      // sorted by |value| descending
  Mat3 eigenaxes = Mat3::Identity();    // columns
  Vec3 eigenframe_corrections = Vec3::Zero();  // diagonal gradients to apply
  std::array<double, 3> grad_b_cardinal{};     // |grad|B|| bias along x,y,z
  std::array<double, 3> grad_b_eigen{};        // bias along each eigenaxis
  double anisotropy_ratio = 1.0;  // max/min of |grad|B|| over the directions
};

// Dominant-bias approximation: |grad|B|| = ||G u|| for bias along unit u
// (identical for -u). Zeroing G needs diagonal gradients -lambda_k along the
// eigenaxes.
NullingReport grad_nulling_advice(const Mat3& g);

// ---------------------------------------------------------------------------
// Co-magnetometer mode
// ---------------------------------------------------------------------------

struct ComagResult {
  double delta_phi = 0.0;        // sign * |dphi| + 2 pi n_cycles
  double delta_phi_sigma = 0.0;
  double delta_b = 0.0;          // tesla
  double delta_b_sigma = 0.0;
  double T = 0.0;
  int bootstrap_discarded = 0;
};

// Differential field from a single ellipse at fixed T; the cycle count and
// sign must already be known from a prior T sweep.
ComagResult comagnetometer_diff(std::span<const Point2> points, double T,
                                int sign, int n_cycles, int n_resamples,
                                std::uint64_t seed,
                                const FitOptions& opts = {});

}  // namespace gradiometer
