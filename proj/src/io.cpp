#include "gradiometer/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gradiometer/constants.hpp"
#include "gradiometer/errors.hpp"

namespace gradiometer {

namespace {

constexpr double kUT = 1e-6;        // uT -> T
constexpr double kNT = 1e-9;        // nT -> T
constexpr double kNTmm = 1e-6;      // nT/mm -> T/m
constexpr double kUM = 1e-6;        // um -> m
constexpr double kMS = 1e-3;        // ms -> s
constexpr double kUS = 1e-6;        // us -> s

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Vec3 parse_axis(const json& j, const std::string& field) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    const double sign = s.starts_with("-") ? -1.0 : 1.0;
    const std::string name = s.starts_with("-") || s.starts_with("+")
                                 ? s.substr(1)
                                 : s;
    if (name == "x") return sign * Vec3::UnitX();
    if (name == "y") return sign * Vec3::UnitY();
    if (name == "z") return sign * Vec3::UnitZ();
    throw ConfigError(field + ": unknown axis name '" + s + "'");
  }
  if (j.is_array() && j.size() == 3) {
    Vec3 v(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
    if (v.norm() == 0.0) throw ConfigError(field + ": zero axis vector");
    return v.normalized();
  }
  throw ConfigError(field + ": expected axis name or 3-vector");
}

Vec3 parse_vec3(const json& j, const std::string& field, double scale) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(field + ": expected a 3-vector");
  }
  return Vec3(j[0].get<double>() * scale, j[1].get<double>() * scale,
              j[2].get<double>() * scale);
}

Mat3 parse_mat3(const json& j, const std::string& field, double scale) {
  if (!j.is_array() || j.size() != 3) {
    throw ConfigError(field + ": expected a 3x3 matrix");
  }
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != 3) {
      throw ConfigError(field + ": expected a 3x3 matrix");
    }
    for (int c = 0; c < 3; ++c) {
      m(r, c) = row[static_cast<std::size_t>(c)].get<double>() * scale;
    }
  }
  return m;
}

FieldSource parse_source(const json& j, std::size_t index) {
  const std::string where = "sources[" + std::to_string(index) + "]";
  if (!j.contains("type")) throw ConfigError(where + ": missing 'type'");
  const std::string type = j.at("type").get<std::string>();
  try {
    if (type == "uniform") {
      return UniformField{parse_vec3(j.at("b_uT"), where + ".b_uT", kUT)};
    }
    if (type == "linear_gradient") {
      const Vec3 b0 = j.contains("b0_uT")
                          ? parse_vec3(j.at("b0_uT"), where + ".b0_uT", kUT)
                          : Vec3::Zero();
      const Mat3 g =
          parse_mat3(j.at("g_nT_per_mm"), where + ".g_nT_per_mm", kNTmm);
      const Vec3 origin =
          j.contains("origin_m")
              ? parse_vec3(j.at("origin_m"), where + ".origin_m", 1.0)
              : Vec3::Zero();
      const bool maxwell = j.value("maxwell_valid", true);
      return LinearGradientField::make(b0, g, origin, maxwell);
    }
    if (type == "dipole") {
      return DipoleField{
          parse_vec3(j.at("moment_Am2"), where + ".moment_Am2", 1.0),
          parse_vec3(j.at("position_m"), where + ".position_m", 1.0)};
    }
    if (type == "coil_loop") {
      return CoilLoop{parse_vec3(j.at("center_m"), where + ".center_m", 1.0),
                      parse_axis(j.at("normal"), where + ".normal"),
                      j.at("radius_m").get<double>(),
                      j.at("current_A").get<double>(),
                      j.value("n_segments", 360)};
    }
    if (type == "coil_pair") {
      return make_coil_pair(
          parse_vec3(j.at("center_m"), where + ".center_m", 1.0),
          parse_axis(j.at("axis"), where + ".axis"),
          j.at("radius_m").get<double>(), j.at("separation_m").get<double>(),
          j.at("current_A").get<double>(),
          j.value("opposite_currents", false), j.value("n_segments", 360));
    }
  } catch (const json::exception& ex) {
    throw ConfigError(where + ": " + ex.what());
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(where + ": " + ex.what());
  }
  throw ConfigError(where + ": unknown source type '" + type + "'");
}

json source_to_json(const FieldSource& src) {
  json j;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, UniformField>) {
          j["type"] = "uniform";
          j["b_uT"] = {s.b0(0) / kUT, s.b0(1) / kUT, s.b0(2) / kUT};
        } else if constexpr (std::is_same_v<T, LinearGradientField>) {
          j["type"] = "linear_gradient";
          j["b0_uT"] = {s.b0(0) / kUT, s.b0(1) / kUT, s.b0(2) / kUT};
          json rows = json::array();
          for (int r = 0; r < 3; ++r) {
            rows.push_back({s.g(r, 0) / kNTmm, s.g(r, 1) / kNTmm,
                            s.g(r, 2) / kNTmm});
          }
          j["g_nT_per_mm"] = rows;
          j["origin_m"] = {s.origin(0), s.origin(1), s.origin(2)};
          j["maxwell_valid"] = s.maxwell_valid;
        } else if constexpr (std::is_same_v<T, DipoleField>) {
          j["type"] = "dipole";
          j["moment_Am2"] = {s.moment(0), s.moment(1), s.moment(2)};
          j["position_m"] = {s.position(0), s.position(1), s.position(2)};
        } else if constexpr (std::is_same_v<T, CoilLoop>) {
          j["type"] = "coil_loop";
          j["center_m"] = {s.center(0), s.center(1), s.center(2)};
          j["normal"] = {s.normal(0), s.normal(1), s.normal(2)};
          j["radius_m"] = s.radius;
          j["current_A"] = s.current;
          j["n_segments"] = s.n_segments;
        } else {
          j["type"] = "coil_pair_explicit";
          j["first_center_m"] = {s.first.center(0), s.first.center(1),
                                 s.first.center(2)};
          j["second_center_m"] = {s.second.center(0), s.second.center(1),
                                  s.second.center(2)};
          j["normal"] = {s.first.normal(0), s.first.normal(1),
                         s.first.normal(2)};
          j["radius_m"] = s.first.radius;
          j["first_current_A"] = s.first.current;
          j["second_current_A"] = s.second.current;
          j["n_segments"] = s.first.n_segments;
        }
      },
      src);
  return j;
}

}  // namespace

Scenario parse_scenario(const json& j) {
  Scenario sc;
  try {
    if (!j.contains("bias")) {
      throw ConfigError("scenario: missing required field 'bias'");
    }
    const json& bias = j.at("bias");
    if (!bias.contains("magnitude_uT")) {
      throw ConfigError("scenario: missing 'bias.magnitude_uT'");
    }
    sc.bias_axis = parse_axis(bias.at("axis"), "bias.axis");
    sc.bias_tesla = bias.at("magnitude_uT").get<double>() * kUT;
    if (sc.bias_tesla <= 0.0 || sc.bias_tesla > 1e-3) {
      throw ConfigError("bias.magnitude_uT must be in (0, 1000]");
    }

    if (j.contains("sources")) {
      std::size_t k = 0;
      for (const auto& src : j.at("sources")) {
        sc.scene.sources.push_back(parse_source(src, k++));
      }
    }
    sc.scene.common_noise_sigma = j.value("common_noise_nT", 0.0) * kNT;
    if (sc.scene.common_noise_sigma < 0.0) {
      throw ConfigError("common_noise_nT must be >= 0");
    }

    const json& base = j.at("baseline");
    sc.baseline_frame = base.value("frame", std::string("zp"));
    sc.baseline_m = base.at("length_um").get<double>() * kUM;
    if (sc.baseline_m <= 0.0) {
      throw ConfigError("baseline.length_um must be positive");
    }
    sc.beam_angle_xp_deg = base.value("beam_angle_xp_deg", 45.0);
    sc.beam_angle_zp_deg = base.value("beam_angle_zp_deg", -45.0);

    if (j.contains("clouds")) {
      const json& clouds = j.at("clouds");
      if (clouds.contains("center_m")) {
        sc.center = parse_vec3(clouds.at("center_m"), "clouds.center_m", 1.0);
      }
      sc.noise.n_atoms = clouds.value("n_atoms", 50000L);
    }
    if (j.contains("gravity_mps2")) {
      sc.gravity = parse_vec3(j.at("gravity_mps2"), "gravity_mps2", 1.0);
    }

    const json& seq = j.at("sequence");
    for (const auto& t : seq.at("T_ms")) {
      sc.T_list.push_back(t.get<double>() * kMS);
    }
    if (seq.contains("phi_deg")) {
      for (const auto& p : seq.at("phi_deg")) {
        sc.phi_list.push_back(p.get<double>() * std::numbers::pi / 180.0);
      }
    } else {
      sc.phi_list = uniform_phase_grid(seq.value("n_phi", 24));
    }
    sc.pre_pulse_delay_s = seq.value("pre_pulse_delay_us", 100.0) * kUS;
    sc.pulse_area_error = seq.value("pulse_area_error", 0.0);

    if (j.contains("noise")) {
      const json& noise = j.at("noise");
      sc.noise.projection_noise = noise.value("projection_noise", true);
      sc.noise.kappa = noise.value("kappa", 3.0);
      if (sc.noise.projection_noise && sc.noise.kappa < 1.0) {
        throw ConfigError("noise.kappa must be >= 1 with projection noise on");
      }
    }
    sc.noise.seed = j.value("seed", 0ULL);

    if (j.contains("analysis")) {
      const json& an = j.at("analysis");
      sc.bootstrap_resamples = an.value("bootstrap_resamples", 300);
      sc.sign_hint = an.value("sign_hint", 0);
      sc.refine_fit = an.value("refine_fit", false);
      sc.omega_ref = an.value("omega_ref_rad_per_s", 0.0);
    }
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("scenario: ") + ex.what());
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw ConfigError("scenario " + path.string() + ": " + ex.what());
  }
  return parse_scenario(j);
}

json scenario_to_json(const Scenario& sc) {
  json j;
  j["seed"] = sc.noise.seed;
  j["bias"] = {{"axis", {sc.bias_axis(0), sc.bias_axis(1), sc.bias_axis(2)}},
               {"magnitude_uT", sc.bias_tesla / kUT}};
  json sources = json::array();
  for (const auto& s : sc.scene.sources) sources.push_back(source_to_json(s));
  j["sources"] = sources;
  j["common_noise_nT"] = sc.scene.common_noise_sigma / kNT;
  j["baseline"] = {{"frame", sc.baseline_frame},
                   {"length_um", sc.baseline_m / kUM},
                   {"beam_angle_xp_deg", sc.beam_angle_xp_deg},
                   {"beam_angle_zp_deg", sc.beam_angle_zp_deg}};
  j["clouds"] = {{"center_m", {sc.center(0), sc.center(1), sc.center(2)}},
                 {"n_atoms", sc.noise.n_atoms}};
  j["gravity_mps2"] = {sc.gravity(0), sc.gravity(1), sc.gravity(2)};
  json t_ms = json::array();
  for (double t : sc.T_list) t_ms.push_back(t / kMS);
  json phi_deg = json::array();
  for (double p : sc.phi_list) phi_deg.push_back(p * 180.0 / std::numbers::pi);
  j["sequence"] = {{"T_ms", t_ms},
                   {"phi_deg", phi_deg},
                   {"pre_pulse_delay_us", sc.pre_pulse_delay_s / kUS},
                   {"pulse_area_error", sc.pulse_area_error}};
  j["noise"] = {{"projection_noise", sc.noise.projection_noise},
                {"kappa", sc.noise.kappa}};
  j["analysis"] = {{"bootstrap_resamples", sc.bootstrap_resamples},
                   {"sign_hint", sc.sign_hint},
                   {"refine_fit", sc.refine_fit},
                   {"omega_ref_rad_per_s", sc.omega_ref}};
  return j;
}

std::uint64_t config_hash(const json& canonical) {
  const std::string s = canonical.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string meta_header(const FileMeta& meta) {
  char buf[80];
  std::snprintf(buf, sizeof(buf), "# seed=%llu\n# config=%016llx\n",
                static_cast<unsigned long long>(meta.seed),
                static_cast<unsigned long long>(meta.config));
  return buf;
}

}  // namespace

std::string shot_table_csv(std::span<const Shot> shots, const FileMeta& meta) {
  std::ostringstream out;
  out << meta_header(meta);
  out << "shot_id,T_s,phi_rad,N_m1_c1,N_0_c1,N_p1_c1,N_m1_c2,N_0_c2,N_p1_c2,"
         "Fz_c1,Fz_c2\n";
  std::size_t id = 0;
  for (const Shot& s : shots) {
    out << id++ << ',' << fmt_double(s.T) << ',' << fmt_double(s.phi);
    for (double c : s.cloud1.counts) out << ',' << fmt_double(c);
    for (double c : s.cloud2.counts) out << ',' << fmt_double(c);
    out << ',' << fmt_double(s.cloud1.fz) << ',' << fmt_double(s.cloud2.fz)
        << '\n';
  }
  return out.str();
}

void write_shot_table(const std::filesystem::path& path,
                      std::span<const Shot> shots, const FileMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << shot_table_csv(shots, meta);
}

std::vector<Shot> read_shot_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open shot table " + path.string());
  std::vector<Shot> shots;
  std::string line;
  bool header_seen = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    std::istringstream ss(line);
    std::string tok;
    std::vector<double> v;
    while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
    if (v.size() != 11) {
      throw IoError(path.string() + ":" + std::to_string(lineno) +
                    ": expected 11 columns in shot table");
    }
    Shot s;
    s.T = v[1];
    s.phi = v[2];
    s.cloud1.counts = {v[3], v[4], v[5]};
    s.cloud2.counts = {v[6], v[7], v[8]};
    s.cloud1.fz = v[9];
    s.cloud2.fz = v[10];
    shots.push_back(s);
  }
  return shots;
}

std::string phase_table_csv(std::span<const SweepPoint> points,
                            const FileMeta& meta) {
  std::ostringstream out;
  out << meta_header(meta);
  out << "T_s,abs_dphi_rad,sigma_rad,n_points,degenerate,bootstrap_discarded\n";
  for (const SweepPoint& p : points) {
    out << fmt_double(p.T) << ',';
    if (p.degenerate) {
      out << "nan,nan," << 0;
    } else {
      out << fmt_double(p.phase.abs_dphi) << ',' << fmt_double(p.phase.sigma)
          << ',' << p.phase.n_points;
    }
    out << ',' << (p.degenerate ? 1 : 0) << ',' << p.bootstrap_discarded
        << '\n';
  }
  return out.str();
}

void write_phase_table(const std::filesystem::path& path,
                       std::span<const SweepPoint> points,
                       const FileMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << phase_table_csv(points, meta);
}

json shot_table_json(std::span<const Shot> shots, const FileMeta& meta) {
  json j;
  j["meta"] = {{"seed", meta.seed}, {"config", meta.config}};
  json rows = json::array();
  std::size_t id = 0;
  for (const Shot& s : shots) {
    rows.push_back({{"shot_id", id++},
                    {"T_s", s.T},
                    {"phi_rad", s.phi},
                    {"counts_c1", {s.cloud1.counts[0], s.cloud1.counts[1],
                                   s.cloud1.counts[2]}},
                    {"counts_c2", {s.cloud2.counts[0], s.cloud2.counts[1],
                                   s.cloud2.counts[2]}},
                    {"Fz_c1", s.cloud1.fz},
                    {"Fz_c2", s.cloud2.fz}});
  }
  j["shots"] = rows;
  return j;
}

json phase_table_json(std::span<const SweepPoint> points,
                      const FileMeta& meta) {
  json j;
  j["meta"] = {{"seed", meta.seed}, {"config", meta.config}};
  json rows = json::array();
  for (const SweepPoint& p : points) {
    json row = {{"T_s", p.T}, {"degenerate", p.degenerate}};
    if (p.degenerate) {
      row["note"] = p.note;
    } else {
      row["abs_dphi_rad"] = p.phase.abs_dphi;
      row["sigma_rad"] = p.phase.sigma;
      row["n_points"] = p.phase.n_points;
      row["bootstrap_discarded"] = p.bootstrap_discarded;
    }
    rows.push_back(row);
  }
  j["phases"] = rows;
  return j;
}

namespace {

json mat3_json(const Mat3& m, double scale) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) {
    rows.push_back({m(r, 0) * scale, m(r, 1) * scale, m(r, 2) * scale});
  }
  return rows;
}

}  // namespace

json tensor_report(const GradientTensor& tensor, const BearingResult& bearing,
                   const NullingReport& nulling, const FileMeta& meta) {
  json j;
  j["meta"] = {{"seed", meta.seed},
               {"config", meta.config},
               {"units", {{"tensor", "nT/mm and T/m"},
                          {"eigenvalues", "nT/mm"}}}};
  j["tensor"] = {
      {"raw_T_per_m", mat3_json(tensor.raw, 1.0)},
      {"raw_nT_per_mm", mat3_json(tensor.raw, 1.0 / kNTmm)},
      {"symmetrized_nT_per_mm", mat3_json(tensor.symmetrized, 1.0 / kNTmm)},
      {"sigma_nT_per_mm", mat3_json(tensor.sigma, 1.0 / kNTmm)},
      {"asymmetry_nT_per_mm", tensor.asymmetry / kNTmm},
      {"trace_T_per_m", tensor.raw.trace()}};
  json mask = json::array();
  for (const auto& row : tensor.inferred) {
    mask.push_back({row[0], row[1], row[2]});
  }
  j["tensor"]["inferred_mask"] = mask;
  j["bearing"] = {
      {"direction", {bearing.direction(0), bearing.direction(1),
                     bearing.direction(2)}},
      {"eigenvalues_nT_per_mm",
       {bearing.eigenvalues(0) / kNTmm, bearing.eigenvalues(1) / kNTmm,
        bearing.eigenvalues(2) / kNTmm}},
      {"separation", bearing.separation},
      {"reliable", bearing.reliable}};
  j["nulling"] = {
      {"eigenaxes_columns", mat3_json(nulling.eigenaxes, 1.0)},
      {"eigenframe_corrections_nT_per_mm",
       {nulling.eigenframe_corrections(0) / kNTmm,
        nulling.eigenframe_corrections(1) / kNTmm,
        nulling.eigenframe_corrections(2) / kNTmm}},
      {"grad_B_bias_xyz_nT_per_mm",
       {nulling.grad_b_cardinal[0] / kNTmm, nulling.grad_b_cardinal[1] / kNTmm,
        nulling.grad_b_cardinal[2] / kNTmm}},
      {"grad_B_bias_eigen_nT_per_mm",
       {nulling.grad_b_eigen[0] / kNTmm, nulling.grad_b_eigen[1] / kNTmm,
        nulling.grad_b_eigen[2] / kNTmm}},
      {"anisotropy_ratio", nulling.anisotropy_ratio}};
  return j;
}

json sensitivity_report(const SensitivityParams& p, const FileMeta& meta) {
  validate(p);
  const double db = sql_sensitivity(p);
  const double spatio = spatiotemporal(db, p.volume);
  const double eps = energy_resolution_hbar(db, p.T, p.volume);
  json j;
  j["meta"] = {{"seed", meta.seed}, {"config", meta.config}};
  j["inputs"] = {{"n_atoms_total", p.n_atoms},
                 {"T_s", p.T},
                 {"t_shot_s", p.t_shot},
                 {"m_shots", p.m_shots},
                 {"duty_cycle", p.duty()},
                 {"t_int_s", p.t_int()},
                 {"kappa", p.kappa},
                 {"volume_m3", p.volume},
                 {"gamma_rad_per_s_per_T", p.gamma}};
  j["field_sensitivity"] = {{"T_per_rtHz", db}, {"pT_per_rtHz", db * 1e12}};
  j["spatiotemporal"] = {{"T_cm32_per_rtHz", spatio},
                         {"fT_cm32_per_rtHz", spatio * 1e15}};
  j["energy_resolution"] = {
      {"hbar_units", eps},
      {"convention",
       "eps = (dB sqrt(T_int))^2 V / (2 mu0 hbar); the bandwidth-normalized "
       "sensitivity already carries the interrogation-time factor"}};
  return j;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

InPlaneMeasurements parse_measurements(const json& j) {
  if (!j.contains("measurements")) {
    throw ConfigError("measurement file: missing 'measurements' array");
  }
  InPlaneMeasurements in_plane;
  const std::string comps = "xyz";
  for (const auto& m : j.at("measurements")) {
    GradientMeasurement gm;
    const std::string comp = m.at("component").get<std::string>();
    const std::string axis = m.at("axis").get<std::string>();
    const auto ci = comps.find(comp);
    const auto ai = comps.find(axis);
    if (ci == std::string::npos || ai == std::string::npos) {
      throw ConfigError("measurement component/axis must be x, y or z");
    }
    gm.component = static_cast<int>(ci);
    gm.axis = static_cast<int>(ai);
    gm.value = m.at("value_nT_per_mm").get<double>() * kNTmm;
    gm.sigma = m.value("sigma_nT_per_mm", 0.0) * kNTmm;
    gm.frame = m.value("frame", std::string("lab"));
    in_plane.set(gm);
  }
  return in_plane;
}

}  // namespace gradiometer
