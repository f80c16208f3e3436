#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "gradiometer/acceptance.hpp"
#include "gradiometer/errors.hpp"
#include "gradiometer/io.hpp"
#include "gradiometer/pipeline.hpp"
#include "gradiometer/sensitivity.hpp"

namespace fs = std::filesystem;
using namespace gradiometer;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDegenerate = 2;
constexpr int kExitIo = 3;

struct CommonArgs {
  std::string scenario_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
  int threads = 1;
};

Scenario load_with_overrides(const CommonArgs& args) {
  Scenario sc = load_scenario(args.scenario_path);
  if (args.seed) sc.noise.seed = *args.seed;
  return sc;
}

FileMeta meta_for(const Scenario& sc) {
  return FileMeta{sc.noise.seed, config_hash(scenario_to_json(sc))};
}

int cmd_simulate(const CommonArgs& args) {
  const Scenario sc = load_with_overrides(args);
  const auto shots = simulate_shots(sc, args.threads);
  fs::create_directories(args.out_dir);
  fs::path out = fs::path(args.out_dir) / "shots.csv";
  if (args.format == "json") {
    out = fs::path(args.out_dir) / "shots.json";
    write_json(out, shot_table_json(shots, meta_for(sc)));
  } else {
    write_shot_table(out, shots, meta_for(sc));
  }
  std::cout << "wrote " << out.string() << " (" << shots.size() << " shots)\n";
  return kExitOk;
}

int cmd_fit_ellipse(const CommonArgs& args, const std::string& input) {
  const auto shots = read_shot_table(input);
  AnalysisOptions opts;
  FileMeta meta;
  if (!args.scenario_path.empty()) {
    const Scenario sc = load_with_overrides(args);
    opts.fit = fit_options(sc);
    opts.bootstrap_resamples = sc.bootstrap_resamples;
    opts.seed = sc.noise.seed;
    meta = meta_for(sc);
  }
  if (args.seed) opts.seed = meta.seed = *args.seed;
  const auto points = analyze_shots(shots, opts, args.threads);
  fs::create_directories(args.out_dir);
  fs::path out = fs::path(args.out_dir) / "phases.csv";
  if (args.format == "json") {
    out = fs::path(args.out_dir) / "phases.json";
    write_json(out, phase_table_json(points, meta));
  } else {
    write_phase_table(out, points, meta);
  }
  int degenerate = 0;
  for (const auto& p : points) degenerate += p.degenerate ? 1 : 0;
  std::cout << "wrote " << out.string() << " (" << points.size()
            << " interrogation times, " << degenerate << " degenerate)\n";
  return degenerate == static_cast<int>(points.size()) && !points.empty()
             ? kExitDegenerate
             : kExitOk;
}

// Tensor job file: either direct in-plane measurements, or six scenario runs
// (bias x/y/z crossed with baselines x'/z') to simulate and analyze.
int cmd_tensor(const CommonArgs& args, const std::string& job_path) {
  std::ifstream in(job_path);
  if (!in) throw IoError("cannot open tensor job " + job_path);
  json job;
  in >> job;

  InPlaneMeasurements in_plane;
  std::uint64_t seed = args.seed.value_or(job.value("seed", 0ULL));
  if (job.contains("measurements")) {
    in_plane = parse_measurements(job);
  } else if (job.contains("runs")) {
    // each run: a scenario whose bias axis fixes the component and whose
    // baseline frame fixes the in-plane derivative direction
    struct Beam {
      std::optional<GradientMeasurement> m;
      double angle_deg = 0.0;
    };
    Beam beams[3][2];
    for (const auto& run : job.at("runs")) {
      Scenario sc = parse_scenario(run.at("scenario"));
      if (args.seed) sc.noise.seed = *args.seed;
      const GradientMeasurement m = measure_gradient(sc, args.threads);
      const int slot = sc.baseline_frame == "xp" ? 0
                       : sc.baseline_frame == "zp"
                           ? 1
                           : (m.axis == 0 ? 0 : 1);
      beams[m.component][slot].m = m;
      beams[m.component][slot].angle_deg =
          sc.baseline_frame == "xp"   ? sc.beam_angle_xp_deg
          : sc.baseline_frame == "zp" ? sc.beam_angle_zp_deg
          : (m.axis == 0 ? 0.0 : 90.0);
    }
    for (int j = 0; j < 3; ++j) {
      if (!beams[j][0].m || !beams[j][1].m) {
        throw MissingComponent("tensor job is missing runs for component " +
                               std::string(1, "xyz"[j]));
      }
      const auto [mx, mz] =
          rotate_frame(*beams[j][0].m, *beams[j][1].m, beams[j][0].angle_deg,
                       beams[j][1].angle_deg);
      in_plane.set(mx);
      in_plane.set(mz);
    }
  } else {
    throw ConfigError("tensor job needs 'measurements' or 'runs'");
  }

  const GradientTensor tensor = complete_tensor(in_plane);
  const BearingResult bearing = dipole_bearing(tensor.symmetrized);
  const NullingReport nulling = grad_nulling_advice(tensor.symmetrized);
  fs::create_directories(args.out_dir);
  const fs::path out = fs::path(args.out_dir) / "tensor.json";
  write_json(out, tensor_report(tensor, bearing, nulling,
                                FileMeta{seed, config_hash(job)}));
  std::cout << "wrote " << out.string() << "\n";
  return kExitOk;
}

int cmd_localize(const CommonArgs& args, const std::string& tensor_path) {
  std::ifstream in(tensor_path);
  if (!in) throw IoError("cannot open tensor report " + tensor_path);
  json j;
  in >> j;
  Mat3 g;
  if (j.contains("tensor") && j.at("tensor").contains("symmetrized_nT_per_mm")) {
    const auto& rows = j.at("tensor").at("symmetrized_nT_per_mm");
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        g(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]
                      .get<double>() * 1e-6;
  } else if (j.contains("tensor_nT_per_mm")) {
    const auto& rows = j.at("tensor_nT_per_mm");
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        g(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]
                      .get<double>() * 1e-6;
  } else {
    throw ConfigError("localize input needs a tensor report or a raw "
                      "'tensor_nT_per_mm' matrix");
  }
  const BearingResult bearing = dipole_bearing(0.5 * (g + g.transpose()));
  const NullingReport nulling = grad_nulling_advice(0.5 * (g + g.transpose()));
  json out;
  out["meta"] = {{"seed", args.seed.value_or(0)}, {"config", config_hash(j)}};
  out["bearing"] = {{"direction",
                     {bearing.direction(0), bearing.direction(1),
                      bearing.direction(2)}},
                    {"separation", bearing.separation},
                    {"reliable", bearing.reliable}};
  out["eigenvalues_nT_per_mm"] = {bearing.eigenvalues(0) * 1e6,
                                  bearing.eigenvalues(1) * 1e6,
                                  bearing.eigenvalues(2) * 1e6};
  out["anisotropy_ratio"] = nulling.anisotropy_ratio;
  fs::create_directories(args.out_dir);
  const fs::path outfile = fs::path(args.out_dir) / "bearing.json";
  write_json(outfile, out);
  std::cout << "wrote " << outfile.string() << "\n";
  return kExitOk;
}

int cmd_sensitivity(const CommonArgs& args, const std::string& params_path) {
  SensitivityParams p;
  if (!params_path.empty()) {
    std::ifstream in(params_path);
    if (!in) throw IoError("cannot open sensitivity params " + params_path);
    json j;
    in >> j;
    p.n_atoms = j.value("n_atoms_total", p.n_atoms);
    p.T = j.value("T_ms", p.T * 1e3) * 1e-3;
    p.t_shot = j.value("t_shot_s", p.t_shot);
    p.m_shots = j.value("m_shots", p.m_shots);
    p.kappa = j.value("kappa", p.kappa);
    p.volume = j.value("volume_mm3", p.volume * 1e9) * 1e-9;
  }
  fs::create_directories(args.out_dir);
  const fs::path out = fs::path(args.out_dir) / "sensitivity.json";
  write_json(out, sensitivity_report(
                      p, FileMeta{args.seed.value_or(0), 0}));
  std::cout << "wrote " << out.string() << "\n";
  return kExitOk;
}

int cmd_reproduce(const CommonArgs& args, bool list_only) {
  if (list_only) {
    int id = 1;
    for (const auto& name : acceptance_names()) {
      std::printf("%d. %s\n", id++, name.c_str());
    }
    return kExitOk;
  }
  const std::uint64_t seed = args.seed.value_or(kDefaultAcceptanceSeed);
  fs::create_directories(args.out_dir);
  const fs::path out_dir = fs::path(args.out_dir);
  emit_reference_bundle(seed, out_dir / "bundle", args.threads);

  const auto results = run_all_acceptance(seed, args.threads, out_dir);
  json report;
  report["seed"] = seed;
  json rows = json::array();
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("[%s] %d. %s: %s\n", r.pass ? "PASS" : "FAIL", r.id,
                r.name.c_str(), r.detail.c_str());
    rows.push_back({{"id", r.id},
                    {"name", r.name},
                    {"pass", r.pass},
                    {"detail", r.detail}});
    all_pass = all_pass && r.pass;
  }
  report["criteria"] = rows;
  report["all_pass"] = all_pass;
  write_json(out_dir / "report.json", report);
  std::printf("%s (report: %s)\n", all_pass ? "all checks passed"
                                            : "SOME CHECKS FAILED",
              (out_dir / "report.json").string().c_str());
  return all_pass ? kExitOk : kExitDegenerate;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Differential Ramsey magnetic tensor gradiometry: simulation and "
      "analysis"};
  app.require_subcommand(1);

  CommonArgs args;
  std::uint64_t seed_value = 0;
  bool seed_set = false;

  const auto add_common = [&](CLI::App* cmd, bool need_scenario) {
    auto* opt = cmd->add_option("--scenario", args.scenario_path,
                                "scenario JSON file");
    if (need_scenario) opt->required();
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", seed_value, "master seed override")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--threads", args.threads, "worker threads");
    cmd->add_option("--format", args.format, "output format (csv|json)");
  };

  auto* simulate = app.add_subcommand("simulate", "generate a shot table");
  add_common(simulate, true);

  std::string input_csv;
  auto* fit = app.add_subcommand("fit-ellipse",
                                 "per-T ellipse phases from a shot table");
  fit->add_option("--input", input_csv, "shot table CSV")->required();
  add_common(fit, false);

  std::string job_path;
  auto* tensor = app.add_subcommand("tensor", "complete the gradient tensor");
  tensor->add_option("--job", job_path,
                     "job JSON (measurements or six runs)")->required();
  add_common(tensor, false);

  std::string tensor_path;
  auto* localize = app.add_subcommand("localize",
                                      "source bearing from a tensor report");
  localize->add_option("--tensor", tensor_path, "tensor report JSON")
      ->required();
  add_common(localize, false);

  std::string params_path;
  auto* sens = app.add_subcommand("sensitivity", "figures of merit report");
  sens->add_option("--params", params_path, "parameter JSON");
  add_common(sens, false);

  bool list_only = false;
  auto* repro = app.add_subcommand(
      "reproduce-paper", "run the built-in verification suite end to end");
  repro->add_flag("--list", list_only, "enumerate checks without running");
  add_common(repro, false);

  CLI11_PARSE(app, argc, argv);
  if (seed_set) args.seed = seed_value;

  try {
    if (simulate->parsed()) return cmd_simulate(args);
    if (fit->parsed()) return cmd_fit_ellipse(args, input_csv);
    if (tensor->parsed()) return cmd_tensor(args, job_path);
    if (localize->parsed()) return cmd_localize(args, tensor_path);
    if (sens->parsed()) return cmd_sensitivity(args, params_path);
    if (repro->parsed()) return cmd_reproduce(args, list_only);
  } catch (const ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const IoError& ex) {
    std::cerr << "io error: " << ex.what() << "\n";
    return kExitIo;
  } catch (const DegenerateConic& ex) {
    std::cerr << "degenerate analysis: " << ex.what() << "\n";
    return kExitDegenerate;
  } catch (const MissingComponent& ex) {
    std::cerr << "degenerate analysis: " << ex.what() << "\n";
    return kExitDegenerate;
  } catch (const DegenerateEigenvalues& ex) {
    std::cerr << "degenerate analysis: " << ex.what() << "\n";
    return kExitDegenerate;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
