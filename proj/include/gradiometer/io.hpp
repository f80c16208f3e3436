#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "gradiometer/pipeline.hpp"
#include "gradiometer/sensitivity.hpp"

namespace gradiometer {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Scenario files: JSON with unit-suffixed keys (documented in the README).
// ---------------------------------------------------------------------------

Scenario parse_scenario(const json& j);
Scenario load_scenario(const std::filesystem::path& path);

// Canonical form used for hashing and for echoing configuration in reports.
json scenario_to_json(const Scenario& sc);

// FNV-1a over a canonical serialization; stable across runs.
std::uint64_t config_hash(const json& canonical);

struct FileMeta {
  std::uint64_t seed = 0;
  std::uint64_t config = 0;
};

// ---------------------------------------------------------------------------
// Shot tables (CSV interchange; accepts external experimental data with the
// same columns).
// ---------------------------------------------------------------------------

std::string shot_table_csv(std::span<const Shot> shots, const FileMeta& meta);
void write_shot_table(const std::filesystem::path& path,
                      std::span<const Shot> shots, const FileMeta& meta);
std::vector<Shot> read_shot_table(const std::filesystem::path& path);

std::string phase_table_csv(std::span<const SweepPoint> points,
                            const FileMeta& meta);
void write_phase_table(const std::filesystem::path& path,
                       std::span<const SweepPoint> points,
                       const FileMeta& meta);

// JSON forms of the same tables (one object per row).
json shot_table_json(std::span<const Shot> shots, const FileMeta& meta);
json phase_table_json(std::span<const SweepPoint> points,
                      const FileMeta& meta);

// ---------------------------------------------------------------------------
// Reports (JSON, SI values plus display units)
// ---------------------------------------------------------------------------

json tensor_report(const GradientTensor& tensor, const BearingResult& bearing,
                   const NullingReport& nulling, const FileMeta& meta);

json sensitivity_report(const SensitivityParams& p, const FileMeta& meta);

void write_json(const std::filesystem::path& path, const json& j);

// Measurement-file ingestion for the tensor command: six in-plane components
// given directly as {component, axis, value_nT_per_mm, sigma_nT_per_mm}.
InPlaneMeasurements parse_measurements(const json& j);

}  // namespace gradiometer
