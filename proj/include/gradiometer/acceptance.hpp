#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gradiometer {

// End-to-end verification suite behind `reproduce-paper`: each check runs a
// full simulation/analysis path and compares against the reference values
// and tolerances pinned below.
struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;  // measured vs target summary
};

std::vector<std::string> acceptance_names();

CriterionResult run_criterion(
    int id, std::uint64_t seed, int threads,
    const std::optional<std::filesystem::path>& artifact_dir = std::nullopt);

std::vector<CriterionResult> run_all_acceptance(
    std::uint64_t seed, int threads,
    const std::optional<std::filesystem::path>& artifact_dir = std::nullopt);

// Deterministic report bundle (shot table, phase table, tensor and
// sensitivity reports); used by the byte-identity check and the CLI.
void emit_reference_bundle(std::uint64_t seed,
                           const std::filesystem::path& dir, int threads);

inline constexpr std::uint64_t kDefaultAcceptanceSeed = 987654321ULL;

}  // namespace gradiometer
