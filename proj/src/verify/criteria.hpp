#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace alphacl::verify {

// One end-to-end check of a core behavioral guarantee. Tolerances are pinned
// inside the implementations; `details` carries the measured numbers so a
// failure is diagnosable from the one-line report.
struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string details;
  std::vector<std::string> outputs;  // files written under outdir
  double seconds = 0.0;
};

inline constexpr int kCriterionCount = 10;

// Run one criterion (1-based id). Writes any evidence files under `outdir`
// (which must exist).
CriterionResult run_criterion(int id, std::uint64_t seed,
                              const std::string& outdir);

// Run all criteria, optionally fanning out over `jobs` worker threads; each
// criterion derives its own seed stream, so the fan-out does not change
// results. Results come back ordered by id.
std::vector<CriterionResult> run_all_criteria(std::uint64_t seed,
                                              const std::string& outdir,
                                              int jobs = 1);

}  // namespace alphacl::verify
