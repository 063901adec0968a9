#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "rpf/harness/evaluation.hpp"

namespace rpf::harness {

struct RunMetrics {
  std::string name;
  std::vector<EvaluationResult> rows;
};

/// Reads <dir>/metrics.csv; the run is named after the directory.
RunMetrics read_run(const std::filesystem::path& dir);

struct Comparison {
  std::vector<std::uint64_t> steps;  // evaluation steps present in every run
  std::vector<RunMetrics> runs;      // best final normalized return first
  std::vector<std::string> warnings;
};

/// Aligns runs on their common evaluation steps. Runs are ordered by the
/// normalized return at the last common step (their own last row when
/// nothing is shared), ties by name.
Comparison compare_runs(std::vector<RunMetrics> runs);

/// training_step, then <run>_collision_free_fraction and
/// <run>_mean_normalized_return per run.
void write_comparison_csv(std::ostream& out, const Comparison& comparison);
void write_comparison_text(std::ostream& out, const Comparison& comparison);

}  // namespace rpf::harness
