#include "rpf/harness/compare.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "rpf/error.hpp"
#include "rpf/io/csv.hpp"

namespace rpf::harness {

namespace {

const EvaluationResult* row_at(const RunMetrics& run, std::uint64_t step) {
  for (const EvaluationResult& r : run.rows) {
    if (r.training_step == step) return &r;
  }
  return nullptr;
}

double final_return(const RunMetrics& run, const std::vector<std::uint64_t>& steps) {
  if (!steps.empty()) return row_at(run, steps.back())->mean_normalized_return;
  return run.rows.empty() ? -1e300 : run.rows.back().mean_normalized_return;
}

}  // namespace

RunMetrics read_run(const std::filesystem::path& dir) {
  std::filesystem::path normalized = std::filesystem::absolute(dir).lexically_normal();
  if (!normalized.has_filename()) normalized = normalized.parent_path();
  return RunMetrics{normalized.filename().string(), read_metrics(normalized / "metrics.csv")};
}

Comparison compare_runs(std::vector<RunMetrics> runs) {
  if (runs.empty()) throw UsageError("compare needs at least one run");
  Comparison c;
  std::map<std::string, int> seen;
  for (RunMetrics& run : runs) {
    const int n = seen[run.name]++;
    if (n > 0) run.name += "_" + std::to_string(n + 1);
  }

  std::set<std::uint64_t> common;
  for (const EvaluationResult& r : runs.front().rows) common.insert(r.training_step);
  for (const RunMetrics& run : runs) {
    std::set<std::uint64_t> own;
    for (const EvaluationResult& r : run.rows) own.insert(r.training_step);
    std::set<std::uint64_t> both;
    std::set_intersection(common.begin(), common.end(), own.begin(), own.end(),
                          std::inserter(both, both.end()));
    common = std::move(both);
  }
  c.steps.assign(common.begin(), common.end());
  if (c.steps.empty()) {
    c.warnings.push_back("the runs share no evaluation step; the table is empty");
  } else {
    for (const RunMetrics& run : runs) {
      const std::size_t dropped = run.rows.size() - c.steps.size();
      if (dropped > 0) {
        c.warnings.push_back(run.name + ": " + std::to_string(dropped) +
                             " evaluation(s) outside the common grid were left out");
      }
    }
  }

  std::stable_sort(runs.begin(), runs.end(), [&](const RunMetrics& a, const RunMetrics& b) {
    const double ra = final_return(a, c.steps);
    const double rb = final_return(b, c.steps);
    if (ra != rb) return ra > rb;
    return a.name < b.name;
  });
  c.runs = std::move(runs);
  return c;
}

void write_comparison_csv(std::ostream& out, const Comparison& c) {
  io::CsvRow header;
  header.add("training_step");
  for (const RunMetrics& run : c.runs) {
    header.add(run.name + "_collision_free_fraction").add(run.name + "_mean_normalized_return");
  }
  header.write(out);
  for (std::uint64_t step : c.steps) {
    io::CsvRow row;
    row.add(static_cast<unsigned long long>(step));
    for (const RunMetrics& run : c.runs) {
      const EvaluationResult* r = row_at(run, step);
      row.add(r->collision_free_fraction).add(r->mean_normalized_return);
    }
    row.write(out);
  }
}

void write_comparison_text(std::ostream& out, const Comparison& c) {
  for (const std::string& w : c.warnings) out << "warning: " << w << '\n';
  out << "runs (best final normalized return first):\n";
  for (std::size_t i = 0; i < c.runs.size(); ++i) {
    out << "  [" << i + 1 << "] " << c.runs[i].name << '\n';
  }
  out << '\n';
  char cell[64];
  std::snprintf(cell, sizeof cell, "%12s", "step");
  out << cell;
  for (std::size_t i = 0; i < c.runs.size(); ++i) {
    std::snprintf(cell, sizeof cell, "  [%zu] coll-free  norm.ret", i + 1);
    out << cell;
  }
  out << '\n';
  for (std::uint64_t step : c.steps) {
    std::snprintf(cell, sizeof cell, "%12llu", static_cast<unsigned long long>(step));
    out << cell;
    for (const RunMetrics& run : c.runs) {
      const EvaluationResult* r = row_at(run, step);
      std::snprintf(cell, sizeof cell, "  %13.3f %9.3f", r->collision_free_fraction,
                    r->mean_normalized_return);
      out << cell;
    }
    out << '\n';
  }
}

}  // namespace rpf::harness
