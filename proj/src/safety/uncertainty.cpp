#include "rpf/safety/uncertainty.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "rpf/env/types.hpp"
#include "rpf/error.hpp"

namespace rpf::safety {

UncertaintyReport describe(std::span<const QVector> member_q) {
  if (member_q.size() < 2) throw ConfigError("c_v needs an ensemble of at least two members");
  const double k = static_cast<double>(member_q.size());
  UncertaintyReport r;
  for (std::size_t a = 0; a < kNumActions; ++a) {
    double sum = 0.0;
    for (const QVector& q : member_q) sum += q[a];
    const double mean = sum / k;
    double sq = 0.0;
    for (const QVector& q : member_q) sq += (q[a] - mean) * (q[a] - mean);
    r.means[a] = mean;
    r.stds[a] = std::sqrt(sq / k);
    r.cv[a] = std::abs(mean) < kNearZeroMean ? std::numeric_limits<double>::infinity()
                                             : r.stds[a] / std::abs(mean);
  }
  r.action = argmax(r.means);
  return r;
}

QVector coefficient_of_variation(std::span<const QVector> member_q) {
  return describe(member_q).cv;
}

QVector coefficient_of_variation(const agent::EnsembleAgent& agent, const Observation& obs) {
  const std::vector<QVector> q = agent.ensemble_q(obs);
  return coefficient_of_variation(q);
}

UncertaintyReport select_safe_action(std::span<const QVector> member_q, double threshold) {
  UncertaintyReport r = describe(member_q);
  bool found = false;
  for (std::size_t a = 0; a < kNumActions; ++a) {
    if (!(r.cv[a] < threshold)) continue;
    if (!found || r.means[a] > r.means[r.action]) r.action = a;
    found = true;
  }
  if (!found) {
    r.action = env::kHardBrakeAction;
    r.fallback_used = true;
  }
  return r;
}

UncertaintyReport select_safe_action(const agent::EnsembleAgent& agent, const Observation& obs,
                                     double threshold) {
  const std::vector<QVector> q = agent.ensemble_q(obs);
  return select_safe_action(q, threshold);
}

double confidence_measure(double cv, double cv_min, double cv_safe) {
  if (!(cv_min >= 0.0) || !(cv_safe > cv_min)) {
    throw ConfigError("confidence measure needs cv_safe > cv_min >= 0");
  }
  return 1.0 - (cv - cv_min) / (cv_safe - cv_min);
}

std::string report_csv_header() {
  std::string header;
  for (const char* prefix : {"mean_q_", "std_q_", "cv_"}) {
    for (std::size_t a = 0; a < kNumActions; ++a) {
      if (!header.empty()) header += ',';
      header += prefix + std::to_string(a);
    }
  }
  return header + ",action,fallback";
}

void append_report(io::CsvRow& row, const UncertaintyReport& report) {
  for (double v : report.means) row.add(v);
  for (double v : report.stds) row.add(v);
  for (double v : report.cv) row.add(v);
  row.add(report.action);
  row.add(report.fallback_used);
}

}  // namespace rpf::safety
