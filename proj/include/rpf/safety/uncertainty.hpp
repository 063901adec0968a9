#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "rpf/agent/ensemble.hpp"
#include "rpf/io/csv.hpp"
#include "rpf/types.hpp"

namespace rpf::safety {

inline constexpr double kDefaultSafeThreshold = 0.02;
inline constexpr double kDefaultMinCv = 0.01;
/// Means with smaller magnitude get an infinite c_v.
inline constexpr double kNearZeroMean = 1e-6;

struct UncertaintyReport {
  QVector means{};
  QVector stds{};  // population standard deviation over members
  QVector cv{};
  std::size_t action = 0;
  bool fallback_used = false;

  friend bool operator==(const UncertaintyReport&, const UncertaintyReport&) = default;
};

/// std / |mean| per action over the member Q-values. Throws ConfigError for
/// fewer than two members.
QVector coefficient_of_variation(std::span<const QVector> member_q);
QVector coefficient_of_variation(const agent::EnsembleAgent& agent, const Observation& obs);

/// Means, stds and c_v; action is the plain mean-Q argmax, no gate.
UncertaintyReport describe(std::span<const QVector> member_q);

/// Highest mean Q among actions with c_v < threshold; the hard-brake
/// fallback when none qualifies.
UncertaintyReport select_safe_action(std::span<const QVector> member_q, double threshold);
UncertaintyReport select_safe_action(const agent::EnsembleAgent& agent, const Observation& obs,
                                     double threshold);

/// 1 - (cv - cv_min) / (cv_safe - cv_min), unclamped.
double confidence_measure(double cv, double cv_min, double cv_safe);

/// Column names matching append_report, without a trailing newline.
std::string report_csv_header();
/// means_0..9, std_0..9, cv_0..9, action, fallback.
void append_report(io::CsvRow& row, const UncertaintyReport& report);

}  // namespace rpf::safety
