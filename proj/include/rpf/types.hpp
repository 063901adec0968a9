#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace rpf {

/// Size of the discrete action space (3 accelerations x 3 lateral commands
/// plus hard braking).
inline constexpr std::size_t kNumActions = 10;

/// Number of ego entries at the head of an observation.
inline constexpr std::size_t kEgoFeatures = 3;
/// Number of entries per sensed surrounding vehicle.
inline constexpr std::size_t kVehicleFeatures = 4;

/// One action-value per discrete action.
using QVector = std::array<double, kNumActions>;

/// Normalized network input: kEgoFeatures ego entries followed by
/// kVehicleFeatures entries per sensed vehicle. Every entry lies in [-1, 1].
struct Observation {
  std::vector<double> values;

  /// Number of vehicle blocks. Assumes a well-formed layout.
  std::size_t vehicle_count() const {
    return values.size() < kEgoFeatures ? 0 : (values.size() - kEgoFeatures) / kVehicleFeatures;
  }
  bool well_formed() const {
    return values.size() >= kEgoFeatures && (values.size() - kEgoFeatures) % kVehicleFeatures == 0;
  }
  std::span<const double> ego() const { return {values.data(), kEgoFeatures}; }
  std::span<const double> vehicle(std::size_t i) const {
    return {values.data() + kEgoFeatures + i * kVehicleFeatures, kVehicleFeatures};
  }

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Index of the largest entry; ties resolve to the lowest index.
inline std::size_t argmax(const QVector& q) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < q.size(); ++a) {
    if (q[a] > q[best]) best = a;
  }
  return best;
}

}  // namespace rpf
