#pragma once

#include <cstdint>

namespace rpf::harness {

/// Running sum r_0 + gamma r_1 + gamma^2 r_2 + ...
class ReturnAccumulator {
 public:
  explicit ReturnAccumulator(double gamma) : gamma_(gamma) {}

  void add(double reward) {
    value_ += weight_ * reward;
    weight_ *= gamma_;
    ++steps_;
  }
  double value() const { return value_; }
  std::uint64_t steps() const { return steps_; }

 private:
  double gamma_;
  double value_ = 0.0;
  double weight_ = 1.0;
  std::uint64_t steps_ = 0;
};

}  // namespace rpf::harness
