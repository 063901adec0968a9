#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "rpf/rng.hpp"
#include "rpf/types.hpp"

namespace rpf::nn {

/// Layer widths. The topology itself (per-vehicle conv stack, max pool,
/// two dense layers, dueling head) is fixed.
struct NetworkShape {
  std::size_t conv_filters = 32;
  std::size_t hidden_units = 64;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

/// Parameter tensors in declaration (and serialization) order.
enum class Tensor : std::size_t {
  kConv1Weight,
  kConv1Bias,
  kConv2Weight,
  kConv2Bias,
  kFc1Weight,
  kFc1Bias,
  kFc2Weight,
  kFc2Bias,
  kValueWeight,
  kValueBias,
  kAdvantageWeight,
  kAdvantageBias,
};
inline constexpr std::size_t kTensorCount = 12;

/// Dense weights are stored input-major: element (i, o) at i * cols + o,
/// with rows = fan-in and cols = fan-out.
struct TensorLayout {
  std::string_view name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return rows * cols; }
};

/// Weights of one Q-network, held in a single contiguous buffer. The same
/// type doubles as a gradient accumulator and as Adam moment storage.
class NetworkParams {
 public:
  explicit NetworkParams(NetworkShape shape = {});

  const NetworkShape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<double> tensor(Tensor t) noexcept;
  std::span<const double> tensor(Tensor t) const noexcept;
  const TensorLayout& layout(Tensor t) const noexcept {
    return layout_[static_cast<std::size_t>(t)];
  }
  const std::array<TensorLayout, kTensorCount>& layouts() const noexcept { return layout_; }

  void fill(double v);

  /// Bitwise comparison of shapes and values.
  friend bool operator==(const NetworkParams& a, const NetworkParams& b);

 private:
  NetworkShape shape_;
  std::array<TensorLayout, kTensorCount> layout_;
  std::vector<double> values_;
};

/// 64-bit FNV-1a over the raw parameter bytes.
std::uint64_t fingerprint(const NetworkParams& params);

/// Glorot-uniform initialization: weights in +-sqrt(6/(fan_in + fan_out)),
/// biases zero.
NetworkParams init_network(Rng& rng, NetworkShape shape = {});

/// Intermediate activations of a forward pass, kept for backward. Reusing
/// one instance across calls avoids reallocations.
struct ForwardCache {
  std::size_t vehicles = 0;
  std::vector<double> conv1;   // vehicles x filters, post-ReLU
  std::vector<double> conv2;   // vehicles x filters, post-ReLU
  std::vector<double> merged;  // ego inputs followed by pooled features
  std::vector<std::size_t> pool_source;
  std::vector<double> hidden1;
  std::vector<double> hidden2;
  double value = 0.0;
  QVector advantage{};
  QVector q{};

  // backward scratch
  std::vector<double> d_hidden2, d_hidden1, d_merged, d_conv1;
};

inline constexpr std::size_t kNoSource = static_cast<std::size_t>(-1);

/// Q(s, .) for one observation. Throws InputShapeError on a malformed layout.
QVector forward(const NetworkParams& params, const Observation& obs);
QVector forward(const NetworkParams& params, const Observation& obs, ForwardCache& cache);

/// Accumulates sum_a dq[a] * dQ(s,a)/dtheta into grad, using the
/// activations left in cache by forward() on the same params and obs.
void backward(const NetworkParams& params, const Observation& obs, ForwardCache& cache,
              const QVector& dq, NetworkParams& grad);

/// Gradient of upstream * Q(s, action) with respect to every parameter.
NetworkParams backward(const NetworkParams& params, const Observation& obs, std::size_t action,
                       double upstream);

}  // namespace rpf::nn
