#include "rpf/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "rpf/error.hpp"

namespace rpf::nn {

namespace {

std::array<TensorLayout, kTensorCount> make_layout(const NetworkShape& s) {
  const std::size_t f = s.conv_filters;
  const std::size_t h = s.hidden_units;
  std::array<TensorLayout, kTensorCount> out{{
      {"conv1.weight", kVehicleFeatures, f, 0},
      {"conv1.bias", 1, f, 0},
      {"conv2.weight", f, f, 0},
      {"conv2.bias", 1, f, 0},
      {"fc1.weight", kEgoFeatures + f, h, 0},
      {"fc1.bias", 1, h, 0},
      {"fc2.weight", h, h, 0},
      {"fc2.bias", 1, h, 0},
      {"value.weight", h, 1, 0},
      {"value.bias", 1, 1, 0},
      {"advantage.weight", h, kNumActions, 0},
      {"advantage.bias", 1, kNumActions, 0},
  }};
  std::size_t offset = 0;
  for (auto& t : out) {
    t.offset = offset;
    offset += t.size();
  }
  return out;
}

// out[o] += sum_i in[i] * w[i * cols + o]
inline void accumulate_dense(const double* in, std::size_t rows, const double* w, std::size_t cols,
                             double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double x = in[i];
    if (x == 0.0) continue;
    const double* row = w + i * cols;
    for (std::size_t o = 0; o < cols; ++o) out[o] += x * row[o];
  }
}

// dw[i * cols + o] += in[i] * d_out[o]
inline void accumulate_outer(const double* in, std::size_t rows, const double* d_out,
                             std::size_t cols, double* dw) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double x = in[i];
    if (x == 0.0) continue;
    double* row = dw + i * cols;
    for (std::size_t o = 0; o < cols; ++o) row[o] += x * d_out[o];
  }
}

// d_in[i] = sum_o w[i * cols + o] * d_out[o]
inline void propagate_dense(const double* w, std::size_t rows, std::size_t cols,
                            const double* d_out, double* d_in) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = w + i * cols;
    double acc = 0.0;
    for (std::size_t o = 0; o < cols; ++o) acc += row[o] * d_out[o];
    d_in[i] = acc;
  }
}

inline void relu(std::span<double> v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

}  // namespace

NetworkParams::NetworkParams(NetworkShape shape) : shape_(shape), layout_(make_layout(shape)) {
  const auto& last = layout_.back();
  values_.assign(last.offset + last.size(), 0.0);
}

std::span<double> NetworkParams::tensor(Tensor t) noexcept {
  const auto& l = layout(t);
  return {values_.data() + l.offset, l.size()};
}

std::span<const double> NetworkParams::tensor(Tensor t) const noexcept {
  const auto& l = layout(t);
  return {values_.data() + l.offset, l.size()};
}

void NetworkParams::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool operator==(const NetworkParams& a, const NetworkParams& b) {
  return a.shape_ == b.shape_ && a.values_.size() == b.values_.size() &&
         std::memcmp(a.values_.data(), b.values_.data(), a.values_.size() * sizeof(double)) == 0;
}

std::uint64_t fingerprint(const NetworkParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto values = params.values();
  const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
  for (std::size_t i = 0; i < values.size_bytes(); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

NetworkParams init_network(Rng& rng, NetworkShape shape) {
  NetworkParams params(shape);
  constexpr std::array kWeights{Tensor::kConv1Weight, Tensor::kConv2Weight, Tensor::kFc1Weight,
                                Tensor::kFc2Weight,   Tensor::kValueWeight, Tensor::kAdvantageWeight};
  for (Tensor t : kWeights) {
    const TensorLayout& layout = params.layout(t);
    const double bound = std::sqrt(6.0 / static_cast<double>(layout.rows + layout.cols));
    for (double& w : params.tensor(t)) w = rng.uniform(-bound, bound);
  }
  return params;
}

QVector forward(const NetworkParams& params, const Observation& obs) {
  ForwardCache cache;
  return forward(params, obs, cache);
}

QVector forward(const NetworkParams& params, const Observation& obs, ForwardCache& cache) {
  if (!obs.well_formed()) {
    throw InputShapeError("observation length " + std::to_string(obs.values.size()) +
                          " is not " + std::to_string(kEgoFeatures) + " + " +
                          std::to_string(kVehicleFeatures) + " * N");
  }
  const std::size_t filters = params.shape().conv_filters;
  const std::size_t hidden = params.shape().hidden_units;
  const std::size_t n = obs.vehicle_count();
  const double* x = obs.values.data() + kEgoFeatures;

  cache.vehicles = n;
  cache.conv1.assign(n * filters, 0.0);
  cache.conv2.assign(n * filters, 0.0);

  const auto w1 = params.tensor(Tensor::kConv1Weight);
  const auto b1 = params.tensor(Tensor::kConv1Bias);
  const auto w2 = params.tensor(Tensor::kConv2Weight);
  const auto b2 = params.tensor(Tensor::kConv2Bias);
  for (std::size_t v = 0; v < n; ++v) {
    double* c1 = cache.conv1.data() + v * filters;
    std::copy(b1.begin(), b1.end(), c1);
    accumulate_dense(x + v * kVehicleFeatures, kVehicleFeatures, w1.data(), filters, c1);
    relu({c1, filters});
    double* c2 = cache.conv2.data() + v * filters;
    std::copy(b2.begin(), b2.end(), c2);
    accumulate_dense(c1, filters, w2.data(), filters, c2);
    relu({c2, filters});
  }

  // Global max pool over vehicles; an empty road pools to zeros.
  cache.merged.assign(kEgoFeatures + filters, 0.0);
  std::copy_n(obs.values.begin(), kEgoFeatures, cache.merged.begin());
  cache.pool_source.assign(filters, kNoSource);
  double* pooled = cache.merged.data() + kEgoFeatures;
  for (std::size_t v = 0; v < n; ++v) {
    const double* c2 = cache.conv2.data() + v * filters;
    for (std::size_t f = 0; f < filters; ++f) {
      if (cache.pool_source[f] == kNoSource || c2[f] > pooled[f]) {
        pooled[f] = c2[f];
        cache.pool_source[f] = v;
      }
    }
  }

  const auto fc1 = params.tensor(Tensor::kFc1Weight);
  const auto fc1b = params.tensor(Tensor::kFc1Bias);
  cache.hidden1.assign(fc1b.begin(), fc1b.end());
  accumulate_dense(cache.merged.data(), kEgoFeatures + filters, fc1.data(), hidden,
                   cache.hidden1.data());
  relu(cache.hidden1);

  const auto fc2 = params.tensor(Tensor::kFc2Weight);
  const auto fc2b = params.tensor(Tensor::kFc2Bias);
  cache.hidden2.assign(fc2b.begin(), fc2b.end());
  accumulate_dense(cache.hidden1.data(), hidden, fc2.data(), hidden, cache.hidden2.data());
  relu(cache.hidden2);

  const auto vw = params.tensor(Tensor::kValueWeight);
  double value = params.tensor(Tensor::kValueBias)[0];
  for (std::size_t h = 0; h < hidden; ++h) value += vw[h] * cache.hidden2[h];
  cache.value = value;

  const auto ab = params.tensor(Tensor::kAdvantageBias);
  std::copy(ab.begin(), ab.end(), cache.advantage.begin());
  accumulate_dense(cache.hidden2.data(), hidden, params.tensor(Tensor::kAdvantageWeight).data(),
                   kNumActions, cache.advantage.data());

  double mean_advantage = 0.0;
  for (double a : cache.advantage) mean_advantage += a;
  mean_advantage /= static_cast<double>(kNumActions);
  for (std::size_t a = 0; a < kNumActions; ++a) {
    cache.q[a] = value + (cache.advantage[a] - mean_advantage);
  }
  return cache.q;
}

void backward(const NetworkParams& params, const Observation& obs, ForwardCache& cache,
              const QVector& dq, NetworkParams& grad) {
  const std::size_t filters = params.shape().conv_filters;
  const std::size_t hidden = params.shape().hidden_units;
  const std::size_t merged_size = kEgoFeatures + filters;

  // Dueling combine: Q_a = V + A_a - mean(A).
  double d_value = 0.0;
  for (double g : dq) d_value += g;
  const double mean_dq = d_value / static_cast<double>(kNumActions);
  QVector d_adv;
  for (std::size_t a = 0; a < kNumActions; ++a) d_adv[a] = dq[a] - mean_dq;

  grad.tensor(Tensor::kValueBias)[0] += d_value;
  auto g_vw = grad.tensor(Tensor::kValueWeight);
  const auto vw = params.tensor(Tensor::kValueWeight);
  for (std::size_t h = 0; h < hidden; ++h) g_vw[h] += d_value * cache.hidden2[h];

  auto g_ab = grad.tensor(Tensor::kAdvantageBias);
  for (std::size_t a = 0; a < kNumActions; ++a) g_ab[a] += d_adv[a];
  const auto aw = params.tensor(Tensor::kAdvantageWeight);
  accumulate_outer(cache.hidden2.data(), hidden, d_adv.data(), kNumActions,
                   grad.tensor(Tensor::kAdvantageWeight).data());

  cache.d_hidden2.resize(hidden);
  propagate_dense(aw.data(), hidden, kNumActions, d_adv.data(), cache.d_hidden2.data());
  for (std::size_t h = 0; h < hidden; ++h) {
    cache.d_hidden2[h] = cache.hidden2[h] > 0.0 ? cache.d_hidden2[h] + d_value * vw[h] : 0.0;
  }

  // fc2
  auto g_fc2b = grad.tensor(Tensor::kFc2Bias);
  for (std::size_t h = 0; h < hidden; ++h) g_fc2b[h] += cache.d_hidden2[h];
  accumulate_outer(cache.hidden1.data(), hidden, cache.d_hidden2.data(), hidden,
                   grad.tensor(Tensor::kFc2Weight).data());
  cache.d_hidden1.resize(hidden);
  propagate_dense(params.tensor(Tensor::kFc2Weight).data(), hidden, hidden,
                  cache.d_hidden2.data(), cache.d_hidden1.data());
  for (std::size_t h = 0; h < hidden; ++h) {
    if (cache.hidden1[h] <= 0.0) cache.d_hidden1[h] = 0.0;
  }

  // fc1
  auto g_fc1b = grad.tensor(Tensor::kFc1Bias);
  for (std::size_t h = 0; h < hidden; ++h) g_fc1b[h] += cache.d_hidden1[h];
  accumulate_outer(cache.merged.data(), merged_size, cache.d_hidden1.data(), hidden,
                   grad.tensor(Tensor::kFc1Weight).data());
  if (cache.vehicles == 0) return;
  cache.d_merged.resize(merged_size);
  propagate_dense(params.tensor(Tensor::kFc1Weight).data(), merged_size, hidden,
                  cache.d_hidden1.data(), cache.d_merged.data());
  const double* d_pooled = cache.d_merged.data() + kEgoFeatures;

  // Max pool routes each feature's gradient to its source frame. Pooled
  // values are post-ReLU, so a zero maximum carries no gradient.
  const auto w2 = params.tensor(Tensor::kConv2Weight);
  auto g_w1 = grad.tensor(Tensor::kConv1Weight);
  auto g_b1 = grad.tensor(Tensor::kConv1Bias);
  auto g_w2 = grad.tensor(Tensor::kConv2Weight);
  auto g_b2 = grad.tensor(Tensor::kConv2Bias);
  const double* x = obs.values.data() + kEgoFeatures;
  std::vector<double> d_conv2(filters);
  cache.d_conv1.resize(filters);
  for (std::size_t v = 0; v < cache.vehicles; ++v) {
    bool active = false;
    const double* c2 = cache.conv2.data() + v * filters;
    for (std::size_t f = 0; f < filters; ++f) {
      const bool routed = cache.pool_source[f] == v && c2[f] > 0.0;
      d_conv2[f] = routed ? d_pooled[f] : 0.0;
      active = active || routed;
    }
    if (!active) continue;

    const double* c1 = cache.conv1.data() + v * filters;
    for (std::size_t f = 0; f < filters; ++f) g_b2[f] += d_conv2[f];
    accumulate_outer(c1, filters, d_conv2.data(), filters, g_w2.data());
    propagate_dense(w2.data(), filters, filters, d_conv2.data(), cache.d_conv1.data());
    for (std::size_t f = 0; f < filters; ++f) {
      if (c1[f] <= 0.0) cache.d_conv1[f] = 0.0;
      g_b1[f] += cache.d_conv1[f];
    }
    accumulate_outer(x + v * kVehicleFeatures, kVehicleFeatures, cache.d_conv1.data(), filters,
                     g_w1.data());
  }
}

NetworkParams backward(const NetworkParams& params, const Observation& obs, std::size_t action,
                       double upstream) {
  if (action >= kNumActions) throw std::out_of_range("action index out of range");
  ForwardCache cache;
  forward(params, obs, cache);
  QVector dq{};
  dq[action] = upstream;
  NetworkParams grad(params.shape());
  backward(params, obs, cache, dq, grad);
  return grad;
}

}  // namespace rpf::nn
