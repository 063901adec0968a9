#include "rpf/nn/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "rpf/error.hpp"
#include "rpf/io/binary.hpp"

namespace rpf::nn {

namespace {

constexpr std::array<char, 8> kNetworkMagic{'R', 'P', 'F', 'Q', 'N', 'E', 'T', '1'};
constexpr std::array<char, 8> kAdamMagic{'R', 'P', 'F', 'A', 'D', 'A', 'M', '1'};
constexpr std::uint32_t kAdamFormatVersion = 1;

using io::expect_magic;
using io::get;
using io::put;

}  // namespace

void write_network(std::ostream& out, const NetworkParams& params) {
  out.write(kNetworkMagic.data(), kNetworkMagic.size());
  put<std::uint32_t>(out, kNetworkFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.shape().conv_filters));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.shape().hidden_units));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(kTensorCount));
  for (const auto& t : params.layouts()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols));
  }
  for (double v : params.values()) put<double>(out, v);
  if (!out) throw FormatError("failed writing network checkpoint");
}

NetworkParams read_network(std::istream& in) {
  expect_magic(in, kNetworkMagic);
  const auto version = get<std::uint32_t>(in);
  if (version != kNetworkFormatVersion) {
    throw FormatError("unsupported network format version " + std::to_string(version));
  }
  NetworkShape shape;
  shape.conv_filters = get<std::uint32_t>(in);
  shape.hidden_units = get<std::uint32_t>(in);
  if (get<std::uint32_t>(in) != kTensorCount) throw FormatError("unexpected tensor count");
  NetworkParams params(shape);
  for (const auto& t : params.layouts()) {
    const auto len = get<std::uint32_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rows = get<std::uint32_t>(in);
    const auto cols = get<std::uint32_t>(in);
    if (!in || name != t.name || rows != t.rows || cols != t.cols) {
      throw FormatError("tensor table mismatch at '" + name + "'");
    }
  }
  for (double& v : params.values()) v = get<double>(in);
  return params;
}

void save_network(const std::filesystem::path& path, const NetworkParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_network(out, params);
}

NetworkParams load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_network(in);
}

void write_adam(std::ostream& out, const AdamState& state) {
  out.write(kAdamMagic.data(), kAdamMagic.size());
  put<std::uint32_t>(out, kAdamFormatVersion);
  put<std::uint64_t>(out, state.step_count);
  put<double>(out, state.beta1);
  put<double>(out, state.beta2);
  put<double>(out, state.epsilon);
  write_network(out, state.first_moment);
  write_network(out, state.second_moment);
}

AdamState read_adam(std::istream& in) {
  expect_magic(in, kAdamMagic);
  if (get<std::uint32_t>(in) != kAdamFormatVersion) throw FormatError("unsupported optimizer format");
  const auto step = get<std::uint64_t>(in);
  const auto beta1 = get<double>(in);
  const auto beta2 = get<double>(in);
  const auto epsilon = get<double>(in);
  auto first = read_network(in);
  auto second = read_network(in);
  AdamState state(first.shape());
  state.first_moment = std::move(first);
  state.second_moment = std::move(second);
  state.step_count = step;
  state.beta1 = beta1;
  state.beta2 = beta2;
  state.epsilon = epsilon;
  return state;
}

}  // namespace rpf::nn
