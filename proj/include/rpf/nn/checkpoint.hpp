#pragma once

#include <filesystem>
#include <iosfwd>

#include "rpf/nn/adam.hpp"
#include "rpf/nn/network.hpp"

namespace rpf::nn {

// Network file layout (all integers and reals little-endian):
//   8-byte magic "RPFQNET1", u32 format version, u32 conv filters,
//   u32 hidden units, u32 tensor count, then per tensor
//   {u32 name length, name bytes, u32 rows, u32 cols}, then every tensor's
//   values as IEEE-754 binary64 in declaration order.
inline constexpr std::uint32_t kNetworkFormatVersion = 1;

void write_network(std::ostream& out, const NetworkParams& params);
NetworkParams read_network(std::istream& in);

void save_network(const std::filesystem::path& path, const NetworkParams& params);
NetworkParams load_network(const std::filesystem::path& path);

// Optimizer file: magic "RPFADAM1", u32 version, u64 step, beta1, beta2,
// epsilon, then both moment tensors in network format.
void write_adam(std::ostream& out, const AdamState& state);
AdamState read_adam(std::istream& in);

}  // namespace rpf::nn
