#pragma once

// Little-endian primitives shared by the binary checkpoint formats.

#include <algorithm>
#include <array>
#include <bit>
#include <istream>
#include <ostream>

#include "rpf/error.hpp"

namespace rpf::io {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

template <typename T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw FormatError("unexpected end of checkpoint data");
  return to_little(v);
}

inline void put_magic(std::ostream& out, const std::array<char, 8>& magic) {
  out.write(magic.data(), magic.size());
}

inline void expect_magic(std::istream& in, const std::array<char, 8>& magic) {
  std::array<char, 8> got{};
  in.read(got.data(), got.size());
  if (!in || got != magic) throw FormatError("bad checkpoint magic");
}

}  // namespace rpf::io
