#include "rpf/rng.hpp"

#include <limits>
#include <sstream>

#include "rpf/error.hpp"

namespace rpf {

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw UsageError("uniform_index: empty range");
  // Rejection on the top of the range removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

std::string Rng::serialize() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

Rng Rng::deserialize(const std::string& text) {
  Rng rng;
  std::istringstream in(text);
  in >> rng.engine_;
  if (!in) throw FormatError("corrupt random generator state");
  return rng;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(master ^ h) + index);
}

}  // namespace rpf
