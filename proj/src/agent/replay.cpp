#include "rpf/agent/replay.hpp"

#include <array>
#include <stdexcept>
#include <string>

#include "rpf/error.hpp"
#include "rpf/io/binary.hpp"

namespace rpf::agent {

namespace {

constexpr std::array<char, 8> kReplayMagic{'R', 'P', 'F', 'R', 'P', 'L', 'Y', '1'};
constexpr std::uint32_t kReplayFormatVersion = 1;

void write_observation(std::ostream& out, const Observation& obs) {
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(obs.values.size()));
  for (double v : obs.values) io::put<double>(out, v);
}

Observation read_observation(std::istream& in) {
  Observation obs;
  obs.values.resize(io::get<std::uint32_t>(in));
  for (double& v : obs.values) v = io::get<double>(in);
  return obs;
}

}  // namespace

SharedReplayMemory::SharedReplayMemory(std::size_t capacity, std::size_t members)
    : capacity_(capacity), members_(members), eligible_(members, 0) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
  if (members == 0 || members > kMaxMembers) {
    throw ConfigError("replay memory supports 1 to 64 members, got " + std::to_string(members));
  }
}

std::size_t SharedReplayMemory::add(Experience e, double p_add, Rng& rng) {
  std::uint64_t mask = 0;
  for (std::size_t k = 0; k < members_; ++k) {
    if (rng.bernoulli(p_add)) mask |= std::uint64_t{1} << k;
  }
  return add_with_mask(std::move(e), mask);
}

std::size_t SharedReplayMemory::add_with_mask(Experience e, std::uint64_t mask) {
  if (e.action >= kNumActions) throw std::invalid_argument("experience action out of range");
  if (members_ < kMaxMembers) mask &= (std::uint64_t{1} << members_) - 1;
  const std::size_t slot = next_;
  if (slot == slots_.size()) {
    slots_.push_back(std::move(e));
    masks_.push_back(0);
  } else {
    slots_[slot] = std::move(e);
  }
  for (std::size_t k = 0; k < members_; ++k) {
    const std::uint64_t bit = std::uint64_t{1} << k;
    if (masks_[slot] & bit) --eligible_[k];
    if (mask & bit) ++eligible_[k];
  }
  masks_[slot] = mask;
  next_ = (next_ + 1) % capacity_;
  ++added_;
  return slot;
}

std::optional<std::vector<std::size_t>> SharedReplayMemory::sample(std::size_t member,
                                                                   std::size_t batch,
                                                                   Rng& rng) const {
  if (member >= members_) throw std::out_of_range("member index out of range");
  if (eligible_[member] < batch || eligible_[member] == 0) return std::nullopt;
  const std::uint64_t bit = std::uint64_t{1} << member;
  std::vector<std::size_t> picks;
  picks.reserve(batch);
  // Rejection sampling over all slots keeps the draw uniform over eligible
  // ones without maintaining per-member index lists.
  while (picks.size() < batch) {
    const std::size_t slot = rng.uniform_index(slots_.size());
    if (masks_[slot] & bit) picks.push_back(slot);
  }
  return picks;
}

void SharedReplayMemory::write(std::ostream& out) const {
  io::put_magic(out, kReplayMagic);
  io::put<std::uint32_t>(out, kReplayFormatVersion);
  io::put<std::uint64_t>(out, capacity_);
  io::put<std::uint64_t>(out, members_);
  io::put<std::uint64_t>(out, next_);
  io::put<std::uint64_t>(out, added_);
  io::put<std::uint64_t>(out, slots_.size());
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const Experience& e = slots_[i];
    io::put<std::uint64_t>(out, masks_[i]);
    io::put<std::uint32_t>(out, static_cast<std::uint32_t>(e.action));
    io::put<double>(out, e.reward);
    io::put<std::uint8_t>(out, e.terminal ? 1 : 0);
    write_observation(out, e.observation);
    write_observation(out, e.next_observation);
  }
  if (!out) throw FormatError("failed writing replay memory");
}

SharedReplayMemory SharedReplayMemory::read(std::istream& in) {
  io::expect_magic(in, kReplayMagic);
  const auto version = io::get<std::uint32_t>(in);
  if (version != kReplayFormatVersion) {
    throw FormatError("unsupported replay format version " + std::to_string(version));
  }
  const auto capacity = io::get<std::uint64_t>(in);
  const auto members = io::get<std::uint64_t>(in);
  SharedReplayMemory memory(capacity, members);
  memory.next_ = io::get<std::uint64_t>(in);
  const auto added = io::get<std::uint64_t>(in);
  const auto count = io::get<std::uint64_t>(in);
  if (count > capacity || memory.next_ >= capacity) throw FormatError("corrupt replay header");
  memory.slots_.reserve(count);
  memory.masks_.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Experience e;
    const auto mask = io::get<std::uint64_t>(in);
    e.action = io::get<std::uint32_t>(in);
    e.reward = io::get<double>(in);
    e.terminal = io::get<std::uint8_t>(in) != 0;
    e.observation = read_observation(in);
    e.next_observation = read_observation(in);
    memory.slots_.push_back(std::move(e));
    memory.masks_.push_back(mask);
    for (std::size_t k = 0; k < memory.members_; ++k) {
      if (mask & (std::uint64_t{1} << k)) ++memory.eligible_[k];
    }
  }
  memory.added_ = added;
  return memory;
}

}  // namespace rpf::agent
