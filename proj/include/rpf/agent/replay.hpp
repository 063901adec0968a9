#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "rpf/rng.hpp"
#include "rpf/types.hpp"

namespace rpf::agent {

struct Experience {
  Observation observation;
  std::size_t action = 0;
  double reward = 0.0;
  Observation next_observation;
  bool terminal = false;

  friend bool operator==(const Experience&, const Experience&) = default;
};

/// One ring buffer shared by up to 64 ensemble members. Every slot carries
/// a bit mask saying which members may sample it; overwriting a slot
/// replaces its mask.
class SharedReplayMemory {
 public:
  static constexpr std::size_t kMaxMembers = 64;

  SharedReplayMemory(std::size_t capacity, std::size_t members);

  std::size_t capacity() const { return capacity_; }
  std::size_t members() const { return members_; }
  std::size_t size() const { return slots_.size(); }
  /// Total number of add() calls, including overwritten ones.
  std::uint64_t added() const { return added_; }

  /// Stores e and sets each member bit independently with probability p_add.
  /// Returns the slot index written.
  std::size_t add(Experience e, double p_add, Rng& rng);
  std::size_t add_with_mask(Experience e, std::uint64_t mask);

  std::uint64_t mask(std::size_t slot) const { return masks_.at(slot); }
  const Experience& at(std::size_t slot) const { return slots_.at(slot); }
  /// Slots member k may sample.
  std::size_t eligible(std::size_t member) const { return eligible_.at(member); }

  /// batch slot indices drawn uniformly with replacement among the slots
  /// whose bit for member is set, or nullopt when fewer than batch are
  /// eligible (not ready).
  std::optional<std::vector<std::size_t>> sample(std::size_t member, std::size_t batch,
                                                 Rng& rng) const;

  void write(std::ostream& out) const;
  static SharedReplayMemory read(std::istream& in);

  friend bool operator==(const SharedReplayMemory&, const SharedReplayMemory&) = default;

 private:
  std::size_t capacity_;
  std::size_t members_;
  std::size_t next_ = 0;
  std::uint64_t added_ = 0;
  std::vector<Experience> slots_;
  std::vector<std::uint64_t> masks_;
  std::vector<std::size_t> eligible_;
};

}  // namespace rpf::agent
