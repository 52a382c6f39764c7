// Copyright 2026 The pdeforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace pdeforge {

enum class StreamRole : std::uint64_t { BasisParams = 1, SampleParams = 2, Weights = 3, Noise = 4 };

inline std::string_view to_string(StreamRole r) {
  switch (r) {
    case StreamRole::BasisParams: return "basis_params";
    case StreamRole::SampleParams: return "sample_params";
    case StreamRole::Weights: return "weights";
    case StreamRole::Noise: return "noise";
  }
  return "?";
}

namespace detail {
// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Counter-based random stream. The output sequence depends only on
/// (master_seed, role, index), so samples drawn from distinct streams can be
/// computed in any order or in parallel with identical results.
///
/// Satisfies std::uniform_random_bit_generator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kRoleMul = 0x9e3779b97f4a7c15ULL;
  static constexpr std::uint64_t kIndexMul = 0xd1b54a32d192ed03ULL;
  static constexpr std::uint64_t kCounterStep = 0x9e3779b97f4a7c15ULL;

  RngStream(std::uint64_t master_seed, StreamRole role, std::uint64_t index) noexcept
      : master_seed_(master_seed),
        role_(role),
        index_(index),
        key_(detail::mix64(master_seed ^ (static_cast<std::uint64_t>(role) * kRoleMul) ^
                           (index * kIndexMul))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return detail::mix64(key_ + (++counter_) * kCounterStep); }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  StreamRole role() const noexcept { return role_; }
  std::uint64_t index() const noexcept { return index_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t master_seed_;
  StreamRole role_;
  std::uint64_t index_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace pdeforge
