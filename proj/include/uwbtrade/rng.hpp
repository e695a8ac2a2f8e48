// Copyright 2026 The uwbtrade Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace uwbtrade {

using Engine = std::mt19937_64;

/// Randomness categories. Each (partition, category) pair owns one engine so
/// that results depend only on the master seed and the partition count.
enum class Stream : std::uint32_t {
  bits = 0,
  polarity,
  time_hopping,
  tx_jitter,
  template_jitter,
  user_offset,
  noise,
};

inline constexpr std::size_t kStreamCount = 7;

/// Mixes a seed with a tag (splitmix64 finalizer over the xor-combined words).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  std::uint64_t z = seed ^ (tag * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class StreamSet {
 public:
  StreamSet(std::uint64_t seed, std::uint64_t partition) {
    for (std::size_t s = 0; s < kStreamCount; ++s) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(partition),
                        static_cast<std::uint32_t>(partition >> 32),
                        static_cast<std::uint32_t>(s)};
      engines_[s].seed(seq);
    }
  }

  Engine& operator[](Stream s) noexcept { return engines_[static_cast<std::size_t>(s)]; }

 private:
  std::array<Engine, kStreamCount> engines_;
};

// The helpers below fix the mapping from raw engine output to variates so
// that results do not depend on the standard library's distribution classes.

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Engine& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n), n >= 1 (Lemire's multiply-and-reject).
inline std::uint64_t uniform_below(Engine& eng, std::uint64_t n) {
  if (n <= 1) return 0;
  unsigned __int128 m = static_cast<unsigned __int128>(eng()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(eng()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Standard normal via Box-Muller; one variate per call.
inline double standard_normal(Engine& eng) {
  const double u1 = 1.0 - uniform01(eng);  // (0, 1]
  const double u2 = uniform01(eng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Hands out random signs from 64-bit words, one bit per draw.
class SignSource {
 public:
  explicit SignSource(Engine& eng) : eng_(eng) {}

  int next() {
    if (left_ == 0) {
      word_ = eng_();
      left_ = 64;
    }
    const int s = (word_ & 1U) ? 1 : -1;
    word_ >>= 1;
    --left_;
    return s;
  }

 private:
  Engine& eng_;
  std::uint64_t word_ = 0;
  int left_ = 0;
};

}  // namespace uwbtrade
