// Copyright 2026 The ptsbe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PTSBE_RNG_HPP
#define PTSBE_RNG_HPP

#include <cstdint>
#include <limits>

namespace ptsbe {

/// SplitMix64 finalizer: a bijective 64-bit avalanche mix.
constexpr std::uint64_t avalanche64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of stream `stream` derived from `master`:
///   avalanche64(master + 0x9E3779B97F4A7C15 * (stream + 1))
/// Streams are independent of how work is scheduled, which is what makes datasets
/// byte-identical across worker counts.
constexpr std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return avalanche64(master + 0x9E3779B97F4A7C15ULL * (stream + 1));
}

/// Stream id reserved for pre-trajectory sampling; trajectory t uses stream t.
inline constexpr std::uint64_t kSamplingStream = std::numeric_limits<std::uint64_t>::max();

/// xoshiro256** seeded through SplitMix64. Satisfies UniformRandomBitGenerator; its
/// output sequence is fully specified here so datasets are portable across standard libraries.
class RandomStream {
   public:
    using result_type = std::uint64_t;

    explicit RandomStream(std::uint64_t seed) noexcept {
        std::uint64_t x = seed;
        for (auto &s : s_) {
            x += 0x9E3779B97F4A7C15ULL;
            s = avalanche64(x);
        }
    }

    static constexpr result_type min() noexcept {
        return 0;
    }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

   private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

}  // namespace ptsbe

#endif
