// Copyright 2026 The rbopt Authors
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

#ifndef RBOPT_RANDOM_HPP
#define RBOPT_RANDOM_HPP

#include <cstdint>
#include <limits>

namespace rbopt {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Counter-based generator. Each (seed, stream, substream) triple names an
/// independent sequence, so parallel work can derive its randomness from
/// indices alone. Satisfies UniformRandomBitGenerator.
class StreamRng {
   public:
    using result_type = std::uint64_t;

    explicit StreamRng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t substream = 0) noexcept
        : key_(detail::splitmix64(detail::splitmix64(detail::splitmix64(seed) ^ stream) ^ (substream * 0xD1B54A32D192ED03ULL))) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return detail::splitmix64(key_ + 0x632BE59BD9B4E019ULL * ++counter_); }

    /// Uniform double in [0, 1).
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound) without modulo bias.
    std::uint64_t below(std::uint64_t bound) noexcept {
        const std::uint64_t limit = max() - max() % bound;
        std::uint64_t x;
        do x = (*this)();
        while (x >= limit);
        return x % bound;
    }

   private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace rbopt

#endif  // RBOPT_RANDOM_HPP
