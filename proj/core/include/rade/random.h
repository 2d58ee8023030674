// Copyright 2026 The RADE Toolkit Authors.
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

#ifndef RADE_RANDOM_H_
#define RADE_RANDOM_H_

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace rade {

// Portable, fully specified helpers. The standard distributions are
// implementation-defined, so anything that must be bit-reproducible goes
// through these instead.

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for the k-th independent stream derived from a base seed.
inline std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t stream) {
  return SplitMix64(SplitMix64(base) ^ (stream * 0xd1b54a32d192ed03ULL));
}

// Uniform integer in [0, n) by rejection sampling.
inline std::uint64_t UniformIndex(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

// Uniform real in [0, 1) with 53 random bits.
inline double UniformReal(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void Shuffle(std::span<T> items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[UniformIndex(rng, i)]);
  }
}

}  // namespace rade

#endif  // RADE_RANDOM_H_
