// Copyright 2026 The leofuse Authors
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

#ifndef LEO_RNG_HPP_
#define LEO_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace leo {

// SplitMix64. Used instead of <random> engines/distributions because the
// standard distributions are implementation-defined and the dataset /
// checkpoint byte-identity guarantees require one fixed bit stream.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, one value per call (the sibling draw is discarded so the
  // stream stays position-independent).
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // integer in [0, n)
  uint64_t below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

 private:
  uint64_t state_;
};

// Stateless counter-based stream: hash of a key tuple, mapped to [0, 1).
// Deterministic in (seed, a, b, c, index) regardless of evaluation order.
inline uint64_t hash_counter(uint64_t seed, uint64_t a, uint64_t b, uint64_t c, uint64_t index) {
  uint64_t z = seed;
  z ^= 0x9e3779b97f4a7c15ULL + a + (z << 6) + (z >> 2);
  z ^= 0x9e3779b97f4a7c15ULL + b + (z << 6) + (z >> 2);
  z ^= 0x9e3779b97f4a7c15ULL + c + (z << 6) + (z >> 2);
  z ^= 0x9e3779b97f4a7c15ULL + index + (z << 6) + (z >> 2);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double uniform_counter(uint64_t seed, uint64_t a, uint64_t b, uint64_t c, uint64_t index) {
  return static_cast<double>(hash_counter(seed, a, b, c, index) >> 11) * 0x1.0p-53;
}

}  // namespace leo

#endif  // LEO_RNG_HPP_
