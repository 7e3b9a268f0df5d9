// Copyright 2026 The vprtempo-cpp Authors
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

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace vprtempo {

/// Derives an independent stream seed from a master seed and a stream index
/// (SplitMix64 finalizer over the golden-gamma sequence). Module seeds,
/// shuffle seeds and synthetic-noise seeds are all split this way so that
/// every component of an ensemble is reproducible from one master seed.
inline std::uint64_t splitSeed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seeded uniform/gaussian source. The raw engine is std::mt19937_64 (fully
/// specified by the standard); all value mappings are written out explicitly
/// instead of going through std::*_distribution, so a given seed produces the
/// same stream on every platform and standard library.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in (0, 1]. Used for weight draws that must never be 0.
  double uniformOpen01() { return 1.0 - uniform01(); }

  /// Uniform double in [lo, hi).
  double uniformIn(double lo, double hi) {
    return lo + uniform01() * (hi - lo);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Standard normal via Box-Muller (deterministic, spare value cached).
  double gaussian() {
    if (hasSpare_) {
      hasSpare_ = false;
      return spare_;
    }
    const double u1 = uniformOpen01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    hasSpare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool hasSpare_ = false;
};

}  // namespace vprtempo
