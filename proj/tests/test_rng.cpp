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

#include <catch2/catch_amalgamated.hpp>

#include "vprtempo/rng.hpp"

using vprtempo::RandomStream;
using vprtempo::splitSeed;

TEST_CASE("same seed produces the same stream") {
  RandomStream a(1234), b(1234);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.raw() == b.raw());
}

TEST_CASE("split seeds differ across streams and masters") {
  REQUIRE(splitSeed(42, 0) != splitSeed(42, 1));
  REQUIRE(splitSeed(42, 0) != splitSeed(43, 0));
  REQUIRE(splitSeed(42, 7) == splitSeed(42, 7));
}

TEST_CASE("uniform ranges") {
  RandomStream rng(99);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniformOpen01();
    REQUIRE(u > 0.0);
    REQUIRE(u <= 1.0);
  }
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniformIn(-2.0, 3.0);
    REQUIRE(u >= -2.0);
    REQUIRE(u < 3.0);
  }
}

TEST_CASE("bernoulli endpoints are degenerate") {
  RandomStream rng(5);
  for (int i = 0; i < 1000; ++i) REQUIRE_FALSE(rng.bernoulli(0.0));
  for (int i = 0; i < 1000; ++i) REQUIRE(rng.bernoulli(1.0));
}

TEST_CASE("gaussian moments are roughly standard") {
  RandomStream rng(2024);
  const int n = 50000;
  double sum = 0.0, sumSq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sumSq += g * g;
  }
  const double mean = sum / n;
  const double var = sumSq / n - mean * mean;
  REQUIRE(std::abs(mean) < 0.02);
  REQUIRE(var == Catch::Approx(1.0).margin(0.05));
}
