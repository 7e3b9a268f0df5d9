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
#include <cmath>

#include "vprtempo/image.hpp"
#include "vprtempo/rng.hpp"

using namespace vprtempo;

namespace {

Image randomImage(int w, int h, RandomStream& rng, double lo = 0.0, double hi = 255.0) {
  Image img = Image::constant(w, h, 0.0f);
  for (float& v : img.data)
    v = static_cast<float>(std::floor(rng.uniformIn(lo, hi + 1.0)));
  return img;
}

}  // namespace

TEST_CASE("gamma on a uniform mid-gray image is close to identity") {
  const Image img = Image::constant(28, 28, 127.0f);
  const Image out = gammaCorrect(img, 0.5);
  // Direct evaluation of the exponent rule: gamma = ln(0.5*255)/ln(127).
  const double gamma = std::log(0.5 * 255.0) / std::log(127.0);
  const double expected = std::pow(127.0, gamma);
  REQUIRE(gamma == Catch::Approx(1.0).margin(0.01));
  for (float v : out.data) {
    REQUIRE(v == Catch::Approx(expected).margin(1e-4));
    REQUIRE(std::abs(v - 127.0) <= 1.0);
  }
}

TEST_CASE("gamma clamps bright pixels at 255 when the exponent exceeds 1") {
  Image img = Image::constant(10, 10, 50.0f);  // dark mean -> gamma > 1
  img.data[17] = 255.0f;
  const Image out = gammaCorrect(img, 0.5);
  REQUIRE(out.data[17] == 255.0f);
}

TEST_CASE("gamma fixes black pixels") {
  Image img = Image::constant(4, 4, 200.0f);
  img.data[3] = 0.0f;
  const Image out = gammaCorrect(img, 0.5);
  REQUIRE(out.data[3] == 0.0f);
}

TEST_CASE("gamma fixes both endpoints whenever the exponent is >= 1") {
  // Bright images (mean > lambda*255) give gamma < 1, where the plain power
  // rule maps 255 below 255; the fixed-point property therefore holds on the
  // gamma >= 1 domain (mean <= lambda*255).
  RandomStream rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Image img = randomImage(14, 14, rng, 0.0, 120.0);
    img.data[0] = 0.0f;
    img.data[1] = 255.0f;
    double mean = 0.0;
    for (float v : img.data) mean += v;
    mean /= img.data.size();
    if (mean <= 1.0 || mean > 127.5) continue;
    const Image out = gammaCorrect(img, 0.5);
    REQUIRE(out.data[0] == 0.0f);
    REQUIRE(out.data[1] == 255.0f);
  }
}

TEST_CASE("gamma rejects empty images and bad lambda") {
  REQUIRE_THROWS_AS(gammaCorrect(Image{}, 0.5), InvalidInputError);
  REQUIRE_THROWS_AS(gammaCorrect(Image::constant(2, 2, 9.0f), 0.0), InvalidInputError);
  REQUIRE_THROWS_AS(gammaCorrect(Image::constant(2, 2, 9.0f), 1.5), InvalidInputError);
}

TEST_CASE("gamma returns degenerate images unchanged") {
  const Image zeros = Image::constant(5, 5, 0.0f);
  const Image out = gammaCorrect(zeros, 0.5);
  REQUIRE(out.data == zeros.data);
}

TEST_CASE("literal gamma formula is the printed all-or-nothing curve") {
  Image img = Image::constant(4, 4, 100.0f);
  img.data[0] = 0.0f;
  img.data[1] = 1.0f;
  img.data[2] = 2.0f;
  const Image out = gammaCorrect(img, 0.5, GammaFormula::Literal);
  // gamma = e^(127.5 - mean) is astronomically large: everything above 1
  // saturates, 0 and 1 are fixed.
  REQUIRE(out.data[0] == 0.0f);
  REQUIRE(out.data[1] == 1.0f);
  REQUIRE(out.data[2] == 255.0f);
  REQUIRE(out.data[5] == 255.0f);
}

TEST_CASE("identity resize is bit-exact") {
  RandomStream rng(3);
  const Image img = randomImage(28, 28, rng);
  const Image out = resizeBilinear(img, 28, 28);
  REQUIRE(out.data == img.data);
}

TEST_CASE("resizing a constant image keeps the constant") {
  const Image img = Image::constant(56, 56, 100.0f);
  const Image out = resizeBilinear(img, 28, 28);
  REQUIRE(out.width == 28);
  REQUIRE(out.height == 28);
  for (float v : out.data) REQUIRE(v == 100.0f);
}

TEST_CASE("upscaling a ramp is monotone and matches direct bilinear evaluation") {
  Image img;
  img.width = 2;
  img.height = 1;
  img.data = {0.0f, 255.0f};
  const Image out = resizeBilinear(img, 4, 1);
  REQUIRE(out.width == 4);
  // Source coordinates with pixel-center alignment: (x+0.5)*0.5 - 0.5,
  // clamped -> {0, 0.25, 0.75, 1}.
  const std::vector<float> expected = {0.0f, 63.75f, 191.25f, 255.0f};
  for (int i = 0; i < 4; ++i) REQUIRE(out.data[i] == Catch::Approx(expected[i]));
  for (int i = 1; i < 4; ++i) REQUIRE(out.data[i] >= out.data[i - 1]);
}

TEST_CASE("resize rejects zero-dimension targets") {
  const Image img = Image::constant(4, 4, 1.0f);
  REQUIRE_THROWS_AS(resizeBilinear(img, 0, 4), InvalidInputError);
  REQUIRE_THROWS_AS(resizeBilinear(img, 4, 0), InvalidInputError);
}

TEST_CASE("patch normalization maps constant images to mid-gray") {
  const Image img = Image::constant(28, 28, 77.0f);
  const Image out = patchNormalize(img, PreprocessConfig{});
  for (float v : out.data) REQUIRE(v == 128.0f);  // 127.5 rounded half up
}

TEST_CASE("patch normalization standardizes a two-valued patch symmetrically") {
  PreprocessConfig cfg;
  cfg.targetWidth = 2;
  cfg.targetHeight = 1;
  cfg.patchWidth = 2;
  cfg.patchHeight = 1;
  Image img;
  img.width = 2;
  img.height = 1;
  img.data = {0.0f, 255.0f};
  const Image out = patchNormalize(img, cfg);
  // mean 127.5, sd 127.5 -> z = -1/+1 -> 127.5 -/+ 42.5.
  REQUIRE(out.data[0] == 85.0f);
  REQUIRE(out.data[1] == 170.0f);
  REQUIRE(out.data[0] + out.data[1] == 255.0f);
}

TEST_CASE("patch normalization removes non-saturating additive shifts") {
  RandomStream rng(11);
  const Image img = randomImage(28, 28, rng, 0.0, 205.0);
  Image shifted = img;
  for (float& v : shifted.data) v += 50.0f;
  const PreprocessConfig cfg;
  const Image a = patchNormalize(img, cfg);
  const Image b = patchNormalize(shifted, cfg);
  REQUIRE(a.data == b.data);
}

TEST_CASE("a saturating shift differs only where the patch clipped") {
  RandomStream rng(13);
  Image img = randomImage(28, 28, rng, 0.0, 205.0);
  img.at(3, 4) = 240.0f;  // will clip after +50
  Image shifted = img;
  for (float& v : shifted.data)
    v = std::min(v + 50.0f, 255.0f);
  const PreprocessConfig cfg;
  const Image a = patchNormalize(img, cfg);
  const Image b = patchNormalize(shifted, cfg);
  for (int py = 0; py < 28; py += 7)
    for (int px = 0; px < 28; px += 7) {
      bool clipped = false;
      for (int y = 0; y < 7 && !clipped; ++y)
        for (int x = 0; x < 7 && !clipped; ++x)
          clipped = img.at(px + x, py + y) + 50.0f > 255.0f;
      bool identical = true;
      for (int y = 0; y < 7 && identical; ++y)
        for (int x = 0; x < 7 && identical; ++x)
          identical = a.at(px + x, py + y) == b.at(px + x, py + y);
      if (!clipped) REQUIRE(identical);
    }
}

TEST_CASE("patch normalization is invariant to exact affine rescaling") {
  RandomStream rng(17);
  const Image img = randomImage(28, 28, rng, 10.0, 60.0);
  const PreprocessConfig cfg;
  const Image base = patchNormalize(img, cfg);
  for (const double a : {2.0, 4.0, 0.5}) {
    Image scaled = img;
    for (float& v : scaled.data) v = static_cast<float>(a * v + 8.0);
    const Image out = patchNormalize(scaled, cfg);
    REQUIRE(out.data == base.data);
  }
}

TEST_CASE("patch normalization rejects non-tiling patch sizes") {
  PreprocessConfig cfg;
  cfg.patchWidth = 5;  // 28 % 5 != 0
  REQUIRE_THROWS_AS(patchNormalize(Image::constant(28, 28, 1.0f), cfg),
                    InvalidInputError);
  REQUIRE_THROWS_AS(patchNormalize(Image::constant(14, 14, 1.0f), PreprocessConfig{}),
                    InvalidInputError);
}

TEST_CASE("spike encoding maps the 8-bit range onto [0,1]") {
  Image img;
  img.width = 3;
  img.height = 1;
  img.data = {255.0f, 0.0f, 51.0f};
  const auto amps = encodeSpikes<double>(img);
  REQUIRE(amps[0] == 1.0);
  REQUIRE(amps[1] == 0.0);
  REQUIRE(amps[2] == 0.2);
}

TEST_CASE("spike encoding is monotone in intensity") {
  RandomStream rng(23);
  Image img = randomImage(16, 16, rng);
  const auto amps = encodeSpikes<double>(img);
  for (std::size_t k = 0; k + 1 < img.data.size(); ++k) {
    if (img.data[k] <= img.data[k + 1])
      REQUIRE(amps[static_cast<Eigen::Index>(k)] <= amps[static_cast<Eigen::Index>(k + 1)]);
  }
}

TEST_CASE("preprocess output shape, determinism and range") {
  RandomStream rng(31);
  const PreprocessConfig cfg;
  for (int trial = 0; trial < 25; ++trial) {
    const Image img = randomImage(40 + trial, 35, rng);
    const auto a = preprocess<double>(img, cfg);
    const auto b = preprocess<double>(img, cfg);
    REQUIRE(a.size() == 28 * 28);
    REQUIRE((a.array() == b.array()).all());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      REQUIRE(a[i] >= 0.0);
      REQUIRE(a[i] <= 1.0);
    }
  }
}

TEST_CASE("preprocessing a constant image gives mid-gray amplitudes") {
  const Image img = Image::constant(64, 64, 93.0f);
  const auto amps = preprocess<double>(img, PreprocessConfig{});
  for (Eigen::Index i = 0; i < amps.size(); ++i)
    REQUIRE(amps[i] == Catch::Approx(128.0 / 255.0).epsilon(1e-12));
}

TEST_CASE("sad preprocessing skips patch normalization by default") {
  RandomStream rng(41);
  const Image img = randomImage(40, 40, rng);
  const PreprocessConfig cfg;
  const Image sad = preprocessForSad(img, cfg);
  const Image full = preprocessForSad(img, cfg, true);
  REQUIRE(sad.width == 28);
  REQUIRE(sad.height == 28);
  const Image resized = resizeBilinear(gammaCorrect(img, cfg.lambda), 28, 28);
  for (std::size_t k = 0; k < sad.data.size(); ++k)
    REQUIRE(sad.data[k] == detail::quantize8(resized.data[k]));
  REQUIRE(full.data == patchNormalize(resized, cfg).data);
}
