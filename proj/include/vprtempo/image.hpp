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

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "vprtempo/errors.hpp"

namespace vprtempo {

/// Grayscale intensity grid, row-major, values in [0, 255]. Freshly decoded
/// images carry integral 8-bit values; the preprocessing pipeline keeps real
/// values throughout and quantizes back to the 8-bit grid only at the
/// patch-normalization boundary.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // width * height, row-major

  bool empty() const { return width <= 0 || height <= 0 || data.empty(); }
  std::size_t size() const { return data.size(); }
  float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

  static Image constant(int w, int h, float value) {
    Image img;
    img.width = w;
    img.height = h;
    img.data.assign(static_cast<std::size_t>(w) * h, value);
    return img;
  }
};

/// Exponent rule for intensity normalization. LogRatio maps the image mean to
/// mid-gray (gamma = ln(lambda*255)/ln(mu)). Literal keeps the printed form
/// gamma = e^(lambda*255 - mu), which explodes to an all-or-nothing transfer
/// curve for any realistic mean and is retained only for comparison.
enum class GammaFormula { LogRatio, Literal };

inline const char* toString(GammaFormula g) {
  return g == GammaFormula::LogRatio ? "log_ratio" : "literal";
}

struct PreprocessConfig {
  double lambda = 0.5;
  int targetWidth = 28;
  int targetHeight = 28;
  int patchWidth = 7;
  int patchHeight = 7;
  GammaFormula gammaFormula = GammaFormula::LogRatio;

  void validate() const {
    if (!(lambda > 0.0 && lambda <= 1.0))
      throw InvalidInputError("preprocess: lambda must be in (0,1]");
    if (targetWidth < 1 || targetHeight < 1)
      throw InvalidInputError("preprocess: target dimensions must be >= 1");
    if (patchWidth < 1 || patchHeight < 1)
      throw InvalidInputError("preprocess: patch dimensions must be >= 1");
    if (targetWidth % patchWidth != 0 || targetHeight % patchHeight != 0)
      throw InvalidInputError("preprocess: patch grid must tile the target image exactly");
  }
};

/// Intensity normalization toward mid-gray. Pixels are mapped to rho^gamma and
/// clamped to [0, 255]. Degenerate inputs (mean <= 1, or lambda*255 <= 1,
/// where the exponent formula has no usable value) are returned unchanged
/// with a warning on stderr.
inline Image gammaCorrect(const Image& img, double lambda,
                          GammaFormula formula = GammaFormula::LogRatio) {
  if (img.empty()) throw InvalidInputError("gammaCorrect: empty image");
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw InvalidInputError("gammaCorrect: lambda must be in (0,1]");

  double sum = 0.0;
  for (float v : img.data) sum += v;
  const double mu = sum / static_cast<double>(img.data.size());
  const double target = lambda * 255.0;
  if (mu <= 1.0 || target <= 1.0) {
    std::cerr << "vprtempo: warning: gamma correction skipped (degenerate image mean "
              << mu << ")\n";
    return img;
  }

  double gamma;
  if (formula == GammaFormula::LogRatio) {
    gamma = std::log(target) / std::log(mu);
  } else {
    gamma = std::exp(target - mu);
  }

  Image out = img;
  for (float& v : out.data) {
    const double p = std::pow(static_cast<double>(v), gamma);
    v = static_cast<float>(std::min(std::max(p, 0.0), 255.0));
  }
  return out;
}

/// Bilinear resize with pixel-center alignment. Identity targets return the
/// input bit-for-bit; constant images stay constant (std::lerp is exact when
/// both endpoints are equal).
inline Image resizeBilinear(const Image& img, int w, int h) {
  if (img.empty()) throw InvalidInputError("resize: empty image");
  if (w < 1 || h < 1) throw InvalidInputError("resize: target dimensions must be >= 1");

  Image out;
  out.width = w;
  out.height = h;
  out.data.resize(static_cast<std::size_t>(w) * h);

  const double scaleX = static_cast<double>(img.width) / w;
  const double scaleY = static_cast<double>(img.height) / h;
  for (int y = 0; y < h; ++y) {
    double sy = (y + 0.5) * scaleY - 0.5;
    sy = std::min(std::max(sy, 0.0), static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < w; ++x) {
      double sx = (x + 0.5) * scaleX - 0.5;
      sx = std::min(std::max(sx, 0.0), static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double fx = sx - x0;
      const double top = std::lerp(static_cast<double>(img.at(x0, y0)),
                                   static_cast<double>(img.at(x1, y0)), fx);
      const double bot = std::lerp(static_cast<double>(img.at(x0, y1)),
                                   static_cast<double>(img.at(x1, y1)), fx);
      out.at(x, y) = static_cast<float>(std::lerp(top, bot, fy));
    }
  }
  return out;
}

namespace detail {

/// Round half up and clamp to the 8-bit grid.
inline float quantize8(double v) {
  const double r = std::floor(v + 0.5);
  return static_cast<float>(std::min(std::max(r, 0.0), 255.0));
}

}  // namespace detail

/// Per-patch standardization: each non-overlapping patch is shifted to zero
/// mean / unit standard deviation and remapped to intensities via
/// 127.5 + 127.5*(z/3), clamped (a 3-sigma window). Patches with no variance
/// come out uniform mid-gray. Output is quantized to the 8-bit grid; this is
/// the 8-bit boundary of the whole pipeline.
inline Image patchNormalize(const Image& img, const PreprocessConfig& cfg) {
  cfg.validate();
  if (img.width != cfg.targetWidth || img.height != cfg.targetHeight)
    throw InvalidInputError("patchNormalize: image dimensions must equal the target dimensions");

  Image out = img;
  const int pw = cfg.patchWidth;
  const int ph = cfg.patchHeight;
  const int n = pw * ph;
  for (int py = 0; py < img.height; py += ph) {
    for (int px = 0; px < img.width; px += pw) {
      double sum = 0.0;
      for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x) sum += img.at(px + x, py + y);
      const double mean = sum / n;
      double var = 0.0;
      for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x) {
          const double d = img.at(px + x, py + y) - mean;
          var += d * d;
        }
      const double sd = std::sqrt(var / n);
      for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x) {
          double v;
          if (sd <= 1e-9) {
            v = 127.5;
          } else {
            const double z = (img.at(px + x, py + y) - mean) / sd;
            v = 127.5 + 127.5 * (z / 3.0);
          }
          out.at(px + x, py + y) = detail::quantize8(v);
        }
    }
  }
  return out;
}

/// Spike-amplitude encoding: amplitude[k] = intensity[k] / 255, in [0, 1].
/// The amplitude stands for the timing of one spike within the abstracted
/// theta-cycle timestep (1.0 = full spike, 0.0 = no spike).
template <typename Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> encodeSpikes(const Image& img) {
  if (img.empty()) throw InvalidInputError("encodeSpikes: empty image");
  Eigen::Vector<Scalar, Eigen::Dynamic> amps(img.data.size());
  for (std::size_t k = 0; k < img.data.size(); ++k)
    amps[static_cast<Eigen::Index>(k)] =
        static_cast<Scalar>(static_cast<double>(img.data[k]) / 255.0);
  return amps;
}

/// Full input pipeline: gamma correction, bilinear resize, patch
/// normalization, spike-amplitude encoding.
template <typename Scalar>
Eigen::Vector<Scalar, Eigen::Dynamic> preprocess(const Image& img,
                                                 const PreprocessConfig& cfg) {
  cfg.validate();
  const Image corrected = gammaCorrect(img, cfg.lambda, cfg.gammaFormula);
  const Image resized = resizeBilinear(corrected, cfg.targetWidth, cfg.targetHeight);
  const Image normalized = patchNormalize(resized, cfg);
  return encodeSpikes<Scalar>(normalized);
}

/// Pipeline for the sum-of-absolute-differences baseline: gamma correction
/// and resize only (optionally the full pipeline for ablation), quantized to
/// the 8-bit grid.
inline Image preprocessForSad(const Image& img, const PreprocessConfig& cfg,
                              bool fullPipeline = false) {
  cfg.validate();
  const Image corrected = gammaCorrect(img, cfg.lambda, cfg.gammaFormula);
  Image resized = resizeBilinear(corrected, cfg.targetWidth, cfg.targetHeight);
  if (fullPipeline) return patchNormalize(resized, cfg);
  for (float& v : resized.data) v = detail::quantize8(v);
  return resized;
}

}  // namespace vprtempo
