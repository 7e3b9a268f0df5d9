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

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <string>

#include "vprtempo/errors.hpp"
#include "vprtempo/image.hpp"

namespace vprtempo {

/// Decodes a PNG or JPEG file into an 8-bit grayscale intensity grid.
/// Color inputs are converted with BT.601 luma weights during decode.
inline Image loadImage(const std::string& path) {
  cv::Mat mat = cv::imread(path, cv::IMREAD_GRAYSCALE);
  if (mat.empty()) throw IoError("failed to load image: " + path);
  Image img;
  img.width = mat.cols;
  img.height = mat.rows;
  img.data.resize(static_cast<std::size_t>(mat.cols) * mat.rows);
  for (int y = 0; y < mat.rows; ++y) {
    const std::uint8_t* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < mat.cols; ++x)
      img.data[static_cast<std::size_t>(y) * mat.cols + x] = static_cast<float>(row[x]);
  }
  return img;
}

/// Writes an intensity grid as an 8-bit grayscale PNG (round half up).
inline void savePng(const Image& img, const std::string& path) {
  if (img.empty()) throw InvalidInputError("savePng: empty image");
  cv::Mat mat(img.height, img.width, CV_8UC1);
  for (int y = 0; y < img.height; ++y) {
    std::uint8_t* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width; ++x)
      row[x] = static_cast<std::uint8_t>(detail::quantize8(img.at(x, y)));
  }
  if (!cv::imwrite(path, mat)) throw IoError("failed to write image: " + path);
}

}  // namespace vprtempo
