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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "vprtempo/ensemble.hpp"
#include "vprtempo/errors.hpp"
#include "vprtempo/image.hpp"
#include "vprtempo/image_io.hpp"
#include "vprtempo/rng.hpp"

namespace vprtempo {

enum class VariantRole { Train, Query };

inline const char* toString(VariantRole r) {
  return r == VariantRole::Train ? "train" : "query";
}

/// One traversal variant: an ordered image sequence in a directory.
/// Ordering is lexicographic over filenames after skip-list filtering, so two
/// scans of the same directory always agree.
struct TraversalSpec {
  std::string name;
  std::string directory;
  VariantRole role = VariantRole::Train;
  std::vector<std::string> orderedFiles;  // absolute/joined paths, sorted
};

/// Aligned multi-variant traversal: place i is the i-th subsampled image of
/// every variant (the benchmark traversals are positionally aligned).
struct TraversalDataset {
  int places = 0;
  int stride = 1;
  std::vector<TraversalSpec> variants;
  std::vector<std::vector<std::string>> files;  // [variant][place]

  std::vector<int> variantIndices(VariantRole role) const {
    std::vector<int> idx;
    for (int v = 0; v < static_cast<int>(variants.size()); ++v)
      if (variants[v].role == role) idx.push_back(v);
    return idx;
  }
};

/// Positional ground truth: query i belongs to reference place i (modulo the
/// place count when several query traversals are stacked). A prediction is
/// correct iff it lies within `tolerance` indices of the true place
/// (tolerance 0 = exact match only).
struct GroundTruth {
  int queries = 0;
  int tolerance = 0;
  int period = 0;  // 0 = identity; otherwise trueIndex = query % period

  int trueIndex(int query) const { return period > 0 ? query % period : query; }
  bool correct(int query, int predicted) const {
    return std::abs(predicted - trueIndex(query)) <= tolerance;
  }
};

inline GroundTruth groundTruthIdentity(int n, int tolerance = 0) {
  if (n < 1) throw InvalidInputError("groundTruthIdentity: n must be >= 1");
  if (tolerance < 0) throw InvalidInputError("groundTruthIdentity: tolerance must be >= 0");
  return GroundTruth{n, tolerance, 0};
}

/// Ground truth for `queries` rows made of stacked query traversals over
/// `places` reference places.
inline GroundTruth groundTruthCyclic(int queries, int places, int tolerance = 0) {
  if (queries < 1 || places < 1)
    throw InvalidInputError("groundTruthCyclic: sizes must be >= 1");
  return GroundTruth{queries, tolerance, places};
}

namespace detail {

inline bool hasImageExtension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

inline std::set<std::string> readSkipList(const std::filesystem::path& root) {
  std::set<std::string> skip;
  std::ifstream in(root / "skip.txt");
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) skip.insert(line);
  }
  return skip;
}

}  // namespace detail

/// Scans a variant directory: image files, minus the skip list, sorted.
inline TraversalSpec scanTraversal(const std::string& name, const std::string& directory,
                                   VariantRole role,
                                   const std::set<std::string>& skip = {}) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory))
    throw DatasetError("traversal directory does not exist: " + directory);
  TraversalSpec spec;
  spec.name = name;
  spec.directory = directory;
  spec.role = role;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (!entry.is_regular_file() || !detail::hasImageExtension(entry.path())) continue;
    if (skip.count(entry.path().filename().string())) continue;
    spec.orderedFiles.push_back(entry.path().string());
  }
  std::sort(spec.orderedFiles.begin(), spec.orderedFiles.end());
  return spec;
}

/// Index-stride subsampling: every stride-th file in sorted order, up to
/// `limit` images (limit 0 = unlimited).
inline std::vector<std::string> loadTraversal(const TraversalSpec& spec, int stride,
                                              int limit = 0) {
  if (stride < 1) throw InvalidInputError("loadTraversal: stride must be >= 1");
  if (spec.orderedFiles.empty())
    throw DatasetError("traversal has no images: " + spec.directory);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < spec.orderedFiles.size(); i += stride) {
    if (limit > 0 && static_cast<int>(out.size()) >= limit) break;
    out.push_back(spec.orderedFiles[i]);
  }
  return out;
}

/// Aligns variants by sequence position. The place count is the shortest
/// subsampled variant; query-role variants are carried alongside but held
/// out of training.
inline TraversalDataset alignVariants(const std::vector<TraversalSpec>& specs,
                                      int stride, int limit = 0) {
  if (specs.empty()) throw DatasetError("alignVariants: no traversal variants");
  bool hasTrain = false;
  for (const auto& s : specs) hasTrain |= s.role == VariantRole::Train;
  if (!hasTrain) throw DatasetError("alignVariants: need at least one train-role variant");

  TraversalDataset ds;
  ds.stride = stride;
  ds.variants = specs;
  std::size_t n = SIZE_MAX;
  for (const auto& s : specs) {
    ds.files.push_back(loadTraversal(s, stride, limit));
    n = std::min(n, ds.files.back().size());
  }
  if (n == 0) throw DatasetError("alignVariants: zero aligned places");
  ds.places = static_cast<int>(n);
  for (auto& f : ds.files) f.resize(n);
  return ds;
}

/// Reads a dataset root: <root>/<variant>/*.png|jpg, optional skip.txt and
/// manifest.json ({"stride": int, "limit": int, "variants": [{"name": ...,
/// "role": "train"|"query"}]}). Without a manifest, every subdirectory is a
/// train-role variant unless its name is listed in queryVariantNames.
inline TraversalDataset loadDatasetRoot(const std::string& root, int strideOverride = 0,
                                        int limitOverride = -1,
                                        const std::set<std::string>& queryVariantNames = {}) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw DatasetError("dataset root does not exist: " + root);
  const auto skip = detail::readSkipList(root);

  int stride = 1;
  int limit = 0;
  std::vector<std::pair<std::string, VariantRole>> declared;
  const fs::path manifestPath = fs::path(root) / "manifest.json";
  if (fs::exists(manifestPath)) {
    std::ifstream in(manifestPath);
    nlohmann::json manifest;
    try {
      in >> manifest;
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError("invalid manifest.json: " + std::string(e.what()));
    }
    stride = manifest.value("stride", 1);
    limit = manifest.value("limit", 0);
    for (const auto& v : manifest.value("variants", nlohmann::json::array())) {
      const std::string name = v.at("name").get<std::string>();
      const std::string role = v.value("role", "train");
      if (role != "train" && role != "query")
        throw DatasetError("manifest.json: unknown role '" + role + "'");
      declared.emplace_back(name,
                            role == "train" ? VariantRole::Train : VariantRole::Query);
    }
  }
  if (declared.empty()) {
    for (const auto& entry : fs::directory_iterator(root))
      if (entry.is_directory()) {
        const std::string name = entry.path().filename().string();
        const VariantRole role = queryVariantNames.count(name) ? VariantRole::Query
                                                               : VariantRole::Train;
        declared.emplace_back(name, role);
      }
    std::sort(declared.begin(), declared.end());
  }
  if (strideOverride > 0) stride = strideOverride;
  if (limitOverride >= 0) limit = limitOverride;

  std::vector<TraversalSpec> specs;
  for (const auto& [name, role] : declared)
    specs.push_back(scanTraversal(name, (fs::path(root) / name).string(), role, skip));
  return alignVariants(specs, stride, limit);
}

/// Decodes and preprocesses every image of the selected variants into spike
/// vectors (place-major). Decode failures name the offending file.
template <typename Scalar>
EncodedTraversals<Scalar> encodeDataset(const TraversalDataset& ds,
                                        const PreprocessConfig& cfg, VariantRole role,
                                        int workers = 0) {
  const std::vector<int> idx = ds.variantIndices(role);
  if (idx.empty())
    throw DatasetError(std::string("dataset has no ") + toString(role) + "-role variant");
  EncodedTraversals<Scalar> enc;
  enc.placeCount = ds.places;
  enc.variantCount = static_cast<int>(idx.size());
  enc.spikes.resize(static_cast<std::size_t>(ds.places) * idx.size());

  const std::size_t total = enc.spikes.size();
  std::atomic<std::size_t> next{0};
  std::mutex errorMutex;
  std::exception_ptr firstError;
  auto work = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= total) return;
      const int place = static_cast<int>(k / idx.size());
      const int v = static_cast<int>(k % idx.size());
      const std::string& path = ds.files[idx[v]][place];
      try {
        enc.spikes[k] = preprocess<Scalar>(loadImage(path), cfg);
      } catch (...) {
        std::lock_guard<std::mutex> lock(errorMutex);
        if (!firstError) firstError = std::current_exception();
        next.store(total);
        return;
      }
    }
  };
  int n = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(1, std::min<int>(n, static_cast<int>(total)));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (firstError) std::rethrow_exception(firstError);
  return enc;
}

struct SynthOptions {
  int places = 100;
  int trainVariants = 2;   // variant 0 is the noiseless base
  double noiseSigma = 0.0; // pixel noise added to train variants past the base
  int queryVariants = 1;
  double querySigma = 0.0;
  int width = 64;
  int height = 64;
  std::uint64_t seed = 42;
};

namespace detail {

/// Spatially smoothed random base image: uniform noise, two 5x5 box-blur
/// passes (clamped borders).
inline Image synthBaseImage(int width, int height, RandomStream& rng) {
  Image img = Image::constant(width, height, 0.0f);
  for (float& v : img.data) v = static_cast<float>(rng.uniformIn(0.0, 255.0));
  for (int pass = 0; pass < 2; ++pass) {
    Image blurred = img;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        double sum = 0.0;
        for (int dy = -2; dy <= 2; ++dy)
          for (int dx = -2; dx <= 2; ++dx) {
            const int sx = std::clamp(x + dx, 0, width - 1);
            const int sy = std::clamp(y + dy, 0, height - 1);
            sum += img.at(sx, sy);
          }
        blurred.at(x, y) = static_cast<float>(sum / 25.0);
      }
    img = std::move(blurred);
  }
  return img;
}

inline Image addPixelNoise(const Image& base, double sigma, RandomStream& rng) {
  Image out = base;
  if (sigma > 0.0)
    for (float& v : out.data)
      v = static_cast<float>(
          std::clamp(static_cast<double>(v) + sigma * rng.gaussian(), 0.0, 255.0));
  return out;
}

}  // namespace detail

/// Writes a synthetic traversal dataset in the standard on-disk layout:
/// per-place smoothed random base images; train variant 0 is the base,
/// further train variants add i.i.d. Gaussian pixel noise of noiseSigma, and
/// query variants add querySigma. Emits manifest.json with the roles.
/// Deterministic in the seed.
inline void synthesizeDataset(const std::string& root, const SynthOptions& opts) {
  namespace fs = std::filesystem;
  if (opts.places < 1) throw InvalidInputError("synthesizeDataset: places must be >= 1");
  if (opts.trainVariants < 1)
    throw InvalidInputError("synthesizeDataset: need at least one train variant");
  if (opts.width < 1 || opts.height < 1)
    throw InvalidInputError("synthesizeDataset: image dimensions must be >= 1");

  const int totalVariants = opts.trainVariants + opts.queryVariants;
  std::vector<std::string> names;
  std::vector<VariantRole> roles;
  for (int v = 0; v < opts.trainVariants; ++v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "t%02d", v);
    names.emplace_back(buf);
    roles.push_back(VariantRole::Train);
  }
  for (int q = 0; q < opts.queryVariants; ++q) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "q%02d", q);
    names.emplace_back(buf);
    roles.push_back(VariantRole::Query);
  }

  for (const auto& name : names) fs::create_directories(fs::path(root) / name);

  for (int p = 0; p < opts.places; ++p) {
    RandomStream baseRng(splitSeed(opts.seed, p));
    const Image base = detail::synthBaseImage(opts.width, opts.height, baseRng);
    for (int v = 0; v < totalVariants; ++v) {
      const bool isQuery = roles[v] == VariantRole::Query;
      const double sigma = v == 0 ? 0.0 : (isQuery ? opts.querySigma : opts.noiseSigma);
      RandomStream noiseRng(
          splitSeed(splitSeed(opts.seed, 0x5eed0000u + v), p));
      const Image img = detail::addPixelNoise(base, sigma, noiseRng);
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%06d.png", p);
      savePng(img, (fs::path(root) / names[v] / buf).string());
    }
  }

  nlohmann::json manifest;
  manifest["stride"] = 1;
  manifest["limit"] = 0;
  manifest["variants"] = nlohmann::json::array();
  for (int v = 0; v < totalVariants; ++v)
    manifest["variants"].push_back({{"name", names[v]}, {"role", toString(roles[v])}});
  std::ofstream out(fs::path(root) / "manifest.json");
  out << manifest.dump(2) << "\n";
  if (!out) throw IoError("failed to write manifest.json under " + root);
}

}  // namespace vprtempo
