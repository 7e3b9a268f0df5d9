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

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "vprtempo/config.hpp"
#include "vprtempo/ensemble.hpp"
#include "vprtempo/errors.hpp"

// Model file format (all integers and floats little-endian; layout also
// documented in docs/model_format.md):
//
//   char[4]  magic "VPRT"
//   u32      format version (1)
//   u64      config text length L
//   char[L]  effective config (canonical key=value text)
//   u32      inputSize, featureSize, totalPlaces, placesPerModule, moduleCount
//   u64      master seed
//   per module: u32 outputSize, then f32 matrices/vectors in column-major
//     order: wExc(IF), wInh(IF), thetaF, targetRateF, wExc(FO), wInh(FO),
//     thetaO, targetRateO
//   u64      FNV-1a64 checksum of every preceding byte
//
// Connection masks are implicit: live weights are always > 0 (epsilon reset),
// masked entries exactly 0. Loaded models are inference-only; their annealing
// clocks come back exhausted.

namespace vprtempo {

namespace detail {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline void fnv1a(std::uint64_t& hash, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    hash ^= p[i];
    hash *= kFnvPrime;
  }
}

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

class ChecksumWriter {
 public:
  explicit ChecksumWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot write model file: " + path);
  }
  void write(const void* data, std::size_t len) {
    fnv1a(hash_, data, len);
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
  }
  template <typename T>
  void writeValue(T v) {
    write(&v, sizeof(v));
  }
  void finish() {
    const std::uint64_t h = hash_;
    out_.write(reinterpret_cast<const char*>(&h), sizeof(h));
    out_.flush();
    if (!out_) throw IoError("model write failed");
  }

 private:
  std::ofstream out_;
  std::uint64_t hash_ = kFnvOffset;
};

/// Reads the whole file up front and validates the trailing checksum before
/// any field is interpreted, so corruption anywhere surfaces as a checksum
/// mismatch rather than a downstream parse error.
class ChecksumReader {
 public:
  explicit ChecksumReader(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open model file: " + path);
    buffer_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (buffer_.size() < sizeof(std::uint64_t) + 8)
      throw ModelError("model file truncated: " + path);
    std::uint64_t stored;
    std::memcpy(&stored, buffer_.data() + buffer_.size() - sizeof(stored), sizeof(stored));
    std::uint64_t hash = kFnvOffset;
    fnv1a(hash, buffer_.data(), buffer_.size() - sizeof(stored));
    if (stored != hash) throw ModelError("model checksum mismatch (corrupt file): " + path);
    end_ = buffer_.size() - sizeof(stored);
  }

  void read(void* data, std::size_t len) {
    if (cursor_ + len > end_) throw ModelError("model file truncated");
    std::memcpy(data, buffer_.data() + cursor_, len);
    cursor_ += len;
  }
  template <typename T>
  T readValue() {
    T v;
    read(&v, sizeof(v));
    return v;
  }
  void expectEnd() const {
    if (cursor_ != end_) throw ModelError("trailing bytes after model payload");
  }

 private:
  std::string buffer_;
  std::size_t cursor_ = 0;
  std::size_t end_ = 0;
};

template <typename Scalar>
void writeMatrixF32(ChecksumWriter& w, const MatrixX<Scalar>& m) {
  std::vector<float> buf(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i)
    buf[static_cast<std::size_t>(i)] = static_cast<float>(m.data()[i]);
  w.write(buf.data(), buf.size() * sizeof(float));
}

template <typename Scalar>
void writeVectorF32(ChecksumWriter& w, const VectorX<Scalar>& v) {
  std::vector<float> buf(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    buf[static_cast<std::size_t>(i)] = static_cast<float>(v[i]);
  w.write(buf.data(), buf.size() * sizeof(float));
}

template <typename Scalar>
void readMatrixF32(ChecksumReader& r, MatrixX<Scalar>& m, int rows, int cols) {
  std::vector<float> buf(static_cast<std::size_t>(rows) * cols);
  r.read(buf.data(), buf.size() * sizeof(float));
  m.resize(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<Scalar>(buf[static_cast<std::size_t>(i)]);
}

template <typename Scalar>
void readVectorF32(ChecksumReader& r, VectorX<Scalar>& v, int size) {
  std::vector<float> buf(static_cast<std::size_t>(size));
  r.read(buf.data(), buf.size() * sizeof(float));
  v.resize(size);
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = static_cast<Scalar>(buf[static_cast<std::size_t>(i)]);
}

}  // namespace detail

constexpr std::uint32_t kModelFormatVersion = 1;

struct LoadedModel {
  Ensemble<float> ensemble;
  RunConfig config;
};

/// Persists a trained ensemble plus the effective configuration. Weights are
/// stored at 32-bit precision (the default training precision, so the
/// save/load round trip reproduces inference bit-for-bit).
inline void saveModel(const Ensemble<float>& ens, const RunConfig& config,
                      const std::string& path) {
  if (ens.modules.empty()) throw InvalidInputError("saveModel: empty ensemble");
  detail::ChecksumWriter w(path);
  w.write("VPRT", 4);
  w.writeValue<std::uint32_t>(kModelFormatVersion);
  const std::string cfg = config.canonicalText();
  w.writeValue<std::uint64_t>(cfg.size());
  w.write(cfg.data(), cfg.size());
  w.writeValue<std::uint32_t>(static_cast<std::uint32_t>(ens.inputSize()));
  w.writeValue<std::uint32_t>(static_cast<std::uint32_t>(ens.featureSize()));
  w.writeValue<std::uint32_t>(static_cast<std::uint32_t>(ens.totalPlaces()));
  w.writeValue<std::uint32_t>(static_cast<std::uint32_t>(ens.assignment.placesPerModule));
  w.writeValue<std::uint32_t>(static_cast<std::uint32_t>(ens.moduleCount()));
  w.writeValue<std::uint64_t>(ens.masterSeed);
  for (const auto& net : ens.modules) {
    w.writeValue<std::uint32_t>(static_cast<std::uint32_t>(net.outputSize()));
    const auto& lif = net.layer(LayerId::InputFeature);
    const auto& lfo = net.layer(LayerId::FeatureOutput);
    detail::writeMatrixF32(w, lif.wExc);
    detail::writeMatrixF32(w, lif.wInh);
    detail::writeVectorF32(w, net.state(LayerId::InputFeature).theta);
    detail::writeVectorF32(w, net.state(LayerId::InputFeature).targetRate);
    detail::writeMatrixF32(w, lfo.wExc);
    detail::writeMatrixF32(w, lfo.wInh);
    detail::writeVectorF32(w, net.state(LayerId::FeatureOutput).theta);
    detail::writeVectorF32(w, net.state(LayerId::FeatureOutput).targetRate);
  }
  w.finish();
}

/// Loads a model file, validating magic, version and trailing checksum.
/// Connection masks are rebuilt from the stored weights (non-zero = live).
inline LoadedModel loadModel(const std::string& path) {
  detail::ChecksumReader r(path);
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, "VPRT", 4) != 0)
    throw ModelError("not a model file (bad magic): " + path);
  const auto version = r.readValue<std::uint32_t>();
  if (version != kModelFormatVersion)
    throw ModelError("unsupported model format version " + std::to_string(version));
  const auto cfgLen = r.readValue<std::uint64_t>();
  if (cfgLen > (1u << 20)) throw ModelError("unreasonable config block size");
  std::string cfgText(cfgLen, '\0');
  r.read(cfgText.data(), cfgLen);

  LoadedModel model;
  try {
    std::istringstream is(cfgText);
    model.config = parseConfigText(is, path + " (embedded config)");
  } catch (const ConfigError& e) {
    throw ModelError(std::string("model embeds an unreadable config: ") + e.what());
  }
  const int inputSize = static_cast<int>(r.readValue<std::uint32_t>());
  const int featureSize = static_cast<int>(r.readValue<std::uint32_t>());
  const int totalPlaces = static_cast<int>(r.readValue<std::uint32_t>());
  const int placesPerModule = static_cast<int>(r.readValue<std::uint32_t>());
  const int moduleCount = static_cast<int>(r.readValue<std::uint32_t>());
  const std::uint64_t seed = r.readValue<std::uint64_t>();
  if (inputSize < 1 || featureSize < 1 || totalPlaces < 1 || placesPerModule < 1)
    throw ModelError("model header has invalid sizes");

  Ensemble<float>& ens = model.ensemble;
  ens.assignment = partitionPlaces(totalPlaces, placesPerModule);
  ens.hyper = model.config.hyper;
  ens.masterSeed = seed;
  if (ens.assignment.moduleCount() != moduleCount)
    throw ModelError("model header module count does not match the place partition");

  for (int m = 0; m < moduleCount; ++m) {
    const int outputSize = static_cast<int>(r.readValue<std::uint32_t>());
    if (outputSize != ens.assignment.moduleSize(m))
      throw ModelError("module output size does not match the place partition");
    ModuleNetwork<float> net(inputSize, featureSize, outputSize, ens.hyper,
                             splitSeed(seed, m));
    auto& lif = net.layer(LayerId::InputFeature);
    auto& lfo = net.layer(LayerId::FeatureOutput);
    detail::readMatrixF32(r, lif.wExc, featureSize, inputSize);
    detail::readMatrixF32(r, lif.wInh, featureSize, inputSize);
    detail::readVectorF32(r, net.state(LayerId::InputFeature).theta, featureSize);
    detail::readVectorF32(r, net.state(LayerId::InputFeature).targetRate, featureSize);
    detail::readMatrixF32(r, lfo.wExc, outputSize, featureSize);
    detail::readMatrixF32(r, lfo.wInh, outputSize, featureSize);
    detail::readVectorF32(r, net.state(LayerId::FeatureOutput).theta, outputSize);
    detail::readVectorF32(r, net.state(LayerId::FeatureOutput).targetRate, outputSize);
    lif.maskExc = (lif.wExc.array() != 0.0f).cast<float>();
    lif.maskInh = (lif.wInh.array() != 0.0f).cast<float>();
    lfo.maskExc = (lfo.wExc.array() != 0.0f).cast<float>();
    lfo.maskInh = (lfo.wInh.array() != 0.0f).cast<float>();
    ens.modules.push_back(std::move(net));
  }
  r.expectEnd();
  return model;
}

}  // namespace vprtempo
