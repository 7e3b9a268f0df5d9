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
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "vprtempo/model_io.hpp"
#include "vprtempo/rng.hpp"

using namespace vprtempo;

namespace {

EncodedTraversals<float> randomData(int places, int variants, int inputSize,
                                    std::uint64_t seed) {
  EncodedTraversals<float> data;
  data.placeCount = places;
  data.variantCount = variants;
  RandomStream rng(seed);
  for (int p = 0; p < places; ++p)
    for (int v = 0; v < variants; ++v) {
      VectorX<float> s(inputSize);
      for (int i = 0; i < inputSize; ++i) s[i] = static_cast<float>(rng.uniform01());
      data.spikes.push_back(std::move(s));
    }
  return data;
}

std::string tempPath(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("save/load reproduces inference bit for bit") {
  const auto data = randomData(9, 2, 16, 3);
  RunConfig cfg;
  cfg.placesPerModule = 4;
  cfg.featureSize = 24;
  cfg.seed = 17;
  TrainOptions opts;
  opts.placesPerModule = cfg.placesPerModule;
  opts.featureSize = cfg.featureSize;
  opts.seed = cfg.seed;
  opts.workers = 2;
  const auto ens = trainEnsemble(data, cfg.hyper, opts);

  const std::string path = tempPath("vprtempo_model_roundtrip.vprt");
  saveModel(ens, cfg, path);
  const LoadedModel loaded = loadModel(path);

  REQUIRE(loaded.ensemble.moduleCount() == ens.moduleCount());
  REQUIRE(loaded.ensemble.totalPlaces() == ens.totalPlaces());
  REQUIRE(loaded.config.canonicalText() == cfg.canonicalText());

  const BatchedEnsemble<float> before(ens);
  const BatchedEnsemble<float> after(loaded.ensemble);
  RandomStream rng(100);
  for (int q = 0; q < 100; ++q) {
    VectorX<float> probe(16);
    for (int i = 0; i < 16; ++i) probe[i] = static_cast<float>(rng.uniform01());
    const auto a = before.query(probe);
    const auto b = after.query(probe);
    REQUIRE(a.globalPlace == b.globalPlace);
    REQUIRE((a.amplitudes.array() == b.amplitudes.array()).all());
  }
  std::remove(path.c_str());
}

TEST_CASE("masks are rebuilt from the stored weights") {
  const auto data = randomData(3, 1, 10, 5);
  RunConfig cfg;
  cfg.featureSize = 14;
  TrainOptions opts;
  opts.featureSize = 14;
  opts.workers = 1;
  const auto ens = trainEnsemble(data, cfg.hyper, opts);
  const std::string path = tempPath("vprtempo_model_masks.vprt");
  saveModel(ens, cfg, path);
  const LoadedModel loaded = loadModel(path);
  const auto& orig = ens.modules[0].layer(LayerId::InputFeature);
  const auto& back = loaded.ensemble.modules[0].layer(LayerId::InputFeature);
  REQUIRE((orig.maskExc.array() == back.maskExc.array()).all());
  REQUIRE((orig.maskInh.array() == back.maskInh.array()).all());
  std::remove(path.c_str());
}

TEST_CASE("corrupting any byte breaks the checksum") {
  const auto data = randomData(4, 1, 8, 7);
  RunConfig cfg;
  cfg.featureSize = 12;
  TrainOptions opts;
  opts.featureSize = 12;
  opts.workers = 1;
  const auto ens = trainEnsemble(data, cfg.hyper, opts);
  const std::string path = tempPath("vprtempo_model_corrupt.vprt");
  saveModel(ens, cfg, path);

  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekg(0, std::ios::end);
  const auto size = static_cast<std::streamoff>(f.tellg());
  RandomStream rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const std::streamoff pos = 16 + static_cast<std::streamoff>(rng.raw() % (size - 32));
    f.seekg(pos);
    char byte;
    f.read(&byte, 1);
    const char flipped = static_cast<char>(byte ^ 0x40);
    f.seekp(pos);
    f.write(&flipped, 1);
    f.flush();
    REQUIRE_THROWS_AS(loadModel(path), ModelError);
    f.seekp(pos);
    f.write(&byte, 1);  // restore
    f.flush();
  }
  REQUIRE_NOTHROW(loadModel(path));
  std::remove(path.c_str());
}

TEST_CASE("truncated and foreign files are detected") {
  const auto data = randomData(3, 1, 6, 9);
  RunConfig cfg;
  cfg.featureSize = 8;
  TrainOptions opts;
  opts.featureSize = 8;
  opts.workers = 1;
  const auto ens = trainEnsemble(data, cfg.hyper, opts);
  const std::string path = tempPath("vprtempo_model_trunc.vprt");
  saveModel(ens, cfg, path);

  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const std::string truncPath = tempPath("vprtempo_model_trunc2.vprt");
  std::ofstream out(truncPath, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  out.close();
  REQUIRE_THROWS_AS(loadModel(truncPath), ModelError);

  const std::string foreignPath = tempPath("vprtempo_model_foreign.vprt");
  std::ofstream foreign(foreignPath, std::ios::binary);
  foreign << "not a model";
  foreign.close();
  REQUIRE_THROWS_AS(loadModel(foreignPath), ModelError);

  REQUIRE_THROWS_AS(loadModel(tempPath("vprtempo_does_not_exist.vprt")), ModelError);

  std::remove(path.c_str());
  std::remove(truncPath.c_str());
  std::remove(foreignPath.c_str());
}
