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
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "vprtempo/errors.hpp"
#include "vprtempo/network.hpp"
#include "vprtempo/rng.hpp"

namespace vprtempo {

/// Contiguous block partition of global places onto expert modules. The
/// module subsets are pairwise disjoint and cover every place; the last
/// module may hold fewer places than the others.
struct PlaceAssignment {
  int totalPlaces = 0;
  int placesPerModule = 0;

  int moduleCount() const {
    return (totalPlaces + placesPerModule - 1) / placesPerModule;
  }
  int moduleOf(int globalPlace) const { return globalPlace / placesPerModule; }
  int localOf(int globalPlace) const { return globalPlace % placesPerModule; }
  int moduleStart(int module) const { return module * placesPerModule; }
  int moduleSize(int module) const {
    return std::min(placesPerModule, totalPlaces - moduleStart(module));
  }
};

inline PlaceAssignment partitionPlaces(int totalPlaces, int placesPerModule) {
  if (totalPlaces < 1) throw InvalidInputError("partitionPlaces: totalPlaces must be >= 1");
  if (placesPerModule < 1)
    throw InvalidInputError("partitionPlaces: placesPerModule must be >= 1");
  return PlaceAssignment{totalPlaces, placesPerModule};
}

/// Preprocessed traversal images as spike vectors, place-major: the vector
/// for (place p, variant v) sits at index p * variantCount + v.
template <typename Scalar>
struct EncodedTraversals {
  int placeCount = 0;
  int variantCount = 0;
  std::vector<VectorX<Scalar>> spikes;

  const VectorX<Scalar>& at(int place, int variant) const {
    return spikes[static_cast<std::size_t>(place) * variantCount + variant];
  }
  int inputSize() const { return spikes.empty() ? 0 : static_cast<int>(spikes[0].size()); }
};

template <typename Scalar>
struct Ensemble {
  PlaceAssignment assignment;
  Hyperparams hyper;
  std::uint64_t masterSeed = 0;
  std::vector<ModuleNetwork<Scalar>> modules;

  int totalPlaces() const { return assignment.totalPlaces; }
  int moduleCount() const { return static_cast<int>(modules.size()); }
  int inputSize() const { return modules.empty() ? 0 : modules.front().inputSize(); }
  int featureSize() const { return modules.empty() ? 0 : modules.front().featureSize(); }
};

template <typename Scalar>
struct MatchResult {
  struct ModuleArgmax {
    int module = 0;
    int localNeuron = 0;
    Scalar amplitude = 0;
  };
  int globalPlace = 0;
  Scalar amplitude = 0;
  std::vector<ModuleArgmax> perModule;
  VectorX<Scalar> amplitudes;  // concatenated module outputs in global place order
};

namespace detail {

template <typename Scalar>
int argmaxLowestTie(const VectorX<Scalar>& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

}  // namespace detail

struct TrainOptions {
  int placesPerModule = 1000;
  int featureSize = 0;  // 0 = 2 * input size
  std::uint64_t seed = 42;
  int workers = 0;  // 0 = hardware concurrency
  bool shuffle = false;
};

/// Called once per presented image during ensemble training. Used by tests
/// to assert training-set disjointness and role separation.
using PresentationObserver = std::function<void(int module, int globalPlace, int variant)>;

/// Trains one expert module per place block. Modules are initialized from
/// seeds split off the master seed by module index, trained only on their
/// assigned places (all traversal variants, `epochs` epochs, place-major
/// presentation order with variants consecutive per place), and are fully
/// independent: the result does not depend on the worker count.
template <typename Scalar>
Ensemble<Scalar> trainEnsemble(const EncodedTraversals<Scalar>& data,
                               const Hyperparams& hyper, const TrainOptions& opts,
                               const PresentationObserver& observer = {}) {
  hyper.validate();
  if (data.placeCount < 1 || data.variantCount < 1)
    throw DatasetError("trainEnsemble: dataset is empty");
  if (data.spikes.size() !=
      static_cast<std::size_t>(data.placeCount) * data.variantCount)
    throw DatasetError("trainEnsemble: dataset is missing images for some places");
  const int inputSize = data.inputSize();
  for (const auto& s : data.spikes)
    if (s.size() != inputSize)
      throw DatasetError("trainEnsemble: inconsistent spike vector lengths");

  Ensemble<Scalar> ens;
  ens.assignment = partitionPlaces(data.placeCount, opts.placesPerModule);
  ens.hyper = hyper;
  ens.masterSeed = opts.seed;
  const int featureSize = opts.featureSize > 0 ? opts.featureSize : 2 * inputSize;
  const int moduleCount = ens.assignment.moduleCount();

  ens.modules.reserve(moduleCount);
  for (int m = 0; m < moduleCount; ++m)
    ens.modules.emplace_back(inputSize, featureSize, ens.assignment.moduleSize(m),
                             hyper, splitSeed(opts.seed, m));

  std::mutex observerMutex;
  auto trainModule = [&](int m) {
    ModuleNetwork<Scalar>& net = ens.modules[m];
    const int start = ens.assignment.moduleStart(m);
    const int size = ens.assignment.moduleSize(m);
    const std::int64_t perEpoch =
        static_cast<std::int64_t>(size) * data.variantCount;
    net.setTrainingSchedule(static_cast<std::int64_t>(hyper.epochs) * perEpoch);

    std::vector<std::pair<int, int>> order(perEpoch);
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
      std::size_t k = 0;
      for (int p = 0; p < size; ++p)
        for (int v = 0; v < data.variantCount; ++v) order[k++] = {p, v};
      if (opts.shuffle) {
        RandomStream perm(splitSeed(splitSeed(opts.seed, m), 1000000u + epoch));
        for (std::size_t i = order.size(); i > 1; --i)
          std::swap(order[i - 1], order[perm.raw() % i]);
      }
      for (const auto& [p, v] : order) {
        net.trainPresentation(data.at(start + p, v), p);
        if (observer) {
          std::lock_guard<std::mutex> lock(observerMutex);
          observer(m, start + p, v);
        }
      }
    }
  };

  int workers = opts.workers > 0 ? opts.workers
                                 : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, moduleCount));
  if (workers == 1) {
    for (int m = 0; m < moduleCount; ++m) trainModule(m);
    return ens;
  }

  std::atomic<int> next{0};
  std::mutex errorMutex;
  std::exception_ptr firstError;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const int m = next.fetch_add(1);
        if (m >= moduleCount) return;
        try {
          trainModule(m);
        } catch (...) {
          std::lock_guard<std::mutex> lock(errorMutex);
          if (!firstError) firstError = std::current_exception();
          return;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (firstError) std::rethrow_exception(firstError);
  return ens;
}

/// Fans one query across every module (read-only), concatenates the module
/// outputs in global place order and returns the argmax with ties broken
/// toward the lowest global index.
template <typename Scalar>
MatchResult<Scalar> queryEnsemble(const Ensemble<Scalar>& ens,
                                  const VectorX<Scalar>& spikes) {
  if (ens.modules.empty()) throw InvalidStateError("queryEnsemble: empty ensemble");
  MatchResult<Scalar> result;
  result.amplitudes.resize(ens.totalPlaces());
  result.perModule.reserve(ens.modules.size());
  for (int m = 0; m < ens.moduleCount(); ++m) {
    const VectorX<Scalar> out = ens.modules[m].infer(spikes);
    const int start = ens.assignment.moduleStart(m);
    result.amplitudes.segment(start, out.size()) = out;
    const int local = detail::argmaxLowestTie(out);
    result.perModule.push_back({m, local, out[local]});
  }
  result.globalPlace = detail::argmaxLowestTie(result.amplitudes);
  result.amplitude = result.amplitudes[result.globalPlace];
  return result;
}

/// Inference view of an ensemble: the per-module excitatory/inhibitory pairs
/// are combined into effective signed weights and packed into contiguous
/// 3-D tensors (modules x post x pre) for both layer pairs. A replicated
/// query touches the input-pair tensor as a single stacked matrix product.
/// Immutable and safe for concurrent queries.
template <typename Scalar>
class BatchedEnsemble {
 public:
  explicit BatchedEnsemble(const Ensemble<Scalar>& ens)
      : assignment_(ens.assignment),
        moduleCount_(ens.moduleCount()),
        inputSize_(ens.inputSize()),
        featureSize_(ens.featureSize()),
        constant_(static_cast<Scalar>(ens.hyper.constantInput)) {
    if (ens.modules.empty())
      throw InvalidStateError("BatchedEnsemble: empty ensemble");

    ifW_.resize(static_cast<Eigen::Index>(moduleCount_) * featureSize_, inputSize_);
    ifTheta_.resize(static_cast<Eigen::Index>(moduleCount_) * featureSize_);
    outSizes_.resize(moduleCount_);
    outOffsets_.resize(moduleCount_);
    foOffsets_.resize(moduleCount_);

    std::size_t foTotal = 0;
    int placeTotal = 0;
    for (int m = 0; m < moduleCount_; ++m) {
      const auto& net = ens.modules[m];
      outSizes_[m] = net.outputSize();
      outOffsets_[m] = placeTotal;
      placeTotal += net.outputSize();
      foOffsets_[m] = foTotal;
      foTotal += static_cast<std::size_t>(net.outputSize()) * featureSize_;
    }
    foW_.resize(foTotal);
    foTheta_.resize(placeTotal);
    totalPlaces_ = placeTotal;

    for (int m = 0; m < moduleCount_; ++m) {
      const auto& net = ens.modules[m];
      const auto& ifPair = net.layer(LayerId::InputFeature);
      ifW_.middleRows(static_cast<Eigen::Index>(m) * featureSize_, featureSize_) =
          ifPair.wExc - ifPair.wInh;
      ifTheta_.segment(static_cast<Eigen::Index>(m) * featureSize_, featureSize_) =
          net.state(LayerId::InputFeature).theta;
      const auto& foPair = net.layer(LayerId::FeatureOutput);
      Eigen::Map<MatrixX<Scalar>>(foW_.data() + foOffsets_[m], outSizes_[m],
                                  featureSize_) = foPair.wExc - foPair.wInh;
      foTheta_.segment(outOffsets_[m], outSizes_[m]) =
          net.state(LayerId::FeatureOutput).theta;
    }
  }

  int moduleCount() const { return moduleCount_; }
  int totalPlaces() const { return totalPlaces_; }
  int inputSize() const { return inputSize_; }
  const PlaceAssignment& assignment() const { return assignment_; }

  /// Batched forward over the 3-D weight tensor: one input per module, one
  /// clamped output per module. Numerically equal to per-module forward
  /// loops; used with distinct inputs during training-style evaluation and
  /// with a replicated input at query time.
  std::vector<VectorX<Scalar>> batchedForward(
      LayerId layer, const std::vector<VectorX<Scalar>>& perModuleInputs) const {
    if (static_cast<int>(perModuleInputs.size()) != moduleCount_)
      throw InvalidInputError("batchedForward: need exactly one input per module");
    std::vector<VectorX<Scalar>> out(perModuleInputs.size());
    for (int m = 0; m < moduleCount_; ++m) {
      const auto& in = perModuleInputs[m];
      if (layer == LayerId::InputFeature) {
        if (in.size() != inputSize_)
          throw InvalidInputError("batchedForward: input length mismatch");
        out[m] = clampUnit(
            (ifW_.middleRows(static_cast<Eigen::Index>(m) * featureSize_,
                             featureSize_) *
             in)
                .eval(),
            ifTheta_.segment(static_cast<Eigen::Index>(m) * featureSize_,
                             featureSize_));
      } else {
        if (in.size() != featureSize_)
          throw InvalidInputError("batchedForward: input length mismatch");
        Eigen::Map<const MatrixX<Scalar>> w(foW_.data() + foOffsets_[m],
                                            outSizes_[m], featureSize_);
        out[m] = clampUnit((w * in).eval(), foTheta_.segment(outOffsets_[m], outSizes_[m]));
      }
    }
    return out;
  }

  /// Single-query fan-out: the input pair runs as one stacked matrix product
  /// across all modules, then each module's output pair reads its own
  /// feature block.
  MatchResult<Scalar> query(const VectorX<Scalar>& spikes) const {
    if (spikes.size() != inputSize_)
      throw InvalidInputError("query: spike vector length mismatch");
    VectorX<Scalar> feat = ifW_ * spikes;
    feat.array() += constant_;
    feat -= ifTheta_;
    feat = feat.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));

    MatchResult<Scalar> result;
    result.amplitudes.resize(totalPlaces_);
    result.perModule.reserve(moduleCount_);
    for (int m = 0; m < moduleCount_; ++m) {
      Eigen::Map<const MatrixX<Scalar>> w(foW_.data() + foOffsets_[m], outSizes_[m],
                                          featureSize_);
      VectorX<Scalar> out =
          w * feat.segment(static_cast<Eigen::Index>(m) * featureSize_, featureSize_);
      out.array() += constant_;
      out -= foTheta_.segment(outOffsets_[m], outSizes_[m]);
      out = out.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
      result.amplitudes.segment(outOffsets_[m], outSizes_[m]) = out;
      const int local = detail::argmaxLowestTie(out);
      result.perModule.push_back({m, local, out[local]});
    }
    result.globalPlace = detail::argmaxLowestTie(result.amplitudes);
    result.amplitude = result.amplitudes[result.globalPlace];
    return result;
  }

 private:
  VectorX<Scalar> clampUnit(VectorX<Scalar> product,
                            const Eigen::Ref<const VectorX<Scalar>>& theta) const {
    product.array() += constant_;
    product -= theta;
    return product.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
  }

  PlaceAssignment assignment_;
  int moduleCount_;
  int inputSize_;
  int featureSize_;
  int totalPlaces_ = 0;
  Scalar constant_;
  MatrixX<Scalar> ifW_;
  VectorX<Scalar> ifTheta_;
  std::vector<Scalar> foW_;
  std::vector<std::size_t> foOffsets_;
  std::vector<int> outSizes_;
  std::vector<int> outOffsets_;
  VectorX<Scalar> foTheta_;
};

}  // namespace vprtempo
