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
#include <cstdint>
#include <string>

#include "vprtempo/errors.hpp"
#include "vprtempo/rng.hpp"

namespace vprtempo {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Vector<Scalar, Eigen::Dynamic>;

enum class LayerId { InputFeature, FeatureOutput };

/// Inhibitory-normalization semantics. Text follows the prose description:
/// positive net input to a post-synaptic neuron grows its inhibitory
/// magnitudes by (1 + eta), negative net input shrinks them by (1 - eta).
/// Literal keeps the printed update W- *= (1 - eta * heaviside(sum of
/// pre-synaptic amplitudes)), which only ever shrinks.
enum class HomeostasisMode { Text, Literal };

/// Weight draw for live connections. FanIn scales U(0,1] by the expected
/// live fan-in per sign so excitation and inhibition start balanced
/// regardless of the connection probabilities; Raw is plain U(0,1].
enum class WeightInit { FanIn, Raw };

struct Hyperparams {
  double thetaMax = 0.5;
  double etaStdpInit = 0.005;
  double etaItpInit = 0.15;
  double fMin = 0.2;
  double fMax = 0.9;
  double pExc = 0.1;
  double pInh = 0.5;
  double constantInput = 0.1;
  double xForce = 0.5;
  double epsilon = 1e-6;
  int epochs = 4;
  HomeostasisMode homeostasis = HomeostasisMode::Text;
  WeightInit weightInit = WeightInit::FanIn;

  void validate() const {
    if (!(thetaMax > 0.0)) throw InvalidInputError("hyperparams: thetaMax must be > 0");
    if (!(fMin > 0.0 && fMin <= fMax && fMax <= 1.0))
      throw InvalidInputError("hyperparams: need 0 < fMin <= fMax <= 1 (target rates divide learning rates)");
    if (pExc < 0.0 || pExc > 1.0 || pInh < 0.0 || pInh > 1.0)
      throw InvalidInputError("hyperparams: connection probabilities must be in [0,1]");
    if (!(epsilon > 0.0)) throw InvalidInputError("hyperparams: epsilon must be > 0");
    if (epochs < 1) throw InvalidInputError("hyperparams: epochs must be >= 1");
    if (!(etaStdpInit >= 0.0 && etaStdpInit < 1.0))
      throw InvalidInputError("hyperparams: etaStdpInit must be in [0,1)");
    if (etaItpInit < 0.0) throw InvalidInputError("hyperparams: etaItpInit must be >= 0");
    if (!(xForce >= 0.0 && xForce <= 1.0))
      throw InvalidInputError("hyperparams: xForce must be in [0,1]");
  }
};

/// Shared learning-rate schedule: eta(t) = etaInit * (1 - t/T)^2, clamped to
/// 0 once t reaches T so presentations past the schedule are exact no-ops.
struct AnnealClock {
  std::int64_t t = 0;
  std::int64_t total = 0;

  bool exhausted() const { return total <= 0 || t >= total; }

  double rate(double etaInit) const {
    if (exhausted()) return 0.0;
    const double r = 1.0 - static_cast<double>(t) / static_cast<double>(total);
    return etaInit * r * r;
  }
};

/// One pair of connected layers. Excitatory and inhibitory weights are kept
/// as separate non-negative matrices (inhibition stored by magnitude and
/// applied subtractively); masks record which entries were sampled as
/// connections. Masked-out entries stay exactly 0 for the life of the
/// network, and no live entry is ever allowed to cross 0 — a would-be sign
/// change is reset to magnitude epsilon.
template <typename Scalar>
struct LayerPair {
  int preSize = 0;
  int postSize = 0;
  MatrixX<Scalar> wExc;     // postSize x preSize, >= 0
  MatrixX<Scalar> wInh;     // postSize x preSize, magnitudes >= 0
  MatrixX<Scalar> maskExc;  // 1 = live connection
  MatrixX<Scalar> maskInh;
};

template <typename Scalar>
struct NeuronState {
  VectorX<Scalar> theta;          // firing thresholds, >= 0
  VectorX<Scalar> targetRate;     // f_j, fixed after initialization
  VectorX<Scalar> lastAmplitude;  // clamped output of the most recent forward
  VectorX<Scalar> lastPreAct;     // same, before clamping (net input)
};

/// One expert module: a 3-layer network (input -> feature -> output) with a
/// sparse random input projection and a fully connected one-hot output layer.
/// Spikes are single floating-point amplitudes in [0,1] per neuron per
/// presentation; the amplitude abstracts the timing of one spike inside a
/// theta-cycle timestep.
///
/// Training applies, per presentation and per layer pair (input side first):
/// forward pass, STDP (input->feature) or supervised spike forcing
/// (feature->output), intrinsic threshold plasticity, and inhibitory
/// homeostasis. Both learning-rate clocks share t/T and anneal quadratically.
template <typename Scalar>
class ModuleNetwork {
 public:
  ModuleNetwork(int inputSize, int featureSize, int outputSize,
                const Hyperparams& hyper, std::uint64_t seed)
      : inputSize_(inputSize),
        featureSize_(featureSize),
        outputSize_(outputSize),
        hyper_(hyper),
        seed_(seed) {
    if (inputSize < 1 || featureSize < 1 || outputSize < 1)
      throw InvalidInputError("initModule: all layer sizes must be >= 1");
    hyper.validate();
    RandomStream rng(seed);
    initLayer(layerIF_, inputSize, featureSize, hyper.pExc, hyper.pInh, rng);
    initState(featureState_, featureSize, rng);
    initLayer(layerFO_, featureSize, outputSize, 1.0, 1.0, rng);
    initState(outputState_, outputSize, rng);
  }

  int inputSize() const { return inputSize_; }
  int featureSize() const { return featureSize_; }
  int outputSize() const { return outputSize_; }
  const Hyperparams& hyper() const { return hyper_; }
  std::uint64_t seed() const { return seed_; }

  const LayerPair<Scalar>& layer(LayerId id) const {
    return id == LayerId::InputFeature ? layerIF_ : layerFO_;
  }
  LayerPair<Scalar>& layer(LayerId id) {
    return id == LayerId::InputFeature ? layerIF_ : layerFO_;
  }
  const NeuronState<Scalar>& state(LayerId id) const {
    return id == LayerId::InputFeature ? featureState_ : outputState_;
  }
  NeuronState<Scalar>& state(LayerId id) {
    return id == LayerId::InputFeature ? featureState_ : outputState_;
  }
  const AnnealClock& clock() const { return clock_; }

  /// Fixes the total number of training iterations T for both annealing
  /// clocks (epochs x presentations per epoch for this module).
  void setTrainingSchedule(std::int64_t totalIterations) {
    if (totalIterations < 1)
      throw InvalidInputError("setTrainingSchedule: total iterations must be >= 1");
    clock_.t = 0;
    clock_.total = totalIterations;
  }

  /// Forward spike propagation for one layer pair:
  /// x_j = sum_i pre_i * (wExc_ji - wInh_ji) + C - theta_j, clamped to [0,1].
  /// Records both the clamped amplitudes and the pre-clamp net input for the
  /// learning rules that follow.
  const VectorX<Scalar>& forward(const VectorX<Scalar>& pre, LayerId id) {
    LayerPair<Scalar>& lp = layer(id);
    NeuronState<Scalar>& ns = state(id);
    checkPre(pre, lp, "forward");
    ns.lastPreAct.noalias() = lp.wExc * pre;
    ns.lastPreAct.noalias() -= lp.wInh * pre;
    ns.lastPreAct.array() += static_cast<Scalar>(hyper_.constantInput);
    ns.lastPreAct -= ns.theta;
    ns.lastAmplitude = ns.lastPreAct.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
    return ns.lastAmplitude;
  }

  /// STDP, gated by the Heaviside of both pre- and post-synaptic amplitudes
  /// (a zero amplitude means no spike and never drives learning):
  /// dW = (eta_stdp(t)/f_j) * H(pre_i) * H(post_j) * (0.5 - post_j).
  /// The delta applies to the effective signed weight, so it is added to
  /// excitatory entries and subtracted from inhibitory magnitudes; entries
  /// that would cross 0 are reset to magnitude epsilon.
  void stdpUpdate(const VectorX<Scalar>& preAmps, const VectorX<Scalar>& postAmps,
                  LayerId id) {
    if (clock_.exhausted())
      throw InvalidStateError("stdpUpdate: training schedule exhausted");
    LayerPair<Scalar>& lp = layer(id);
    NeuronState<Scalar>& ns = state(id);
    checkPre(preAmps, lp, "stdpUpdate");
    if (postAmps.size() != lp.postSize)
      throw InvalidInputError("stdpUpdate: post amplitude length mismatch");

    const Scalar eta = static_cast<Scalar>(clock_.rate(hyper_.etaStdpInit));
    const VectorX<Scalar> rowDelta =
        ((postAmps.array() > Scalar(0)).template cast<Scalar>() *
         (Scalar(0.5) - postAmps.array()) * eta / ns.targetRate.array())
            .matrix();
    applySignedColumnDeltas(lp, preAmps, rowDelta, /*scaleByPre=*/false);
  }

  /// Inhibitory homeostasis. Text mode: per post-synaptic neuron, inhibitory
  /// magnitudes scale by (1 + eta) when the recorded pre-clamp net input is
  /// positive and by (1 - eta) when negative (zero leaves them alone).
  /// Literal mode: the whole inhibitory matrix scales by
  /// (1 - eta * H(sum of pre amplitudes)).
  void homeostasisUpdate(const VectorX<Scalar>& preAmps, LayerId id) {
    LayerPair<Scalar>& lp = layer(id);
    NeuronState<Scalar>& ns = state(id);
    checkPre(preAmps, lp, "homeostasisUpdate");
    const Scalar eta = static_cast<Scalar>(clock_.rate(hyper_.etaStdpInit));
    if (eta == Scalar(0)) return;

    if (hyper_.homeostasis == HomeostasisMode::Literal) {
      if (preAmps.sum() > Scalar(0)) lp.wInh *= (Scalar(1) - eta);
      return;
    }
    VectorX<Scalar> factor(lp.postSize);
    for (Eigen::Index j = 0; j < factor.size(); ++j) {
      const Scalar net = ns.lastPreAct[j];
      factor[j] = net > Scalar(0)   ? Scalar(1) + eta
                  : net < Scalar(0) ? Scalar(1) - eta
                                    : Scalar(1);
    }
    for (int i = 0; i < lp.preSize; ++i)
      lp.wInh.col(i).array() *= factor.array();
  }

  /// Intrinsic threshold plasticity, driving each neuron toward its target
  /// rate: dtheta_j = eta_itp(t) * (H(x_j) - f_j); thresholds that would go
  /// negative are reset to 0.
  void itpUpdate(const VectorX<Scalar>& postAmps, LayerId id) {
    LayerPair<Scalar>& lp = layer(id);
    NeuronState<Scalar>& ns = state(id);
    if (postAmps.size() != lp.postSize)
      throw InvalidInputError("itpUpdate: post amplitude length mismatch");
    const Scalar eta = static_cast<Scalar>(clock_.rate(hyper_.etaItpInit));
    if (eta == Scalar(0)) return;
    ns.theta.array() += eta * ((postAmps.array() > Scalar(0)).template cast<Scalar>() -
                               ns.targetRate.array());
    ns.theta = ns.theta.cwiseMax(Scalar(0));
  }

  /// Supervised spike forcing on the feature->output pair. The target vector
  /// is xForce at the neuron assigned to the presented place and 0 elsewhere;
  /// dW_ji = (eta_stdp(t)/f_j) * pre_i * (target_j - x_j), with the same
  /// signed application and epsilon reset as STDP.
  void spikeForceUpdate(const VectorX<Scalar>& preAmps, int targetNeuron) {
    if (targetNeuron < 0 || targetNeuron >= outputSize_)
      throw InvalidInputError("spikeForceUpdate: target neuron out of range");
    LayerPair<Scalar>& lp = layerFO_;
    NeuronState<Scalar>& ns = outputState_;
    checkPre(preAmps, lp, "spikeForceUpdate");

    const Scalar eta = static_cast<Scalar>(clock_.rate(hyper_.etaStdpInit));
    VectorX<Scalar> target = VectorX<Scalar>::Zero(outputSize_);
    target[targetNeuron] = static_cast<Scalar>(hyper_.xForce);
    const VectorX<Scalar> rowDelta =
        ((target.array() - ns.lastAmplitude.array()) * eta / ns.targetRate.array())
            .matrix();
    applySignedColumnDeltas(lp, preAmps, rowDelta, /*scaleByPre=*/true);
  }

  /// One full training presentation of a place image:
  /// forward I->F, then STDP/ITP/homeostasis on the input pair; forward
  /// F->O, then spike forcing/ITP/homeostasis on the output pair; advance
  /// the shared clock. Presentations past the schedule leave all weights and
  /// thresholds untouched.
  void trainPresentation(const VectorX<Scalar>& spikes, int placeLocalIndex) {
    if (clock_.total <= 0)
      throw InvalidStateError("trainPresentation: no training schedule set");
    const bool learn = !clock_.exhausted();

    const VectorX<Scalar>& featAmps = forward(spikes, LayerId::InputFeature);
    if (learn) {
      stdpUpdate(spikes, featAmps, LayerId::InputFeature);
      itpUpdate(featAmps, LayerId::InputFeature);
      homeostasisUpdate(spikes, LayerId::InputFeature);
    }
    const VectorX<Scalar>& outAmps = forward(featAmps, LayerId::FeatureOutput);
    if (learn) {
      spikeForceUpdate(featAmps, placeLocalIndex);
      itpUpdate(outAmps, LayerId::FeatureOutput);
      homeostasisUpdate(featAmps, LayerId::FeatureOutput);
      clock_.t += 1;
    }
  }

  /// Query-time readout: the two forward passes with the learning rules
  /// disabled. Pure; records nothing, safe to call concurrently.
  VectorX<Scalar> infer(const VectorX<Scalar>& spikes) const {
    checkPre(spikes, layerIF_, "infer");
    VectorX<Scalar> feat = layerIF_.wExc * spikes;
    feat.noalias() -= layerIF_.wInh * spikes;
    feat.array() += static_cast<Scalar>(hyper_.constantInput);
    feat -= featureState_.theta;
    feat = feat.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));

    VectorX<Scalar> out = layerFO_.wExc * feat;
    out.noalias() -= layerFO_.wInh * feat;
    out.array() += static_cast<Scalar>(hyper_.constantInput);
    out -= outputState_.theta;
    return out.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
  }

 private:
  static void checkPre(const VectorX<Scalar>& pre, const LayerPair<Scalar>& lp,
                       const char* who) {
    if (pre.size() != lp.preSize)
      throw InvalidInputError(std::string(who) + ": pre-synaptic length mismatch");
  }

  /// Adds rowDelta (optionally scaled by the pre-synaptic amplitude) to the
  /// effective signed weight of every live connection in columns whose
  /// pre-synaptic amplitude is non-zero, then applies the epsilon reset.
  /// Masked entries receive exactly 0 and never change.
  void applySignedColumnDeltas(LayerPair<Scalar>& lp, const VectorX<Scalar>& preAmps,
                               const VectorX<Scalar>& rowDelta, bool scaleByPre) {
    const Scalar eps = static_cast<Scalar>(hyper_.epsilon);
    for (int i = 0; i < lp.preSize; ++i) {
      if (!(preAmps[i] > Scalar(0))) continue;  // Heaviside gate / zero factor
      const Scalar scale = scaleByPre ? preAmps[i] : Scalar(1);
      auto me = lp.maskExc.col(i).array();
      auto mi = lp.maskInh.col(i).array();
      lp.wExc.col(i).array() += scale * rowDelta.array() * me;
      lp.wInh.col(i).array() -= scale * rowDelta.array() * mi;
      lp.wExc.col(i) = ((me > Scalar(0)) && (lp.wExc.col(i).array() <= Scalar(0)))
                           .select(eps, lp.wExc.col(i));
      lp.wInh.col(i) = ((mi > Scalar(0)) && (lp.wInh.col(i).array() <= Scalar(0)))
                           .select(eps, lp.wInh.col(i));
    }
  }

  void initLayer(LayerPair<Scalar>& lp, int pre, int post, double pExc, double pInh,
                 RandomStream& rng) {
    lp.preSize = pre;
    lp.postSize = post;
    lp.wExc = MatrixX<Scalar>::Zero(post, pre);
    lp.wInh = MatrixX<Scalar>::Zero(post, pre);
    lp.maskExc = MatrixX<Scalar>::Zero(post, pre);
    lp.maskInh = MatrixX<Scalar>::Zero(post, pre);
    const bool fanIn = hyper_.weightInit == WeightInit::FanIn;
    const double excScale = fanIn ? 1.0 / std::max(1.0, pExc * pre) : 1.0;
    const double inhScale = fanIn ? 1.0 / std::max(1.0, pInh * pre) : 1.0;
    sampleSign(lp.maskExc, lp.wExc, pExc, excScale, rng);
    sampleSign(lp.maskInh, lp.wInh, pInh, inhScale, rng);
  }

  static void sampleSign(MatrixX<Scalar>& mask, MatrixX<Scalar>& w, double p,
                         double scale, RandomStream& rng) {
    for (Eigen::Index i = 0; i < mask.cols(); ++i)
      for (Eigen::Index j = 0; j < mask.rows(); ++j)
        if (rng.bernoulli(p)) {
          mask(j, i) = Scalar(1);
          w(j, i) = static_cast<Scalar>(rng.uniformOpen01() * scale);
        }
  }

  void initState(NeuronState<Scalar>& ns, int size, RandomStream& rng) {
    ns.theta.resize(size);
    ns.targetRate.resize(size);
    for (Eigen::Index j = 0; j < size; ++j)
      ns.theta[j] = static_cast<Scalar>(rng.uniformIn(0.0, hyper_.thetaMax));
    for (Eigen::Index j = 0; j < size; ++j)
      ns.targetRate[j] = static_cast<Scalar>(rng.uniformIn(hyper_.fMin, hyper_.fMax));
    ns.lastAmplitude = VectorX<Scalar>::Zero(size);
    ns.lastPreAct = VectorX<Scalar>::Zero(size);
  }

  int inputSize_;
  int featureSize_;
  int outputSize_;
  Hyperparams hyper_;
  std::uint64_t seed_;
  LayerPair<Scalar> layerIF_;
  LayerPair<Scalar> layerFO_;
  NeuronState<Scalar> featureState_;
  NeuronState<Scalar> outputState_;
  AnnealClock clock_;
};

}  // namespace vprtempo
