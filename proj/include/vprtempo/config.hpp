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

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vprtempo/errors.hpp"
#include "vprtempo/image.hpp"
#include "vprtempo/network.hpp"

namespace vprtempo {

/// Full run configuration: one flat, typed key=value namespace covering the
/// network hyperparameters, the preprocessing pipeline and the orchestration
/// knobs. A file holds `key = value` lines ('#' comments); CLI flags override
/// file values; unknown keys are rejected. The effective configuration
/// (defaults included) is embedded in every model file.
struct RunConfig {
  Hyperparams hyper;
  PreprocessConfig pre;
  int placesPerModule = 1000;
  int featureSize = 0;  // 0 = 2 * input size
  std::uint64_t seed = 42;
  int workers = 0;  // 0 = hardware concurrency
  bool shuffle = false;
  int stride = 1;
  int limit = 0;
  bool sadFullPipeline = false;

  void set(const std::string& key, const std::string& value);
  std::string canonicalText() const;
  void validate() const;

  static RunConfig fromFile(const std::string& path);
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parseDouble(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
  }
}

inline long long parseInt(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + value + "'");
  }
}

inline bool parseBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config: key '" + key + "' expects true/false, got '" + value + "'");
}

inline std::string formatDouble(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

inline void RunConfig::set(const std::string& key, const std::string& value) {
  using detail::parseBool;
  using detail::parseDouble;
  using detail::parseInt;
  if (key == "theta_max") hyper.thetaMax = parseDouble(key, value);
  else if (key == "eta_stdp") hyper.etaStdpInit = parseDouble(key, value);
  else if (key == "eta_itp") hyper.etaItpInit = parseDouble(key, value);
  else if (key == "f_min") hyper.fMin = parseDouble(key, value);
  else if (key == "f_max") hyper.fMax = parseDouble(key, value);
  else if (key == "p_exc") hyper.pExc = parseDouble(key, value);
  else if (key == "p_inh") hyper.pInh = parseDouble(key, value);
  else if (key == "constant_input") hyper.constantInput = parseDouble(key, value);
  else if (key == "x_force") hyper.xForce = parseDouble(key, value);
  else if (key == "epsilon") hyper.epsilon = parseDouble(key, value);
  else if (key == "epochs") hyper.epochs = static_cast<int>(parseInt(key, value));
  else if (key == "homeostasis") {
    if (value == "text") hyper.homeostasis = HomeostasisMode::Text;
    else if (value == "literal") hyper.homeostasis = HomeostasisMode::Literal;
    else throw ConfigError("config: homeostasis must be text|literal");
  } else if (key == "weight_init") {
    if (value == "fan_in") hyper.weightInit = WeightInit::FanIn;
    else if (value == "raw") hyper.weightInit = WeightInit::Raw;
    else throw ConfigError("config: weight_init must be fan_in|raw");
  } else if (key == "gamma_lambda") pre.lambda = parseDouble(key, value);
  else if (key == "gamma_formula") {
    if (value == "log_ratio") pre.gammaFormula = GammaFormula::LogRatio;
    else if (value == "literal") pre.gammaFormula = GammaFormula::Literal;
    else throw ConfigError("config: gamma_formula must be log_ratio|literal");
  } else if (key == "target_width") pre.targetWidth = static_cast<int>(parseInt(key, value));
  else if (key == "target_height") pre.targetHeight = static_cast<int>(parseInt(key, value));
  else if (key == "patch_width") pre.patchWidth = static_cast<int>(parseInt(key, value));
  else if (key == "patch_height") pre.patchHeight = static_cast<int>(parseInt(key, value));
  else if (key == "places_per_module") placesPerModule = static_cast<int>(parseInt(key, value));
  else if (key == "feature_size") featureSize = static_cast<int>(parseInt(key, value));
  else if (key == "seed") seed = static_cast<std::uint64_t>(parseInt(key, value));
  else if (key == "workers") workers = static_cast<int>(parseInt(key, value));
  else if (key == "shuffle") shuffle = parseBool(key, value);
  else if (key == "stride") stride = static_cast<int>(parseInt(key, value));
  else if (key == "limit") limit = static_cast<int>(parseInt(key, value));
  else if (key == "sad_full_pipeline") sadFullPipeline = parseBool(key, value);
  else throw ConfigError("config: unknown key '" + key + "'");
}

inline std::string RunConfig::canonicalText() const {
  using detail::formatDouble;
  std::ostringstream os;
  os << "theta_max = " << formatDouble(hyper.thetaMax) << "\n"
     << "eta_stdp = " << formatDouble(hyper.etaStdpInit) << "\n"
     << "eta_itp = " << formatDouble(hyper.etaItpInit) << "\n"
     << "f_min = " << formatDouble(hyper.fMin) << "\n"
     << "f_max = " << formatDouble(hyper.fMax) << "\n"
     << "p_exc = " << formatDouble(hyper.pExc) << "\n"
     << "p_inh = " << formatDouble(hyper.pInh) << "\n"
     << "constant_input = " << formatDouble(hyper.constantInput) << "\n"
     << "x_force = " << formatDouble(hyper.xForce) << "\n"
     << "epsilon = " << formatDouble(hyper.epsilon) << "\n"
     << "epochs = " << hyper.epochs << "\n"
     << "homeostasis = " << (hyper.homeostasis == HomeostasisMode::Text ? "text" : "literal")
     << "\n"
     << "weight_init = " << (hyper.weightInit == WeightInit::FanIn ? "fan_in" : "raw")
     << "\n"
     << "gamma_lambda = " << formatDouble(pre.lambda) << "\n"
     << "gamma_formula = " << toString(pre.gammaFormula) << "\n"
     << "target_width = " << pre.targetWidth << "\n"
     << "target_height = " << pre.targetHeight << "\n"
     << "patch_width = " << pre.patchWidth << "\n"
     << "patch_height = " << pre.patchHeight << "\n"
     << "places_per_module = " << placesPerModule << "\n"
     << "feature_size = " << featureSize << "\n"
     << "seed = " << seed << "\n"
     << "workers = " << workers << "\n"
     << "shuffle = " << (shuffle ? "true" : "false") << "\n"
     << "stride = " << stride << "\n"
     << "limit = " << limit << "\n"
     << "sad_full_pipeline = " << (sadFullPipeline ? "true" : "false") << "\n";
  return os.str();
}

inline void RunConfig::validate() const {
  try {
    hyper.validate();
    pre.validate();
  } catch (const InvalidInputError& e) {
    throw ConfigError(e.what());
  }
  if (placesPerModule < 1) throw ConfigError("config: places_per_module must be >= 1");
  if (featureSize < 0) throw ConfigError("config: feature_size must be >= 0");
  if (workers < 0) throw ConfigError("config: workers must be >= 0");
  if (stride < 1) throw ConfigError("config: stride must be >= 1");
  if (limit < 0) throw ConfigError("config: limit must be >= 0");
}

/// Applies `key = value` lines from a stream onto a default config.
inline RunConfig parseConfigText(std::istream& in, const std::string& origin) {
  RunConfig cfg;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineNo) +
                        ": expected 'key = value'");
    cfg.set(detail::trim(trimmed.substr(0, eq)), detail::trim(trimmed.substr(eq + 1)));
  }
  return cfg;
}

inline RunConfig RunConfig::fromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parseConfigText(in, path);
}

}  // namespace vprtempo
