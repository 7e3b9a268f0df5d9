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

#include <stdexcept>
#include <string>

namespace vprtempo {

// Error taxonomy; the CLI maps each class to a distinct exit code
// (config=2, dataset=3, model=4, io=5, other input/state=6).

struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidStateError : std::logic_error {
  using std::logic_error::logic_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vprtempo
