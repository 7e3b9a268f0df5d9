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

// Umbrella header. image_io.hpp and dataset.hpp additionally require OpenCV
// (imgcodecs) at link time; include them directly if you only need the
// numeric core without file I/O.

#include "vprtempo/config.hpp"
#include "vprtempo/dataset.hpp"
#include "vprtempo/ensemble.hpp"
#include "vprtempo/errors.hpp"
#include "vprtempo/image.hpp"
#include "vprtempo/image_io.hpp"
#include "vprtempo/metrics.hpp"
#include "vprtempo/model_io.hpp"
#include "vprtempo/network.hpp"
#include "vprtempo/rng.hpp"
