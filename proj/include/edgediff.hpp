// Copyright 2026 The edgediff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EDGEDIFF_EDGEDIFF_HPP_
#define EDGEDIFF_EDGEDIFF_HPP_

#include "edgediff/core.hpp"
#include "edgediff/graph.hpp"
#include "edgediff/graph_io.hpp"
#include "edgediff/autodiff.hpp"
#include "edgediff/sde.hpp"
#include "edgediff/score_net.hpp"
#include "edgediff/training.hpp"
#include "edgediff/checkpoint.hpp"
#include "edgediff/datasets.hpp"
#include "edgediff/metrics.hpp"
#include "edgediff/config.hpp"
#include "edgediff/commands.hpp"

#endif  // EDGEDIFF_EDGEDIFF_HPP_
