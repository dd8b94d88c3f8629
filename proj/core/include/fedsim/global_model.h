// Copyright 2026 The fedsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FEDSIM_GLOBAL_MODEL_H_
#define FEDSIM_GLOBAL_MODEL_H_

#include <vector>

#include "fedsim/features.h"
#include "fedsim/nn.h"

namespace fedsim {

// What the server distributes: the current global weights together with the
// feature scale every client must apply before classification.
struct GlobalModelState {
  nn::ModelWeights weights;
  Standardizer standardizer;

  std::uint64_t version() const { return weights.version; }
  std::vector<nn::LayerSpec> layer_spec() const { return weights.Specs(); }
};

}  // namespace fedsim

#endif  // FEDSIM_GLOBAL_MODEL_H_
