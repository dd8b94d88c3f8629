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

#ifndef FEDSIM_CONFIG_H_
#define FEDSIM_CONFIG_H_

#include <filesystem>
#include <string>

#include "fedsim/data.h"
#include "fedsim/experiment.h"

namespace fedsim {

// Everything one invocation needs. Parsed from a single JSON document in
// which every key is optional except `dataset.source` for file-backed data;
// a minimal config is {"dataset": {...}, "output_dir": "..."}.
struct RunConfig {
  ExperimentConfig experiment;
  data::DatasetManifest dataset;
  std::filesystem::path output_dir = "fedsim-out";
};

// Parses and validates. Unknown keys, wrong types and out-of-range values
// throw kConfig with the dotted path of the field, e.g.
// "network.batch_size: must be >= 1".
RunConfig ParseRunConfig(const std::string& json_text);
RunConfig LoadRunConfig(const std::filesystem::path& path);

// The fully-defaulted configuration as JSON. Parsing it back yields the same
// RunConfig.
std::string ResolvedConfigJson(const RunConfig& config);

}  // namespace fedsim

#endif  // FEDSIM_CONFIG_H_
