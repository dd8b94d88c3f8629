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

#ifndef FEDSIM_DATA_H_
#define FEDSIM_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fedsim/features.h"

namespace fedsim::data {

enum class DatasetSource { kWisdmRaw, kGenericCsv, kSynthetic };

struct ColumnMapping {
  std::string user = "user";
  std::string activity = "activity";
  std::string timestamp = "timestamp";
  std::vector<std::string> axes;  // concatenated in this order
};

// Knobs of the synthetic generator. Each class has a sinusoid archetype per
// axis; each user perturbs amplitude, offset, frequency, noise and the way
// they perform each individual activity. user_variability scales all
// per-user perturbations (0 gives identical users).
struct SynthConfig {
  std::size_t n_users = 20;
  std::size_t n_classes = 5;
  std::size_t windows_per_user = 60;  // in non-overlapping window lengths
  std::size_t n_axes = 3;
  std::size_t window_len = 128;
  std::size_t bout_windows = 3;
  double user_variability = 1.35;
  double sampling_rate_hz = 20.0;
};

struct DatasetManifest {
  DatasetSource source = DatasetSource::kSynthetic;
  std::filesystem::path path;
  ColumnMapping columns;
  double sampling_rate_hz = 20.0;
  // Activities to keep, in class-index order. Matching is case-insensitive.
  std::vector<std::string> activities;
  // Raw activity name -> whitelist name, e.g. Upstairs -> stairs.
  std::map<std::string, std::string> aliases;
  SynthConfig synthetic;
};

struct Dataset {
  std::vector<std::string> class_names;
  std::vector<SensorStream> streams;  // one per user, sorted by user id
  std::size_t skipped_lines = 0;      // malformed input records
  std::size_t filtered_samples = 0;   // activity not in the whitelist

  std::size_t n_classes() const { return class_names.size(); }
};

// WISDM raw text: `user,activity,timestamp,x,y,z;` records. Malformed
// records are skipped and counted; samples are grouped per user and sorted by
// timestamp.
Dataset LoadWisdm(const std::filesystem::path& path,
                  const DatasetManifest& manifest);

// Header-driven CSV; axis columns named by the manifest are concatenated.
Dataset LoadGenericCsv(const std::filesystem::path& path,
                       const DatasetManifest& manifest);

// Writes the columns user,activity,timestamp,axis_0..axis_{n-1} with
// round-trip exact numbers.
void WriteGenericCsv(const Dataset& dataset, const std::filesystem::path& path);

Dataset SynthGenerate(const SynthConfig& config, std::uint64_t seed);

// Dispatches on manifest.source.
Dataset Load(const DatasetManifest& manifest, std::uint64_t seed);

std::string SourceName(DatasetSource source);

}  // namespace fedsim::data

#endif  // FEDSIM_DATA_H_
