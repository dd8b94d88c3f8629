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

#ifndef FEDSIM_EXPERIMENT_H_
#define FEDSIM_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedsim/data.h"
#include "fedsim/fed_protocol.h"
#include "fedsim/features.h"
#include "fedsim/global_model.h"
#include "fedsim/local_node.h"
#include "fedsim/nn.h"
#include "fedsim/semisup.h"

namespace fedsim {

enum class Ablation {
  kFull,               // active learning + label propagation + personalization
  kAlOnly,             // no label propagation
  kLpOnly,             // no questions (theta pinned to 0)
  kFullLabelsFedAvg,   // every window labeled for free, no personalization
  kNoPersonalization,  // full pipeline with personal_layers = 0
};

std::string AblationName(Ablation a);
std::optional<Ablation> ParseAblation(std::string_view name);
std::vector<Ablation> AllAblations();

struct PartitionFractions {
  double pt = 0.15;
  double tr = 0.65;
  double ts = 0.20;
};

struct ExperimentConfig {
  PartitionFractions fractions;
  std::size_t shards = 3;
  fed::RoundConfig round;  // round.seed is overridden per repeat
  std::size_t personal_layers = 2;
  Ablation ablation = Ablation::kFull;
  std::size_t repeats = 10;
  std::uint64_t master_seed = 42;

  // Network and local training.
  std::vector<std::size_t> hidden = {128, 64, 32, 16};
  nn::AdamConfig adam;
  std::size_t epochs = 10;
  std::size_t batch_size = 30;
  std::size_t pretrain_epochs = 40;

  // Semi-supervised learning.
  double al_step = 0.01;
  std::size_t question_size = 2;
  semisup::PropagationParams propagation;
  std::size_t seed_samples = 200;

  // Segmentation.
  std::size_t window_len = 128;
  double overlap = 0.5;

  // Federation.
  fed::Weighting weighting = fed::Weighting::kSampleCount;
  double mask_scale = 1e3;
  // Stop a shard's rounds early when test F1 has not improved by more than
  // early_stop_min_delta for this many rounds. 0 disables.
  std::size_t early_stop_patience = 0;
  double early_stop_min_delta = 1e-3;

  std::size_t threads = 1;

  // Throws kConfig naming the offending field.
  void Validate() const;
};

struct UserPartition {
  std::vector<std::string> pt;
  std::vector<std::string> tr;
  std::vector<std::string> ts;
};

// Shuffles users and slices round(pt*N) / round(ts*N) users for Pt and Ts;
// every remaining user goes to Tr.
UserPartition PartitionUsers(std::span<const std::string> users,
                             const PartitionFractions& fractions,
                             std::uint64_t seed);

// Random permutation of [0, n_items) split into `shards` parts whose sizes
// differ by at most one (earlier shards take the extra items).
std::vector<std::vector<std::size_t>> MakeShards(std::size_t n_items,
                                                 std::size_t shards,
                                                 std::uint64_t seed);

struct PretrainResult {
  GlobalModelState global;
  std::vector<FeatureSample> seeds;  // standardized, labeled
};

// Fits the standardizer on `pt_samples` (raw features), trains the global
// model on the standardized set and picks a class-stratified sample of
// min(seed_samples, |Pt|) seed labels for the clients' propagation graphs.
PretrainResult Pretrain(std::span<const FeatureSample> pt_samples,
                        std::size_t n_classes, const ExperimentConfig& cfg,
                        std::uint64_t seed);

struct RoundRecord {
  std::size_t round = 0;  // 1-based within the shard
  double ts_f1 = 0.0;
  std::size_t participants = 0;
  std::size_t labeled_samples = 0;
  std::size_t propagated = 0;
  bool aggregated = false;
};

struct ShardRecord {
  std::size_t shard = 0;  // 1-based
  double tr_f1 = 0.0;
  double question_rate = 0.0;
  std::size_t windows = 0;
  std::size_t questions = 0;
  std::vector<std::optional<double>> tr_class_f1;
  double ts_f1_start = 0.0;  // global model entering the shard
  std::vector<RoundRecord> rounds;
};

struct RepeatRecord {
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  std::size_t n_pt = 0, n_tr = 0, n_ts = 0;
  double ts_baseline_f1 = 0.0;  // pretrained model
  std::vector<ShardRecord> shards;
  nn::ModelWeights final_global;
};

struct ExperimentReport {
  Ablation ablation = Ablation::kFull;
  std::vector<std::string> class_names;
  std::vector<RepeatRecord> repeats;

  // Mean over repeats of a per-shard quantity (shard is 1-based).
  double MeanTrF1(std::size_t shard) const;
  double MeanQuestionRate(std::size_t shard) const;
  double MeanTsBaseline() const;
  // Test F1 after the final round of the final shard.
  double MeanFinalTsF1() const;
};

// Observation points for tests (ordering and data-provenance checks).
struct HarnessEvent {
  enum class Kind { kClassify, kRound, kBroadcast, kShardEnd };
  Kind kind = Kind::kClassify;
  std::size_t repeat = 0;
  std::size_t shard = 0;
  std::size_t client = 0;
  DataOrigin origin = DataOrigin::kTraining;
  std::span<const ClientNode> clients;  // set for kShardEnd
};

struct RunHooks {
  std::function<void(const HarnessEvent&)> observer;
};

ExperimentReport RunExperiment(const ExperimentConfig& cfg,
                               const data::Dataset& dataset,
                               const RunHooks& hooks = {});

// Long-format CSV: repeat,shard,round,split,metric,activity,value.
std::string ReportCsv(const ExperimentReport& report);
std::string ReportSummaryJson(const ExperimentReport& report);

}  // namespace fedsim

#endif  // FEDSIM_EXPERIMENT_H_
