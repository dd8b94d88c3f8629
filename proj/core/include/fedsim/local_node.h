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

#ifndef FEDSIM_LOCAL_NODE_H_
#define FEDSIM_LOCAL_NODE_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "fedsim/features.h"
#include "fedsim/global_model.h"
#include "fedsim/nn.h"
#include "fedsim/semisup.h"

namespace fedsim {

struct NodeConfig {
  // Number of weight-bearing layers, counted from the output, that are kept
  // private when a global update arrives.
  std::size_t personal_layers = 2;
  nn::AdamConfig adam;
  semisup::PropagationParams propagation;
  double al_step = 0.01;
  std::size_t question_size = 2;
  // False pins theta at 0 so the node never asks.
  bool active_learning = true;
};

struct QuestionEvent {
  std::uint64_t window_id = 0;
  std::size_t predicted = 0;
  std::vector<std::size_t> candidates;
};

struct ClassifyResult {
  nn::Prediction prediction;
  std::optional<QuestionEvent> question;
};

struct LocalUpdate {
  nn::ModelWeights weights;  // Local Model only
  std::size_t sample_count = 0;
};

// A simulated device. It owns a Local Model (the one shared with the server)
// and a Personalized Local Model (used for classification, never shared),
// plus the device storage over which label propagation runs.
class ClientNode {
 public:
  ClientNode(std::size_t client_id, const GlobalModelState& initial,
             NodeConfig config);

  std::size_t client_id() const { return client_id_; }
  const NodeConfig& config() const { return config_; }

  // Seeds the device storage with labeled pre-training samples.
  void InstallPretrainingSeeds(std::span<const FeatureSample> seeds);

  // Classifies a standardized sample with the personalized model and stores
  // it unlabeled. Returns a question when the prediction is uncertain.
  ClassifyResult ClassifyWindow(FeatureSample sample);

  // User feedback for a stored window; adjusts the active-learning threshold
  // against the prediction made when the window was classified.
  void AnswerQuestion(std::uint64_t window_id, std::size_t truth);

  // Attaches a ground-truth label without involving active learning (used
  // when labels are free, e.g. the fully supervised baseline).
  void LabelWindow(std::uint64_t window_id, std::size_t truth);

  // Local model := global. Personalized model := global except for the last
  // `personal_layers` weight-bearing layers. Both Adam states restart.
  void ApplyGlobalUpdate(const GlobalModelState& global);

  std::size_t PropagateLabels();

  // Trains both models on every user-feedback and propagated label in the
  // storage. Returns nullopt (abstain) when there are none.
  std::optional<LocalUpdate> LocalTrain(std::size_t epochs,
                                        std::size_t batch_size,
                                        std::uint64_t seed);

  std::size_t TrainingLabelCount() const;

  const semisup::PropagationGraph& storage() const { return storage_; }
  const semisup::ActiveLearningState& al_state() const { return al_state_; }
  const nn::ModelWeights& local_model() const { return local_model_; }

  // Reading the personalized weights from outside the node is audited so
  // tests can prove the federation never touches them.
  const nn::ModelWeights& personalized_model() const {
    ++personalized_reads_;
    return personalized_model_;
  }
  std::size_t personalized_reads() const { return personalized_reads_; }

  std::size_t pending_questions() const { return pending_questions_.size(); }

 private:
  FeatureSample& StoredWindow(std::uint64_t window_id);

  std::size_t client_id_;
  NodeConfig config_;
  nn::ModelWeights local_model_;
  nn::AdamState local_adam_;
  nn::ModelWeights personalized_model_;
  nn::AdamState personalized_adam_;
  semisup::PropagationGraph storage_;
  semisup::ActiveLearningState al_state_;
  std::size_t n_classes_;
  // window_id -> class predicted when the question was raised
  std::map<std::uint64_t, std::size_t> pending_questions_;
  mutable std::size_t personalized_reads_ = 0;
};

}  // namespace fedsim

#endif  // FEDSIM_LOCAL_NODE_H_
