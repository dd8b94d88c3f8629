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

#include "fedsim/local_node.h"

#include "fedsim/error.h"

namespace fedsim {
namespace {

bool UsedForTraining(const FeatureSample& s) {
  return s.label_source == LabelSource::kUserFeedback ||
         s.label_source == LabelSource::kPropagated;
}

}  // namespace

ClientNode::ClientNode(std::size_t client_id, const GlobalModelState& initial,
                       NodeConfig config)
    : client_id_(client_id),
      config_(config),
      local_model_(initial.weights),
      local_adam_(nn::AdamState::For(initial.weights, config.adam)),
      personalized_model_(initial.weights),
      personalized_adam_(nn::AdamState::For(initial.weights, config.adam)),
      storage_(config.propagation),
      n_classes_(initial.weights.n_classes()) {
  if (config_.personal_layers > initial.weights.layers.size()) {
    ThrowError(ErrorCode::kConfig,
               "personal_layers (" + std::to_string(config_.personal_layers) +
                   ") exceeds the number of weight-bearing layers (" +
                   std::to_string(initial.weights.layers.size()) + ")");
  }
  al_state_.step = config_.al_step;
  if (!config_.active_learning) {
    al_state_.theta = 0.0;
    al_state_.pinned = true;
  }
}

void ClientNode::InstallPretrainingSeeds(std::span<const FeatureSample> seeds) {
  for (const FeatureSample& seed : seeds) {
    FeatureSample s = seed;
    s.assigned_label = s.true_label;
    s.label_source = LabelSource::kPretraining;
    s.origin = DataOrigin::kPretraining;
    storage_.Add(std::move(s));
  }
}

ClassifyResult ClientNode::ClassifyWindow(FeatureSample sample) {
  if (sample.origin == DataOrigin::kTest) {
    ThrowError(ErrorCode::kState, "client " + std::to_string(client_id_) +
                                      " was given a test-partition sample");
  }
  if (storage_.Find(sample.window_id) != nullptr) {
    ThrowError(ErrorCode::kState,
               "window " + std::to_string(sample.window_id) + " already stored");
  }
  ClassifyResult result;
  result.prediction = nn::Forward(personalized_model_, sample.features);

  sample.assigned_label.reset();
  sample.label_source = LabelSource::kNone;
  const std::uint64_t window_id = sample.window_id;
  storage_.Add(std::move(sample));

  if (semisup::ShouldQuery(result.prediction, al_state_)) {
    QuestionEvent q;
    q.window_id = window_id;
    q.predicted = result.prediction.top_class;
    q.candidates = semisup::BuildQuestion(result.prediction, config_.question_size);
    pending_questions_[window_id] = q.predicted;
    result.question = std::move(q);
  }

  if (storage_.size() > storage_.params().max_size) {
    std::vector<std::uint64_t> keep;
    keep.reserve(pending_questions_.size());
    for (const auto& [id, predicted] : pending_questions_) keep.push_back(id);
    semisup::PruneGraph(storage_, keep);
  }
  return result;
}

FeatureSample& ClientNode::StoredWindow(std::uint64_t window_id) {
  FeatureSample* s = storage_.Find(window_id);
  if (s == nullptr) {
    ThrowError(ErrorCode::kState, "client " + std::to_string(client_id_) +
                                      ": unknown window " + std::to_string(window_id));
  }
  return *s;
}

void ClientNode::AnswerQuestion(std::uint64_t window_id, std::size_t truth) {
  FeatureSample& s = StoredWindow(window_id);
  const auto pending = pending_questions_.find(window_id);
  if (pending == pending_questions_.end()) {
    ThrowError(ErrorCode::kState, "client " + std::to_string(client_id_) +
                                      ": no question pending for window " +
                                      std::to_string(window_id));
  }
  if (truth >= n_classes_) ThrowError(ErrorCode::kShape, "answer class out of range");
  s.assigned_label = truth;
  s.label_source = LabelSource::kUserFeedback;
  semisup::RecordFeedback(al_state_, pending->second, truth);
  pending_questions_.erase(pending);
}

void ClientNode::LabelWindow(std::uint64_t window_id, std::size_t truth) {
  FeatureSample& s = StoredWindow(window_id);
  if (truth >= n_classes_) ThrowError(ErrorCode::kShape, "label class out of range");
  s.assigned_label = truth;
  s.label_source = LabelSource::kUserFeedback;
}

void ClientNode::ApplyGlobalUpdate(const GlobalModelState& global) {
  if (!global.weights.SameShape(local_model_)) {
    ThrowError(ErrorCode::kShape, "global weights do not match the client's layer spec");
  }
  local_model_ = global.weights;
  const std::size_t n_layers = global.weights.layers.size();
  const std::size_t shared = n_layers - config_.personal_layers;
  for (std::size_t k = 0; k < shared; ++k) {
    personalized_model_.layers[k] = global.weights.layers[k];
  }
  personalized_model_.version = global.weights.version;
  local_adam_ = nn::AdamState::For(local_model_, config_.adam);
  personalized_adam_ = nn::AdamState::For(personalized_model_, config_.adam);
}

std::size_t ClientNode::PropagateLabels() {
  if (storage_.LabeledCount() == 0) return 0;
  return semisup::PropagateLabels(storage_, n_classes_);
}

std::size_t ClientNode::TrainingLabelCount() const {
  std::size_t n = 0;
  for (const auto& s : storage_.nodes()) {
    if (UsedForTraining(s)) ++n;
  }
  return n;
}

std::optional<LocalUpdate> ClientNode::LocalTrain(std::size_t epochs,
                                                  std::size_t batch_size,
                                                  std::uint64_t seed) {
  std::vector<nn::Example> data;
  for (const auto& s : storage_.nodes()) {
    if (UsedForTraining(s)) data.push_back({s.features, *s.assigned_label});
  }
  if (data.empty()) return std::nullopt;

  const nn::TrainOptions options{epochs, batch_size, seed};
  nn::Train(local_model_, local_adam_, data, options);
  nn::Train(personalized_model_, personalized_adam_, data, options);
  return LocalUpdate{local_model_, data.size()};
}

}  // namespace fedsim
