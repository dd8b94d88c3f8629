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

#ifndef FEDSIM_SEMISUP_H_
#define FEDSIM_SEMISUP_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fedsim/features.h"
#include "fedsim/nn.h"

namespace fedsim::semisup {

// Uncertainty-threshold active learning with a variable threshold. A window
// is queried when the top class probability is below theta; correct
// predictions shrink theta, wrong ones grow it (capped at 1).
struct ActiveLearningState {
  double theta = 1.0;
  double step = 0.01;
  std::uint64_t questions_asked = 0;
  std::uint64_t windows_seen = 0;
  // When set, theta is never updated (used to disable querying by pinning 0).
  bool pinned = false;

  double QuestionRate() const {
    return windows_seen == 0 ? 0.0
                             : static_cast<double>(questions_asked) /
                                   static_cast<double>(windows_seen);
  }
};

bool ShouldQuery(const nn::Prediction& prediction, ActiveLearningState& state);

// Top-k classes by probability, descending; equal probabilities keep class
// index order.
std::vector<std::size_t> BuildQuestion(const nn::Prediction& prediction,
                                       std::size_t k = 2);

void RecordFeedback(ActiveLearningState& state, std::size_t predicted,
                    std::size_t truth);

// K(x, x') = exp(-gamma * |x - x'|^2)
double RbfKernel(std::span<const double> a, std::span<const double> b,
                 double gamma);

struct PropagationParams {
  double gamma = 20.0;
  double reliability_threshold = 0.9;
  std::size_t max_iterations = 30;
  double mass_floor = 1e-12;
  std::size_t max_size = 2000;
};

// The per-client store of labeled and unlabeled samples. Nodes are kept in
// insertion order, which is also their age order (front is oldest).
class PropagationGraph {
 public:
  PropagationGraph() = default;
  explicit PropagationGraph(PropagationParams params);

  const PropagationParams& params() const { return params_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<FeatureSample>& nodes() const { return nodes_; }

  // Appends a node and returns a reference to it. Test-partition samples are
  // rejected with kState.
  FeatureSample& Add(FeatureSample sample);
  FeatureSample* Find(std::uint64_t window_id);
  const FeatureSample* Find(std::uint64_t window_id) const;

  std::size_t LabeledCount() const;
  std::size_t CountBySource(LabelSource source) const;

  // Mutable access for the algorithms below.
  std::vector<FeatureSample>& mutable_nodes() { return nodes_; }

 private:
  PropagationParams params_;
  std::vector<FeatureSample> nodes_;
};

// Repeated kernel-vote sweeps. In each sweep every unlabeled node is scored
// against the labeled set as it stood at the start of the sweep; a node is
// labeled (source kPropagated) when its best normalized class score reaches
// the reliability threshold and its total kernel mass exceeds the floor.
// Stops when a sweep labels nothing or after max_iterations. Returns the
// number of newly labeled nodes. Throws kState if nothing is labeled.
std::size_t PropagateLabels(PropagationGraph& graph, std::size_t n_classes);

// Evicts down to max_size: oldest unlabeled first, then oldest propagated,
// then (only if still over) oldest of the rest. Windows listed in `keep` are
// never evicted. Returns the number of evicted nodes.
std::size_t PruneGraph(PropagationGraph& graph,
                       std::span<const std::uint64_t> keep = {});

}  // namespace fedsim::semisup

#endif  // FEDSIM_SEMISUP_H_
