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

#include "fedsim/semisup.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsim/error.h"

namespace fedsim::semisup {

bool ShouldQuery(const nn::Prediction& prediction, ActiveLearningState& state) {
  state.windows_seen += 1;
  return prediction.top_prob < state.theta;
}

std::vector<std::size_t> BuildQuestion(const nn::Prediction& prediction,
                                       std::size_t k) {
  std::vector<std::size_t> order(prediction.probabilities.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return prediction.probabilities[a] > prediction.probabilities[b];
  });
  order.resize(std::min(k, order.size()));
  return order;
}

void RecordFeedback(ActiveLearningState& state, std::size_t predicted,
                    std::size_t truth) {
  state.questions_asked += 1;
  if (state.pinned) return;
  if (predicted == truth) {
    state.theta *= 1.0 - state.step;
  } else {
    state.theta = std::min(1.0, state.theta * (1.0 + state.step));
  }
}

double RbfKernel(std::span<const double> a, std::span<const double> b,
                 double gamma) {
  if (a.size() != b.size()) ThrowError(ErrorCode::kShape, "kernel inputs differ in length");
  double dist2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    dist2 += d * d;
  }
  return std::exp(-gamma * dist2);
}

PropagationGraph::PropagationGraph(PropagationParams params) : params_(params) {
  if (!(params_.gamma > 0.0)) ThrowError(ErrorCode::kConfig, "gamma must be > 0");
  if (!(params_.reliability_threshold > 0.5 && params_.reliability_threshold < 1.0)) {
    ThrowError(ErrorCode::kConfig, "reliability_threshold must be in (0.5, 1)");
  }
  if (params_.max_size == 0) ThrowError(ErrorCode::kConfig, "max_size must be >= 1");
}

FeatureSample& PropagationGraph::Add(FeatureSample sample) {
  if (sample.origin == DataOrigin::kTest) {
    ThrowError(ErrorCode::kState, "test-partition samples cannot be stored on a client");
  }
  if (sample.assigned_label.has_value() == (sample.label_source == LabelSource::kNone)) {
    ThrowError(ErrorCode::kState, "assigned_label must be present iff label_source is set");
  }
  nodes_.push_back(std::move(sample));
  return nodes_.back();
}

FeatureSample* PropagationGraph::Find(std::uint64_t window_id) {
  for (auto& n : nodes_) {
    if (n.window_id == window_id) return &n;
  }
  return nullptr;
}

const FeatureSample* PropagationGraph::Find(std::uint64_t window_id) const {
  for (const auto& n : nodes_) {
    if (n.window_id == window_id) return &n;
  }
  return nullptr;
}

std::size_t PropagationGraph::LabeledCount() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(),
                    [](const FeatureSample& s) { return s.labeled(); }));
}

std::size_t PropagationGraph::CountBySource(LabelSource source) const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [source](const FeatureSample& s) {
        return s.label_source == source;
      }));
}

std::size_t PropagateLabels(PropagationGraph& graph, std::size_t n_classes) {
  auto& nodes = graph.mutable_nodes();
  const auto& params = graph.params();
  if (graph.LabeledCount() == 0) {
    ThrowError(ErrorCode::kState, "label propagation needs at least one labeled node");
  }

  std::size_t total = 0;
  std::vector<std::size_t> sources;
  std::vector<std::pair<std::size_t, std::size_t>> assignments;  // node, class
  std::vector<double> scores(n_classes);
  for (std::size_t sweep = 0; sweep < params.max_iterations; ++sweep) {
    sources.clear();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].labeled()) sources.push_back(i);
    }
    assignments.clear();
    for (std::size_t u = 0; u < nodes.size(); ++u) {
      if (nodes[u].labeled()) continue;
      std::fill(scores.begin(), scores.end(), 0.0);
      for (std::size_t v : sources) {
        const std::size_t label = *nodes[v].assigned_label;
        if (label >= n_classes) ThrowError(ErrorCode::kShape, "label out of range");
        scores[label] += RbfKernel(nodes[u].features, nodes[v].features, params.gamma);
      }
      const double mass = std::accumulate(scores.begin(), scores.end(), 0.0);
      if (!(mass > params.mass_floor)) continue;
      const auto best = std::max_element(scores.begin(), scores.end());
      if (*best / mass >= params.reliability_threshold) {
        assignments.emplace_back(u, static_cast<std::size_t>(best - scores.begin()));
      }
    }
    if (assignments.empty()) break;
    for (const auto& [u, label] : assignments) {
      nodes[u].assigned_label = label;
      nodes[u].label_source = LabelSource::kPropagated;
    }
    total += assignments.size();
  }
  return total;
}

std::size_t PruneGraph(PropagationGraph& graph, std::span<const std::uint64_t> keep) {
  auto& nodes = graph.mutable_nodes();
  const std::size_t max_size = graph.params().max_size;
  if (nodes.size() <= max_size) return 0;

  std::size_t excess = nodes.size() - max_size;
  std::vector<bool> evict(nodes.size(), false);
  auto pass = [&](auto&& eligible) {
    for (std::size_t i = 0; i < nodes.size() && excess > 0; ++i) {
      if (evict[i] || std::find(keep.begin(), keep.end(), nodes[i].window_id) != keep.end()) {
        continue;
      }
      if (eligible(nodes[i])) {
        evict[i] = true;
        --excess;
      }
    }
  };
  pass([](const FeatureSample& s) { return s.label_source == LabelSource::kNone; });
  pass([](const FeatureSample& s) { return s.label_source == LabelSource::kPropagated; });
  pass([](const FeatureSample&) { return true; });

  std::size_t evicted = 0;
  std::vector<FeatureSample> kept;
  kept.reserve(max_size);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (evict[i]) {
      ++evicted;
    } else {
      kept.push_back(std::move(nodes[i]));
    }
  }
  nodes = std::move(kept);
  return evicted;
}

}  // namespace fedsim::semisup
