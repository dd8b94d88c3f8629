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

#ifndef FEDSIM_FED_PROTOCOL_H_
#define FEDSIM_FED_PROTOCOL_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "fedsim/global_model.h"
#include "fedsim/local_node.h"
#include "fedsim/nn.h"

namespace fedsim::fed {

struct RoundConfig {
  double client_fraction = 0.3;
  std::size_t rounds = 10;
  std::uint64_t seed = 0;
};

// ceil(client_fraction * |eligible|) distinct ids, uniformly at random,
// returned in ascending order. Deterministic in (cfg.seed, round_index).
std::vector<std::size_t> SelectClients(std::span<const std::size_t> eligible,
                                       const RoundConfig& cfg,
                                       std::uint64_t round_index);

// How a client's contribution is weighted in the average.
enum class Weighting { kSampleCount, kUniform };

// What a client would send without secure aggregation. Never handed to the
// server.
struct RawUpdate {
  std::size_t client_id = 0;
  nn::ModelWeights weights;
  std::size_t sample_count = 0;
};

// What the server receives: the client's weighted parameters plus pairwise
// masks that only cancel in the sum over all participants.
struct ClientUpdate {
  std::size_t client_id = 0;
  std::size_t sample_count = 0;
  double aggregation_weight = 0.0;
  nn::ModelWeights masked_weights;
};

struct MaskOptions {
  std::uint64_t seed = 0;
  Weighting weighting = Weighting::kSampleCount;
  // Masks are uniform in [-mask_scale, mask_scale].
  double mask_scale = 1e3;
};

// Pairwise additive masking without dropout recovery. For each pair of
// clients i < j (by client id) a mask seeded from (seed, i, j) is added to
// i's weighted update and subtracted from j's.
std::vector<ClientUpdate> MaskUpdates(std::span<const RawUpdate> raw,
                                      const MaskOptions& options);

// Parameter-wise sum of masked updates divided by the total aggregation
// weight, reduced in ascending client_id order. The result has version
// previous_version + 1. Returns nullopt for an empty update set.
std::optional<nn::ModelWeights> Aggregate(std::span<const ClientUpdate> updates,
                                          std::uint64_t previous_version);

// Plaintext weighted average; the reference the masked path must match.
nn::ModelWeights PlainWeightedAverage(std::span<const RawUpdate> raw,
                                      Weighting weighting);

struct RoundOptions {
  RoundConfig round;
  std::size_t epochs = 10;
  std::size_t batch_size = 30;
  Weighting weighting = Weighting::kSampleCount;
  double mask_scale = 1e3;
  bool label_propagation = true;
  std::uint64_t train_seed = 0;
  std::uint64_t mask_seed = 0;
  std::size_t threads = 1;
  // Devices that may take part (idle, charging, ...). Empty means everyone.
  std::function<bool(const ClientNode&)> eligible;
};

struct RoundMetrics {
  std::uint64_t round_index = 0;
  std::vector<std::size_t> selected;
  std::vector<std::size_t> participants;  // selected and not abstaining
  std::size_t labeled_samples = 0;        // summed over participants
  std::size_t propagated = 0;             // labels added by propagation
  bool aggregated = false;
};

// Everything the server component observed, for tests.
struct ServerAudit {
  std::vector<std::vector<ClientUpdate>> received;
};

// One communication round: select, broadcast, propagate + train locally,
// mask, aggregate. Clients with no training labels abstain; if every selected
// client abstains the global model is left unchanged.
RoundMetrics RunRound(GlobalModelState& global, std::span<ClientNode> clients,
                      const RoundOptions& options, std::uint64_t round_index,
                      ServerAudit* audit = nullptr);

}  // namespace fedsim::fed

#endif  // FEDSIM_FED_PROTOCOL_H_
