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

#include "fedsim/fed_protocol.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "fedsim/error.h"
#include "fedsim/logging.h"
#include "fedsim/random.h"

namespace fedsim::fed {
namespace {

double WeightOf(const RawUpdate& u, Weighting weighting) {
  return weighting == Weighting::kUniform ? 1.0 : static_cast<double>(u.sample_count);
}

template <typename Fn>
void ForEachParam(nn::ModelWeights& w, Fn&& fn) {
  std::size_t flat = 0;
  for (auto& layer : w.layers) {
    for (double& v : layer.weights) fn(v, flat++);
    for (double& v : layer.bias) fn(v, flat++);
  }
}

template <typename Fn>
void ForEachParamPair(nn::ModelWeights& dst, const nn::ModelWeights& src, Fn&& fn) {
  for (std::size_t k = 0; k < dst.layers.size(); ++k) {
    auto& d = dst.layers[k];
    const auto& s = src.layers[k];
    for (std::size_t i = 0; i < d.weights.size(); ++i) fn(d.weights[i], s.weights[i]);
    for (std::size_t i = 0; i < d.bias.size(); ++i) fn(d.bias[i], s.bias[i]);
  }
}

std::vector<double> PairMask(std::uint64_t seed, std::size_t lo, std::size_t hi,
                             std::size_t n, double scale) {
  Rng rng(DeriveSeed(seed, {lo, hi}));
  std::vector<double> mask(n);
  for (double& m : mask) m = rng.Uniform(-scale, scale);
  return mask;
}

void CheckSameShapes(std::span<const RawUpdate> raw) {
  for (const auto& u : raw) {
    if (!u.weights.SameShape(raw.front().weights)) {
      ThrowError(ErrorCode::kShape, "client " + std::to_string(u.client_id) +
                                        " sent weights with a different shape");
    }
  }
}

template <typename Fn>
void ParallelFor(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min(threads, n);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::vector<std::size_t> SelectClients(std::span<const std::size_t> eligible,
                                       const RoundConfig& cfg,
                                       std::uint64_t round_index) {
  if (!(cfg.client_fraction > 0.0 && cfg.client_fraction <= 1.0)) {
    ThrowError(ErrorCode::kConfig, "client_fraction must be in (0, 1]");
  }
  if (eligible.empty()) return {};
  // The epsilon keeps e.g. 0.3 * 10 = 3.0000000000000004 from rounding to 4.
  const double exact = cfg.client_fraction * static_cast<double>(eligible.size());
  const std::size_t count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(exact - 1e-9)), 1, eligible.size());

  std::vector<std::size_t> pool(eligible.begin(), eligible.end());
  std::sort(pool.begin(), pool.end());
  Rng rng(DeriveSeed(cfg.seed, {0x73656c, round_index}));
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.Below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<ClientUpdate> MaskUpdates(std::span<const RawUpdate> raw,
                                      const MaskOptions& options) {
  if (raw.empty()) return {};
  CheckSameShapes(raw);
  std::vector<std::size_t> order(raw.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return raw[a].client_id < raw[b].client_id;
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (raw[order[i]].client_id == raw[order[i - 1]].client_id) {
      ThrowError(ErrorCode::kState, "duplicate client id in update set");
    }
  }

  const std::size_t n_params = raw.front().weights.ParameterCount();
  std::vector<ClientUpdate> out;
  out.reserve(raw.size());
  for (std::size_t idx : order) {
    const RawUpdate& u = raw[idx];
    ClientUpdate cu;
    cu.client_id = u.client_id;
    cu.sample_count = u.sample_count;
    cu.aggregation_weight = WeightOf(u, options.weighting);
    cu.masked_weights = u.weights;
    const double w = cu.aggregation_weight;
    ForEachParam(cu.masked_weights, [w](double& v, std::size_t) { v *= w; });
    out.push_back(std::move(cu));
  }
  for (std::size_t a = 0; a < out.size(); ++a) {
    for (std::size_t b = a + 1; b < out.size(); ++b) {
      const auto mask = PairMask(options.seed, out[a].client_id, out[b].client_id,
                                 n_params, options.mask_scale);
      ForEachParam(out[a].masked_weights, [&](double& v, std::size_t i) { v += mask[i]; });
      ForEachParam(out[b].masked_weights, [&](double& v, std::size_t i) { v -= mask[i]; });
    }
  }
  return out;
}

std::optional<nn::ModelWeights> Aggregate(std::span<const ClientUpdate> updates,
                                          std::uint64_t previous_version) {
  if (updates.empty()) {
    log::Warn("aggregation skipped: no client updates");
    return std::nullopt;
  }
  std::vector<const ClientUpdate*> order;
  for (const auto& u : updates) {
    if (!u.masked_weights.SameShape(updates.front().masked_weights)) {
      ThrowError(ErrorCode::kShape, "client " + std::to_string(u.client_id) +
                                        " update has a different shape");
    }
    order.push_back(&u);
  }
  std::sort(order.begin(), order.end(), [](const ClientUpdate* a, const ClientUpdate* b) {
    return a->client_id < b->client_id;
  });

  nn::ModelWeights sum = nn::ZerosLike(order.front()->masked_weights);
  double total_weight = 0.0;
  for (const ClientUpdate* u : order) {
    ForEachParamPair(sum, u->masked_weights, [](double& d, double s) { d += s; });
    total_weight += u->aggregation_weight;
  }
  if (!(total_weight > 0.0)) {
    ThrowError(ErrorCode::kNumeric, "total aggregation weight is not positive");
  }
  ForEachParam(sum, [total_weight](double& v, std::size_t) { v /= total_weight; });
  if (!sum.AllFinite()) ThrowError(ErrorCode::kNumeric, "aggregate is not finite");
  sum.version = previous_version + 1;
  return sum;
}

nn::ModelWeights PlainWeightedAverage(std::span<const RawUpdate> raw,
                                      Weighting weighting) {
  if (raw.empty()) ThrowError(ErrorCode::kState, "no updates to average");
  CheckSameShapes(raw);
  nn::ModelWeights sum = nn::ZerosLike(raw.front().weights);
  double total = 0.0;
  for (const auto& u : raw) {
    const double w = WeightOf(u, weighting);
    ForEachParamPair(sum, u.weights, [w](double& d, double s) { d += w * s; });
    total += w;
  }
  ForEachParam(sum, [total](double& v, std::size_t) { v /= total; });
  return sum;
}

RoundMetrics RunRound(GlobalModelState& global, std::span<ClientNode> clients,
                      const RoundOptions& options, std::uint64_t round_index,
                      ServerAudit* audit) {
  RoundMetrics metrics;
  metrics.round_index = round_index;

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    if (!options.eligible || options.eligible(clients[i])) eligible.push_back(i);
  }
  // Selection works on positions; ids are reported from the nodes.
  const auto picked = SelectClients(eligible, options.round, round_index);
  for (std::size_t pos : picked) metrics.selected.push_back(clients[pos].client_id());

  std::vector<std::optional<LocalUpdate>> results(picked.size());
  std::vector<std::size_t> propagated(picked.size(), 0);
  ParallelFor(picked.size(), options.threads, [&](std::size_t i) {
    ClientNode& node = clients[picked[i]];
    node.ApplyGlobalUpdate(global);
    if (options.label_propagation) propagated[i] = node.PropagateLabels();
    results[i] = node.LocalTrain(
        options.epochs, options.batch_size,
        DeriveSeed(options.train_seed, {round_index, node.client_id()}));
  });

  std::vector<RawUpdate> raw;
  for (std::size_t i = 0; i < picked.size(); ++i) {
    metrics.propagated += propagated[i];
    if (!results[i]) continue;
    const std::size_t id = clients[picked[i]].client_id();
    metrics.participants.push_back(id);
    metrics.labeled_samples += results[i]->sample_count;
    raw.push_back({id, std::move(results[i]->weights), results[i]->sample_count});
  }
  if (raw.empty()) {
    log::Info("round " + std::to_string(round_index) +
              ": every selected client abstained; global model unchanged");
    return metrics;
  }

  // Server side: from here on only masked updates are visible.
  auto masked = MaskUpdates(
      raw, {DeriveSeed(options.mask_seed, {round_index}), options.weighting,
            options.mask_scale});
  raw.clear();
  if (audit != nullptr) audit->received.push_back(masked);
  auto aggregated = Aggregate(masked, global.weights.version);
  if (aggregated) {
    global.weights = std::move(*aggregated);
    metrics.aggregated = true;
  }
  return metrics;
}

}  // namespace fedsim::fed
