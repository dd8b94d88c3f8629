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

#include "fedsim/nn.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fedsim/error.h"
#include "fedsim/logging.h"
#include "fedsim/random.h"

namespace fedsim::nn {
namespace {

void CheckInput(const ModelWeights& weights, std::span<const double> features) {
  if (weights.layers.empty()) {
    ThrowError(ErrorCode::kShape, "network has no layers");
  }
  if (features.size() != weights.input_dim()) {
    std::ostringstream msg;
    msg << "feature vector has " << features.size()
        << " entries, network expects " << weights.input_dim();
    ThrowError(ErrorCode::kShape, msg.str());
  }
}

// out = W * in + b
void Affine(const DenseLayer& layer, std::span<const double> in,
            std::span<double> out) {
  for (std::size_t r = 0; r < layer.output_dim; ++r) {
    const double* row = layer.weights.data() + r * layer.input_dim;
    double acc = layer.bias[r];
    for (std::size_t c = 0; c < layer.input_dim; ++c) acc += row[c] * in[c];
    out[r] = acc;
  }
}

// Numerically stable in-place softmax; returns log(sum(exp(z - max))) + max,
// i.e. the log-partition, so callers can form log-probabilities exactly.
double SoftmaxInPlace(std::span<double> z) {
  const double max = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - max);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return max + std::log(sum);
}

// Per-layer scratch reused across samples of a batch.
struct Workspace {
  // activations[0] is the input copy, activations[k] the output of layer k-1.
  std::vector<std::vector<double>> activations;
  std::vector<std::vector<double>> deltas;

  explicit Workspace(const ModelWeights& w) {
    activations.resize(w.layers.size() + 1);
    deltas.resize(w.layers.size());
    activations[0].resize(w.input_dim());
    for (std::size_t k = 0; k < w.layers.size(); ++k) {
      activations[k + 1].resize(w.layers[k].output_dim);
      deltas[k].resize(w.layers[k].output_dim);
    }
  }
};

// Runs the forward pass into ws and returns the sample's cross-entropy.
double ForwardInto(const ModelWeights& w, const Example& ex, Workspace& ws) {
  std::copy(ex.features.begin(), ex.features.end(), ws.activations[0].begin());
  const std::size_t n_layers = w.layers.size();
  double log_partition = 0.0;
  double label_logit = 0.0;
  for (std::size_t k = 0; k < n_layers; ++k) {
    auto& out = ws.activations[k + 1];
    Affine(w.layers[k], ws.activations[k], out);
    if (k + 1 < n_layers) {
      for (double& v : out) v = v > 0.0 ? v : 0.0;
    } else {
      label_logit = out[ex.label];
      log_partition = SoftmaxInPlace(out);
    }
  }
  return log_partition - label_logit;
}

double AccumulateGradients(const ModelWeights& w,
                           std::span<const Example> batch, ModelWeights& grad) {
  Workspace ws(w);
  const std::size_t n_layers = w.layers.size();
  const std::size_t n_classes = w.n_classes();
  double loss = 0.0;
  for (const Example& ex : batch) {
    if (ex.label >= n_classes) {
      ThrowError(ErrorCode::kShape, "label " + std::to_string(ex.label) +
                                        " out of range for " +
                                        std::to_string(n_classes) + " classes");
    }
    CheckInput(w, ex.features);
    loss += ForwardInto(w, ex, ws);

    // Softmax + cross-entropy: dL/dz = p - onehot.
    auto& top_delta = ws.deltas[n_layers - 1];
    std::copy(ws.activations[n_layers].begin(), ws.activations[n_layers].end(),
              top_delta.begin());
    top_delta[ex.label] -= 1.0;

    for (std::size_t k = n_layers; k-- > 0;) {
      const DenseLayer& layer = w.layers[k];
      DenseLayer& g = grad.layers[k];
      const auto& delta = ws.deltas[k];
      const auto& input = ws.activations[k];
      for (std::size_t r = 0; r < layer.output_dim; ++r) {
        const double d = delta[r];
        g.bias[r] += d;
        if (d == 0.0) continue;
        double* grow = g.weights.data() + r * layer.input_dim;
        for (std::size_t c = 0; c < layer.input_dim; ++c) grow[c] += d * input[c];
      }
      if (k == 0) break;
      // Back through W^T and the ReLU of the previous layer. The stored
      // activation is post-ReLU, so a > 0 iff the pre-activation was > 0.
      auto& prev_delta = ws.deltas[k - 1];
      std::fill(prev_delta.begin(), prev_delta.end(), 0.0);
      for (std::size_t r = 0; r < layer.output_dim; ++r) {
        const double d = delta[r];
        if (d == 0.0) continue;
        const double* row = layer.weights.data() + r * layer.input_dim;
        for (std::size_t c = 0; c < layer.input_dim; ++c) {
          prev_delta[c] += row[c] * d;
        }
      }
      for (std::size_t c = 0; c < prev_delta.size(); ++c) {
        if (input[c] <= 0.0) prev_delta[c] = 0.0;
      }
    }
  }
  return loss;
}

void Scale(ModelWeights& w, double factor) {
  for (auto& layer : w.layers) {
    for (double& v : layer.weights) v *= factor;
    for (double& v : layer.bias) v *= factor;
  }
}

}  // namespace

std::vector<LayerSpec> MakeLayerSpecs(std::size_t input_dim,
                                      std::size_t n_classes,
                                      std::span<const std::size_t> hidden) {
  if (input_dim < 1) ThrowError(ErrorCode::kConfig, "input_dim must be >= 1");
  if (n_classes < 2) ThrowError(ErrorCode::kConfig, "n_classes must be >= 2");
  if (hidden.empty()) {
    ThrowError(ErrorCode::kConfig, "at least one hidden layer is required");
  }
  std::vector<LayerSpec> specs;
  std::size_t prev = input_dim;
  for (std::size_t width : hidden) {
    if (width < 1) ThrowError(ErrorCode::kConfig, "hidden layer width must be >= 1");
    specs.push_back({prev, width, Activation::kRelu});
    prev = width;
  }
  specs.push_back({prev, n_classes, Activation::kSoftmax});
  return specs;
}

void ValidateLayerSpecs(std::span<const LayerSpec> specs) {
  if (specs.empty()) ThrowError(ErrorCode::kConfig, "empty layer list");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].input_dim == 0 || specs[i].output_dim == 0) {
      ThrowError(ErrorCode::kConfig,
                 "layer " + std::to_string(i) + " has a zero dimension");
    }
    if (i + 1 < specs.size() &&
        specs[i].output_dim != specs[i + 1].input_dim) {
      ThrowError(ErrorCode::kConfig,
                 "layer " + std::to_string(i) + " output does not chain");
    }
    const bool last = i + 1 == specs.size();
    if (last != (specs[i].activation == Activation::kSoftmax)) {
      ThrowError(ErrorCode::kConfig, "exactly the final layer must be softmax");
    }
  }
  if (specs.back().output_dim < 2) {
    ThrowError(ErrorCode::kConfig, "softmax layer needs >= 2 classes");
  }
}

std::size_t ModelWeights::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<LayerSpec> ModelWeights::Specs() const {
  std::vector<LayerSpec> specs;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    specs.push_back({layers[i].input_dim, layers[i].output_dim,
                     i + 1 == layers.size() ? Activation::kSoftmax
                                            : Activation::kRelu});
  }
  return specs;
}

bool ModelWeights::AllFinite() const {
  for (const auto& l : layers) {
    for (double v : l.weights) {
      if (!std::isfinite(v)) return false;
    }
    for (double v : l.bias) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

bool ModelWeights::SameShape(const ModelWeights& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].input_dim != other.layers[i].input_dim ||
        layers[i].output_dim != other.layers[i].output_dim) {
      return false;
    }
  }
  return true;
}

ModelWeights ZerosLike(const ModelWeights& weights) {
  ModelWeights z;
  z.layers.reserve(weights.layers.size());
  for (const auto& l : weights.layers) {
    z.layers.push_back({l.input_dim, l.output_dim,
                        std::vector<double>(l.weights.size(), 0.0),
                        std::vector<double>(l.bias.size(), 0.0)});
  }
  return z;
}

AdamState AdamState::For(const ModelWeights& weights, AdamConfig config) {
  return AdamState{ZerosLike(weights), ZerosLike(weights), 0, config};
}

ModelWeights BuildNetwork(std::size_t input_dim, std::size_t n_classes,
                          std::span<const std::size_t> hidden,
                          std::uint64_t seed) {
  const auto specs = MakeLayerSpecs(input_dim, n_classes, hidden);
  return BuildNetwork(specs, seed);
}

ModelWeights BuildNetwork(std::span<const LayerSpec> specs, std::uint64_t seed) {
  ValidateLayerSpecs(specs);
  Rng rng(DeriveSeed(seed, {0x6e6e}));
  ModelWeights w;
  for (const auto& spec : specs) {
    DenseLayer layer{spec.input_dim, spec.output_dim,
                     std::vector<double>(spec.input_dim * spec.output_dim),
                     std::vector<double>(spec.output_dim, 0.0)};
    const double bound = std::sqrt(6.0 / static_cast<double>(spec.input_dim));
    for (double& v : layer.weights) v = rng.Uniform(-bound, bound);
    w.layers.push_back(std::move(layer));
  }
  return w;
}

Prediction MakePrediction(std::vector<double> probabilities) {
  Prediction p;
  p.probabilities = std::move(probabilities);
  // max_element returns the first maximum, i.e. the lowest index on ties.
  const auto it =
      std::max_element(p.probabilities.begin(), p.probabilities.end());
  p.top_class = static_cast<std::size_t>(it - p.probabilities.begin());
  p.top_prob = *it;
  return p;
}

Prediction Forward(const ModelWeights& weights,
                   std::span<const double> features) {
  CheckInput(weights, features);
  for (double v : features) {
    if (!std::isfinite(v)) ThrowError(ErrorCode::kNumeric, "non-finite feature");
  }
  std::vector<double> in(features.begin(), features.end());
  std::vector<double> out;
  for (std::size_t k = 0; k < weights.layers.size(); ++k) {
    out.assign(weights.layers[k].output_dim, 0.0);
    Affine(weights.layers[k], in, out);
    if (k + 1 < weights.layers.size()) {
      for (double& v : out) v = v > 0.0 ? v : 0.0;
    } else {
      SoftmaxInPlace(out);
    }
    in.swap(out);
  }
  return MakePrediction(std::move(in));
}

double Loss(const ModelWeights& weights, std::span<const Example> batch) {
  if (batch.empty()) return 0.0;
  Workspace ws(weights);
  double loss = 0.0;
  for (const Example& ex : batch) {
    CheckInput(weights, ex.features);
    if (ex.label >= weights.n_classes()) {
      ThrowError(ErrorCode::kShape, "label out of range");
    }
    loss += ForwardInto(weights, ex, ws);
  }
  return loss / static_cast<double>(batch.size());
}

ModelWeights ComputeGradients(const ModelWeights& weights,
                              std::span<const Example> batch) {
  ModelWeights grad = ZerosLike(weights);
  if (batch.empty()) return grad;
  AccumulateGradients(weights, batch, grad);
  Scale(grad, 1.0 / static_cast<double>(batch.size()));
  return grad;
}

void AdamStep(ModelWeights& weights, AdamState& adam,
              const ModelWeights& gradients) {
  if (!weights.SameShape(gradients) || !weights.SameShape(adam.first_moment) ||
      !weights.SameShape(adam.second_moment)) {
    ThrowError(ErrorCode::kShape, "Adam state does not match weights");
  }
  const AdamConfig& cfg = adam.config;
  adam.step_count += 1;
  const double t = static_cast<double>(adam.step_count);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  auto update = [&](std::vector<double>& param, const std::vector<double>& g,
                    std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      param[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  };
  for (std::size_t k = 0; k < weights.layers.size(); ++k) {
    update(weights.layers[k].weights, gradients.layers[k].weights,
           adam.first_moment.layers[k].weights,
           adam.second_moment.layers[k].weights);
    update(weights.layers[k].bias, gradients.layers[k].bias,
           adam.first_moment.layers[k].bias, adam.second_moment.layers[k].bias);
  }
}

TrainStats Train(ModelWeights& weights, AdamState& adam,
                 std::span<const Example> data, const TrainOptions& options) {
  TrainStats stats;
  if (data.empty()) {
    log::Warn("train called with no labeled data; weights left unchanged");
    stats.skipped_empty = true;
    return stats;
  }
  if (options.batch_size == 0) {
    ThrowError(ErrorCode::kConfig, "batch_size must be >= 1");
  }
  std::vector<std::size_t> order(data.size());
  std::vector<Example> batch;
  batch.reserve(options.batch_size);
  ModelWeights grad = ZerosLike(weights);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(DeriveSeed(options.seed, {epoch}));
    rng.Shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size();
         start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
      for (auto& l : grad.layers) {
        std::fill(l.weights.begin(), l.weights.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
      }
      const double batch_loss =
          AccumulateGradients(weights, batch, grad) /
          static_cast<double>(batch.size());
      if (!std::isfinite(batch_loss)) {
        ThrowError(ErrorCode::kNumeric, "training loss became non-finite");
      }
      Scale(grad, 1.0 / static_cast<double>(batch.size()));
      AdamStep(weights, adam, grad);
      epoch_loss += batch_loss;
      ++n_batches;
      ++stats.steps;
    }
    stats.final_epoch_loss = epoch_loss / static_cast<double>(n_batches);
  }
  if (!weights.AllFinite()) {
    ThrowError(ErrorCode::kNumeric, "training produced non-finite parameters");
  }
  return stats;
}

}  // namespace fedsim::nn
