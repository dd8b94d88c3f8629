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

#ifndef FEDSIM_NN_H_
#define FEDSIM_NN_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fedsim::nn {

enum class Activation { kRelu, kSoftmax };

struct LayerSpec {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  Activation activation = Activation::kRelu;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// input_dim -> hidden... -> n_classes, ReLU on hidden layers and softmax on
// the last. Throws kConfig on zero sizes or n_classes < 2.
std::vector<LayerSpec> MakeLayerSpecs(std::size_t input_dim,
                                      std::size_t n_classes,
                                      std::span<const std::size_t> hidden);

// Checks the chaining and single-trailing-softmax invariants.
void ValidateLayerSpecs(std::span<const LayerSpec> specs);

// One fully connected layer. `weights` is row-major output_dim x input_dim.
struct DenseLayer {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double& W(std::size_t row, std::size_t col) {
    return weights[row * input_dim + col];
  }
  double W(std::size_t row, std::size_t col) const {
    return weights[row * input_dim + col];
  }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Parameters of a network. Hidden layers are ReLU and the last layer is
// softmax; the activation pattern is implied by position.
struct ModelWeights {
  std::vector<DenseLayer> layers;
  std::uint64_t version = 0;

  std::size_t input_dim() const {
    return layers.empty() ? 0 : layers.front().input_dim;
  }
  std::size_t n_classes() const {
    return layers.empty() ? 0 : layers.back().output_dim;
  }
  std::size_t ParameterCount() const;
  std::vector<LayerSpec> Specs() const;
  bool AllFinite() const;
  // Same layer shapes (versions may differ).
  bool SameShape(const ModelWeights& other) const;

  friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

// Builds a zero-valued structure with the same shapes. Used for gradients and
// Adam moments.
ModelWeights ZerosLike(const ModelWeights& weights);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ModelWeights first_moment;
  ModelWeights second_moment;
  std::uint64_t step_count = 0;
  AdamConfig config;

  // Fresh state (zero moments) shaped like `weights`.
  static AdamState For(const ModelWeights& weights, AdamConfig config = {});
};

struct Prediction {
  std::vector<double> probabilities;
  std::size_t top_class = 0;
  double top_prob = 0.0;
};

struct Example {
  std::span<const double> features;
  std::size_t label = 0;
};

// He-uniform initialisation, zero biases, version 0.
ModelWeights BuildNetwork(std::size_t input_dim, std::size_t n_classes,
                          std::span<const std::size_t> hidden,
                          std::uint64_t seed);
ModelWeights BuildNetwork(std::span<const LayerSpec> specs, std::uint64_t seed);

Prediction Forward(const ModelWeights& weights,
                   std::span<const double> features);

// Builds a Prediction from a probability vector; argmax ties go to the lowest
// index.
Prediction MakePrediction(std::vector<double> probabilities);

// Mean cross-entropy over `batch`.
double Loss(const ModelWeights& weights, std::span<const Example> batch);

// Gradient of the mean cross-entropy over `batch` with respect to every
// parameter. The result has the same shapes as `weights`.
ModelWeights ComputeGradients(const ModelWeights& weights,
                              std::span<const Example> batch);

// One Adam update of `weights` using `gradients`.
void AdamStep(ModelWeights& weights, AdamState& adam,
              const ModelWeights& gradients);

struct TrainOptions {
  std::size_t epochs = 10;
  std::size_t batch_size = 30;
  std::uint64_t seed = 0;
};

struct TrainStats {
  bool skipped_empty = false;
  std::size_t steps = 0;
  double final_epoch_loss = 0.0;  // mean mini-batch loss of the last epoch
};

// Mini-batch Adam on mean cross-entropy. Data order is reshuffled every epoch
// from `options.seed`; the last batch of an epoch may be short. Empty `data`
// is a logged no-op. A non-finite loss or parameter throws kNumeric.
TrainStats Train(ModelWeights& weights, AdamState& adam,
                 std::span<const Example> data, const TrainOptions& options);

// Versioned binary file: exact double round trip.
void SaveBinary(const ModelWeights& weights, const std::filesystem::path& path);
ModelWeights LoadBinary(const std::filesystem::path& path);
std::string ToBinaryString(const ModelWeights& weights);
ModelWeights FromBinaryString(const std::string& bytes);

// JSON form with layer shapes and row-major values.
std::string ToJsonString(const ModelWeights& weights);
ModelWeights FromJsonString(const std::string& json);

}  // namespace fedsim::nn

#endif  // FEDSIM_NN_H_
