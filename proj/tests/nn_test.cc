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

#include <cmath>
#include <vector>

#include "fedsim/error.h"
#include "fedsim/random.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace fedsim::nn {
namespace {

using ::fedsim::testing::ExpectThrowsCode;
using ::fedsim::testing::MaxGradientRelativeError;
using ::fedsim::testing::RandomVector;
using ::fedsim::testing::RandomWeights;

// Reference values from tests/oracles/nn_oracle.py.
constexpr double kProbabilities[] = {0.21840253609763444, 0.7815974639023655};
constexpr double kLoss = 0.24641542301015185;
constexpr double kW1After[] = {0.5, -0.4, 0.8009999999633705, 0.20099999998168522};
constexpr double kB1After[] = {0.1, -0.09900000003662962};
constexpr double kW2After[] = {1.0, -1.0009999999583754, 0.5, 0.25099999995837546};
constexpr double kB2After[] = {0.049000000045787015, -0.049000000045787015};

ModelWeights HandNetwork() {
  ModelWeights w;
  w.layers.push_back({2, 2, {0.5, -0.4, 0.8, 0.2}, {0.1, -0.1}});
  w.layers.push_back({2, 2, {1.0, -1.0, 0.5, 0.25}, {0.05, -0.05}});
  return w;
}

TEST(LayerSpecTest, DefaultArchitecture) {
  const std::vector<std::size_t> hidden = {128, 64, 32, 16};
  const auto specs = MakeLayerSpecs(33, 5, hidden);
  ASSERT_EQ(specs.size(), 5u);
  EXPECT_EQ(specs.front().input_dim, 33u);
  EXPECT_EQ(specs.back().output_dim, 5u);
  for (std::size_t i = 0; i + 1 < specs.size(); ++i) {
    EXPECT_EQ(specs[i].output_dim, specs[i + 1].input_dim);
    EXPECT_EQ(specs[i].activation, Activation::kRelu);
  }
  EXPECT_EQ(specs.back().activation, Activation::kSoftmax);

  const ModelWeights w = BuildNetwork(33, 5, hidden, 1);
  EXPECT_EQ(w.layers.size(), 5u);
  EXPECT_EQ(w.n_classes(), 5u);
  EXPECT_EQ(w.Specs(), specs);
}

TEST(LayerSpecTest, RejectsBrokenChains) {
  std::vector<LayerSpec> specs = {{3, 4, Activation::kRelu}, {5, 2, Activation::kSoftmax}};
  ExpectThrowsCode(ErrorCode::kConfig, [&] { ValidateLayerSpecs(specs); });
  specs = {{3, 4, Activation::kSoftmax}, {4, 2, Activation::kSoftmax}};
  ExpectThrowsCode(ErrorCode::kConfig, [&] { ValidateLayerSpecs(specs); });
  specs = {{3, 4, Activation::kRelu}, {4, 2, Activation::kRelu}};
  ExpectThrowsCode(ErrorCode::kConfig, [&] { ValidateLayerSpecs(specs); });
  ExpectThrowsCode(ErrorCode::kConfig, [] { MakeLayerSpecs(3, 1, std::vector<std::size_t>{4}); });
  ExpectThrowsCode(ErrorCode::kConfig, [] { MakeLayerSpecs(3, 2, std::vector<std::size_t>{}); });
}

TEST(BuildNetworkTest, SameSeedIsBitIdentical) {
  const std::vector<std::size_t> hidden = {16, 8};
  EXPECT_EQ(BuildNetwork(10, 3, hidden, 42), BuildNetwork(10, 3, hidden, 42));
  EXPECT_NE(BuildNetwork(10, 3, hidden, 42), BuildNetwork(10, 3, hidden, 43));
}

TEST(BuildNetworkTest, HeUniformBoundHolds) {
  const std::vector<std::size_t> hidden = {4};
  const ModelWeights w = BuildNetwork(2, 2, hidden, 7);
  ASSERT_EQ(w.layers.size(), 2u);
  for (const auto& layer : w.layers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.input_dim));
    double largest = 0.0;
    for (double v : layer.weights) {
      EXPECT_LE(std::abs(v), bound);
      largest = std::max(largest, std::abs(v));
    }
    for (double b : layer.bias) EXPECT_EQ(b, 0.0);
    EXPECT_GT(largest, 0.3 * bound);
  }
  // A wide layer fills the interval on both sides.
  const std::vector<std::size_t> wide = {256};
  const ModelWeights big = BuildNetwork(50, 2, wide, 7);
  const double bound = std::sqrt(6.0 / 50.0);
  double lo = 0.0, hi = 0.0;
  for (double v : big.layers[0].weights) {
    ASSERT_LE(std::abs(v), bound);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_LT(lo, -0.99 * bound);
  EXPECT_GT(hi, 0.99 * bound);
}

TEST(ForwardTest, HandComputedNetwork) {
  const std::vector<double> x = {1.0, 2.0};
  const Prediction p = Forward(HandNetwork(), x);
  ASSERT_EQ(p.probabilities.size(), 2u);
  EXPECT_NEAR(p.probabilities[0], kProbabilities[0], 1e-12);
  EXPECT_NEAR(p.probabilities[1], kProbabilities[1], 1e-12);
  EXPECT_EQ(p.top_class, 1u);
  EXPECT_DOUBLE_EQ(p.top_prob, p.probabilities[1]);

  const std::vector<Example> batch = {{x, 1}};
  EXPECT_NEAR(Loss(HandNetwork(), batch), kLoss, 1e-12);
}

TEST(ForwardTest, ProbabilitiesSumToOne) {
  const std::vector<std::size_t> hidden = {12, 6};
  const ModelWeights w = BuildNetwork(9, 4, hidden, 3);
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto x = RandomVector(9, rng, 50.0);
    const Prediction p = Forward(w, x);
    double sum = 0.0;
    for (double q : p.probabilities) sum += q;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(ForwardTest, ZeroFinalLayerGivesUniform) {
  const std::vector<std::size_t> hidden = {5};
  ModelWeights w = BuildNetwork(3, 4, hidden, 2);
  for (double& v : w.layers.back().weights) v = 0.0;
  const std::vector<double> x = {0.3, -2.0, 5.0};
  for (double q : Forward(w, x).probabilities) EXPECT_NEAR(q, 0.25, 1e-15);
}

TEST(ForwardTest, ExtremeLogitsStayFinite) {
  ModelWeights w = HandNetwork();
  w.layers.back().bias = {800.0, -800.0};
  const std::vector<double> x = {1.0, 2.0};
  const Prediction p = Forward(w, x);
  EXPECT_DOUBLE_EQ(p.probabilities[0], 1.0);
  EXPECT_EQ(p.probabilities[1], 0.0);
  const std::vector<Example> batch = {{x, 1}};
  EXPECT_TRUE(std::isfinite(Loss(w, batch)));
}

TEST(ForwardTest, RejectsBadInput) {
  const std::vector<double> short_x = {1.0};
  ExpectThrowsCode(ErrorCode::kShape, [&] { Forward(HandNetwork(), short_x); });
  const std::vector<double> nan_x = {1.0, std::nan("")};
  ExpectThrowsCode(ErrorCode::kNumeric, [&] { Forward(HandNetwork(), nan_x); });
}

TEST(MakePredictionTest, TiesGoToLowestIndex) {
  const Prediction p = MakePrediction({0.25, 0.375, 0.375});
  EXPECT_EQ(p.top_class, 1u);
  EXPECT_EQ(p.top_prob, 0.375);
}

TEST(GradientTest, MatchesFiniteDifferencesOn343) {
  const std::vector<LayerSpec> specs = {{3, 4, Activation::kRelu},
                                        {4, 3, Activation::kSoftmax}};
  Rng rng(21);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ModelWeights w = RandomWeights(specs, 100 + seed);
    const auto x0 = RandomVector(3, rng), x1 = RandomVector(3, rng);
    const std::vector<Example> batch = {{x0, 0}, {x1, 2}};
    EXPECT_LT(MaxGradientRelativeError(w, batch), 1e-4) << "seed " << seed;
  }
}

TEST(GradientTest, MatchesFiniteDifferencesOnRandomNetworks) {
  Rng shape_rng(4);
  for (std::uint64_t trial = 0; trial < 25; ++trial) {
    const std::size_t in = 2 + shape_rng.Below(5);
    const std::size_t classes = 2 + shape_rng.Below(3);
    std::vector<std::size_t> hidden(1 + shape_rng.Below(3));
    for (auto& h : hidden) h = 2 + shape_rng.Below(5);
    const auto specs = MakeLayerSpecs(in, classes, hidden);
    const ModelWeights w = RandomWeights(specs, 1000 + trial);

    std::vector<std::vector<double>> xs;
    std::vector<Example> batch;
    const std::size_t n = 1 + shape_rng.Below(5);
    for (std::size_t i = 0; i < n; ++i) xs.push_back(RandomVector(in, shape_rng));
    for (std::size_t i = 0; i < n; ++i) batch.push_back({xs[i], shape_rng.Below(classes)});
    EXPECT_LT(MaxGradientRelativeError(w, batch), 1e-4) << "trial " << trial;
  }
}

TEST(GradientTest, DuplicatingTheBatchLeavesTheMeanUnchanged) {
  const std::vector<LayerSpec> specs = {{3, 5, Activation::kRelu},
                                        {5, 3, Activation::kSoftmax}};
  const ModelWeights w = RandomWeights(specs, 9);
  const std::vector<double> a = {0.1, -0.7, 1.2}, b = {-1.0, 0.4, 0.3};
  const std::vector<Example> once = {{a, 0}, {b, 2}};
  const std::vector<Example> twice = {{a, 0}, {b, 2}, {a, 0}, {b, 2}};
  const ModelWeights g1 = ComputeGradients(w, once);
  const ModelWeights g2 = ComputeGradients(w, twice);
  for (std::size_t l = 0; l < g1.layers.size(); ++l) {
    for (std::size_t i = 0; i < g1.layers[l].weights.size(); ++i) {
      EXPECT_NEAR(g1.layers[l].weights[i], g2.layers[l].weights[i], 1e-14);
    }
    for (std::size_t i = 0; i < g1.layers[l].bias.size(); ++i) {
      EXPECT_NEAR(g1.layers[l].bias[i], g2.layers[l].bias[i], 1e-14);
    }
  }
}

TEST(GradientTest, FinalBiasIsSoftmaxMinusOneHot) {
  const std::vector<LayerSpec> specs = {{4, 6, Activation::kRelu},
                                        {6, 3, Activation::kSoftmax}};
  const ModelWeights w = RandomWeights(specs, 12);
  const std::vector<double> x = {0.5, -0.25, 1.5, 0.75};
  const std::vector<Example> batch = {{x, 2}};
  const auto p = Forward(w, x).probabilities;
  const auto g = ComputeGradients(w, batch).layers.back().bias;
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(g[k], p[k] - (k == 2 ? 1.0 : 0.0), 1e-15);
  }
}

TEST(TrainTest, ZeroEpochsLeavesWeightsUnchanged) {
  ModelWeights w = HandNetwork();
  AdamState adam = AdamState::For(w);
  const std::vector<double> x = {1.0, 2.0};
  const std::vector<Example> data = {{x, 1}};
  Train(w, adam, data, {.epochs = 0, .batch_size = 1, .seed = 1});
  EXPECT_EQ(w, HandNetwork());
  EXPECT_EQ(adam.step_count, 0u);
}

TEST(TrainTest, EmptyDataIsANoOp) {
  ModelWeights w = HandNetwork();
  AdamState adam = AdamState::For(w);
  const TrainStats stats = Train(w, adam, {}, {});
  EXPECT_TRUE(stats.skipped_empty);
  EXPECT_EQ(w, HandNetwork());
}

TEST(TrainTest, OneAdamStepMatchesHandComputation) {
  ModelWeights w = HandNetwork();
  AdamState adam = AdamState::For(w);
  const std::vector<double> x = {1.0, 2.0};
  const std::vector<Example> data = {{x, 1}};
  const TrainStats stats = Train(w, adam, data, {.epochs = 1, .batch_size = 1, .seed = 1});
  EXPECT_EQ(stats.steps, 1u);
  EXPECT_EQ(adam.step_count, 1u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(w.layers[0].weights[i], kW1After[i], 1e-12) << i;
    EXPECT_NEAR(w.layers[1].weights[i], kW2After[i], 1e-12) << i;
  }
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(w.layers[0].bias[i], kB1After[i], 1e-12) << i;
    EXPECT_NEAR(w.layers[1].bias[i], kB2After[i], 1e-12) << i;
  }
}

TEST(TrainTest, LastBatchMayBeShort) {
  const std::vector<std::size_t> hidden = {3};
  ModelWeights w = BuildNetwork(2, 2, hidden, 1);
  AdamState adam = AdamState::For(w);
  std::vector<std::vector<double>> xs(7, std::vector<double>{0.5, -0.5});
  std::vector<Example> data;
  for (std::size_t i = 0; i < xs.size(); ++i) data.push_back({xs[i], i % 2});
  const TrainStats stats = Train(w, adam, data, {.epochs = 2, .batch_size = 3, .seed = 4});
  EXPECT_EQ(stats.steps, 6u);
}

TEST(TrainTest, RejectsZeroBatchSize) {
  ModelWeights w = HandNetwork();
  AdamState adam = AdamState::For(w);
  const std::vector<double> x = {1.0, 2.0};
  const std::vector<Example> data = {{x, 1}};
  ExpectThrowsCode(ErrorCode::kConfig, [&] { Train(w, adam, data, {.batch_size = 0}); });
  const std::vector<Example> bad_label = {{x, 2}};
  ExpectThrowsCode(ErrorCode::kShape, [&] { Train(w, adam, bad_label, {}); });
}

TEST(TrainTest, DeterministicGivenSeed) {
  const std::vector<std::size_t> hidden = {8};
  Rng rng(2);
  std::vector<std::vector<double>> xs;
  for (int i = 0; i < 40; ++i) xs.push_back(RandomVector(4, rng));
  std::vector<Example> data;
  for (std::size_t i = 0; i < xs.size(); ++i) data.push_back({xs[i], i % 3});
  auto run = [&](std::uint64_t seed) {
    ModelWeights w = BuildNetwork(4, 3, hidden, 5);
    AdamState adam = AdamState::For(w);
    Train(w, adam, data, {.epochs = 3, .batch_size = 7, .seed = seed});
    return w;
  };
  EXPECT_EQ(run(1), run(1));
  EXPECT_NE(run(1), run(2));
}

// Plain batch-gradient-descent logistic regression, used only to confirm the
// blob data is linearly separable before asking the network to fit it.
double LogisticRegressionAccuracy(const std::vector<std::vector<double>>& xs,
                                  const std::vector<std::size_t>& ys) {
  double w0 = 0.0, w1 = 0.0, b = 0.0;
  for (int it = 0; it < 2000; ++it) {
    double g0 = 0.0, g1 = 0.0, gb = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double z = w0 * xs[i][0] + w1 * xs[i][1] + b;
      const double err = 1.0 / (1.0 + std::exp(-z)) - static_cast<double>(ys[i]);
      g0 += err * xs[i][0];
      g1 += err * xs[i][1];
      gb += err;
    }
    const double n = static_cast<double>(xs.size());
    w0 -= 0.5 * g0 / n;
    w1 -= 0.5 * g1 / n;
    b -= 0.5 * gb / n;
  }
  std::size_t ok = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double z = w0 * xs[i][0] + w1 * xs[i][1] + b;
    ok += (z > 0.0 ? 1u : 0u) == ys[i];
  }
  return static_cast<double>(ok) / static_cast<double>(xs.size());
}

TEST(TrainTest, FitsSeparableBlobs) {
  Rng rng(31);
  std::vector<std::vector<double>> xs;
  std::vector<std::size_t> ys;
  for (int i = 0; i < 200; ++i) {
    const std::size_t y = i % 2;
    const double c = y == 0 ? -2.5 : 2.5;
    xs.push_back({rng.Normal(c, 0.7), rng.Normal(c, 0.7)});
    ys.push_back(y);
  }
  ASSERT_EQ(LogisticRegressionAccuracy(xs, ys), 1.0);

  std::vector<Example> data;
  for (std::size_t i = 0; i < xs.size(); ++i) data.push_back({xs[i], ys[i]});
  const std::vector<std::size_t> hidden = {16, 8};
  ModelWeights w = BuildNetwork(2, 2, hidden, 3);
  AdamState adam = AdamState::For(w);
  Train(w, adam, data, {.epochs = 50, .batch_size = 30, .seed = 6});
  std::size_t ok = 0;
  for (const auto& ex : data) ok += Forward(w, ex.features).top_class == ex.label;
  EXPECT_GE(static_cast<double>(ok) / 200.0, 0.95);
}

TEST(TrainTest, DivergenceIsANumericError) {
  ModelWeights w = HandNetwork();
  AdamState adam = AdamState::For(w, {.learning_rate = 1e300});
  const std::vector<double> x = {1.0, 2.0}, y = {-3.0, 1.0};
  const std::vector<Example> data = {{x, 0}, {y, 1}};
  ExpectThrowsCode(ErrorCode::kNumeric,
                   [&] { Train(w, adam, data, {.epochs = 20, .batch_size = 1}); });
}

TEST(ModelWeightsTest, ShapeHelpers) {
  const ModelWeights w = HandNetwork();
  EXPECT_EQ(w.ParameterCount(), 12u);
  EXPECT_TRUE(w.AllFinite());
  EXPECT_TRUE(w.SameShape(ZerosLike(w)));
  for (const auto& layer : ZerosLike(w).layers) {
    for (double v : layer.weights) EXPECT_EQ(v, 0.0);
  }
  ModelWeights bad = w;
  bad.layers[0].bias[0] = INFINITY;
  EXPECT_FALSE(bad.AllFinite());
}

}  // namespace
}  // namespace fedsim::nn
