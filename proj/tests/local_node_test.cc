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

#include <vector>

#include "fedsim/error.h"
#include "fedsim/random.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace fedsim {
namespace {

using ::fedsim::testing::ExpectThrowsCode;
using ::fedsim::testing::MakeGlobal;
using ::fedsim::testing::MakeSample;
using ::fedsim::testing::RandomVector;

FeatureSample Window(Rng& rng, std::uint64_t id, std::size_t truth = 0) {
  return MakeSample(RandomVector(4, rng), truth, id);
}

TEST(ClientNodeTest, FreshNodeAsksAboutEveryWindow) {
  const GlobalModelState g = MakeGlobal(4, 3, {6}, 1);
  ClientNode node(0, g, {});
  Rng rng(1);
  for (std::uint64_t id = 0; id < 5; ++id) {
    const ClassifyResult r = node.ClassifyWindow(Window(rng, id));
    ASSERT_TRUE(r.question.has_value());
    EXPECT_EQ(r.question->window_id, id);
    EXPECT_EQ(r.question->predicted, r.prediction.top_class);
    EXPECT_EQ(r.question->candidates.size(), 2u);
    EXPECT_EQ(r.question->candidates[0], r.prediction.top_class);
  }
  EXPECT_EQ(node.storage().size(), 5u);
  EXPECT_EQ(node.pending_questions(), 5u);
  EXPECT_EQ(node.al_state().windows_seen, 5u);
  EXPECT_FALSE(node.storage().Find(3)->labeled());
}

TEST(ClientNodeTest, AnswersMoveTheThreshold) {
  const GlobalModelState g = MakeGlobal(4, 3, {6}, 1);
  ClientNode node(0, g, {.al_step = 0.1});
  Rng rng(2);
  const auto first = node.ClassifyWindow(Window(rng, 1));
  const auto second = node.ClassifyWindow(Window(rng, 2));

  node.AnswerQuestion(1, first.question->predicted);
  EXPECT_DOUBLE_EQ(node.al_state().theta, 0.9);
  const std::size_t wrong = (second.question->predicted + 1) % 3;
  node.AnswerQuestion(2, wrong);
  EXPECT_DOUBLE_EQ(node.al_state().theta, 0.99);
  EXPECT_EQ(node.al_state().questions_asked, 2u);

  const FeatureSample* s = node.storage().Find(2);
  EXPECT_EQ(s->assigned_label, wrong);
  EXPECT_EQ(s->label_source, LabelSource::kUserFeedback);
  EXPECT_EQ(node.TrainingLabelCount(), 2u);
}

TEST(ClientNodeTest, AnswerErrors) {
  const GlobalModelState g = MakeGlobal(4, 3, {6}, 1);
  ClientNode node(0, g, {});
  Rng rng(3);
  node.ClassifyWindow(Window(rng, 1));
  ExpectThrowsCode(ErrorCode::kState, [&] { node.AnswerQuestion(77, 0); });
  ExpectThrowsCode(ErrorCode::kShape, [&] { node.AnswerQuestion(1, 3); });
  node.AnswerQuestion(1, 0);
  ExpectThrowsCode(ErrorCode::kState, [&] { node.AnswerQuestion(1, 0); });
  ExpectThrowsCode(ErrorCode::kState, [&] { node.ClassifyWindow(Window(rng, 1)); });
}

TEST(ClientNodeTest, RejectsTestPartitionSamples) {
  const GlobalModelState g = MakeGlobal(4, 3, {6}, 1);
  ClientNode node(0, g, {});
  Rng rng(4);
  FeatureSample s = Window(rng, 9);
  s.origin = DataOrigin::kTest;
  ExpectThrowsCode(ErrorCode::kState, [&] { node.ClassifyWindow(s); });
  EXPECT_EQ(node.storage().size(), 0u);
}

TEST(ClientNodeTest, ActiveLearningOffNeverAsks) {
  const GlobalModelState g = MakeGlobal(4, 3, {6}, 1);
  ClientNode node(0, g, {.active_learning = false});
  Rng rng(5);
  for (std::uint64_t id = 0; id < 20; ++id) {
    EXPECT_FALSE(node.ClassifyWindow(Window(rng, id)).question.has_value());
  }
  EXPECT_EQ(node.al_state().QuestionRate(), 0.0);
}

TEST(ClientNodeTest, StorageIsPrunedToCapacity) {
  const GlobalModelState g = MakeGlobal(4, 3, {6}, 1);
  NodeConfig cfg{.active_learning = false};
  cfg.propagation.max_size = 5;
  ClientNode node(0, g, cfg);
  Rng rng(6);
  for (std::uint64_t id = 0; id < 30; ++id) {
    node.ClassifyWindow(Window(rng, id));
    EXPECT_LE(node.storage().size(), 5u);
  }
}

TEST(ClientNodeTest, PendingQuestionsSurvivePruning) {
  const GlobalModelState g = MakeGlobal(4, 3, {6}, 1);
  NodeConfig cfg;
  cfg.propagation.max_size = 4;
  ClientNode node(0, g, cfg);
  Rng rng(7);
  for (std::uint64_t id = 0; id < 3; ++id) node.ClassifyWindow(Window(rng, id));
  for (std::uint64_t id = 3; id < 10; ++id) node.ClassifyWindow(Window(rng, id));
  // Every window still has an open question, so none may be dropped.
  for (std::uint64_t id = 0; id < 10; ++id) EXPECT_NE(node.storage().Find(id), nullptr);
  node.AnswerQuestion(0, 1);
}

TEST(ClientNodeTest, PersonalLayersAreKeptOnGlobalUpdate) {
  const GlobalModelState g0 = MakeGlobal(4, 3, {6, 5}, 1);
  const GlobalModelState g1 = MakeGlobal(4, 3, {6, 5}, 2);
  const std::size_t n_layers = g0.weights.layers.size();
  for (std::size_t l = 0; l <= n_layers; ++l) {
    ClientNode node(0, g0, {.personal_layers = l});
    node.ApplyGlobalUpdate(g1);
    const nn::ModelWeights& p = node.personalized_model();
    for (std::size_t k = 0; k < n_layers; ++k) {
      const auto& expected = k < n_layers - l ? g1.weights.layers[k] : g0.weights.layers[k];
      EXPECT_EQ(p.layers[k], expected) << "l=" << l << " layer " << k;
    }
    EXPECT_EQ(node.local_model(), g1.weights);
  }
  ExpectThrowsCode(ErrorCode::kConfig, [&] { ClientNode(0, g0, {.personal_layers = n_layers + 1}); });
}

TEST(ClientNodeTest, GlobalUpdateShapeMismatch) {
  ClientNode node(0, MakeGlobal(4, 3, {6}, 1), {});
  ExpectThrowsCode(ErrorCode::kShape, [&] { node.ApplyGlobalUpdate(MakeGlobal(4, 3, {7}, 1)); });
}

TEST(ClientNodeTest, LocalTrainAbstainsWithoutLabels) {
  ClientNode node(0, MakeGlobal(4, 3, {6}, 1), {});
  Rng rng(8);
  node.ClassifyWindow(Window(rng, 1));
  const nn::ModelWeights before = node.local_model();
  EXPECT_FALSE(node.LocalTrain(2, 4, 1).has_value());
  EXPECT_EQ(node.local_model(), before);
}

TEST(ClientNodeTest, PretrainingSeedsAreNotTrainedOn) {
  ClientNode node(0, MakeGlobal(4, 3, {6}, 1), {});
  Rng rng(9);
  std::vector<FeatureSample> seeds = {Window(rng, 100, 1), Window(rng, 101, 2)};
  node.InstallPretrainingSeeds(seeds);
  EXPECT_EQ(node.storage().Find(101)->assigned_label, 2u);
  EXPECT_EQ(node.storage().Find(101)->label_source, LabelSource::kPretraining);
  EXPECT_EQ(node.TrainingLabelCount(), 0u);
  EXPECT_FALSE(node.LocalTrain(1, 4, 1).has_value());
}

TEST(ClientNodeTest, BothModelsTakeTheSameStepsWhenFullyShared) {
  const GlobalModelState g = MakeGlobal(4, 3, {6}, 1);
  ClientNode node(0, g, {.personal_layers = 0});
  Rng rng(10);
  for (std::uint64_t id = 0; id < 7; ++id) {
    node.ClassifyWindow(Window(rng, id, id % 3));
    node.AnswerQuestion(id, id % 3);
  }
  const auto update = node.LocalTrain(3, 4, 11);
  ASSERT_TRUE(update.has_value());
  EXPECT_EQ(update->sample_count, 7u);
  EXPECT_EQ(update->weights, node.local_model());
  EXPECT_NE(node.local_model(), g.weights);
  EXPECT_EQ(node.personalized_model(), node.local_model());
}

TEST(ClientNodeTest, PersonalizedModelDivergesAfterGlobalUpdate) {
  const GlobalModelState g0 = MakeGlobal(4, 3, {6}, 1);
  GlobalModelState g1 = MakeGlobal(4, 3, {6}, 2);
  ClientNode node(0, g0, {.personal_layers = 1});
  node.ApplyGlobalUpdate(g1);
  EXPECT_NE(node.personalized_model(), node.local_model());
  EXPECT_GT(node.personalized_reads(), 0u);
}

}  // namespace
}  // namespace fedsim
