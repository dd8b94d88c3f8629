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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "fedsim/error.h"
#include "fedsim/nn.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace fedsim::nn {
namespace {

using ::fedsim::testing::ExpectThrowsCode;

ModelWeights Sample() {
  const std::vector<std::size_t> hidden = {6, 4};
  ModelWeights w = BuildNetwork(5, 3, hidden, 77);
  w.version = 12;
  // Values that a decimal round trip would mangle.
  w.layers[0].weights[0] = 0.1 + 0.2;
  w.layers[0].bias[1] = std::numeric_limits<double>::denorm_min();
  w.layers[2].bias[0] = -1e-300;
  return w;
}

TEST(WeightsBinaryTest, RoundTripIsBitExact) {
  const ModelWeights w = Sample();
  EXPECT_EQ(FromBinaryString(ToBinaryString(w)), w);
}

TEST(WeightsBinaryTest, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "fedsim_nn_io_test.bin";
  SaveBinary(Sample(), path);
  EXPECT_EQ(LoadBinary(path), Sample());
  std::filesystem::remove(path);
}

TEST(WeightsBinaryTest, RejectsCorruptInput) {
  const std::string good = ToBinaryString(Sample());
  ExpectThrowsCode(ErrorCode::kFormat, [&] { FromBinaryString("XXXX" + good.substr(4)); });
  ExpectThrowsCode(ErrorCode::kFormat, [&] { FromBinaryString(good.substr(0, good.size() - 3)); });
  ExpectThrowsCode(ErrorCode::kFormat, [&] { FromBinaryString(good + "z"); });
  ExpectThrowsCode(ErrorCode::kIo, [] { LoadBinary("/nonexistent/dir/weights.bin"); });
}

TEST(WeightsJsonTest, RoundTripIsBitExact) {
  const ModelWeights w = Sample();
  EXPECT_EQ(FromJsonString(ToJsonString(w)), w);
}

TEST(WeightsJsonTest, RejectsMalformedDocuments) {
  ExpectThrowsCode(ErrorCode::kFormat, [] { FromJsonString("{"); });
  ExpectThrowsCode(ErrorCode::kFormat, [] { FromJsonString(R"({"format":"other"})"); });
  ExpectThrowsCode(ErrorCode::kFormat, [] {
    FromJsonString(R"({"format":"fedsim-weights","format_version":1,"version":0,
      "layers":[{"input_dim":2,"output_dim":2,"weights":[1,2,3],"bias":[0,0]}]})");
  });
  ExpectThrowsCode(ErrorCode::kFormat, [] {
    FromJsonString(R"({"format":"fedsim-weights","format_version":1,"version":0,
      "layers":[{"input_dim":1,"output_dim":2,"weights":[1,2],"bias":[0,0]},
                {"input_dim":3,"output_dim":2,"weights":[1,2,3,4,5,6],"bias":[0,0]}]})");
  });
}

}  // namespace
}  // namespace fedsim::nn
