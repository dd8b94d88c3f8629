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

#include <bit>
#include <fstream>
#include <iterator>
#include <sstream>

#include "fedsim/error.h"
#include "fedsim/nn.h"
#include "json.hpp"

namespace fedsim::nn {
namespace {

constexpr char kMagic[4] = {'F', 'S', 'M', 'W'};
constexpr std::uint32_t kBinaryFormatVersion = 1;
constexpr int kJsonFormatVersion = 1;

// Little-endian regardless of host byte order.
void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void PutDouble(std::string& out, double v) {
  PutU64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t U64() { return Fixed(8); }
  std::uint32_t U32() { return static_cast<std::uint32_t>(Fixed(4)); }
  double Double() { return std::bit_cast<double>(U64()); }
  void Magic() {
    Need(4);
    if (bytes_.compare(pos_, 4, kMagic, 4) != 0) {
      ThrowError(ErrorCode::kFormat, "not a fedsim weights file (bad magic)");
    }
    pos_ += 4;
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n) {
    if (bytes_.size() - pos_ < n) {
      ThrowError(ErrorCode::kFormat, "truncated weights file");
    }
  }
  std::uint64_t Fixed(int width) {
    Need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void CheckLoaded(const ModelWeights& w) {
  if (w.layers.empty()) ThrowError(ErrorCode::kFormat, "weights have no layers");
  for (std::size_t i = 0; i + 1 < w.layers.size(); ++i) {
    if (w.layers[i].output_dim != w.layers[i + 1].input_dim) {
      ThrowError(ErrorCode::kFormat, "layer shapes do not chain");
    }
  }
  if (!w.AllFinite()) ThrowError(ErrorCode::kFormat, "weights contain non-finite values");
}

}  // namespace

std::string ToBinaryString(const ModelWeights& weights) {
  std::string out(kMagic, 4);
  PutU32(out, kBinaryFormatVersion);
  PutU64(out, weights.version);
  PutU32(out, static_cast<std::uint32_t>(weights.layers.size()));
  for (const auto& layer : weights.layers) {
    PutU32(out, static_cast<std::uint32_t>(layer.input_dim));
    PutU32(out, static_cast<std::uint32_t>(layer.output_dim));
    for (double v : layer.weights) PutDouble(out, v);
    for (double v : layer.bias) PutDouble(out, v);
  }
  return out;
}

ModelWeights FromBinaryString(const std::string& bytes) {
  Reader in(bytes);
  in.Magic();
  const std::uint32_t format = in.U32();
  if (format != kBinaryFormatVersion) {
    ThrowError(ErrorCode::kFormat,
               "unsupported weights format version " + std::to_string(format));
  }
  ModelWeights w;
  w.version = in.U64();
  const std::uint32_t n_layers = in.U32();
  for (std::uint32_t k = 0; k < n_layers; ++k) {
    DenseLayer layer;
    layer.input_dim = in.U32();
    layer.output_dim = in.U32();
    // Guard against absurd sizes in corrupt headers before allocating.
    if (layer.input_dim == 0 || layer.output_dim == 0 ||
        layer.input_dim * layer.output_dim > bytes.size()) {
      ThrowError(ErrorCode::kFormat, "invalid layer shape in weights file");
    }
    layer.weights.resize(layer.input_dim * layer.output_dim);
    layer.bias.resize(layer.output_dim);
    for (double& v : layer.weights) v = in.Double();
    for (double& v : layer.bias) v = in.Double();
    w.layers.push_back(std::move(layer));
  }
  if (!in.AtEnd()) ThrowError(ErrorCode::kFormat, "trailing bytes in weights file");
  CheckLoaded(w);
  return w;
}

void SaveBinary(const ModelWeights& weights, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) ThrowError(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  const std::string bytes = ToBinaryString(weights);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) ThrowError(ErrorCode::kIo, "failed writing " + path.string());
}

ModelWeights LoadBinary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) ThrowError(ErrorCode::kIo, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return FromBinaryString(bytes);
}

std::string ToJsonString(const ModelWeights& weights) {
  nlohmann::json j;
  j["format"] = "fedsim-weights";
  j["format_version"] = kJsonFormatVersion;
  j["version"] = weights.version;
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : weights.layers) {
    j["layers"].push_back({{"input_dim", layer.input_dim},
                           {"output_dim", layer.output_dim},
                           {"weights", layer.weights},
                           {"bias", layer.bias}});
  }
  return j.dump();
}

ModelWeights FromJsonString(const std::string& text) {
  ModelWeights w;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "fedsim-weights") {
      ThrowError(ErrorCode::kFormat, "not a fedsim weights document");
    }
    if (j.at("format_version") != kJsonFormatVersion) {
      ThrowError(ErrorCode::kFormat, "unsupported weights format version");
    }
    w.version = j.at("version").get<std::uint64_t>();
    for (const auto& jl : j.at("layers")) {
      DenseLayer layer;
      layer.input_dim = jl.at("input_dim").get<std::size_t>();
      layer.output_dim = jl.at("output_dim").get<std::size_t>();
      layer.weights = jl.at("weights").get<std::vector<double>>();
      layer.bias = jl.at("bias").get<std::vector<double>>();
      if (layer.weights.size() != layer.input_dim * layer.output_dim ||
          layer.bias.size() != layer.output_dim) {
        ThrowError(ErrorCode::kFormat, "layer value count does not match shape");
      }
      w.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    ThrowError(ErrorCode::kFormat, std::string("malformed weights JSON: ") + e.what());
  }
  CheckLoaded(w);
  return w;
}

}  // namespace fedsim::nn
