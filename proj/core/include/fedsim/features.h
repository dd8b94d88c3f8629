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

#ifndef FEDSIM_FEATURES_H_
#define FEDSIM_FEATURES_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fedsim {

// Timestamped multi-axis inertial samples of one user. Values are stored
// row-major: sample i occupies values[i * n_axes, (i + 1) * n_axes).
struct SensorStream {
  std::string user_id;
  std::size_t n_axes = 0;
  std::vector<std::int64_t> timestamps_ms;
  std::vector<double> values;
  std::vector<std::size_t> labels;  // activity class per sample

  std::size_t size() const { return timestamps_ms.size(); }
  std::span<const double> Sample(std::size_t i) const {
    return {values.data() + i * n_axes, n_axes};
  }
  void Append(std::int64_t timestamp_ms, std::span<const double> sample,
              std::size_t label);
};

// A contiguous slice of a stream, axis-major for feature extraction:
// axes[a][t] is axis a at time t.
struct Window {
  std::string user_id;
  std::size_t offset = 0;  // index of the first sample in the stream
  std::vector<std::vector<double>> axes;
  std::size_t true_label = 0;
};

enum class LabelSource { kNone, kUserFeedback, kPropagated, kPretraining };

// Which partition a sample came from. Test-partition samples may only ever be
// forwarded through a model, never stored on a client or trained on.
enum class DataOrigin { kPretraining, kTraining, kTest };

constexpr std::size_t kFeaturesPerAxis = 11;

struct FeatureSample {
  std::vector<double> features;
  std::size_t true_label = 0;  // oracle only
  std::optional<std::size_t> assigned_label;
  LabelSource label_source = LabelSource::kNone;
  std::uint64_t window_id = 0;
  DataOrigin origin = DataOrigin::kTraining;

  bool labeled() const { return assigned_label.has_value(); }
};

// Sliding windows of window_len samples with stride
// window_len * (1 - overlap_fraction); a trailing partial window is dropped.
// A window's label is the majority of its sample labels; ties go to the tied
// label that occurs last in the window.
std::vector<Window> Segment(const SensorStream& stream, std::size_t window_len,
                            double overlap_fraction);

// Per axis, in order: mean, variance, std, median, mean square, excess
// kurtosis, skewness, zero-crossing rate, peak count, energy, range.
std::vector<double> ExtractFeatureVector(const Window& window);
FeatureSample ExtractFeatures(const Window& window, std::uint64_t window_id);

std::vector<double> AxisFeatures(std::span<const double> axis);

// Per-dimension z-score with statistics taken from a fitting set.
class Standardizer {
 public:
  Standardizer() = default;
  Standardizer(std::vector<double> mean, std::vector<double> stddev);

  [[nodiscard]] static Standardizer Fit(std::span<const FeatureSample> samples);
  [[nodiscard]] static Standardizer Fit(std::span<const std::vector<double>> vectors);

  std::vector<double> Apply(std::span<const double> features) const;
  FeatureSample Apply(const FeatureSample& sample) const;

  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return stddev_; }
  std::size_t dim() const { return mean_.size(); }

  friend bool operator==(const Standardizer&, const Standardizer&) = default;

 private:
  std::vector<double> mean_;
  std::vector<double> stddev_;
};

}  // namespace fedsim

#endif  // FEDSIM_FEATURES_H_
