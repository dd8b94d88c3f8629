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

#include "fedsim/features.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "fedsim/error.h"

namespace fedsim {
namespace {

// Variance this small relative to the signal level is rounding noise from
// the mean, not signal.
bool EffectivelyConstant(double variance, double mean) {
  return variance <= 1e-20 * std::max(1.0, mean * mean);
}

}  // namespace

void SensorStream::Append(std::int64_t timestamp_ms,
                          std::span<const double> sample, std::size_t label) {
  if (n_axes == 0) n_axes = sample.size();
  if (sample.size() != n_axes) {
    ThrowError(ErrorCode::kShape, "stream " + user_id + ": sample has " +
                                      std::to_string(sample.size()) +
                                      " axes, expected " +
                                      std::to_string(n_axes));
  }
  timestamps_ms.push_back(timestamp_ms);
  values.insert(values.end(), sample.begin(), sample.end());
  labels.push_back(label);
}

std::vector<Window> Segment(const SensorStream& stream, std::size_t window_len,
                            double overlap_fraction) {
  if (window_len < 4) ThrowError(ErrorCode::kConfig, "window_len must be >= 4");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) {
    ThrowError(ErrorCode::kConfig, "overlap fraction must be in [0, 1)");
  }
  const double raw_stride =
      static_cast<double>(window_len) * (1.0 - overlap_fraction);
  const std::size_t stride =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(raw_stride + 1e-9)));

  std::vector<Window> windows;
  for (std::size_t start = 0; start + window_len <= stream.size();
       start += stride) {
    Window w;
    w.user_id = stream.user_id;
    w.offset = start;
    w.axes.assign(stream.n_axes, std::vector<double>(window_len));
    std::map<std::size_t, std::pair<std::size_t, std::size_t>> votes;  // label -> (count, last pos)
    for (std::size_t t = 0; t < window_len; ++t) {
      const auto sample = stream.Sample(start + t);
      for (std::size_t a = 0; a < stream.n_axes; ++a) w.axes[a][t] = sample[a];
      auto& v = votes[stream.labels[start + t]];
      v.first += 1;
      v.second = t;
    }
    auto best = votes.begin();
    for (auto it = votes.begin(); it != votes.end(); ++it) {
      if (it->second.first > best->second.first ||
          (it->second.first == best->second.first &&
           it->second.second > best->second.second)) {
        best = it;
      }
    }
    w.true_label = best->first;
    windows.push_back(std::move(w));
  }
  return windows;
}

std::vector<double> AxisFeatures(std::span<const double> x) {
  if (x.empty()) ThrowError(ErrorCode::kShape, "empty window axis");
  for (double v : x) {
    if (!std::isfinite(v)) ThrowError(ErrorCode::kNumeric, "non-finite sensor value");
  }
  const double n = static_cast<double>(x.size());

  double sum = 0.0, sum_sq = 0.0;
  for (double v : x) {
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double mean_square = sum_sq / n;

  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;

  const bool constant = EffectivelyConstant(m2, mean);
  const double variance = constant ? 0.0 : m2;
  const double kurtosis = constant ? 0.0 : m4 / (m2 * m2) - 3.0;
  const double skewness = constant ? 0.0 : m3 / std::pow(m2, 1.5);

  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  const double median = sorted.size() % 2 == 1
                            ? sorted[mid]
                            : 0.5 * (sorted[mid - 1] + sorted[mid]);

  std::size_t crossings = 0;
  for (std::size_t t = 0; t + 1 < x.size(); ++t) {
    if ((x[t] - mean) * (x[t + 1] - mean) < 0.0) ++crossings;
  }
  const double zero_crossing_rate =
      x.size() > 1 ? static_cast<double>(crossings) / (n - 1.0) : 0.0;

  std::size_t peaks = 0;
  for (std::size_t t = 1; t + 1 < x.size(); ++t) {
    if (x[t] > x[t - 1] && x[t] > x[t + 1]) ++peaks;
  }

  return {mean,
          variance,
          std::sqrt(variance),
          median,
          mean_square,
          kurtosis,
          skewness,
          zero_crossing_rate,
          static_cast<double>(peaks),
          variance,  // energy of the mean-centred signal
          sorted.back() - sorted.front()};
}

std::vector<double> ExtractFeatureVector(const Window& window) {
  if (window.axes.empty()) ThrowError(ErrorCode::kShape, "window has no axes");
  std::vector<double> out;
  out.reserve(kFeaturesPerAxis * window.axes.size());
  for (const auto& axis : window.axes) {
    const auto f = AxisFeatures(axis);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

FeatureSample ExtractFeatures(const Window& window, std::uint64_t window_id) {
  FeatureSample s;
  s.features = ExtractFeatureVector(window);
  s.true_label = window.true_label;
  s.window_id = window_id;
  return s;
}

Standardizer::Standardizer(std::vector<double> mean, std::vector<double> stddev)
    : mean_(std::move(mean)), stddev_(std::move(stddev)) {
  if (mean_.size() != stddev_.size()) {
    ThrowError(ErrorCode::kShape, "standardizer mean/stddev size mismatch");
  }
}

Standardizer Standardizer::Fit(std::span<const std::vector<double>> vectors) {
  if (vectors.size() < 2) {
    ThrowError(ErrorCode::kConfig, "standardizer needs at least 2 samples");
  }
  const std::size_t dim = vectors.front().size();
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != dim) ThrowError(ErrorCode::kShape, "inconsistent feature length");
    for (std::size_t d = 0; d < dim; ++d) mean[d] += v[d];
  }
  const double n = static_cast<double>(vectors.size());
  for (double& m : mean) m /= n;
  for (const auto& v : vectors) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = v[d] - mean[d];
      var[d] += diff * diff;
    }
  }
  std::vector<double> stddev(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const double vd = var[d] / n;
    stddev[d] = EffectivelyConstant(vd, mean[d]) ? 0.0 : std::sqrt(vd);
  }
  return Standardizer(std::move(mean), std::move(stddev));
}

Standardizer Standardizer::Fit(std::span<const FeatureSample> samples) {
  std::vector<std::vector<double>> vectors;
  vectors.reserve(samples.size());
  for (const auto& s : samples) vectors.push_back(s.features);
  return Fit(vectors);
}

std::vector<double> Standardizer::Apply(std::span<const double> features) const {
  if (features.size() != mean_.size()) {
    ThrowError(ErrorCode::kShape, "feature length " + std::to_string(features.size()) +
                                      " does not match standardizer dimension " +
                                      std::to_string(mean_.size()));
  }
  std::vector<double> out(features.size());
  for (std::size_t d = 0; d < out.size(); ++d) {
    out[d] = stddev_[d] > 0.0 ? (features[d] - mean_[d]) / stddev_[d] : 0.0;
  }
  return out;
}

FeatureSample Standardizer::Apply(const FeatureSample& sample) const {
  FeatureSample out = sample;
  out.features = Apply(std::span<const double>(sample.features));
  return out;
}

}  // namespace fedsim
