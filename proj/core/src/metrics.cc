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

#include "fedsim/metrics.h"

#include <numeric>

#include "fedsim/error.h"

namespace fedsim {

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes)
    : n_classes_(n_classes), counts_(n_classes * n_classes, 0) {}

void ConfusionMatrix::Add(std::size_t truth, std::size_t predicted) {
  if (truth >= n_classes_ || predicted >= n_classes_) {
    ThrowError(ErrorCode::kShape, "class index out of range in confusion matrix");
  }
  counts_[truth * n_classes_ + predicted] += 1;
}

void ConfusionMatrix::Merge(const ConfusionMatrix& other) {
  if (other.n_classes_ != n_classes_) {
    ThrowError(ErrorCode::kShape, "confusion matrices differ in class count");
  }
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::optional<double> ConfusionMatrix::ClassF1(std::size_t c) const {
  std::size_t tp = count(c, c), as_truth = 0, as_pred = 0;
  for (std::size_t k = 0; k < n_classes_; ++k) {
    as_truth += count(c, k);
    as_pred += count(k, c);
  }
  if (as_truth == 0 && as_pred == 0) return std::nullopt;
  // F1 = 2TP / (2TP + FP + FN) = 2TP / (|truth| + |pred|); 0 when TP = 0.
  return 2.0 * static_cast<double>(tp) / static_cast<double>(as_truth + as_pred);
}

double ConfusionMatrix::MacroF1() const {
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < n_classes_; ++c) {
    if (auto f1 = ClassF1(c)) {
      sum += *f1;
      ++present;
    }
  }
  return present == 0 ? 0.0 : sum / static_cast<double>(present);
}

double MacroF1(std::span<const std::size_t> predictions,
               std::span<const std::size_t> truths, std::size_t n_classes) {
  if (predictions.size() != truths.size()) {
    ThrowError(ErrorCode::kShape, "predictions and truths differ in length");
  }
  ConfusionMatrix cm(n_classes);
  for (std::size_t i = 0; i < truths.size(); ++i) cm.Add(truths[i], predictions[i]);
  return cm.MacroF1();
}

}  // namespace fedsim
