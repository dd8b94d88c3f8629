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

#ifndef FEDSIM_METRICS_H_
#define FEDSIM_METRICS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace fedsim {

// counts[truth][predicted]
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t n_classes);

  void Add(std::size_t truth, std::size_t predicted);
  void Merge(const ConfusionMatrix& other);

  std::size_t n_classes() const { return n_classes_; }
  std::size_t count(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * n_classes_ + predicted];
  }
  std::size_t total() const;

  // nullopt when the class never occurs as truth or prediction.
  std::optional<double> ClassF1(std::size_t c) const;
  // Mean of ClassF1 over classes that occur; 0 for an empty matrix.
  double MacroF1() const;

 private:
  std::size_t n_classes_;
  std::vector<std::size_t> counts_;
};

double MacroF1(std::span<const std::size_t> predictions,
               std::span<const std::size_t> truths, std::size_t n_classes);

}  // namespace fedsim

#endif  // FEDSIM_METRICS_H_
