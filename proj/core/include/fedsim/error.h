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

#ifndef FEDSIM_ERROR_H_
#define FEDSIM_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace fedsim {

enum class ErrorCode {
  kConfig,   // invalid configuration or hyper-parameter
  kShape,    // tensor / vector dimension mismatch
  kNumeric,  // NaN / Inf encountered
  kIo,       // file cannot be opened / read / written
  kFormat,   // file content cannot be interpreted
  kState,    // operation invalid for the current object state
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures are reported as fedsim::Error. The code is what the
// CLI maps to a process exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void ThrowError(ErrorCode code, const std::string& message);

}  // namespace fedsim

#endif  // FEDSIM_ERROR_H_
