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

#ifndef FEDSIM_LOGGING_H_
#define FEDSIM_LOGGING_H_

#include <string>
#include <string_view>

namespace fedsim::log {

// Reads FEDSIM_LOG (trace|debug|info|warn|error|off) and applies it. Unset or
// unrecognized values leave the default level (warn) in place.
void InitFromEnvironment();
void SetLevel(std::string_view level);

void Debug(const std::string& message);
void Info(const std::string& message);
void Warn(const std::string& message);

}  // namespace fedsim::log

#endif  // FEDSIM_LOGGING_H_
