// Copyright 2026 The RADE Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RADE_LOG_H_
#define RADE_LOG_H_

#include <iostream>
#include <sstream>
#include <string>

namespace rade {

enum class LogLevel { kInfo = 0, kWarning = 1, kError = 2, kSilent = 3 };

// Process-wide threshold; messages below it are dropped.
LogLevel& MinLogLevel();

void Log(LogLevel level, const std::string& message);

inline void LogWarning(const std::string& message) {
  Log(LogLevel::kWarning, message);
}
inline void LogInfo(const std::string& message) {
  Log(LogLevel::kInfo, message);
}

}  // namespace rade

#endif  // RADE_LOG_H_
