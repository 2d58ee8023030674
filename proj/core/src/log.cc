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

#include "rade/log.h"

#include <mutex>

namespace rade {

LogLevel& MinLogLevel() {
  static LogLevel level = LogLevel::kWarning;
  return level;
}

void Log(LogLevel level, const std::string& message) {
  if (level < MinLogLevel()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  const char* tag = level == LogLevel::kError     ? "E"
                    : level == LogLevel::kWarning ? "W"
                                                  : "I";
  std::cerr << tag << " " << message << "\n";
}

}  // namespace rade
