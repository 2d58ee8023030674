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

#ifndef RADE_FILE_UTIL_H_
#define RADE_FILE_UTIL_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace rade {

// Writes to a sibling temp file and renames it over `path`, so readers never
// observe a partial file. Throws kIo.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view contents);

// Throws kMissingFile / kIo.
std::string ReadFile(const std::filesystem::path& path);

// 64-bit FNV-1a.
std::uint64_t Fnv1a64(std::string_view bytes);

std::string HexDigest(std::uint64_t value);

}  // namespace rade

#endif  // RADE_FILE_UTIL_H_
