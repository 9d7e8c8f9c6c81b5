// Copyright (c) 2026 The attnscore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ATTNSCORE_SRC_TEXT_UTIL_H_
#define ATTNSCORE_SRC_TEXT_UTIL_H_

#include <charconv>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace attnscore::internal {

std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, const std::string& text);

/// Splits on LF, dropping a trailing CR from each line.
std::vector<std::string_view> SplitLines(std::string_view text);
/// Splits on runs of spaces or tabs.
std::vector<std::string_view> SplitFields(std::string_view line);
/// Splits on every occurrence of `sep`, keeping empty fields.
std::vector<std::string_view> SplitOn(std::string_view line, char sep);

template <typename T>
bool ParseNumber(std::string_view field, T& out) {
  // from_chars rejects a leading '+', which some exporters emit.
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end;
}

/// Shortest decimal form that parses back to the same double.
std::string FormatRoundTrip(double v);
/// printf "%.6g".
std::string FormatSig6(double v);

[[noreturn]] void ParseFail(const std::string& source, std::size_t line, const std::string& what);

}  // namespace attnscore::internal

#endif  // ATTNSCORE_SRC_TEXT_UTIL_H_
