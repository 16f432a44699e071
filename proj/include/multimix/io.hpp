/*
 * Copyright 2026 The MultiMix Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MULTIMIX_IO_HPP
#define MULTIMIX_IO_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "multimix/numerics.hpp"

namespace multimix {

/// %.17g: enough digits to reproduce the double exactly.
std::string format_double(double value);

/// Parses a full field as a double; throws ParseError on failure.
double parse_double(std::string_view field, std::size_t line);

std::vector<std::string_view> split_fields(std::string_view line, char sep = ',');

/// Writes `m` with one CSV row per matrix row, preceded by `header` (no
/// header line when empty). LF line endings.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m,
                      const std::vector<std::string>& header);

/// Reads a numeric CSV written by write_matrix_csv; `has_header` skips the
/// first line.
Matrix read_matrix_csv(const std::filesystem::path& path, bool has_header = true);

/// Header names prefix0 ... prefix{count-1}.
std::vector<std::string> numbered_header(std::string_view prefix, std::size_t count);

}  // namespace multimix

#endif  // MULTIMIX_IO_HPP
