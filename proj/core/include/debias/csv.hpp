/*
 * Copyright 2026 The Debias Workbench Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace debias::csv {

using Record = std::vector<std::string>;

// RFC-4180 reader. Accepts LF or CRLF line endings, quoted fields with ""
// escapes and embedded newlines, and a leading UTF-8 byte-order mark. Blank
// lines are skipped. Throws Error{kValueError} on an unterminated quote or
// stray characters after a closing quote.
std::vector<Record> parse(std::string_view text);

// Quotes a field only when it contains a comma, quote, CR or LF.
std::string escape_field(std::string_view field);

// Appends one LF-terminated record to `out`.
void write_record(std::string& out, const Record& record);

}  // namespace debias::csv

namespace debias {

// Shortest decimal text that parses back to exactly `value`, always with '.'
// as the decimal separator ("5", "2.5", "0.30000000000000004").
std::string format_number(double value);

// Locale-independent parse of the whole string; nullopt on any trailing junk,
// empty input, or non-finite result.
std::optional<double> parse_number(std::string_view text);

}  // namespace debias
