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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "debias/csv.hpp"
#include "debias/error.hpp"

namespace debias {
namespace {

TEST(Csv, ParsesQuotedFieldsAndCrlf) {
  const auto records = csv::parse("a,b\r\n\"x,1\",\"say \"\"hi\"\"\"\r\n\r\nlast,\"multi\nline\"");
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[1][0], "x,1");
  EXPECT_EQ(records[1][1], "say \"hi\"");
  EXPECT_EQ(records[2][1], "multi\nline");
}

TEST(Csv, StripsByteOrderMark) {
  const auto records = csv::parse("\xEF\xBB\xBF" "a,b\n1,2\n");
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0][0], "a");
}

TEST(Csv, KeepsEmptyFields) {
  const auto records = csv::parse("a,,c\n,,\n");
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0], (csv::Record{"a", "", "c"}));
  EXPECT_EQ(records[1], (csv::Record{"", "", ""}));
}

TEST(Csv, RejectsUnterminatedQuote) {
  try {
    csv::parse("a\n\"open");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValueError);
  }
  EXPECT_THROW(csv::parse("\"a\"b\n"), Error);
}

TEST(Csv, WriteParseRoundTrip) {
  std::mt19937_64 rng(3);
  const std::string alphabet = "ab ,\"\n\r1";
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<csv::Record> records(1 + rng() % 5);
    const size_t width = 1 + rng() % 4;
    for (auto& r : records) {
      for (size_t i = 0; i < width; ++i) {
        std::string f;
        for (size_t n = rng() % 6; n > 0; --n) f += alphabet[rng() % alphabet.size()];
        r.push_back(f);
      }
      // A single empty field would be a blank line, which the reader skips.
      if (width == 1 && r[0].empty()) r[0] = "z";
    }
    std::string text;
    for (const auto& r : records) csv::write_record(text, r);
    EXPECT_EQ(csv::parse(text), records);
  }
}

TEST(Csv, EscapeOnlyWhenNeeded) {
  EXPECT_EQ(csv::escape_field("plain"), "plain");
  EXPECT_EQ(csv::escape_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv::escape_field("q\""), "\"q\"\"\"");
}

TEST(Numbers, ShortestRoundTrip) {
  EXPECT_EQ(format_number(5.0), "5");
  EXPECT_EQ(format_number(2.5), "2.5");
  EXPECT_EQ(format_number(0.1 + 0.2), "0.30000000000000004");
  EXPECT_EQ(format_number(-0.0), "0");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double x = d(rng);
    EXPECT_EQ(*parse_number(format_number(x)), x);
  }
}

TEST(Numbers, ParseIsStrict) {
  EXPECT_EQ(parse_number(" 42 "), 42.0);
  EXPECT_EQ(parse_number("+1.5"), 1.5);
  EXPECT_FALSE(parse_number(""));
  EXPECT_FALSE(parse_number("12abc"));
  EXPECT_FALSE(parse_number("1,5"));
  EXPECT_FALSE(parse_number("nan"));
  EXPECT_FALSE(parse_number("inf"));
}

}  // namespace
}  // namespace debias
