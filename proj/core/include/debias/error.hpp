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

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace debias {

// Every failure the engine can report. Codes are stable wire strings; see
// error_code_name().
enum class ErrorCode {
  kInvalidRequest,
  kInvalidSchema,
  kSchemaMismatch,
  kValueError,
  kEmptyDataset,
  kUnknownVariable,
  kMissingBinSpec,
  kIndexOutOfRange,
  kAllZeroCounts,
  kEmptyInput,
  kDegenerateTarget,
  kTooFewRows,
  kTooFewRowsPerClass,
  kUnknownCategory,
  kInvalidPlan,
  kInvalidPredicate,
  kInsufficientEligibleSamples,
  kKTooLarge,
  kUnannotatedBatch,
  kUnknownSample,
  kIllegalTransition,
  kConstraintViolation,
  kVersionConflict,
  kReplayMismatch,
  kDatasetNotFound,
  kModelNotFound,
  kPlanNotFound,
  kBatchNotFound,
  kSessionNotFound,
  kNotFound,
  kIoError,
  kStorageFailure,
  kBindFailure,
};

// Coarse classification used for CLI exit codes.
enum class ErrorCategory { kValidation, kEngine, kIo };

std::string_view error_code_name(ErrorCode code);
ErrorCategory error_category(ErrorCode code);
int http_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message,
        nlohmann::json details = nullptr)
      : std::runtime_error(std::move(message)),
        code_(code),
        details_(std::move(details)) {}

  ErrorCode code() const { return code_; }
  const nlohmann::json& details() const { return details_; }

  // {"code": ..., "message": ..., "details": ...}
  nlohmann::json to_json() const;

 private:
  ErrorCode code_;
  nlohmann::json details_;
};

}  // namespace debias
