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

#include "debias/error.hpp"

namespace debias {
namespace {

struct ErrorInfo {
  std::string_view name;
  ErrorCategory category;
  int status;
};

ErrorInfo info(ErrorCode code) {
  using C = ErrorCategory;
  switch (code) {
    case ErrorCode::kInvalidRequest: return {"INVALID_REQUEST", C::kValidation, 400};
    case ErrorCode::kInvalidSchema: return {"INVALID_SCHEMA", C::kValidation, 422};
    case ErrorCode::kSchemaMismatch: return {"SCHEMA_MISMATCH", C::kValidation, 422};
    case ErrorCode::kValueError: return {"VALUE_ERROR", C::kValidation, 422};
    case ErrorCode::kEmptyDataset: return {"EMPTY_DATASET", C::kValidation, 422};
    case ErrorCode::kUnknownVariable: return {"UNKNOWN_VARIABLE", C::kValidation, 422};
    case ErrorCode::kMissingBinSpec: return {"MISSING_BIN_SPEC", C::kValidation, 422};
    case ErrorCode::kIndexOutOfRange: return {"INDEX_OUT_OF_RANGE", C::kValidation, 422};
    case ErrorCode::kAllZeroCounts: return {"ALL_ZERO_COUNTS", C::kEngine, 422};
    case ErrorCode::kEmptyInput: return {"EMPTY_INPUT", C::kValidation, 422};
    case ErrorCode::kDegenerateTarget: return {"DEGENERATE_TARGET", C::kEngine, 422};
    case ErrorCode::kTooFewRows: return {"TOO_FEW_ROWS", C::kEngine, 422};
    case ErrorCode::kTooFewRowsPerClass: return {"TOO_FEW_ROWS_PER_CLASS", C::kEngine, 422};
    case ErrorCode::kUnknownCategory: return {"UNKNOWN_CATEGORY", C::kValidation, 422};
    case ErrorCode::kInvalidPlan: return {"INVALID_PLAN", C::kValidation, 422};
    case ErrorCode::kInvalidPredicate: return {"INVALID_PREDICATE", C::kValidation, 422};
    case ErrorCode::kInsufficientEligibleSamples:
      return {"INSUFFICIENT_ELIGIBLE_SAMPLES", C::kEngine, 422};
    case ErrorCode::kKTooLarge: return {"K_TOO_LARGE", C::kEngine, 422};
    case ErrorCode::kUnannotatedBatch: return {"UNANNOTATED_BATCH", C::kEngine, 409};
    case ErrorCode::kUnknownSample: return {"SAMPLE_NOT_FOUND", C::kEngine, 404};
    case ErrorCode::kIllegalTransition: return {"ILLEGAL_TRANSITION", C::kEngine, 409};
    case ErrorCode::kConstraintViolation: return {"CONSTRAINT_VIOLATION", C::kEngine, 422};
    case ErrorCode::kVersionConflict: return {"VERSION_CONFLICT", C::kEngine, 409};
    case ErrorCode::kReplayMismatch: return {"REPLAY_MISMATCH", C::kEngine, 409};
    case ErrorCode::kDatasetNotFound: return {"DATASET_NOT_FOUND", C::kEngine, 404};
    case ErrorCode::kModelNotFound: return {"MODEL_NOT_FOUND", C::kEngine, 404};
    case ErrorCode::kPlanNotFound: return {"PLAN_NOT_FOUND", C::kEngine, 404};
    case ErrorCode::kBatchNotFound: return {"BATCH_NOT_FOUND", C::kEngine, 404};
    case ErrorCode::kSessionNotFound: return {"SESSION_NOT_FOUND", C::kEngine, 404};
    case ErrorCode::kNotFound: return {"NOT_FOUND", C::kValidation, 404};
    case ErrorCode::kIoError: return {"IO_ERROR", C::kIo, 500};
    case ErrorCode::kStorageFailure: return {"STORAGE_FAILURE", C::kIo, 500};
    case ErrorCode::kBindFailure: return {"BIND_FAILURE", C::kIo, 500};
  }
  return {"INTERNAL", C::kEngine, 500};
}

}  // namespace

std::string_view error_code_name(ErrorCode code) { return info(code).name; }
ErrorCategory error_category(ErrorCode code) { return info(code).category; }
int http_status(ErrorCode code) { return info(code).status; }

nlohmann::json Error::to_json() const {
  nlohmann::json out = {{"code", std::string(error_code_name(code_))},
                        {"message", what()}};
  if (!details_.is_null()) out["details"] = details_;
  return out;
}

}  // namespace debias
