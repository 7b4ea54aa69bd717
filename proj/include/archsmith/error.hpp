// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0
//
// Error type shared by every archsmith module.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace archsmith {

enum class ErrorCode {
  // arch-core
  UnknownToken,
  WrongLength,
  OutOfPool,
  Overflow,
  InvalidArgument,
  // scale-model
  MissingLatency,
  // search-scaffold
  ProposerFailure,
  EvaluatorFailure,
  NoValidNode,
  // proxy-eval
  Timeout,
  MalformedResponse,
  EvaluatorReportedFailure,
  TransportError,
  // aggregation
  Empty,
  TooFewPoints,
  LengthMismatch,
  // extrapolation
  Unreachable,
  // analysis
  ZeroTotal,
  AtOptimum,
  DegenerateContext,
  DegenerateFit,
  // workspace-io
  MissingManifest,
  InvalidField,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownToken: return "UnknownToken";
    case ErrorCode::WrongLength: return "WrongLength";
    case ErrorCode::OutOfPool: return "OutOfPool";
    case ErrorCode::Overflow: return "Overflow";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingLatency: return "MissingLatency";
    case ErrorCode::ProposerFailure: return "ProposerFailure";
    case ErrorCode::EvaluatorFailure: return "EvaluatorFailure";
    case ErrorCode::NoValidNode: return "NoValidNode";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::EvaluatorReportedFailure: return "EvaluatorReportedFailure";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::ZeroTotal: return "ZeroTotal";
    case ErrorCode::AtOptimum: return "AtOptimum";
    case ErrorCode::DegenerateContext: return "DegenerateContext";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::MissingManifest: return "MissingManifest";
    case ErrorCode::InvalidField: return "InvalidField";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Domain error. `code()` is machine readable; `what()` carries
/// "<Code>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace archsmith
