// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include "archsmith/architecture.hpp"
#include "archsmith/error.hpp"

namespace archsmith {

/// Accuracy-style tasks maximize, loss-style tasks minimize.
enum class FitnessDirection { Maximize, Minimize };

constexpr std::string_view to_string(FitnessDirection d) {
  return d == FitnessDirection::Maximize ? "maximize" : "minimize";
}

inline FitnessDirection direction_from_string(std::string_view s) {
  const std::string t = to_lower(s);
  if (t == "maximize" || t == "max") return FitnessDirection::Maximize;
  if (t == "minimize" || t == "min") return FitnessDirection::Minimize;
  throw Error(ErrorCode::InvalidArgument, "direction must be 'maximize' or 'minimize'");
}

/// True when `a` is strictly better than `b`.
constexpr bool strictly_better(double a, double b, FitnessDirection d) {
  return d == FitnessDirection::Maximize ? a > b : a < b;
}

enum class FitnessSource { Synthetic, External };

constexpr std::string_view to_string(FitnessSource s) {
  return s == FitnessSource::Synthetic ? "synthetic" : "external";
}

struct FitnessRecord {
  Architecture architecture;
  double val_fitness = 0.0;
  double test_fitness = 0.0;
  FitnessSource source = FitnessSource::Synthetic;
  std::uint64_t seed = 0;
};

}  // namespace archsmith
