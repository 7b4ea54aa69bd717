// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale stand-ins for small-scale proxy training: a deterministic
// synthetic fitness oracle, a seeded train/validation split, and a client for
// external evaluators speaking the line-delimited JSON protocol.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "archsmith/architecture.hpp"
#include "archsmith/fitness.hpp"
#include "archsmith/random.hpp"
#include "archsmith/wire.hpp"

namespace archsmith {

/// Single source of truth for the synthetic oracle's shape.
struct SyntheticWeights {
  static constexpr double kBase = 0.5;
  static constexpr double kRatio = 0.2;
  static constexpr double kInterleave = 0.2;
  static constexpr double kLastMlp = 0.1;
  static constexpr double kTargetAttentionShare = 0.4;
  static constexpr double kNoise = 0.02;
};

/// Noise-free structural score in [0.5, 1.0]: rewards an attention share near
/// 40%, frequent primitive changes, and an MLP as the final layer.
inline double synthetic_base(const Architecture& arch) {
  using W = SyntheticWeights;
  const std::size_t n = arch.size();
  if (n == 0) return W::kBase;
  const double share = static_cast<double>(arch.count(Primitive::Attention)) / static_cast<double>(n);
  const double f_ratio =
      std::max(0.0, 1.0 - std::abs(share - W::kTargetAttentionShare) / W::kTargetAttentionShare);
  double f_inter = 0.0;
  if (n > 1) {
    std::size_t changes = 0;
    for (std::size_t i = 1; i < n; ++i) changes += arch[i] != arch[i - 1];
    f_inter = static_cast<double>(changes) / static_cast<double>(n - 1);
  }
  const double f_last = arch[n - 1] == Primitive::Mlp ? 1.0 : 0.0;
  return W::kBase + W::kRatio * f_ratio + W::kInterleave * f_inter + W::kLastMlp * f_last;
}

/// Keyed hash noise in [-0.02, +0.02]; independent of call order.
inline double synthetic_noise(const Architecture& arch, std::uint64_t seed,
                              std::string_view split) {
  std::uint64_t h = fnv1a64(format_architecture(arch));
  h = fnv1a64(split, h ^ splitmix64(seed));
  const double u = unit_from_bits(splitmix64(h));
  return (2.0 * u - 1.0) * SyntheticWeights::kNoise;
}

inline FitnessRecord synthetic_fitness(const Architecture& arch, std::uint64_t seed,
                                       FitnessDirection direction) {
  const double base = synthetic_base(arch);
  double val = base + synthetic_noise(arch, seed, "val");
  double test = base + synthetic_noise(arch, seed, "test");
  if (direction == FitnessDirection::Minimize) {
    val = 1.0 - val;
    test = 1.0 - test;
  }
  return FitnessRecord{arch, val, test, FitnessSource::Synthetic, seed};
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Seeded shuffle then cut; |train| = round(ratio * items).
inline Split split_train_val(std::size_t items, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "split ratio must be in (0, 1)");
  }
  std::vector<std::size_t> idx(items);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = items; i > 1; --i) {
    std::swap(idx[i - 1], idx[uniform_below(rng, i)]);
  }
  const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(items)));
  Split out;
  out.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  return out;
}

// --- evaluators --------------------------------------------------------------

struct EvaluationRequest {
  Architecture arch;
  std::string task_id;
  std::uint64_t seed = 0;
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  /// Throws Error on failure (Timeout, MalformedResponse,
  /// EvaluatorReportedFailure, TransportError).
  virtual FitnessRecord evaluate(const EvaluationRequest& request) = 0;
};

class SyntheticEvaluator final : public Evaluator {
 public:
  SyntheticEvaluator(std::uint64_t seed, FitnessDirection direction)
      : seed_(seed), direction_(direction) {}

  /// The configured oracle seed is used; the per-request seed is ignored so
  /// every run of a task sees the same landscape.
  FitnessRecord evaluate(const EvaluationRequest& request) override {
    return synthetic_fitness(request.arch, seed_, direction_);
  }

 private:
  std::uint64_t seed_;
  FitnessDirection direction_;
};

/// Parses one evaluator response line.
inline FitnessRecord parse_evaluator_response(const std::string& line, const Architecture& arch,
                                              std::uint64_t seed) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::MalformedResponse, "evaluator response is not JSON: '" + line + "'");
  }
  if (!j.is_object()) throw Error(ErrorCode::MalformedResponse, "evaluator response is not an object");
  if (j.contains("error")) {
    const auto& e = j.at("error");
    throw Error(ErrorCode::EvaluatorReportedFailure, e.is_string() ? e.get<std::string>() : e.dump());
  }
  if (!j.contains("val") || !j.contains("test") || !j.at("val").is_number() ||
      !j.at("test").is_number()) {
    throw Error(ErrorCode::MalformedResponse, "evaluator response lacks numeric 'val'/'test'");
  }
  const double val = j.at("val").get<double>();
  const double test = j.at("test").get<double>();
  if (!std::isfinite(val) || !std::isfinite(test)) {
    throw Error(ErrorCode::MalformedResponse, "evaluator returned non-finite fitness");
  }
  return FitnessRecord{arch, val, test, FitnessSource::External, seed};
}

/// Sends {"arch","task_id","seed"} and reads one response line.
inline FitnessRecord evaluate_external(const EvaluationRequest& request, LineChannel& channel,
                                       std::chrono::milliseconds timeout) {
  const nlohmann::json req = {{"arch", format_architecture(request.arch)},
                              {"task_id", request.task_id},
                              {"seed", request.seed}};
  channel.write_line(req.dump());
  const std::string line = channel.read_line(timeout);
  return parse_evaluator_response(line, request.arch, request.seed);
}

/// Evaluator backed by an endpoint ("exec:<command>" or "tcp:<host>:<port>").
/// The connection is opened lazily and reused for every request.
class ExternalEvaluator final : public Evaluator {
 public:
  explicit ExternalEvaluator(std::string endpoint,
                             std::chrono::milliseconds timeout = std::chrono::minutes(30))
      : endpoint_(std::move(endpoint)), timeout_(timeout) {}

  FitnessRecord evaluate(const EvaluationRequest& request) override {
    if (!channel_) channel_ = open_channel(endpoint_);
    try {
      return evaluate_external(request, *channel_, timeout_);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Timeout || e.code() == ErrorCode::TransportError) channel_.reset();
      throw;
    }
  }

 private:
  std::string endpoint_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<LineChannel> channel_;
};

}  // namespace archsmith
