// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <string>

#include "archsmith/error.hpp"
#include "archsmith/proxy_eval.hpp"

namespace archsmith {
namespace {

constexpr Primitive M = Primitive::Mlp;
constexpr Primitive A = Primitive::Attention;

Architecture alternating_am() {
  std::vector<Primitive> layers;
  for (int i = 0; i < 8; ++i) {
    layers.push_back(A);
    layers.push_back(M);
  }
  return Architecture(layers);
}

std::string double_endpoint(const std::string& mode) {
  return std::string("exec:") + WIRE_DOUBLE + " " + mode;
}

ErrorCode evaluate_code(const std::string& mode, std::chrono::milliseconds timeout) {
  ExternalEvaluator ev(double_endpoint(mode), timeout);
  try {
    ev.evaluate({alternating_am(), "t", 1});
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << mode << ": no error";
  return ErrorCode::InvalidArgument;
}

TEST(SyntheticBase, Examples) {
  EXPECT_DOUBLE_EQ(synthetic_base(Architecture(std::vector<Primitive>(16, M))), 0.6);
  EXPECT_DOUBLE_EQ(synthetic_base(alternating_am()), 0.95);
}

TEST(SyntheticBase, HandOracleOnRandomArchitectures) {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const auto arch = random_architecture(PrimitivePool::three(), 16, rng);
    int attn = 0, changes = 0;
    for (std::size_t i = 0; i < 16; ++i) {
      attn += arch[i] == A;
      if (i) changes += arch[i] != arch[i - 1];
    }
    const double ratio = std::max(0.0, 1.0 - std::abs(attn / 16.0 - 0.4) / 0.4);
    const double expected = 0.5 + 0.2 * ratio + 0.2 * changes / 15.0 + 0.1 * (arch[15] == M);
    EXPECT_NEAR(synthetic_base(arch), expected, 1e-12);
    EXPECT_GE(synthetic_base(arch), 0.5);
    EXPECT_LE(synthetic_base(arch), 1.0);
  }
}

TEST(SyntheticFitness, NoiseBoundsAndDirection) {
  Rng rng(4);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto arch = random_architecture(PrimitivePool::three(), 16, rng);
    const auto seed = static_cast<std::uint64_t>(trial);
    const auto r = synthetic_fitness(arch, seed, FitnessDirection::Maximize);
    const double base = synthetic_base(arch);
    EXPECT_LE(std::abs(r.val_fitness - base), 0.02);
    EXPECT_LE(std::abs(r.test_fitness - base), 0.02);
    EXPECT_LE(std::abs(r.val_fitness - r.test_fitness), 0.04);
    EXPECT_EQ(r.source, FitnessSource::Synthetic);
    const auto m = synthetic_fitness(arch, seed, FitnessDirection::Minimize);
    EXPECT_DOUBLE_EQ(m.val_fitness, 1.0 - r.val_fitness);
    EXPECT_DOUBLE_EQ(m.test_fitness, 1.0 - r.test_fitness);
  }
}

TEST(SyntheticFitness, ReplayHasNoDivergence) {
  Rng rng(5);
  std::vector<Architecture> archs;
  for (int i = 0; i < 100; ++i) archs.push_back(random_architecture(PrimitivePool::two(), 16, rng));
  std::vector<FitnessRecord> first;
  for (int i = 0; i < 10000; ++i) first.push_back(synthetic_fitness(archs[i % 100], i % 7, FitnessDirection::Maximize));
  for (int i = 9999; i >= 0; --i) {
    const auto r = synthetic_fitness(archs[i % 100], i % 7, FitnessDirection::Maximize);
    ASSERT_EQ(r.val_fitness, first[i].val_fitness);
    ASSERT_EQ(r.test_fitness, first[i].test_fitness);
  }
}

TEST(SyntheticFitness, ValTopIsNearTestTop) {
  // Uniform random pools crowd the top within the noise band, so the exact
  // agreement rate is frozen here rather than bounded.
  int agree = 0;
  for (std::uint64_t pool_seed = 0; pool_seed < 100; ++pool_seed) {
    Rng rng(1000 + pool_seed);
    std::vector<FitnessRecord> records;
    for (int i = 0; i < 100; ++i) {
      records.push_back(synthetic_fitness(random_architecture(PrimitivePool::two(), 16, rng), pool_seed,
                                          FitnessDirection::Maximize));
    }
    const auto by_val = std::max_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
      return a.val_fitness < b.val_fitness;
    });
    const auto by_test = std::max_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
      return a.test_fitness < b.test_fitness;
    });
    EXPECT_LE(by_test->test_fitness - by_val->test_fitness, 0.08 + 1e-12);
    agree += by_val->architecture == by_test->architecture;
  }
  EXPECT_EQ(agree, 36);
}

TEST(SplitTrainVal, Examples) {
  const auto s = split_train_val(10, 0.7, 42);
  EXPECT_EQ(s.train.size(), 7u);
  EXPECT_EQ(s.val.size(), 3u);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  EXPECT_EQ(all.size(), 10u);
  EXPECT_EQ(*all.rbegin(), 9u);

  const auto one = split_train_val(1, 0.7, 3);
  EXPECT_EQ(one.train.size(), 1u);
  EXPECT_TRUE(one.val.empty());

  const auto again = split_train_val(10, 0.7, 42);
  EXPECT_EQ(again.train, s.train);
  EXPECT_EQ(again.val, s.val);
}

TEST(SplitTrainVal, RejectsBadRatio) {
  EXPECT_THROW(split_train_val(10, 0.0, 1), Error);
  EXPECT_THROW(split_train_val(10, 1.0, 1), Error);
}

TEST(ExternalEvaluator, EchoDouble) {
  ExternalEvaluator ev(double_endpoint("echo-eval"), std::chrono::seconds(10));
  for (int i = 0; i < 3; ++i) {
    const auto r = ev.evaluate({alternating_am(), "t", 9});
    EXPECT_DOUBLE_EQ(r.val_fitness, 0.5);
    EXPECT_DOUBLE_EQ(r.test_fitness, 0.5);
    EXPECT_EQ(r.source, FitnessSource::External);
    EXPECT_EQ(r.seed, 9u);
  }
}

TEST(ExternalEvaluator, DistinguishableFailures) {
  EXPECT_EQ(evaluate_code("nonjson", std::chrono::seconds(10)), ErrorCode::MalformedResponse);
  EXPECT_EQ(evaluate_code("silent", std::chrono::milliseconds(200)), ErrorCode::Timeout);
  EXPECT_EQ(evaluate_code("exit", std::chrono::seconds(10)), ErrorCode::TransportError);
}

TEST(ExternalEvaluator, ReportedFailureCarriesReason) {
  ExternalEvaluator ev(double_endpoint("error-oom"), std::chrono::seconds(10));
  try {
    ev.evaluate({alternating_am(), "t", 1});
    ADD_FAILURE() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EvaluatorReportedFailure);
    EXPECT_EQ(e.detail(), "oom");
  }
}

TEST(ParseEvaluatorResponse, Contract) {
  const auto arch = alternating_am();
  EXPECT_DOUBLE_EQ(parse_evaluator_response(R"({"val":0.25,"test":0.75})", arch, 0).test_fitness, 0.75);
  EXPECT_THROW(parse_evaluator_response(R"({"val":0.25})", arch, 0), Error);
  EXPECT_THROW(parse_evaluator_response(R"([1,2])", arch, 0), Error);
  EXPECT_THROW(parse_evaluator_response(R"({"val":"x","test":1})", arch, 0), Error);
}

}  // namespace
}  // namespace archsmith
