// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>

#include "archsmith/error.hpp"
#include "archsmith/extrapolation.hpp"
#include "fixtures/published_tables.hpp"

namespace archsmith {
namespace {

constexpr Primitive M = Primitive::Mlp;
constexpr Primitive A = Primitive::Attention;
constexpr Primitive Mb = Primitive::Mamba;

Architecture from_runs(const RunList& runs) { return Architecture(run_length_decode(runs)); }

Architecture base_of(std::string_view family) {
  for (const auto& b : fixtures::kBases) {
    if (b.name == family) return Architecture(parse_compact_notation(b.pattern));
  }
  throw std::runtime_error("no base for " + std::string(family));
}

std::vector<Primitive> printed(std::string_view name, std::string_view scale) {
  for (const auto& r : fixtures::kParams2Prim) {
    if (r.name == name && r.scale == scale) return parse_compact_notation(r.pattern);
  }
  for (const auto& r : fixtures::kParams3Prim) {
    if (r.name == name && r.scale == scale) return parse_compact_notation(r.pattern);
  }
  throw std::runtime_error("no row " + std::string(name));
}

ScaleConfig preset(const std::string& name) { return *find_preset(name); }

TEST(RunLengthEncode, Examples) {
  EXPECT_EQ(run_length_encode(Architecture{A, A, M, M, M}), (RunList{{A, 2}, {M, 3}}));
  EXPECT_EQ(run_length_encode(Architecture{A, M, A, M}), (RunList{{A, 1}, {M, 1}, {A, 1}, {M, 1}}));
  EXPECT_EQ(run_length_encode(base_of("AIRAformer-B")),
            (RunList{{A, 3}, {M, 1}, {A, 1}, {M, 1}, {A, 1}, {M, 1}, {A, 1}, {M, 1}, {A, 1}, {M, 5}}));
}

TEST(RunLengthEncode, DecodeInverts) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto arch = random_architecture(PrimitivePool::three(), 16, rng);
    EXPECT_EQ(from_runs(run_length_encode(arch)), arch);
  }
}

TEST(Stretch, Examples) {
  EXPECT_EQ(stretch(from_runs({{A, 2}, {M, 14}}), 32).runs, (RunList{{A, 4}, {M, 28}}));
  EXPECT_EQ(stretch(from_runs({{A, 3}, {M, 13}}), 24).runs, (RunList{{A, 5}, {M, 19}}));
  const auto base = base_of("AIRAformer-B");
  EXPECT_EQ(stretch(base, 16).layers(), base.layers());
  EXPECT_THROW(stretch(base, 15), Error);
}

TEST(Stretch, ExactSumAndOrderOverRandomBases) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 500; ++trial) {
    Rng rng(gen());
    const std::size_t len = 1 + gen() % 20;
    const auto base = random_architecture(PrimitivePool::three(), len, rng);
    const std::size_t target = len + gen() % (8 * len);
    const auto p = stretch(base, target);
    EXPECT_EQ(p.layers().size(), target);
    const auto base_runs = run_length_encode(base);
    ASSERT_EQ(p.runs.size(), base_runs.size());
    for (std::size_t i = 0; i < p.runs.size(); ++i) {
      EXPECT_EQ(p.runs[i].primitive, base_runs[i].primitive);
      // Hamilton keeps each run within one seat of its exact quota.
      const double quota = static_cast<double>(base_runs[i].length * target) / static_cast<double>(len);
      EXPECT_LT(std::abs(static_cast<double>(p.runs[i].length) - quota), 1.0);
    }
  }
}

TEST(Stretch, RatioConvergesAtTenTimesDepth) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto base = random_architecture(PrimitivePool::three(), 16, rng);
    const auto p = stretch(base, 160);
    const auto c = p.counts();
    for (Primitive q : kAllPrimitives) {
      const double want = static_cast<double>(base.count(q)) / 16.0;
      EXPECT_NEAR(static_cast<double>(c.of(q)) / 160.0, want, 0.02);
    }
  }
}

TEST(Stack, Examples) {
  const auto base = base_of("AIRAformer-B");
  for (auto fill : {StackFill::prefix(), StackFill::suffix(), StackFill::constant(M)}) {
    const auto p = stack(base, 32, fill);
    EXPECT_EQ(p.copies, 2u);
    EXPECT_EQ(compact_notation(p), "2\xC3\x97(3A-4\xC3\x97(M-A)-5M)");
  }
  const auto padded = stack(base, 23, StackFill::constant(M));
  EXPECT_EQ(compact_notation(padded), "(3A-4\xC3\x97(M-A)-5M)-7M");
  EXPECT_EQ(padded.layers(), printed("AIRAformer-B (Stacked)", "350M"));

  const auto prefix = stack(base, 23, StackFill::prefix());
  std::vector<Primitive> expected = base.layers();
  expected.insert(expected.end(), base.layers().begin(), base.layers().begin() + 7);
  EXPECT_EQ(prefix.layers(), expected);

  const auto suffix = stack(base, 23, StackFill::suffix());
  expected.resize(16);
  expected.insert(expected.end(), base.layers().end() - 7, base.layers().end());
  EXPECT_EQ(suffix.layers(), expected);
}

TEST(Stack, PrefixEqualsBaseAndSumIsExact) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 300; ++trial) {
    Rng rng(gen());
    const std::size_t len = 1 + gen() % 20;
    const auto base = random_architecture(PrimitivePool::three(), len, rng);
    const std::size_t target = len + gen() % (8 * len);
    const auto p = stack(base, target, trial % 2 ? StackFill::suffix() : StackFill::constant(Mb));
    const auto layers = p.layers();
    ASSERT_EQ(layers.size(), target);
    EXPECT_TRUE(std::equal(base.layers().begin(), base.layers().end(), layers.begin()));
    if (target % len == 0) {
      for (std::size_t i = 0; i < target; ++i) EXPECT_EQ(layers[i], base[i % len]);
    }
  }
}

TEST(Stack, FillFromString) {
  EXPECT_EQ(stack_fill_from_string("prefix").kind, StackFill::Kind::Prefix);
  EXPECT_EQ(stack_fill_from_string("SUFFIX").kind, StackFill::Kind::Suffix);
  EXPECT_EQ(stack_fill_from_string("constant:M").primitive, M);
  EXPECT_EQ(stack_fill_from_string("constant:mamba2").primitive, Mb);
  EXPECT_THROW(stack_fill_from_string("constant:x"), Error);
  EXPECT_THROW(stack_fill_from_string("middle"), Error);
}

TEST(PatternParity, RowsReproducedFromPrintedBases) {
  struct Case {
    std::string_view family, name, scale;
    ExtrapolationMode mode;
    StackFill fill;
  };
  const Case cases[] = {
      {"AIRAformer-B", "AIRAformer-B (Stacked)", "1B", ExtrapolationMode::Stacked, StackFill::prefix()},
      {"AIRAformer-B", "AIRAformer-B (Stacked)", "350M", ExtrapolationMode::Stacked, StackFill::constant(M)},
      {"AIRAformer-B", "AIRAformer-B (Stacked)", "3B", ExtrapolationMode::Stacked, StackFill::constant(M)},
      {"AIRAformer-C", "AIRAformer-C (Stretched)", "1B", ExtrapolationMode::Stretched, {}},
      {"AIRAformer-D", "AIRAformer-D (Stacked)", "350M", ExtrapolationMode::Stacked, StackFill::prefix()},
      {"AIRAformer-D", "AIRAformer-D (Stacked)", "1B", ExtrapolationMode::Stacked, StackFill::prefix()},
      {"AIRAformer-D", "AIRAformer-D (Stretched)", "1B", ExtrapolationMode::Stretched, {}},
      {"AIRAhybrid-A", "AIRAhybrid-A (Stretched)", "1B", ExtrapolationMode::Stretched, {}},
      {"AIRAhybrid-A", "AIRAhybrid-A (Stretched)", "3B", ExtrapolationMode::Stretched, {}},
      {"AIRAhybrid-D", "AIRAhybrid-D (Stretched)", "1B", ExtrapolationMode::Stretched, {}},
      {"AIRAhybrid-E", "AIRAhybrid-E (Stretched)", "1B", ExtrapolationMode::Stretched, {}},
      {"AIRAhybrid-E", "AIRAhybrid-E (Stacked)", "350M", ExtrapolationMode::Stacked, StackFill::prefix()},
      {"AIRAhybrid-E", "AIRAhybrid-E (Stacked)", "1B", ExtrapolationMode::Stacked, StackFill::prefix()},
      {"AIRAhybrid-E", "AIRAhybrid-E (Stacked)", "3B", ExtrapolationMode::Stacked, StackFill::prefix()},
  };
  for (const auto& c : cases) {
    const auto want = printed(c.name, c.scale);
    EXPECT_EQ(extrapolate(base_of(c.family), want.size(), c.mode, c.fill).layers(), want)
        << c.name << " " << c.scale;
  }
}

TEST(PatternParity, AiraformerCStacksItsTableUnit) {
  // The stacked rows repeat "2×(2A-M)-3×(A-M)-4A", which is not the prose base.
  const Architecture unit(parse_compact_notation("2x(2A-M)-3x(A-M)-4A"));
  EXPECT_NE(unit, base_of("AIRAformer-C"));
  EXPECT_EQ(unit.count(A), base_of("AIRAformer-C").count(A));
  EXPECT_EQ(stack(unit, 48).layers(), printed("AIRAformer-C (Stacked)", "1B"));
  EXPECT_EQ(stack(unit, 34).layers(), printed("AIRAformer-C (Stacked)", "350M"));
}

TEST(ChooseDepth, Examples) {
  const Architecture llama(parse_compact_notation("8x(A-M)"));
  EXPECT_EQ(choose_depth(llama, preset("1B-2prim"), ExtrapolationMode::Stacked, 970000000), 32u);
  const Architecture c_unit(parse_compact_notation("2x(2A-M)-3x(A-M)-4A"));
  EXPECT_EQ(choose_depth(c_unit, preset("1B-2prim"), ExtrapolationMode::Stacked, 1100000000), 48u);
  const auto at_base = params_model(stack(c_unit, 16), preset("1B-2prim")).non_embedding;
  EXPECT_EQ(choose_depth(c_unit, preset("1B-2prim"), ExtrapolationMode::Stretched, at_base), 16u);
}

TEST(ChooseDepth, MatchesBruteForceScan) {
  Rng rng(6);
  const auto cfg = preset("1B-3prim");
  for (int trial = 0; trial < 30; ++trial) {
    const auto base = random_architecture(PrimitivePool::three(), 16, rng);
    const std::uint64_t target = 700000000ull + 100000000ull * static_cast<std::uint64_t>(trial);
    for (auto mode : {ExtrapolationMode::Stacked, ExtrapolationMode::Stretched}) {
      std::size_t best = 0;
      std::uint64_t best_err = ~0ull;
      for (std::size_t d = 16; d <= 128; ++d) {
        const auto p = params_model(extrapolate(base, d, mode), cfg).non_embedding;
        const std::uint64_t err = p > target ? p - target : target - p;
        if (err < best_err) {
          best_err = err;
          best = d;
        }
      }
      EXPECT_EQ(choose_depth(base, cfg, mode, target), best);
    }
  }
}

TEST(ChooseDepth, Unreachable) {
  const Architecture llama(parse_compact_notation("8x(A-M)"));
  try {
    choose_depth(llama, preset("1B-2prim"), ExtrapolationMode::Stacked, 100000000000ull);
    ADD_FAILURE() << "expected Unreachable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unreachable);
  }
}

TEST(CompactNotation, RoundTripOverRandomArchitectures) {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const auto arch = random_architecture(PrimitivePool::three(), 8 + i % 40, rng);
    const auto text = compact_notation(run_length_encode(arch));
    EXPECT_EQ(parse_compact_notation(text), arch.layers()) << text;
  }
}

TEST(CompactNotation, ParsesEveryPrintedPattern) {
  auto check = [](const auto& table) {
    for (const auto& r : table) {
      const auto layers = parse_compact_notation(r.pattern);
      EXPECT_FALSE(layers.empty()) << r.name;
      EXPECT_EQ(parse_compact_notation(compact_notation(run_length_encode(layers))), layers) << r.name;
    }
  };
  check(fixtures::kParams2Prim);
  check(fixtures::kParams3Prim);
  for (const auto& b : fixtures::kBases) EXPECT_EQ(parse_compact_notation(b.pattern).size(), 16u) << b.name;
}

TEST(CompactNotation, AcceptedSpellings) {
  const std::vector<Primitive> want = parse_compact_notation("2\xC3\x97(A-M)-Mb");
  EXPECT_EQ(parse_compact_notation("2x(A-M)-Mb"), want);
  EXPECT_EQ(parse_compact_notation("2*(A+M)+Mb"), want);
  EXPECT_EQ(parse_compact_notation("2 $\\times$ (A + M) + Mb"), want);
  EXPECT_EQ(want, (std::vector<Primitive>{A, M, A, M, Mb}));
  EXPECT_THROW(parse_compact_notation("2x(A-M"), Error);
  EXPECT_THROW(parse_compact_notation("Q"), Error);
  EXPECT_THROW(parse_compact_notation("A-"), Error);
}

TEST(Sidecar, Fields) {
  const auto p = stack(base_of("AIRAformer-B"), 32);
  const auto j = pattern_sidecar(p, preset("1B-2prim"));
  EXPECT_EQ(j.at("depth"), 32);
  EXPECT_EQ(j.at("counts").at("A"), 14);
  EXPECT_EQ(j.at("counts").at("M"), 18);
  EXPECT_EQ(j.at("origin"), "stacked");
  const auto params = params_model(p, preset("1B-2prim"));
  EXPECT_EQ(j.at("params_non_embed").get<std::uint64_t>(), params.non_embedding);
  EXPECT_EQ(j.at("params_total").get<std::uint64_t>(), params.total);
}

}  // namespace
}  // namespace archsmith
