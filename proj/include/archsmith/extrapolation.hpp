// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0
//
// Scales a small base architecture to a full-depth layer layout.
//
// Stacking repeats the whole base and pads the remainder. Stretching scales
// every contiguous block by target/base length, using largest-remainder
// apportionment so the block lengths sum to the target exactly.
//
// Layouts render in compact notation, e.g. "2×(3A-4×(M-A)-5M)".

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "archsmith/architecture.hpp"
#include "archsmith/error.hpp"
#include "archsmith/scale_model.hpp"

namespace archsmith {

struct Run {
  Primitive primitive = Primitive::Mlp;
  std::size_t length = 1;
  friend bool operator==(const Run&, const Run&) = default;
};

using RunList = std::vector<Run>;

/// Maximal runs of equal primitives.
inline RunList run_length_encode(std::span<const Primitive> layers) {
  RunList runs;
  for (Primitive p : layers) {
    if (!runs.empty() && runs.back().primitive == p) {
      ++runs.back().length;
    } else {
      runs.push_back({p, 1});
    }
  }
  return runs;
}

inline RunList run_length_encode(const Architecture& arch) {
  return run_length_encode(std::span<const Primitive>(arch.layers()));
}

inline std::vector<Primitive> run_length_decode(const RunList& runs) {
  std::vector<Primitive> out;
  for (const auto& r : runs) out.insert(out.end(), r.length, r.primitive);
  return out;
}

enum class PatternOrigin { Stacked, Stretched, Literal };

constexpr std::string_view to_string(PatternOrigin o) {
  switch (o) {
    case PatternOrigin::Stacked: return "stacked";
    case PatternOrigin::Stretched: return "stretched";
    case PatternOrigin::Literal: return "literal";
  }
  return "?";
}

struct LayerPattern {
  RunList runs;
  std::size_t depth = 0;
  PatternOrigin origin = PatternOrigin::Literal;
  Architecture base;
  /// For stacked layouts: number of whole copies of `base`.
  std::size_t copies = 0;

  std::vector<Primitive> layers() const { return run_length_decode(runs); }
  LayerCounts counts() const {
    const auto l = layers();
    return LayerCounts::of_sequence(l);
  }
};

inline LayerPattern literal_pattern(std::vector<Primitive> layers) {
  LayerPattern p;
  p.runs = run_length_encode(layers);
  p.depth = layers.size();
  p.origin = PatternOrigin::Literal;
  p.base = Architecture(std::move(layers));
  return p;
}

/// Largest-remainder apportionment of every run to target_depth layers.
/// Remainder ties go to the earlier run.
inline LayerPattern stretch(const Architecture& base, std::size_t target_depth) {
  const std::size_t n = base.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty base");
  if (target_depth < n) {
    throw Error(ErrorCode::InvalidArgument, "target depth " + std::to_string(target_depth) +
                                                " is below base length " + std::to_string(n));
  }
  RunList runs = run_length_encode(base);
  std::vector<std::size_t> remainders(runs.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::size_t q = runs[i].length * target_depth;
    remainders[i] = q % n;
    runs[i].length = q / n;
    assigned += runs[i].length;
  }
  std::vector<std::size_t> order(runs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t i = 0; assigned < target_depth; ++i, ++assigned) ++runs[order[i]].length;

  LayerPattern p;
  p.runs = std::move(runs);
  p.depth = target_depth;
  p.origin = PatternOrigin::Stretched;
  p.base = base;
  return p;
}

struct StackFill {
  enum class Kind { Prefix, Suffix, Constant } kind = Kind::Prefix;
  Primitive primitive = Primitive::Mlp;

  static StackFill prefix() { return {Kind::Prefix, Primitive::Mlp}; }
  static StackFill suffix() { return {Kind::Suffix, Primitive::Mlp}; }
  static StackFill constant(Primitive p) { return {Kind::Constant, p}; }
};

/// "prefix", "suffix" or "constant:<token or symbol>".
inline StackFill stack_fill_from_string(std::string_view s) {
  const std::string t = to_lower(s);
  if (t == "prefix") return StackFill::prefix();
  if (t == "suffix") return StackFill::suffix();
  if (t.rfind("constant:", 0) == 0) {
    const std::string what = t.substr(9);
    if (what == "a") return StackFill::constant(Primitive::Attention);
    if (what == "m") return StackFill::constant(Primitive::Mlp);
    if (auto p = primitive_from_token(what)) return StackFill::constant(*p);
  }
  throw Error(ErrorCode::InvalidArgument,
              "fill must be prefix, suffix or constant:<primitive>, got '" + std::string(s) + "'");
}

inline LayerPattern stack(const Architecture& base, std::size_t target_depth,
                          StackFill fill = StackFill::prefix()) {
  const std::size_t n = base.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty base");
  if (target_depth < n) {
    throw Error(ErrorCode::InvalidArgument, "target depth " + std::to_string(target_depth) +
                                                " is below base length " + std::to_string(n));
  }
  const std::size_t copies = target_depth / n;
  const std::size_t rest = target_depth % n;
  std::vector<Primitive> layers;
  layers.reserve(target_depth);
  for (std::size_t c = 0; c < copies; ++c) {
    layers.insert(layers.end(), base.layers().begin(), base.layers().end());
  }
  const auto& b = base.layers();
  switch (fill.kind) {
    case StackFill::Kind::Prefix:
      layers.insert(layers.end(), b.begin(), b.begin() + static_cast<std::ptrdiff_t>(rest));
      break;
    case StackFill::Kind::Suffix:
      layers.insert(layers.end(), b.end() - static_cast<std::ptrdiff_t>(rest), b.end());
      break;
    case StackFill::Kind::Constant:
      layers.insert(layers.end(), rest, fill.primitive);
      break;
  }
  LayerPattern p;
  p.runs = run_length_encode(layers);
  p.depth = target_depth;
  p.origin = PatternOrigin::Stacked;
  p.base = base;
  p.copies = copies;
  return p;
}

inline ParamCount params_model(const LayerPattern& pattern, const ScaleConfig& cfg) {
  return params_model(pattern.counts(), cfg);
}

enum class ExtrapolationMode { Stacked, Stretched };

inline ExtrapolationMode extrapolation_mode_from_string(std::string_view s) {
  const std::string t = to_lower(s);
  if (t == "stack" || t == "stacked") return ExtrapolationMode::Stacked;
  if (t == "stretch" || t == "stretched") return ExtrapolationMode::Stretched;
  throw Error(ErrorCode::InvalidArgument, "mode must be 'stack' or 'stretch'");
}

inline LayerPattern extrapolate(const Architecture& base, std::size_t depth, ExtrapolationMode mode,
                                StackFill fill = StackFill::prefix()) {
  return mode == ExtrapolationMode::Stacked ? stack(base, depth, fill) : stretch(base, depth);
}

inline constexpr std::size_t kMaxDepthFactor = 8;

/// Depth in [L, 8L] whose non-embedding parameter count is closest to the
/// target; ties go to the smaller depth. Unreachable when even the best
/// depth misses by more than half the target.
inline std::size_t choose_depth(const Architecture& base, const ScaleConfig& cfg,
                                ExtrapolationMode mode, std::uint64_t target_params,
                                StackFill fill = StackFill::prefix()) {
  const std::size_t n = base.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty base");
  if (target_params == 0) throw Error(ErrorCode::InvalidArgument, "target must be positive");
  std::optional<std::size_t> best;
  std::uint64_t best_err = 0;
  for (std::size_t depth = n; depth <= kMaxDepthFactor * n; ++depth) {
    const std::uint64_t p = params_model(extrapolate(base, depth, mode, fill), cfg).non_embedding;
    const std::uint64_t err = p > target_params ? p - target_params : target_params - p;
    if (!best || err < best_err) {
      best = depth;
      best_err = err;
    }
  }
  if (static_cast<double>(best_err) > 0.5 * static_cast<double>(target_params)) {
    throw Error(ErrorCode::Unreachable, "no depth in [" + std::to_string(n) + ", " +
                                            std::to_string(kMaxDepthFactor * n) +
                                            "] comes within 50% of " + std::to_string(target_params));
  }
  return *best;
}

// --- compact notation --------------------------------------------------------

inline constexpr std::string_view kTimes = "\xC3\x97";  // U+00D7

namespace detail {

inline std::string render_run(const Run& r) {
  return (r.length > 1 ? std::to_string(r.length) : std::string{}) + std::string(symbol_of(r.primitive));
}

/// Greedy repeat compression over runs: at each position take the unit that
/// covers the most runs when repeated (>= 2 times), preferring shorter units.
inline std::string render_runs(const RunList& runs) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < runs.size()) {
    std::size_t best_unit = 0;
    std::size_t best_reps = 1;
    for (std::size_t unit = 2; i + 2 * unit <= runs.size(); ++unit) {
      std::size_t reps = 1;
      while (i + (reps + 1) * unit <= runs.size() &&
             std::equal(runs.begin() + static_cast<std::ptrdiff_t>(i),
                        runs.begin() + static_cast<std::ptrdiff_t>(i + unit),
                        runs.begin() + static_cast<std::ptrdiff_t>(i + reps * unit))) {
        ++reps;
      }
      if (reps >= 2 && unit * reps > best_unit * best_reps) {
        best_unit = unit;
        best_reps = reps;
      }
    }
    if (best_unit) {
      RunList inner(runs.begin() + static_cast<std::ptrdiff_t>(i),
                    runs.begin() + static_cast<std::ptrdiff_t>(i + best_unit));
      parts.push_back(std::to_string(best_reps) + std::string(kTimes) + "(" + render_runs(inner) + ")");
      i += best_unit * best_reps;
    } else {
      parts.push_back(render_run(runs[i]));
      ++i;
    }
  }
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (k) out += '-';
    out += parts[k];
  }
  return out;
}

}  // namespace detail

/// Compact notation of a run list, e.g. "3A-4×(M-A)-5M".
inline std::string compact_notation(const RunList& runs) { return detail::render_runs(runs); }

/// Stacked layouts keep their copy structure: "2×(base)" or "(base)-7M".
inline std::string compact_notation(const LayerPattern& pattern) {
  if (pattern.origin != PatternOrigin::Stacked || pattern.copies == 0) {
    return compact_notation(pattern.runs);
  }
  const std::string base = compact_notation(run_length_encode(pattern.base));
  std::string out = pattern.copies == 1 ? "(" + base + ")"
                                        : std::to_string(pattern.copies) + std::string(kTimes) + "(" + base + ")";
  const auto layers = pattern.layers();
  const std::size_t stacked = pattern.copies * pattern.base.size();
  if (layers.size() > stacked) {
    const std::vector<Primitive> rest(layers.begin() + static_cast<std::ptrdiff_t>(stacked), layers.end());
    out += "-" + compact_notation(run_length_encode(rest));
  }
  return out;
}

/// Parses compact notation. Accepts '-' or '+' as separators, '×', 'x' or
/// '*' for repetition, optional whitespace, and the symbols A, M, Mb.
inline std::vector<Primitive> parse_compact_notation(std::string_view text) {
  std::string s;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text.substr(i, kTimes.size()) == kTimes) {
      s += '*';
      i += kTimes.size() - 1;
    } else if (text[i] == '$' || std::isspace(static_cast<unsigned char>(text[i]))) {
      continue;
    } else if (text[i] == '\\') {  // tolerate LaTeX "\times"
      if (text.substr(i, 6) == "\\times") {
        s += '*';
        i += 5;
      } else {
        throw Error(ErrorCode::InvalidArgument, "unexpected '\\' in pattern");
      }
    } else {
      s += text[i] == 'x' ? '*' : text[i];
    }
  }
  std::size_t pos = 0;
  auto fail = [&](const std::string& what) {
    return Error(ErrorCode::InvalidArgument,
                 "pattern '" + std::string(text) + "': " + what + " at offset " + std::to_string(pos));
  };
  std::function<std::vector<Primitive>()> expr;
  auto term = [&]() -> std::vector<Primitive> {
    std::size_t count = 1;
    bool have_count = false;
    if (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      std::size_t end = pos;
      while (end < s.size() && std::isdigit(static_cast<unsigned char>(s[end]))) ++end;
      count = std::stoul(s.substr(pos, end - pos));
      pos = end;
      have_count = true;
    }
    if (pos < s.size() && s[pos] == '*') {
      if (!have_count) throw fail("repeat without count");
      ++pos;
    }
    std::vector<Primitive> unit;
    if (pos < s.size() && s[pos] == '(') {
      ++pos;
      unit = expr();
      if (pos >= s.size() || s[pos] != ')') throw fail("missing ')'");
      ++pos;
    } else if (s.compare(pos, 2, "Mb") == 0) {
      unit = {Primitive::Mamba};
      pos += 2;
    } else if (pos < s.size() && s[pos] == 'M') {
      unit = {Primitive::Mlp};
      ++pos;
    } else if (pos < s.size() && s[pos] == 'A') {
      unit = {Primitive::Attention};
      ++pos;
    } else {
      throw fail("expected primitive or group");
    }
    std::vector<Primitive> out;
    for (std::size_t c = 0; c < count; ++c) out.insert(out.end(), unit.begin(), unit.end());
    return out;
  };
  expr = [&]() -> std::vector<Primitive> {
    std::vector<Primitive> out = term();
    while (pos < s.size() && (s[pos] == '-' || s[pos] == '+')) {
      ++pos;
      auto more = term();
      out.insert(out.end(), more.begin(), more.end());
    }
    return out;
  };
  auto layers = expr();
  if (pos != s.size()) throw fail("trailing input");
  return layers;
}

/// Exploded token line ("mh-attention mlp ...").
inline std::string exploded_tokens(const LayerPattern& pattern) {
  return format_architecture(Architecture(pattern.layers()));
}

/// Sidecar record {depth, counts, params_non_embed, params_total}.
inline nlohmann::json pattern_sidecar(const LayerPattern& pattern, const ScaleConfig& cfg) {
  const LayerCounts c = pattern.counts();
  const ParamCount p = params_model(c, cfg);
  return {{"depth", pattern.depth},
          {"counts", {{"A", c.attention}, {"M", c.mlp}, {"Mb", c.mamba}}},
          {"params_non_embed", p.non_embedding},
          {"params_total", p.total},
          {"origin", std::string(to_string(pattern.origin))},
          {"base", format_architecture(pattern.base)},
          {"config", cfg.name},
          {"pattern", compact_notation(pattern)}};
}

}  // namespace archsmith
