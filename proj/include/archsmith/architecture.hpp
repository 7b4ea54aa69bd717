// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0
//
// Primitives, fixed-length architecture strings and search-space arithmetic.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "archsmith/error.hpp"
#include "archsmith/random.hpp"

namespace archsmith {

/// Underlying values define the fixed order MLP < ATTENTION < MAMBA that
/// every tie-break in the library uses.
enum class Primitive : std::uint8_t { Mlp = 0, Attention = 1, Mamba = 2 };

inline constexpr std::array<Primitive, 3> kAllPrimitives = {
    Primitive::Mlp, Primitive::Attention, Primitive::Mamba};

inline constexpr std::size_t kDefaultLength = 16;

constexpr std::size_t index_of(Primitive p) { return static_cast<std::size_t>(p); }

/// Canonical submission token.
constexpr std::string_view token_of(Primitive p) {
  switch (p) {
    case Primitive::Mlp: return "mlp";
    case Primitive::Attention: return "mh-attention";
    case Primitive::Mamba: return "mamba2";
  }
  return "?";
}

/// Short symbol used in compact layer notation: M, A, Mb.
constexpr std::string_view symbol_of(Primitive p) {
  switch (p) {
    case Primitive::Mlp: return "M";
    case Primitive::Attention: return "A";
    case Primitive::Mamba: return "Mb";
  }
  return "?";
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Case-insensitive token lookup. Accepts the canonical tokens plus the
/// aliases "mamba" and "mb" (never emitted).
inline std::optional<Primitive> primitive_from_token(std::string_view token) {
  const std::string t = to_lower(token);
  if (t == "mlp") return Primitive::Mlp;
  if (t == "mh-attention") return Primitive::Attention;
  if (t == "mamba2" || t == "mamba" || t == "mb") return Primitive::Mamba;
  return std::nullopt;
}

class PrimitivePool {
 public:
  PrimitivePool() = default;

  /// Throws InvalidArgument on an empty or duplicated member list. Members are
  /// stored in the fixed primitive order regardless of input order.
  explicit PrimitivePool(std::span<const Primitive> members) {
    std::array<bool, 3> seen{};
    for (Primitive p : members) {
      if (seen[index_of(p)]) {
        throw Error(ErrorCode::InvalidArgument,
                    "duplicate primitive '" + std::string(token_of(p)) + "' in pool");
      }
      seen[index_of(p)] = true;
    }
    for (Primitive p : kAllPrimitives) {
      if (seen[index_of(p)]) members_.push_back(p);
    }
    if (members_.empty()) throw Error(ErrorCode::InvalidArgument, "empty primitive pool");
  }
  PrimitivePool(std::initializer_list<Primitive> members)
      : PrimitivePool(std::span<const Primitive>(members.begin(), members.size())) {}

  static PrimitivePool two() { return {Primitive::Mlp, Primitive::Attention}; }
  static PrimitivePool three() {
    return {Primitive::Mlp, Primitive::Attention, Primitive::Mamba};
  }

  const std::vector<Primitive>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool contains(Primitive p) const {
    return std::find(members_.begin(), members_.end(), p) != members_.end();
  }
  /// Position of `p` inside the pool; `p` must be a member.
  std::size_t slot(Primitive p) const {
    return static_cast<std::size_t>(
        std::find(members_.begin(), members_.end(), p) - members_.begin());
  }

  friend bool operator==(const PrimitivePool&, const PrimitivePool&) = default;

 private:
  std::vector<Primitive> members_;
};

/// A fixed-length sequence of primitives.
class Architecture {
 public:
  Architecture() = default;
  explicit Architecture(std::vector<Primitive> layers) : layers_(std::move(layers)) {}
  Architecture(std::initializer_list<Primitive> layers) : layers_(layers) {}

  const std::vector<Primitive>& layers() const { return layers_; }
  std::size_t size() const { return layers_.size(); }
  Primitive operator[](std::size_t i) const { return layers_[i]; }

  std::size_t count(Primitive p) const {
    return static_cast<std::size_t>(std::count(layers_.begin(), layers_.end(), p));
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
  friend auto operator<=>(const Architecture&, const Architecture&) = default;

 private:
  std::vector<Primitive> layers_;
};

/// Whitespace split (spaces, tabs, CR and LF all separate tokens).
inline std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) tokens.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

/// Parses a submission token string. Unknown tokens are reported before
/// length problems, and length before pool membership.
inline Architecture parse_architecture(std::string_view text, const PrimitivePool& pool,
                                       std::size_t length = kDefaultLength) {
  const auto tokens = split_tokens(text);
  std::vector<Primitive> layers;
  layers.reserve(tokens.size());
  for (const auto& tok : tokens) {
    auto p = primitive_from_token(tok);
    if (!p) throw Error(ErrorCode::UnknownToken, "unknown token '" + tok + "'");
    layers.push_back(*p);
  }
  if (layers.size() != length) {
    throw Error(ErrorCode::WrongLength, "expected " + std::to_string(length) +
                                            " primitives, got " +
                                            std::to_string(layers.size()));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!pool.contains(layers[i])) {
      throw Error(ErrorCode::OutOfPool, "token '" + std::string(token_of(layers[i])) +
                                            "' at position " + std::to_string(i) +
                                            " is not in this task's pool");
    }
  }
  return Architecture(std::move(layers));
}

inline std::string format_architecture(const Architecture& arch) {
  std::string out;
  for (std::size_t i = 0; i < arch.size(); ++i) {
    if (i) out += ' ';
    out += token_of(arch[i]);
  }
  return out;
}

/// Concatenated one-hot blocks, one per layer, block order = pool order.
inline std::vector<double> encode_onehot(const Architecture& arch, const PrimitivePool& pool) {
  std::vector<double> v(arch.size() * pool.size(), 0.0);
  for (std::size_t i = 0; i < arch.size(); ++i) {
    v[i * pool.size() + pool.slot(arch[i])] = 1.0;
  }
  return v;
}

/// |pool|^length; throws Overflow when it does not fit in 64 bits.
inline std::uint64_t search_space_size(std::size_t pool_size, std::size_t length) {
  if (pool_size == 0 || length == 0) {
    throw Error(ErrorCode::InvalidArgument, "pool size and length must be >= 1");
  }
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < length; ++i) {
    if (__builtin_mul_overflow(n, static_cast<std::uint64_t>(pool_size), &n)) {
      throw Error(ErrorCode::Overflow, std::to_string(pool_size) + "^" +
                                           std::to_string(length) +
                                           " does not fit in 64 bits");
    }
  }
  return n;
}

inline std::uint64_t search_space_size(const PrimitivePool& pool, std::size_t length) {
  return search_space_size(pool.size(), length);
}

inline std::size_t hamming_distance(const Architecture& a, const Architecture& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "hamming distance needs equal lengths");
  }
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

inline Architecture random_architecture(const PrimitivePool& pool, std::size_t length,
                                        Rng& rng) {
  std::vector<Primitive> layers(length);
  for (auto& p : layers) p = pool.members()[uniform_below(rng, pool.size())];
  return Architecture(std::move(layers));
}

/// Rewrites `edits` distinct positions, each to a different pool member.
/// Single-member pools return the input unchanged.
inline Architecture mutate(const Architecture& arch, const PrimitivePool& pool,
                           std::size_t edits, Rng& rng) {
  if (edits < 1 || edits > arch.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "edits must be in [1, " + std::to_string(arch.size()) + "]");
  }
  std::vector<Primitive> layers = arch.layers();
  if (pool.size() < 2) return Architecture(std::move(layers));

  // Partial Fisher-Yates picks the positions.
  std::vector<std::size_t> pos(layers.size());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i;
  for (std::size_t i = 0; i < edits; ++i) {
    std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, pos.size() - i));
    std::swap(pos[i], pos[j]);
    const std::size_t at = pos[i];
    std::vector<Primitive> others;
    for (Primitive p : pool.members()) {
      if (p != layers[at]) others.push_back(p);
    }
    layers[at] = others[uniform_below(rng, others.size())];
  }
  return Architecture(std::move(layers));
}

inline Architecture mutate(const Architecture& arch, const PrimitivePool& pool,
                           std::size_t edits, std::uint64_t seed) {
  Rng rng(seed);
  return mutate(arch, pool, edits, rng);
}

}  // namespace archsmith
