// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0
//
// Exact FLOP and parameter accounting for MLP, attention and Mamba-2 blocks.
//
// All arithmetic is integral. FLOP budgets such as 4e20 exceed 64 bits, so
// budgets and per-step totals are carried as unsigned 128-bit integers.

#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "archsmith/architecture.hpp"
#include "archsmith/error.hpp"

namespace archsmith {

using u128 = unsigned __int128;

inline std::string to_string(u128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return s;
}

/// Parses an exact non-negative integer written in decimal or scientific
/// notation ("524288", "2e19", "2.5E20"). Non-integral values are rejected.
inline u128 parse_flops(std::string_view text) {
  auto fail = [&] {
    return Error(ErrorCode::InvalidArgument, "not an exact integer FLOP count: '" +
                                                 std::string(text) + "'");
  };
  std::string digits;
  long frac_digits = 0;
  std::size_t i = 0;
  bool seen_dot = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits += c;
      if (seen_dot) ++frac_digits;
    } else if (c == '.' && !seen_dot) {
      seen_dot = true;
    } else {
      break;
    }
  }
  if (digits.empty()) throw fail();
  long exponent = 0;
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') throw fail();
    ++i;
    bool neg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) neg = text[i++] == '-';
    if (i == text.size()) throw fail();
    for (; i < text.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(text[i]))) throw fail();
      exponent = exponent * 10 + (text[i] - '0');
      if (exponent > 60) throw fail();
    }
    if (neg) exponent = -exponent;
  }
  long shift = exponent - frac_digits;
  while (shift < 0) {
    if (digits.empty() || digits.back() != '0') throw fail();
    digits.pop_back();
    ++shift;
  }
  u128 v = 0;
  const u128 limit = ~static_cast<u128>(0) / 10;
  for (char c : digits) {
    if (v > limit) throw Error(ErrorCode::Overflow, std::string(text));
    v = v * 10 + static_cast<unsigned>(c - '0');
  }
  for (long k = 0; k < shift; ++k) {
    if (v > limit) throw Error(ErrorCode::Overflow, std::string(text));
    v *= 10;
  }
  return v;
}

namespace detail {
inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw Error(ErrorCode::Overflow, "multiplication");
  return r;
}
inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw Error(ErrorCode::Overflow, "addition");
  return r;
}
inline u128 checked_mul(u128 a, u128 b) {
  u128 r;
  if (__builtin_mul_overflow(a, b, &r)) throw Error(ErrorCode::Overflow, "multiplication");
  return r;
}
}  // namespace detail

/// Smallest multiple of m that is >= x.
constexpr std::uint64_t multiple_of_ceil(std::uint64_t x, std::uint64_t m) {
  return ((x + m - 1) / m) * m;
}

/// SwiGLU hidden width: multiple_of(floor(2/3 * 4d * f), 1024). The factor is
/// taken to six decimals so the floor is computed exactly.
inline std::uint64_t mlp_hidden_dim(std::uint64_t d, double f) {
  if (d == 0 || !(f > 0)) throw Error(ErrorCode::InvalidArgument, "d and f must be positive");
  const auto f_micro = static_cast<std::uint64_t>(std::llround(f * 1e6));
  const u128 num = static_cast<u128>(8) * d * f_micro;
  const u128 den = static_cast<u128>(3) * 1000000;
  return multiple_of_ceil(static_cast<std::uint64_t>(num / den), 1024);
}

/// Mamba-2 inner width: multiple_of(floor(2/3 * 3d), 256).
constexpr std::uint64_t ssm_hidden_dim(std::uint64_t d) {
  return multiple_of_ceil((2 * 3 * d) / 3, 256);
}

struct SsmConfig {
  std::uint64_t n_s = 128;
  std::uint64_t k = 4;
  std::uint64_t n_g = 1;
  std::uint64_t d_h_ssm = 64;
};

/// Widths derived from an SsmConfig at model width d.
struct SsmDims {
  std::uint64_t d_ssm;
  std::uint64_t n_ssm;
  std::uint64_t d_in_proj;
  std::uint64_t d_conv;
};

inline SsmDims derive_ssm_dims(std::uint64_t d, const SsmConfig& ssm) {
  SsmDims out{};
  out.d_ssm = ssm_hidden_dim(d);
  if (ssm.d_h_ssm == 0 || out.d_ssm % ssm.d_h_ssm != 0) {
    throw Error(ErrorCode::InvalidArgument,
                "d_ssm=" + std::to_string(out.d_ssm) + " is not divisible by d_h_ssm=" +
                    std::to_string(ssm.d_h_ssm));
  }
  out.n_ssm = out.d_ssm / ssm.d_h_ssm;
  out.d_in_proj = 2 * out.d_ssm + 2 * ssm.n_g * ssm.n_s + out.n_ssm;
  out.d_conv = out.d_ssm + 2 * ssm.n_g * ssm.n_s;
  return out;
}

struct ScaleConfig {
  std::string name;
  std::uint64_t d = 0;
  std::uint64_t n_h = 0;
  std::uint64_t d_h = 0;
  std::uint64_t n_kv = 0;
  std::uint64_t s = 0;
  double f = 1.0;
  std::uint64_t vocab = 128256;
  std::uint64_t tokens_per_step = 524288;
  std::optional<SsmConfig> ssm;

  std::uint64_t d_kv() const { return n_kv * d_h; }
  std::uint64_t h() const { return mlp_hidden_dim(d, f); }

  void validate() const {
    auto bad = [](const std::string& what) { return Error(ErrorCode::InvalidArgument, what); };
    if (d == 0 || n_h == 0 || d_h == 0 || n_kv == 0) throw bad("widths and head counts must be positive");
    if (d != n_h * d_h) throw bad("d must equal n_h * d_h");
    if (n_kv > n_h) throw bad("n_kv must not exceed n_h");
    if (s == 0 || tokens_per_step == 0) throw bad("s and tokens_per_step must be positive");
    if (!(f > 0)) throw bad("f must be positive");
    if (ssm) {
      if (ssm->n_s == 0 || ssm->k == 0 || ssm->n_g == 0) throw bad("ssm dims must be positive");
      (void)derive_ssm_dims(d, *ssm);
    }
  }
};

inline void to_json(nlohmann::json& j, const ScaleConfig& c) {
  j = nlohmann::json{{"d", c.d},         {"n_h", c.n_h}, {"d_h", c.d_h},
                     {"n_kv", c.n_kv},   {"s", c.s},     {"f", c.f},
                     {"vocab", c.vocab}, {"tokens_per_step", c.tokens_per_step}};
  if (!c.name.empty()) j["name"] = c.name;
  if (c.ssm) {
    j["ssm"] = {{"n_s", c.ssm->n_s}, {"k", c.ssm->k}, {"n_g", c.ssm->n_g},
                {"d_h_ssm", c.ssm->d_h_ssm}};
  }
}

inline ScaleConfig scale_config_from_json(const nlohmann::json& j) {
  auto field = [&](const nlohmann::json& obj, const char* key) -> const nlohmann::json& {
    if (!obj.contains(key)) throw Error(ErrorCode::InvalidField, std::string(key) + ": missing");
    return obj.at(key);
  };
  auto uint_field = [&](const nlohmann::json& obj, const char* key) {
    const auto& v = field(obj, key);
    if (!v.is_number_unsigned()) {
      throw Error(ErrorCode::InvalidField, std::string(key) + ": expected positive integer");
    }
    return v.get<std::uint64_t>();
  };
  ScaleConfig c;
  c.name = j.value("name", std::string{});
  c.d = uint_field(j, "d");
  c.n_h = uint_field(j, "n_h");
  c.d_h = uint_field(j, "d_h");
  c.n_kv = uint_field(j, "n_kv");
  c.s = uint_field(j, "s");
  if (!field(j, "f").is_number()) throw Error(ErrorCode::InvalidField, "f: expected number");
  c.f = j.at("f").get<double>();
  c.vocab = uint_field(j, "vocab");
  c.tokens_per_step = uint_field(j, "tokens_per_step");
  if (j.contains("ssm") && !j.at("ssm").is_null()) {
    const auto& s = j.at("ssm");
    c.ssm = SsmConfig{uint_field(s, "n_s"), uint_field(s, "k"), uint_field(s, "n_g"),
                      uint_field(s, "d_h_ssm")};
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidField, e.detail());
  }
  return c;
}

/// Built-in model scales. The "-2prim" presets carry no SSM block.
/// "3B-3prim-gqa128" is the 3B hybrid scale with the 2-primitive 3B attention
/// geometry (d_kv = 1024), which is what the published 3B hybrid step and
/// parameter tables were computed with.
inline std::vector<std::string> preset_names() {
  return {"350M-2prim", "1B-2prim", "3B-2prim", "350M-3prim",
          "1B-3prim",   "3B-3prim", "3B-3prim-gqa128"};
}

inline std::optional<ScaleConfig> find_preset(std::string_view name) {
  auto make = [&](std::uint64_t d, std::uint64_t n_h, std::uint64_t d_h, double f,
                  std::optional<SsmConfig> ssm) {
    ScaleConfig c;
    c.name = std::string(name);
    c.d = d;
    c.n_h = n_h;
    c.d_h = d_h;
    c.n_kv = 8;
    c.s = 8192;
    c.f = f;
    c.vocab = 128256;
    c.tokens_per_step = 524288;
    c.ssm = ssm;
    return c;
  };
  const SsmConfig ssm128{128, 4, 1, 64};
  const SsmConfig ssm256{256, 4, 1, 64};
  if (name == "350M-2prim") return make(1536, 24, 64, 1.0, std::nullopt);
  if (name == "1B-2prim") return make(2048, 32, 64, 1.4, std::nullopt);
  if (name == "3B-2prim") return make(3072, 24, 128, 1.0, std::nullopt);
  if (name == "350M-3prim") return make(1536, 24, 64, 1.4, ssm128);
  if (name == "1B-3prim") return make(2048, 32, 64, 1.4, ssm128);
  if (name == "3B-3prim") return make(3072, 32, 96, 1.4, ssm256);
  if (name == "3B-3prim-gqa128") return make(3072, 24, 128, 1.4, ssm256);
  return std::nullopt;
}

/// Resolves a preset name, or else reads a scale-config JSON file.
inline ScaleConfig load_scale_config(const std::string& name_or_path) {
  if (auto p = find_preset(name_or_path)) return *p;
  std::ifstream in(name_or_path);
  if (!in) {
    throw Error(ErrorCode::InvalidArgument,
                "'" + name_or_path + "' is neither a preset nor a readable config file");
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidField, name_or_path + ": " + e.what());
  }
  return scale_config_from_json(j);
}

struct LayerCounts {
  std::uint64_t attention = 0;
  std::uint64_t mlp = 0;
  std::uint64_t mamba = 0;

  std::uint64_t of(Primitive p) const {
    switch (p) {
      case Primitive::Mlp: return mlp;
      case Primitive::Attention: return attention;
      case Primitive::Mamba: return mamba;
    }
    return 0;
  }
  std::uint64_t total() const { return attention + mlp + mamba; }

  static LayerCounts of_sequence(std::span<const Primitive> layers) {
    LayerCounts c;
    for (Primitive p : layers) {
      switch (p) {
        case Primitive::Mlp: ++c.mlp; break;
        case Primitive::Attention: ++c.attention; break;
        case Primitive::Mamba: ++c.mamba; break;
      }
    }
    return c;
  }

  friend bool operator==(const LayerCounts&, const LayerCounts&) = default;
};

/// Parses "A=10,M=19,Mb=16" (keys case-insensitive; "SSM" accepted for Mb).
inline LayerCounts parse_layer_counts(std::string_view text) {
  LayerCounts c;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t comma = text.find(',', i);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string_view item = text.substr(i, comma - i);
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidArgument, "expected KEY=COUNT, got '" + std::string(item) + "'");
    }
    const std::string key = to_lower(item.substr(0, eq));
    const std::string val(item.substr(eq + 1));
    std::uint64_t n = 0;
    try {
      std::size_t used = 0;
      if (val.empty() || !std::isdigit(static_cast<unsigned char>(val.front()))) throw std::invalid_argument(val);
      n = std::stoull(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "bad layer count '" + val + "'");
    }
    if (key == "a" || key == "attn" || key == "attention") c.attention = n;
    else if (key == "m" || key == "mlp") c.mlp = n;
    else if (key == "mb" || key == "ssm" || key == "mamba") c.mamba = n;
    else throw Error(ErrorCode::InvalidArgument, "unknown layer kind '" + key + "'");
    i = comma + 1;
  }
  return c;
}

// --- per-token per-layer training FLOPs -------------------------------------

/// 6(2d^2 + 2d*d_kv) + 12sd
inline std::uint64_t flops_attention(const ScaleConfig& c) {
  using detail::checked_add, detail::checked_mul;
  const auto proj = checked_add(checked_mul(2, checked_mul(c.d, c.d)),
                                checked_mul(2, checked_mul(c.d, c.d_kv())));
  return checked_add(checked_mul(6, proj), checked_mul(12, checked_mul(c.s, c.d)));
}

/// 18dh
inline std::uint64_t flops_mlp(const ScaleConfig& c) {
  return detail::checked_mul(18, detail::checked_mul(c.d, c.h()));
}

/// 6(d*d_in_proj + d_conv*k + 2*n_ssm*d_h_ssm*n_s + d_ssm*d)
inline std::uint64_t flops_ssm(const ScaleConfig& c, const SsmConfig& ssm) {
  using detail::checked_add, detail::checked_mul;
  const SsmDims dims = derive_ssm_dims(c.d, ssm);
  std::uint64_t sum = checked_mul(c.d, dims.d_in_proj);
  sum = checked_add(sum, checked_mul(dims.d_conv, ssm.k));
  sum = checked_add(sum, checked_mul(2, checked_mul(dims.n_ssm, checked_mul(ssm.d_h_ssm, ssm.n_s))));
  sum = checked_add(sum, checked_mul(dims.d_ssm, c.d));
  return checked_mul(6, sum);
}

struct PerLayerFlops {
  std::uint64_t attention = 0;
  std::uint64_t mlp = 0;
  std::uint64_t mamba = 0;
};

/// The SSM entry is zero when the config has no SSM block.
inline PerLayerFlops per_layer_flops(const ScaleConfig& c) {
  PerLayerFlops f;
  f.attention = flops_attention(c);
  f.mlp = flops_mlp(c);
  if (c.ssm) f.mamba = flops_ssm(c, *c.ssm);
  return f;
}

/// C_step = (sum of L_p * F_p) * B
inline u128 flops_per_step(const LayerCounts& counts, const PerLayerFlops& per_layer,
                           std::uint64_t tokens_per_step) {
  using detail::checked_mul;
  auto term = [](std::uint64_t layers, std::uint64_t flops) {
    return checked_mul(static_cast<u128>(layers), static_cast<u128>(flops));
  };
  const u128 per_token = term(counts.attention, per_layer.attention) +
                         term(counts.mlp, per_layer.mlp) + term(counts.mamba, per_layer.mamba);
  return checked_mul(per_token, static_cast<u128>(tokens_per_step));
}

inline u128 flops_per_step(const LayerCounts& counts, const ScaleConfig& c) {
  if (counts.mamba > 0 && !c.ssm) {
    throw Error(ErrorCode::InvalidArgument,
                "config '" + c.name + "' has no ssm block but Mamba layers were requested");
  }
  return flops_per_step(counts, per_layer_flops(c), c.tokens_per_step);
}

enum class StepRounding { Nearest, Floor };

/// budget / c_step, rounded half-up by default.
inline std::uint64_t steps_for_budget(u128 budget, u128 c_step,
                                      StepRounding rounding = StepRounding::Nearest) {
  if (budget == 0 || c_step == 0) {
    throw Error(ErrorCode::InvalidArgument, "budget and c_step must be positive");
  }
  u128 q = budget / c_step;
  const u128 r = budget % c_step;
  if (rounding == StepRounding::Nearest && 2 * r >= c_step) ++q;
  if (q > UINT64_MAX) throw Error(ErrorCode::Overflow, "step count");
  return static_cast<std::uint64_t>(q);
}

// --- parameters --------------------------------------------------------------

inline std::uint64_t params_attention(const ScaleConfig& c) {
  return 2 * c.d * c.d + 2 * c.d * c.d_kv();
}
inline std::uint64_t params_mlp(const ScaleConfig& c) { return 3 * c.d * c.h(); }
/// In/out projections and conv weights only; dt, A, D and norm vectors are
/// not counted.
inline std::uint64_t params_ssm(const ScaleConfig& c, const SsmConfig& ssm) {
  const SsmDims dims = derive_ssm_dims(c.d, ssm);
  return c.d * dims.d_in_proj + dims.d_conv * ssm.k + dims.d_ssm * c.d;
}

struct ParamCount {
  std::uint64_t non_embedding = 0;
  std::uint64_t total = 0;
  friend bool operator==(const ParamCount&, const ParamCount&) = default;
};

/// Tied input/output embedding counted once.
inline ParamCount params_model(const LayerCounts& counts, const ScaleConfig& c) {
  using detail::checked_add, detail::checked_mul;
  std::uint64_t n = checked_add(checked_mul(counts.attention, params_attention(c)),
                                checked_mul(counts.mlp, params_mlp(c)));
  if (counts.mamba > 0) {
    if (!c.ssm) {
      throw Error(ErrorCode::InvalidArgument,
                  "config '" + c.name + "' has no ssm block but Mamba layers were requested");
    }
    n = checked_add(n, checked_mul(counts.mamba, params_ssm(c, *c.ssm)));
  }
  return {n, checked_add(n, checked_mul(c.vocab, c.d))};
}

// --- latency -----------------------------------------------------------------

using LatencyTable = std::map<Primitive, double>;

inline double block_latency_total(const LayerCounts& counts, const LatencyTable& table) {
  double total = 0.0;
  for (Primitive p : kAllPrimitives) {
    const auto n = counts.of(p);
    if (n == 0) continue;
    auto it = table.find(p);
    if (it == table.end()) {
      throw Error(ErrorCode::MissingLatency,
                  "no latency entry for '" + std::string(symbol_of(p)) + "'");
    }
    if (it->second < 0) throw Error(ErrorCode::InvalidArgument, "negative latency");
    total += static_cast<double>(n) * it->second;
  }
  return total;
}

/// Reads {"A": ms, "M": ms, "Mb": ms}; canonical tokens are accepted as keys.
inline LatencyTable latency_table_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidField, "latency table: expected object");
  LatencyTable t;
  for (const auto& [key, val] : j.items()) {
    std::optional<Primitive> p = primitive_from_token(key);
    const std::string k = to_lower(key);
    if (k == "a" || k == "attention") p = Primitive::Attention;
    if (k == "m") p = Primitive::Mlp;
    if (!p) throw Error(ErrorCode::InvalidField, "latency table: unknown primitive '" + key + "'");
    if (!val.is_number()) throw Error(ErrorCode::InvalidField, "latency table: '" + key + "' not a number");
    t[*p] = val.get<double>();
  }
  return t;
}

}  // namespace archsmith
