// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0
//
// Independent hand-rolled accounting used to check the library. Works from
// raw widths only and shares no code with archsmith.

#pragma once

#include <cstdint>
#include <string_view>

namespace archsmith::oracle {

using u128 = unsigned __int128;

struct Scale {
  std::uint64_t d;
  std::uint64_t d_kv;
  std::uint64_t f_tenths;  // MLP expansion factor x10
  std::uint64_t n_s;       // 0 when there is no SSM block
  std::uint64_t s = 8192;
  std::uint64_t batch = 524288;
  std::uint64_t vocab = 128256;
};

/// Widths as printed for each preset, plus the 3B hybrid with d_kv = 1024.
inline Scale scale_for(std::string_view scale, bool hybrid, bool gqa128 = false) {
  if (scale == "350M") return {1536, 512, hybrid ? 14u : 10u, hybrid ? 128u : 0u};
  if (scale == "1B") return {2048, 512, 14, hybrid ? 128u : 0u};
  if (!hybrid) return {3072, 1024, 10, 0};
  return {3072, gqa128 ? 1024u : 768u, 14, 256};
}

inline std::uint64_t round_up(std::uint64_t x, std::uint64_t m) { return (x + m - 1) / m * m; }

inline std::uint64_t h(const Scale& c) { return round_up(8 * c.d * c.f_tenths / 30, 1024); }
inline std::uint64_t d_ssm(const Scale& c) { return round_up(2 * c.d, 256); }

inline std::uint64_t flops_attn(const Scale& c) {
  return 6 * (2 * c.d * c.d + 2 * c.d * c.d_kv) + 12 * c.s * c.d;
}
inline std::uint64_t flops_mlp(const Scale& c) { return 18 * c.d * h(c); }
inline std::uint64_t flops_ssm(const Scale& c) {
  const std::uint64_t ds = d_ssm(c);
  const std::uint64_t heads = ds / 64;
  const std::uint64_t in_proj = 2 * ds + 2 * c.n_s + heads;
  const std::uint64_t conv = ds + 2 * c.n_s;
  return 6 * (c.d * in_proj + conv * 4 + 2 * heads * 64 * c.n_s + ds * c.d);
}

inline u128 c_step(const Scale& c, std::uint64_t a, std::uint64_t m, std::uint64_t mb) {
  const u128 per_token = u128(a) * flops_attn(c) + u128(m) * flops_mlp(c) +
                         (mb ? u128(mb) * flops_ssm(c) : 0);
  return per_token * c.batch;
}

/// 2e19 -> 2 * 10^19.
inline u128 budget(std::string_view text) {
  const std::size_t e_pos = text.find('e');
  u128 v = 0;
  for (std::size_t i = 0; i < e_pos; ++i) v = v * 10 + static_cast<u128>(text[i] - '0');
  int exponent = 0;
  for (std::size_t i = e_pos + 1; i < text.size(); ++i) exponent = exponent * 10 + (text[i] - '0');
  for (; exponent > 0; --exponent) v *= 10;
  return v;
}

inline std::uint64_t steps_nearest(u128 b, u128 c) { return static_cast<std::uint64_t>((2 * b + c) / (2 * c)); }
inline std::uint64_t steps_floor(u128 b, u128 c) { return static_cast<std::uint64_t>(b / c); }

inline std::uint64_t params_attn(const Scale& c) { return 2 * c.d * c.d + 2 * c.d * c.d_kv; }
inline std::uint64_t params_mlp(const Scale& c) { return 3 * c.d * h(c); }
inline std::uint64_t params_ssm(const Scale& c) {
  const std::uint64_t ds = d_ssm(c);
  return c.d * (2 * ds + 2 * c.n_s + ds / 64) + (ds + 2 * c.n_s) * 4 + ds * c.d;
}

struct Params {
  std::uint64_t non_embedding;
  std::uint64_t total;
};
inline Params params(const Scale& c, std::uint64_t a, std::uint64_t m, std::uint64_t mb) {
  const std::uint64_t ne = a * params_attn(c) + m * params_mlp(c) + (mb ? mb * params_ssm(c) : 0);
  return {ne, ne + c.vocab * c.d};
}

}  // namespace archsmith::oracle
