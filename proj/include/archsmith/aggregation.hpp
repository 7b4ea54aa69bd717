// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0
//
// Collapses pools of scored architectures into base patterns.
//
//   N0  member of the top k-means cluster nearest to the cluster centroid
//   N1  unweighted layer-wise mode over the selected members
//   N2  layer-wise mode weighted by exp(-lambda * rank), rank by test fitness
//
// Multi-dataset aggregation takes the top-n of every dataset with
// exponentially decaying rank weights, normalizes each dataset to unit mass
// and pools them with equal dataset weight.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "archsmith/architecture.hpp"
#include "archsmith/error.hpp"
#include "archsmith/fitness.hpp"
#include "archsmith/random.hpp"

namespace archsmith {

/// One line of a pool file.
struct PoolEntry {
  FitnessRecord record;
  std::string agent;
  std::string dataset;
};

struct RankedPool {
  std::string dataset_id;
  FitnessDirection direction = FitnessDirection::Maximize;
  /// Best test fitness first; ties by architecture text ascending.
  std::vector<FitnessRecord> records;

  std::size_t size() const { return records.size(); }

  /// The first `n` records, as a pool of its own.
  RankedPool top(std::size_t n) const {
    RankedPool out{dataset_id, direction, {}};
    out.records.assign(records.begin(),
                       records.begin() + static_cast<std::ptrdiff_t>(std::min(n, records.size())));
    return out;
  }
};

inline RankedPool rank_architectures(std::vector<FitnessRecord> records, FitnessDirection direction,
                                     std::string dataset_id = {}) {
  if (records.empty()) throw Error(ErrorCode::Empty, "no records to rank");
  // Dedup keeps the best test score; a tie falls back to val, then seed, so
  // the survivor does not depend on input order.
  std::map<Architecture, FitnessRecord> best;
  for (auto& r : records) {
    auto it = best.find(r.architecture);
    if (it == best.end()) {
      best.emplace(r.architecture, std::move(r));
      continue;
    }
    const FitnessRecord& cur = it->second;
    const bool better =
        strictly_better(r.test_fitness, cur.test_fitness, direction) ||
        (r.test_fitness == cur.test_fitness &&
         (strictly_better(r.val_fitness, cur.val_fitness, direction) ||
          (r.val_fitness == cur.val_fitness && r.seed < cur.seed)));
    if (better) it->second = std::move(r);
  }
  RankedPool pool{std::move(dataset_id), direction, {}};
  std::vector<std::pair<std::string, FitnessRecord>> keyed;
  keyed.reserve(best.size());
  for (auto& [arch, rec] : best) keyed.emplace_back(format_architecture(arch), std::move(rec));
  std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
    if (a.second.test_fitness != b.second.test_fitness) {
      return strictly_better(a.second.test_fitness, b.second.test_fitness, direction);
    }
    return a.first < b.first;
  });
  for (auto& [_, rec] : keyed) pool.records.push_back(std::move(rec));
  return pool;
}

// --- k-means -----------------------------------------------------------------

struct ClusterAssignment {
  std::size_t k = 0;
  std::vector<std::size_t> labels;
  std::vector<std::vector<double>> centroids;
  std::size_t top_cluster = 0;
  /// Inertia after every assignment step.
  std::vector<double> inertia_trace;
  std::size_t iterations = 0;
  bool converged = false;

  std::vector<std::size_t> members_of(std::size_t cluster) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cluster) out.push_back(i);
    }
    return out;
  }
};

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// Smallest primitive pool covering every record.
inline PrimitivePool covering_pool(const RankedPool& pool) {
  std::vector<Primitive> used;
  for (Primitive p : kAllPrimitives) {
    for (const auto& r : pool.records) {
      if (r.architecture.count(p)) {
        used.push_back(p);
        break;
      }
    }
  }
  if (used.empty()) used.push_back(Primitive::Mlp);
  return PrimitivePool(used);
}

/// Lloyd iterations on one-hot encodings with k-means++ seeding. Stops when
/// assignments are stable or after `max_iterations`.
inline ClusterAssignment kmeans_cluster(const RankedPool& pool, std::size_t k, std::uint64_t seed,
                                        std::optional<PrimitivePool> encoding_pool = std::nullopt,
                                        std::size_t max_iterations = 100) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (pool.size() < k) {
    throw Error(ErrorCode::TooFewPoints, std::to_string(pool.size()) + " points for k=" +
                                             std::to_string(k));
  }
  const PrimitivePool enc = encoding_pool ? *encoding_pool : covering_pool(pool);
  const std::size_t n = pool.size();
  std::vector<std::vector<double>> x;
  x.reserve(n);
  for (const auto& r : pool.records) {
    if (r.architecture.size() != pool.records.front().architecture.size()) {
      throw Error(ErrorCode::LengthMismatch, "pool mixes architecture lengths");
    }
    x.push_back(encode_onehot(r.architecture, enc));
  }

  Rng rng(seed);
  ClusterAssignment out;
  out.k = k;
  out.centroids.push_back(x[uniform_below(rng, n)]);
  std::vector<double> d2(n);
  while (out.centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : out.centroids) best = std::min(best, squared_distance(x[i], c));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = uniform_unit(rng) * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] > 0.0 && target < d2[i]) {
          pick = i;
          break;
        }
        target -= d2[i];
      }
      while (d2[pick] == 0.0) --pick;  // never reuse an existing centre
    } else {
      pick = uniform_below(rng, n);
    }
    out.centroids.push_back(x[pick]);
  }

  auto assign = [&](std::vector<std::size_t>& labels) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best_c = 0;
      double best_d = squared_distance(x[i], out.centroids[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = squared_distance(x[i], out.centroids[c]);
        if (d < best_d) {
          best_d = d;
          best_c = c;
        }
      }
      labels[i] = best_c;
      inertia += best_d;
    }
    return inertia;
  };

  out.labels.assign(n, 0);
  out.inertia_trace.push_back(assign(out.labels));
  std::vector<std::size_t> next(n);
  while (out.iterations < max_iterations) {
    ++out.iterations;
    // Update step; an empty cluster keeps its previous centre.
    const std::size_t dim = x.front().size();
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[out.labels[i]];
      for (std::size_t j = 0; j < dim; ++j) sums[out.labels[i]][j] += x[i][j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (!counts[c]) continue;
      for (std::size_t j = 0; j < dim; ++j) sums[c][j] /= static_cast<double>(counts[c]);
      out.centroids[c] = std::move(sums[c]);
    }
    out.inertia_trace.push_back(assign(next));
    if (next == out.labels) {
      out.converged = true;
      break;
    }
    out.labels.swap(next);
  }

  // Top cluster: best mean test fitness, lowest index on ties.
  std::optional<std::size_t> top;
  double top_mean = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    double sum = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (out.labels[i] == c) {
        sum += pool.records[i].test_fitness;
        ++cnt;
      }
    }
    if (!cnt) continue;
    const double mean = sum / static_cast<double>(cnt);
    if (!top || strictly_better(mean, top_mean, pool.direction)) {
      top = c;
      top_mean = mean;
    }
  }
  out.top_cluster = *top;
  return out;
}

// --- aggregators -------------------------------------------------------------

/// Member of the top cluster nearest its centroid; ties by better test
/// fitness, then architecture text.
inline Architecture aggregate_n0(const ClusterAssignment& assign, const RankedPool& pool,
                                 std::optional<PrimitivePool> encoding_pool = std::nullopt) {
  const PrimitivePool enc = encoding_pool ? *encoding_pool : covering_pool(pool);
  const auto members = assign.members_of(assign.top_cluster);
  if (members.empty()) throw Error(ErrorCode::Empty, "top cluster is empty");
  const auto& centroid = assign.centroids[assign.top_cluster];
  std::size_t best = members.front();
  double best_d = squared_distance(encode_onehot(pool.records[best].architecture, enc), centroid);
  for (std::size_t idx : members) {
    const auto& r = pool.records[idx];
    const double d = squared_distance(encode_onehot(r.architecture, enc), centroid);
    const auto& b = pool.records[best];
    if (d < best_d ||
        (d == best_d && (strictly_better(r.test_fitness, b.test_fitness, pool.direction) ||
                         (r.test_fitness == b.test_fitness &&
                          format_architecture(r.architecture) < format_architecture(b.architecture))))) {
      best = idx;
      best_d = d;
    }
  }
  return pool.records[best].architecture;
}

namespace detail {
inline bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}
}  // namespace detail

/// Per position, the primitive with the largest (weighted) count. Ties break
/// by the fixed order M < A < Mb.
inline Architecture aggregate_layerwise_mode(const std::vector<Architecture>& members,
                                             const std::vector<double>* weights = nullptr) {
  if (members.empty()) throw Error(ErrorCode::Empty, "no members to aggregate");
  if (weights && weights->size() != members.size()) {
    throw Error(ErrorCode::InvalidArgument, "one weight per member required");
  }
  const std::size_t len = members.front().size();
  for (const auto& m : members) {
    if (m.size() != len) throw Error(ErrorCode::LengthMismatch, "members differ in length");
  }
  if (weights) {
    double total = 0.0;
    for (double w : *weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "weights must be non-negative");
      total += w;
    }
    if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "weights sum to zero");
  }
  std::vector<Primitive> out(len);
  for (std::size_t pos = 0; pos < len; ++pos) {
    std::array<double, 3> score{};
    for (std::size_t i = 0; i < members.size(); ++i) {
      score[index_of(members[i][pos])] += weights ? (*weights)[i] : 1.0;
    }
    Primitive best = Primitive::Mlp;
    for (Primitive p : kAllPrimitives) {
      const double s = score[index_of(p)];
      const double b = score[index_of(best)];
      if (s > b && !detail::nearly_equal(s, b)) best = p;
    }
    out[pos] = best;
  }
  return Architecture(std::move(out));
}

inline std::vector<double> exponential_rank_weights(std::size_t n, double lambda) {
  std::vector<double> w(n);
  for (std::size_t r = 0; r < n; ++r) w[r] = std::exp(-lambda * static_cast<double>(r));
  return w;
}

enum class AggregationMethod { N0, N1, N2 };

inline AggregationMethod aggregation_method_from_string(std::string_view s) {
  const std::string t = to_lower(s);
  if (t == "n0") return AggregationMethod::N0;
  if (t == "n1") return AggregationMethod::N1;
  if (t == "n2") return AggregationMethod::N2;
  throw Error(ErrorCode::InvalidArgument, "method must be n0, n1 or n2");
}

inline constexpr double kDefaultN2Decay = 0.1;
inline constexpr double kDefaultMultiDatasetDecay = 0.5;

/// Records of the top cluster, in ranked order.
inline std::vector<FitnessRecord> top_cluster_records(const ClusterAssignment& assign,
                                                      const RankedPool& pool) {
  std::vector<FitnessRecord> out;
  for (std::size_t idx : assign.members_of(assign.top_cluster)) out.push_back(pool.records[idx]);
  return out;
}

inline Architecture aggregate_n1(const std::vector<FitnessRecord>& selected) {
  std::vector<Architecture> members;
  for (const auto& r : selected) members.push_back(r.architecture);
  return aggregate_layerwise_mode(members);
}

/// `selected` must already be in rank order.
inline Architecture aggregate_n2(const std::vector<FitnessRecord>& selected,
                                 double lambda = kDefaultN2Decay) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "decay must be > 0");
  std::vector<Architecture> members;
  for (const auto& r : selected) members.push_back(r.architecture);
  const auto w = exponential_rank_weights(members.size(), lambda);
  return aggregate_layerwise_mode(members, &w);
}

/// Cross-dataset aggregation with per-dataset exponential rank weights.
inline Architecture aggregate_exponential_multidataset(const std::vector<RankedPool>& pools,
                                                       std::size_t top_n, double lambda) {
  if (pools.empty()) throw Error(ErrorCode::Empty, "no datasets");
  if (top_n < 1) throw Error(ErrorCode::InvalidArgument, "top_n must be >= 1");
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "decay must be > 0");
  // Datasets are combined in id order so the result is independent of the
  // order pools are supplied in.
  std::vector<const RankedPool*> ordered;
  for (const auto& p : pools) {
    if (p.records.empty()) throw Error(ErrorCode::Empty, "dataset '" + p.dataset_id + "' is empty");
    ordered.push_back(&p);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const RankedPool* a, const RankedPool* b) { return a->dataset_id < b->dataset_id; });
  std::vector<Architecture> members;
  std::vector<double> weights;
  for (const RankedPool* p : ordered) {
    const std::size_t n = std::min(top_n, p->records.size());
    auto w = exponential_rank_weights(n, lambda);
    double sum = 0.0;
    for (double v : w) sum += v;
    for (std::size_t r = 0; r < n; ++r) {
      members.push_back(p->records[r].architecture);
      weights.push_back(w[r] / sum);
    }
  }
  return aggregate_layerwise_mode(members, &weights);
}

// --- pool files --------------------------------------------------------------

inline nlohmann::json to_json(const PoolEntry& e) {
  return {{"arch", format_architecture(e.record.architecture)},
          {"val", e.record.val_fitness},
          {"test", e.record.test_fitness},
          {"agent", e.agent},
          {"seed", e.record.seed},
          {"dataset", e.dataset}};
}

/// Reads pool JSONL. Architectures may use any primitive; their length is
/// taken from the first record and must be uniform.
inline std::vector<PoolEntry> read_pool_jsonl(std::istream& in, const std::string& origin = "pool") {
  std::vector<PoolEntry> out;
  std::string line;
  std::size_t lineno = 0;
  std::optional<std::size_t> length;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    try {
      const auto j = nlohmann::json::parse(line);
      const std::string arch_text = j.at("arch").get<std::string>();
      const std::size_t n = split_tokens(arch_text).size();
      if (!length) length = n;
      PoolEntry e;
      e.record.architecture = parse_architecture(arch_text, PrimitivePool::three(), *length);
      e.record.val_fitness = j.at("val").get<double>();
      e.record.test_fitness = j.at("test").get<double>();
      e.record.source = FitnessSource::External;
      e.record.seed = j.value("seed", std::uint64_t{0});
      e.agent = j.value("agent", std::string{});
      e.dataset = j.value("dataset", std::string{});
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::InvalidField, where + ": " + ex.what());
    } catch (const Error& ex) {
      throw Error(ex.code(), where + ": " + ex.detail());
    }
  }
  return out;
}

}  // namespace archsmith
