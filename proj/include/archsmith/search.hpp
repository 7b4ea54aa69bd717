// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0
//
// Greedy tree search over candidate architectures.
//
// A run drafts `draft_count` roots, then repeatedly either debugs a buggy
// node or asks for an improvement of the best valid node so far. Improvement
// siblings accumulate under that node until one strictly beats it, at which
// point the frontier moves to the new best.

#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "archsmith/architecture.hpp"
#include "archsmith/fitness.hpp"
#include "archsmith/proxy_eval.hpp"
#include "archsmith/random.hpp"
#include "archsmith/wire.hpp"

namespace archsmith {

enum class Operator { Draft, Improve, Debug };

constexpr std::string_view to_string(Operator op) {
  switch (op) {
    case Operator::Draft: return "draft";
    case Operator::Improve: return "improve";
    case Operator::Debug: return "debug";
  }
  return "?";
}

inline Operator operator_from_string(std::string_view s) {
  if (s == "draft") return Operator::Draft;
  if (s == "improve") return Operator::Improve;
  if (s == "debug") return Operator::Debug;
  throw Error(ErrorCode::InvalidArgument, "unknown operator '" + std::string(s) + "'");
}

// --- analyze -----------------------------------------------------------------

struct Diagnosis {
  bool ok = false;
  std::optional<ErrorCode> reason;  // UnknownToken, WrongLength or OutOfPool
  std::string detail;
  std::optional<Architecture> arch;

  std::string summary() const {
    if (ok) return "ok";
    return std::string(to_string(*reason)) + ": " + detail;
  }
};

/// A candidate is buggy unless its raw text parses for (pool, length).
inline Diagnosis analyze(std::string_view raw, const PrimitivePool& pool, std::size_t length) {
  try {
    Diagnosis d;
    d.arch = parse_architecture(raw, pool, length);
    d.ok = true;
    return d;
  } catch (const Error& e) {
    return Diagnosis{false, e.code(), e.detail(), std::nullopt};
  }
}

// --- nodes and logs ----------------------------------------------------------

struct SearchNode {
  std::uint64_t id = 0;
  std::optional<std::uint64_t> parent_id;
  Operator op = Operator::Draft;
  /// Canonical token string when valid, otherwise the proposer's raw text.
  std::string candidate;
  std::string rationale;
  std::optional<double> val_fitness;
  std::optional<double> test_fitness;
  bool valid = false;
  std::uint64_t step_index = 0;
  std::string diagnosis;
};

struct SearchLimits {
  std::uint64_t max_steps = 500;
  double wall_clock_seconds = 24.0 * 3600.0;
};

enum class RunStatus { Completed, Aborted };

struct RunLog {
  std::uint64_t seed = 0;
  std::string task_id;
  FitnessDirection direction = FitnessDirection::Maximize;
  std::vector<SearchNode> nodes;
  std::optional<std::uint64_t> best_val_node;
  std::optional<std::uint64_t> best_test_node;
  SearchLimits limits;
  RunStatus status = RunStatus::Completed;
  std::string stop_reason;

  const SearchNode& node(std::uint64_t id) const {
    for (const auto& n : nodes) {
      if (n.id == id) return n;
    }
    throw Error(ErrorCode::InvalidArgument, "no node with id " + std::to_string(id));
  }
};

/// Valid node with the best validation fitness; ties go to the lowest step.
inline std::optional<std::uint64_t> best_valid_node(const std::vector<SearchNode>& nodes,
                                                    FitnessDirection direction,
                                                    bool by_test = false) {
  const SearchNode* best = nullptr;
  for (const auto& n : nodes) {
    if (!n.valid) continue;
    const double v = by_test ? *n.test_fitness : *n.val_fitness;
    if (!best) {
      best = &n;
      continue;
    }
    const double b = by_test ? *best->test_fitness : *best->val_fitness;
    if (strictly_better(v, b, direction) ||
        (v == b && n.step_index < best->step_index)) {
      best = &n;
    }
  }
  if (!best) return std::nullopt;
  return best->id;
}

inline std::uint64_t select_parent(const std::vector<SearchNode>& nodes,
                                   FitnessDirection direction) {
  auto id = best_valid_node(nodes, direction);
  if (!id) throw Error(ErrorCode::NoValidNode, "no valid node to improve");
  return *id;
}

inline std::uint64_t select_parent(const RunLog& log) {
  return select_parent(log.nodes, log.direction);
}

// --- proposer protocol -------------------------------------------------------

struct HistoryEntry {
  std::string arch;
  double val = 0.0;
};

struct ParentInfo {
  std::string arch;
  std::optional<double> val;
  std::string rationale;
};

struct ProposalRequest {
  Operator op = Operator::Draft;
  PrimitivePool pool;
  std::size_t length = kDefaultLength;
  std::optional<ParentInfo> parent;
  std::vector<HistoryEntry> history;
  std::uint64_t seed = 0;
};

struct Proposal {
  std::string arch;
  std::string rationale;
};

inline nlohmann::json to_json(const ProposalRequest& r) {
  nlohmann::json pool = nlohmann::json::array();
  for (Primitive p : r.pool.members()) pool.push_back(std::string(token_of(p)));
  nlohmann::json parent = nullptr;
  if (r.parent) {
    parent = {{"arch", r.parent->arch}, {"rationale", r.parent->rationale}};
    parent["val"] = r.parent->val ? nlohmann::json(*r.parent->val) : nlohmann::json(nullptr);
  }
  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : r.history) history.push_back({{"arch", h.arch}, {"val", h.val}});
  return {{"op", std::string(to_string(r.op))},
          {"pool", pool},
          {"length", r.length},
          {"parent", parent},
          {"history_summary", history},
          {"seed", r.seed}};
}

inline ProposalRequest proposal_request_from_json(const nlohmann::json& j) {
  ProposalRequest r;
  r.op = operator_from_string(j.at("op").get<std::string>());
  std::vector<Primitive> members;
  for (const auto& t : j.at("pool")) {
    auto p = primitive_from_token(t.get<std::string>());
    if (!p) throw Error(ErrorCode::UnknownToken, t.get<std::string>());
    members.push_back(*p);
  }
  r.pool = PrimitivePool(members);
  r.length = j.at("length").get<std::size_t>();
  if (!j.at("parent").is_null()) {
    const auto& p = j.at("parent");
    ParentInfo info;
    info.arch = p.at("arch").get<std::string>();
    info.rationale = p.value("rationale", std::string{});
    if (p.contains("val") && p.at("val").is_number()) info.val = p.at("val").get<double>();
    r.parent = info;
  }
  for (const auto& h : j.at("history_summary")) {
    r.history.push_back({h.at("arch").get<std::string>(), h.at("val").get<double>()});
  }
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

/// Throws ProposerFailure on anything but {"arch": str, "rationale": str}.
inline Proposal parse_proposal(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::ProposerFailure, "response is not JSON");
  }
  if (!j.is_object() || !j.contains("arch") || !j.at("arch").is_string()) {
    throw Error(ErrorCode::ProposerFailure, "response lacks string field 'arch'");
  }
  Proposal p;
  p.arch = j.at("arch").get<std::string>();
  if (j.contains("rationale")) {
    if (!j.at("rationale").is_string()) {
      throw Error(ErrorCode::ProposerFailure, "'rationale' must be a string");
    }
    p.rationale = j.at("rationale").get<std::string>();
  }
  return p;
}

class Proposer {
 public:
  virtual ~Proposer() = default;
  /// Throws Error(ProposerFailure) when no usable proposal can be produced.
  virtual Proposal propose(const ProposalRequest& request) = 0;
};

/// Built-in proposer: uniform random drafts, 1-2 point mutations for
/// improvements, and a token-level repair for debugging.
class MutatingProposer final : public Proposer {
 public:
  explicit MutatingProposer(std::size_t max_edits = 2) : max_edits_(max_edits) {}

  Proposal propose(const ProposalRequest& r) override {
    Rng rng(r.seed);
    switch (r.op) {
      case Operator::Draft: {
        return {format_architecture(random_architecture(r.pool, r.length, rng)), "random draft"};
      }
      case Operator::Improve: {
        if (!r.parent) throw Error(ErrorCode::ProposerFailure, "improve without parent");
        const Architecture parent = parse_architecture(r.parent->arch, r.pool, r.length);
        const std::size_t cap = std::min(max_edits_, parent.size());
        const std::size_t edits = 1 + static_cast<std::size_t>(uniform_below(rng, cap));
        return {format_architecture(mutate(parent, r.pool, edits, rng)),
                "mutate " + std::to_string(edits) + " position(s)"};
      }
      case Operator::Debug: {
        return {format_architecture(repair(r.parent ? r.parent->arch : "", r.pool, r.length, rng)),
                "repair tokens and length"};
      }
    }
    throw Error(ErrorCode::ProposerFailure, "unknown operator");
  }

  /// Keeps usable tokens, replaces the rest with random pool members, then
  /// truncates or pads to `length`.
  static Architecture repair(std::string_view raw, const PrimitivePool& pool, std::size_t length,
                             Rng& rng) {
    std::vector<Primitive> layers;
    for (const auto& tok : split_tokens(raw)) {
      auto p = primitive_from_token(tok);
      layers.push_back(p && pool.contains(*p) ? *p
                                              : pool.members()[uniform_below(rng, pool.size())]);
    }
    layers.resize(std::min(layers.size(), length));
    while (layers.size() < length) layers.push_back(pool.members()[uniform_below(rng, pool.size())]);
    return Architecture(std::move(layers));
  }

 private:
  std::size_t max_edits_;
};

/// Proposer reached over the line-delimited JSON protocol.
class ExternalProposer final : public Proposer {
 public:
  explicit ExternalProposer(std::string endpoint,
                            std::chrono::milliseconds timeout = std::chrono::minutes(10))
      : endpoint_(std::move(endpoint)), timeout_(timeout) {}

  Proposal propose(const ProposalRequest& request) override {
    try {
      if (!channel_) channel_ = open_channel(endpoint_);
      channel_->write_line(to_json(request).dump());
      return parse_proposal(channel_->read_line(timeout_));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ProposerFailure) throw;
      // A late reply must not be read as the answer to the next request.
      channel_.reset();
      throw Error(ErrorCode::ProposerFailure, e.what());
    }
  }

 private:
  std::string endpoint_;
  std::chrono::milliseconds timeout_;
  std::unique_ptr<LineChannel> channel_;
};

/// "builtin:mutate" or an endpoint ("exec:..." / "tcp:...").
inline std::unique_ptr<Proposer> make_proposer(const std::string& spec) {
  if (spec == "builtin:mutate" || spec == "builtin") return std::make_unique<MutatingProposer>();
  if (spec.rfind("builtin:", 0) == 0) {
    throw Error(ErrorCode::InvalidArgument, "unknown built-in proposer '" + spec + "'");
  }
  return std::make_unique<ExternalProposer>(spec);
}

// --- the greedy loop ---------------------------------------------------------

struct SearchTask {
  std::string task_id = "task";
  PrimitivePool pool = PrimitivePool::two();
  std::size_t length = kDefaultLength;
  FitnessDirection direction = FitnessDirection::Maximize;
  std::size_t draft_count = 5;
  bool one_shot = false;
  std::size_t max_debug_attempts = 2;
  std::size_t history_limit = 20;
};

using NodeSink = std::function<void(const SearchNode&)>;

/// Consecutive DEBUG operators ending at `id` (0 for non-debug nodes).
inline std::size_t debug_depth(const std::vector<SearchNode>& nodes, std::uint64_t id) {
  std::size_t depth = 0;
  const SearchNode* n = &nodes.at(id);
  while (n->op == Operator::Debug && n->parent_id) {
    ++depth;
    n = &nodes.at(*n->parent_id);
  }
  return depth;
}

/// Ids equal step indices; both start at 0 and grow by one per node.
inline RunLog run_greedy(const SearchTask& task, Proposer& proposer, Evaluator& evaluator,
                         const SearchLimits& limits, std::uint64_t seed,
                         const NodeSink& sink = {}) {
  if (limits.max_steps == 0 || !(limits.wall_clock_seconds > 0)) {
    throw Error(ErrorCode::InvalidArgument, "search limits must be positive");
  }
  RunLog log;
  log.seed = seed;
  log.task_id = task.task_id;
  log.direction = task.direction;
  log.limits = limits;

  const auto started = std::chrono::steady_clock::now();
  std::deque<std::uint64_t> pending_debug;

  auto history = [&] {
    std::vector<const SearchNode*> valid;
    for (const auto& n : log.nodes) {
      if (n.valid) valid.push_back(&n);
    }
    std::stable_sort(valid.begin(), valid.end(), [&](const SearchNode* a, const SearchNode* b) {
      return strictly_better(*a->val_fitness, *b->val_fitness, task.direction);
    });
    std::vector<HistoryEntry> out;
    for (std::size_t i = 0; i < valid.size() && i < task.history_limit; ++i) {
      out.push_back({valid[i]->candidate, *valid[i]->val_fitness});
    }
    return out;
  };

  // Returns false when the evaluator failed and the run must stop.
  auto step = [&](Operator op, std::optional<std::uint64_t> parent) -> bool {
    SearchNode node;
    node.id = node.step_index = log.nodes.size();
    node.parent_id = parent;
    node.op = op;

    ProposalRequest req;
    req.op = op;
    req.pool = task.pool;
    req.length = task.length;
    if (parent) {
      const SearchNode& p = log.nodes.at(*parent);
      req.parent = ParentInfo{p.candidate, p.val_fitness, p.rationale};
    }
    req.history = history();
    req.seed = derive_seed(seed, node.step_index);

    bool evaluator_failed = false;
    try {
      Proposal prop = proposer.propose(req);
      node.rationale = prop.rationale;
      Diagnosis diag = analyze(prop.arch, task.pool, task.length);
      if (diag.ok) {
        node.candidate = format_architecture(*diag.arch);
        try {
          FitnessRecord rec = evaluator.evaluate({*diag.arch, task.task_id, seed});
          node.val_fitness = rec.val_fitness;
          node.test_fitness = rec.test_fitness;
          node.valid = true;
          node.diagnosis = "ok";
        } catch (const Error& e) {
          node.diagnosis = std::string(to_string(ErrorCode::EvaluatorFailure)) + ": " + e.what();
          evaluator_failed = true;
        }
      } else {
        node.candidate = prop.arch;
        node.diagnosis = diag.summary();
      }
    } catch (const Error& e) {
      node.diagnosis = e.code() == ErrorCode::ProposerFailure
                           ? std::string(e.what())
                           : std::string(to_string(ErrorCode::ProposerFailure)) + ": " + e.what();
    }

    log.nodes.push_back(node);
    if (sink) sink(log.nodes.back());
    if (evaluator_failed) {
      log.status = RunStatus::Aborted;
      log.stop_reason = node.diagnosis;
      return false;
    }
    if (!node.valid && debug_depth(log.nodes, node.id) < task.max_debug_attempts) {
      pending_debug.push_back(node.id);
    }
    return true;
  };

  auto out_of_budget = [&]() -> bool {
    if (log.nodes.size() >= limits.max_steps) {
      log.stop_reason = "max_steps";
      return true;
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
    if (elapsed.count() >= limits.wall_clock_seconds) {
      log.stop_reason = "wall_clock";
      return true;
    }
    return false;
  };

  const std::size_t drafts = task.one_shot ? 1 : task.draft_count;
  bool running = true;
  for (std::size_t i = 0; running && i < drafts; ++i) {
    if (out_of_budget()) {
      running = false;
      break;
    }
    running = step(Operator::Draft, std::nullopt);
  }
  if (running && task.one_shot) {
    log.stop_reason = "one_shot";
    running = false;
  }
  while (running && !out_of_budget()) {
    if (!pending_debug.empty()) {
      const auto target = pending_debug.front();
      pending_debug.pop_front();
      running = step(Operator::Debug, target);
    } else if (auto best = best_valid_node(log.nodes, task.direction)) {
      running = step(Operator::Improve, *best);
    } else {
      // Every branch is buggy and out of debug attempts: start a new root.
      running = step(Operator::Draft, std::nullopt);
    }
  }

  log.best_val_node = best_valid_node(log.nodes, task.direction);
  log.best_test_node = best_valid_node(log.nodes, task.direction, /*by_test=*/true);
  return log;
}

// --- run-log JSONL -----------------------------------------------------------

inline nlohmann::json to_json(const SearchNode& n) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"id", n.id},
          {"parent_id", n.parent_id ? nlohmann::json(*n.parent_id) : nlohmann::json(nullptr)},
          {"operator", std::string(to_string(n.op))},
          {"arch", n.candidate},
          {"rationale", n.rationale},
          {"val", opt(n.val_fitness)},
          {"test", opt(n.test_fitness)},
          {"valid", n.valid},
          {"step_index", n.step_index},
          {"diagnosis", n.diagnosis}};
}

inline SearchNode search_node_from_json(const nlohmann::json& j) {
  SearchNode n;
  n.id = j.at("id").get<std::uint64_t>();
  if (!j.at("parent_id").is_null()) n.parent_id = j.at("parent_id").get<std::uint64_t>();
  n.op = operator_from_string(j.at("operator").get<std::string>());
  n.candidate = j.at("arch").get<std::string>();
  n.rationale = j.value("rationale", std::string{});
  if (!j.at("val").is_null()) n.val_fitness = j.at("val").get<double>();
  if (!j.at("test").is_null()) n.test_fitness = j.at("test").get<double>();
  n.valid = j.at("valid").get<bool>();
  n.step_index = j.at("step_index").get<std::uint64_t>();
  n.diagnosis = j.value("diagnosis", std::string{});
  return n;
}

inline nlohmann::json summary_json(const RunLog& log) {
  auto id_or_null = [](const std::optional<std::uint64_t>& id) {
    return id ? nlohmann::json(*id) : nlohmann::json(nullptr);
  };
  nlohmann::json s = {{"summary", true},
                      {"task_id", log.task_id},
                      {"seed", log.seed},
                      {"direction", std::string(to_string(log.direction))},
                      {"steps", log.nodes.size()},
                      {"best_val_node", id_or_null(log.best_val_node)},
                      {"best_test_node", id_or_null(log.best_test_node)},
                      {"best_val", nullptr},
                      {"best_test", nullptr},
                      {"submitted_test", nullptr},
                      {"max_steps", log.limits.max_steps},
                      {"wall_clock", log.limits.wall_clock_seconds},
                      {"status", log.status == RunStatus::Completed ? "completed" : "aborted"},
                      {"stop_reason", log.stop_reason}};
  if (log.best_val_node) {
    const auto& n = log.node(*log.best_val_node);
    s["best_val"] = *n.val_fitness;
    s["submitted_test"] = *n.test_fitness;
  }
  if (log.best_test_node) s["best_test"] = *log.node(*log.best_test_node).test_fitness;
  return s;
}

/// One node per line, then a summary record. Fitness values keep full
/// round-trip precision so a log can be replayed exactly.
inline std::string to_jsonl(const RunLog& log) {
  std::string out;
  for (const auto& n : log.nodes) out += to_json(n).dump() + "\n";
  out += summary_json(log).dump() + "\n";
  return out;
}

inline RunLog run_log_from_jsonl(std::istream& in) {
  RunLog log;
  std::string line;
  bool have_summary = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      if (j.value("summary", false)) {
        have_summary = true;
        log.task_id = j.at("task_id").get<std::string>();
        log.seed = j.at("seed").get<std::uint64_t>();
        log.direction = direction_from_string(j.at("direction").get<std::string>());
        if (!j.at("best_val_node").is_null()) log.best_val_node = j.at("best_val_node").get<std::uint64_t>();
        if (!j.at("best_test_node").is_null()) log.best_test_node = j.at("best_test_node").get<std::uint64_t>();
        log.limits.max_steps = j.value("max_steps", log.limits.max_steps);
        log.limits.wall_clock_seconds = j.value("wall_clock", log.limits.wall_clock_seconds);
        log.status = j.value("status", std::string("completed")) == "aborted" ? RunStatus::Aborted
                                                                               : RunStatus::Completed;
        log.stop_reason = j.value("stop_reason", std::string{});
      } else {
        if (have_summary) throw Error(ErrorCode::InvalidField, "node after summary record");
        log.nodes.push_back(search_node_from_json(j));
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidField, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_summary) throw Error(ErrorCode::InvalidField, "run log has no summary record");
  return log;
}

/// Re-checks tree shape and the greedy frontier on a finished log. Returns
/// one message per violation; empty means the log is consistent.
inline std::vector<std::string> verify_run_log(const RunLog& log,
                                               std::size_t max_debug_attempts = 2) {
  std::vector<std::string> problems;
  auto fail = [&](std::uint64_t id, const std::string& what) {
    problems.push_back("node " + std::to_string(id) + ": " + what);
  };
  std::map<std::uint64_t, std::size_t> index;
  std::vector<SearchNode> prior;
  for (std::size_t i = 0; i < log.nodes.size(); ++i) {
    const SearchNode& n = log.nodes[i];
    if (i > 0 && n.step_index <= log.nodes[i - 1].step_index) fail(n.id, "step_index not increasing");
    if (index.count(n.id)) fail(n.id, "duplicate id");
    if (n.valid && (!n.val_fitness || !n.test_fitness)) fail(n.id, "valid node without fitness");
    if (!n.valid && n.val_fitness) fail(n.id, "invalid node carries val fitness");
    if (n.op == Operator::Draft) {
      if (n.parent_id) fail(n.id, "draft node has a parent");
    } else if (!n.parent_id) {
      fail(n.id, "non-draft node without parent");
    } else if (!index.count(*n.parent_id)) {
      fail(n.id, "parent does not precede node");
    } else {
      const SearchNode& p = log.nodes[index.at(*n.parent_id)];
      if (n.op == Operator::Improve) {
        auto expected = best_valid_node(prior, log.direction);
        if (!expected || *expected != p.id) {
          fail(n.id, "improve parent " + std::to_string(p.id) + " is not the best valid node");
        }
      } else {
        if (p.valid) fail(n.id, "debug parent is valid");
        std::size_t depth = 0;
        const SearchNode* q = &p;
        while (q->op == Operator::Debug && q->parent_id && index.count(*q->parent_id)) {
          ++depth;
          q = &log.nodes[index.at(*q->parent_id)];
        }
        if (depth + 1 > max_debug_attempts) fail(n.id, "debug attempts exceed limit");
      }
    }
    index[n.id] = i;
    prior.push_back(n);
  }
  if (best_valid_node(log.nodes, log.direction) != log.best_val_node) {
    problems.push_back("summary best_val_node does not match the log");
  }
  if (best_valid_node(log.nodes, log.direction, true) != log.best_test_node) {
    problems.push_back("summary best_test_node does not match the log");
  }
  return problems;
}

}  // namespace archsmith
