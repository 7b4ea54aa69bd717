// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0
//
// Task directories, submission files and run-log persistence.
//
// A task directory holds task.json:
//   {"task_id": "...", "pool": ["mlp", "mh-attention"], "length": 16,
//    "direction": "maximize",
//    "evaluator": {"type": "synthetic", "seed": 0}
//               | {"type": "external", "address": "exec:<cmd>" | "tcp:<h>:<p>"},
//    "limits": {"max_steps": 500, "wall_clock": 86400},
//    "draft_count": 5, "split_ratio": 0.7, "one_shot": false}

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "archsmith/architecture.hpp"
#include "archsmith/error.hpp"
#include "archsmith/fitness.hpp"
#include "archsmith/proxy_eval.hpp"
#include "archsmith/search.hpp"

namespace archsmith {

namespace fs = std::filesystem;

/// Fixed output formatting: 6 significant digits.
inline std::string format_sig6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// Rounds to 6 significant digits so JSON dumps stay fixed-width in meaning.
inline double round_sig6(double v) {
  if (!std::isfinite(v) || v == 0.0) return v;
  return std::strtod(format_sig6(v).c_str(), nullptr);
}

struct SyntheticEvaluatorSpec {
  std::uint64_t seed = 0;
};
struct ExternalEvaluatorSpec {
  std::string address;
};
using EvaluatorSpec = std::variant<SyntheticEvaluatorSpec, ExternalEvaluatorSpec>;

struct TaskManifest {
  std::string task_id;
  PrimitivePool pool = PrimitivePool::two();
  std::size_t length = kDefaultLength;
  FitnessDirection direction = FitnessDirection::Maximize;
  EvaluatorSpec evaluator = SyntheticEvaluatorSpec{};
  SearchLimits limits;
  std::size_t draft_count = 5;
  double split_ratio = 0.7;
  bool one_shot = false;

  SearchTask search_task() const {
    SearchTask t;
    t.task_id = task_id;
    t.pool = pool;
    t.length = length;
    t.direction = direction;
    t.draft_count = draft_count;
    t.one_shot = one_shot;
    return t;
  }

  std::unique_ptr<Evaluator> make_evaluator() const {
    if (const auto* s = std::get_if<SyntheticEvaluatorSpec>(&evaluator)) {
      return std::make_unique<SyntheticEvaluator>(s->seed, direction);
    }
    return std::make_unique<ExternalEvaluator>(std::get<ExternalEvaluatorSpec>(evaluator).address);
  }
};

namespace detail {

inline Error invalid_field(const std::string& field, const std::string& expected) {
  return Error(ErrorCode::InvalidField, field + " (" + expected + ")");
}

template <typename T>
T field_as(const nlohmann::json& j, const std::string& field, const std::string& expected) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw invalid_field(field, expected);
  }
}

inline std::uint64_t positive_count(const nlohmann::json& j, const std::string& field) {
  if (!j.is_number_unsigned() || j.get<std::uint64_t>() == 0) {
    throw invalid_field(field, "positive integer");
  }
  return j.get<std::uint64_t>();
}

}  // namespace detail

inline TaskManifest task_manifest_from_json(const nlohmann::json& j) {
  using detail::invalid_field;
  if (!j.is_object()) throw invalid_field("task.json", "object");
  TaskManifest m;

  if (!j.contains("task_id") || !j.at("task_id").is_string() ||
      j.at("task_id").get<std::string>().empty()) {
    throw invalid_field("task_id", "non-empty string");
  }
  m.task_id = j.at("task_id").get<std::string>();

  if (!j.contains("pool") || !j.at("pool").is_array()) {
    throw invalid_field("pool", "array of primitive tokens");
  }
  std::vector<Primitive> members;
  for (const auto& t : j.at("pool")) {
    if (!t.is_string()) throw invalid_field("pool", "array of primitive tokens");
    const auto p = primitive_from_token(t.get<std::string>());
    if (!p) throw invalid_field("pool", "unknown token '" + t.get<std::string>() + "'");
    if (std::find(members.begin(), members.end(), *p) != members.end()) {
      throw invalid_field("pool", "duplicate '" + t.get<std::string>() + "'");
    }
    members.push_back(*p);
  }
  if (members.empty()) throw invalid_field("pool", "non-empty");
  m.pool = PrimitivePool(members);

  if (j.contains("length")) m.length = detail::positive_count(j.at("length"), "length");

  if (!j.contains("direction") || !j.at("direction").is_string()) {
    throw invalid_field("direction", "'maximize' or 'minimize'");
  }
  try {
    m.direction = direction_from_string(j.at("direction").get<std::string>());
  } catch (const Error&) {
    throw invalid_field("direction", "'maximize' or 'minimize'");
  }

  if (j.contains("evaluator")) {
    const auto& e = j.at("evaluator");
    if (!e.is_object() || !e.contains("type") || !e.at("type").is_string()) {
      throw invalid_field("evaluator", "object with 'type'");
    }
    const std::string type = e.at("type").get<std::string>();
    if (type == "synthetic") {
      SyntheticEvaluatorSpec s;
      if (e.contains("seed")) {
        if (!e.at("seed").is_number_unsigned()) throw invalid_field("evaluator.seed", "unsigned integer");
        s.seed = e.at("seed").get<std::uint64_t>();
      }
      m.evaluator = s;
    } else if (type == "external") {
      if (!e.contains("address") || !e.at("address").is_string()) {
        throw invalid_field("evaluator.address", "endpoint string");
      }
      m.evaluator = ExternalEvaluatorSpec{e.at("address").get<std::string>()};
    } else {
      throw invalid_field("evaluator.type", "'synthetic' or 'external'");
    }
  }

  if (j.contains("limits")) {
    const auto& l = j.at("limits");
    if (!l.is_object()) throw invalid_field("limits", "object");
    if (l.contains("max_steps")) m.limits.max_steps = detail::positive_count(l.at("max_steps"), "limits.max_steps");
    if (l.contains("wall_clock")) {
      if (!l.at("wall_clock").is_number() || !(l.at("wall_clock").get<double>() > 0.0)) {
        throw invalid_field("limits.wall_clock", "positive seconds");
      }
      m.limits.wall_clock_seconds = l.at("wall_clock").get<double>();
    }
  }
  if (j.contains("draft_count")) {
    m.draft_count = detail::positive_count(j.at("draft_count"), "draft_count");
  }
  if (j.contains("split_ratio")) {
    const auto& r = j.at("split_ratio");
    if (!r.is_number() || !(r.get<double>() > 0.0 && r.get<double>() < 1.0)) {
      throw invalid_field("split_ratio", "number in (0, 1)");
    }
    m.split_ratio = r.get<double>();
  }
  if (j.contains("one_shot")) {
    if (!j.at("one_shot").is_boolean()) throw invalid_field("one_shot", "boolean");
    m.one_shot = j.at("one_shot").get<bool>();
  }
  return m;
}

inline nlohmann::json to_json(const TaskManifest& m) {
  nlohmann::json pool = nlohmann::json::array();
  for (Primitive p : m.pool.members()) pool.push_back(std::string(token_of(p)));
  nlohmann::json evaluator;
  if (const auto* s = std::get_if<SyntheticEvaluatorSpec>(&m.evaluator)) {
    evaluator = {{"type", "synthetic"}, {"seed", s->seed}};
  } else {
    evaluator = {{"type", "external"}, {"address", std::get<ExternalEvaluatorSpec>(m.evaluator).address}};
  }
  return {{"task_id", m.task_id},
          {"pool", pool},
          {"length", m.length},
          {"direction", std::string(to_string(m.direction))},
          {"evaluator", evaluator},
          {"limits", {{"max_steps", m.limits.max_steps}, {"wall_clock", m.limits.wall_clock_seconds}}},
          {"draft_count", m.draft_count},
          {"split_ratio", m.split_ratio},
          {"one_shot", m.one_shot}};
}

/// Loads `dir`/task.json, or `dir` itself when it names a file.
inline TaskManifest load_task(const fs::path& dir) {
  const fs::path file = fs::is_regular_file(dir) ? dir : dir / "task.json";
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::MissingManifest, "no task.json at " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidField, file.string() + ": " + e.what());
  }
  return task_manifest_from_json(j);
}

// --- submissions -------------------------------------------------------------

inline void write_submission(const Architecture& arch, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << format_architecture(arch) << '\n';
}

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Validates the file against the manifest's pool and length.
inline Architecture read_submission(const fs::path& path, const TaskManifest& manifest) {
  const Diagnosis d = analyze(read_text_file(path), manifest.pool, manifest.length);
  if (!d.ok) throw Error(*d.reason, d.detail);
  return *d.arch;
}

// --- workspace ---------------------------------------------------------------

struct Workspace {
  fs::path root;
  TaskManifest manifest;
  fs::path pools;
  fs::path logs;
  fs::path patterns;

  /// Loads the manifest under `root` and creates the artifact directories.
  static Workspace open(const fs::path& root) {
    Workspace w{root, load_task(root), root / "pools", root / "logs", root / "patterns"};
    std::error_code ec;
    for (const auto* d : {&w.pools, &w.logs, &w.patterns}) {
      fs::create_directories(*d, ec);
      if (ec) throw Error(ErrorCode::IoError, "cannot create " + d->string() + ": " + ec.message());
    }
    return w;
  }

  fs::path log_path(std::uint64_t seed) const {
    return logs / ("run-seed" + std::to_string(seed) + ".jsonl");
  }
};

inline void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace archsmith
