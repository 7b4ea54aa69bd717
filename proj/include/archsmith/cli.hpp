// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Exit codes: 0 success, 1 domain error, 2 usage.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "archsmith/aggregation.hpp"
#include "archsmith/analysis.hpp"
#include "archsmith/architecture.hpp"
#include "archsmith/error.hpp"
#include "archsmith/extrapolation.hpp"
#include "archsmith/proxy_eval.hpp"
#include "archsmith/scale_model.hpp"
#include "archsmith/search.hpp"
#include "archsmith/workspace.hpp"

namespace archsmith {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// "3", "1..10" or "1,4,9" (items may themselves be ranges).
inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  auto number = [&](const std::string& s) -> std::uint64_t {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (s.empty() || used != s.size() || s[0] == '-') {
      throw Error(ErrorCode::InvalidArgument, "bad seed '" + s + "' in '" + text + "'");
    }
    return v;
  };
  while (std::getline(ss, item, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(number(item));
      continue;
    }
    const std::uint64_t lo = number(item.substr(0, dots));
    const std::uint64_t hi = number(item.substr(dots + 2));
    if (hi < lo) throw Error(ErrorCode::InvalidArgument, "empty seed range '" + item + "'");
    if (hi - lo >= 1000000) throw Error(ErrorCode::InvalidArgument, "seed range too large");
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no seeds given");
  return out;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

inline std::size_t default_jobs() {
  if (const char* env = std::getenv("ARCHSMITH_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

/// Token list, or compact notation when the text is not a token list.
inline Architecture parse_base_architecture(const std::string& text) {
  const auto tokens = split_tokens(text);
  if (!tokens.empty() && primitive_from_token(tokens.front())) {
    return parse_architecture(text, PrimitivePool::three(), tokens.size());
  }
  return Architecture(parse_compact_notation(text));
}

namespace detail {

inline std::string read_file_or_throw(const std::string& path) { return read_text_file(path); }

inline std::string pad(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

// --- search -------------------------------------------------------------------

struct SearchArgs {
  std::string task;
  std::string seeds = "0";
  std::string proposer = "builtin:mutate";
  std::size_t jobs = 1;
  std::uint64_t max_steps = 0;
};

inline int cmd_search(const SearchArgs& a, std::ostream& out, std::ostream& err) {
  const Workspace ws = Workspace::open(a.task);
  const auto seeds = parse_seed_list(a.seeds);
  SearchLimits limits = ws.manifest.limits;
  if (a.max_steps) limits.max_steps = a.max_steps;
  const SearchTask task = ws.manifest.search_task();
  (void)make_proposer(a.proposer);  // fail fast on a bad spec

  std::vector<std::optional<RunLog>> logs(seeds.size());
  std::vector<std::string> failures(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        auto proposer = make_proposer(a.proposer);
        auto evaluator = ws.manifest.make_evaluator();
        RunLog log = run_greedy(task, *proposer, *evaluator, limits, seeds[i]);
        write_text_file(ws.log_path(seeds[i]), to_jsonl(log));
        logs[i] = std::move(log);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(a.jobs, seeds.size()));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < jobs; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  std::ostringstream pool;
  std::ostringstream csv;
  csv << "seed,steps,best_val,best_test,submitted_test,status\n";
  out << pad("seed", 8) << pad("steps", 7) << pad("best_val", 12) << pad("best_test", 12)
      << pad("submitted_test", 16) << "status\n";
  int rc = kExitOk;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!logs[i]) {
      err << "seed " << seeds[i] << ": " << failures[i] << "\n";
      rc = kExitDomain;
      continue;
    }
    const RunLog& log = *logs[i];
    for (const auto& n : log.nodes) {
      if (!n.valid) continue;
      PoolEntry e;
      e.record = FitnessRecord{parse_architecture(n.candidate, task.pool, task.length),
                               *n.val_fitness, *n.test_fitness, FitnessSource::Synthetic, log.seed};
      e.agent = "greedy";
      e.dataset = task.task_id;
      pool << to_json(e).dump() << "\n";
    }
    auto cell = [&](const std::optional<std::uint64_t>& id, bool test) {
      if (!id) return std::string("-");
      const auto& n = log.node(*id);
      return format_sig6(test ? *n.test_fitness : *n.val_fitness);
    };
    const std::string status = log.status == RunStatus::Completed ? "completed" : "aborted";
    out << pad(std::to_string(log.seed), 8) << pad(std::to_string(log.nodes.size()), 7)
        << pad(cell(log.best_val_node, false), 12) << pad(cell(log.best_test_node, true), 12)
        << pad(cell(log.best_val_node, true), 16) << status << "\n";
    csv << log.seed << "," << log.nodes.size() << "," << cell(log.best_val_node, false) << ","
        << cell(log.best_test_node, true) << "," << cell(log.best_val_node, true) << "," << status
        << "\n";
    if (log.status == RunStatus::Aborted) {
      err << "seed " << log.seed << " aborted: " << log.stop_reason << "\n";
      rc = kExitDomain;
    }
  }
  write_text_file(ws.pools / (task.task_id + ".jsonl"), pool.str());
  write_text_file(ws.logs / "summary.csv", csv.str());
  return rc;
}

// --- aggregate ----------------------------------------------------------------

struct AggregateArgs {
  std::vector<std::string> pools;
  std::string method = "n1";
  std::string direction = "maximize";
  std::size_t k = 3;
  std::uint64_t seed = 0;
  std::size_t top = 400;
  std::optional<double> lambda;
  std::size_t top_n = 20;
  std::string out_path;
  std::string report_path;
};

inline int cmd_aggregate(const AggregateArgs& a, std::ostream& out) {
  const FitnessDirection dir = direction_from_string(a.direction);
  std::vector<PoolEntry> entries;
  for (const auto& path : a.pools) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
    auto more = read_pool_jsonl(in, path);
    entries.insert(entries.end(), std::make_move_iterator(more.begin()),
                   std::make_move_iterator(more.end()));
  }
  if (entries.empty()) throw Error(ErrorCode::Empty, "pool files hold no records");

  nlohmann::json report;
  Architecture result;
  const std::string m = to_lower(a.method);
  if (m == "multi" || m == "multidataset") {
    std::map<std::string, std::vector<FitnessRecord>> by_dataset;
    for (const auto& e : entries) by_dataset[e.dataset].push_back(e.record);
    std::vector<RankedPool> pools;
    for (auto& [id, recs] : by_dataset) pools.push_back(rank_architectures(recs, dir, id));
    const double lambda = a.lambda.value_or(kDefaultMultiDatasetDecay);
    result = aggregate_exponential_multidataset(pools, a.top_n, lambda);
    report = {{"method", "multi"}, {"datasets", pools.size()}, {"top_n", a.top_n},
              {"lambda", lambda}};
  } else {
    const AggregationMethod method = aggregation_method_from_string(m);
    std::vector<FitnessRecord> recs;
    for (const auto& e : entries) recs.push_back(e.record);
    const RankedPool ranked = rank_architectures(recs, dir, "pool").top(a.top);
    const PrimitivePool enc = covering_pool(ranked);
    const ClusterAssignment assign = kmeans_cluster(ranked, a.k, a.seed, enc);
    const auto selected = top_cluster_records(assign, ranked);
    switch (method) {
      case AggregationMethod::N0: result = aggregate_n0(assign, ranked, enc); break;
      case AggregationMethod::N1: result = aggregate_n1(selected); break;
      case AggregationMethod::N2: result = aggregate_n2(selected, a.lambda.value_or(kDefaultN2Decay)); break;
    }
    report = {{"method", to_lower(a.method)},
              {"pool_size", ranked.size()},
              {"k", a.k},
              {"seed", a.seed},
              {"top_cluster", assign.top_cluster},
              {"top_cluster_size", selected.size()},
              {"iterations", assign.iterations},
              {"converged", assign.converged},
              {"inertia", round_sig6(assign.inertia_trace.empty() ? 0.0 : assign.inertia_trace.back())}};
    if (method == AggregationMethod::N2) report["lambda"] = a.lambda.value_or(kDefaultN2Decay);
  }
  report["arch"] = format_architecture(result);
  report["length"] = result.size();
  out << format_architecture(result) << "\n";
  if (!a.out_path.empty()) write_submission(result, a.out_path);
  if (!a.report_path.empty()) write_text_file(a.report_path, report.dump(2) + "\n");
  return kExitOk;
}

// --- extrapolate --------------------------------------------------------------

struct ExtrapolateArgs {
  std::string base;
  std::string base_file;
  std::string config = "1B-2prim";
  std::string mode = "stack";
  std::string fill = "prefix";
  std::size_t depth = 0;
  std::string target_params;
  std::string out_prefix;
};

inline int cmd_extrapolate(const ExtrapolateArgs& a, std::ostream& out) {
  if (a.base.empty() == a.base_file.empty()) {
    throw Error(ErrorCode::InvalidArgument, "give exactly one of --base or --base-file");
  }
  if ((a.depth == 0) == a.target_params.empty()) {
    throw Error(ErrorCode::InvalidArgument, "give exactly one of --depth or --target-params");
  }
  const Architecture base =
      parse_base_architecture(a.base.empty() ? read_file_or_throw(a.base_file) : a.base);
  const ScaleConfig cfg = load_scale_config(a.config);
  const ExtrapolationMode mode = extrapolation_mode_from_string(a.mode);
  const StackFill fill = stack_fill_from_string(a.fill);
  std::size_t depth = a.depth;
  if (depth == 0) {
    const u128 target = parse_flops(a.target_params);
    if (target > UINT64_MAX) throw Error(ErrorCode::Overflow, "target params");
    depth = choose_depth(base, cfg, mode, static_cast<std::uint64_t>(target), fill);
  }
  const LayerPattern pattern = extrapolate(base, depth, mode, fill);
  const nlohmann::json sidecar = pattern_sidecar(pattern, cfg);
  const std::string text = compact_notation(pattern) + "\n" + exploded_tokens(pattern) + "\n";
  out << text << sidecar.dump() << "\n";
  if (!a.out_prefix.empty()) {
    write_text_file(a.out_prefix + ".txt", text);
    write_text_file(a.out_prefix + ".json", sidecar.dump(2) + "\n");
  }
  return kExitOk;
}

// --- plan ---------------------------------------------------------------------

struct PlanArgs {
  std::string config;
  std::string layers;
  std::string pattern;
  std::string budgets;
  std::string rounding = "nearest";
};

inline LayerCounts counts_from_sidecar(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
    const auto& c = j.at("counts");
    return LayerCounts{c.at("A").get<std::uint64_t>(), c.at("M").get<std::uint64_t>(),
                       c.at("Mb").get<std::uint64_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidField, path + ": " + e.what());
  }
}

inline int cmd_plan(const PlanArgs& a, std::ostream& out) {
  if (a.layers.empty() == a.pattern.empty()) {
    throw Error(ErrorCode::InvalidArgument, "give exactly one of --layers or --pattern");
  }
  const ScaleConfig cfg = load_scale_config(a.config);
  const LayerCounts counts = a.layers.empty() ? counts_from_sidecar(a.pattern) : parse_layer_counts(a.layers);
  const std::string r = to_lower(a.rounding);
  if (r != "nearest" && r != "floor") {
    throw Error(ErrorCode::InvalidArgument, "rounding must be 'nearest' or 'floor'");
  }
  const StepRounding rounding = r == "floor" ? StepRounding::Floor : StepRounding::Nearest;
  const u128 c_step = flops_per_step(counts, cfg);
  const auto budgets = split_list(a.budgets);
  if (budgets.empty()) throw Error(ErrorCode::InvalidArgument, "no budgets given");
  out << "budget_flops,c_step_flops,steps\n";
  for (const auto& b : budgets) {
    const u128 budget = parse_flops(b);
    out << to_string(budget) << "," << to_string(c_step) << ","
        << steps_for_budget(budget, c_step, rounding) << "\n";
  }
  return kExitOk;
}

// --- score --------------------------------------------------------------------

inline constexpr double kOptimumClamp = 1e-12;

/// Nudges s off the optimum by 1e-12 (toward the feasible side).
inline double clamp_off_optimum(double s, double s_opt, FitnessDirection dir, std::ostream& err) {
  if (s != s_opt) return s;
  err << "warning: score equals the optimum; clamping |s - s_opt| to 1e-12\n";
  return dir == FitnessDirection::Maximize ? s_opt - kOptimumClamp : s_opt + kOptimumClamp;
}

// --- frontier and pareto -----------------------------------------------------

inline std::vector<IsoflopPoint> read_isoflop_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  return read_isoflop_csv(in);
}

inline std::string sig(double v) { return format_sig6(v); }

}  // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"archsmith: hybrid layer-pattern search, aggregation and scaling toolkit", "archsmith"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "archsmith 0.1.0");

  detail::SearchArgs search;
  search.jobs = default_jobs();
  auto* s = app.add_subcommand("search", "Run greedy search over seeds on a task directory");
  s->add_option("--task", search.task, "Task directory holding task.json")->required();
  s->add_option("--seeds", search.seeds, "Seeds: N, A..B or a comma list")->capture_default_str();
  s->add_option("--proposer", search.proposer, "builtin:mutate, exec:<cmd> or tcp:<host>:<port>")
      ->capture_default_str();
  s->add_option("--jobs", search.jobs, "Concurrent runs (default $ARCHSMITH_JOBS or 1)")
      ->check(CLI::PositiveNumber);
  s->add_option("--max-steps", search.max_steps, "Override the manifest step limit")
      ->check(CLI::PositiveNumber);

  detail::AggregateArgs agg;
  auto* g = app.add_subcommand("aggregate", "Aggregate pool files into one base architecture");
  g->add_option("--pool", agg.pools, "Pool JSONL file (repeatable)")->required();
  g->add_option("--method", agg.method, "n0, n1, n2 or multi")->capture_default_str();
  g->add_option("--direction", agg.direction, "maximize or minimize")->capture_default_str();
  g->add_option("--k", agg.k, "Cluster count")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--seed", agg.seed, "Clustering seed")->capture_default_str();
  g->add_option("--top", agg.top, "Keep the best N ranked records before clustering")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  g->add_option("--lambda", agg.lambda, "Rank decay (n2 default 0.1, multi default 0.5)");
  g->add_option("--top-n", agg.top_n, "Records per dataset for multi")->capture_default_str();
  g->add_option("--out", agg.out_path, "Write the result as a submission file");
  g->add_option("--report", agg.report_path, "Write a JSON report");

  detail::ExtrapolateArgs ex;
  auto* e = app.add_subcommand("extrapolate", "Scale a base architecture to a full-depth pattern");
  e->add_option("--base", ex.base, "Base architecture as tokens or compact notation");
  e->add_option("--base-file", ex.base_file, "Submission file holding the base");
  e->add_option("--config", ex.config, "Scale preset name or config JSON")->capture_default_str();
  e->add_option("--mode", ex.mode, "stack or stretch")->capture_default_str();
  e->add_option("--fill", ex.fill, "Stack fill: prefix, suffix or constant:<p>")->capture_default_str();
  e->add_option("--depth", ex.depth, "Target depth");
  e->add_option("--target-params", ex.target_params, "Target non-embedding parameter count");
  e->add_option("--out", ex.out_prefix, "Write <prefix>.txt and <prefix>.json");

  detail::PlanArgs plan;
  auto* p = app.add_subcommand("plan", "Training steps that exhaust each FLOP budget");
  p->add_option("--config", plan.config, "Scale preset name or config JSON")->required();
  p->add_option("--layers", plan.layers, "Layer counts, e.g. A=10,M=19");
  p->add_option("--pattern", plan.pattern, "Pattern sidecar JSON from extrapolate");
  p->add_option("--budgets", plan.budgets, "Comma-separated FLOP budgets")->required();
  p->add_option("--rounding", plan.rounding, "nearest or floor")->capture_default_str();

  auto* sc = app.add_subcommand("score", "Scoring metrics");
  sc->require_subcommand(1);
  double ns_s = 0, ns_min = 0, ns_sota = 0, ns_opt = 1.0;
  std::string ns_dir = "maximize";
  auto* ns = sc->add_subcommand("ns", "Normalized score");
  ns->add_option("--s", ns_s, "Score")->required();
  ns->add_option("--min", ns_min, "Worst observed score")->required();
  ns->add_option("--sota", ns_sota, "State-of-the-art score")->required();
  ns->add_option("--opt", ns_opt, "Optimal score")->capture_default_str();
  ns->add_option("--direction", ns_dir, "maximize or minimize")->capture_default_str();
  std::size_t v_valid = 0, v_total = 0;
  auto* vs = sc->add_subcommand("vsr", "Valid submission rate");
  vs->add_option("--valid", v_valid, "Valid runs")->required();
  vs->add_option("--total", v_total, "Total runs")->required();
  double m_s = 0, m_opt = 1.0;
  std::string m_dir = "maximize";
  auto* m9 = sc->add_subcommand("m9", "March of 9s");
  m9->add_option("--s", m_s, "Score")->required();
  m9->add_option("--opt", m_opt, "Optimal score")->capture_default_str();
  m9->add_option("--direction", m_dir, "maximize or minimize")->capture_default_str();
  double g_best = 0, g_sub = 0;
  std::string g_dir = "maximize";
  auto* gap = sc->add_subcommand("gap", "Generalization gap");
  gap->add_option("--best", g_best, "Best score seen during search")->required();
  gap->add_option("--submitted", g_sub, "Score of the submitted solution")->required();
  gap->add_option("--direction", g_dir, "maximize or minimize")->capture_default_str();

  std::string f_input, f_baseline;
  std::optional<double> f_bq, f_bm;
  auto* fr = app.add_subcommand("frontier", "Fit isoFLOP parabolas and the compute-optimal frontier");
  fr->add_option("--input", f_input, "CSV with budget_flops,model_size,val_loss")->required();
  fr->add_option("--baseline", f_baseline, "Baseline CSV in the same format");
  fr->add_option("--baseline-q", f_bq, "Baseline slope");
  fr->add_option("--baseline-m", f_bm, "Baseline intercept");

  std::string p_input;
  auto* pa = app.add_subcommand("pareto", "Latency/loss Pareto frontier");
  pa->add_option("--input", p_input, "CSV with latency_ms,val_loss")->required();

  std::string v_task, v_file;
  auto* vsub = app.add_subcommand("validate-submission", "Check a submission against a task");
  vsub->add_option("--task", v_task, "Task directory")->required();
  vsub->add_option("--file", v_file, "Submission file (default <task>/submission.csv)");

  std::vector<std::string> l_logs;
  std::size_t l_debug = 2;
  auto* vl = app.add_subcommand("verify-log", "Replay-check run-log invariants");
  vl->add_option("--log", l_logs, "Run-log JSONL (repeatable)")->required();
  vl->add_option("--max-debug", l_debug, "Chained debug attempts allowed")->capture_default_str();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex, out, err), kExitOk;
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex, out, err), kExitOk;
  } catch (const CLI::CallForVersion& ex) {
    return app.exit(ex, out, err), kExitOk;
  } catch (const CLI::ParseError& ex) {
    app.exit(ex, out, err);
    return kExitUsage;
  }

  try {
    if (*s) return detail::cmd_search(search, out, err);
    if (*g) return detail::cmd_aggregate(agg, out);
    if (*e) return detail::cmd_extrapolate(ex, out);
    if (*p) return detail::cmd_plan(plan, out);
    if (*ns) {
      const ScoreContext ctx{ns_min, ns_sota, ns_opt, direction_from_string(ns_dir)};
      const double sv = detail::clamp_off_optimum(ns_s, ns_opt, ctx.direction, err);
      out << detail::sig(normalized_score(sv, ctx)) << "\n";
      return kExitOk;
    }
    if (*vs) {
      out << detail::sig(vsr(v_valid, v_total)) << "\n";
      return kExitOk;
    }
    if (*m9) {
      const double sv = detail::clamp_off_optimum(m_s, m_opt, direction_from_string(m_dir), err);
      out << detail::sig(march_of_9s(sv, m_opt)) << "\n";
      return kExitOk;
    }
    if (*gap) {
      out << detail::sig(generalization_gap(g_best, g_sub, direction_from_string(g_dir))) << "\n";
      return kExitOk;
    }
    if (*fr) {
      const FrontierFit fit = fit_frontier_from_isoflops(detail::read_isoflop_file(f_input));
      std::optional<FrontierFit> base;
      if (!f_baseline.empty()) {
        base = fit_frontier_from_isoflops(detail::read_isoflop_file(f_baseline));
      } else if (f_bq || f_bm) {
        if (!(f_bq && f_bm)) {
          throw Error(ErrorCode::InvalidArgument, "give both --baseline-q and --baseline-m");
        }
        base = FrontierFit{*f_bq, *f_bm, {}};
      }
      out << "q,m,dq,dm\n" << detail::sig(fit.q) << "," << detail::sig(fit.m) << ",";
      if (base) {
        const FrontierDelta d = frontier_delta(fit, *base);
        out << detail::sig(d.dq) << "," << detail::sig(d.dm);
      } else {
        out << ",";
      }
      out << "\n";
      return kExitOk;
    }
    if (*pa) {
      std::ifstream in(p_input);
      if (!in) throw Error(ErrorCode::IoError, "cannot read " + p_input);
      out << "latency_ms,val_loss\n";
      for (const auto& pt : pareto_frontier(read_latency_loss_csv(in))) {
        out << detail::sig(pt.latency_ms) << "," << detail::sig(pt.val_loss) << "\n";
      }
      return kExitOk;
    }
    if (*vsub) {
      const TaskManifest manifest = load_task(v_task);
      const fs::path file = v_file.empty() ? fs::path(v_task) / "submission.csv" : fs::path(v_file);
      const Diagnosis d = analyze(read_text_file(file), manifest.pool, manifest.length);
      if (!d.ok) {
        out << "invalid: " << d.summary() << "\n";
        return kExitDomain;
      }
      out << "valid\n";
      return kExitOk;
    }
    if (*vl) {
      int rc = kExitOk;
      for (const auto& path : l_logs) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
        const RunLog log = run_log_from_jsonl(in);
        const auto problems = verify_run_log(log, l_debug);
        if (problems.empty()) {
          out << path << ": ok (" << log.nodes.size() << " nodes)\n";
        } else {
          rc = kExitDomain;
          for (const auto& pr : problems) out << path << ": " << pr << "\n";
        }
      }
      return rc;
    }
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitDomain;
  }
  return kExitUsage;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace archsmith
