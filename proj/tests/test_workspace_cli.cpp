// Copyright (c) 2026, The archsmith authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "archsmith/cli.hpp"
#include "archsmith/error.hpp"
#include "archsmith/workspace.hpp"
#include "oracle.hpp"

namespace archsmith {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int rc;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int rc = run_cli(args, out, err);
  return {rc, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / ("archsmith-" + std::string(info->name()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string read(const fs::path& p) { return read_text_file(p); }

ErrorCode manifest_code(const std::string& text) {
  try {
    task_manifest_from_json(nlohmann::json::parse(text));
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "accepted " << text;
  return ErrorCode::InvalidArgument;
}

std::string repeat(const std::string& unit, int n) {
  std::string out;
  for (int i = 0; i < n; ++i) out += (i ? " " : "") + unit;
  return out;
}

const char* kTask =
    R"({"task_id":"synth","pool":["mlp","mh-attention"],"direction":"maximize",)"
    R"("evaluator":{"type":"synthetic","seed":7},"limits":{"max_steps":40}})";

TEST(TaskManifest, Defaults) {
  const auto m = task_manifest_from_json(
      nlohmann::json::parse(R"({"task_id":"t","pool":["mlp","mh-attention"],"direction":"minimize"})"));
  EXPECT_EQ(m.length, 16u);
  EXPECT_EQ(m.draft_count, 5u);
  EXPECT_DOUBLE_EQ(m.split_ratio, 0.7);
  EXPECT_FALSE(m.one_shot);
  EXPECT_EQ(m.direction, FitnessDirection::Minimize);
  EXPECT_TRUE(std::holds_alternative<SyntheticEvaluatorSpec>(m.evaluator));
  EXPECT_EQ(task_manifest_from_json(to_json(m)).task_id, "t");
  EXPECT_EQ(to_json(task_manifest_from_json(to_json(m))), to_json(m));
}

TEST(TaskManifest, RejectsBadFields) {
  EXPECT_EQ(manifest_code(R"({"task_id":"t","pool":["mlp","mlp"],"direction":"maximize"})"),
            ErrorCode::InvalidField);
  EXPECT_EQ(manifest_code(R"({"task_id":"t","pool":["mlp"]})"), ErrorCode::InvalidField);
  EXPECT_EQ(manifest_code(R"({"task_id":"t","pool":["conv"],"direction":"maximize"})"),
            ErrorCode::InvalidField);
  EXPECT_EQ(manifest_code(R"({"task_id":"t","pool":["mlp"],"direction":"maximize","length":0})"),
            ErrorCode::InvalidField);
  EXPECT_EQ(manifest_code(R"({"task_id":"t","pool":["mlp"],"direction":"maximize","split_ratio":1})"),
            ErrorCode::InvalidField);
}

TEST(TaskManifest, MissingManifest) {
  TempDir dir;
  try {
    load_task(dir.path());
    ADD_FAILURE() << "loaded";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingManifest);
  }
}

TEST(Submission, RoundTrip) {
  TempDir dir;
  write(dir / "task.json", kTask);
  const auto m = load_task(dir.path());
  Rng rng(1);
  const auto arch = random_architecture(m.pool, 16, rng);
  write_submission(arch, dir / "submission.csv");
  EXPECT_EQ(read_submission(dir / "submission.csv", m), arch);
}

TEST(Submission, WrongLengthAndCrlf) {
  TempDir dir;
  write(dir / "task.json", kTask);
  const auto m = load_task(dir.path());
  write(dir / "short.csv", repeat("mlp", 15) + "\n");
  try {
    read_submission(dir / "short.csv", m);
    ADD_FAILURE() << "accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WrongLength);
  }
  write(dir / "crlf.csv", repeat("mlp", 16) + "\r\n");
  EXPECT_EQ(read_submission(dir / "crlf.csv", m).size(), 16u);

  auto r = cli({"validate-submission", "--task", dir.path().string(), "--file", (dir / "short.csv").string()});
  EXPECT_EQ(r.rc, 1);
  EXPECT_NE(r.out.find("WrongLength"), std::string::npos) << r.out;
  r = cli({"validate-submission", "--task", dir.path().string(), "--file", (dir / "crlf.csv").string()});
  EXPECT_EQ(r.rc, 0);
  EXPECT_EQ(r.out, "valid\n");
}

TEST(Workspace, CreatesArtifactDirectories) {
  TempDir dir;
  write(dir / "task.json", kTask);
  const auto ws = Workspace::open(dir.path());
  EXPECT_TRUE(fs::is_directory(ws.pools));
  EXPECT_TRUE(fs::is_directory(ws.logs));
  EXPECT_TRUE(fs::is_directory(ws.patterns));
  EXPECT_EQ(ws.log_path(3).filename(), "run-seed3.jsonl");
}

TEST(Cli, PlanMatchesOracle) {
  const auto r = cli({"plan", "--config", "1B-2prim", "--layers", "A=16,M=16", "--budgets", "2e19,4e19"});
  ASSERT_EQ(r.rc, 0) << r.err;
  const auto s = oracle::scale_for("1B", false);
  const auto c = oracle::c_step(s, 16, 16, 0);
  std::ostringstream expected;
  expected << "budget_flops,c_step_flops,steps\n";
  for (const char* b : {"2e19", "4e19"}) {
    expected << to_string(oracle::budget(b)) << "," << to_string(c) << ","
             << oracle::steps_nearest(oracle::budget(b), c) << "\n";
  }
  EXPECT_EQ(r.out, expected.str());

  const auto f = cli({"plan", "--config", "1B-2prim", "--layers", "A=16,M=16", "--budgets", "2e19",
                      "--rounding", "floor"});
  EXPECT_NE(f.out.find("," + std::to_string(oracle::steps_floor(oracle::budget("2e19"), c)) + "\n"),
            std::string::npos);
}

TEST(Cli, ScoreNormalized) {
  const auto r = cli({"score", "ns", "--s", "0.999", "--min", "0.9", "--sota", "0.99"});
  ASSERT_EQ(r.rc, 0) << r.err;
  EXPECT_DOUBLE_EQ(std::stod(r.out), 2.0);
  EXPECT_EQ(cli({"score", "vsr", "--valid", "3", "--total", "4"}).out, "0.75\n");
  EXPECT_EQ(cli({"score", "vsr", "--valid", "0", "--total", "0"}).rc, 1);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli({}).rc, 2);
  EXPECT_EQ(cli({"plan"}).rc, 2);
  EXPECT_EQ(cli({"bogus"}).rc, 2);
  const auto r = cli({"plan", "--config", "nonexistent", "--layers", "A=1", "--budgets", "1e19"});
  EXPECT_EQ(r.rc, 1);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_EQ(cli({"--version"}).rc, 0);
}

TEST(Cli, SearchWritesVerifiableLogs) {
  TempDir dir;
  write(dir / "task.json", kTask);
  const auto r = cli({"search", "--task", dir.path().string(), "--seeds", "1..10", "--jobs", "4"});
  ASSERT_EQ(r.rc, 0) << r.err;
  for (int seed = 1; seed <= 10; ++seed) {
    const auto log = dir / ("logs/run-seed" + std::to_string(seed) + ".jsonl");
    ASSERT_TRUE(fs::exists(log));
    const auto v = cli({"verify-log", "--log", log.string()});
    EXPECT_EQ(v.rc, 0) << v.out;
  }
  EXPECT_TRUE(fs::exists(dir / "pools/synth.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "logs/summary.csv"));

  const auto agg = cli({"aggregate", "--pool", (dir / "pools/synth.jsonl").string(), "--method", "n1",
                        "--out", (dir / "submission.csv").string()});
  ASSERT_EQ(agg.rc, 0) << agg.err;
  EXPECT_EQ(cli({"validate-submission", "--task", dir.path().string()}).rc, 0);
}

TEST(Cli, SearchIsIndependentOfJobCount) {
  TempDir a, b;
  write(a / "task.json", kTask);
  write(b / "task.json", kTask);
  ASSERT_EQ(cli({"search", "--task", a.path().string(), "--seeds", "1,2,3", "--jobs", "1"}).rc, 0);
  ASSERT_EQ(cli({"search", "--task", b.path().string(), "--seeds", "1,2,3", "--jobs", "3"}).rc, 0);
  for (int seed = 1; seed <= 3; ++seed) {
    const std::string name = "logs/run-seed" + std::to_string(seed) + ".jsonl";
    EXPECT_EQ(read(a / name), read(b / name));
  }
  EXPECT_EQ(read(a / "pools/synth.jsonl"), read(b / "pools/synth.jsonl"));
}

TEST(Cli, VerifyLogFlagsTampering) {
  TempDir dir;
  write(dir / "task.json", kTask);
  ASSERT_EQ(cli({"search", "--task", dir.path().string(), "--seeds", "4"}).rc, 0);
  std::istringstream in(read(dir / "logs/run-seed4.jsonl"));
  auto log = run_log_from_jsonl(in);
  log.best_val_node = log.best_val_node == 0u ? 1u : 0u;
  write(dir / "bad.jsonl", to_jsonl(log));
  EXPECT_EQ(cli({"verify-log", "--log", (dir / "bad.jsonl").string()}).rc, 1);
}

TEST(Cli, FrontierAndPareto) {
  TempDir dir;
  std::ostringstream csv;
  csv << "budget_flops,model_size,val_loss\n";
  // loss = 2 + (log10 N - (log10 C)/2)^2 with optimum at log10 N* = log10 C / 2.
  for (double lc : {18.0, 19.0, 20.0}) {
    for (double dn : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
      const double ln = lc / 2 + dn;
      csv << std::pow(10.0, lc) << "," << std::pow(10.0, ln) << "," << 2.0 + dn * dn << "\n";
    }
  }
  write(dir / "iso.csv", csv.str());
  const auto r = cli({"frontier", "--input", (dir / "iso.csv").string()});
  ASSERT_EQ(r.rc, 0) << r.err;
  ASSERT_EQ(r.out.substr(0, 10), "q,m,dq,dm\n");
  const std::string row = r.out.substr(10);
  const double q = std::stod(row);
  const double m = std::stod(row.substr(row.find(',') + 1));
  EXPECT_NEAR(q, 0.0, 1e-9);
  EXPECT_NEAR(m, std::log10(2.0), 1e-5);

  write(dir / "lat.csv", "latency_ms,val_loss\n10,3\n20,2\n15,3.5\n30,2\n");
  const auto p = cli({"pareto", "--input", (dir / "lat.csv").string()});
  ASSERT_EQ(p.rc, 0) << p.err;
  EXPECT_EQ(p.out, "latency_ms,val_loss\n10,3\n20,2\n");

  write(dir / "bad.csv", "latency,val_loss\n1,2\n");
  EXPECT_EQ(cli({"pareto", "--input", (dir / "bad.csv").string()}).rc, 1);
}

TEST(Cli, ExtrapolateWritesSidecar) {
  TempDir dir;
  const std::string prefix = (dir / "llama").string();
  const auto r = cli({"extrapolate", "--base", "8x(A-M)", "--config", "1B-2prim", "--depth", "32",
                      "--out", prefix});
  ASSERT_EQ(r.rc, 0) << r.err;
  const auto side = nlohmann::json::parse(read(prefix + ".json"));
  EXPECT_EQ(side.at("counts").at("A"), 16);
  EXPECT_EQ(side.at("counts").at("M"), 16);
  const auto p = cli({"plan", "--config", "1B-2prim", "--pattern", prefix + ".json", "--budgets", "2e19"});
  EXPECT_EQ(p.out, cli({"plan", "--config", "1B-2prim", "--layers", "A=16,M=16", "--budgets", "2e19"}).out);
}

}  // namespace
}  // namespace archsmith
