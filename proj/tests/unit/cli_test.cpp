#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "fame/hashing.hpp"
#include "test_support.hpp"

namespace {

struct RunResult {
  int code = -1;
  std::string output;
};

RunResult run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" FAME_CLI_PATH "' " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string w(const fame::testing::TempDir& d) { return "-w '" + d.path().string() + "'"; }

// Small, fast pipeline settings shared by the end-to-end tests.
const std::string kFast =
    " --latent-dim 8 --topic-dim 8 --hidden-width 16 --hidden-layers 1 --d-time 8 --epochs 3 --batch-size 64";

void simulate(const fame::testing::TempDir& d, int n = 200) {
  const auto r = run("simulate " + w(d) + " --n-papers " + std::to_string(n) + " --embed-dim 8");
  ASSERT_EQ(r.code, 0) << r.output;
}

}  // namespace

TEST(Cli, HelpListsSubcommands) {
  const auto r = run("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* c : {"ingest", "weights", "cluster", "graph", "train", "score", "context", "eval", "ablate",
                        "sweep", "simulate", "project"})
    EXPECT_NE(r.output.find(c), std::string::npos) << c;
}

TEST(Cli, SubcommandHelpShowsDefaults) {
  const auto g = run("graph --help");
  EXPECT_EQ(g.code, 0);
  EXPECT_NE(g.output.find("0.6"), std::string::npos);
  EXPECT_NE(g.output.find("[graph.top_k]"), std::string::npos);
  const auto t = run("train --help");
  for (const char* v : {"0.0001", "200", "256", "128", "0.5"}) EXPECT_NE(t.output.find(v), std::string::npos) << v;
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("nonsense").code, 1);
  EXPECT_EQ(run("train --no-such-flag").code, 1);
  EXPECT_EQ(run("train --epochs notanumber").code, 1);
}

TEST(Cli, TrainBeforeClusterNamesCluster) {
  fame::testing::TempDir d("cli");
  simulate(d, 60);
  const auto r = run("train " + w(d));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("cluster"), std::string::npos) << r.output;
}

TEST(Cli, MissingInputIsDataError) {
  fame::testing::TempDir d("cli");
  const auto r = run("cluster " + w(d));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("simulate"), std::string::npos) << r.output;
  EXPECT_EQ(run("ingest " + w(d) + " --corpus /nonexistent.jsonl --embeddings /nonexistent.csv").code, 2);
}

TEST(Cli, UnreachableVerifierExitsThree) {
  fame::testing::TempDir d("cli");
  simulate(d, 80);
  ASSERT_EQ(run("cluster " + w(d) + " -k 3").code, 0);
  const auto r = run("graph " + w(d) + " --verifier remote --tau-sim -1 --top-k 1",
                     "FAME_VERIFIER_URL=http://127.0.0.1:1/verify");
  EXPECT_EQ(r.code, 3) << r.output;
  // Remote without any endpoint is a usage error.
  EXPECT_EQ(run("graph " + w(d) + " --verifier remote", "env -u FAME_VERIFIER_URL").code, 1);
}

TEST(Cli, ConfigFileAppliesAndFlagsWin) {
  fame::testing::TempDir d("cli");
  simulate(d, 120);
  {
    std::ofstream cfg(d / "fame.conf");
    cfg << "# test config\ncluster.k = 4\nseed = 11\n";
  }
  ASSERT_EQ(run("cluster " + w(d) + " -c '" + (d / "fame.conf").string() + "'").code, 0);
  auto topics = nlohmann::json::parse(slurp(d / "topics.json"));
  EXPECT_EQ(topics.at("k"), 4);
  EXPECT_EQ(topics.at("seed"), 11);
  ASSERT_EQ(run("cluster " + w(d) + " -c '" + (d / "fame.conf").string() + "' -k 2").code, 0);
  topics = nlohmann::json::parse(slurp(d / "topics.json"));
  EXPECT_EQ(topics.at("k"), 2);
  {
    std::ofstream bad(d / "bad.conf");
    bad << "no.such.key = 1\n";
  }
  EXPECT_EQ(run("cluster " + w(d) + " -c '" + (d / "bad.conf").string() + "'").code, 1);
}

TEST(Cli, PipelineWritesArtifactsAndManifests) {
  fame::testing::TempDir d("cli");
  simulate(d, 200);
  ASSERT_EQ(run("weights " + w(d)).code, 0);
  ASSERT_EQ(run("cluster " + w(d) + " -k 3").code, 0);
  const auto g = run("graph " + w(d));
  ASSERT_EQ(g.code, 0) << g.output;
  const auto t = run("train " + w(d) + kFast);
  ASSERT_EQ(t.code, 0) << t.output;
  ASSERT_EQ(run("score " + w(d)).code, 0);
  const auto c = run("context " + w(d));
  ASSERT_EQ(c.code, 0);
  EXPECT_NE(c.output.find("- index 0: score="), std::string::npos);
  ASSERT_EQ(run("project " + w(d)).code, 0);

  for (const char* f : {"weights.csv", "topics.json", "edges.jsonl", "model.ckpt", "loss_trace.csv", "scores.csv",
                        "context.txt", "projection.csv"})
    EXPECT_TRUE(std::filesystem::exists(d / f)) << f;
  EXPECT_EQ(slurp(d / "loss_trace.csv").substr(0, 34), "epoch,total,spine,inspire,vanguard");
  EXPECT_EQ(slurp(d / "scores.csv").substr(0, 9), "id,score\n");

  const auto m = nlohmann::json::parse(slurp(d / "manifests" / "train.json"));
  EXPECT_EQ(m.at("command"), "train");
  EXPECT_TRUE(m.contains("seed"));
  EXPECT_TRUE(m.contains("duration_seconds"));
  EXPECT_EQ(m.at("config").at("train.epochs"), "3");
  bool saw_edges = false;
  for (const auto& in : m.at("inputs")) {
    if (std::filesystem::path(in.at("path").get<std::string>()).filename() == "edges.jsonl") {
      saw_edges = true;
      EXPECT_EQ(in.at("sha256"), fame::sha256_hex(slurp(d / "edges.jsonl")));
    }
  }
  EXPECT_TRUE(saw_edges);
  for (const char* cmd : {"simulate", "weights", "cluster", "graph", "score", "context", "project"})
    EXPECT_TRUE(std::filesystem::exists(d / "manifests" / (std::string(cmd) + ".json"))) << cmd;

  // Re-running with the same inputs reproduces the checkpoint byte for byte.
  const auto first = slurp(d / "model.ckpt");
  ASSERT_EQ(run("train " + w(d) + kFast).code, 0);
  EXPECT_EQ(slurp(d / "model.ckpt"), first);
}

TEST(Cli, EvalAndAblateReports) {
  fame::testing::TempDir d("cli");
  simulate(d, 240);
  const auto e = run("eval " + w(d) + " -k 3 --windows 1 --naive-epochs 3 --naive-hidden-width 8" + kFast);
  ASSERT_EQ(e.code, 0) << e.output;
  const auto report = slurp(d / "report.csv");
  EXPECT_EQ(report.substr(0, report.find('\n')), "window_cutoff,n_test,seed,spearman,top5,variant");
  EXPECT_NE(report.find(",full\n"), std::string::npos);
  EXPECT_NE(report.find(",naive\n"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(d / "summary.csv"));
  EXPECT_TRUE(std::filesystem::exists(d / "manifests" / "eval.json"));
  EXPECT_EQ(run("eval " + w(d) + " --variants full,bogus").code, 1);
}
