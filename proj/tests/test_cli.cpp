// Copyright 2026 the alignahead authors
// SPDX-License-Identifier: Apache-2.0
//
// Shells out to the built CLI binary (path in ALIGNAHEAD_CLI_BIN, wired by
// CTest) and checks the command-surface contracts.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "alignahead/graph.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli() {
  const char* p = std::getenv("ALIGNAHEAD_CLI_BIN");
  REQUIRE(p != nullptr);
  return p;
}

struct CmdResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CmdResult run(const std::string& args) {
  static int counter = 0;
  const fs::path err_file = fs::temp_directory_path() /
                            ("alignahead_cli_err_" +
                             std::to_string(counter++) + ".txt");
  CmdResult r;
  FILE* pipe =
      popen((cli() + " " + args + " 2>" + err_file.string()).c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream ef(err_file);
  std::stringstream ss;
  ss << ef.rdbuf();
  r.err = ss.str();
  fs::remove(err_file);
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "alignahead_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("generate rejects p_out > p_in with an error JSON on stderr") {
  const fs::path dir = fresh_dir("reject");
  CmdResult r = run("generate --out " + dir.string() +
                    " --p-out 0.9 --p-in 0.1");
  CHECK(r.exit_code == 2);
  json err = json::parse(r.err);
  CHECK(err.at("error").at("type") == "invalid_argument");
  CHECK(err.at("error").at("message").get<std::string>().find("p_out") !=
        std::string::npos);
}

TEST_CASE("generate is byte-deterministic and its output reloads cleanly") {
  const fs::path a = fresh_dir("gen_a");
  const fs::path b = fresh_dir("gen_b");
  const std::string flags =
      " --nodes 60 --classes 3 --p-in 0.2 --p-out 0.02 --feature-dim 4"
      " --seed 7";
  CHECK(run("generate --out " + a.string() + flags).exit_code == 0);
  CHECK(run("generate --out " + b.string() + flags).exit_code == 0);
  CHECK(slurp(a / "graph_0.json") == slurp(b / "graph_0.json"));
  CHECK(slurp(a / "bundle.json") == slurp(b / "bundle.json"));

  align::Graph g = align::load_graph(a / "graph_0.json");
  CHECK(g.num_nodes == 60);
  std::size_t masked = 0;
  for (std::size_t i = 0; i < 60; ++i) {
    CHECK(int(g.train_mask[i]) + int(g.val_mask[i]) + int(g.test_mask[i]) == 1);
    masked += g.train_mask[i];
  }
  CHECK(masked == 36);  // 60% of each class
  // one manifest per artifact directory
  CHECK(fs::exists(a / "manifest.json"));
  json manifest = json::parse(slurp(a / "manifest.json"));
  CHECK(manifest.at("command") == "generate");
  CHECK(manifest.at("config_hash") ==
        json::parse(slurp(b / "manifest.json")).at("config_hash"));
}

TEST_CASE("train with alpha 0 reproduces the self strategy metrics") {
  const fs::path data = fresh_dir("equiv_data");
  REQUIRE(run("generate --out " + data.string() +
              " --nodes 80 --classes 2 --p-in 0.15 --p-out 0.02"
              " --feature-dim 4 --seed 5")
              .exit_code == 0);
  const std::string common = " --data " + (data / "graph_0.json").string() +
                             " --students 2 --arch gcn --layers 2 --hidden 8"
                             " --epochs 6 --seed 21";
  const fs::path self_out = fresh_dir("equiv_self");
  const fs::path zero_out = fresh_dir("equiv_zero");
  CmdResult self_run = run("train --strategy self --out " + self_out.string() +
                           common);
  CmdResult zero_run = run("train --strategy alignahead --alpha 0 --out " +
                           zero_out.string() + common);
  REQUIRE(self_run.exit_code == 0);
  REQUIRE(zero_run.exit_code == 0);
  CHECK(json::parse(self_run.out) == json::parse(zero_run.out));
  CHECK(slurp(self_out / "student_0.json") == slurp(zero_out / "student_0.json"));
}

TEST_CASE("train summary reports every student plus the max") {
  const fs::path data = fresh_dir("summary_data");
  REQUIRE(run("generate --out " + data.string() +
              " --nodes 80 --classes 2 --p-in 0.15 --p-out 0.02"
              " --feature-dim 4 --seed 9")
              .exit_code == 0);
  const fs::path out = fresh_dir("summary_run");
  CmdResult r = run("train --strategy oc --out " + out.string() + " --data " +
                    (data / "graph_0.json").string() +
                    " --students 3 --arch gcn --layers 2 --hidden 8"
                    " --epochs 4 --seed 2");
  REQUIRE(r.exit_code == 0);
  json summary = json::parse(r.out);
  REQUIRE(summary.at("test_metrics").size() == 3);
  double max_seen = 0.0;
  for (double v : summary.at("test_metrics").get<std::vector<double>>())
    max_seen = std::max(max_seen, v);
  CHECK(summary.at("max_test_metric").get<double>() == max_seen);
  CHECK(fs::exists(out / "report.jsonl"));
  CHECK(fs::exists(out / "student_2.json"));
  CHECK(fs::exists(out / "manifest.json"));
}

TEST_CASE("inductive preset trains on a generated bundle") {
  const fs::path data = fresh_dir("inductive_data");
  REQUIRE(run("generate --out " + data.string() +
              " --nodes 30 --classes 2 --p-in 0.25 --p-out 0.05"
              " --feature-dim 4 --graphs 2 --val-graphs 1 --test-graphs 1"
              " --seed 13")
              .exit_code == 0);
  const fs::path out = fresh_dir("inductive_run");
  CmdResult r = run("train --preset inductive --out " + out.string() +
                    " --data " + (data / "bundle.json").string() +
                    " --students 2 --arch sage_mean --layers 2 --hidden 8"
                    " --epochs 4 --seed 3");
  REQUIRE(r.exit_code == 0);
  json summary = json::parse(r.out);
  CHECK(summary.at("test_metrics").size() == 2);
  // the inductive preset defaults went into the manifest
  json manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest.at("config").at("lr").get<double>() == 0.005);
  CHECK(manifest.at("config").at("weight_decay").get<double>() == 0.0);
  CHECK(manifest.at("config").at("kernel") == "rbf");
}

TEST_CASE("a single-alpha sweep equals the corresponding train run") {
  const fs::path data = fresh_dir("sweep_data");
  REQUIRE(run("generate --out " + data.string() +
              " --nodes 80 --classes 2 --p-in 0.15 --p-out 0.02"
              " --feature-dim 4 --seed 17")
              .exit_code == 0);
  const std::string common = " --data " + (data / "graph_0.json").string() +
                             " --students 2 --arch gcn --layers 2 --hidden 8"
                             " --epochs 5 --seed 4 --alpha 1.5";
  const fs::path train_out = fresh_dir("sweep_train");
  CmdResult tr = run("train --strategy alignahead --out " +
                     train_out.string() + common);
  REQUIRE(tr.exit_code == 0);
  const fs::path sweep_out = fresh_dir("sweep_sweep");
  CmdResult sw = run("sweep-alpha --strategy alignahead --out " +
                     sweep_out.string() + common + " --alphas 1.5 --seeds 1");
  REQUIRE(sw.exit_code == 0);
  json train_summary = json::parse(tr.out);
  json sweep_summary = json::parse(sw.out);
  REQUIRE(sweep_summary.at("rows").size() == 1);
  CHECK(sweep_summary.at("rows")[0].at("max_test_metric") ==
        train_summary.at("max_test_metric"));
  CHECK(sweep_summary.at("rows")[0].at("max_val_metric") ==
        train_summary.at("max_val_metric"));
  CHECK(sweep_summary.at("metric_spread").get<double>() == 0.0);
}

TEST_CASE("flow rejects unknown plans and single students") {
  CHECK(run("flow --students 2 --layers 3 --plan nonsense").exit_code == 2);
  CHECK(run("flow --students 1 --layers 3 --plan oc").exit_code == 2);
}

TEST_CASE("missing dataset surfaces as a runtime error JSON") {
  const fs::path out = fresh_dir("missing_data");
  CmdResult r = run("train --data /nonexistent/graph.json --out " +
                    out.string());
  CHECK(r.exit_code == 3);
  json err = json::parse(r.err);
  CHECK(err.at("error").at("type") == "runtime_error");
}
