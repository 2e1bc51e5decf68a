// Copyright 2026 the alignahead authors
// SPDX-License-Identifier: Apache-2.0
//
// alignahead CLI: generate synthetic datasets, train students under the
// self/oc/alignahead/lsp strategies, run the structure-flow simulator, and
// sweep the alpha balance. Every command writes a manifest.json into its
// output directory; reruns with the same config and seed reproduce outputs
// byte-for-byte except timing fields.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "alignahead/distill.hpp"
#include "alignahead/flowsim.hpp"
#include "alignahead/graph.hpp"
#include "alignahead/manifest.hpp"

#ifndef ALIGNAHEAD_SOURCE_REV
#define ALIGNAHEAD_SOURCE_REV "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using align::RunManifest;
using align::write_manifest;

namespace {

fs::path resolve_out(const std::string& dir) {
  fs::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("ALIGNAHEAD_OUT")) return fs::path(root) / p;
  }
  return p;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateOpts {
  std::string out;
  std::uint64_t seed = 0;
  std::size_t nodes = 300;
  std::size_t classes = 3;
  double p_in = 0.05;
  double p_out = 0.005;
  std::size_t feature_dim = 16;
  double feature_shift = 1.0;
  std::size_t train_graphs = 1;
  std::size_t val_graphs = 0;
  std::size_t test_graphs = 0;
};

int run_generate(const GenerateOpts& o) {
  const fs::path dir = resolve_out(o.out);
  fs::create_directories(dir);
  RunManifest manifest;
  manifest.command = "generate";
  manifest.seed = o.seed;
  manifest.source_revision = ALIGNAHEAD_SOURCE_REV;
  manifest.started_at = align::iso_timestamp();
  manifest.config = {{"seed", o.seed},
                     {"nodes", o.nodes},
                     {"classes", o.classes},
                     {"p_in", o.p_in},
                     {"p_out", o.p_out},
                     {"feature_dim", o.feature_dim},
                     {"feature_shift", o.feature_shift},
                     {"train_graphs", o.train_graphs},
                     {"val_graphs", o.val_graphs},
                     {"test_graphs", o.test_graphs}};

  const bool inductive = o.val_graphs + o.test_graphs > 0;
  if (!inductive && o.train_graphs != 1)
    throw std::invalid_argument(
        "generate: a transductive dataset is a single graph; pass --val-graphs/"
        "--test-graphs to build an inductive bundle");

  std::mt19937_64 master(o.seed);
  auto make = [&](const std::string& name) {
    align::SbmParams p;
    p.seed = master();
    p.num_nodes = o.nodes;
    p.num_classes = o.classes;
    p.p_in = o.p_in;
    p.p_out = o.p_out;
    p.feature_dim = o.feature_dim;
    p.feature_shift = o.feature_shift;
    align::save_graph(align::generate_sbm(p), dir / name);
    manifest.outputs.push_back(name);
    return name;
  };

  json bundle;
  bundle["mode"] = inductive ? "inductive" : "transductive";
  auto emit = [&](const char* field, const char* prefix, std::size_t count) {
    auto arr = json::array();
    for (std::size_t i = 0; i < count; ++i)
      arr.push_back(make(std::string(prefix) + std::to_string(i) + ".json"));
    bundle[field] = std::move(arr);
  };
  emit("train", inductive ? "train_" : "graph_", o.train_graphs);
  emit("val", "val_", o.val_graphs);
  emit("test", "test_", o.test_graphs);
  {
    std::ofstream out(dir / "bundle.json");
    out << bundle.dump(2) << "\n";
  }
  manifest.outputs.push_back("bundle.json");
  manifest.finished_at = align::iso_timestamp();
  write_manifest(manifest, dir);
  std::cout << json{{"out", dir.string()},
                    {"bundle", (dir / "bundle.json").string()},
                    {"graphs", manifest.outputs.size() - 1}}
                   .dump()
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// shared model/strategy flags for train and sweep-alpha

struct ModelOpts {
  std::string data;
  std::string strategy = "alignahead";
  int students = 2;
  std::string arch = "gcn";
  std::size_t layers = 3;
  std::vector<std::size_t> hidden;
  std::vector<std::size_t> heads;
  double alpha = 1.0;
  std::string kernel;
  double sigma = 100.0;
  double poly_c = 1.0;
  double poly_d = 2.0;
  bool negate_euclidean = false;
  std::string activation;
  std::uint64_t seed = 0;
  std::string preset = "transductive";
  int epochs = 0;
  double lr = 0.0;
  double weight_decay = 0.0;
  bool fresh_targets = false;
  std::string teacher;
};

void add_model_flags(CLI::App* cmd, ModelOpts& o) {
  cmd->add_option("--data", o.data, "graph JSON or bundle manifest")->required();
  cmd->add_option("--strategy", o.strategy,
                  "training strategy: self|oc|alignahead|lsp");
  cmd->add_option("--students", o.students, "number of student models M");
  cmd->add_option("--arch", o.arch,
                  "gcn|sage_mean|sage_gcn|sage_pool|gat");
  cmd->add_option("--layers", o.layers, "layer count H");
  cmd->add_option("--hidden", o.hidden,
                  "hidden widths (one value is replicated to H-1 layers)");
  cmd->add_option("--heads", o.heads,
                  "GAT attention heads (one value replicated to H layers)");
  cmd->add_option("--alpha", o.alpha, "structure loss weight");
  cmd->add_option("--kernel", o.kernel,
                  "euclidean|linear|poly|rbf (preset default)");
  cmd->add_option("--sigma", o.sigma, "rbf kernel sigma");
  cmd->add_option("--poly-c", o.poly_c, "poly kernel offset");
  cmd->add_option("--poly-d", o.poly_d, "poly kernel degree");
  cmd->add_flag("--negate-euclidean", o.negate_euclidean,
                "flip the euclidean kernel sign so near neighbors dominate");
  cmd->add_option("--activation", o.activation,
                  "relu|elu (default relu; gat defaults to elu)");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--preset", o.preset,
                  "transductive (lr 0.001, wd 5e-4, 200 epochs, euclidean) or "
                  "inductive (lr 0.005, wd 0, 300 epochs, rbf)");
  cmd->add_option("--epochs", o.epochs, "override preset epoch count");
  cmd->add_option("--lr", o.lr, "override preset learning rate");
  cmd->add_option("--weight-decay", o.weight_decay,
                  "override preset weight decay");
  cmd->add_flag("--fresh-targets", o.fresh_targets,
                "recompute peer structures before each student update instead "
                "of once per epoch");
  cmd->add_option("--teacher", o.teacher,
                  "teacher checkpoint (lsp strategy only)");
}

struct ResolvedTrain {
  align::DatasetBundle bundle;
  align::TrainConfig config;
};

ResolvedTrain resolve_train(const CLI::App* cmd, const ModelOpts& o) {
  ResolvedTrain r;
  r.bundle = align::load_bundle(o.data);
  if (r.bundle.train_graphs.empty())
    throw std::invalid_argument("train: dataset has no training graphs");
  const align::Graph& sample = r.bundle.train_graphs.front();

  const bool transductive_preset = [&] {
    if (o.preset == "transductive") return true;
    if (o.preset == "inductive") return false;
    throw std::invalid_argument("unknown preset \"" + o.preset + "\"");
  }();

  align::TrainConfig& c = r.config;
  c.num_students = o.students;
  c.epochs = cmd->count("--epochs") ? o.epochs
                                    : (transductive_preset ? 200 : 300);
  c.learning_rate =
      cmd->count("--lr") ? o.lr : (transductive_preset ? 0.001 : 0.005);
  c.weight_decay = cmd->count("--weight-decay")
                       ? o.weight_decay
                       : (transductive_preset ? 0.0005 : 0.0);
  c.seed = o.seed;
  c.fresh_targets = o.fresh_targets;

  c.strategy.kind = align::strategy_from_name(o.strategy);
  c.strategy.alpha = o.alpha;
  std::string kernel_name =
      cmd->count("--kernel") ? o.kernel
                             : (transductive_preset ? "euclidean" : "rbf");
  if (kernel_name == "euclidean")
    c.strategy.kernel.kind = align::KernelKind::kEuclidean;
  else if (kernel_name == "linear")
    c.strategy.kernel.kind = align::KernelKind::kLinear;
  else if (kernel_name == "poly")
    c.strategy.kernel.kind = align::KernelKind::kPoly;
  else if (kernel_name == "rbf")
    c.strategy.kernel.kind = align::KernelKind::kRbf;
  else
    throw std::invalid_argument("unknown kernel \"" + kernel_name + "\"");
  c.strategy.kernel.rbf_sigma = o.sigma;
  c.strategy.kernel.poly_c = o.poly_c;
  c.strategy.kernel.poly_d = o.poly_d;
  c.strategy.kernel.negate_euclidean = o.negate_euclidean;
  if (c.strategy.kind == align::StrategyKind::kOfflineLsp) {
    if (o.teacher.empty())
      throw std::invalid_argument("--teacher is required for --strategy lsp");
    c.strategy.teacher =
        std::make_shared<align::StudentModel>(align::load_model(o.teacher));
  }

  align::ModelConfig& m = c.model;
  m.arch = align::arch_from_name(o.arch);
  m.num_layers = o.layers;
  std::vector<std::size_t> hidden = o.hidden.empty()
                                        ? std::vector<std::size_t>{32}
                                        : o.hidden;
  if (hidden.size() == 1 && o.layers >= 1)
    hidden.assign(o.layers - 1, hidden.front());
  m.hidden_dims = hidden;
  if (m.arch == align::Arch::kGat) {
    std::vector<std::size_t> heads =
        o.heads.empty() ? std::vector<std::size_t>{2} : o.heads;
    if (heads.size() == 1) heads.assign(o.layers, heads.front());
    m.gat_heads = heads;
  } else if (!o.heads.empty()) {
    throw std::invalid_argument("--heads only applies to --arch gat");
  }
  m.input_dim = sample.feature_dim();
  m.output_dim = sample.labels.num_classes;
  m.task = sample.labels.multi_label ? align::Task::kMultiLabel
                                     : align::Task::kSingleLabel;
  if (cmd->count("--activation")) {
    if (o.activation == "relu")
      m.activation = align::Activation::kRelu;
    else if (o.activation == "elu")
      m.activation = align::Activation::kElu;
    else
      throw std::invalid_argument("unknown activation \"" + o.activation + "\"");
  } else {
    m.activation = m.arch == align::Arch::kGat ? align::Activation::kElu
                                               : align::Activation::kRelu;
  }
  c.validate();
  return r;
}

json model_config_json(const CLI::App* cmd, const ModelOpts& o,
                       const align::TrainConfig& c) {
  return {{"data", o.data},
          {"strategy", align::strategy_name(c.strategy.kind)},
          {"students", c.num_students},
          {"arch", align::arch_name(c.model.arch)},
          {"layers", c.model.num_layers},
          {"hidden", c.model.hidden_dims},
          {"heads", c.model.gat_heads},
          {"alpha", c.strategy.alpha},
          {"kernel", align::kernel_name(c.strategy.kernel.kind)},
          {"sigma", c.strategy.kernel.rbf_sigma},
          {"poly_c", c.strategy.kernel.poly_c},
          {"poly_d", c.strategy.kernel.poly_d},
          {"negate_euclidean", c.strategy.kernel.negate_euclidean},
          {"activation",
           c.model.activation == align::Activation::kRelu ? "relu" : "elu"},
          {"seed", c.seed},
          {"preset", o.preset},
          {"epochs", c.epochs},
          {"lr", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"fresh_targets", c.fresh_targets},
          {"teacher", o.teacher}};
}

json summarize(const align::TrainOutput& out, int students) {
  auto test = align::final_test_metrics(out.report, students);
  auto val = align::final_val_metrics(out.report, students);
  int best = 0;
  for (int k = 1; k < students; ++k)
    if (test[std::size_t(k)] > test[std::size_t(best)]) best = k;
  double max_val = 0.0;
  for (double v : val) max_val = std::max(max_val, v);
  return {{"test_metrics", test},
          {"val_metrics", val},
          {"max_test_metric", test[std::size_t(best)]},
          {"max_val_metric", max_val},
          {"max_student", best}};
}

struct TrainCmdOpts {
  ModelOpts model;
  std::string out;
};

int run_train(const CLI::App* cmd, const TrainCmdOpts& o) {
  const fs::path dir = resolve_out(o.out);
  fs::create_directories(dir);
  ResolvedTrain r = resolve_train(cmd, o.model);

  RunManifest manifest;
  manifest.command = "train";
  manifest.seed = r.config.seed;
  manifest.source_revision = ALIGNAHEAD_SOURCE_REV;
  manifest.started_at = align::iso_timestamp();
  manifest.config = model_config_json(cmd, o.model, r.config);

  align::TrainOutput out = align::train(r.bundle, r.config);

  align::write_report_jsonl(out.report, dir / "report.jsonl");
  manifest.outputs.push_back("report.jsonl");
  for (std::size_t k = 0; k < out.students.size(); ++k) {
    const std::string name = "student_" + std::to_string(k) + ".json";
    align::save_model(out.students[k], dir / name);
    manifest.outputs.push_back(name);
  }

  json summary = summarize(out, r.config.num_students);
  {
    std::ofstream f(dir / "summary.json");
    f << summary.dump(2) << "\n";
  }
  manifest.outputs.push_back("summary.json");
  manifest.finished_at = align::iso_timestamp();
  write_manifest(manifest, dir);
  std::cout << summary.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// flow

struct FlowOpts {
  int students = 2;
  int layers = 3;
  std::string plan = "alignahead";
  int steps = 6;
  std::string json_path;
};

int run_flow(const FlowOpts& o) {
  if (o.students < 2)
    throw std::invalid_argument("flow: --students must be >= 2");
  if (o.layers < 1)
    throw std::invalid_argument("flow: --layers must be >= 1");
  const align::StrategyKind kind = align::strategy_from_name(o.plan);
  if (kind != align::StrategyKind::kOc &&
      kind != align::StrategyKind::kAlignahead)
    throw std::invalid_argument("flow: --plan must be oc or alignahead");

  align::PairingPlan plan = align::make_plan(kind, o.students, o.layers);
  align::FlowTrajectory tr =
      align::simulate(plan, o.students, o.layers, o.steps, o.plan);
  std::cout << align::render_table(tr);

  align::PeriodResult pr = align::period(plan, o.students, o.layers);
  switch (pr.kind) {
    case align::PeriodResult::Kind::kPeriod:
      std::cout << "period: " << pr.steps
                << " iterations (state returns to the initial assignment)\n";
      break;
    case align::PeriodResult::Kind::kCoverage:
      std::cout << "full influence coverage after " << pr.steps
                << " iterations\n";
      break;
    case align::PeriodResult::Kind::kUnbounded:
      std::cout << "no period/coverage within " << pr.bound << " iterations\n";
      break;
  }
  auto cov = align::coverage_time(plan, o.students, o.layers);
  if (cov)
    std::cout << "coverage: every slot influenced by every tag after " << *cov
              << " iterations\n";
  else
    std::cout << "coverage: never (bound "
              << 4 * o.students * o.layers << " iterations)\n";

  if (!o.json_path.empty()) {
    std::ofstream f(o.json_path);
    if (!f)
      throw std::runtime_error("flow: cannot open " + o.json_path);
    f << align::trajectory_to_json(tr).dump(2) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// sweep-alpha

struct SweepOpts {
  ModelOpts model;
  std::string out;
  std::vector<double> alphas{0.1, 0.5, 1.0, 1.5, 10.0};
  int seeds = 1;
};

int run_sweep(const CLI::App* cmd, const SweepOpts& o) {
  const fs::path dir = resolve_out(o.out);
  fs::create_directories(dir);

  RunManifest manifest;
  manifest.command = "sweep-alpha";
  manifest.seed = o.model.seed;
  manifest.source_revision = ALIGNAHEAD_SOURCE_REV;
  manifest.started_at = align::iso_timestamp();

  std::ofstream csv(dir / "sweep.csv");
  csv << "alpha,seed,max_val_metric,max_test_metric\n";
  double best = -1.0, worst = 2.0;
  json rows = json::array();
  for (double alpha : o.alphas) {
    double mean_test = 0.0;
    for (int s = 0; s < o.seeds; ++s) {
      ModelOpts m = o.model;
      m.alpha = alpha;
      m.seed = o.model.seed + std::uint64_t(s);
      ResolvedTrain r = resolve_train(cmd, m);
      r.config.strategy.alpha = alpha;  // not gated on --alpha being passed
      r.config.seed = m.seed;
      if (manifest.config.is_null())
        manifest.config = model_config_json(cmd, m, r.config);
      align::TrainOutput out = align::train(r.bundle, r.config);
      json summary = summarize(out, r.config.num_students);
      char line[160];
      std::snprintf(line, sizeof line, "%.17g,%llu,%.17g,%.17g\n", alpha,
                    static_cast<unsigned long long>(m.seed),
                    summary.at("max_val_metric").get<double>(),
                    summary.at("max_test_metric").get<double>());
      csv << line;
      mean_test += summary.at("max_test_metric").get<double>();
      rows.push_back({{"alpha", alpha},
                      {"seed", m.seed},
                      {"max_val_metric", summary.at("max_val_metric")},
                      {"max_test_metric", summary.at("max_test_metric")}});
    }
    mean_test /= double(o.seeds);
    best = std::max(best, mean_test);
    worst = std::min(worst, mean_test);
  }
  manifest.config["alphas"] = o.alphas;
  manifest.config["sweep_seeds"] = o.seeds;
  manifest.outputs.push_back("sweep.csv");
  manifest.finished_at = align::iso_timestamp();
  write_manifest(manifest, dir);

  json summary = {{"rows", rows},
                  {"metric_spread", best - worst},
                  {"best_mean_max_test_metric", best},
                  {"worst_mean_max_test_metric", worst}};
  {
    std::ofstream f(dir / "summary.json");
    f << summary.dump(2) << "\n";
  }
  std::cout << summary.dump() << "\n";
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"online cross-layer structure distillation for graph neural "
               "networks"};
  app.require_subcommand(1);

  GenerateOpts gen;
  CLI::App* cgen = app.add_subcommand(
      "generate", "generate a synthetic SBM dataset (graph JSON + bundle)");
  cgen->add_option("--out", gen.out, "output directory")->required();
  cgen->add_option("--seed", gen.seed, "generator seed");
  cgen->add_option("--nodes", gen.nodes, "nodes per graph");
  cgen->add_option("--classes", gen.classes, "class count");
  cgen->add_option("--p-in", gen.p_in, "intra-class edge probability");
  cgen->add_option("--p-out", gen.p_out, "inter-class edge probability");
  cgen->add_option("--feature-dim", gen.feature_dim, "feature width");
  cgen->add_option("--feature-shift", gen.feature_shift,
                   "class mean magnitude");
  cgen->add_option("--graphs", gen.train_graphs, "training graph count");
  cgen->add_option("--val-graphs", gen.val_graphs,
                   "validation graphs (inductive)");
  cgen->add_option("--test-graphs", gen.test_graphs, "test graphs (inductive)");

  TrainCmdOpts tr;
  CLI::App* ctrain = app.add_subcommand(
      "train", "train M student models with online structure distillation");
  add_model_flags(ctrain, tr.model);
  ctrain->add_option("--out", tr.out, "output directory")->required();

  FlowOpts fl;
  CLI::App* cflow = app.add_subcommand(
      "flow", "simulate structure-information propagation between layers");
  cflow->add_option("--students", fl.students, "student count M");
  cflow->add_option("--layers", fl.layers, "layer count H");
  cflow->add_option("--plan", fl.plan, "oc|alignahead");
  cflow->add_option("--steps", fl.steps, "iterations to simulate");
  cflow->add_option("--json", fl.json_path, "write the trajectory JSON here");

  SweepOpts sw;
  CLI::App* csweep = app.add_subcommand(
      "sweep-alpha", "train across an alpha grid and report the metric spread");
  add_model_flags(csweep, sw.model);
  csweep->add_option("--out", sw.out, "output directory")->required();
  csweep->add_option("--alphas", sw.alphas, "alpha grid");
  csweep->add_option("--seeds", sw.seeds, "seeds per alpha");

  CLI11_PARSE(app, argc, argv);
  if (cgen->parsed()) return run_generate(gen);
  if (ctrain->parsed()) return run_train(ctrain, tr);
  if (cflow->parsed()) return run_flow(fl);
  if (csweep->parsed()) return run_sweep(csweep, sw);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << json{{"error", {{"type", "invalid_argument"},
                                 {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"type", "runtime_error"},
                                 {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 3;
  }
}
