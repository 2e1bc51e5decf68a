// Copyright 2026 the alignahead authors
// SPDX-License-Identifier: Apache-2.0
//
// Cross-layer online distillation: pairing plans, the structure-preserving
// and total losses, and the alternating multi-student training loop.
//
// Target semantics: within one epoch every student's distillation targets are
// the peer local structures captured in a snapshot at the epoch start, so the
// update order of the students cannot change any student's loss. Set
// TrainConfig::fresh_targets to recompute the snapshot from current
// parameters before each student's update instead.

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "alignahead/graph.hpp"
#include "alignahead/lsp.hpp"
#include "alignahead/models.hpp"
#include "alignahead/ops.hpp"
#include "alignahead/tensor.hpp"

namespace align {

// ---------------------------------------------------------------------------
// strategies and pairing plans

enum class StrategyKind { kSelfOnly, kOc, kAlignahead, kOfflineLsp };

inline const char* strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::kSelfOnly: return "self";
    case StrategyKind::kOc: return "oc";
    case StrategyKind::kAlignahead: return "alignahead";
    case StrategyKind::kOfflineLsp: return "lsp";
  }
  return "?";
}

inline StrategyKind strategy_from_name(const std::string& s) {
  if (s == "self") return StrategyKind::kSelfOnly;
  if (s == "oc") return StrategyKind::kOc;
  if (s == "alignahead") return StrategyKind::kAlignahead;
  if (s == "lsp") return StrategyKind::kOfflineLsp;
  throw std::invalid_argument("unknown strategy \"" + s + "\"");
}

struct Strategy {
  StrategyKind kind = StrategyKind::kAlignahead;
  double alpha = 1.0;
  KernelConfig kernel;
  std::shared_ptr<const StudentModel> teacher;  // offline_lsp only

  void validate() const {
    if (alpha < 0.0)
      throw std::invalid_argument("Strategy: alpha must be >= 0");
    if ((kind == StrategyKind::kOfflineLsp) != (teacher != nullptr))
      throw std::invalid_argument(
          "Strategy: a teacher model is required exactly for the lsp strategy");
    kernel.validate();
  }
  // alpha == 0 degenerates every strategy to plain label training
  bool uses_peers() const {
    return alpha > 0.0 &&
           (kind == StrategyKind::kOc || kind == StrategyKind::kAlignahead);
  }
  bool uses_teacher() const {
    return alpha > 0.0 && kind == StrategyKind::kOfflineLsp;
  }
};

/// For each (student k, layer i), the list of (peer, peer layer) whose local
/// structure layer i of student k must match. All indices 0-based.
/// alignahead maps layer i to peer layer i+1, wrapping the last layer to the
/// first; oc maps layer i to peer layer i.
struct PairingPlan {
  int num_students = 0;
  int num_layers = 0;
  std::vector<std::vector<std::vector<std::pair<int, int>>>> targets;

  const std::vector<std::pair<int, int>>& targets_of(int student,
                                                     int layer) const {
    return targets[student][layer];
  }
};

inline PairingPlan make_plan(StrategyKind kind, int num_students,
                             int num_layers) {
  if (kind != StrategyKind::kOc && kind != StrategyKind::kAlignahead)
    throw std::invalid_argument(
        "make_plan: only oc and alignahead define pairing plans");
  if (num_students < 2)
    throw std::invalid_argument("make_plan: need at least 2 students");
  if (num_layers < 1)
    throw std::invalid_argument("make_plan: need at least 1 layer");
  PairingPlan p;
  p.num_students = num_students;
  p.num_layers = num_layers;
  p.targets.assign(num_students,
                   std::vector<std::vector<std::pair<int, int>>>(num_layers));
  for (int k = 0; k < num_students; ++k)
    for (int i = 0; i < num_layers; ++i) {
      const int j =
          kind == StrategyKind::kAlignahead ? (i + 1) % num_layers : i;
      for (int peer = 0; peer < num_students; ++peer)
        if (peer != k) p.targets[k][i].emplace_back(peer, j);
    }
  return p;
}

// ---------------------------------------------------------------------------
// structure snapshot and losses

/// Gradient-free local structures per [student][layer], extracted from a
/// forward pass run without a tape.
using StructureSnapshot = std::vector<std::vector<LocalStructure>>;

inline StructureSnapshot snapshot_structures(std::vector<StudentModel>& students,
                                             const Graph& g,
                                             const KernelConfig& kernel) {
  StructureSnapshot snap(students.size());
  for (std::size_t k = 0; k < students.size(); ++k) {
    ForwardResult r = forward(students[k], g);  // no tape active here
    snap[k].reserve(r.embeddings.size());
    for (const Tensor& emb : r.embeddings)
      snap[k].push_back(local_structure(emb.detach(), g, kernel));
  }
  return snap;
}

struct PairUse {
  int student, layer, peer, peer_layer;  // 0-based
  bool operator==(const PairUse&) const = default;
};

/// Multi-student structure loss for student k:
///   sum over layers i of 1/(M-1) * sum over peers p != k of
///   KL(snapshot[p][plan target layer] || live structure of k at layer i).
/// Requires a fresh on-tape forward of the student (layer_cache populated).
inline Tensor structure_loss(const StudentModel& student, int k,
                             const StructureSnapshot& snapshot,
                             const PairingPlan& plan, const Graph& g,
                             const KernelConfig& kernel,
                             std::vector<PairUse>* realized = nullptr) {
  if (int(student.layer_cache.size()) != plan.num_layers)
    throw std::invalid_argument(
        "structure_loss: student has " +
        std::to_string(student.layer_cache.size()) + " cached layers, plan expects " +
        std::to_string(plan.num_layers));
  for (const auto& layers : snapshot)
    if (int(layers.size()) != plan.num_layers)
      throw std::invalid_argument(
          "structure_loss: snapshot layer count does not match plan; students "
          "must share one architecture");
  const double peer_norm = 1.0 / double(plan.num_students - 1);

  Tensor total = Tensor::scalar(0.0);
  for (int i = 0; i < plan.num_layers; ++i) {
    LocalStructure live = local_structure(student.layer_cache[i], g, kernel);
    Tensor layer_acc = Tensor::scalar(0.0);
    for (const auto& [peer, peer_layer] : plan.targets_of(k, i)) {
      layer_acc = add(layer_acc,
                      structure_kl(snapshot[peer][peer_layer], live));
      if (realized) realized->push_back({k, i, peer, peer_layer});
    }
    total = add(total, scale(layer_acc, peer_norm));
  }
  return total;
}

// ---------------------------------------------------------------------------
// cross-entropy losses. An empty mask means "all nodes" (inductive graphs).

namespace detail {

inline std::size_t mask_count(const std::vector<std::uint8_t>& mask,
                              std::size_t n) {
  if (mask.empty()) return n;
  std::size_t c = 0;
  for (auto b : mask) c += b;
  return c == 0 ? n : c;
}

inline bool mask_has(const std::vector<std::uint8_t>& mask, std::size_t i) {
  if (mask.empty()) return true;
  std::size_t set = 0;
  for (auto b : mask) set += b;
  return set == 0 ? true : mask[i] != 0;
}

}  // namespace detail

/// Softmax cross-entropy averaged over masked nodes (single-label task).
inline Tensor cross_entropy_single(const Tensor& logits, const Labels& labels,
                                   const std::vector<std::uint8_t>& mask) {
  if (labels.multi_label)
    throw std::invalid_argument(
        "cross_entropy_single: labels are multi-label");
  const std::size_t n = logits.rows(), c = logits.cols();
  if (labels.single.size() != n)
    throw std::invalid_argument("cross_entropy_single: " +
                                std::to_string(labels.single.size()) +
                                " labels for " + std::to_string(n) + " rows");
  const std::size_t count = detail::mask_count(mask, n);
  Tensor pick(n, c);  // -1/count at (i, y_i) for masked nodes
  {
    auto pv = pick.mutable_values();
    for (std::size_t i = 0; i < n; ++i) {
      if (!detail::mask_has(mask, i)) continue;
      const auto y = std::size_t(labels.single[i]);
      if (y >= c)
        throw std::invalid_argument("cross_entropy_single: label " +
                                    std::to_string(y) + " out of range for " +
                                    std::to_string(c) + " classes");
      pv[i * c + y] = -1.0 / double(count);
    }
  }
  return sum(hadamard(pick, log(row_softmax(logits))));
}

/// Per-class sigmoid cross-entropy averaged over masked nodes and classes
/// (multi-label task).
inline Tensor cross_entropy_multi(const Tensor& logits, const Labels& labels,
                                  const std::vector<std::uint8_t>& mask) {
  if (!labels.multi_label)
    throw std::invalid_argument("cross_entropy_multi: labels are single-label");
  const std::size_t n = logits.rows(), c = logits.cols();
  if (labels.num_classes != c || labels.multi_hot.size() != n * c)
    throw std::invalid_argument(
        "cross_entropy_multi: label matrix does not match logits " +
        logits.shape_str());
  const double w = -1.0 / double(detail::mask_count(mask, n) * c);
  Tensor pos(n, c), neg(n, c);
  {
    auto pv = pos.mutable_values();
    auto nv = neg.mutable_values();
    for (std::size_t i = 0; i < n; ++i) {
      if (!detail::mask_has(mask, i)) continue;
      for (std::size_t j = 0; j < c; ++j) {
        if (labels.multi_hot[i * c + j])
          pv[i * c + j] = w;
        else
          nv[i * c + j] = w;
      }
    }
  }
  Tensor p = sigmoid(logits);
  Tensor one_minus = sub(Tensor(n, c, 1.0), p);
  return add(sum(hadamard(pos, log(p))), sum(hadamard(neg, log(one_minus))));
}

inline Tensor cross_entropy(const Tensor& logits, const Labels& labels,
                            const std::vector<std::uint8_t>& mask, Task task) {
  if ((task == Task::kMultiLabel) != labels.multi_label)
    throw std::invalid_argument(
        "cross_entropy: task type does not match label type");
  return task == Task::kMultiLabel
             ? cross_entropy_multi(logits, labels, mask)
             : cross_entropy_single(logits, labels, mask);
}

// ---------------------------------------------------------------------------
// total loss

struct DistillTargets {
  int self_index = 0;
  const PairingPlan* plan = nullptr;             // oc / alignahead
  const StructureSnapshot* snapshot = nullptr;   // oc / alignahead
  const LocalStructure* teacher_structure = nullptr;  // offline lsp
  int teacher_align_layer = -1;  // 0-based student layer to align (offline lsp)
  std::vector<PairUse>* realized = nullptr;
};

struct LossParts {
  Tensor total;  // on tape
  double ce = 0.0;
  double structure = 0.0;
};

/// Runs a recorded forward of the student and assembles
/// CE + alpha * structure loss according to the strategy.
inline LossParts total_loss(StudentModel& student, const Graph& g,
                            const Strategy& strategy,
                            const DistillTargets& targets) {
  strategy.validate();
  ForwardResult fwd = forward(student, g);
  LossParts parts;
  Tensor ce = cross_entropy(fwd.logits, g.labels, g.train_mask,
                            student.config.task);
  parts.ce = ce.scalar_value();

  Tensor str;
  if (strategy.uses_peers()) {
    if (!targets.plan || !targets.snapshot)
      throw std::invalid_argument(
          "total_loss: peer strategy requires a plan and a snapshot");
    str = structure_loss(student, targets.self_index, *targets.snapshot,
                         *targets.plan, g, strategy.kernel, targets.realized);
  } else if (strategy.uses_teacher()) {
    if (!targets.teacher_structure || targets.teacher_align_layer < 0)
      throw std::invalid_argument(
          "total_loss: lsp strategy requires a teacher structure and layer");
    LocalStructure live = local_structure(
        student.layer_cache[std::size_t(targets.teacher_align_layer)], g,
        strategy.kernel);
    str = structure_kl(*targets.teacher_structure, live);
  }

  if (str.defined()) {
    parts.structure = str.scalar_value();
    parts.total = add(ce, scale(str, strategy.alpha));
  } else {
    parts.total = ce;
  }
  return parts;
}

// ---------------------------------------------------------------------------
// evaluation

namespace detail {

struct MicroCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
  double f1() const {
    const double denom = double(2 * tp + fp + fn);
    return denom == 0.0 ? 1.0 : 2.0 * double(tp) / denom;
  }
};

inline void accumulate_multi(const Tensor& logits, const Labels& labels,
                             const std::vector<std::uint8_t>& mask,
                             MicroCounts& mc) {
  const std::size_t n = logits.rows(), c = logits.cols();
  auto lv = logits.values();
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask_has(mask, i)) continue;
    for (std::size_t j = 0; j < c; ++j) {
      const bool pred = lv[i * c + j] >= 0.0;  // sigmoid >= 0.5
      const bool truth = labels.multi_hot[i * c + j] != 0;
      if (pred && truth)
        ++mc.tp;
      else if (pred && !truth)
        ++mc.fp;
      else if (!pred && truth)
        ++mc.fn;
    }
  }
}

inline std::pair<std::size_t, std::size_t> accumulate_single(
    const Tensor& logits, const Labels& labels,
    const std::vector<std::uint8_t>& mask) {
  const std::size_t n = logits.rows(), c = logits.cols();
  auto lv = logits.values();
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask_has(mask, i)) continue;
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j)
      if (lv[i * c + j] > lv[i * c + best]) best = j;  // ties: lowest index
    correct += best == std::size_t(labels.single[i]);
    ++total;
  }
  return {correct, total};
}

}  // namespace detail

/// Accuracy (single-label) or micro-F1 at 0.5 (multi-label) over the masked
/// nodes of one graph; empty mask means all nodes.
inline double evaluate(StudentModel& model, const Graph& g,
                       const std::vector<std::uint8_t>& mask) {
  ForwardResult r = forward(model, g);  // caller ensures no tape is active
  if (model.config.task == Task::kMultiLabel) {
    detail::MicroCounts mc;
    detail::accumulate_multi(r.logits, g.labels, mask, mc);
    return mc.f1();
  }
  auto [correct, total] = detail::accumulate_single(r.logits, g.labels, mask);
  return total == 0 ? 0.0 : double(correct) / double(total);
}

/// Pooled metric over a list of graphs (inductive evaluation, all nodes).
inline double evaluate(StudentModel& model, const std::vector<Graph>& graphs) {
  if (model.config.task == Task::kMultiLabel) {
    detail::MicroCounts mc;
    for (const Graph& g : graphs) {
      ForwardResult r = forward(model, g);
      detail::accumulate_multi(r.logits, g.labels, {}, mc);
    }
    return mc.f1();
  }
  std::size_t correct = 0, total = 0;
  for (const Graph& g : graphs) {
    ForwardResult r = forward(model, g);
    auto [c, t] = detail::accumulate_single(r.logits, g.labels, {});
    correct += c;
    total += t;
  }
  return total == 0 ? 0.0 : double(correct) / double(total);
}

// ---------------------------------------------------------------------------
// Adam

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<NamedParam>& params, double lr,
                double weight_decay, AdamConfig cfg = {})
      : params_(&params), lr_(lr), wd_(weight_decay), cfg_(cfg) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].value.size(), 0.0);
      v_[i].assign(params[i].value.size(), 0.0);
    }
  }

  /// One update from the gradients currently accumulated on the parameters;
  /// clears them afterwards. Weight decay is classic L2 added to the
  /// gradient.
  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (std::size_t i = 0; i < params_->size(); ++i) {
      Tensor& p = (*params_)[i].value;
      p.ensure_grad();
      auto g = p.grad();
      auto w = p.mutable_values();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        const double grad = g[j] + wd_ * w[j];
        m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * grad;
        v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * grad * grad;
        w[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg_.eps);
      }
      p.zero_grad();
    }
  }

 private:
  std::vector<NamedParam>* params_;
  double lr_, wd_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::uint64_t t_ = 0;
};

// ---------------------------------------------------------------------------
// training loop

struct TrainConfig {
  int num_students = 2;
  int epochs = 200;
  double learning_rate = 0.001;
  double weight_decay = 0.0005;
  AdamConfig adam;
  std::uint64_t seed = 0;
  Strategy strategy;
  ModelConfig model;
  bool fresh_targets = false;
  bool reverse_update_order = false;  // diagnostic knob; a no-op by design

  void validate() const {
    if (num_students < 1)
      throw std::invalid_argument("TrainConfig: num_students must be >= 1");
    if (num_students < 2 && strategy.kind != StrategyKind::kSelfOnly &&
        strategy.kind != StrategyKind::kOfflineLsp)
      throw std::invalid_argument(
          "TrainConfig: peer strategies need at least 2 students");
    if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs < 0");
    strategy.validate();
    model.validate();
  }
};

struct EpochRecord {
  int epoch = 0;
  int student = 0;
  double ce_loss = 0.0;
  double structure_loss = 0.0;
  double total_loss = 0.0;
  double val_metric = 0.0;
  double test_metric = 0.0;
  std::int64_t wall_ms = 0;
};

struct TrainReport {
  std::vector<EpochRecord> records;  // epoch-major, student-minor
};

struct TrainOutput {
  TrainReport report;
  std::vector<StudentModel> students;
};

namespace detail {

inline void check_finite_loss(const LossParts& parts, int epoch, int student) {
  auto bad = [](double v) { return !std::isfinite(v); };
  const char* component = nullptr;
  if (bad(parts.ce)) component = "cross-entropy";
  else if (bad(parts.structure)) component = "structure";
  else if (bad(parts.total.scalar_value())) component = "total";
  if (component)
    throw std::runtime_error("train: non-finite " + std::string(component) +
                             " loss at epoch " + std::to_string(epoch) +
                             " for student " + std::to_string(student));
}

/// For offline LSP we align exactly one layer per model: the last hidden
/// layer of each (the output layer when the model has no hidden layers).
inline int last_hidden_layer(const ModelConfig& c) {
  return c.num_layers >= 2 ? int(c.num_layers) - 2 : 0;
}

}  // namespace detail

inline TrainOutput train(const DatasetBundle& bundle, const TrainConfig& config) {
  config.validate();
  const bool transductive = bundle.mode == DatasetMode::kTransductive;
  if (!transductive && bundle.train_graphs.empty())
    throw std::invalid_argument("train: inductive bundle has no train graphs");

  std::mt19937_64 master(config.seed);
  std::vector<StudentModel> students;
  students.reserve(config.num_students);
  for (int k = 0; k < config.num_students; ++k)
    students.push_back(init_parameters(config.model, master()));
  const std::uint64_t shuffle_seed = master();

  std::vector<AdamOptimizer> opts;
  opts.reserve(students.size());
  for (auto& s : students)
    opts.emplace_back(s.params, config.learning_rate, config.weight_decay,
                      config.adam);

  PairingPlan plan;
  if (config.strategy.uses_peers())
    plan = make_plan(config.strategy.kind, config.num_students,
                     int(config.model.num_layers));

  // Offline-LSP teacher structures are constant; compute once per graph.
  std::vector<LocalStructure> teacher_structs(bundle.train_graphs.size());
  int student_align_layer = -1;
  if (config.strategy.uses_teacher()) {
    StudentModel teacher = *config.strategy.teacher;  // scratch copy
    const int t_layer = detail::last_hidden_layer(teacher.config);
    student_align_layer = detail::last_hidden_layer(config.model);
    for (std::size_t gi = 0; gi < bundle.train_graphs.size(); ++gi) {
      ForwardResult r = forward(teacher, bundle.train_graphs[gi]);
      teacher_structs[gi] = local_structure(
          r.embeddings[std::size_t(t_layer)].detach(), bundle.train_graphs[gi],
          config.strategy.kernel);
    }
  }

  std::mt19937_64 shuffle_rng(shuffle_seed);
  std::vector<std::size_t> graph_order(bundle.train_graphs.size());
  std::iota(graph_order.begin(), graph_order.end(), 0);

  TrainOutput out;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (!transductive)
      std::shuffle(graph_order.begin(), graph_order.end(), shuffle_rng);

    std::vector<double> ce_sum(students.size(), 0.0);
    std::vector<double> str_sum(students.size(), 0.0);
    std::vector<double> tot_sum(students.size(), 0.0);
    std::vector<std::int64_t> wall(students.size(), 0);

    for (std::size_t oi = 0; oi < graph_order.size(); ++oi) {
      const std::size_t gi = transductive ? 0 : graph_order[oi];
      const Graph& g = bundle.train_graphs[gi];

      StructureSnapshot snapshot;
      if (config.strategy.uses_peers() && !config.fresh_targets)
        snapshot = snapshot_structures(students, g, config.strategy.kernel);

      for (int step = 0; step < config.num_students; ++step) {
        const int k = config.reverse_update_order
                          ? config.num_students - 1 - step
                          : step;
        const auto t0 = std::chrono::steady_clock::now();
        if (config.strategy.uses_peers() && config.fresh_targets)
          snapshot = snapshot_structures(students, g, config.strategy.kernel);

        DistillTargets targets;
        targets.self_index = k;
        targets.plan = &plan;
        targets.snapshot = &snapshot;
        if (config.strategy.uses_teacher()) {
          targets.teacher_structure = &teacher_structs[gi];
          targets.teacher_align_layer = student_align_layer;
        }

        Tape tape;
        LossParts parts = total_loss(students[std::size_t(k)], g,
                                     config.strategy, targets);
        detail::check_finite_loss(parts, epoch, k);
        tape.backward(parts.total);
        opts[std::size_t(k)].step();

        ce_sum[std::size_t(k)] += parts.ce;
        str_sum[std::size_t(k)] += parts.structure;
        tot_sum[std::size_t(k)] += parts.total.scalar_value();
        wall[std::size_t(k)] +=
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count();
      }
    }

    const double denom = transductive ? 1.0 : double(graph_order.size());
    for (std::size_t k = 0; k < students.size(); ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      EpochRecord rec;
      rec.epoch = epoch;
      rec.student = int(k);
      rec.ce_loss = ce_sum[k] / denom;
      rec.structure_loss = str_sum[k] / denom;
      rec.total_loss = tot_sum[k] / denom;
      if (transductive) {
        const Graph& g = bundle.transductive_graph();
        rec.val_metric = evaluate(students[k], g, g.val_mask);
        rec.test_metric = evaluate(students[k], g, g.test_mask);
      } else {
        rec.val_metric = evaluate(students[k], bundle.val_graphs);
        rec.test_metric = evaluate(students[k], bundle.test_graphs);
      }
      rec.wall_ms = wall[k] +
                    std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
      out.report.records.push_back(rec);
    }
  }

  out.students = std::move(students);
  return out;
}

// ---------------------------------------------------------------------------
// report serialization: JSONL, one record per (epoch, student)

inline nlohmann::json record_to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},         {"student", r.student},
          {"ce_loss", r.ce_loss},     {"structure_loss", r.structure_loss},
          {"total_loss", r.total_loss}, {"val_metric", r.val_metric},
          {"test_metric", r.test_metric}, {"wall_ms", r.wall_ms}};
}

inline void write_report_jsonl(const TrainReport& report,
                               const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("write_report_jsonl: cannot open " +
                             path.string());
  for (const auto& r : report.records) out << record_to_json(r).dump() << "\n";
}

/// Final per-student metrics: the test metric of each student's last epoch.
inline std::vector<double> final_test_metrics(const TrainReport& report,
                                              int num_students) {
  std::vector<double> m(std::size_t(num_students), 0.0);
  for (const auto& r : report.records)
    m[std::size_t(r.student)] = r.test_metric;
  return m;
}

inline std::vector<double> final_val_metrics(const TrainReport& report,
                                             int num_students) {
  std::vector<double> m(std::size_t(num_students), 0.0);
  for (const auto& r : report.records)
    m[std::size_t(r.student)] = r.val_metric;
  return m;
}

}  // namespace align
