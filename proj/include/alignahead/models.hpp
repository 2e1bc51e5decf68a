// Copyright 2026 the alignahead authors
// SPDX-License-Identifier: Apache-2.0
//
// Student GNN architectures. Every model exposes its per-layer node
// embeddings (post-activation; the output layer is linear, so its embedding
// equals the logits) for local-structure extraction.
//
// Conventions, following the architectures' original formulations:
//  - GCN: symmetric normalization over the self-loop-augmented adjacency.
//  - SAGE-mean: concat(self, mean of neighbors), then linear + activation.
//  - SAGE-GCN: mean over neighborhood-plus-self, no self concatenation.
//  - SAGE-pool: concat(self, elementwise max of a one-layer ReLU transform
//    of the neighbors).
//  - GAT: per-head attention over neighborhood-plus-self with LeakyReLU(0.2)
//    logits; heads concatenate on hidden layers and average on the output
//    layer. Hidden widths are per head.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "alignahead/graph.hpp"
#include "alignahead/ops.hpp"
#include "alignahead/tensor.hpp"

namespace align {

enum class Arch { kGcn, kSageMean, kSageGcn, kSagePool, kGat };
enum class Activation { kRelu, kElu };
enum class Task { kSingleLabel, kMultiLabel };

inline const char* arch_name(Arch a) {
  switch (a) {
    case Arch::kGcn: return "gcn";
    case Arch::kSageMean: return "sage_mean";
    case Arch::kSageGcn: return "sage_gcn";
    case Arch::kSagePool: return "sage_pool";
    case Arch::kGat: return "gat";
  }
  return "?";
}

inline Arch arch_from_name(const std::string& s) {
  if (s == "gcn") return Arch::kGcn;
  if (s == "sage_mean") return Arch::kSageMean;
  if (s == "sage_gcn") return Arch::kSageGcn;
  if (s == "sage_pool") return Arch::kSagePool;
  if (s == "gat") return Arch::kGat;
  throw std::invalid_argument("unknown architecture \"" + s + "\"");
}

struct ModelConfig {
  Arch arch = Arch::kGcn;
  std::size_t num_layers = 3;            // H
  std::vector<std::size_t> hidden_dims;  // H-1 widths (per head for GAT)
  std::vector<std::size_t> gat_heads;    // H entries, GAT only
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  Activation activation = Activation::kRelu;
  Task task = Task::kSingleLabel;

  void validate() const {
    if (num_layers < 1)
      throw std::invalid_argument("ModelConfig: num_layers must be >= 1");
    if (hidden_dims.size() != num_layers - 1)
      throw std::invalid_argument(
          "ModelConfig: hidden_dims must have num_layers-1 entries, got " +
          std::to_string(hidden_dims.size()));
    if (arch == Arch::kGat) {
      if (gat_heads.size() != num_layers)
        throw std::invalid_argument(
            "ModelConfig: gat_heads must have num_layers entries for gat");
      for (auto h : gat_heads)
        if (h == 0)
          throw std::invalid_argument("ModelConfig: gat_heads entries must be >= 1");
    } else if (!gat_heads.empty()) {
      throw std::invalid_argument(
          "ModelConfig: gat_heads only applies to arch gat");
    }
    if (input_dim == 0 || output_dim == 0)
      throw std::invalid_argument("ModelConfig: input_dim and output_dim must be set");
  }

  // width of the tensor flowing out of layer l (0-based)
  std::size_t layer_output_width(std::size_t l) const {
    const std::size_t base = l + 1 < num_layers ? hidden_dims[l] : output_dim;
    if (arch == Arch::kGat && l + 1 < num_layers) return base * gat_heads[l];
    return base;
  }
  std::size_t layer_input_width(std::size_t l) const {
    return l == 0 ? input_dim : layer_output_width(l - 1);
  }
};

struct NamedParam {
  std::string name;
  Tensor value;
};

struct ForwardResult {
  std::vector<Tensor> embeddings;  // H entries, post-activation
  Tensor logits;                   // N x output_dim, pre-softmax/sigmoid
  // GAT only: attention coefficients per layer and head, aligned with the
  // self-loop-augmented CSR edge order.
  std::vector<std::vector<Tensor>> attention;
};

struct StudentModel {
  ModelConfig config;
  std::vector<NamedParam> params;
  std::vector<Tensor> layer_cache;  // embeddings from the latest forward

  Tensor& param(const std::string& name) {
    for (auto& p : params)
      if (p.name == name) return p.value;
    throw std::invalid_argument("StudentModel: no parameter \"" + name + "\"");
  }
  const Tensor& param(const std::string& name) const {
    return const_cast<StudentModel*>(this)->param(name);
  }
};

// ---------------------------------------------------------------------------
// initialization

namespace detail {

inline Tensor glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                     bool requires_grad = true) {
  const double a = std::sqrt(6.0 / double(rows + cols));
  std::uniform_real_distribution<double> u(-a, a);
  Tensor t(rows, cols, 0.0, requires_grad);
  for (auto& v : t.mutable_values()) v = u(rng);
  return t;
}

}  // namespace detail

/// Glorot-uniform weights, zero biases, deterministic per seed.
inline StudentModel init_parameters(const ModelConfig& config,
                                    std::uint64_t seed) {
  config.validate();
  StudentModel m;
  m.config = config;
  std::mt19937_64 rng(seed);
  auto push = [&](const std::string& name, Tensor t) {
    m.params.push_back({name, std::move(t)});
  };
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const std::string prefix = "layer" + std::to_string(l) + ".";
    const std::size_t din = config.layer_input_width(l);
    const std::size_t dout_base =
        l + 1 < config.num_layers ? config.hidden_dims[l] : config.output_dim;
    switch (config.arch) {
      case Arch::kGcn:
      case Arch::kSageGcn:
        push(prefix + "weight", detail::glorot(din, dout_base, rng));
        break;
      case Arch::kSageMean:
        push(prefix + "weight", detail::glorot(2 * din, dout_base, rng));
        break;
      case Arch::kSagePool:
        push(prefix + "pool_weight", detail::glorot(din, din, rng));
        push(prefix + "pool_bias", Tensor(1, din, 0.0, true));
        push(prefix + "weight", detail::glorot(2 * din, dout_base, rng));
        break;
      case Arch::kGat:
        for (std::size_t h = 0; h < config.gat_heads[l]; ++h) {
          const std::string hp = prefix + "head" + std::to_string(h) + ".";
          push(hp + "weight", detail::glorot(din, dout_base, rng));
          push(hp + "att_src", detail::glorot(dout_base, 1, rng));
          push(hp + "att_dst", detail::glorot(dout_base, 1, rng));
        }
        break;
    }
    push(prefix + "bias", Tensor(1, config.layer_output_width(l), 0.0, true));
  }
  return m;
}

// ---------------------------------------------------------------------------
// adjacency preprocessing shared by the layer kernels

namespace detail {

struct AugmentedCsr {
  std::vector<std::size_t> offsets;    // N+1, slices include the self edge
  std::vector<std::uint32_t> targets;  // sorted, self included
  std::vector<std::uint32_t> sources;  // row owner per entry
};

inline AugmentedCsr self_loop_csr(const Graph& g) {
  AugmentedCsr a;
  const std::size_t n = g.num_nodes;
  a.offsets.assign(n + 1, 0);
  a.targets.reserve(g.csr_targets.size() + n);
  for (std::size_t i = 0; i < n; ++i) {
    bool placed = false;
    for (std::uint32_t t : g.neighbors(i)) {
      if (!placed && t > std::uint32_t(i)) {
        a.targets.push_back(std::uint32_t(i));
        placed = true;
      }
      a.targets.push_back(t);
    }
    if (!placed) a.targets.push_back(std::uint32_t(i));
    a.offsets[i + 1] = a.targets.size();
  }
  a.sources.resize(a.targets.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t e = a.offsets[i]; e < a.offsets[i + 1]; ++e)
      a.sources[e] = std::uint32_t(i);
  return a;
}

inline std::vector<double> gcn_coeffs(const Graph& g, const AugmentedCsr& a) {
  std::vector<double> inv_sqrt_deg(g.num_nodes);
  for (std::size_t i = 0; i < g.num_nodes; ++i)
    inv_sqrt_deg[i] = 1.0 / std::sqrt(double(g.degree(i) + 1));
  std::vector<double> c(a.targets.size());
  for (std::size_t e = 0; e < a.targets.size(); ++e)
    c[e] = inv_sqrt_deg[a.sources[e]] * inv_sqrt_deg[a.targets[e]];
  return c;
}

inline std::vector<double> mean_coeffs(const Graph& g, const AugmentedCsr& a) {
  std::vector<double> c(a.targets.size());
  for (std::size_t e = 0; e < a.targets.size(); ++e)
    c[e] = 1.0 / double(g.degree(a.sources[e]) + 1);
  return c;
}

inline Tensor apply_activation(const Tensor& x, Activation act) {
  return act == Activation::kRelu ? relu(x) : elu(x);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// forward

inline ForwardResult forward(StudentModel& model, const Graph& g) {
  const ModelConfig& cfg = model.config;
  cfg.validate();
  if (g.feature_dim() != cfg.input_dim)
    throw std::invalid_argument(
        "forward: graph features have width " +
        std::to_string(g.feature_dim()) + ", model expects " +
        std::to_string(cfg.input_dim));

  detail::AugmentedCsr aug;  // built on demand
  std::vector<double> gcn_c, mean_c;
  const bool needs_aug = cfg.arch == Arch::kGcn || cfg.arch == Arch::kSageGcn ||
                         cfg.arch == Arch::kGat;
  if (needs_aug) {
    aug = detail::self_loop_csr(g);
    if (cfg.arch == Arch::kGcn) gcn_c = detail::gcn_coeffs(g, aug);
    if (cfg.arch == Arch::kSageGcn) mean_c = detail::mean_coeffs(g, aug);
  }

  ForwardResult out;
  Tensor x = g.features;
  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const bool last = l + 1 == cfg.num_layers;
    const std::string prefix = "layer" + std::to_string(l) + ".";
    Tensor z;
    switch (cfg.arch) {
      case Arch::kGcn: {
        Tensor prop = spmm(aug.offsets, aug.targets, gcn_c, x);
        z = matmul(prop, model.param(prefix + "weight"));
        break;
      }
      case Arch::kSageGcn: {
        Tensor prop = spmm(aug.offsets, aug.targets, mean_c, x);
        z = matmul(prop, model.param(prefix + "weight"));
        break;
      }
      case Arch::kSageMean: {
        Tensor nb = segment_aggregate(x, g.csr_offsets, g.csr_targets,
                                      SegmentMode::kMean);
        z = matmul(concat_cols(x, nb), model.param(prefix + "weight"));
        break;
      }
      case Arch::kSagePool: {
        Tensor t = relu(add(matmul(x, model.param(prefix + "pool_weight")),
                            model.param(prefix + "pool_bias")));
        Tensor pooled = segment_aggregate(t, g.csr_offsets, g.csr_targets,
                                          SegmentMode::kMax);
        z = matmul(concat_cols(x, pooled), model.param(prefix + "weight"));
        break;
      }
      case Arch::kGat: {
        const std::size_t heads = cfg.gat_heads[l];
        std::vector<Tensor> head_outs(heads);
        std::vector<Tensor> head_att(heads);
        for (std::size_t h = 0; h < heads; ++h) {
          const std::string hp = prefix + "head" + std::to_string(h) + ".";
          Tensor wh = matmul(x, model.param(hp + "weight"));
          Tensor s = matmul(wh, model.param(hp + "att_src"));
          Tensor t = matmul(wh, model.param(hp + "att_dst"));
          Tensor logits_e = leaky_relu(
              add(gather_rows(s, aug.sources), gather_rows(t, aug.targets)),
              0.2);
          Tensor att = segment_softmax(logits_e, aug.offsets);
          Tensor msg = scale_rows(gather_rows(wh, aug.targets), att);
          head_outs[h] = segment_sum(msg, aug.offsets);
          head_att[h] = att;
        }
        if (last) {
          z = head_outs[0];
          for (std::size_t h = 1; h < heads; ++h) z = add(z, head_outs[h]);
          if (heads > 1) z = scale(z, 1.0 / double(heads));
        } else {
          z = head_outs[0];
          for (std::size_t h = 1; h < heads; ++h)
            z = concat_cols(z, head_outs[h]);
        }
        out.attention.push_back(std::move(head_att));
        break;
      }
    }
    z = add(z, model.param(prefix + "bias"));
    x = last ? z : detail::apply_activation(z, cfg.activation);
    out.embeddings.push_back(x);
  }
  out.logits = x;
  model.layer_cache = out.embeddings;
  return out;
}

// ---------------------------------------------------------------------------
// checkpoints: JSON of the config plus named parameter arrays

inline nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"arch", arch_name(c.arch)},
          {"num_layers", c.num_layers},
          {"hidden_dims", c.hidden_dims},
          {"gat_heads", c.gat_heads},
          {"input_dim", c.input_dim},
          {"output_dim", c.output_dim},
          {"activation", c.activation == Activation::kRelu ? "relu" : "elu"},
          {"task", c.task == Task::kSingleLabel ? "single_label" : "multi_label"}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.arch = arch_from_name(j.at("arch").get<std::string>());
  c.num_layers = j.at("num_layers").get<std::size_t>();
  c.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
  c.gat_heads = j.at("gat_heads").get<std::vector<std::size_t>>();
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.output_dim = j.at("output_dim").get<std::size_t>();
  const auto act = j.at("activation").get<std::string>();
  if (act == "relu")
    c.activation = Activation::kRelu;
  else if (act == "elu")
    c.activation = Activation::kElu;
  else
    throw std::runtime_error("config_from_json: unknown activation \"" + act +
                             "\"");
  const auto task = j.at("task").get<std::string>();
  if (task == "single_label")
    c.task = Task::kSingleLabel;
  else if (task == "multi_label")
    c.task = Task::kMultiLabel;
  else
    throw std::runtime_error("config_from_json: unknown task \"" + task +
                             "\"");
  return c;
}

inline void save_model(const StudentModel& m,
                       const std::filesystem::path& path) {
  nlohmann::json j;
  j["config"] = config_to_json(m.config);
  nlohmann::json params = nlohmann::json::object();
  for (const auto& p : m.params) {
    params[p.name] = {{"rows", p.value.rows()},
                      {"cols", p.value.cols()},
                      {"values", std::vector<double>(p.value.values().begin(),
                                                     p.value.values().end())}};
  }
  j["params"] = std::move(params);
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("save_model: cannot open " + path.string());
  out << j.dump() << "\n";
}

inline StudentModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("load_model: cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("load_model: " + path.string() + ": " + e.what());
  }
  StudentModel m = init_parameters(config_from_json(j.at("config")), 0);
  for (auto& p : m.params) {
    const auto& jp = j.at("params").at(p.name);
    const auto rows = jp.at("rows").get<std::size_t>();
    const auto cols = jp.at("cols").get<std::size_t>();
    if (rows != p.value.rows() || cols != p.value.cols())
      throw std::runtime_error("load_model: parameter \"" + p.name +
                               "\" has shape " + std::to_string(rows) + "x" +
                               std::to_string(cols) + ", expected " +
                               p.value.shape_str());
    const auto vals = jp.at("values").get<std::vector<double>>();
    std::copy(vals.begin(), vals.end(), p.value.mutable_values().begin());
  }
  return m;
}

}  // namespace align
