// Copyright 2026 the alignahead authors
// SPDX-License-Identifier: Apache-2.0
//
// CSR graph storage, the graph JSON file format, synthetic SBM generation and
// dataset bundles for transductive/inductive training.
//
// Storage invariants: undirected ((i,j) present iff (j,i) present), no
// duplicate edges, no self-loops (models that need self-loops add them
// internally), CSR target slices sorted ascending, masks disjoint.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "alignahead/tensor.hpp"

namespace align {

struct Labels {
  bool multi_label = false;
  std::size_t num_classes = 0;
  std::vector<std::int64_t> single;     // N entries, class index
  std::vector<std::uint8_t> multi_hot;  // N*C row-major 0/1
};

struct Graph {
  std::size_t num_nodes = 0;
  std::vector<std::size_t> csr_offsets;    // N+1
  std::vector<std::uint32_t> csr_targets;  // 2|E|, sorted within each slice
  Tensor features;                         // N x F
  Labels labels;
  std::vector<std::uint8_t> train_mask, val_mask, test_mask;  // length N

  std::size_t num_edges() const { return csr_targets.size() / 2; }
  std::size_t feature_dim() const { return features.cols(); }
  std::size_t degree(std::size_t i) const {
    return csr_offsets[i + 1] - csr_offsets[i];
  }
  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return std::span<const std::uint32_t>(csr_targets)
        .subspan(csr_offsets[i], degree(i));
  }
  std::size_t non_isolated_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < num_nodes; ++i)
      if (degree(i) > 0) ++n;
    return n;
  }
  std::vector<std::uint32_t> mask_ids(const std::vector<std::uint8_t>& m) const {
    std::vector<std::uint32_t> ids;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i]) ids.push_back(std::uint32_t(i));
    return ids;
  }
};

/// Sorted neighbor ids of `node`, self excluded.
inline std::vector<std::uint32_t> neighbor_slices(const Graph& g,
                                                  std::size_t node) {
  if (node >= g.num_nodes)
    throw std::invalid_argument("neighbor_slices: node " +
                                std::to_string(node) + " out of range for " +
                                std::to_string(g.num_nodes) + " nodes");
  auto s = g.neighbors(node);
  return std::vector<std::uint32_t>(s.begin(), s.end());
}

namespace detail {

/// Builds CSR adjacency from a directed edge pair list: symmetrizes, drops
/// self-loops and duplicates. Returns true if symmetrization had to add any
/// reverse edge (the caller may warn).
inline bool build_csr(std::size_t n,
                      std::vector<std::pair<std::uint32_t, std::uint32_t>> edges,
                      std::vector<std::size_t>& offsets,
                      std::vector<std::uint32_t>& targets) {
  for (auto [u, v] : edges)
    if (u >= n || v >= n)
      throw std::invalid_argument("edge (" + std::to_string(u) + "," +
                                  std::to_string(v) + ") out of range for " +
                                  std::to_string(n) + " nodes");
  // drop self-loops, then close under reversal
  std::erase_if(edges, [](auto& e) { return e.first == e.second; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  const std::size_t before = edges.size();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> closed = edges;
  for (auto [u, v] : edges) closed.emplace_back(v, u);
  std::sort(closed.begin(), closed.end());
  closed.erase(std::unique(closed.begin(), closed.end()), closed.end());
  // symmetric input gains nothing from adding the reversals
  const bool asymmetric = closed.size() != before;

  offsets.assign(n + 1, 0);
  for (auto [u, v] : closed) offsets[u + 1]++;
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  targets.resize(closed.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (auto [u, v] : closed) targets[cursor[u]++] = v;
  return asymmetric;
}

inline void check_masks(const Graph& g, const std::string& context) {
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    const int hits = int(g.train_mask[i]) + int(g.val_mask[i]) +
                     int(g.test_mask[i]);
    if (hits > 1)
      throw std::invalid_argument(context + ": node " + std::to_string(i) +
                                  " appears in more than one split mask");
  }
}

}  // namespace detail

/// Assembles a Graph from a directed edge-pair list, enforcing all storage
/// invariants. `warn_asymmetric` controls the symmetrization warning.
inline Graph make_graph(std::size_t num_nodes,
                        std::vector<std::pair<std::uint32_t, std::uint32_t>> edges,
                        Tensor features, Labels labels,
                        std::vector<std::uint8_t> train_mask = {},
                        std::vector<std::uint8_t> val_mask = {},
                        std::vector<std::uint8_t> test_mask = {},
                        bool warn_asymmetric = false,
                        const std::string& context = "make_graph") {
  Graph g;
  g.num_nodes = num_nodes;
  const bool asym =
      detail::build_csr(num_nodes, std::move(edges), g.csr_offsets,
                        g.csr_targets);
  if (asym && warn_asymmetric)
    std::cerr << "warning: " << context
              << ": edge list was not symmetric; closed under reversal\n";
  if (features.defined() && features.rows() != num_nodes)
    throw std::invalid_argument(context + ": features have " +
                                std::to_string(features.rows()) +
                                " rows for " + std::to_string(num_nodes) +
                                " nodes");
  g.features = std::move(features);
  g.labels = std::move(labels);
  auto fit = [&](std::vector<std::uint8_t> m) {
    m.resize(num_nodes, 0);
    return m;
  };
  g.train_mask = fit(std::move(train_mask));
  g.val_mask = fit(std::move(val_mask));
  g.test_mask = fit(std::move(test_mask));
  detail::check_masks(g, context);
  return g;
}

// ---------------------------------------------------------------------------
// JSON file format:
// {"num_nodes": int, "edges": [[u,v],...], "features": [[f,...],...],
//  "labels": [int,...] | [[0|1,...],...],
//  "masks": {"train": [ids], "val": [ids], "test": [ids]}}
// Edge pairs are directed; an undirected graph stores both directions.
// One-direction-only files load fine but are symmetrized with a warning.

inline Graph graph_from_json(const nlohmann::json& j,
                             const std::string& context) {
  auto need = [&](const char* field) -> const nlohmann::json& {
    if (!j.contains(field))
      throw std::runtime_error(context + ": missing field \"" + field + "\"");
    return j.at(field);
  };
  const std::size_t n = need("num_nodes").get<std::size_t>();

  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (const auto& e : need("edges")) {
    if (!e.is_array() || e.size() != 2)
      throw std::runtime_error(context +
                               ": field \"edges\" entries must be [u,v] pairs");
    edges.emplace_back(e[0].get<std::uint32_t>(), e[1].get<std::uint32_t>());
  }

  const auto& jf = need("features");
  Tensor features(n, jf.empty() ? 0 : jf[0].size());
  {
    if (jf.size() != n)
      throw std::runtime_error(context + ": field \"features\" has " +
                               std::to_string(jf.size()) + " rows, expected " +
                               std::to_string(n));
    auto fv = features.mutable_values();
    const std::size_t f = features.cols();
    for (std::size_t i = 0; i < n; ++i) {
      if (jf[i].size() != f)
        throw std::runtime_error(context + ": ragged feature row " +
                                 std::to_string(i));
      for (std::size_t c = 0; c < f; ++c) fv[i * f + c] = jf[i][c].get<double>();
    }
  }

  Labels labels;
  const auto& jl = need("labels");
  if (jl.size() != n)
    throw std::runtime_error(context + ": field \"labels\" has " +
                             std::to_string(jl.size()) + " entries, expected " +
                             std::to_string(n));
  if (n > 0 && jl[0].is_array()) {
    labels.multi_label = true;
    labels.num_classes = jl[0].size();
    labels.multi_hot.assign(n * labels.num_classes, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (jl[i].size() != labels.num_classes)
        throw std::runtime_error(context + ": ragged label row " +
                                 std::to_string(i));
      for (std::size_t c = 0; c < labels.num_classes; ++c) {
        const int v = jl[i][c].get<int>();
        if (v != 0 && v != 1)
          throw std::runtime_error(context + ": multi-label entries must be 0/1");
        labels.multi_hot[i * labels.num_classes + c] = std::uint8_t(v);
      }
    }
  } else {
    labels.single.reserve(n);
    std::int64_t max_label = -1;
    for (const auto& v : jl) {
      const auto y = v.get<std::int64_t>();
      if (y < 0)
        throw std::runtime_error(context + ": negative class label");
      labels.single.push_back(y);
      max_label = std::max(max_label, y);
    }
    labels.num_classes = std::size_t(max_label + 1);
  }

  auto mask_from_ids = [&](const nlohmann::json& ids,
                           const char* name) -> std::vector<std::uint8_t> {
    std::vector<std::uint8_t> m(n, 0);
    for (const auto& v : ids) {
      const auto id = v.get<std::size_t>();
      if (id >= n)
        throw std::runtime_error(context + ": mask \"" + name + "\" id " +
                                 std::to_string(id) + " out of range");
      m[id] = 1;
    }
    return m;
  };
  std::vector<std::uint8_t> train, val, test;
  if (j.contains("masks")) {
    const auto& jm = j.at("masks");
    if (jm.contains("train")) train = mask_from_ids(jm.at("train"), "train");
    if (jm.contains("val")) val = mask_from_ids(jm.at("val"), "val");
    if (jm.contains("test")) test = mask_from_ids(jm.at("test"), "test");
  }
  return make_graph(n, std::move(edges), std::move(features),
                    std::move(labels), std::move(train), std::move(val),
                    std::move(test), /*warn_asymmetric=*/true, context);
}

inline Graph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("load_graph: cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("load_graph: " + path.string() + ": " + e.what());
  }
  return graph_from_json(j, "load_graph: " + path.string());
}

inline nlohmann::json graph_to_json(const Graph& g) {
  nlohmann::json j;
  j["num_nodes"] = g.num_nodes;
  auto edges = nlohmann::json::array();
  for (std::size_t i = 0; i < g.num_nodes; ++i)
    for (std::uint32_t t : g.neighbors(i))
      edges.push_back({std::uint32_t(i), t});  // both directions, stays quiet on reload
  j["edges"] = std::move(edges);
  auto features = nlohmann::json::array();
  for (std::size_t i = 0; i < g.num_nodes; ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t c = 0; c < g.feature_dim(); ++c)
      row.push_back(g.features.at(i, c));
    features.push_back(std::move(row));
  }
  j["features"] = std::move(features);
  if (g.labels.multi_label) {
    auto rows = nlohmann::json::array();
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
      auto row = nlohmann::json::array();
      for (std::size_t c = 0; c < g.labels.num_classes; ++c)
        row.push_back(int(g.labels.multi_hot[i * g.labels.num_classes + c]));
      rows.push_back(std::move(row));
    }
    j["labels"] = std::move(rows);
  } else {
    j["labels"] = g.labels.single;
  }
  auto ids = [](const std::vector<std::uint8_t>& m) {
    auto a = nlohmann::json::array();
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i]) a.push_back(i);
    return a;
  };
  j["masks"] = {{"train", ids(g.train_mask)},
                {"val", ids(g.val_mask)},
                {"test", ids(g.test_mask)}};
  return j;
}

inline void save_graph(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("save_graph: cannot open " + path.string());
  out << graph_to_json(g).dump() << "\n";
}

// ---------------------------------------------------------------------------
// synthetic stochastic block model

struct SbmParams {
  std::uint64_t seed = 0;
  std::size_t num_nodes = 300;
  std::size_t num_classes = 3;
  double p_in = 0.05;
  double p_out = 0.005;
  std::size_t feature_dim = 16;
  double feature_shift = 1.0;
};

/// Nodes are assigned to classes in contiguous, near-equal blocks. Features
/// are standard normal noise plus a class mean of magnitude feature_shift in
/// a random direction. Masks are a stratified 60/20/20 split.
inline Graph generate_sbm(const SbmParams& p) {
  if (!(p.p_out >= 0.0 && p.p_out <= p.p_in && p.p_in <= 1.0))
    throw std::invalid_argument(
        "generate_sbm: need 0 <= p_out <= p_in <= 1, got p_in=" +
        std::to_string(p.p_in) + " p_out=" + std::to_string(p.p_out));
  if (p.num_classes < 2)
    throw std::invalid_argument("generate_sbm: num_classes must be >= 2");
  if (p.num_nodes < p.num_classes)
    throw std::invalid_argument("generate_sbm: fewer nodes than classes");

  std::mt19937_64 rng(p.seed);
  const std::size_t n = p.num_nodes, k = p.num_classes;

  // contiguous near-equal blocks: first (n % k) classes get one extra node
  std::vector<std::uint32_t> cls(n);
  {
    std::size_t node = 0;
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t sz = n / k + (c < n % k ? 1 : 0);
      for (std::size_t t = 0; t < sz; ++t) cls[node++] = std::uint32_t(c);
    }
  }

  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double prob = cls[i] == cls[j] ? p.p_in : p.p_out;
      if (coin(rng) < prob) {
        edges.emplace_back(std::uint32_t(i), std::uint32_t(j));
        edges.emplace_back(std::uint32_t(j), std::uint32_t(i));
      }
    }

  // class means: random unit direction scaled to feature_shift
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> means(k,
                                         std::vector<double>(p.feature_dim));
  for (auto& m : means) {
    double norm2 = 0.0;
    for (auto& v : m) {
      v = gauss(rng);
      norm2 += v * v;
    }
    const double s = norm2 > 0 ? p.feature_shift / std::sqrt(norm2) : 0.0;
    for (auto& v : m) v *= s;
  }
  Tensor features(n, p.feature_dim);
  {
    auto fv = features.mutable_values();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < p.feature_dim; ++c)
        fv[i * p.feature_dim + c] = means[cls[i]][c] + gauss(rng);
  }

  Labels labels;
  labels.num_classes = k;
  labels.single.assign(cls.begin(), cls.end());

  // stratified 60/20/20
  std::vector<std::uint8_t> train(n, 0), val(n, 0), test(n, 0);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::uint32_t> members;
    for (std::size_t i = 0; i < n; ++i)
      if (cls[i] == c) members.push_back(std::uint32_t(i));
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t nv = std::size_t(std::lround(0.2 * double(members.size())));
    const std::size_t nt = nv;
    for (std::size_t q = 0; q < members.size(); ++q) {
      if (q < nv)
        val[members[q]] = 1;
      else if (q < nv + nt)
        test[members[q]] = 1;
      else
        train[members[q]] = 1;
    }
  }

  return make_graph(n, std::move(edges), std::move(features),
                    std::move(labels), std::move(train), std::move(val),
                    std::move(test), /*warn_asymmetric=*/false,
                    "generate_sbm");
}

// ---------------------------------------------------------------------------
// dataset bundles

enum class DatasetMode { kTransductive, kInductive };

struct DatasetBundle {
  DatasetMode mode = DatasetMode::kTransductive;
  std::vector<Graph> train_graphs, val_graphs, test_graphs;

  const Graph& transductive_graph() const {
    if (mode != DatasetMode::kTransductive || train_graphs.size() != 1)
      throw std::invalid_argument(
          "transductive bundle must contain exactly one graph");
    return train_graphs.front();
  }
};

inline DatasetBundle bundle_from_graph(Graph g) {
  DatasetBundle b;
  b.mode = DatasetMode::kTransductive;
  b.train_graphs.push_back(std::move(g));
  return b;
}

/// Loads either a bundle manifest ({"mode":..., "train": [files], ...}) or a
/// bare graph JSON file, which becomes a one-graph transductive bundle.
inline DatasetBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("load_bundle: cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("load_bundle: " + path.string() + ": " + e.what());
  }
  if (j.contains("num_nodes"))
    return bundle_from_graph(
        graph_from_json(j, "load_bundle: " + path.string()));

  DatasetBundle b;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "transductive")
    b.mode = DatasetMode::kTransductive;
  else if (mode == "inductive")
    b.mode = DatasetMode::kInductive;
  else
    throw std::runtime_error("load_bundle: unknown mode \"" + mode + "\"");
  const auto dir = path.parent_path();
  auto load_list = [&](const char* field, std::vector<Graph>& out) {
    if (!j.contains(field)) return;
    for (const auto& f : j.at(field))
      out.push_back(load_graph(dir / f.get<std::string>()));
  };
  load_list("train", b.train_graphs);
  load_list("val", b.val_graphs);
  load_list("test", b.test_graphs);
  if (b.mode == DatasetMode::kTransductive && b.train_graphs.size() != 1)
    throw std::runtime_error(
        "load_bundle: transductive manifest must list exactly one train graph");
  return b;
}

}  // namespace align
