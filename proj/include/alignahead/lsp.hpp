// Copyright 2026 the alignahead authors
// SPDX-License-Identifier: Apache-2.0
//
// Local structure preservation: per-node kernel similarities to graph
// neighbors, softmax-normalized into a distribution per node, and the KL loss
// that pulls one model's distributions toward another's.
//
// The euclidean kernel exponentiates the *positive* squared distance, so
// farther neighbors receive higher probability. That is intentional (it is
// the published form); set KernelConfig::negate_euclidean to flip the sign
// and favor close neighbors instead.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "alignahead/graph.hpp"
#include "alignahead/ops.hpp"
#include "alignahead/tensor.hpp"

namespace align {

enum class KernelKind { kEuclidean, kLinear, kPoly, kRbf };

struct KernelConfig {
  KernelKind kind = KernelKind::kEuclidean;
  double poly_c = 1.0;
  double poly_d = 2.0;
  double rbf_sigma = 100.0;
  bool negate_euclidean = false;

  void validate() const {
    if (rbf_sigma <= 0.0)
      throw std::invalid_argument("KernelConfig: rbf_sigma must be > 0");
    if (poly_d <= 0.0)
      throw std::invalid_argument("KernelConfig: poly_d must be > 0");
  }
};

inline const char* kernel_name(KernelKind k) {
  switch (k) {
    case KernelKind::kEuclidean: return "euclidean";
    case KernelKind::kLinear: return "linear";
    case KernelKind::kPoly: return "poly";
    case KernelKind::kRbf: return "rbf";
  }
  return "?";
}

/// Scalar kernel between two embedding vectors. euclidean: squared L2
/// distance; linear: dot product; poly: (dot + c)^d; rbf:
/// exp(-||zi-zj||^2 / (2 sigma)).
inline double kernel(std::span<const double> zi, std::span<const double> zj,
                     const KernelConfig& cfg) {
  cfg.validate();
  if (zi.size() != zj.size())
    throw std::invalid_argument("kernel: length mismatch (" +
                                std::to_string(zi.size()) + " vs " +
                                std::to_string(zj.size()) + ")");
  switch (cfg.kind) {
    case KernelKind::kEuclidean: {
      double d2 = 0.0;
      for (std::size_t c = 0; c < zi.size(); ++c) {
        const double d = zi[c] - zj[c];
        d2 += d * d;
      }
      return cfg.negate_euclidean ? -d2 : d2;
    }
    case KernelKind::kLinear: {
      double dot = 0.0;
      for (std::size_t c = 0; c < zi.size(); ++c) dot += zi[c] * zj[c];
      return dot;
    }
    case KernelKind::kPoly: {
      double dot = 0.0;
      for (std::size_t c = 0; c < zi.size(); ++c) dot += zi[c] * zj[c];
      return std::pow(dot + cfg.poly_c, cfg.poly_d);
    }
    case KernelKind::kRbf: {
      double d2 = 0.0;
      for (std::size_t c = 0; c < zi.size(); ++c) {
        const double d = zi[c] - zj[c];
        d2 += d * d;
      }
      return std::exp(-d2 / (2.0 * cfg.rbf_sigma));
    }
  }
  throw std::invalid_argument("kernel: unknown kind");
}

/// Per-node probability distribution over that node's neighbors, stored as
/// one probability per directed CSR edge. The support of node i is exactly
/// the CSR slice of i; isolated nodes have an empty distribution.
struct LocalStructure {
  const Graph* graph = nullptr;
  Tensor edge_probs;  // |csr_targets| x 1, rows aligned with csr order

  std::span<const double> node_probs(std::size_t i) const {
    return edge_probs.values().subspan(graph->csr_offsets[i],
                                       graph->degree(i));
  }
};

/// Softmax over each node's neighbor kernel values (max-subtracted).
/// Differentiable with respect to `embeddings` when a tape is active.
inline LocalStructure local_structure(const Tensor& embeddings, const Graph& g,
                                      const KernelConfig& cfg) {
  cfg.validate();
  if (embeddings.rows() != g.num_nodes)
    throw std::invalid_argument("local_structure: embeddings have " +
                                std::to_string(embeddings.rows()) +
                                " rows for " + std::to_string(g.num_nodes) +
                                " nodes");
  const std::size_t E = g.csr_targets.size();

  // expand CSR into per-edge (source, target) index lists
  std::vector<std::uint32_t> src(E);
  for (std::size_t i = 0; i < g.num_nodes; ++i)
    for (std::size_t e = g.csr_offsets[i]; e < g.csr_offsets[i + 1]; ++e)
      src[e] = std::uint32_t(i);

  Tensor zs = gather_rows(embeddings, src);
  Tensor zt = gather_rows(embeddings, g.csr_targets);

  Tensor kvals;  // E x 1
  switch (cfg.kind) {
    case KernelKind::kEuclidean: {
      Tensor diff = sub(zs, zt);
      kvals = row_sum(hadamard(diff, diff));
      if (cfg.negate_euclidean) kvals = scale(kvals, -1.0);
      break;
    }
    case KernelKind::kLinear:
      kvals = row_sum(hadamard(zs, zt));
      break;
    case KernelKind::kPoly:
      kvals = pow_scalar(add_scalar(row_sum(hadamard(zs, zt)), cfg.poly_c),
                         cfg.poly_d);
      break;
    case KernelKind::kRbf: {
      Tensor diff = sub(zs, zt);
      kvals = exp(scale(row_sum(hadamard(diff, diff)),
                        -1.0 / (2.0 * cfg.rbf_sigma)));
      break;
    }
  }

  LocalStructure ls;
  ls.graph = &g;
  ls.edge_probs = segment_softmax(kvals, g.csr_offsets);
  return ls;
}

namespace detail {

inline void check_same_support(const LocalStructure& a,
                               const LocalStructure& b) {
  const bool ok = a.graph && b.graph &&
                  (a.graph == b.graph ||
                   (a.graph->csr_offsets == b.graph->csr_offsets &&
                    a.graph->csr_targets == b.graph->csr_targets));
  if (!ok)
    throw std::invalid_argument(
        "structure_kl: support mismatch; the two local structures were "
        "computed on different graphs");
}

}  // namespace detail

inline constexpr double kKlEps = 1e-12;

/// Mean over non-isolated nodes of sum_j t_j * log((t_j+eps)/(s_j+eps)).
/// The target side is treated as constant (gradient-stopped); only the
/// student side participates in the tape. Returns a 1x1 tensor.
inline Tensor structure_kl(const LocalStructure& target,
                           const LocalStructure& student) {
  detail::check_same_support(target, student);
  const Graph& g = *student.graph;
  const std::size_t n_active = g.non_isolated_count();
  if (n_active == 0) return Tensor::scalar(0.0);

  const std::size_t E = g.csr_targets.size();
  // constant pieces of the loss: the target probabilities and their entropy
  Tensor t_const(E, 1);
  double t_logt = 0.0;
  {
    auto tv = target.edge_probs.values();
    auto tc = t_const.mutable_values();
    for (std::size_t e = 0; e < E; ++e) {
      tc[e] = tv[e];
      t_logt += tv[e] * std::log(tv[e] + kKlEps);
    }
  }
  // kl = (t_logt - sum_e t_e * log(s_e + eps)) / n_active
  Tensor log_s = log(add_scalar(student.edge_probs, kKlEps), kKlEps);
  Tensor cross = sum(hadamard(t_const, log_s));
  return scale(sub(Tensor::scalar(t_logt), cross), 1.0 / double(n_active));
}

}  // namespace align
