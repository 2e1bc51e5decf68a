// Copyright 2026 the alignahead authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable operations over align::Tensor. Every op computes its result
// eagerly and, when a tape is active and some input tracks gradients, records
// a backward rule closing over the participating tensors. Shapes are
// validated up front; mismatches throw std::invalid_argument naming both
// shapes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "alignahead/tensor.hpp"

namespace align {

enum class SegmentMode { kSum, kMean, kMax };

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline bool recording(const Tensor& a) {
  return Tape::active() != nullptr && a.requires_grad();
}
inline bool recording(const Tensor& a, const Tensor& b) {
  return Tape::active() != nullptr && (a.requires_grad() || b.requires_grad());
}

inline Tensor tracked_result(std::size_t rows, std::size_t cols) {
  Tensor out(rows, cols);
  out.set_requires_grad(true);
  out.ensure_grad();
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise binary ops. add/sub accept equal shapes or a broadcast second
// operand of shape 1xN (per-column bias) or Mx1 (per-row offset).

namespace detail {

enum class Broadcast { kNone, kRow, kCol };

inline Broadcast broadcast_kind(const Tensor& a, const Tensor& b,
                                const char* op) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::kNone;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRow;
  if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::kCol;
  throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                              a.shape_str() + " vs " + b.shape_str() + ")");
}

template <typename Fwd>
Tensor add_like(const Tensor& a, const Tensor& b, const char* name, Fwd fwd,
                double b_sign) {
  const Broadcast bc = broadcast_kind(a, b, name);
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out(m, n);
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.mutable_values();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const double bval = bc == Broadcast::kNone ? bv[r * n + c]
                          : bc == Broadcast::kRow ? bv[c]
                                                  : bv[r];
      ov[r * n + c] = fwd(av[r * n + c], bval);
    }
  if (recording(a, b)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    const bool ga = a.requires_grad(), gb = b.requires_grad();
    if (ga) a.ensure_grad();
    if (gb) b.ensure_grad();
    Tape::active()->record([a, b, out, bc, ga, gb, b_sign] {
      const std::size_t m = a.rows(), n = a.cols();
      auto g = out.grad();
      if (ga) {
        auto gav = a.grad_mut();
        for (std::size_t i = 0; i < m * n; ++i) gav[i] += g[i];
      }
      if (gb) {
        auto gbv = b.grad_mut();
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t c = 0; c < n; ++c) {
            const std::size_t bi = bc == Broadcast::kNone ? r * n + c
                                   : bc == Broadcast::kRow ? c
                                                           : r;
            gbv[bi] += b_sign * g[r * n + c];
          }
      }
    });
  }
  return out;
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  return detail::add_like(a, b, "add", [](double x, double y) { return x + y; },
                          1.0);
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  return detail::add_like(a, b, "sub", [](double x, double y) { return x - y; },
                          -1.0);
}

inline Tensor hadamard(const Tensor& a, const Tensor& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                  "hadamard: shape mismatch (" + a.shape_str() + " vs " +
                      b.shape_str() + ")");
  Tensor out(a.rows(), a.cols());
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.mutable_values();
  for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] * bv[i];
  if (detail::recording(a, b)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    const bool ga = a.requires_grad(), gb = b.requires_grad();
    if (ga) a.ensure_grad();
    if (gb) b.ensure_grad();
    Tape::active()->record([a, b, out, ga, gb] {
      auto g = out.grad();
      auto av = a.values();
      auto bv = b.values();
      if (ga) {
        auto gav = a.grad_mut();
        for (std::size_t i = 0; i < g.size(); ++i) gav[i] += g[i] * bv[i];
      }
      if (gb) {
        auto gbv = b.grad_mut();
        for (std::size_t i = 0; i < g.size(); ++i) gbv[i] += g[i] * av[i];
      }
    });
  }
  return out;
}

inline Tensor scale(const Tensor& a, double s) {
  Tensor out(a.rows(), a.cols());
  auto av = a.values();
  auto ov = out.mutable_values();
  for (std::size_t i = 0; i < av.size(); ++i) ov[i] = s * av[i];
  if (detail::recording(a)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    a.ensure_grad();
    Tape::active()->record([a, out, s] {
      auto g = out.grad();
      auto gav = a.grad_mut();
      for (std::size_t i = 0; i < g.size(); ++i) gav[i] += s * g[i];
    });
  }
  return out;
}

inline Tensor add_scalar(const Tensor& a, double c) {
  Tensor out(a.rows(), a.cols());
  auto av = a.values();
  auto ov = out.mutable_values();
  for (std::size_t i = 0; i < av.size(); ++i) ov[i] = av[i] + c;
  if (detail::recording(a)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    a.ensure_grad();
    Tape::active()->record([a, out] {
      auto g = out.grad();
      auto gav = a.grad_mut();
      for (std::size_t i = 0; i < g.size(); ++i) gav[i] += g[i];
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// unary nonlinearities

namespace detail {

template <typename Fwd, typename Bwd>
Tensor unary_op(const Tensor& a, Fwd fwd, Bwd bwd_factor) {
  Tensor out(a.rows(), a.cols());
  auto av = a.values();
  auto ov = out.mutable_values();
  for (std::size_t i = 0; i < av.size(); ++i) ov[i] = fwd(av[i]);
  if (recording(a)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    a.ensure_grad();
    Tape::active()->record([a, out, bwd_factor] {
      auto g = out.grad();
      auto av = a.values();
      auto yv = out.values();
      auto gav = a.grad_mut();
      for (std::size_t i = 0; i < g.size(); ++i)
        gav[i] += g[i] * bwd_factor(av[i], yv[i]);
    });
  }
  return out;
}

}  // namespace detail

inline Tensor relu(const Tensor& a) {
  return detail::unary_op(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor elu(const Tensor& a) {
  return detail::unary_op(
      a, [](double x) { return x > 0.0 ? x : std::expm1(x); },
      [](double x, double y) { return x > 0.0 ? 1.0 : y + 1.0; });
}

inline Tensor leaky_relu(const Tensor& a, double slope) {
  return detail::unary_op(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

/// Unbounded for large positive inputs; callers feed it bounded values
/// (softmax paths subtract the per-row or per-segment max first).
inline Tensor exp(const Tensor& a) {
  return detail::unary_op(a, [](double x) { return std::exp(x); },
                          [](double, double y) { return y; });
}

/// log with an eps floor: log(max(x, eps)). Inputs below the floor have zero
/// gradient.
inline Tensor log(const Tensor& a, double eps = 1e-12) {
  detail::require(eps > 0.0, "log: eps must be > 0");
  return detail::unary_op(
      a, [eps](double x) { return std::log(std::max(x, eps)); },
      [eps](double x, double) { return x > eps ? 1.0 / x : 0.0; });
}

/// x^p with constant exponent; callers keep x in the domain where std::pow is
/// finite (the poly kernel adds its offset c first).
inline Tensor pow_scalar(const Tensor& a, double p) {
  return detail::unary_op(
      a, [p](double x) { return std::pow(x, p); },
      [p](double x, double) { return p * std::pow(x, p - 1.0); });
}

inline Tensor sigmoid(const Tensor& a) {
  return detail::unary_op(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

// ---------------------------------------------------------------------------
// matmul and layout ops

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require(a.cols() == b.rows(),
                  "matmul: shape mismatch (" + a.shape_str() + " vs " +
                      b.shape_str() + ")");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out(m, n);
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.mutable_values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      const double x = av[i * k + l];
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) ov[i * n + j] += x * bv[l * n + j];
    }
  if (detail::recording(a, b)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    const bool ga = a.requires_grad(), gb = b.requires_grad();
    if (ga) a.ensure_grad();
    if (gb) b.ensure_grad();
    Tape::active()->record([a, b, out, ga, gb] {
      const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
      auto g = out.grad();
      auto av = a.values();
      auto bv = b.values();
      if (ga) {  // dA = g . B^T
        auto gav = a.grad_mut();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t l = 0; l < k; ++l) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j)
              acc += g[i * n + j] * bv[l * n + j];
            gav[i * k + l] += acc;
          }
      }
      if (gb) {  // dB = A^T . g
        auto gbv = b.grad_mut();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t l = 0; l < k; ++l) {
            const double x = av[i * k + l];
            if (x == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j)
              gbv[l * n + j] += x * g[i * n + j];
          }
      }
    });
  }
  return out;
}

inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
  detail::require(a.rows() == b.rows(),
                  "concat_cols: shape mismatch (" + a.shape_str() + " vs " +
                      b.shape_str() + ")");
  const std::size_t m = a.rows(), ca = a.cols(), cb = b.cols();
  Tensor out(m, ca + cb);
  auto av = a.values();
  auto bv = b.values();
  auto ov = out.mutable_values();
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(av.begin() + r * ca, ca, ov.begin() + r * (ca + cb));
    std::copy_n(bv.begin() + r * cb, cb, ov.begin() + r * (ca + cb) + ca);
  }
  if (detail::recording(a, b)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    const bool ga = a.requires_grad(), gb = b.requires_grad();
    if (ga) a.ensure_grad();
    if (gb) b.ensure_grad();
    Tape::active()->record([a, b, out, ga, gb] {
      const std::size_t m = a.rows(), ca = a.cols(), cb = b.cols();
      auto g = out.grad();
      if (ga) {
        auto gav = a.grad_mut();
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t c = 0; c < ca; ++c)
            gav[r * ca + c] += g[r * (ca + cb) + c];
      }
      if (gb) {
        auto gbv = b.grad_mut();
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t c = 0; c < cb; ++c)
            gbv[r * cb + c] += g[r * (ca + cb) + ca + c];
      }
    });
  }
  return out;
}

/// out[idx.size() x d] with out[e,:] = x[idx[e],:]. Backward scatter-adds.
inline Tensor gather_rows(const Tensor& x, std::span<const std::uint32_t> idx) {
  const std::size_t n = x.rows(), d = x.cols();
  for (std::uint32_t i : idx)
    detail::require(i < n, "gather_rows: index " + std::to_string(i) +
                               " out of range for " + x.shape_str());
  Tensor out(idx.size(), d);
  auto xv = x.values();
  auto ov = out.mutable_values();
  for (std::size_t e = 0; e < idx.size(); ++e)
    std::copy_n(xv.begin() + std::size_t(idx[e]) * d, d, ov.begin() + e * d);
  if (detail::recording(x)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    x.ensure_grad();
    std::vector<std::uint32_t> id(idx.begin(), idx.end());
    Tape::active()->record([x, out, id = std::move(id)] {
      const std::size_t d = x.cols();
      auto g = out.grad();
      auto gx = x.grad_mut();
      for (std::size_t e = 0; e < id.size(); ++e)
        for (std::size_t c = 0; c < d; ++c)
          gx[std::size_t(id[e]) * d + c] += g[e * d + c];
    });
  }
  return out;
}

/// out[e,:] = x[e,:] * s[e]; s is Kx1.
inline Tensor scale_rows(const Tensor& x, const Tensor& s) {
  detail::require(s.cols() == 1 && s.rows() == x.rows(),
                  "scale_rows: shape mismatch (" + x.shape_str() + " vs " +
                      s.shape_str() + ")");
  const std::size_t m = x.rows(), d = x.cols();
  Tensor out(m, d);
  auto xv = x.values();
  auto sv = s.values();
  auto ov = out.mutable_values();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < d; ++c) ov[r * d + c] = xv[r * d + c] * sv[r];
  if (detail::recording(x, s)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    const bool gx = x.requires_grad(), gs = s.requires_grad();
    if (gx) x.ensure_grad();
    if (gs) s.ensure_grad();
    Tape::active()->record([x, s, out, gx, gs] {
      const std::size_t m = x.rows(), d = x.cols();
      auto g = out.grad();
      auto xv = x.values();
      auto sv = s.values();
      if (gx) {
        auto gxv = x.grad_mut();
        for (std::size_t r = 0; r < m; ++r)
          for (std::size_t c = 0; c < d; ++c)
            gxv[r * d + c] += g[r * d + c] * sv[r];
      }
      if (gs) {
        auto gsv = s.grad_mut();
        for (std::size_t r = 0; r < m; ++r) {
          double acc = 0.0;
          for (std::size_t c = 0; c < d; ++c)
            acc += g[r * d + c] * xv[r * d + c];
          gsv[r] += acc;
        }
      }
    });
  }
  return out;
}

// ---------------------------------------------------------------------------
// reductions and softmax

inline Tensor sum(const Tensor& a) {
  Tensor out(1, 1);
  auto av = a.values();
  out.mutable_values()[0] = std::accumulate(av.begin(), av.end(), 0.0);
  if (detail::recording(a)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    a.ensure_grad();
    Tape::active()->record([a, out] {
      const double g = out.grad()[0];
      auto gav = a.grad_mut();
      for (auto& v : gav) v += g;
    });
  }
  return out;
}

inline Tensor reduce_mean(const Tensor& a) {
  detail::require(a.size() > 0, "reduce_mean: empty tensor");
  Tensor out(1, 1);
  auto av = a.values();
  out.mutable_values()[0] =
      std::accumulate(av.begin(), av.end(), 0.0) / double(av.size());
  if (detail::recording(a)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    a.ensure_grad();
    Tape::active()->record([a, out] {
      const double g = out.grad()[0] / double(a.size());
      auto gav = a.grad_mut();
      for (auto& v : gav) v += g;
    });
  }
  return out;
}

inline Tensor row_sum(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out(m, 1);
  auto av = a.values();
  auto ov = out.mutable_values();
  for (std::size_t r = 0; r < m; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < n; ++c) acc += av[r * n + c];
    ov[r] = acc;
  }
  if (detail::recording(a)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    a.ensure_grad();
    Tape::active()->record([a, out] {
      const std::size_t m = a.rows(), n = a.cols();
      auto g = out.grad();
      auto gav = a.grad_mut();
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) gav[r * n + c] += g[r];
    });
  }
  return out;
}

/// Row-wise softmax with per-row max subtraction.
inline Tensor row_softmax(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  detail::require(n > 0, "row_softmax: empty rows");
  Tensor out(m, n);
  auto av = a.values();
  auto ov = out.mutable_values();
  for (std::size_t r = 0; r < m; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) mx = std::max(mx, av[r * n + c]);
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      ov[r * n + c] = std::exp(av[r * n + c] - mx);
      z += ov[r * n + c];
    }
    for (std::size_t c = 0; c < n; ++c) ov[r * n + c] /= z;
  }
  if (detail::recording(a)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    a.ensure_grad();
    Tape::active()->record([a, out] {
      const std::size_t m = a.rows(), n = a.cols();
      auto g = out.grad();
      auto yv = out.values();
      auto gav = a.grad_mut();
      for (std::size_t r = 0; r < m; ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < n; ++c)
          dot += g[r * n + c] * yv[r * n + c];
        for (std::size_t c = 0; c < n; ++c)
          gav[r * n + c] += yv[r * n + c] * (g[r * n + c] - dot);
      }
    });
  }
  return out;
}

/// Softmax over contiguous segments of a Kx1 column. offsets has S+1 entries;
/// segment s covers rows [offsets[s], offsets[s+1]). Empty segments are fine.
inline Tensor segment_softmax(const Tensor& v,
                              std::span<const std::size_t> offsets) {
  detail::require(v.cols() == 1, "segment_softmax: expected Kx1, got " +
                                     v.shape_str());
  detail::require(!offsets.empty() && offsets.back() == v.rows(),
                  "segment_softmax: offsets do not cover input");
  Tensor out(v.rows(), 1);
  auto vv = v.values();
  auto ov = out.mutable_values();
  const std::size_t S = offsets.size() - 1;
  for (std::size_t s = 0; s < S; ++s) {
    const std::size_t lo = offsets[s], hi = offsets[s + 1];
    if (lo == hi) continue;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t e = lo; e < hi; ++e) mx = std::max(mx, vv[e]);
    double z = 0.0;
    for (std::size_t e = lo; e < hi; ++e) {
      ov[e] = std::exp(vv[e] - mx);
      z += ov[e];
    }
    for (std::size_t e = lo; e < hi; ++e) ov[e] /= z;
  }
  if (detail::recording(v)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    v.ensure_grad();
    std::vector<std::size_t> offs(offsets.begin(), offsets.end());
    Tape::active()->record([v, out, offs = std::move(offs)] {
      auto g = out.grad();
      auto yv = out.values();
      auto gv = v.grad_mut();
      for (std::size_t s = 0; s + 1 < offs.size(); ++s) {
        const std::size_t lo = offs[s], hi = offs[s + 1];
        double dot = 0.0;
        for (std::size_t e = lo; e < hi; ++e) dot += g[e] * yv[e];
        for (std::size_t e = lo; e < hi; ++e) gv[e] += yv[e] * (g[e] - dot);
      }
    });
  }
  return out;
}

/// out[s,:] = sum of v rows in segment s (contiguous, CSR-style offsets).
inline Tensor segment_sum(const Tensor& v,
                          std::span<const std::size_t> offsets) {
  detail::require(!offsets.empty() && offsets.back() == v.rows(),
                  "segment_sum: offsets do not cover input");
  const std::size_t S = offsets.size() - 1, d = v.cols();
  Tensor out(S, d);
  auto vv = v.values();
  auto ov = out.mutable_values();
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t e = offsets[s]; e < offsets[s + 1]; ++e)
      for (std::size_t c = 0; c < d; ++c) ov[s * d + c] += vv[e * d + c];
  if (detail::recording(v)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    v.ensure_grad();
    std::vector<std::size_t> offs(offsets.begin(), offsets.end());
    Tape::active()->record([v, out, offs = std::move(offs)] {
      const std::size_t d = v.cols();
      auto g = out.grad();
      auto gv = v.grad_mut();
      for (std::size_t s = 0; s + 1 < offs.size(); ++s)
        for (std::size_t e = offs[s]; e < offs[s + 1]; ++e)
          for (std::size_t c = 0; c < d; ++c) gv[e * d + c] += g[s * d + c];
    });
  }
  return out;
}

/// Sparse constant matrix times dense tensor: out[i,:] = sum over entries e in
/// row i of coeff[e] * x[targets[e],:]. The sparse pattern and coefficients do
/// not carry gradients (they encode graph structure, e.g. the normalized
/// adjacency of a GCN layer).
inline Tensor spmm(std::span<const std::size_t> offsets,
                   std::span<const std::uint32_t> targets,
                   std::span<const double> coeffs, const Tensor& x) {
  detail::require(!offsets.empty() && offsets.back() == targets.size() &&
                      coeffs.size() == targets.size(),
                  "spmm: inconsistent CSR arrays");
  const std::size_t n = offsets.size() - 1, d = x.cols();
  for (std::uint32_t t : targets)
    detail::require(t < x.rows(), "spmm: target " + std::to_string(t) +
                                      " out of range for " + x.shape_str());
  Tensor out(n, d);
  auto xv = x.values();
  auto ov = out.mutable_values();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) {
      const double w = coeffs[e];
      const std::size_t j = targets[e];
      for (std::size_t c = 0; c < d; ++c) ov[i * d + c] += w * xv[j * d + c];
    }
  if (detail::recording(x)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    x.ensure_grad();
    std::vector<std::size_t> offs(offsets.begin(), offsets.end());
    std::vector<std::uint32_t> tgt(targets.begin(), targets.end());
    std::vector<double> cf(coeffs.begin(), coeffs.end());
    Tape::active()->record(
        [x, out, offs = std::move(offs), tgt = std::move(tgt),
         cf = std::move(cf)] {
          const std::size_t d = x.cols();
          auto g = out.grad();
          auto gx = x.grad_mut();
          for (std::size_t i = 0; i + 1 < offs.size(); ++i)
            for (std::size_t e = offs[i]; e < offs[i + 1]; ++e) {
              const double w = cf[e];
              const std::size_t j = tgt[e];
              for (std::size_t c = 0; c < d; ++c)
                gx[j * d + c] += w * g[i * d + c];
            }
        });
  }
  return out;
}

/// Neighborhood aggregation: out[i,:] = mode-aggregate of {values[j,:] :
/// (i,j) in the edge set}, given as CSR offsets/targets over values.rows()
/// nodes. Isolated nodes yield zero rows under every mode, including max over
/// the empty set. Max routes gradient to the argmax element; ties go to the
/// lowest node index (CSR targets are sorted ascending, so first-winner-kept
/// achieves that).
inline Tensor segment_aggregate(const Tensor& values,
                                std::span<const std::size_t> offsets,
                                std::span<const std::uint32_t> targets,
                                SegmentMode mode) {
  const std::size_t n = values.rows(), d = values.cols();
  detail::require(offsets.size() == n + 1 && offsets.back() == targets.size(),
                  "segment_aggregate: CSR arrays do not match values with " +
                      values.shape_str());
  for (std::uint32_t t : targets)
    detail::require(t < n, "segment_aggregate: endpoint " + std::to_string(t) +
                               " out of range for " + std::to_string(n) +
                               " nodes");
  Tensor out(n, d);
  auto vv = values.values();
  auto ov = out.mutable_values();
  // argmax source row per (node, dim); only used for kMax backward.
  std::vector<std::uint32_t> arg;
  if (mode == SegmentMode::kMax) arg.assign(n * d, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = offsets[i], hi = offsets[i + 1];
    if (lo == hi) continue;  // zero row
    if (mode == SegmentMode::kMax) {
      for (std::size_t c = 0; c < d; ++c) {
        double best = -std::numeric_limits<double>::infinity();
        std::uint32_t best_j = 0;
        for (std::size_t e = lo; e < hi; ++e) {
          const double x = vv[std::size_t(targets[e]) * d + c];
          if (x > best) {
            best = x;
            best_j = targets[e];
          }
        }
        ov[i * d + c] = best;
        arg[i * d + c] = best_j;
      }
    } else {
      for (std::size_t e = lo; e < hi; ++e) {
        const std::size_t j = targets[e];
        for (std::size_t c = 0; c < d; ++c) ov[i * d + c] += vv[j * d + c];
      }
      if (mode == SegmentMode::kMean) {
        const double inv = 1.0 / double(hi - lo);
        for (std::size_t c = 0; c < d; ++c) ov[i * d + c] *= inv;
      }
    }
  }
  if (detail::recording(values)) {
    out.set_requires_grad(true);
    out.ensure_grad();
    values.ensure_grad();
    std::vector<std::size_t> offs(offsets.begin(), offsets.end());
    std::vector<std::uint32_t> tgt(targets.begin(), targets.end());
    Tape::active()->record([values, out, mode, offs = std::move(offs),
                            tgt = std::move(tgt), arg = std::move(arg)] {
      const std::size_t n = values.rows(), d = values.cols();
      auto g = out.grad();
      auto gv = values.grad_mut();
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = offs[i], hi = offs[i + 1];
        if (lo == hi) continue;
        if (mode == SegmentMode::kMax) {
          for (std::size_t c = 0; c < d; ++c)
            gv[std::size_t(arg[i * d + c]) * d + c] += g[i * d + c];
        } else {
          const double w =
              mode == SegmentMode::kMean ? 1.0 / double(hi - lo) : 1.0;
          for (std::size_t e = lo; e < hi; ++e) {
            const std::size_t j = tgt[e];
            for (std::size_t c = 0; c < d; ++c)
              gv[j * d + c] += w * g[i * d + c];
          }
        }
      }
    });
  }
  return out;
}

}  // namespace align
