// Copyright 2026 the alignahead authors
// SPDX-License-Identifier: Apache-2.0
//
// Test-only gradient oracle: central finite differences over the leaf
// values. The forward evaluation below never touches a tape, so it stays
// independent of the reverse-mode path it is checking.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "alignahead/tensor.hpp"

namespace align::testing {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

struct FdReport {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

/// make_loss rebuilds the computation from the leaves' current values and
/// returns the scalar loss tensor. One taped call collects the analytic
/// gradients; the tape-free probes collect the numeric ones.
template <typename MakeLoss>
FdReport check_gradients(MakeLoss make_loss, std::vector<Tensor> leaves,
                         double h = 1e-5) {
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    Tensor loss = make_loss();
    tape.backward(loss);
  }
  for (auto& leaf : leaves) {
    leaf.ensure_grad();
    auto g = leaf.grad();
    analytic.emplace_back(g.begin(), g.end());
    leaf.zero_grad();
  }

  FdReport rep;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto vals = leaves[li].mutable_values();
    for (std::size_t c = 0; c < vals.size(); ++c) {
      const double orig = vals[c];
      vals[c] = orig + h;
      const double fp = make_loss().scalar_value();
      vals[c] = orig - h;
      const double fm = make_loss().scalar_value();
      vals[c] = orig;
      const double fd = (fp - fm) / (2.0 * h);
      rep.max_rel_err = std::max(rep.max_rel_err, rel_err(analytic[li][c], fd));
      ++rep.checked;
    }
  }
  return rep;
}

}  // namespace align::testing
