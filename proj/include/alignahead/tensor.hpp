// Copyright 2026 the alignahead authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense 2-D tensor of 64-bit floats plus the reverse-mode tape that records
// operations applied to it. Ops live in ops.hpp; this header only defines the
// storage and the tape mechanics.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace align {

class Tensor;

namespace detail {

struct TensorData {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<double> grad;  // empty until first needed, then values.size()
  bool requires_grad = false;
};

}  // namespace detail

/// Handle with shared storage. Copies are cheap and alias the same values and
/// gradient buffer. Values are treated as immutable while a tape recorded on
/// them is still live; `mutable_values()` exists for parameter updates and
/// finite-difference probing between steps.
class Tensor {
 public:
  Tensor() = default;

  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0,
         bool requires_grad = false)
      : d_(std::make_shared<detail::TensorData>()) {
    d_->rows = rows;
    d_->cols = cols;
    d_->values.assign(rows * cols, fill);
    d_->requires_grad = requires_grad;
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    Tensor t(1, 1, v, requires_grad);
    return t;
  }

  static Tensor from_rows(const std::vector<std::vector<double>>& rows,
                          bool requires_grad = false) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.front().size();
    Tensor t(r, c, 0.0, requires_grad);
    auto v = t.mutable_values();
    for (std::size_t i = 0; i < r; ++i) {
      if (rows[i].size() != c)
        throw std::invalid_argument("from_rows: ragged row " +
                                    std::to_string(i));
      for (std::size_t j = 0; j < c; ++j) v[i * c + j] = rows[i][j];
    }
    return t;
  }

  bool defined() const noexcept { return d_ != nullptr; }
  std::size_t rows() const noexcept { return d_ ? d_->rows : 0; }
  std::size_t cols() const noexcept { return d_ ? d_->cols : 0; }
  std::size_t size() const noexcept { return d_ ? d_->values.size() : 0; }
  bool requires_grad() const noexcept { return d_ && d_->requires_grad; }
  void set_requires_grad(bool on) { data().requires_grad = on; }

  double at(std::size_t r, std::size_t c) const {
    return data().values[r * data().cols + c];
  }
  double scalar_value() const {
    if (size() != 1)
      throw std::invalid_argument("scalar_value: tensor is " + shape_str() +
                                  ", expected 1x1");
    return data().values[0];
  }

  std::span<const double> values() const { return data().values; }
  std::span<double> mutable_values() { return data().values; }

  /// Gradient accumulated by the last backward pass; empty span if this
  /// tensor never participated.
  std::span<const double> grad() const {
    return d_ ? std::span<const double>(d_->grad) : std::span<const double>();
  }

  void ensure_grad() const {
    auto& d = data();
    if (d.grad.size() != d.values.size()) d.grad.assign(d.values.size(), 0.0);
  }
  /// Mutable view used by backward rules; call ensure_grad() first.
  std::span<double> grad_mut() const { return data().grad; }
  void zero_grad() const {
    if (d_ && !d_->grad.empty()) d_->grad.assign(d_->values.size(), 0.0);
  }

  /// Copy of the values with gradient tracking severed.
  Tensor detach() const {
    Tensor t(rows(), cols());
    t.data().values = data().values;
    return t;
  }

  std::string shape_str() const {
    return std::to_string(rows()) + "x" + std::to_string(cols());
  }

  bool same_storage(const Tensor& o) const noexcept { return d_ == o.d_; }

 private:
  detail::TensorData& data() const {
    if (!d_) throw std::logic_error("use of undefined tensor");
    return *d_;
  }
  std::shared_ptr<detail::TensorData> d_;
};

/// Records backward rules in forward order; backward() replays them exactly
/// once in reverse. The constructor makes the tape active for the current
/// thread, the destructor restores the previous one, so tapes nest and a
/// forward pass run without any live tape is simply not recorded.
class Tape {
 public:
  Tape() : prev_(active_ref()) { active_ref() = this; }
  ~Tape() { active_ref() = prev_; }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active() noexcept { return active_ref(); }

  void record(std::function<void()> backward_step) {
    steps_.push_back(std::move(backward_step));
  }

  std::size_t size() const noexcept { return steps_.size(); }

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded rule once, in reverse
  /// order. Gradients accumulate additively into each participating tensor.
  void backward(const Tensor& loss) {
    if (loss.size() != 1)
      throw std::invalid_argument("backward: loss must be 1x1, got " +
                                  loss.shape_str());
    if (consumed_) throw std::logic_error("backward: tape already consumed");
    consumed_ = true;
    loss.ensure_grad();
    loss.grad_mut()[0] += 1.0;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
  }

 private:
  static Tape*& active_ref() noexcept {
    thread_local Tape* active = nullptr;
    return active;
  }

  std::vector<std::function<void()>> steps_;
  bool consumed_ = false;
  Tape* prev_ = nullptr;
};

}  // namespace align
