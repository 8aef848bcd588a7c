// Copyright (c) 2026 geode-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors with reverse-mode autodiff. Values are kept in
// 64-bit floats in memory; the on-disk checkpoint format is 32-bit.
// Graph construction and backward are single-threaded and all reductions
// run in a fixed sequential row-major order, so two runs with the same
// seed produce bit-identical losses.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace geode {

namespace detail {

struct Node {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // allocated lazily, same length as data
    bool requires_grad = false;
    // Set for non-leaf nodes; accumulates into parents' grads.
    std::function<void(Node&)> backward_fn;
    std::vector<std::shared_ptr<Node>> parents;

    size_t numel() const { return data.size(); }
    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

}  // namespace detail

// While alive, ops do not record the autodiff graph (inference mode).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};
bool grad_enabled();

// Value-semantic handle to a graph node.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                            bool requires_grad = false);
    static Tensor scalar(double v);
    // Gaussian init, stddev scaled by the caller.
    static Tensor randn(std::vector<int> shape, Rng& rng, double stddev,
                        bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    size_t numel() const { return node_->data.size(); }
    int ndim() const { return static_cast<int>(node_->shape.size()); }
    // 2D convenience accessors; 1D tensors count as a single row.
    int rows() const;
    int cols() const;

    std::vector<double>& data() { return node_->data; }
    const std::vector<double>& data() const { return node_->data; }
    std::vector<double>& grad() { return node_->grad; }
    const std::vector<double>& grad() const { return node_->grad; }
    bool has_grad() const { return !node_->grad.empty(); }
    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool b) { node_->requires_grad = b; }

    double item() const;
    double at(int r, int c) const;

    std::shared_ptr<detail::Node> node() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
    friend Tensor make_op(std::vector<int> shape, std::vector<double> data,
                          std::vector<Tensor> parents,
                          std::function<void(detail::Node&)> backward_fn);
    friend Tensor make_leaf(std::vector<int> shape, std::vector<double> data,
                            bool requires_grad);

    std::shared_ptr<detail::Node> node_;
};

// --- Primitive ops (each one differentiable unless noted) ---

Tensor matmul(const Tensor& a, const Tensor& b);
// Same-shape elementwise add; b may also be a 1-row bias broadcast over rows.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise, same shape
Tensor scale(const Tensor& a, double s);
Tensor tanh_act(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor softmax_lastdim(const Tensor& a);
// Softmax over the last dim where row i only sees columns <= i + offset.
// Used for causal attention; offset admits a prefix of always-visible columns.
Tensor softmax_causal(const Tensor& scores, int offset = 0);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                     const std::vector<bool>& mask);
Tensor mse(const Tensor& pred, const Tensor& target);
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, int r0, int r1);
Tensor slice_cols(const Tensor& x, int c0, int c1);
Tensor transpose(const Tensor& x);
Tensor mean_lastdim(const Tensor& x);
Tensor mean_all(const Tensor& x);
Tensor sum_all(const Tensor& x);

// Reverse-mode sweep from a scalar loss. Populates grad on every
// requires_grad ancestor; never touches data and never allocates grad on
// nodes with requires_grad == false.
void backward(const Tensor& loss);

}  // namespace geode
