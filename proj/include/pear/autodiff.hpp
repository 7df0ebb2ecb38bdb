// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode differentiation over Matrix values. A forward pass builds a
// graph of shared Nodes; backward() runs one reverse sweep accumulating
// gradients into every node that requires them. Leaves (parameters) keep
// their gradient buffers across steps until zero_grad.
//
// The contract for every op here is "passes grad_check": analytic gradients
// match central finite differences on the full loss.

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pear/matrix.hpp"
#include "pear/rng.hpp"

namespace pear::ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
    Matrix value;
    Matrix grad;  // allocated lazily; same shape as value once used
    std::vector<NodePtr> parents;
    // Accumulates this node's grad into its parents' grads.
    std::function<void(Node&)> backward;
    bool requires_grad = false;

    Matrix& ensure_grad();
};

// Lightweight handle to a graph node.
class Var {
public:
    Var() = default;
    explicit Var(NodePtr n) : node_(std::move(n)) {}

    const Matrix& value() const { return node_->value; }
    Matrix& mutable_value() { return node_->value; }
    const Matrix& grad() const { return node_->grad; }
    Matrix& grad() { return node_->grad; }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    bool defined() const { return node_ != nullptr; }

    std::size_t rows() const { return node_->value.rows(); }
    std::size_t cols() const { return node_->value.cols(); }
    double scalar() const;  // value of a 1x1 var

    NodePtr node() const { return node_; }

private:
    NodePtr node_;
};

// While a guard is alive, new nodes record no parents or backward closures.
// Used for evaluation and for the finite-difference passes of grad_check.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

bool grad_enabled();

// Leaves.
Var leaf(Matrix value, bool requires_grad);
inline Var constant(Matrix value) { return leaf(std::move(value), false); }

// Escape hatch for ops with bespoke backwards (embedding gather, build_X).
Var make_op(Matrix value, std::vector<Var> parents,
            std::function<void(Node&)> backward);

// Core ops. Shapes are validated; mismatches throw std::invalid_argument
// reporting both shapes.
Var matmul(const Var& a, const Var& b);      // (m x k)·(k x n)
Var matmul_nt(const Var& a, const Var& b);   // a · b^T, b stored (n x k)
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul_elem(const Var& a, const Var& b);
Var add_n(const std::vector<Var>& xs);       // elementwise sum, same shapes
Var add_row_broadcast(const Var& a, const Var& bias);  // bias is 1 x cols
Var scale(const Var& a, double s);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var softmax_rows(const Var& a);
Var concat_rows(const std::vector<Var>& xs);
Var concat_cols(const std::vector<Var>& xs);
Var slice_rows(const Var& a, std::size_t row0, std::size_t row1);  // [row0, row1)
Var slice_cols(const Var& a, std::size_t col0, std::size_t col1);
Var sum_all(const Var& a);   // 1x1
Var mean_all(const Var& a);  // 1x1

// Inverted dropout on elements; identity when !train or rate == 0.
Var dropout(const Var& a, double rate, Rng& rng, bool train);

// act(w·x + b) with x column-per-example, w (m x k), x (k x n), b 1 x m.
enum class Activation { None, Relu };
Var linear(const Var& x, const Var& w, const Var& b, Activation act);
// act(x·w^T + b) with x row-per-example, w (m x k), b 1 x m. The row-major
// realization of linear; the two agree under transposition.
Var linear_rows(const Var& x, const Var& w, const Var& b, Activation act);

// Embedding-style row gather: out row i = table row indices[i]. Gradient is
// scattered back to the looked-up rows; row 0 (padding) never receives any.
Var gather_rows(const Var& table, const std::vector<std::size_t>& indices);

// Summed binary cross-entropy: -sum_t [y log p + (1-y) log(1-p)] with
// probabilities clamped to [1e-12, 1-1e-12] before the logs. labels must be
// 0/1 and match probs element count.
Var bce_sum(const Var& probs, const std::vector<int>& labels);

// Reverse sweep from a 1x1 root. Gradients accumulate; callers zero leaf
// grads between steps.
void backward(const Var& root);

// Named learnable tensors, in a fixed order shared by the optimizer,
// checkpoints, and grad_check.
struct NamedParam {
    std::string name;
    Var var;
};
using ParamSet = std::vector<NamedParam>;

void zero_grad(ParamSet& params);

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_row = 0;
    std::size_t worst_col = 0;
    bool passed = false;
};

// Central finite differences against the analytic gradient of loss_fn.
// loss_fn must be deterministic (dropout off) and rebuild the graph from the
// current parameter values on every call. Relative error denominator is
// max(|analytic|, |numeric|, 1e-8).
GradCheckReport grad_check(const std::function<Var()>& loss_fn, ParamSet& params,
                           double epsilon, double tolerance = 1e-6);

}  // namespace pear::ad
