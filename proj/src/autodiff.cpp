// SPDX-License-Identifier: Apache-2.0

#include "pear/autodiff.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <unordered_set>

#include "pear/kernels.hpp"

namespace pear::ad {

namespace {

thread_local int g_no_grad_depth = 0;

void check(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

std::string shapes(const Var& a, const Var& b) {
    return a.value().shape_str() + " and " + b.value().shape_str();
}

}  // namespace

Matrix& Node::ensure_grad() {
    if (!grad.same_shape(value)) {
        grad = Matrix::zeros(value.rows(), value.cols());
    }
    return grad;
}

NoGradGuard::NoGradGuard() { ++g_no_grad_depth; }
NoGradGuard::~NoGradGuard() { --g_no_grad_depth; }

bool grad_enabled() { return g_no_grad_depth == 0; }

double Var::scalar() const {
    if (rows() != 1 || cols() != 1) {
        throw std::invalid_argument("scalar: var has shape " + value().shape_str());
    }
    return value().at(0, 0);
}

Var leaf(Matrix value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
}

Var make_op(Matrix value, std::vector<Var> parents,
            std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    bool req = false;
    for (const auto& p : parents) req = req || p.requires_grad();
    n->requires_grad = req && grad_enabled();
    if (n->requires_grad) {
        n->parents.reserve(parents.size());
        for (auto& p : parents) n->parents.push_back(p.node());
        n->backward = std::move(backward_fn);
    }
    return Var(std::move(n));
}

Var matmul(const Var& a, const Var& b) {
    check(a.cols() == b.rows(), "matmul: inner dimensions differ, " + shapes(a, b));
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Matrix out(m, n);
    kernels::ops().gemm_nn(m, n, k, a.value().data(), b.value().data(), out.data(), false);
    return make_op(std::move(out), {a, b}, [m, k, n](Node& node) {
        Node& pa = *node.parents[0];
        Node& pb = *node.parents[1];
        if (pa.requires_grad) {
            kernels::ops().gemm_nt(m, k, n, node.grad.data(), pb.value.data(),
                                   pa.ensure_grad().data(), true);
        }
        if (pb.requires_grad) {
            kernels::ops().gemm_tn(k, n, m, pa.value.data(), node.grad.data(),
                                   pb.ensure_grad().data(), true);
        }
    });
}

Var matmul_nt(const Var& a, const Var& b) {
    check(a.cols() == b.cols(), "matmul_nt: contraction dimensions differ, " + shapes(a, b));
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    Matrix out(m, n);
    kernels::ops().gemm_nt(m, n, k, a.value().data(), b.value().data(), out.data(), false);
    return make_op(std::move(out), {a, b}, [m, k, n](Node& node) {
        Node& pa = *node.parents[0];
        Node& pb = *node.parents[1];
        if (pa.requires_grad) {
            kernels::ops().gemm_nn(m, k, n, node.grad.data(), pb.value.data(),
                                   pa.ensure_grad().data(), true);
        }
        if (pb.requires_grad) {
            kernels::ops().gemm_tn(n, k, m, node.grad.data(), pa.value.data(),
                                   pb.ensure_grad().data(), true);
        }
    });
}

Var transpose(const Var& a) {
    const std::size_t r = a.rows(), c = a.cols();
    Matrix out(c, r);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(j, i) = a.value().at(i, j);
    return make_op(std::move(out), {a}, [r, c](Node& node) {
        Node& pa = *node.parents[0];
        if (!pa.requires_grad) return;
        Matrix& g = pa.ensure_grad();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) g.at(i, j) += node.grad.at(j, i);
    });
}

Var add(const Var& a, const Var& b) {
    check(a.value().same_shape(b.value()), "add: shape mismatch, " + shapes(a, b));
    Matrix out = a.value();
    kernels::ops().axpy(out.size(), 1.0, b.value().data(), out.data());
    return make_op(std::move(out), {a, b}, [](Node& node) {
        for (auto& p : node.parents) {
            if (p->requires_grad) {
                kernels::ops().axpy(node.grad.size(), 1.0, node.grad.data(),
                                    p->ensure_grad().data());
            }
        }
    });
}

Var sub(const Var& a, const Var& b) {
    check(a.value().same_shape(b.value()), "sub: shape mismatch, " + shapes(a, b));
    Matrix out = a.value();
    kernels::ops().axpy(out.size(), -1.0, b.value().data(), out.data());
    return make_op(std::move(out), {a, b}, [](Node& node) {
        Node& pa = *node.parents[0];
        Node& pb = *node.parents[1];
        if (pa.requires_grad) {
            kernels::ops().axpy(node.grad.size(), 1.0, node.grad.data(),
                                pa.ensure_grad().data());
        }
        if (pb.requires_grad) {
            kernels::ops().axpy(node.grad.size(), -1.0, node.grad.data(),
                                pb.ensure_grad().data());
        }
    });
}

Var mul_elem(const Var& a, const Var& b) {
    check(a.value().same_shape(b.value()), "mul_elem: shape mismatch, " + shapes(a, b));
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = a.value().data()[i] * b.value().data()[i];
    return make_op(std::move(out), {a, b}, [](Node& node) {
        Node& pa = *node.parents[0];
        Node& pb = *node.parents[1];
        const std::size_t n = node.grad.size();
        if (pa.requires_grad) {
            double* g = pa.ensure_grad().data();
            for (std::size_t i = 0; i < n; ++i)
                g[i] += node.grad.data()[i] * pb.value.data()[i];
        }
        if (pb.requires_grad) {
            double* g = pb.ensure_grad().data();
            for (std::size_t i = 0; i < n; ++i)
                g[i] += node.grad.data()[i] * pa.value.data()[i];
        }
    });
}

Var add_n(const std::vector<Var>& xs) {
    check(!xs.empty(), "add_n: empty input");
    Matrix out = xs[0].value();
    for (std::size_t i = 1; i < xs.size(); ++i) {
        check(xs[i].value().same_shape(out),
              "add_n: shape mismatch at input " + std::to_string(i));
        kernels::ops().axpy(out.size(), 1.0, xs[i].value().data(), out.data());
    }
    return make_op(std::move(out), xs, [](Node& node) {
        for (auto& p : node.parents) {
            if (p->requires_grad) {
                kernels::ops().axpy(node.grad.size(), 1.0, node.grad.data(),
                                    p->ensure_grad().data());
            }
        }
    });
}

Var add_row_broadcast(const Var& a, const Var& bias) {
    check(bias.rows() == 1 && bias.cols() == a.cols(),
          "add_row_broadcast: bias shape mismatch, " + shapes(a, bias));
    Matrix out = a.value();
    kernels::ops().add_row_bias(out.rows(), out.cols(), bias.value().data(), out.data());
    return make_op(std::move(out), {a, bias}, [](Node& node) {
        Node& pa = *node.parents[0];
        Node& pb = *node.parents[1];
        const std::size_t rows = node.grad.rows(), cols = node.grad.cols();
        if (pa.requires_grad) {
            kernels::ops().axpy(node.grad.size(), 1.0, node.grad.data(),
                                pa.ensure_grad().data());
        }
        if (pb.requires_grad) {
            double* g = pb.ensure_grad().data();
            for (std::size_t r = 0; r < rows; ++r) {
                kernels::ops().axpy(cols, 1.0, node.grad.row(r), g);
            }
        }
    });
}

Var scale(const Var& a, double s) {
    Matrix out = a.value();
    kernels::ops().scale(out.size(), s, out.data());
    return make_op(std::move(out), {a}, [s](Node& node) {
        Node& pa = *node.parents[0];
        if (pa.requires_grad) {
            kernels::ops().axpy(node.grad.size(), s, node.grad.data(),
                                pa.ensure_grad().data());
        }
    });
}

Var relu(const Var& a) {
    Matrix out(a.rows(), a.cols());
    kernels::ops().relu(out.size(), a.value().data(), out.data());
    return make_op(std::move(out), {a}, [](Node& node) {
        Node& pa = *node.parents[0];
        if (pa.requires_grad) {
            kernels::ops().relu_backward(node.grad.size(), pa.value.data(),
                                         node.grad.data(), pa.ensure_grad().data());
        }
    });
}

Var sigmoid(const Var& a) {
    Matrix out(a.rows(), a.cols());
    kernels::ops().sigmoid(out.size(), a.value().data(), out.data());
    return make_op(std::move(out), {a}, [](Node& node) {
        Node& pa = *node.parents[0];
        if (!pa.requires_grad) return;
        double* g = pa.ensure_grad().data();
        const std::size_t n = node.grad.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double y = node.value.data()[i];
            g[i] += node.grad.data()[i] * y * (1.0 - y);
        }
    });
}

Var softmax_rows(const Var& a) {
    check(a.rows() >= 1 && a.cols() >= 1,
          "softmax_rows: empty matrix " + a.value().shape_str());
    Matrix out(a.rows(), a.cols());
    kernels::ops().softmax_rows(a.rows(), a.cols(), a.value().data(), out.data());
    return make_op(std::move(out), {a}, [](Node& node) {
        Node& pa = *node.parents[0];
        if (!pa.requires_grad) return;
        const std::size_t rows = node.value.rows(), cols = node.value.cols();
        Matrix& g = pa.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = node.value.row(r);
            const double* dy = node.grad.row(r);
            const double dotv = kernels::ops().dot(cols, dy, y);
            double* gx = g.row(r);
            for (std::size_t c = 0; c < cols; ++c) {
                gx[c] += y[c] * (dy[c] - dotv);
            }
        }
    });
}

Var concat_rows(const std::vector<Var>& xs) {
    check(!xs.empty(), "concat_rows: empty input");
    const std::size_t cols = xs[0].cols();
    std::size_t rows = 0;
    for (const auto& x : xs) {
        check(x.cols() == cols, "concat_rows: column count mismatch");
        rows += x.rows();
    }
    Matrix out(rows, cols);
    std::size_t r0 = 0;
    for (const auto& x : xs) {
        std::memcpy(out.row(r0), x.value().data(), x.value().size() * sizeof(double));
        r0 += x.rows();
    }
    return make_op(std::move(out), xs, [](Node& node) {
        std::size_t r0 = 0;
        for (auto& p : node.parents) {
            const std::size_t nr = p->value.rows();
            if (p->requires_grad) {
                kernels::ops().axpy(p->value.size(), 1.0, node.grad.row(r0),
                                    p->ensure_grad().data());
            }
            r0 += nr;
        }
    });
}

Var concat_cols(const std::vector<Var>& xs) {
    check(!xs.empty(), "concat_cols: empty input");
    const std::size_t rows = xs[0].rows();
    std::size_t cols = 0;
    for (const auto& x : xs) {
        check(x.rows() == rows, "concat_cols: row count mismatch");
        cols += x.cols();
    }
    Matrix out(rows, cols);
    std::size_t c0 = 0;
    for (const auto& x : xs) {
        for (std::size_t r = 0; r < rows; ++r) {
            std::memcpy(out.row(r) + c0, x.value().row(r), x.cols() * sizeof(double));
        }
        c0 += x.cols();
    }
    return make_op(std::move(out), xs, [rows](Node& node) {
        std::size_t c0 = 0;
        for (auto& p : node.parents) {
            const std::size_t nc = p->value.cols();
            if (p->requires_grad) {
                Matrix& g = p->ensure_grad();
                for (std::size_t r = 0; r < rows; ++r) {
                    kernels::ops().axpy(nc, 1.0, node.grad.row(r) + c0, g.row(r));
                }
            }
            c0 += nc;
        }
    });
}

Var slice_rows(const Var& a, std::size_t row0, std::size_t row1) {
    check(row0 <= row1 && row1 <= a.rows(), "slice_rows: range out of bounds");
    const std::size_t cols = a.cols();
    Matrix out(row1 - row0, cols);
    std::memcpy(out.data(), a.value().row(row0), out.size() * sizeof(double));
    return make_op(std::move(out), {a}, [row0](Node& node) {
        Node& pa = *node.parents[0];
        if (!pa.requires_grad) return;
        kernels::ops().axpy(node.grad.size(), 1.0, node.grad.data(),
                            pa.ensure_grad().row(row0));
    });
}

Var slice_cols(const Var& a, std::size_t col0, std::size_t col1) {
    check(col0 <= col1 && col1 <= a.cols(), "slice_cols: range out of bounds");
    const std::size_t rows = a.rows(), w = col1 - col0;
    Matrix out(rows, w);
    for (std::size_t r = 0; r < rows; ++r) {
        std::memcpy(out.row(r), a.value().row(r) + col0, w * sizeof(double));
    }
    return make_op(std::move(out), {a}, [col0, w](Node& node) {
        Node& pa = *node.parents[0];
        if (!pa.requires_grad) return;
        Matrix& g = pa.ensure_grad();
        for (std::size_t r = 0; r < node.grad.rows(); ++r) {
            kernels::ops().axpy(w, 1.0, node.grad.row(r), g.row(r) + col0);
        }
    });
}

Var sum_all(const Var& a) {
    Matrix out(1, 1);
    double s = 0.0;
    for (std::size_t i = 0; i < a.value().size(); ++i) s += a.value().data()[i];
    out.at(0, 0) = s;
    return make_op(std::move(out), {a}, [](Node& node) {
        Node& pa = *node.parents[0];
        if (!pa.requires_grad) return;
        const double g = node.grad.at(0, 0);
        double* dst = pa.ensure_grad().data();
        for (std::size_t i = 0; i < pa.value.size(); ++i) dst[i] += g;
    });
}

Var mean_all(const Var& a) {
    check(a.value().size() > 0, "mean_all: empty matrix");
    return scale(sum_all(a), 1.0 / static_cast<double>(a.value().size()));
}

Var dropout(const Var& a, double rate, Rng& rng, bool train) {
    if (!train || rate == 0.0) return a;
    check(rate > 0.0 && rate < 1.0, "dropout: rate must be in [0,1)");
    const double keep = 1.0 - rate;
    auto mask = std::make_shared<Matrix>(a.rows(), a.cols());
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double m = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
        mask->data()[i] = m;
        out.data()[i] = a.value().data()[i] * m;
    }
    return make_op(std::move(out), {a}, [mask](Node& node) {
        Node& pa = *node.parents[0];
        if (!pa.requires_grad) return;
        double* g = pa.ensure_grad().data();
        for (std::size_t i = 0; i < node.grad.size(); ++i) {
            g[i] += node.grad.data()[i] * mask->data()[i];
        }
    });
}

Var linear_rows(const Var& x, const Var& w, const Var& b, Activation act) {
    check(x.cols() == w.cols(),
          "linear: input width does not match weight, " + shapes(x, w));
    Var out = add_row_broadcast(matmul_nt(x, w), b);
    return act == Activation::Relu ? relu(out) : out;
}

Var linear(const Var& x, const Var& w, const Var& b, Activation act) {
    check(w.cols() == x.rows(),
          "linear: weight columns do not match input rows, " + shapes(w, x));
    return transpose(linear_rows(transpose(x), w, b, act));
}

Var gather_rows(const Var& table, const std::vector<std::size_t>& indices) {
    const std::size_t dim = table.cols();
    for (std::size_t idx : indices) {
        check(idx < table.rows(),
              "gather_rows: index " + std::to_string(idx) + " out of range for table " +
                  table.value().shape_str());
    }
    Matrix out(indices.size(), dim);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        std::memcpy(out.row(i), table.value().row(indices[i]), dim * sizeof(double));
    }
    return make_op(std::move(out), {table}, [indices](Node& node) {
        Node& pt = *node.parents[0];
        if (!pt.requires_grad) return;
        Matrix& g = pt.ensure_grad();
        for (std::size_t i = 0; i < indices.size(); ++i) {
            if (indices[i] == 0) continue;  // padding row stays untrained
            kernels::ops().axpy(node.grad.cols(), 1.0, node.grad.row(i),
                                g.row(indices[i]));
        }
    });
}

namespace {
constexpr double kProbClamp = 1e-12;

inline double clamp_prob(double p) {
    if (p < kProbClamp) return kProbClamp;
    if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
    return p;
}
}  // namespace

Var bce_sum(const Var& probs, const std::vector<int>& labels) {
    check(probs.value().size() == labels.size(),
          "bce_sum: " + std::to_string(labels.size()) + " labels for " +
              probs.value().shape_str() + " probabilities");
    for (int y : labels) {
        check(y == 0 || y == 1, "bce_sum: label " + std::to_string(y) + " not in {0,1}");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double p = clamp_prob(probs.value().data()[i]);
        loss -= labels[i] ? std::log(p) : std::log(1.0 - p);
    }
    Matrix out(1, 1);
    out.at(0, 0) = loss;
    return make_op(std::move(out), {probs}, [labels](Node& node) {
        Node& pp = *node.parents[0];
        if (!pp.requires_grad) return;
        const double g = node.grad.at(0, 0);
        double* dst = pp.ensure_grad().data();
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const double raw = pp.value.data()[i];
            if (raw <= kProbClamp || raw >= 1.0 - kProbClamp) continue;  // clamped: flat
            dst[i] += g * (labels[i] ? -1.0 / raw : 1.0 / (1.0 - raw));
        }
    });
}

void backward(const Var& root) {
    check(root.rows() == 1 && root.cols() == 1,
          "backward: root must be 1x1, got " + root.value().shape_str());
    if (!root.requires_grad()) return;

    // Iterative post-order DFS; the resulting list has parents before users.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
        Node* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({root.node().get(), 0});
    visited.insert(root.node().get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            Node* p = f.node->parents[f.next_parent++].get();
            if (p->requires_grad && visited.insert(p).second) {
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    for (Node* n : order) n->ensure_grad();
    root.node()->grad.at(0, 0) = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward) (*it)->backward(**it);
    }
}

void zero_grad(ParamSet& params) {
    for (auto& p : params) {
        p.var.node()->ensure_grad().fill(0.0);
    }
}

GradCheckReport grad_check(const std::function<Var()>& loss_fn, ParamSet& params,
                           double epsilon, double tolerance) {
    if (epsilon <= 0.0) throw std::invalid_argument("grad_check: epsilon must be > 0");

    zero_grad(params);
    Var loss = loss_fn();
    const double base = loss.scalar();
    if (!std::isfinite(base)) throw std::runtime_error("grad_check: non-finite loss");
    backward(loss);

    std::vector<Matrix> analytic;
    analytic.reserve(params.size());
    for (auto& p : params) analytic.push_back(p.var.node()->ensure_grad());

    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Matrix& theta = params[pi].var.mutable_value();
        for (std::size_t r = 0; r < theta.rows(); ++r) {
            for (std::size_t c = 0; c < theta.cols(); ++c) {
                const double saved = theta.at(r, c);
                double fplus, fminus;
                {
                    NoGradGuard ng;
                    theta.at(r, c) = saved + epsilon;
                    fplus = loss_fn().scalar();
                    theta.at(r, c) = saved - epsilon;
                    fminus = loss_fn().scalar();
                }
                theta.at(r, c) = saved;
                if (!std::isfinite(fplus) || !std::isfinite(fminus)) {
                    throw std::runtime_error("grad_check: non-finite loss");
                }
                const double numeric = (fplus - fminus) / (2.0 * epsilon);
                const double a = analytic[pi].at(r, c);
                const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
                const double rel = std::fabs(a - numeric) / denom;
                if (rel > report.max_rel_error) {
                    report.max_rel_error = rel;
                    report.worst_param = params[pi].name;
                    report.worst_row = r;
                    report.worst_col = c;
                }
            }
        }
    }
    report.passed = report.max_rel_error <= tolerance;
    return report;
}

}  // namespace pear::ad
