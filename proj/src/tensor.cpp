#include "quasiroute/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "json.hpp"

namespace quasiroute {

using Node = Tensor::Node;
using NodePtr = std::shared_ptr<Node>;

namespace {

NodePtr new_node(int rows, int cols) {
    auto n = std::make_shared<Node>();
    n->rows = rows;
    n->cols = cols;
    n->data.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    return n;
}

Tensor make_result(int rows, int cols, std::vector<double> data,
                   std::vector<NodePtr> parents, std::function<void(Node&)> backward_fn) {
    auto n = new_node(rows, cols);
    n->data = std::move(data);
    for (const auto& p : parents) n->requires_grad = n->requires_grad || p->requires_grad;
    if (n->requires_grad) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward_fn);
    }
    return Tensor(n);
}

void ensure_grad(Node& n) {
    if (n.grad.size() != n.size()) n.grad.assign(n.size(), 0.0);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
}

}  // namespace

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
    auto n = new_node(rows, cols);
    n->requires_grad = requires_grad;
    if (requires_grad) n->grad.assign(n->size(), 0.0);
    return Tensor(n);
}

Tensor Tensor::from(int rows, int cols, std::vector<double> values, bool requires_grad) {
    if (values.size() != static_cast<std::size_t>(rows) * cols)
        throw ShapeError("Tensor::from: value count does not match shape");
    auto n = new_node(rows, cols);
    n->data = std::move(values);
    n->requires_grad = requires_grad;
    if (requires_grad) n->grad.assign(n->size(), 0.0);
    return Tensor(n);
}

Tensor Tensor::scalar(double v) { return from(1, 1, {v}); }

Tensor Tensor::from_mat(const Mat& m, bool requires_grad) {
    return from(m.rows, m.cols, m.a, requires_grad);
}

double Tensor::value() const {
    if (size() != 1) throw ShapeError("Tensor::value: tensor is not scalar");
    return node_->data[0];
}

namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
    const int m = a.rows(), k = a.cols(), n = b.cols();
    std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
    const auto& A = a.data();
    const auto& B = b.data();
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            const double av = A[static_cast<std::size_t>(i) * k + p];
            if (av == 0.0) continue;
            const std::size_t brow = static_cast<std::size_t>(p) * n;
            const std::size_t orow = static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) out[orow + j] += av * B[brow + j];
        }
    auto an = a.node();
    auto bn = b.node();
    return make_result(m, n, std::move(out), {an, bn}, [an, bn, m, k, n](Node& self) {
        if (an->requires_grad) {
            ensure_grad(*an);
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (int j = 0; j < n; ++j)
                        acc += self.grad[static_cast<std::size_t>(i) * n + j] *
                               bn->data[static_cast<std::size_t>(p) * n + j];
                    an->grad[static_cast<std::size_t>(i) * k + p] += acc;
                }
        }
        if (bn->requires_grad) {
            ensure_grad(*bn);
            for (int p = 0; p < k; ++p)
                for (int j = 0; j < n; ++j) {
                    double acc = 0.0;
                    for (int i = 0; i < m; ++i)
                        acc += an->data[static_cast<std::size_t>(i) * k + p] *
                               self.grad[static_cast<std::size_t>(i) * n + j];
                    bn->grad[static_cast<std::size_t>(p) * n + j] += acc;
                }
        }
    });
}

Tensor transpose(const Tensor& a) {
    const int r = a.rows(), c = a.cols();
    std::vector<double> out(a.size());
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out[static_cast<std::size_t>(j) * r + i] = a.at(i, j);
    auto an = a.node();
    return make_result(c, r, std::move(out), {an}, [an, r, c](Node& self) {
        ensure_grad(*an);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
                an->grad[static_cast<std::size_t>(i) * c + j] +=
                    self.grad[static_cast<std::size_t>(j) * r + i];
    });
}

namespace {

Tensor elementwise_binary(const Tensor& a, const Tensor& b, const char* name,
                          double (*fwd)(double, double),
                          void (*bwd)(double g, double av, double bv, double& da, double& db)) {
    check_same_shape(a, b, name);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a.data()[i], b.data()[i]);
    auto an = a.node();
    auto bn = b.node();
    return make_result(a.rows(), a.cols(), std::move(out), {an, bn}, [an, bn, bwd](Node& self) {
        if (an->requires_grad) ensure_grad(*an);
        if (bn->requires_grad) ensure_grad(*bn);
        double dummy = 0.0;
        for (std::size_t i = 0; i < self.size(); ++i) {
            double& da = an->requires_grad ? an->grad[i] : dummy;
            double& db = bn->requires_grad ? bn->grad[i] : dummy;
            bwd(self.grad[i], an->data[i], bn->data[i], da, db);
        }
    });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return elementwise_binary(
        a, b, "add", [](double x, double y) { return x + y; },
        [](double g, double, double, double& da, double& db) {
            da += g;
            db += g;
        });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return elementwise_binary(
        a, b, "sub", [](double x, double y) { return x - y; },
        [](double g, double, double, double& da, double& db) {
            da += g;
            db -= g;
        });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return elementwise_binary(
        a, b, "mul", [](double x, double y) { return x * y; },
        [](double g, double av, double bv, double& da, double& db) {
            da += g * bv;
            db += g * av;
        });
}

Tensor div(const Tensor& a, const Tensor& b) {
    for (double v : b.data())
        if (v == 0.0) throw DomainError("div: zero denominator");
    return elementwise_binary(
        a, b, "div", [](double x, double y) { return x / y; },
        [](double g, double av, double bv, double& da, double& db) {
            da += g / bv;
            db -= g * av / (bv * bv);
        });
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * c;
    auto an = a.node();
    return make_result(a.rows(), a.cols(), std::move(out), {an}, [an, c](Node& self) {
        ensure_grad(*an);
        for (std::size_t i = 0; i < self.size(); ++i) an->grad[i] += self.grad[i] * c;
    });
}

Tensor add_scalar(const Tensor& a, double c) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + c;
    auto an = a.node();
    return make_result(a.rows(), a.cols(), std::move(out), {an}, [an](Node& self) {
        ensure_grad(*an);
        for (std::size_t i = 0; i < self.size(); ++i) an->grad[i] += self.grad[i];
    });
}

Tensor broadcast_to(const Tensor& a, int rows, int cols) {
    const int ar = a.rows(), ac = a.cols();
    const bool row_ok = ar == rows || ar == 1;
    const bool col_ok = ac == cols || ac == 1;
    if (!row_ok || !col_ok) throw ShapeError("broadcast_to: incompatible source shape");
    if (ar == rows && ac == cols) return a;
    std::vector<double> out(static_cast<std::size_t>(rows) * cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            out[static_cast<std::size_t>(i) * cols + j] = a.at(ar == 1 ? 0 : i, ac == 1 ? 0 : j);
    auto an = a.node();
    return make_result(rows, cols, std::move(out), {an}, [an, rows, cols, ar, ac](Node& self) {
        ensure_grad(*an);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                an->grad[static_cast<std::size_t>(ar == 1 ? 0 : i) * ac + (ac == 1 ? 0 : j)] +=
                    self.grad[static_cast<std::size_t>(i) * cols + j];
    });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    const int rows = parts[0].rows();
    int cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows) throw ShapeError("concat_cols: row mismatch");
        cols += p.cols();
    }
    std::vector<double> out(static_cast<std::size_t>(rows) * cols);
    int off = 0;
    for (const auto& p : parts) {
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < p.cols(); ++j)
                out[static_cast<std::size_t>(i) * cols + off + j] = p.at(i, j);
        off += p.cols();
    }
    std::vector<NodePtr> parents;
    for (const auto& p : parts) parents.push_back(p.node());
    return make_result(rows, cols, std::move(out), parents, [parents, rows, cols](Node& self) {
        int off2 = 0;
        for (const auto& pn : parents) {
            if (pn->requires_grad) {
                ensure_grad(*pn);
                for (int i = 0; i < rows; ++i)
                    for (int j = 0; j < pn->cols; ++j)
                        pn->grad[static_cast<std::size_t>(i) * pn->cols + j] +=
                            self.grad[static_cast<std::size_t>(i) * cols + off2 + j];
            }
            off2 += pn->cols;
        }
    });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no inputs");
    const int cols = parts[0].cols();
    int rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != cols) throw ShapeError("concat_rows: column mismatch");
        rows += p.rows();
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(rows) * cols);
    for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
    std::vector<NodePtr> parents;
    for (const auto& p : parts) parents.push_back(p.node());
    return make_result(rows, cols, std::move(out), parents, [parents](Node& self) {
        std::size_t off = 0;
        for (const auto& pn : parents) {
            if (pn->requires_grad) {
                ensure_grad(*pn);
                for (std::size_t i = 0; i < pn->size(); ++i) pn->grad[i] += self.grad[off + i];
            }
            off += pn->size();
        }
    });
}

Tensor gather_rows(const Tensor& a, const std::vector<int>& indices) {
    const int cols = a.cols();
    for (int idx : indices)
        if (idx < 0 || idx >= a.rows()) throw ShapeError("gather_rows: index out of range");
    std::vector<double> out(indices.size() * static_cast<std::size_t>(cols));
    for (std::size_t k = 0; k < indices.size(); ++k)
        for (int j = 0; j < cols; ++j) out[k * cols + j] = a.at(indices[k], j);
    auto an = a.node();
    return make_result(static_cast<int>(indices.size()), cols, std::move(out), {an},
                       [an, indices, cols](Node& self) {
                           ensure_grad(*an);
                           for (std::size_t k = 0; k < indices.size(); ++k)
                               for (int j = 0; j < cols; ++j)
                                   an->grad[static_cast<std::size_t>(indices[k]) * cols + j] +=
                                       self.grad[k * cols + j];
                       });
}

Tensor select(const Tensor& a, const std::vector<int>& row_idx, const std::vector<int>& col_idx) {
    if (row_idx.size() != col_idx.size()) throw ShapeError("select: index lists differ in length");
    std::vector<double> out(row_idx.size());
    for (std::size_t k = 0; k < row_idx.size(); ++k) {
        if (row_idx[k] < 0 || row_idx[k] >= a.rows() || col_idx[k] < 0 || col_idx[k] >= a.cols())
            throw ShapeError("select: index out of range");
        out[k] = a.at(row_idx[k], col_idx[k]);
    }
    auto an = a.node();
    const int cols = a.cols();
    return make_result(static_cast<int>(row_idx.size()), 1, std::move(out), {an},
                       [an, row_idx, col_idx, cols](Node& self) {
                           ensure_grad(*an);
                           for (std::size_t k = 0; k < row_idx.size(); ++k)
                               an->grad[static_cast<std::size_t>(row_idx[k]) * cols + col_idx[k]] +=
                                   self.grad[k];
                       });
}

namespace {

Tensor elementwise_unary(const Tensor& a, double (*fwd)(double),
                         double (*dfdx)(double x, double y)) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a.data()[i]);
    auto an = a.node();
    return make_result(a.rows(), a.cols(), std::move(out), {an}, [an, dfdx](Node& self) {
        ensure_grad(*an);
        for (std::size_t i = 0; i < self.size(); ++i)
            an->grad[i] += self.grad[i] * dfdx(an->data[i], self.data[i]);
    });
}

}  // namespace

Tensor sigmoid(const Tensor& a) {
    return elementwise_unary(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
    return elementwise_unary(
        a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& a) {
    return elementwise_unary(
        a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    for (double v : a.data())
        if (v <= 0.0) throw DomainError("log: non-positive input");
    return elementwise_unary(
        a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor relu(const Tensor& a) {
    return elementwise_unary(
        a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sqrt(const Tensor& a) {
    for (double v : a.data())
        if (v < 0.0) throw DomainError("sqrt: negative input");
    return elementwise_unary(
        a, [](double x) { return std::sqrt(x); },
        [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    auto an = a.node();
    return make_result(1, 1, {s}, {an}, [an](Node& self) {
        ensure_grad(*an);
        for (std::size_t i = 0; i < an->size(); ++i) an->grad[i] += self.grad[0];
    });
}

Tensor mean(const Tensor& a) {
    const double inv = 1.0 / static_cast<double>(a.size());
    double s = 0.0;
    for (double v : a.data()) s += v;
    auto an = a.node();
    return make_result(1, 1, {s * inv}, {an}, [an, inv](Node& self) {
        ensure_grad(*an);
        for (std::size_t i = 0; i < an->size(); ++i) an->grad[i] += self.grad[0] * inv;
    });
}

Tensor sum_axis(const Tensor& a, int axis) {
    const int r = a.rows(), c = a.cols();
    if (axis == 0) {
        std::vector<double> out(c, 0.0);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) out[j] += a.at(i, j);
        auto an = a.node();
        return make_result(1, c, std::move(out), {an}, [an, r, c](Node& self) {
            ensure_grad(*an);
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j)
                    an->grad[static_cast<std::size_t>(i) * c + j] += self.grad[j];
        });
    }
    if (axis == 1) {
        std::vector<double> out(r, 0.0);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) out[i] += a.at(i, j);
        auto an = a.node();
        return make_result(r, 1, std::move(out), {an}, [an, r, c](Node& self) {
            ensure_grad(*an);
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j)
                    an->grad[static_cast<std::size_t>(i) * c + j] += self.grad[i];
        });
    }
    throw ShapeError("sum_axis: axis must be 0 or 1");
}

Tensor row_max_detached(const Tensor& a) {
    std::vector<double> out(a.rows());
    for (int i = 0; i < a.rows(); ++i) {
        double m = a.at(i, 0);
        for (int j = 1; j < a.cols(); ++j) m = std::max(m, a.at(i, j));
        out[i] = m;
    }
    return Tensor::from(a.rows(), 1, std::move(out));
}

Tensor masked_softmax(const Tensor& logits, const Tensor& mask) {
    check_same_shape(logits, mask, "masked_softmax");
    const int r = logits.rows(), c = logits.cols();
    std::vector<double> out(logits.size(), 0.0);
    for (int i = 0; i < r; ++i) {
        double m = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (int j = 0; j < c; ++j)
            if (mask.at(i, j) > -kMaskLarge / 2) {
                any = true;
                m = std::max(m, logits.at(i, j) + mask.at(i, j));
            }
        if (!any) throw DomainError("masked_softmax: fully masked row");
        double z = 0.0;
        for (int j = 0; j < c; ++j)
            if (mask.at(i, j) > -kMaskLarge / 2) {
                const double e = std::exp(logits.at(i, j) + mask.at(i, j) - m);
                out[static_cast<std::size_t>(i) * c + j] = e;
                z += e;
            }
        for (int j = 0; j < c; ++j) out[static_cast<std::size_t>(i) * c + j] /= z;
    }
    auto ln = logits.node();
    return make_result(r, c, std::move(out), {ln}, [ln, r, c](Node& self) {
        ensure_grad(*ln);
        for (int i = 0; i < r; ++i) {
            double dot = 0.0;
            for (int j = 0; j < c; ++j)
                dot += self.grad[static_cast<std::size_t>(i) * c + j] *
                       self.data[static_cast<std::size_t>(i) * c + j];
            for (int j = 0; j < c; ++j) {
                const std::size_t k = static_cast<std::size_t>(i) * c + j;
                ln->grad[k] += self.data[k] * (self.grad[k] - dot);
            }
        }
    });
}

Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    const int r = x.rows(), c = x.cols();
    if (gamma.size() != static_cast<std::size_t>(c) || beta.size() != static_cast<std::size_t>(c))
        throw ShapeError("instance_norm: gamma/beta must have one entry per feature");
    std::vector<double> sig(c, 0.0), xhat(x.size());
    for (int j = 0; j < c; ++j) {
        double mu = 0.0;
        for (int i = 0; i < r; ++i) mu += x.at(i, j);
        mu /= r;
        double var = 0.0;
        for (int i = 0; i < r; ++i) {
            const double d = x.at(i, j) - mu;
            var += d * d;
        }
        var /= r;
        sig[j] = std::sqrt(var + eps);
        for (int i = 0; i < r; ++i)
            xhat[static_cast<std::size_t>(i) * c + j] = (x.at(i, j) - mu) / sig[j];
    }
    std::vector<double> out(x.size());
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * c + j;
            out[k] = gamma.data()[j] * xhat[k] + beta.data()[j];
        }
    auto xn = x.node();
    auto gn = gamma.node();
    auto bn = beta.node();
    return make_result(r, c, std::move(out), {xn, gn, bn},
                       [xn, gn, bn, r, c, sig, xhat](Node& self) {
                           for (int j = 0; j < c; ++j) {
                               double gsum = 0.0, gxsum = 0.0;
                               for (int i = 0; i < r; ++i) {
                                   const std::size_t k = static_cast<std::size_t>(i) * c + j;
                                   gsum += self.grad[k];
                                   gxsum += self.grad[k] * xhat[k];
                               }
                               if (gn->requires_grad) {
                                   ensure_grad(*gn);
                                   gn->grad[j] += gxsum;
                               }
                               if (bn->requires_grad) {
                                   ensure_grad(*bn);
                                   bn->grad[j] += gsum;
                               }
                               if (xn->requires_grad) {
                                   ensure_grad(*xn);
                                   const double g = gn->data[j];
                                   for (int i = 0; i < r; ++i) {
                                       const std::size_t k = static_cast<std::size_t>(i) * c + j;
                                       xn->grad[k] += g / sig[j] *
                                                      (self.grad[k] - gsum / r - xhat[k] * gxsum / r);
                                   }
                               }
                           }
                       });
}

}  // namespace ops

void backward(const Tensor& loss) {
    if (loss.size() != 1) throw ShapeError("backward: loss must be scalar");
    auto root = loss.node();
    if (!root->requires_grad) return;

    // reverse topological order via iterative post-order DFS
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<NodePtr, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        NodePtr node = stack.back().first;
        const std::size_t idx = stack.back().second;
        if (idx < node->parents.size()) {
            stack.back().second += 1;
            NodePtr next = node->parents[idx];
            if (next->requires_grad && visited.insert(next.get()).second)
                stack.emplace_back(next, 0);
        } else {
            order.push_back(node.get());
            stack.pop_back();
        }
    }

    ensure_grad(*root);
    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn) {
            ensure_grad(*n);
            n->backward_fn(*n);
        }
    }
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor& x, double h) {
    Tensor out = f(x);
    if (out.size() != 1) throw ShapeError("grad_check: function must be scalar-valued");
    x.zero_grad();
    backward(out);
    const std::vector<double> analytic = x.grad();

    double max_rel = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x.data()[i];
        x.data()[i] = keep + h;
        const double up = f(x).value();
        x.data()[i] = keep - h;
        const double down = f(x).value();
        x.data()[i] = keep;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
        max_rel = std::max(max_rel, std::abs(analytic[i] - numeric) / denom);
    }
    return max_rel;
}

const NamedArray& Checkpoint::find(const std::string& name) const {
    for (const auto& a : arrays)
        if (a.name == name) return a;
    throw InvalidInput("checkpoint: missing array " + name);
}

void save_checkpoint(const std::string& path, const std::vector<NamedArray>& arrays,
                     const std::map<std::string, double>& hyper) {
    std::ofstream bin(path, std::ios::binary);
    if (!bin) throw InvalidInput("save_checkpoint: cannot open " + path);
    nlohmann::json manifest;
    manifest["arrays"] = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& arr : arrays) {
        for (double v : arr.values) {
            const float f = static_cast<float>(v);
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            const unsigned char bytes[4] = {static_cast<unsigned char>(u & 0xFF),
                                            static_cast<unsigned char>((u >> 8) & 0xFF),
                                            static_cast<unsigned char>((u >> 16) & 0xFF),
                                            static_cast<unsigned char>((u >> 24) & 0xFF)};
            bin.write(reinterpret_cast<const char*>(bytes), 4);
        }
        manifest["arrays"].push_back({{"name", arr.name},
                                      {"shape", {arr.rows, arr.cols}},
                                      {"offset", offset},
                                      {"count", arr.values.size()}});
        offset += arr.values.size() * 4;
    }
    manifest["hyper"] = hyper;
    std::ofstream js(path + ".json");
    if (!js) throw InvalidInput("save_checkpoint: cannot open manifest for " + path);
    js << manifest.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream js(path + ".json");
    if (!js) throw InvalidInput("load_checkpoint: missing manifest " + path + ".json");
    nlohmann::json manifest;
    js >> manifest;
    std::ifstream bin(path, std::ios::binary);
    if (!bin) throw InvalidInput("load_checkpoint: missing " + path);

    Checkpoint ckpt;
    for (const auto& [key, value] : manifest.at("hyper").items())
        ckpt.hyper[key] = value.get<double>();
    for (const auto& entry : manifest.at("arrays")) {
        NamedArray arr;
        arr.name = entry.at("name").get<std::string>();
        arr.rows = entry.at("shape")[0].get<int>();
        arr.cols = entry.at("shape")[1].get<int>();
        const std::size_t count = entry.at("count").get<std::size_t>();
        bin.seekg(static_cast<std::streamoff>(entry.at("offset").get<std::size_t>()));
        arr.values.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            unsigned char bytes[4];
            bin.read(reinterpret_cast<char*>(bytes), 4);
            if (!bin) throw ParseError("load_checkpoint: truncated binary " + path);
            const std::uint32_t u = static_cast<std::uint32_t>(bytes[0]) |
                                    (static_cast<std::uint32_t>(bytes[1]) << 8) |
                                    (static_cast<std::uint32_t>(bytes[2]) << 16) |
                                    (static_cast<std::uint32_t>(bytes[3]) << 24);
            float f;
            std::memcpy(&f, &u, 4);
            arr.values[i] = static_cast<double>(f);
        }
        ckpt.arrays.push_back(std::move(arr));
    }
    return ckpt;
}

}  // namespace quasiroute
