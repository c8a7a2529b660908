#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "quasiroute/common.hpp"

namespace quasiroute {

/// Reverse-mode autodiff over dense 2-D double tensors. Scalars are [1,1],
/// vectors [1,n] or [n,1]. Operations record parents and a backward closure;
/// backward() walks the graph once in reverse topological order. Gradients
/// accumulate additively until zero_grad().
class Tensor {
public:
    struct Node {
        int rows = 0;
        int cols = 0;
        std::vector<double> data;
        std::vector<double> grad;
        bool requires_grad = false;
        std::vector<std::shared_ptr<Node>> parents;
        std::function<void(Node&)> backward_fn;

        std::size_t size() const { return data.size(); }
    };

    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    static Tensor zeros(int rows, int cols, bool requires_grad = false);
    static Tensor from(int rows, int cols, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double v);
    static Tensor from_mat(const Mat& m, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    int rows() const { return node_->rows; }
    int cols() const { return node_->cols; }
    std::size_t size() const { return node_->size(); }
    bool requires_grad() const { return node_->requires_grad; }

    const std::vector<double>& data() const { return node_->data; }
    std::vector<double>& data() { return node_->data; }
    const std::vector<double>& grad() const { return node_->grad; }

    double value() const;            // scalar tensors only
    double at(int i, int j) const { return node_->data[static_cast<std::size_t>(i) * cols() + j]; }

    void zero_grad() { node_->grad.assign(node_->size(), 0.0); }

    std::shared_ptr<Node> node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

namespace ops {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);

/// Expands [1,n], [m,1] or [1,1] to [rows, cols]; backward sums back.
Tensor broadcast_to(const Tensor& a, int rows, int cols);

Tensor concat_cols(const std::vector<Tensor>& parts);  // axis 1
Tensor concat_rows(const std::vector<Tensor>& parts);  // axis 0
Tensor gather_rows(const Tensor& a, const std::vector<int>& indices);
/// Picks a[row_idx[k], col_idx[k]] into a [k,1] tensor.
Tensor select(const Tensor& a, const std::vector<int>& row_idx, const std::vector<int>& col_idx);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sqrt(const Tensor& a);

Tensor sum(const Tensor& a);   // full reduction to [1,1]
Tensor mean(const Tensor& a);
Tensor sum_axis(const Tensor& a, int axis);  // axis 0 -> [1,c]; axis 1 -> [r,1]

/// Row-wise max as a constant (no gradient path); safe inside shift-invariant
/// ratios such as the attention normalizer.
Tensor row_max_detached(const Tensor& a);

/// Softmax per row of (logits + mask); mask entries <= -kMaskLarge/2 give
/// exactly zero probability and receive zero gradient. A fully-masked row is
/// a DomainError.
Tensor masked_softmax(const Tensor& logits, const Tensor& mask);

/// Normalizes each feature column over the rows (mean 0, variance 1 with
/// population variance + eps), then applies gamma/beta per feature.
Tensor instance_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

}  // namespace ops

/// Backpropagates from a scalar loss; repeated calls accumulate into grads.
void backward(const Tensor& loss);

/// Max relative error between analytic and central-difference gradients of a
/// scalar-valued function at x; denominator max(|a|, |n|, 1e-8).
double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor& x, double h = 1e-5);

/// Named parameter checkpoint: `path` gets little-endian float32 arrays,
/// `path + ".json"` the manifest with names, shapes, offsets and hyperparameters.
struct NamedArray {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::vector<double> values;
};

void save_checkpoint(const std::string& path, const std::vector<NamedArray>& arrays,
                     const std::map<std::string, double>& hyper);

struct Checkpoint {
    std::vector<NamedArray> arrays;
    std::map<std::string, double> hyper;

    const NamedArray& find(const std::string& name) const;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace quasiroute
