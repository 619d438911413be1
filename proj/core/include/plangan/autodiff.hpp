#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "plangan/tensor.hpp"

namespace plangan {

// Reverse-mode automatic differentiation over Tensors.
//
// Every vjp is itself expressed through Var operations, so gradients are
// differentiable again (needed for the WGAN gradient penalty, whose critic
// update differentiates through an input-gradient norm).

class Var;
// gradient for one parent, called only for parents on a requested path
using VjpFn = std::function<Var(int parent_index, const Var& grad_out)>;

struct Node {
    Tensor value;
    bool requires_grad = false;
    std::vector<Var> parents;
    VjpFn vjp;
};

class Var {
  public:
    Var() = default;
    explicit Var(Tensor value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Tensor& val() const { return node_->value; }
    const std::vector<int>& shape() const { return node_->value.shape(); }
    int size() const { return node_->value.size(); }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    double scalar() const;

    Var detach() const;  // same value, no history

    std::shared_ptr<Node> node_;
};

Var constant(Tensor t);
Var parameter(Tensor t);
Var make_op(Tensor value, std::vector<Var> parents, VjpFn vjp);

// ---- primitives ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_scalar(const Var& a, double c);
Var mul_scalar(const Var& a, double c);
Var scale_by(const Var& a, const Var& s);  // s is a scalar Var
Var neg(const Var& a);

Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b);  // a . b^T without materializing b^T
Var matmul_tn(const Var& a, const Var& b);  // a^T . b
Var transpose(const Var& a);
Var reshape(const Var& a, std::vector<int> shape);
Var concat0(const std::vector<Var>& parts);               // along axis 0
Var slice0(const Var& a, int begin, int end);             // along axis 0
Var embed0(const Var& a, int begin, int total_rows);      // zero-pad rows around a
Var gather_rows(const Var& a, std::vector<int> idx);      // a: (m, n)
Var scatter_rows(const Var& a, std::vector<int> idx, int m);
Var swap_last2(const Var& a, int d0, int d1, int d2);     // (d0,d1,d2) -> (d0,d2,d1)

Var bcast_rows(const Var& v, int rows);  // v: (n) -> (rows, n)
Var bcast_cols(const Var& v, int cols);  // v: (m) -> (m, cols)
Var col_sum(const Var& a);               // (m, n) -> (n)
Var row_sum(const Var& a);               // (m, n) -> (m)
Var sum(const Var& a);                   // -> scalar
Var mean(const Var& a);
Var bcast_full(const Var& s, std::vector<int> shape);  // scalar -> shape

Var take(const Var& a, int flat_index);  // -> scalar
Var put(const Var& s, int flat_index, std::vector<int> shape);

Var exp(const Var& a);
Var log(const Var& a);
Var sqrt(const Var& a);
Var recip(const Var& a);
Var erf(const Var& a);
Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var softplus(const Var& a);
Var softmax_vec(const Var& a);   // 1-d
Var logsumexp(const Var& a);     // 1-d -> scalar

// im2col / col2im pair; x is (C, H, W), columns are (C*k*k, Hout*Wout)
Var unfold(const Var& x, int k, int stride, int pad);
Var fold(const Var& cols, int channels, int height, int width, int k, int stride, int pad);
void conv_out_size(int h, int w, int k, int stride, int pad, int* hout, int* wout);

// batched over rows: x is (M, C*H*W), columns are (C*k*k, M*Hout*Wout) with
// column index m*Hout*Wout + l
Var unfold_batch(const Var& x, int c, int h, int w, int k, int stride, int pad);
Var fold_batch(const Var& cols, int m, int c, int h, int w, int k, int stride, int pad);
Var swap_first2_3d(const Var& a, int d0, int d1, int d2);  // (d0,d1,d2) -> (d1,d0,d2)

// ---- compositions ----
Var gelu(const Var& a);  // exact erf form
Var square(const Var& a);
Var frobenius_norm(const Var& a);
Var bce_with_logits_mean(const Var& logits, const Var& targets);
Var cross_entropy_logits(const Var& logits, int target_class);  // 1-d logits

// d(root)/d(wrt). root must be a scalar. When create_graph is false the
// returned gradients are detached values; when true they stay in the graph
// and can be differentiated again.
std::vector<Var> grad(const Var& root, const std::vector<Var>& wrt, bool create_graph = false);

// Disables history recording while alive (inference paths).
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
    bool prev_;
};

}  // namespace plangan
