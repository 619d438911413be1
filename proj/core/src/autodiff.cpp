#include "plangan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "plangan/errors.hpp"

namespace plangan {

namespace {

thread_local bool g_grad_enabled = true;

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.shape() != b.shape())
        throw ShapeMismatchError(std::string(op) + ": " + shape_str(a.shape()) + " vs " +
                                 shape_str(b.shape()));
}

}  // namespace

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad && g_grad_enabled;
}

double Var::scalar() const {
    if (size() != 1) throw ShapeMismatchError("scalar() on tensor of size " + std::to_string(size()));
    return val()[0];
}

Var Var::detach() const { return Var(node_->value, false); }

Var constant(Tensor t) { return Var(std::move(t), false); }

Var parameter(Tensor t) {
    Var v(std::move(t), false);
    v.node_->requires_grad = true;  // parameters ignore NoGradGuard at creation
    return v;
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Var make_op(Tensor value, std::vector<Var> parents, VjpFn vjp) {
    bool needs = false;
    if (g_grad_enabled)
        for (const auto& p : parents)
            if (p.requires_grad()) { needs = true; break; }
    Var out(std::move(value), false);
    if (needs) {
        out.node_->requires_grad = true;
        out.node_->parents = std::move(parents);
        out.node_->vjp = std::move(vjp);
    }
    return out;
}

// ---------------------------------------------------------------- arithmetic

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor out = Tensor::uninit(a.shape());
    const double* pa = a.val().data();
    const double* pb = b.val().data();
    double* po = out.data();
    for (int i = 0; i < out.size(); ++i) po[i] = pa[i] + pb[i];
    return make_op(std::move(out), {a, b}, [](int, const Var& g) { return g; });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor out = Tensor::uninit(a.shape());
    const double* pa = a.val().data();
    const double* pb = b.val().data();
    double* po = out.data();
    for (int i = 0; i < out.size(); ++i) po[i] = pa[i] - pb[i];
    return make_op(std::move(out), {a, b},
                   [](int i, const Var& g) { return i == 0 ? g : neg(g); });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Tensor out = Tensor::uninit(a.shape());
    const double* pa = a.val().data();
    const double* pb = b.val().data();
    double* po = out.data();
    for (int i = 0; i < out.size(); ++i) po[i] = pa[i] * pb[i];
    return make_op(std::move(out), {a, b},
                   [a, b](int i, const Var& g) { return i == 0 ? mul(g, b) : mul(g, a); });
}

Var add_scalar(const Var& a, double c) {
    Tensor out = Tensor::uninit(a.shape());
    const double* pa = a.val().data();
    double* po = out.data();
    for (int i = 0; i < out.size(); ++i) po[i] = pa[i] + c;
    return make_op(std::move(out), {a}, [](int, const Var& g) { return g; });
}

Var mul_scalar(const Var& a, double c) {
    Tensor out = Tensor::uninit(a.shape());
    const double* pa = a.val().data();
    double* po = out.data();
    for (int i = 0; i < out.size(); ++i) po[i] = pa[i] * c;
    return make_op(std::move(out), {a}, [c](int, const Var& g) { return mul_scalar(g, c); });
}

Var scale_by(const Var& a, const Var& s) {
    if (s.size() != 1) throw ShapeMismatchError("scale_by: scale must be a scalar");
    double sv = s.val()[0];
    Tensor out = Tensor::uninit(a.shape());
    const double* pa = a.val().data();
    double* po = out.data();
    for (int i = 0; i < out.size(); ++i) po[i] = pa[i] * sv;
    return make_op(std::move(out), {a, s}, [a, s](int i, const Var& g) {
        return i == 0 ? scale_by(g, s) : sum(mul(g, a));
    });
}

Var neg(const Var& a) { return mul_scalar(a, -1.0); }

// ------------------------------------------------------------------- linear

namespace {

// c (m,n) += a (m,k) . b (k,n); each output row is accumulated serially by
// one thread, so the parallel form is bitwise identical to the serial one.
// Columns are blocked to keep the active slice of b in cache.
constexpr int kColBlock = 1024;

void mm_nn(const double* __restrict pa, const double* __restrict pb, double* __restrict po,
           int m, int k, int n) {
    for (int j0 = 0; j0 < n; j0 += kColBlock) {
        int width = std::min(kColBlock, n - j0);
        for (int i = 0; i < m; ++i) {
            const double* arow = pa + static_cast<size_t>(i) * k;
            double* orow = po + static_cast<size_t>(i) * n + j0;
            {
                double av = arow[0];
                const double* brow = pb + j0;
                for (int j = 0; j < width; ++j) orow[j] = av * brow[j];
            }
            for (int kk = 1; kk < k; ++kk) {
                double av = arow[kk];
                if (av == 0.0) continue;
                const double* brow = pb + static_cast<size_t>(kk) * n + j0;
                for (int j = 0; j < width; ++j) orow[j] += av * brow[j];
            }
        }
    }
}

// c (m,n) += a (m,k) . b^T where b is (n,k)
void mm_nt(const double* __restrict pa, const double* __restrict pb, double* __restrict po,
           int m, int k, int n) {
    if (k <= 24) {
        // short dots vectorize poorly; transpose b once and stream rows
        std::vector<double> bt(static_cast<size_t>(k) * n);
        for (int j = 0; j < n; ++j)
            for (int kk = 0; kk < k; ++kk)
                bt[static_cast<size_t>(kk) * n + j] = pb[static_cast<size_t>(j) * k + kk];
        mm_nn(pa, bt.data(), po, m, k, n);
        return;
    }
    for (int i = 0; i < m; ++i) {
        const double* arow = pa + static_cast<size_t>(i) * k;
        double* orow = po + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const double* brow = pb + static_cast<size_t>(j) * k;
            double acc = 0.0;
            for (int kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
            orow[j] = acc;
        }
    }
}

// c (m,n) += a^T . b where a is (k,m), b is (k,n)
void mm_tn(const double* __restrict pa, const double* __restrict pb, double* __restrict po,
           int m, int k, int n) {
    if (static_cast<long>(m) * k <= 16384) {
        // transpose the small left operand once for contiguous row access
        std::vector<double> at(static_cast<size_t>(m) * k);
        for (int kk = 0; kk < k; ++kk)
            for (int i = 0; i < m; ++i)
                at[static_cast<size_t>(i) * k + kk] = pa[static_cast<size_t>(kk) * m + i];
        mm_nn(at.data(), pb, po, m, k, n);
        return;
    }
    for (int j0 = 0; j0 < n; j0 += kColBlock) {
        int width = std::min(kColBlock, n - j0);
        for (int i = 0; i < m; ++i) {
            double* orow = po + static_cast<size_t>(i) * n + j0;
            {
                double av = pa[static_cast<size_t>(0) * m + i];
                const double* brow = pb + j0;
                for (int j = 0; j < width; ++j) orow[j] = av * brow[j];
            }
            for (int kk = 1; kk < k; ++kk) {
                double av = pa[static_cast<size_t>(kk) * m + i];
                if (av == 0.0) continue;
                const double* brow = pb + static_cast<size_t>(kk) * n + j0;
                for (int j = 0; j < width; ++j) orow[j] += av * brow[j];
            }
        }
    }
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
        throw ShapeMismatchError("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    int m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    Tensor out = Tensor::uninit({m, n});
    mm_nn(a.val().data(), b.val().data(), out.data(), m, k, n);
    return make_op(std::move(out), {a, b}, [a, b](int i, const Var& g) {
        return i == 0 ? matmul_nt(g, b) : matmul_tn(a, g);
    });
}

Var matmul_nt(const Var& a, const Var& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[1])
        throw ShapeMismatchError("matmul_nt: " + shape_str(a.shape()) + " x " +
                                 shape_str(b.shape()) + "^T");
    int m = a.shape()[0], k = a.shape()[1], n = b.shape()[0];
    Tensor out = Tensor::uninit({m, n});
    mm_nt(a.val().data(), b.val().data(), out.data(), m, k, n);
    return make_op(std::move(out), {a, b}, [a, b](int i, const Var& g) {
        // c = a b^T: da = g b ; db = g^T a
        return i == 0 ? matmul(g, b) : matmul_tn(g, a);
    });
}

Var matmul_tn(const Var& a, const Var& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[0] != b.shape()[0])
        throw ShapeMismatchError("matmul_tn: " + shape_str(a.shape()) + "^T x " +
                                 shape_str(b.shape()));
    int m = a.shape()[1], k = a.shape()[0], n = b.shape()[1];
    Tensor out = Tensor::uninit({m, n});
    mm_tn(a.val().data(), b.val().data(), out.data(), m, k, n);
    return make_op(std::move(out), {a, b}, [a, b](int i, const Var& g) {
        // c = a^T b: da = b g^T ; db = a g
        return i == 0 ? matmul_nt(b, g) : matmul(a, g);
    });
}

Var transpose(const Var& a) {
    if (a.shape().size() != 2) throw ShapeMismatchError("transpose needs a matrix");
    int m = a.shape()[0], n = a.shape()[1];
    Tensor out = Tensor::uninit({n, m});
    const double* pa = a.val().data();
    double* po = out.data();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            po[static_cast<size_t>(j) * m + i] = pa[static_cast<size_t>(i) * n + j];
    return make_op(std::move(out), {a}, [](int, const Var& g) { return transpose(g); });
}

Var reshape(const Var& a, std::vector<int> shape) {
    Tensor out = a.val().reshaped(shape);
    auto old_shape = a.shape();
    return make_op(std::move(out), {a},
                   [old_shape](int, const Var& g) { return reshape(g, old_shape); });
}

Var concat0(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeMismatchError("concat0 of nothing");
    std::vector<int> shape = parts[0].shape();
    int trailing = 1;
    for (size_t i = 1; i < shape.size(); ++i) trailing *= shape[i];
    int rows = 0;
    for (const auto& p : parts) {
        const auto& s = p.shape();
        if (s.size() != shape.size()) throw ShapeMismatchError("concat0 rank mismatch");
        for (size_t i = 1; i < s.size(); ++i)
            if (s[i] != shape[i]) throw ShapeMismatchError("concat0 trailing dims differ");
        rows += s[0];
    }
    shape[0] = rows;
    Tensor out = Tensor::uninit(shape);
    double* po = out.data();
    int at = 0;
    std::vector<int> offsets;
    offsets.reserve(parts.size());
    for (const auto& p : parts) {
        offsets.push_back(at);
        const double* pp = p.val().data();
        std::copy(pp, pp + p.size(), po + static_cast<size_t>(at) * trailing);
        at += p.shape()[0];
    }
    std::vector<int> row_counts;
    for (const auto& p : parts) row_counts.push_back(p.shape()[0]);
    return make_op(std::move(out), parts, [row_counts, offsets](int i, const Var& g) {
        return slice0(g, offsets[static_cast<size_t>(i)],
                      offsets[static_cast<size_t>(i)] + row_counts[static_cast<size_t>(i)]);
    });
}

Var slice0(const Var& a, int begin, int end) {
    const auto& s = a.shape();
    if (s.empty() || begin < 0 || end > s[0] || begin >= end)
        throw ShapeMismatchError("slice0 range");
    int trailing = 1;
    for (size_t i = 1; i < s.size(); ++i) trailing *= s[i];
    std::vector<int> oshape = s;
    oshape[0] = end - begin;
    Tensor out = Tensor::uninit(oshape);
    const double* pa = a.val().data() + static_cast<size_t>(begin) * trailing;
    std::copy(pa, pa + out.size(), out.data());
    int total = s[0];
    return make_op(std::move(out), {a},
                   [begin, total](int, const Var& g) { return embed0(g, begin, total); });
}

Var embed0(const Var& a, int begin, int total_rows) {
    const auto& s = a.shape();
    if (s.empty() || begin < 0 || begin + s[0] > total_rows)
        throw ShapeMismatchError("embed0 range");
    int trailing = 1;
    for (size_t i = 1; i < s.size(); ++i) trailing *= s[i];
    std::vector<int> oshape = s;
    oshape[0] = total_rows;
    Tensor out(oshape);
    std::copy(a.val().data(), a.val().data() + a.size(),
              out.data() + static_cast<size_t>(begin) * trailing);
    int rows = s[0];
    return make_op(std::move(out), {a},
                   [begin, rows](int, const Var& g) { return slice0(g, begin, begin + rows); });
}

Var gather_rows(const Var& a, std::vector<int> idx) {
    if (a.shape().size() != 2) throw ShapeMismatchError("gather_rows needs a matrix");
    int m = a.shape()[0], n = a.shape()[1];
    for (int i : idx)
        if (i < 0 || i >= m) throw ShapeMismatchError("gather_rows index out of range");
    Tensor out = Tensor::uninit({static_cast<int>(idx.size()), n});
    const double* pa = a.val().data();
    for (size_t r = 0; r < idx.size(); ++r)
        std::copy(pa + static_cast<size_t>(idx[r]) * n, pa + static_cast<size_t>(idx[r] + 1) * n,
                  out.data() + r * n);
    return make_op(std::move(out), {a},
                   [idx, m](int, const Var& g) { return scatter_rows(g, idx, m); });
}

Var scatter_rows(const Var& a, std::vector<int> idx, int m) {
    if (a.shape().size() != 2 || a.shape()[0] != static_cast<int>(idx.size()))
        throw ShapeMismatchError("scatter_rows shape");
    int n = a.shape()[1];
    Tensor out({m, n});
    const double* pa = a.val().data();
    for (size_t r = 0; r < idx.size(); ++r) {
        double* dst = out.data() + static_cast<size_t>(idx[r]) * n;
        const double* src = pa + r * n;
        for (int j = 0; j < n; ++j) dst[j] += src[j];
    }
    return make_op(std::move(out), {a},
                   [idx](int, const Var& g) { return gather_rows(g, idx); });
}

// --------------------------------------------------------------- broadcasts

Var bcast_rows(const Var& v, int rows) {
    if (v.shape().size() != 1) throw ShapeMismatchError("bcast_rows needs a vector");
    int n = v.shape()[0];
    Tensor out = Tensor::uninit({rows, n});
    for (int i = 0; i < rows; ++i)
        std::copy(v.val().data(), v.val().data() + n, out.data() + static_cast<size_t>(i) * n);
    return make_op(std::move(out), {v}, [](int, const Var& g) { return col_sum(g); });
}

Var bcast_cols(const Var& v, int cols) {
    if (v.shape().size() != 1) throw ShapeMismatchError("bcast_cols needs a vector");
    int m = v.shape()[0];
    Tensor out = Tensor::uninit({m, cols});
    for (int i = 0; i < m; ++i) {
        double x = v.val()[i];
        double* row = out.data() + static_cast<size_t>(i) * cols;
        for (int j = 0; j < cols; ++j) row[j] = x;
    }
    return make_op(std::move(out), {v}, [](int, const Var& g) { return row_sum(g); });
}

Var col_sum(const Var& a) {
    if (a.shape().size() != 2) throw ShapeMismatchError("col_sum needs a matrix");
    int m = a.shape()[0], n = a.shape()[1];
    Tensor out({n});
    const double* pa = a.val().data();
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out[j] += pa[static_cast<size_t>(i) * n + j];
    return make_op(std::move(out), {a}, [m](int, const Var& g) { return bcast_rows(g, m); });
}

Var row_sum(const Var& a) {
    if (a.shape().size() != 2) throw ShapeMismatchError("row_sum needs a matrix");
    int m = a.shape()[0], n = a.shape()[1];
    Tensor out = Tensor::uninit({m});
    const double* pa = a.val().data();
    for (int i = 0; i < m; ++i) {
        double s = 0;
        for (int j = 0; j < n; ++j) s += pa[static_cast<size_t>(i) * n + j];
        out[i] = s;
    }
    return make_op(std::move(out), {a}, [n](int, const Var& g) { return bcast_cols(g, n); });
}

Var sum(const Var& a) {
    double s = 0;
    for (int i = 0; i < a.size(); ++i) s += a.val()[i];
    auto shape = a.shape();
    return make_op(Tensor::scalar(s), {a},
                   [shape](int, const Var& g) { return bcast_full(g, shape); });
}

Var mean(const Var& a) { return mul_scalar(sum(a), 1.0 / a.size()); }

Var bcast_full(const Var& s, std::vector<int> shape) {
    if (s.size() != 1) throw ShapeMismatchError("bcast_full needs a scalar");
    Tensor out = Tensor::full(shape, s.val()[0]);
    return make_op(std::move(out), {s}, [](int, const Var& g) { return sum(g); });
}

Var take(const Var& a, int flat_index) {
    if (flat_index < 0 || flat_index >= a.size()) throw ShapeMismatchError("take index");
    auto shape = a.shape();
    return make_op(Tensor::scalar(a.val()[flat_index]), {a},
                   [flat_index, shape](int, const Var& g) { return put(g, flat_index, shape); });
}

Var put(const Var& s, int flat_index, std::vector<int> shape) {
    if (s.size() != 1) throw ShapeMismatchError("put needs a scalar");
    Tensor out(shape);
    out[flat_index] = s.val()[0];
    return make_op(std::move(out), {s},
                   [flat_index](int, const Var& g) { return take(g, flat_index); });
}

Var swap_last2(const Var& a, int d0, int d1, int d2) {
    if (a.shape() != std::vector<int>({d0, d1, d2}))
        throw ShapeMismatchError("swap_last2 wants exactly " + shape_str({d0, d1, d2}) +
                                 ", got " + shape_str(a.shape()));
    Tensor out = Tensor::uninit({d0, d2, d1});
    const double* pa = a.val().data();
    double* po = out.data();
    for (int i = 0; i < d0; ++i)
        for (int j = 0; j < d1; ++j)
            for (int k = 0; k < d2; ++k)
                po[(static_cast<size_t>(i) * d2 + k) * d1 + j] =
                    pa[(static_cast<size_t>(i) * d1 + j) * d2 + k];
    return make_op(std::move(out), {a}, [d0, d1, d2](int, const Var& g) {
        return swap_last2(g, d0, d2, d1);
    });
}

Var swap_first2_3d(const Var& a, int d0, int d1, int d2) {
    if (a.shape() != std::vector<int>({d0, d1, d2}))
        throw ShapeMismatchError("swap_first2_3d wants exactly " + shape_str({d0, d1, d2}) +
                                 ", got " + shape_str(a.shape()));
    Tensor out = Tensor::uninit({d1, d0, d2});
    const double* pa = a.val().data();
    double* po = out.data();
    for (int i = 0; i < d0; ++i)
        for (int j = 0; j < d1; ++j) {
            const double* src = pa + (static_cast<size_t>(i) * d1 + j) * d2;
            double* dst = po + (static_cast<size_t>(j) * d0 + i) * d2;
            std::copy(src, src + d2, dst);
        }
    return make_op(std::move(out), {a}, [d0, d1, d2](int, const Var& g) {
        return swap_first2_3d(g, d1, d0, d2);
    });
}

// -------------------------------------------------------------- elementwise

namespace {

template <typename F>
Var unary(const Var& a, F f, VjpFn vjp) {
    Tensor out = Tensor::uninit(a.shape());
    const double* pa = a.val().data();
    double* po = out.data();
    for (int i = 0; i < out.size(); ++i) po[i] = f(pa[i]);
    return make_op(std::move(out), {a}, std::move(vjp));
}

}  // namespace

Var exp(const Var& a) {
    return unary(a, [](double x) { return std::exp(x); },
                 [a](int, const Var& g) { return mul(g, exp(a)); });
}

Var log(const Var& a) {
    return unary(a, [](double x) { return std::log(x); },
                 [a](int, const Var& g) { return mul(g, recip(a)); });
}

Var sqrt(const Var& a) {
    return unary(a, [](double x) { return std::sqrt(x); }, [a](int, const Var& g) {
        return mul(g, mul_scalar(recip(sqrt(a)), 0.5));
    });
}

Var recip(const Var& a) {
    return unary(a, [](double x) { return 1.0 / x; }, [a](int, const Var& g) {
        return neg(mul(g, recip(mul(a, a))));
    });
}

Var erf(const Var& a) {
    return unary(a, [](double x) { return std::erf(x); }, [a](int, const Var& g) {
        const double c = 2.0 / std::sqrt(M_PI);
        return mul(g, mul_scalar(exp(neg(mul(a, a))), c));
    });
}

Var tanh(const Var& a) {
    return unary(a, [](double x) { return std::tanh(x); }, [a](int, const Var& g) {
        Var t = tanh(a);
        return mul(g, add_scalar(neg(mul(t, t)), 1.0));
    });
}

Var sigmoid(const Var& a) {
    return unary(a,
                 [](double x) {
                     return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                                   : std::exp(x) / (1.0 + std::exp(x));
                 },
                 [a](int, const Var& g) {
                     Var s = sigmoid(a);
                     return mul(g, mul(s, add_scalar(neg(s), 1.0)));
                 });
}

Var softplus(const Var& a) {
    return unary(a,
                 [](double x) {
                     if (x > 30.0) return x;
                     if (x < -30.0) return std::exp(x);
                     return std::log1p(std::exp(x));
                 },
                 [a](int, const Var& g) { return mul(g, sigmoid(a)); });
}

Var softmax_vec(const Var& a) {
    if (a.shape().size() != 1) throw ShapeMismatchError("softmax_vec needs a vector");
    int n = a.shape()[0];
    Tensor out = Tensor::uninit({n});
    const double* pa = a.val().data();
    double* po = out.data();
    double mx = pa[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, pa[i]);
    double z = 0;
    for (int i = 0; i < n; ++i) {
        po[i] = std::exp(pa[i] - mx);
        z += po[i];
    }
    for (int i = 0; i < n; ++i) po[i] /= z;
    return make_op(std::move(out), {a}, [a](int, const Var& g) {
        Var s = softmax_vec(a);
        Var dot = sum(mul(g, s));
        return mul(s, sub(g, bcast_full(dot, s.shape())));
    });
}

Var logsumexp(const Var& a) {
    if (a.shape().size() != 1) throw ShapeMismatchError("logsumexp needs a vector");
    int n = a.shape()[0];
    double mx = a.val()[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, a.val()[i]);
    double z = 0;
    for (int i = 0; i < n; ++i) z += std::exp(a.val()[i] - mx);
    return make_op(Tensor::scalar(mx + std::log(z)), {a}, [a](int, const Var& g) {
        return scale_by(softmax_vec(a), g);
    });
}

// ------------------------------------------------------------------ convnet

void conv_out_size(int h, int w, int k, int stride, int pad, int* hout, int* wout) {
    *hout = (h + 2 * pad - k) / stride + 1;
    *wout = (w + 2 * pad - k) / stride + 1;
}

namespace {

// shared im2col core writing into a preallocated block of columns
void unfold_into(const double* px, int c, int h, int w, int k, int stride, int pad, int hout,
                 int wout, double* out, int out_cols, int col_offset) {
    for (int ci = 0; ci < c; ++ci)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                int row = (ci * k + ky) * k + kx;
                double* orow = out + static_cast<size_t>(row) * out_cols + col_offset;
                for (int oy = 0; oy < hout; ++oy) {
                    int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    const double* xrow = px + (static_cast<size_t>(ci) * h + iy) * w;
                    for (int ox = 0; ox < wout; ++ox) {
                        int ix = ox * stride - pad + kx;
                        if (ix < 0 || ix >= w) continue;
                        orow[oy * wout + ox] = xrow[ix];
                    }
                }
            }
}

void fold_into(const double* cols, int c, int h, int w, int k, int stride, int pad, int hout,
               int wout, double* out, int in_cols, int col_offset) {
    for (int ci = 0; ci < c; ++ci)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                int row = (ci * k + ky) * k + kx;
                const double* crow = cols + static_cast<size_t>(row) * in_cols + col_offset;
                for (int oy = 0; oy < hout; ++oy) {
                    int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    double* xrow = out + (static_cast<size_t>(ci) * h + iy) * w;
                    for (int ox = 0; ox < wout; ++ox) {
                        int ix = ox * stride - pad + kx;
                        if (ix < 0 || ix >= w) continue;
                        xrow[ix] += crow[oy * wout + ox];
                    }
                }
            }
}

}  // namespace

Var unfold(const Var& x, int k, int stride, int pad) {
    if (x.shape().size() != 3) throw ShapeMismatchError("unfold needs (C,H,W)");
    int c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    int hout, wout;
    conv_out_size(h, w, k, stride, pad, &hout, &wout);
    if (hout <= 0 || wout <= 0) throw ShapeMismatchError("unfold output empty");
    Tensor out({c * k * k, hout * wout});
    unfold_into(x.val().data(), c, h, w, k, stride, pad, hout, wout, out.data(), hout * wout, 0);
    return make_op(std::move(out), {x}, [c, h, w, k, stride, pad](int, const Var& g) {
        return fold(g, c, h, w, k, stride, pad);
    });
}

Var fold(const Var& cols, int channels, int height, int width, int k, int stride, int pad) {
    int hout, wout;
    conv_out_size(height, width, k, stride, pad, &hout, &wout);
    if (cols.shape().size() != 2 || cols.shape()[0] != channels * k * k ||
        cols.shape()[1] != hout * wout)
        throw ShapeMismatchError("fold input shape");
    Tensor out({channels, height, width});
    fold_into(cols.val().data(), channels, height, width, k, stride, pad, hout, wout, out.data(),
              hout * wout, 0);
    return make_op(std::move(out), {cols}, [k, stride, pad](int, const Var& g) {
        return unfold(g, k, stride, pad);
    });
}

Var unfold_batch(const Var& x, int c, int h, int w, int k, int stride, int pad) {
    if (x.shape().size() != 2 || x.shape()[1] != c * h * w)
        throw ShapeMismatchError("unfold_batch wants (M, C*H*W)");
    int m = x.shape()[0];
    int hout, wout;
    conv_out_size(h, w, k, stride, pad, &hout, &wout);
    if (hout <= 0 || wout <= 0) throw ShapeMismatchError("unfold_batch output empty");
    int l = hout * wout;
    Tensor out({c * k * k, m * l});
    for (int i = 0; i < m; ++i)
        unfold_into(x.val().data() + static_cast<size_t>(i) * c * h * w, c, h, w, k, stride, pad,
                    hout, wout, out.data(), m * l, i * l);
    return make_op(std::move(out), {x}, [m, c, h, w, k, stride, pad](int, const Var& g) {
        return fold_batch(g, m, c, h, w, k, stride, pad);
    });
}

Var fold_batch(const Var& cols, int m, int c, int h, int w, int k, int stride, int pad) {
    int hout, wout;
    conv_out_size(h, w, k, stride, pad, &hout, &wout);
    int l = hout * wout;
    if (cols.shape().size() != 2 || cols.shape()[0] != c * k * k || cols.shape()[1] != m * l)
        throw ShapeMismatchError("fold_batch input shape");
    Tensor out({m, c * h * w});
    for (int i = 0; i < m; ++i)
        fold_into(cols.val().data(), c, h, w, k, stride, pad, hout, wout,
                  out.data() + static_cast<size_t>(i) * c * h * w, m * l, i * l);
    return make_op(std::move(out), {cols}, [c, h, w, k, stride, pad](int, const Var& g) {
        return unfold_batch(g, c, h, w, k, stride, pad);
    });
}

// ------------------------------------------------------------- compositions

namespace {

double gelu_val(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad_val(double x) {
    return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) +
           x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// derivative of gelu as its own op so the gradient penalty can be
// differentiated one more time
Var gelu_grad(const Var& a) {
    return unary(a, gelu_grad_val, [a](int, const Var& g) {
        // gelu''(x) = phi(x) (2 - x^2)
        const double c = 1.0 / std::sqrt(2.0 * M_PI);
        Var phi = mul_scalar(exp(mul_scalar(mul(a, a), -0.5)), c);
        return mul(g, mul(phi, add_scalar(neg(mul(a, a)), 2.0)));
    });
}

}  // namespace

Var gelu(const Var& a) {
    return unary(a, gelu_val,
                 [a](int, const Var& g) { return mul(g, gelu_grad(a)); });
}

Var square(const Var& a) { return mul(a, a); }

Var frobenius_norm(const Var& a) { return sqrt(sum(square(a))); }

Var bce_with_logits_mean(const Var& logits, const Var& targets) {
    check_same_shape(logits, targets, "bce_with_logits");
    return mean(sub(softplus(logits), mul(logits, targets)));
}

Var cross_entropy_logits(const Var& logits, int target_class) {
    return sub(logsumexp(logits), take(logits, target_class));
}

// ----------------------------------------------------------------- backward

std::vector<Var> grad(const Var& root, const std::vector<Var>& wrt, bool create_graph) {
    if (!root.defined()) throw Error("grad of undefined Var");
    std::vector<Node*> order;  // parents precede consumers
    std::unordered_set<Node*> seen;
    struct Frame {
        Node* n;
        size_t next;
    };
    std::vector<Frame> stack;
    if (root.requires_grad()) {
        stack.push_back({root.node_.get(), 0});
        seen.insert(root.node_.get());
    }
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next < f.n->parents.size()) {
            Node* p = f.n->parents[f.next++].node_.get();
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(f.n);
            stack.pop_back();
        }
    }

    // restrict work to nodes that can reach a requested leaf
    std::unordered_set<Node*> needed;
    for (const auto& w : wrt)
        if (w.defined()) needed.insert(w.node_.get());
    for (Node* n : order) {
        if (needed.count(n)) continue;
        for (const auto& p : n->parents)
            if (needed.count(p.node_.get())) {
                needed.insert(n);
                break;
            }
    }

    std::unordered_map<Node*, Var> gmap;
    if (root.requires_grad() && needed.count(root.node_.get()))
        gmap[root.node_.get()] = constant(Tensor::full(root.shape(), 1.0));

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (!n->vjp || !needed.count(n)) continue;
        auto found = gmap.find(n);
        if (found == gmap.end()) continue;
        Var gout = found->second;
        for (size_t i = 0; i < n->parents.size(); ++i) {
            const Var& p = n->parents[i];
            if (!p.requires_grad() || !needed.count(p.node_.get())) continue;
            Var gi = n->vjp(static_cast<int>(i), gout);
            if (!gi.defined()) continue;
            if (gi.shape() != p.shape())
                throw ShapeMismatchError("vjp produced " + shape_str(gi.shape()) + " for parent " +
                                         shape_str(p.shape()));
            if (!create_graph) gi = gi.detach();
            auto slot = gmap.find(p.node_.get());
            if (slot == gmap.end())
                gmap.emplace(p.node_.get(), gi);
            else
                slot->second = add(slot->second, gi);
        }
    }

    std::vector<Var> out;
    out.reserve(wrt.size());
    for (const auto& w : wrt) {
        auto f = gmap.find(w.node_.get());
        if (f != gmap.end())
            out.push_back(f->second);
        else
            out.push_back(constant(Tensor(w.shape())));
    }
    return out;
}

}  // namespace plangan
