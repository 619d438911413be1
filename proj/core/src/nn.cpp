#include "plangan/nn.hpp"

#include <cmath>

#include "plangan/errors.hpp"

namespace plangan {

Var ParamStore::add(const std::string& name, Tensor init) {
    for (auto& it : items_)
        if (it.first == name) throw Error("duplicate parameter name: " + name);
    Var v = parameter(std::move(init));
    items_.emplace_back(name, v);
    return v;
}

Var* ParamStore::find(const std::string& name) {
    for (auto& it : items_)
        if (it.first == name) return &it.second;
    return nullptr;
}

const Var* ParamStore::find(const std::string& name) const {
    for (auto& it : items_)
        if (it.first == name) return &it.second;
    return nullptr;
}

long ParamStore::scalar_count() const {
    long n = 0;
    for (auto& it : items_) n += it.second.size();
    return n;
}

std::vector<Var> ParamStore::vars() const {
    std::vector<Var> out;
    out.reserve(items_.size());
    for (auto& it : items_) out.push_back(it.second);
    return out;
}

Tensor xavier_normal(std::vector<int> shape, int fan_in, int fan_out, Rng& rng) {
    double std = std::sqrt(2.0 / (fan_in + fan_out));
    Tensor t(std::move(shape));
    for (int i = 0; i < t.size(); ++i) t[i] = rng.normal() * std;
    return t;
}

Linear::Linear(ParamStore& ps, const std::string& name, int in, int out, Rng& rng,
               bool zero_init) {
    Tensor wt = zero_init ? Tensor({out, in}) : xavier_normal({out, in}, in, out, rng);
    w = ps.add(name + ".w", std::move(wt));
    b = ps.add(name + ".b", Tensor({out}));
}

Var Linear::rows(const Var& x) const {
    if (x.shape().size() != 2) throw ShapeMismatchError("Linear::rows wants (m,in)");
    Var y = matmul_nt(x, w);
    return add(y, bcast_rows(b, x.shape()[0]));
}

Var Linear::vec(const Var& x) const {
    if (x.shape().size() != 1) throw ShapeMismatchError("Linear::vec wants (in)");
    return reshape(rows(reshape(x, {1, x.shape()[0]})), {b.shape()[0]});
}

Conv2d::Conv2d(ParamStore& ps, const std::string& name, int cin, int cout, int k, int stride,
               int pad, Rng& rng)
    : cin(cin), cout(cout), k(k), stride(stride), pad(pad) {
    w = ps.add(name + ".w", xavier_normal({cout, cin * k * k}, cin * k * k, cout * k * k, rng));
    b = ps.add(name + ".b", Tensor({cout}));
}

Var Conv2d::operator()(const Var& x) const {
    if (x.shape().size() != 3 || x.shape()[0] != cin)
        throw ShapeMismatchError("Conv2d input " + shape_str(x.shape()) + " wants cin=" +
                                 std::to_string(cin));
    int hout, wout;
    conv_out_size(x.shape()[1], x.shape()[2], k, stride, pad, &hout, &wout);
    Var cols = unfold(x, k, stride, pad);         // (cin*k*k, L)
    Var y = matmul(w, cols);                      // (cout, L)
    y = add(y, bcast_cols(b, hout * wout));
    return reshape(y, {cout, hout, wout});
}

Var Conv2d::rows(const Var& feats, int h, int w_in) const {
    if (feats.shape().size() != 2 || feats.shape()[1] != cin * h * w_in)
        throw ShapeMismatchError("Conv2d::rows input " + shape_str(feats.shape()));
    int m = feats.shape()[0];
    int hout, wout;
    conv_out_size(h, w_in, k, stride, pad, &hout, &wout);
    int l = hout * wout;
    Var cols = unfold_batch(feats, cin, h, w_in, k, stride, pad);  // (cin*k*k, M*L)
    Var y = matmul(w, cols);                                       // (cout, M*L)
    y = add(y, bcast_cols(b, m * l));
    return reshape(swap_first2_3d(reshape(y, {cout, m, l}), cout, m, l), {m, cout * l});
}

ConvTranspose2d::ConvTranspose2d(ParamStore& ps, const std::string& name, int cin, int cout,
                                 int k, int stride, int pad, Rng& rng)
    : cin(cin), cout(cout), k(k), stride(stride), pad(pad) {
    w = ps.add(name + ".w", xavier_normal({cout * k * k, cin}, cin * k * k, cout * k * k, rng));
    b = ps.add(name + ".b", Tensor({cout}));
}

Var ConvTranspose2d::operator()(const Var& x) const {
    if (x.shape().size() != 3 || x.shape()[0] != cin)
        throw ShapeMismatchError("ConvTranspose2d input " + shape_str(x.shape()));
    int h = x.shape()[1], w_in = x.shape()[2];
    int hout = stride * (h - 1) + k - 2 * pad;
    int wout = stride * (w_in - 1) + k - 2 * pad;
    Var cols = matmul(w, reshape(x, {cin, h * w_in}));  // (cout*k*k, H*W)
    Var y = fold(cols, cout, hout, wout, k, stride, pad);
    Var y2 = reshape(y, {cout, hout * wout});
    y2 = add(y2, bcast_cols(b, hout * wout));
    return reshape(y2, {cout, hout, wout});
}

Var ConvTranspose2d::rows(const Var& feats, int h, int w_in) const {
    if (feats.shape().size() != 2 || feats.shape()[1] != cin * h * w_in)
        throw ShapeMismatchError("ConvTranspose2d::rows input " + shape_str(feats.shape()));
    int m = feats.shape()[0];
    int hout = stride * (h - 1) + k - 2 * pad;
    int wout = stride * (w_in - 1) + k - 2 * pad;
    // (M, cin, HW) -> (cin, M*HW), one matmul, then per-row col2im
    Var xs = reshape(swap_first2_3d(reshape(feats, {m, cin, h * w_in}), m, cin, h * w_in),
                     {cin, m * h * w_in});
    Var cols = matmul(w, xs);  // (cout*k*k, M*HW)
    Var y = fold_batch(cols, m, cout, hout, wout, k, stride, pad);  // (M, cout*hout*wout)
    // add bias per channel
    Tensor ones_m({m});
    for (int i = 0; i < m; ++i) ones_m[i] = 1.0;
    Var brow = bcast_cols(b, hout * wout);  // (cout, hout*wout)
    Var bias_flat = reshape(brow, {cout * hout * wout});
    return add(y, matmul(reshape(constant(ones_m), {m, 1}),
                         reshape(bias_flat, {1, cout * hout * wout})));
}

LayerNorm::LayerNorm(ParamStore& ps, const std::string& name, int n) {
    gamma = ps.add(name + ".g", Tensor::full({n}, 1.0));
    beta = ps.add(name + ".b", Tensor({n}));
}

Var LayerNorm::operator()(const Var& x) const {
    if (x.shape().size() != 2) throw ShapeMismatchError("LayerNorm wants (m,n)");
    int m = x.shape()[0], n = x.shape()[1];
    Var mu = mul_scalar(row_sum(x), 1.0 / n);              // (m)
    Var xc = sub(x, bcast_cols(mu, n));                    // (m,n)
    Var var = mul_scalar(row_sum(mul(xc, xc)), 1.0 / n);   // (m)
    Var istd = recip(sqrt(add_scalar(var, eps)));          // (m)
    Var y = mul(xc, bcast_cols(istd, n));
    return add(mul(y, bcast_rows(gamma, m)), bcast_rows(beta, m));
}

void Adam::step(const std::vector<Var>& params, const std::vector<Var>& grads) {
    if (params.size() != grads.size()) throw Error("Adam: params/grads size mismatch");
    if (m.empty()) {
        for (const auto& p : params) {
            m.emplace_back(Tensor(p.shape()));
            v.emplace_back(Tensor(p.shape()));
        }
    }
    ++t;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& value = params[i].node_->value;
        double* pv = value.data();
        double* pm = m[i].data();
        double* ps = v[i].data();
        const double* pg = grads[i].defined() ? grads[i].val().data() : nullptr;
        for (int j = 0; j < value.size(); ++j) {
            double g = pg ? pg[j] : 0.0;
            pm[j] = beta1 * pm[j] + (1.0 - beta1) * g;
            ps[j] = beta2 * ps[j] + (1.0 - beta2) * g * g;
            double mhat = pm[j] / bc1;
            double vhat = ps[j] / bc2;
            pv[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

}  // namespace plangan
