#pragma once

#include <string>
#include <utility>
#include <vector>

#include "plangan/autodiff.hpp"
#include "plangan/rng.hpp"

namespace plangan {

// Ordered registry of named trainable tensors. Order is fixed at construction
// and drives optimizer state and checkpoint layout.
class ParamStore {
  public:
    Var add(const std::string& name, Tensor init);
    const std::vector<std::pair<std::string, Var>>& items() const { return items_; }
    Var* find(const std::string& name);
    const Var* find(const std::string& name) const;
    int tensor_count() const { return static_cast<int>(items_.size()); }
    long scalar_count() const;
    std::vector<Var> vars() const;

  private:
    std::vector<std::pair<std::string, Var>> items_;
};

Tensor xavier_normal(std::vector<int> shape, int fan_in, int fan_out, Rng& rng);

struct Linear {
    Var w;  // (out, in)
    Var b;  // (out)
    Linear() = default;
    Linear(ParamStore& ps, const std::string& name, int in, int out, Rng& rng,
           bool zero_init = false);
    Var rows(const Var& x) const;  // (m, in) -> (m, out)
    Var vec(const Var& x) const;   // (in) -> (out)
};

struct Conv2d {
    Var w;  // (cout, cin*k*k)
    Var b;  // (cout)
    int cin = 0, cout = 0, k = 3, stride = 1, pad = 1;
    Conv2d() = default;
    Conv2d(ParamStore& ps, const std::string& name, int cin, int cout, int k, int stride, int pad,
           Rng& rng);
    Var operator()(const Var& x) const;  // (cin,H,W) -> (cout,Hout,Wout)
    // batched across rows: (M, cin*h*w) -> (M, cout*hout*wout)
    Var rows(const Var& feats, int h, int w) const;
};

struct ConvTranspose2d {
    Var w;  // (cout*k*k, cin)
    Var b;  // (cout)
    int cin = 0, cout = 0, k = 4, stride = 2, pad = 1;
    ConvTranspose2d() = default;
    ConvTranspose2d(ParamStore& ps, const std::string& name, int cin, int cout, int k, int stride,
                    int pad, Rng& rng);
    Var operator()(const Var& x) const;  // (cin,H,W) -> (cout, s(H-1)+k-2p, ...)
    Var rows(const Var& feats, int h, int w) const;
};

struct LayerNorm {
    Var gamma, beta;  // (n)
    double eps = 1e-5;
    LayerNorm() = default;
    LayerNorm(ParamStore& ps, const std::string& name, int n);
    Var operator()(const Var& x) const;  // (m, n), normalized per row
};

struct Adam {
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
    long t = 0;
    std::vector<Tensor> m, v;

    Adam() = default;
    Adam(double lr, double beta1, double beta2) : lr(lr), beta1(beta1), beta2(beta2) {}
    // grads[i] pairs with params[i]; undefined grads are treated as zero
    void step(const std::vector<Var>& params, const std::vector<Var>& grads);
};

}  // namespace plangan
