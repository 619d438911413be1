#include "plangan/gte.hpp"

#include <cmath>

#include "plangan/errors.hpp"

namespace plangan {

NodeSets NodeSets::from(const BubbleDiagram& d) {
    std::vector<std::pair<int, int>> edges(d.edges.begin(), d.edges.end());
    return from_edges(d.num_rooms(), edges);
}

NodeSets NodeSets::from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    NodeSets s;
    s.conn.assign(static_cast<size_t>(n), {});
    s.nonconn.assign(static_cast<size_t>(n), {});
    std::vector<std::vector<char>> adj(static_cast<size_t>(n),
                                       std::vector<char>(static_cast<size_t>(n), 0));
    for (const auto& [a, b] : edges) {
        adj[static_cast<size_t>(a)][static_cast<size_t>(b)] = 1;
        adj[static_cast<size_t>(b)][static_cast<size_t>(a)] = 1;
    }
    for (int r = 0; r < n; ++r)
        for (int i = 0; i < n; ++i) {
            if (i == r) continue;
            if (adj[static_cast<size_t>(r)][static_cast<size_t>(i)])
                s.conn[static_cast<size_t>(r)].push_back(i);
            else
                s.nonconn[static_cast<size_t>(r)].push_back(i);
        }
    return s;
}

Tensor adjacency_with_self_loops(int n, const std::vector<std::pair<int, int>>& edges) {
    Tensor a({n, n});
    for (int i = 0; i < n; ++i) a.at(i, i) = 1.0;
    for (const auto& [i, j] : edges) {
        a.at(i, j) = 1.0;
        a.at(j, i) = 1.0;
    }
    return a;
}

Tensor adjacency_with_self_loops(const BubbleDiagram& d) {
    std::vector<std::pair<int, int>> edges(d.edges.begin(), d.edges.end());
    return adjacency_with_self_loops(d.num_rooms(), edges);
}

namespace {

// attention of one head slice; feats (M, d), columns [c0, c1)
Var attention_slice(const Var& feats, const std::vector<std::vector<int>>& sets, int c0, int c1) {
    int m = feats.shape()[0];
    Var cols = (c0 == 0 && c1 == feats.shape()[1])
                   ? feats
                   : transpose(slice0(transpose(feats), c0, c1));
    int d = c1 - c0;
    std::vector<Var> rows;
    rows.reserve(static_cast<size_t>(m));
    for (int r = 0; r < m; ++r) {
        const auto& set = sets[static_cast<size_t>(r)];
        if (set.empty()) {
            rows.push_back(constant(Tensor({1, d})));
            continue;
        }
        int k = static_cast<int>(set.size());
        Var members = gather_rows(cols, set);                       // (k, d)
        Var query = gather_rows(cols, {r});                         // (1, d)
        Var logits = mul_scalar(matmul(query, transpose(members)),  // (1, k)
                                1.0 / std::sqrt(static_cast<double>(k)));
        Var weights = softmax_vec(reshape(logits, {k}));
        rows.push_back(matmul(reshape(weights, {1, k}), members));  // (1, d)
    }
    return concat0(rows);
}

}  // namespace

Var node_attention(const Var& feats, const std::vector<std::vector<int>>& sets, const Var& scale,
                   int heads) {
    if (feats.shape().size() != 2) throw ShapeMismatchError("node_attention wants (M,d)");
    int d = feats.shape()[1];
    if (heads < 1 || d % heads != 0)
        throw ShapeMismatchError("attention heads must divide the feature length");
    Var out;
    if (heads == 1) {
        out = attention_slice(feats, sets, 0, d);
    } else {
        int chunk = d / heads;
        std::vector<Var> parts;
        for (int h = 0; h < heads; ++h)
            parts.push_back(transpose(attention_slice(feats, sets, h * chunk, (h + 1) * chunk)));
        out = transpose(concat0(parts));
    }
    return scale_by(out, scale);
}

Tensor attention_weight_rows(const Tensor& feats, const std::vector<std::vector<int>>& sets) {
    int m = feats.shape()[0], d = feats.shape()[1];
    Tensor out({m, m});
    for (int r = 0; r < m; ++r) {
        const auto& set = sets[static_cast<size_t>(r)];
        if (set.empty()) continue;
        int k = static_cast<int>(set.size());
        std::vector<double> logits(static_cast<size_t>(k), 0.0);
        double scale = 1.0 / std::sqrt(static_cast<double>(k));
        for (int s = 0; s < k; ++s) {
            double dot = 0;
            const double* q = feats.data() + static_cast<size_t>(r) * d;
            const double* mrow = feats.data() + static_cast<size_t>(set[static_cast<size_t>(s)]) * d;
            for (int j = 0; j < d; ++j) dot += q[j] * mrow[j];
            logits[static_cast<size_t>(s)] = dot * scale;
        }
        double mx = logits[0];
        for (double v : logits) mx = std::max(mx, v);
        double z = 0;
        for (double v : logits) z += std::exp(v - mx);
        for (int s = 0; s < k; ++s)
            out.at(r, set[static_cast<size_t>(s)]) = std::exp(logits[static_cast<size_t>(s)] - mx) / z;
    }
    return out;
}

Var gmb(const Var& g, const Tensor& adjacency, const Var& p) {
    if (g.shape().size() != 2 || adjacency.ndim() != 2 || adjacency.dim(0) != g.shape()[0] ||
        adjacency.dim(1) != g.shape()[0])
        throw ShapeMismatchError("gmb wants (M,d) features and (M,M) adjacency");
    if (p.shape().size() != 2 || p.shape()[0] != g.shape()[1])
        throw ShapeMismatchError("gmb weight shape");
    Var mixed = matmul(g, p);
    return gelu(matmul(constant(adjacency), mixed));
}

GteBlock::GteBlock(ParamStore& ps, const std::string& name, const GteConfig& cfg_in, Rng& rng)
    : cfg(cfg_in) {
    alpha = ps.add(name + ".alpha", Tensor::scalar(cfg.alpha_init));
    beta = ps.add(name + ".beta", Tensor::scalar(cfg.beta_init));
    if (cfg.normalize) {
        ln_att = LayerNorm(ps, name + ".ln_att", cfg.dim());
        ln_gmb = LayerNorm(ps, name + ".ln_gmb", cfg.dim());
    }
    p = ps.add(name + ".p", xavier_normal({cfg.channels, cfg.channels}, cfg.channels,
                                          cfg.channels, rng));
}

Var GteBlock::attention_sum(const Var& feats, const NodeSets& sets) const {
    Var base = cfg.normalize ? ln_att(feats) : feats;
    Var h = feats;
    if (cfg.use_cna) h = add(h, node_attention(base, sets.conn, alpha, cfg.heads));
    if (cfg.use_nna) h = add(h, node_attention(base, sets.nonconn, beta, cfg.heads));
    return h;
}

Var GteBlock::operator()(const Var& feats, const NodeSets& sets, const Tensor& adjacency) const {
    Var h = attention_sum(feats, sets);
    if (!cfg.use_gmb) return h;
    Var hn = cfg.normalize ? ln_gmb(h) : h;
    int m = h.shape()[0];
    // channel mixing shared across spatial positions
    Var by_pos = reshape(swap_last2(reshape(hn, {m, cfg.channels, cfg.spatial}), m, cfg.channels,
                                    cfg.spatial),
                         {m * cfg.spatial, cfg.channels});
    Var mixed = matmul(by_pos, p);
    Var back = reshape(swap_last2(reshape(mixed, {m, cfg.spatial, cfg.channels}), m, cfg.spatial,
                                  cfg.channels),
                       {m, cfg.dim()});
    return gelu(matmul(constant(adjacency), back));
}

GteStack::GteStack(ParamStore& ps, const std::string& name, const GteConfig& cfg, int depth,
                   Rng& rng) {
    for (int i = 0; i < depth; ++i)
        blocks.emplace_back(ps, name + ".b" + std::to_string(i), cfg, rng);
}

Var GteStack::operator()(const Var& feats, const NodeSets& sets, const Tensor& adjacency) const {
    Var x = feats;
    for (const auto& b : blocks) x = b(x, sets, adjacency);
    return x;
}

const char* update_variant_name(UpdateVariant v) {
    switch (v) {
        case UpdateVariant::eq2: return "eq2";
        case UpdateVariant::eq3: return "eq3";
        case UpdateVariant::eq4: return "eq4";
    }
    return "?";
}

std::optional<UpdateVariant> update_variant_from_name(const std::string& s) {
    for (UpdateVariant v : {UpdateVariant::eq2, UpdateVariant::eq3, UpdateVariant::eq4})
        if (s == update_variant_name(v)) return v;
    return std::nullopt;
}

Var set_sum_pool(const Var& feats, const std::vector<std::vector<int>>& sets) {
    int m = feats.shape()[0];
    Tensor pool({m, m});
    for (int r = 0; r < m; ++r)
        for (int s : sets[static_cast<size_t>(r)]) pool.at(r, s) = 1.0;
    return matmul(constant(pool), feats);
}

Var conv_rows(const Conv2d& conv, const Var& feats, int c, int h, int w) {
    if (c != conv.cin) throw ShapeMismatchError("conv_rows channel mismatch");
    return conv.rows(feats, h, w);
}

MpnRound::MpnRound(ParamStore& ps, const std::string& name, const GteConfig& gte_cfg,
                   int gte_depth, int side_in, UpdateVariant variant_in, int cnn_hidden, Rng& rng)
    : variant(variant_in), channels(gte_cfg.channels), side(side_in) {
    gte_conn = GteStack(ps, name + ".conn", gte_cfg, gte_depth, rng);
    gte_nonconn = GteStack(ps, name + ".nonconn", gte_cfg, gte_depth, rng);
    int cin = variant == UpdateVariant::eq4 ? channels : 3 * channels;
    cnn1 = Conv2d(ps, name + ".cnn1", cin, cnn_hidden, 3, 1, 1, rng);
    cnn2 = Conv2d(ps, name + ".cnn2", cnn_hidden, channels, 3, 1, 1, rng);
}

Var MpnRound::operator()(const Var& feats, const NodeSets& sets, const Tensor& adjacency) const {
    int m = feats.shape()[0];
    Var a = gte_conn(feats, sets, adjacency);
    Var b = gte_nonconn(feats, sets, adjacency);
    Var fused = add(a, b);
    if (variant != UpdateVariant::eq3) fused = add(feats, fused);

    Var x;
    if (variant == UpdateVariant::eq4) {
        x = fused;
    } else {
        Var pc = set_sum_pool(feats, sets.conn);
        Var pn = set_sum_pool(feats, sets.nonconn);
        // rows are (C,S) blocks, so column-concat is channel-concat
        x = transpose(concat0({transpose(fused), transpose(pc), transpose(pn)}));
    }
    (void)m;
    return cnn2.rows(gelu(cnn1.rows(x, side, side)), side, side);
}

}  // namespace plangan
