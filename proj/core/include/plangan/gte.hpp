#pragma once

#include <string>
#include <vector>

#include "plangan/autodiff.hpp"
#include "plangan/graph.hpp"
#include "plangan/nn.hpp"

namespace plangan {

// Per-node index sets driving the two attention paths.
struct NodeSets {
    std::vector<std::vector<int>> conn;     // graph neighbors
    std::vector<std::vector<int>> nonconn;  // everyone else (minus self)

    static NodeSets from(const BubbleDiagram& d);
    static NodeSets from_edges(int n, const std::vector<std::pair<int, int>>& edges);
};

// 0/1 adjacency with self-loops, as a dense (n,n) tensor
Tensor adjacency_with_self_loops(int n, const std::vector<std::pair<int, int>>& edges);
Tensor adjacency_with_self_loops(const BubbleDiagram& d);

// Scaled dot-product attention of each node over its index set. feats is
// (M, d); rows with an empty set come out exactly zero. Logits are scaled by
// 1/sqrt(set size) and the result by `scale`.
Var node_attention(const Var& feats, const std::vector<std::vector<int>>& sets, const Var& scale,
                   int heads = 1);

// Forward-only attention weights for one set family; row r holds the softmax
// weights over sets[r] (columns elsewhere zero). Single head.
Tensor attention_weight_rows(const Tensor& feats, const std::vector<std::vector<int>>& sets);

// GeLU(A g P) on an (M, d) feature matrix with P of shape (d, dout).
Var gmb(const Var& g, const Tensor& adjacency, const Var& p);

struct GteConfig {
    int channels = 16;
    int spatial = 64;  // positions per node; feature length = channels * spatial
    int heads = 1;
    bool use_cna = true;
    bool use_nna = true;
    bool use_gmb = true;
    bool normalize = true;
    double alpha_init = 0.0;
    double beta_init = 0.0;
    int dim() const { return channels * spatial; }
};

// One encoder block: x + CNA(x) + NNA(x), then the graph modeling step.
// The GMB weight mixes channels and is shared across spatial positions.
struct GteBlock {
    GteConfig cfg;
    Var alpha, beta;
    LayerNorm ln_att, ln_gmb;
    Var p;  // (channels, channels)

    GteBlock() = default;
    GteBlock(ParamStore& ps, const std::string& name, const GteConfig& cfg, Rng& rng);

    // the residual attention sum of the block, before graph modeling
    Var attention_sum(const Var& feats, const NodeSets& sets) const;
    Var operator()(const Var& feats, const NodeSets& sets, const Tensor& adjacency) const;
};

struct GteStack {
    std::vector<GteBlock> blocks;
    GteStack() = default;
    GteStack(ParamStore& ps, const std::string& name, const GteConfig& cfg, int depth, Rng& rng);
    Var operator()(const Var& feats, const NodeSets& sets, const Tensor& adjacency) const;
};

enum class UpdateVariant { eq2, eq3, eq4 };

const char* update_variant_name(UpdateVariant v);
std::optional<UpdateVariant> update_variant_from_name(const std::string& s);

// One message-passing round: two GTE stacks plus a two-layer CNN over the
// fused feature (channel-concatenated with the two pooled neighbor volumes
// except under eq4).
struct MpnRound {
    UpdateVariant variant = UpdateVariant::eq2;
    int channels = 16;
    int side = 8;  // spatial side; spatial = side*side
    GteStack gte_conn, gte_nonconn;
    Conv2d cnn1, cnn2;

    MpnRound() = default;
    MpnRound(ParamStore& ps, const std::string& name, const GteConfig& gte_cfg, int gte_depth,
             int side, UpdateVariant variant, int cnn_hidden, Rng& rng);

    Var operator()(const Var& feats, const NodeSets& sets, const Tensor& adjacency) const;
};

// sum-pool of other nodes' rows per set: row r = sum_{s in sets[r]} feats[s]
Var set_sum_pool(const Var& feats, const std::vector<std::vector<int>>& sets);

// apply a convolution to every row of (M, C*H*W) node features
Var conv_rows(const Conv2d& conv, const Var& feats, int c, int h, int w);

}  // namespace plangan
