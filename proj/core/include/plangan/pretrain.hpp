#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plangan/generator.hpp"
#include "plangan/gte.hpp"
#include "plangan/nn.hpp"
#include "plangan/synth.hpp"

namespace plangan {

// clamp(round(ratio*n), 1, n-1) for n >= 2, else 0
int masked_count(int n_items, double ratio);

struct MaskPlan {
    std::vector<int> masked;  // sorted original indices
    double ratio = 0.4;

    bool is_masked(int i) const;
    std::vector<int> visible(int n_items) const;
};

MaskPlan sample_mask_plan(int n_items, double ratio, Rng& rng);

enum class EdgeBranchMode { line_graph, complement };

// Carrier graph of the edge branch: one node per source edge under the line
// graph, one per complement edge under the complement reading. Edge-nodes are
// connected when their source pairs share an endpoint.
struct EdgeBranchGraph {
    std::vector<std::pair<int, int>> pair_of_node;
    std::vector<std::pair<int, int>> connections;
    std::vector<int> presence;  // 2-way attribute per node

    int num_nodes() const { return static_cast<int>(pair_of_node.size()); }
};

EdgeBranchGraph build_edge_branch(const BubbleDiagram& d,
                                  EdgeBranchMode mode = EdgeBranchMode::line_graph);

struct PretrainConfig {
    int encoder_blocks = 8;
    int decoder_blocks = 2;
    double mask_ratio = 0.4;
    int channels = 16;
    int spatial_side = 8;  // tokens are (channels, side, side) volumes
    int max_positions = 256;
    long steps = 1000;
    int batch_size = 32;
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    std::uint64_t seed = 0;
    bool node_branch = true;
    bool edge_branch = true;
    EdgeBranchMode edge_mode = EdgeBranchMode::line_graph;
    bool use_cna = true, use_nna = true, use_gmb = true, normalize = true;
    int heads = 1;

    int token_dim() const { return channels * spatial_side * spatial_side; }
    void check() const;
};

// One masked-autoencoding branch. The encoder sees only visible items; the
// decoder fills masked slots with a shared mask token plus learned positional
// embeddings and reconstructs class logits for every item.
class MaskedGraphBranch {
  public:
    MaskedGraphBranch(const PretrainConfig& cfg, int arity, std::uint64_t init_seed);

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    int arity() const { return arity_; }
    long encoder_param_scalars() const;
    long decoder_param_scalars() const;

    // latent rows for visible items only, in ascending original order
    Var encode_visible(const std::vector<int>& attrs,
                       const std::vector<std::pair<int, int>>& edges, const MaskPlan& plan) const;

    // (n_items, arity) logits for every item
    Var decode_logits(const Var& latents, const MaskPlan& plan, int n_items,
                      const std::vector<std::pair<int, int>>& edges) const;

    Var reconstruct(const std::vector<int>& attrs, const std::vector<std::pair<int, int>>& edges,
                    const MaskPlan& plan) const;

  private:
    PretrainConfig cfg_;
    int arity_;
    ParamStore params_;
    Linear embed_;
    GteStack encoder_;
    Var mask_token_;
    Var pos_table_;  // (max_positions, token_dim)
    GteStack decoder_;
    Linear head_;  // zero-initialized
};

// Cross-entropy summed over masked items only; empty plans contribute 0.
Var masked_ce_sum(const Var& logits, const MaskPlan& plan, const std::vector<int>& targets);

struct BranchEval {
    long masked = 0;
    long correct = 0;
    double loss_sum = 0.0;
};

struct Pretrainer {
    PretrainConfig cfg;
    MaskedGraphBranch node_branch;
    MaskedGraphBranch edge_branch;

    Pretrainer(const PretrainConfig& cfg, std::uint64_t seed);

    // per-graph losses; either may be undefined when the branch is disabled
    // or the graph has no edges
    struct GraphLoss {
        Var node_loss;
        Var edge_loss;
    };
    GraphLoss graph_loss(const BubbleDiagram& d, Rng& rng) const;

    BranchEval eval_nodes(const std::vector<LayoutSample>& samples, int rounds,
                          std::uint64_t seed) const;
    BranchEval eval_edges(const std::vector<LayoutSample>& samples, int rounds,
                          std::uint64_t seed) const;
};

struct PretrainResult {
    double last_loss = 0.0;
    long steps = 0;
    std::string checkpoint_dir;
};

// optimizes an existing model in place
PretrainResult pretrain_loop(Pretrainer& model, const std::vector<LayoutSample>& samples,
                             const std::string& out_dir,
                             const std::string& config_echo_json = "{}",
                             const std::function<void(long, double)>& on_step = nullptr);

PretrainResult pretrain_run(const std::vector<LayoutSample>& samples, const PretrainConfig& cfg,
                            const std::string& out_dir, const std::string& config_echo_json = "{}",
                            const std::function<void(long, double)>& on_step = nullptr);

// Copies the node branch's encoder blocks onto the generator's first-level
// GTE pair; decoder, mask-token and positional parameters are dropped.
void export_encoder(const std::string& checkpoint_dir, Generator& generator);

}  // namespace plangan
