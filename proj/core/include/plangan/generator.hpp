#pragma once

#include <cstdint>
#include <vector>

#include "plangan/graph.hpp"
#include "plangan/gte.hpp"
#include "plangan/nn.hpp"
#include "plangan/synth.hpp"

namespace plangan {

struct GeneratorConfig {
    int noise_dim = 128;
    int type_dim = 10;
    int channels = 16;
    std::vector<int> resolutions{8, 16, 32};
    int gte_blocks = 8;
    int attention_heads = 1;
    UpdateVariant variant = UpdateVariant::eq2;
    double alpha_init = 0.0;
    double beta_init = 0.0;
    bool use_cna = true;
    bool use_nna = true;
    bool use_gmb = true;
    bool normalize = true;
    int cnn_hidden = 32;
    std::vector<int> head_channels{256, 128, 1};

    int input_dim() const { return noise_dim + type_dim; }
    int mask_pixels() const { return resolutions.back() * resolutions.back(); }
    void check() const;  // throws on invariant violations
};

// Graph-Transformer generator: expand each node input to an 8x8 feature
// volume, run one message-passing round per resolution with transposed-conv
// upsampling in between, then emit one bounded segmentation mask per room.
class Generator {
  public:
    Generator(const GeneratorConfig& cfg, std::uint64_t init_seed);

    const GeneratorConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // (M, noise+type) -> (M, channels * res0 * res0)
    Var expand_to_volume(const Var& node_inputs) const;
    Var conv_mpn_round(const Var& feats, int level, const NodeSets& sets,
                       const Tensor& adjacency) const;
    Var upsample(const Var& feats, int level) const;  // between level and level+1
    Var generation_head(const Var& feats) const;      // (M, d_last) -> (M, 32*32) in [-1,1]

    // full differentiable pipeline; masks are (M, mask_pixels())
    Var forward(const BubbleDiagram& diagram, const Var& node_inputs) const;

    // seeded inference; one (1, R, R) mask tensor per room
    std::vector<Tensor> generate(const BubbleDiagram& diagram, Rng& rng) const;

  private:
    GeneratorConfig cfg_;
    ParamStore params_;
    Linear expand_;
    std::vector<MpnRound> rounds_;
    std::vector<ConvTranspose2d> ups_;
    std::vector<Conv2d> head_;
};

// Tightest half-open bounding box of pixels > 0; throws EmptyMaskError.
Rect fit_rectangle(const Tensor& mask);
// Same, but an all-nonpositive mask falls back to the 1-px cell at the
// largest value (keeps evaluation pipelines total).
Rect fit_rectangle_lenient(const Tensor& mask);

std::vector<Rect> masks_to_rects(const std::vector<Tensor>& masks);

}  // namespace plangan
