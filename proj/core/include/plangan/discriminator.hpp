#pragma once

#include <cstdint>
#include <functional>

#include "plangan/graph.hpp"
#include "plangan/gte.hpp"
#include "plangan/nn.hpp"

namespace plangan {

struct DiscriminatorConfig {
    int channels = 16;
    int type_dim = 10;
    int type_channels = 8;  // the expanded 10-d type reshapes to (8, 32, 32)
    int mask_side = 32;
    int gte_blocks = 8;
    int attention_heads = 1;
    UpdateVariant variant = UpdateVariant::eq2;
    bool use_cna = true;
    bool use_nna = true;
    bool use_gmb = true;
    bool normalize = true;
    int cnn_hidden = 32;
    int room_vec_dim = 128;
    bool per_room_class_head = false;  // pooled head is the default

    void check() const;
};

// Node-classification critic: per-room embedding, two relational rounds with
// stride-2 downsampling, a Wasserstein score and a 10-way class output.
class Discriminator {
  public:
    Discriminator(const DiscriminatorConfig& cfg, std::uint64_t init_seed);

    const DiscriminatorConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // masks (M, 32*32) in [-1,1], type one-hots (M, 10) -> (M, 16*32*32)
    Var embed_room_input(const Var& masks, const Var& type_onehots) const;

    struct Output {
        Var score;         // scalar
        Var class_logits;  // (10)
    };
    Output forward(const Var& masks, const Var& type_onehots, const BubbleDiagram& diagram) const;

    // WGAN-GP term for one graph, gradient penalty coefficient included
    Var gradient_penalty(const Tensor& real_masks, const Tensor& fake_masks,
                         const BubbleDiagram& diagram, double lambda_gp, Rng& rng) const;

  private:
    DiscriminatorConfig cfg_;
    ParamStore params_;
    Linear type_expand_;
    Conv2d emb1_, emb2_, emb3_;
    MpnRound round1_, round2_;
    Conv2d down1_, down2_;
    Conv2d vec1_, vec2_, vec3_;
    Linear score_head_;
    Linear class_head_;
};

Tensor type_onehots(const BubbleDiagram& diagram);

// Core of the penalty, reusable with any critic callable. The critic maps an
// (M, pixels) mask matrix to a scalar score.
Var wgan_gradient_penalty(const std::function<Var(const Var&)>& critic, const Tensor& real_masks,
                          const Tensor& fake_masks, double lambda_gp, double epsilon);

}  // namespace plangan
