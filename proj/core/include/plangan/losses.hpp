#pragma once

#include <cstdint>

#include "plangan/autodiff.hpp"
#include "plangan/graph.hpp"
#include "plangan/nn.hpp"

namespace plangan {

struct LossBreakdown {
    double l_gan_d = 0.0;
    double l_gan_g = 0.0;
    double l_gp = 0.0;
    double l_class = 0.0;
    double l_gcyc = 0.0;
    double total = 0.0;
    bool all_finite() const;
};

struct TrainConfig {
    double lr_g = 1e-4;
    double lr_d = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    int batch_size = 32;
    double lambda1 = 1.0;
    double lambda2 = 0.1;
    double lambda_gp = 10.0;
    int critic_steps_per_gen = 1;
    long max_steps = 1000;
    long checkpoint_every = 500;
    std::uint64_t seed = 0;
    // amplitude of real masks fed to the critic; below 1.0 keeps the targets
    // inside the generator's open output range
    double real_mask_level = 1.0;
};

// Wasserstein pair: critic wants fake - real small, generator wants -fake.
std::pair<double, double> adversarial_losses(double real_score, double fake_score);

// Multi-hot room-type presence of a diagram.
Tensor multi_hot_types(const BubbleDiagram& diagram);

// Mean binary cross-entropy of the pooled 10-d logits against the multi-hot
// presence target; a (M,10) per-room logits matrix is scored against each
// room's own one-hot instead.
Var classification_loss(const Var& class_logits, const BubbleDiagram& diagram);

struct GraphEstimatorConfig {
    int mask_side = 32;
    int conv_channels = 8;
    int embed_dim = 32;
    int pair_hidden = 32;

    int conv_out_dim() const {
        int s = mask_side / 4;
        return 2 * conv_channels * s * s;
    }
};

// Layout-to-graph map: a small conv encoder per mask plus a pairwise head,
// symmetrized with a zero diagonal. Differentiable in the masks.
class GraphEstimator {
  public:
    GraphEstimator(const GraphEstimatorConfig& cfg, std::uint64_t init_seed);

    const GraphEstimatorConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // masks (M, side*side) -> (M, M) soft adjacency
    Var operator()(const Var& masks) const;

  private:
    GraphEstimatorConfig cfg_;
    ParamStore params_;
    Conv2d c1_, c2_;
    Linear proj_;
    Linear pair_hidden_;
    Linear pair_out_;
};

// Frobenius norm of (g_gt - g_gen)
Var gcyc_loss(const Tensor& g_gt, const Var& g_gen);

}  // namespace plangan
