#pragma once

#include <functional>
#include <string>
#include <vector>

#include "plangan/discriminator.hpp"
#include "plangan/generator.hpp"
#include "plangan/losses.hpp"
#include "plangan/synth.hpp"

namespace plangan {

struct Models {
    Generator generator;
    Discriminator discriminator;
    GraphEstimator estimator;

    Models(const GeneratorConfig& g, const DiscriminatorConfig& d, const GraphEstimatorConfig& e,
           std::uint64_t seed);
};

struct Optimizers {
    Adam critic;
    Adam generator;  // also covers the layout-to-graph estimator

    explicit Optimizers(const TrainConfig& cfg);
};

// One critic update (Wasserstein + gradient penalty + class loss on reals)
// followed by one generator update (-fake score + class loss on fakes +
// cycle-consistency through the layout-to-graph estimator).
LossBreakdown train_step(const std::vector<LayoutSample>& batch, Models& models, Optimizers& opt,
                         const TrainConfig& cfg, Rng& rng);

using StepCallback = std::function<void(long step, const LossBreakdown&)>;

struct TrainResult {
    LossBreakdown last;
    long steps = 0;
};

// Trains on everything outside `bucket`, logging one JSONL record per step to
// <out_dir>/metrics.jsonl and checkpointing to <out_dir>/checkpoint.
TrainResult run_training(const std::vector<LayoutSample>& dataset, Bucket bucket, Models& models,
                         const TrainConfig& cfg, const std::string& out_dir,
                         const std::string& config_echo_json = "{}",
                         const StepCallback& on_step = nullptr);

// Same loop over an explicit sample list (overfit harnesses).
TrainResult run_training_samples(const std::vector<LayoutSample>& train_set, Models& models,
                                 const TrainConfig& cfg, const std::string& out_dir,
                                 const std::string& config_echo_json = "{}",
                                 const StepCallback& on_step = nullptr);

}  // namespace plangan
