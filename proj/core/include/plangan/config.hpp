#pragma once

#include <cstdint>
#include <string>

#include "plangan/discriminator.hpp"
#include "plangan/generator.hpp"
#include "plangan/losses.hpp"
#include "plangan/pretrain.hpp"
#include "plangan/synth.hpp"

namespace plangan {

struct EvalConfig {
    int n_samples = 64;
    std::uint64_t extractor_seed = 9001;
};

// Everything a run needs, resolvable as defaults < config file < flags.
struct RunConfig {
    std::uint64_t seed = 0;
    GeneratorConfig generator;
    DiscriminatorConfig discriminator;
    GraphEstimatorConfig estimator;
    TrainConfig train;
    PretrainConfig pretrain;
    SynthConfig synth;
    EvalConfig eval;
};

std::string run_config_to_json(const RunConfig& cfg);
// missing keys keep their defaults; unknown keys are rejected
RunConfig run_config_from_json(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::string& path, RunConfig base = {});
void write_run_config(const RunConfig& cfg, const std::string& path);

}  // namespace plangan
