#include "plangan/training.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "plangan/checkpoint.hpp"
#include "plangan/errors.hpp"

namespace plangan {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

Models::Models(const GeneratorConfig& g, const DiscriminatorConfig& d,
               const GraphEstimatorConfig& e, std::uint64_t seed)
    : generator(g, seed), discriminator(d, seed + 1), estimator(e, seed + 2) {}

Optimizers::Optimizers(const TrainConfig& cfg)
    : critic(cfg.lr_d, cfg.beta1, cfg.beta2), generator(cfg.lr_g, cfg.beta1, cfg.beta2) {}

namespace {

Tensor generate_fake_masks(const Generator& g, const LayoutSample& s, Rng& rng) {
    NoGradGuard ng;
    NodeInputConfig nic{g.config().noise_dim, g.config().type_dim};
    Tensor inputs = build_node_inputs(s.diagram, rng, nic);
    return g.forward(s.diagram, constant(inputs)).val();
}

Tensor scaled_real_masks(const LayoutSample& s, double level) {
    Tensor m = real_masks(s);
    if (level != 1.0) {
        double* p = m.data();
        for (int i = 0; i < m.size(); ++i) p[i] *= level;
    }
    return m;
}

}  // namespace

LossBreakdown train_step(const std::vector<LayoutSample>& batch, Models& models, Optimizers& opt,
                         const TrainConfig& cfg, Rng& rng) {
    if (batch.empty()) throw Error("train_step on empty batch");
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    NodeInputConfig nic{models.generator.config().noise_dim, models.generator.config().type_dim};
    LossBreakdown lb;

    // ---- critic update(s)
    for (int cstep = 0; cstep < cfg.critic_steps_per_gen; ++cstep) {
        Var w_loss, gp_loss, class_loss;
        for (const auto& s : batch) {
            Tensor fake = generate_fake_masks(models.generator, s, rng);
            Tensor real = scaled_real_masks(s, cfg.real_mask_level);
            Tensor types = type_onehots(s.diagram);
            auto out_fake = models.discriminator.forward(constant(fake), constant(types), s.diagram);
            auto out_real = models.discriminator.forward(constant(real), constant(types), s.diagram);
            Var w = sub(out_fake.score, out_real.score);
            w_loss = w_loss.defined() ? add(w_loss, w) : w;
            Var gp = models.discriminator.gradient_penalty(real, fake, s.diagram, cfg.lambda_gp,
                                                           rng);
            gp_loss = gp_loss.defined() ? add(gp_loss, gp) : gp;
            if (cfg.lambda1 != 0.0) {
                Var cl = classification_loss(out_real.class_logits, s.diagram);
                class_loss = class_loss.defined() ? add(class_loss, cl) : cl;
            }
        }
        w_loss = mul_scalar(w_loss, inv_n);
        gp_loss = mul_scalar(gp_loss, inv_n);
        Var critic_total = add(w_loss, gp_loss);
        if (class_loss.defined()) {
            class_loss = mul_scalar(class_loss, inv_n);
            critic_total = add(critic_total, mul_scalar(class_loss, cfg.lambda1));
        }
        lb.l_gan_d = w_loss.scalar();
        lb.l_gp = gp_loss.scalar();
        auto d_params = models.discriminator.params().vars();
        auto d_grads = grad(critic_total, d_params);
        opt.critic.step(d_params, d_grads);
    }

    // ---- generator update
    {
        Var gan_loss, class_loss, gcyc;
        for (const auto& s : batch) {
            Tensor inputs = build_node_inputs(s.diagram, rng, nic);
            Var fake = models.generator.forward(s.diagram, constant(inputs));
            Tensor types = type_onehots(s.diagram);
            auto out = models.discriminator.forward(fake, constant(types), s.diagram);
            Var g = neg(out.score);
            gan_loss = gan_loss.defined() ? add(gan_loss, g) : g;
            if (cfg.lambda1 != 0.0) {
                Var cl = classification_loss(out.class_logits, s.diagram);
                class_loss = class_loss.defined() ? add(class_loss, cl) : cl;
            }
            if (cfg.lambda2 != 0.0) {
                Tensor gt = weighted_adjacency_tensor(shortest_path_matrix(s.diagram));
                Var gen_adj = models.estimator(fake);
                Var gl = gcyc_loss(gt, gen_adj);
                gcyc = gcyc.defined() ? add(gcyc, gl) : gl;
            }
        }
        gan_loss = mul_scalar(gan_loss, inv_n);
        Var gen_total = gan_loss;
        if (class_loss.defined()) {
            class_loss = mul_scalar(class_loss, inv_n);
            gen_total = add(gen_total, mul_scalar(class_loss, cfg.lambda1));
            lb.l_class = class_loss.scalar();
        }
        if (gcyc.defined()) {
            gcyc = mul_scalar(gcyc, inv_n);
            gen_total = add(gen_total, mul_scalar(gcyc, cfg.lambda2));
            lb.l_gcyc = gcyc.scalar();
        }
        lb.l_gan_g = gan_loss.scalar();
        lb.total = gen_total.scalar();

        auto g_params = models.generator.params().vars();
        auto e_params = models.estimator.params().vars();
        std::vector<Var> all = g_params;
        all.insert(all.end(), e_params.begin(), e_params.end());
        auto grads = grad(gen_total, all);
        opt.generator.step(all, grads);
    }

    if (!lb.all_finite()) {
        std::ostringstream diag;
        diag << "l_gan_d=" << lb.l_gan_d << " l_gan_g=" << lb.l_gan_g << " l_gp=" << lb.l_gp
             << " l_class=" << lb.l_class << " l_gcyc=" << lb.l_gcyc;
        throw NonFiniteLossError(diag.str());
    }
    return lb;
}

namespace {

std::string metrics_record(long step, const LossBreakdown& lb) {
    ordered_json rec;
    rec["step"] = step;
    rec["l_gan_d"] = lb.l_gan_d;
    rec["l_gan_g"] = lb.l_gan_g;
    rec["l_gp"] = lb.l_gp;
    rec["l_class"] = lb.l_class;
    rec["l_gcyc"] = lb.l_gcyc;
    rec["total"] = lb.total;
    return rec.dump();
}

}  // namespace

TrainResult run_training_samples(const std::vector<LayoutSample>& train_set, Models& models,
                                 const TrainConfig& cfg, const std::string& out_dir,
                                 const std::string& config_echo_json,
                                 const StepCallback& on_step) {
    if (train_set.empty()) throw Error("training set is empty");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    std::ofstream log(fs::path(out_dir) / "metrics.jsonl", std::ios::trunc);
    if (!log) throw IoError("cannot open metrics log in " + out_dir);

    Optimizers opt(cfg);
    Rng rng(cfg.seed);
    std::vector<int> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    size_t cursor = order.size();  // trigger shuffle on first use

    auto checkpoint = [&](long step) {
        save_checkpoint((fs::path(out_dir) / "checkpoint").string(), step, "gan",
                        config_echo_json,
                        {{"generator", &models.generator.params()},
                         {"discriminator", &models.discriminator.params()},
                         {"estimator", &models.estimator.params()}});
    };

    TrainResult result;
    for (long step = 1; step <= cfg.max_steps; ++step) {
        std::vector<LayoutSample> batch;
        int bs = std::min<int>(cfg.batch_size, static_cast<int>(train_set.size()));
        for (int i = 0; i < bs; ++i) {
            if (cursor >= order.size()) {
                rng.shuffle(order);
                cursor = 0;
            }
            batch.push_back(train_set[static_cast<size_t>(order[cursor++])]);
        }
        LossBreakdown lb = train_step(batch, models, opt, cfg, rng);
        log << metrics_record(step, lb) << "\n";
        if (on_step) on_step(step, lb);
        if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0) checkpoint(step);
        result.last = lb;
        result.steps = step;
    }
    checkpoint(result.steps);
    return result;
}

TrainResult run_training(const std::vector<LayoutSample>& dataset, Bucket bucket, Models& models,
                         const TrainConfig& cfg, const std::string& out_dir,
                         const std::string& config_echo_json, const StepCallback& on_step) {
    return run_training_samples(exclude_bucket(dataset, bucket), models, cfg, out_dir,
                                config_echo_json, on_step);
}

}  // namespace plangan
