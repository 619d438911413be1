#include "plangan/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "plangan/checkpoint.hpp"
#include "plangan/config.hpp"
#include "plangan/errors.hpp"
#include "plangan/metrics.hpp"
#include "plangan/pretrain.hpp"
#include "plangan/training.hpp"

namespace plangan::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct HelpRequested {};

void add_common(CLI::App* sub, Command& cmd) {
    sub->add_option("--config", cmd.config_path, "JSON config file");
    sub->add_option("--seed", cmd.seed, "random seed");
    sub->add_option("--out", cmd.out, "output path");
}

}  // namespace

Command parse(const std::vector<std::string>& args) {
    Command cmd;
    CLI::App app{"bubble-diagram to house layout toolkit"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth-data", "generate a synthetic floorplan dataset");
    add_common(synth, cmd);
    synth->add_option("--count", cmd.count, "number of samples")->required();
    synth->add_option("--min-rooms", cmd.min_rooms, "minimum rooms per sample");
    synth->add_option("--max-rooms", cmd.max_rooms, "maximum rooms per sample");

    auto* pretrain = app.add_subcommand("pretrain", "masked-graph pre-training");
    add_common(pretrain, cmd);
    pretrain->add_option("--data", cmd.data, "dataset file")->required();
    pretrain->add_option("--steps", cmd.steps, "optimization steps");
    pretrain->add_option("--mask-ratio", cmd.mask_ratio, "masking ratio");
    pretrain->add_flag("--no-cna", cmd.no_cna, "disable connected-node attention");
    pretrain->add_flag("--no-nna", cmd.no_nna, "disable non-connected-node attention");
    pretrain->add_flag("--no-gmb", cmd.no_gmb, "disable the graph modeling block");

    auto* train = app.add_subcommand("train", "adversarial training");
    add_common(train, cmd);
    train->add_option("--data", cmd.data, "dataset file")->required();
    train->add_option("--bucket", cmd.bucket, "held-out room-count bucket")
        ->check(CLI::IsMember({"1-3", "4-6", "7-9", "10-12", "13+"}));
    train->add_option("--steps", cmd.steps, "optimization steps");
    train->add_option("--checkpoint", cmd.checkpoint, "pretrained encoder checkpoint to import");
    train->add_option("--variant", cmd.variant, "message-passing update variant")
        ->check(CLI::IsMember({"eq2", "eq3", "eq4"}));
    train->add_flag("--no-cna", cmd.no_cna, "disable connected-node attention");
    train->add_flag("--no-nna", cmd.no_nna, "disable non-connected-node attention");
    train->add_flag("--no-gmb", cmd.no_gmb, "disable the graph modeling block");
    train->add_flag("--no-pretrain", cmd.no_pretrain, "ignore any pretrained encoder");

    auto* generate = app.add_subcommand("generate", "generate layouts from diagrams");
    add_common(generate, cmd);
    generate->add_option("--checkpoint", cmd.checkpoint, "trained model checkpoint")->required();
    generate->add_option("--diagrams", cmd.diagrams, "dataset file supplying diagrams")
        ->required();
    generate->add_option("--samples", cmd.samples, "number of layouts to generate");

    auto* evaluate = app.add_subcommand("evaluate", "compatibility and FID report");
    add_common(evaluate, cmd);
    evaluate->add_option("--data", cmd.data, "dataset file")->required();
    evaluate->add_option("--bucket", cmd.bucket, "restrict held-out samples to a bucket")
        ->check(CLI::IsMember({"1-3", "4-6", "7-9", "10-12", "13+"}));
    evaluate->add_option("--checkpoint", cmd.checkpoint, "trained model checkpoint");
    evaluate->add_option("--samples", cmd.samples, "number of generated samples");

    auto* ablate = app.add_subcommand("ablate", "run the ablation configuration matrix");
    add_common(ablate, cmd);
    ablate->add_option("--data", cmd.data, "dataset file")->required();
    ablate->add_option("--only", cmd.only, "run a single named configuration");
    ablate->add_option("--steps", cmd.steps, "training steps per configuration");
    ablate->add_option("--samples", cmd.samples, "evaluation samples per configuration");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        cmd.verb = "help";
        std::cout << app.help() << std::flush;
        return cmd;
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }
    for (auto* sub : app.get_subcommands()) cmd.verb = sub->get_name();
    return cmd;
}

namespace {

RunConfig resolve_config(const Command& cmd) {
    RunConfig rc;
    if (cmd.config_path) rc = load_run_config(*cmd.config_path, rc);
    if (cmd.seed) {
        rc.seed = *cmd.seed;
    }
    rc.train.seed = rc.seed;
    rc.pretrain.seed = rc.seed;
    if (cmd.steps) {
        rc.train.max_steps = *cmd.steps;
        rc.pretrain.steps = *cmd.steps;
    }
    if (cmd.mask_ratio) rc.pretrain.mask_ratio = *cmd.mask_ratio;
    if (cmd.min_rooms) rc.synth.min_rooms = *cmd.min_rooms;
    if (cmd.max_rooms) rc.synth.max_rooms = *cmd.max_rooms;
    if (cmd.samples) rc.eval.n_samples = *cmd.samples;
    if (cmd.variant) {
        auto v = update_variant_from_name(*cmd.variant);
        if (!v) throw UsageError("unknown variant " + *cmd.variant);
        rc.generator.variant = *v;
    }
    if (cmd.no_cna) {
        rc.generator.use_cna = false;
        rc.pretrain.use_cna = false;
    }
    if (cmd.no_nna) {
        rc.generator.use_nna = false;
        rc.pretrain.use_nna = false;
    }
    if (cmd.no_gmb) {
        rc.generator.use_gmb = false;
        rc.pretrain.use_gmb = false;
    }
    return rc;
}

void write_snapshot(const RunConfig& rc, const std::string& out_path, bool out_is_file) {
    fs::path dir = out_is_file ? fs::path(out_path).parent_path() : fs::path(out_path);
    if (dir.empty()) dir = ".";
    std::error_code ec;
    fs::create_directories(dir, ec);
    write_run_config(rc, (dir / "config.resolved.json").string());
}

std::string require(const std::optional<std::string>& v, const char* what) {
    if (!v) throw UsageError(std::string("missing required option ") + what);
    return *v;
}

int run_synth(const Command& cmd, const RunConfig& rc) {
    std::string out = require(cmd.out, "--out");
    if (!cmd.count) throw UsageError("missing required option --count");
    Rng rng(rc.seed);
    auto samples = generate_dataset(rng, *cmd.count, rc.synth);
    write_snapshot(rc, out, /*out_is_file=*/true);
    write_dataset(samples, out);
    return 0;
}

int run_pretrain(const Command& cmd, const RunConfig& rc) {
    std::string out = require(cmd.out, "--out");
    auto samples = read_dataset(require(cmd.data, "--data"));
    write_snapshot(rc, out, false);
    pretrain_run(samples, rc.pretrain, out, run_config_to_json(rc));
    return 0;
}

int run_train(const Command& cmd, const RunConfig& rc) {
    std::string out = require(cmd.out, "--out");
    auto samples = read_dataset(require(cmd.data, "--data"));
    write_snapshot(rc, out, false);

    Models models(rc.generator, rc.discriminator, rc.estimator, rc.seed);
    if (cmd.checkpoint && !cmd.no_pretrain)
        export_encoder(*cmd.checkpoint, models.generator);

    if (cmd.bucket) {
        auto b = bucket_from_label(*cmd.bucket);
        if (!b) throw UsageError("unknown bucket " + *cmd.bucket);
        run_training(samples, *b, models, rc.train, out, run_config_to_json(rc));
    } else {
        run_training_samples(samples, models, rc.train, out, run_config_to_json(rc));
    }
    return 0;
}

void load_gan_checkpoint(const std::string& dir, Models& models) {
    auto info = read_checkpoint_info(dir);
    if (info.component != "gan") throw IoError("checkpoint " + dir + " is not a trained model");
    load_checkpoint_model(dir, "generator.bin", models.generator.params());
    load_checkpoint_model(dir, "discriminator.bin", models.discriminator.params());
    load_checkpoint_model(dir, "estimator.bin", models.estimator.params());
}

int run_generate(const Command& cmd, const RunConfig& rc) {
    std::string out = require(cmd.out, "--out");
    auto samples = read_dataset(require(cmd.diagrams, "--diagrams"));
    if (samples.empty()) throw Error("no diagrams in input");
    std::error_code ec;
    fs::create_directories(out, ec);
    write_snapshot(rc, out, false);

    Models models(rc.generator, rc.discriminator, rc.estimator, rc.seed);
    load_gan_checkpoint(require(cmd.checkpoint, "--checkpoint"), models);

    int n = cmd.samples ? *cmd.samples : static_cast<int>(samples.size());
    Rng rng(rc.seed);
    for (int i = 0; i < n; ++i) {
        const LayoutSample& s = samples[static_cast<size_t>(i) % samples.size()];
        Rng sample_rng = rng.fork(static_cast<std::uint64_t>(i));
        auto masks = models.generator.generate(s.diagram, sample_rng);
        auto rects = masks_to_rects(masks);

        char tag[16];
        std::snprintf(tag, sizeof tag, "%04d", i);
        RasterImage img = rasterize(rects, s.diagram.room_types, 8);
        write_ppm(img, (fs::path(out) / ("sample_" + std::string(tag) + ".ppm")).string());

        ordered_json rec;
        rec["v"] = 1;
        auto rooms = ordered_json::array();
        for (RoomType t : s.diagram.room_types) rooms.push_back(static_cast<int>(t));
        rec["rooms"] = rooms;
        auto rj = ordered_json::array();
        for (const Rect& r : rects) rj.push_back(ordered_json::array({r.x0, r.y0, r.x1, r.y1}));
        rec["rects"] = rj;
        rec["compatibility"] = compatibility(s.diagram, rects);
        std::ofstream f(fs::path(out) / ("sample_" + std::string(tag) + ".json"));
        if (!f) throw IoError("cannot write sample record");
        f << rec.dump(2) << "\n";
    }
    return 0;
}

int run_evaluate(const Command& cmd, const RunConfig& rc) {
    std::string out = require(cmd.out, "--out");
    auto samples = read_dataset(require(cmd.data, "--data"));
    std::error_code ec;
    fs::create_directories(out, ec);
    write_snapshot(rc, out, false);

    std::string bucket = "all";
    if (cmd.bucket) {
        auto b = bucket_from_label(*cmd.bucket);
        if (!b) throw UsageError("unknown bucket " + *cmd.bucket);
        auto split = bucket_split(samples);
        samples = split[*b].samples;
        bucket = *cmd.bucket;
    }
    if (samples.empty()) throw Error("no samples in the selected bucket");

    ConvFeatureExtractor extractor(rc.eval.extractor_seed);
    extractor.save((fs::path(out) / "extractor.bin").string());

    EvalReport report;
    if (cmd.checkpoint) {
        Models models(rc.generator, rc.discriminator, rc.estimator, rc.seed);
        load_gan_checkpoint(*cmd.checkpoint, models);
        report = evaluate_suite(models.generator, samples, extractor, rc.eval.n_samples, rc.seed,
                                bucket);
    } else {
        report = evaluate_self(samples, extractor, bucket);
    }
    write_eval_report(report, (fs::path(out) / "report.json").string());
    return 0;
}

}  // namespace

const std::vector<std::string>& ablation_preset_names() {
    static const std::vector<std::string> names{
        "eq3",          "eq4",           "no-cna",   "no-nna",
        "no-gmb",       "mask-node-only", "mask-edge-only", "mask-both",
    };
    return names;
}

namespace {

int run_ablate(const Command& cmd, const RunConfig& base) {
    std::string out = require(cmd.out, "--out");
    auto samples = read_dataset(require(cmd.data, "--data"));
    std::error_code ec;
    fs::create_directories(out, ec);
    write_snapshot(base, out, false);

    std::vector<std::string> presets = ablation_preset_names();
    if (cmd.only) {
        bool known = false;
        for (const auto& p : presets) known = known || p == *cmd.only;
        if (!known) throw UsageError("unknown ablation configuration " + *cmd.only);
        presets = {*cmd.only};
    }

    for (const std::string& preset : presets) {
        RunConfig rc = base;
        bool with_pretrain = false;
        if (preset == "eq3") rc.generator.variant = UpdateVariant::eq3;
        else if (preset == "eq4") rc.generator.variant = UpdateVariant::eq4;
        else if (preset == "no-cna") rc.generator.use_cna = false;
        else if (preset == "no-nna") rc.generator.use_nna = false;
        else if (preset == "no-gmb") rc.generator.use_gmb = false;
        else if (preset == "mask-node-only") {
            with_pretrain = true;
            rc.pretrain.node_branch = true;
            rc.pretrain.edge_branch = false;
        } else if (preset == "mask-edge-only") {
            with_pretrain = true;
            rc.pretrain.node_branch = false;
            rc.pretrain.edge_branch = true;
        } else if (preset == "mask-both") {
            with_pretrain = true;
            rc.pretrain.node_branch = true;
            rc.pretrain.edge_branch = true;
        }

        fs::path pdir = fs::path(out) / preset;
        fs::create_directories(pdir, ec);
        write_run_config(rc, (pdir / "config.resolved.json").string());

        Models models(rc.generator, rc.discriminator, rc.estimator, rc.seed);
        if (with_pretrain) {
            auto pr = pretrain_run(samples, rc.pretrain, (pdir / "pretrain").string(),
                                   run_config_to_json(rc));
            export_encoder(pr.checkpoint_dir, models.generator);
        }
        run_training_samples(samples, models, rc.train, (pdir / "train").string(),
                             run_config_to_json(rc));

        ConvFeatureExtractor extractor(rc.eval.extractor_seed);
        extractor.save((pdir / "extractor.bin").string());
        EvalReport report = evaluate_suite(models.generator, samples, extractor,
                                           rc.eval.n_samples, rc.seed, "all");
        write_eval_report(report, (pdir / "report.json").string());
    }
    return 0;
}

}  // namespace

int run(const Command& cmd) {
    if (cmd.verb == "help" || cmd.verb.empty()) return 0;
    RunConfig rc = resolve_config(cmd);
    if (cmd.verb == "synth-data") return run_synth(cmd, rc);
    if (cmd.verb == "pretrain") return run_pretrain(cmd, rc);
    if (cmd.verb == "train") return run_train(cmd, rc);
    if (cmd.verb == "generate") return run_generate(cmd, rc);
    if (cmd.verb == "evaluate") return run_evaluate(cmd, rc);
    if (cmd.verb == "ablate") return run_ablate(cmd, rc);
    throw UsageError("unknown verb " + cmd.verb);
}

int main(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    try {
        Command cmd = parse(args);
        return run(cmd);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        ordered_json err;
        err["error"] = {{"type", "runtime"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}

}  // namespace plangan::cli
