#include "plangan/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "plangan/errors.hpp"

namespace plangan {

using ordered_json = nlohmann::ordered_json;

namespace {

class Section {
  public:
    Section(const ordered_json& j, std::string name) : j_(j), name_(std::move(name)) {}

    template <typename T>
    void get(const char* key, T& out) {
        known_.insert(key);
        if (j_.contains(key)) {
            try {
                out = j_.at(key).get<T>();
            } catch (const std::exception& e) {
                throw Error("config key " + name_ + "." + key + ": " + e.what());
            }
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!known_.count(it.key()))
                throw Error("unknown config key " + name_ + "." + it.key());
    }

  private:
    const ordered_json& j_;
    std::string name_;
    std::set<std::string> known_;
};

std::string variant_str(UpdateVariant v) { return update_variant_name(v); }

UpdateVariant variant_parse(const std::string& s) {
    auto v = update_variant_from_name(s);
    if (!v) throw Error("unknown update variant '" + s + "'");
    return *v;
}

std::string edge_mode_str(EdgeBranchMode m) {
    return m == EdgeBranchMode::line_graph ? "line_graph" : "complement";
}

EdgeBranchMode edge_mode_parse(const std::string& s) {
    if (s == "line_graph") return EdgeBranchMode::line_graph;
    if (s == "complement") return EdgeBranchMode::complement;
    throw Error("unknown edge branch mode '" + s + "'");
}

}  // namespace

std::string run_config_to_json(const RunConfig& c) {
    ordered_json j;
    j["seed"] = c.seed;

    ordered_json g;
    g["noise_dim"] = c.generator.noise_dim;
    g["type_dim"] = c.generator.type_dim;
    g["channels"] = c.generator.channels;
    g["resolutions"] = c.generator.resolutions;
    g["gte_blocks"] = c.generator.gte_blocks;
    g["attention_heads"] = c.generator.attention_heads;
    g["variant"] = variant_str(c.generator.variant);
    g["alpha_init"] = c.generator.alpha_init;
    g["beta_init"] = c.generator.beta_init;
    g["use_cna"] = c.generator.use_cna;
    g["use_nna"] = c.generator.use_nna;
    g["use_gmb"] = c.generator.use_gmb;
    g["normalize"] = c.generator.normalize;
    g["cnn_hidden"] = c.generator.cnn_hidden;
    g["head_channels"] = c.generator.head_channels;
    j["generator"] = g;

    ordered_json d;
    d["channels"] = c.discriminator.channels;
    d["type_channels"] = c.discriminator.type_channels;
    d["gte_blocks"] = c.discriminator.gte_blocks;
    d["attention_heads"] = c.discriminator.attention_heads;
    d["variant"] = variant_str(c.discriminator.variant);
    d["use_cna"] = c.discriminator.use_cna;
    d["use_nna"] = c.discriminator.use_nna;
    d["use_gmb"] = c.discriminator.use_gmb;
    d["normalize"] = c.discriminator.normalize;
    d["cnn_hidden"] = c.discriminator.cnn_hidden;
    d["room_vec_dim"] = c.discriminator.room_vec_dim;
    d["per_room_class_head"] = c.discriminator.per_room_class_head;
    j["discriminator"] = d;

    ordered_json e;
    e["conv_channels"] = c.estimator.conv_channels;
    e["embed_dim"] = c.estimator.embed_dim;
    e["pair_hidden"] = c.estimator.pair_hidden;
    j["estimator"] = e;

    ordered_json t;
    t["lr_g"] = c.train.lr_g;
    t["lr_d"] = c.train.lr_d;
    t["beta1"] = c.train.beta1;
    t["beta2"] = c.train.beta2;
    t["batch_size"] = c.train.batch_size;
    t["lambda1"] = c.train.lambda1;
    t["lambda2"] = c.train.lambda2;
    t["lambda_gp"] = c.train.lambda_gp;
    t["critic_steps_per_gen"] = c.train.critic_steps_per_gen;
    t["max_steps"] = c.train.max_steps;
    t["checkpoint_every"] = c.train.checkpoint_every;
    t["real_mask_level"] = c.train.real_mask_level;
    j["train"] = t;

    ordered_json p;
    p["encoder_blocks"] = c.pretrain.encoder_blocks;
    p["decoder_blocks"] = c.pretrain.decoder_blocks;
    p["mask_ratio"] = c.pretrain.mask_ratio;
    p["channels"] = c.pretrain.channels;
    p["spatial_side"] = c.pretrain.spatial_side;
    p["max_positions"] = c.pretrain.max_positions;
    p["steps"] = c.pretrain.steps;
    p["batch_size"] = c.pretrain.batch_size;
    p["lr"] = c.pretrain.lr;
    p["node_branch"] = c.pretrain.node_branch;
    p["edge_branch"] = c.pretrain.edge_branch;
    p["edge_mode"] = edge_mode_str(c.pretrain.edge_mode);
    p["use_cna"] = c.pretrain.use_cna;
    p["use_nna"] = c.pretrain.use_nna;
    p["use_gmb"] = c.pretrain.use_gmb;
    p["normalize"] = c.pretrain.normalize;
    p["heads"] = c.pretrain.heads;
    j["pretrain"] = p;

    ordered_json s;
    s["min_rooms"] = c.synth.min_rooms;
    s["max_rooms"] = c.synth.max_rooms;
    s["min_side"] = c.synth.min_side;
    s["wall"] = c.synth.wall;
    s["max_attempts"] = c.synth.max_attempts;
    j["synth"] = s;

    ordered_json ev;
    ev["n_samples"] = c.eval.n_samples;
    ev["extractor_seed"] = c.eval.extractor_seed;
    j["eval"] = ev;

    return j.dump(2);
}

RunConfig run_config_from_json(const std::string& text, RunConfig c) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw Error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error("config root must be an object");

    std::set<std::string> known{"seed",     "generator", "discriminator", "estimator",
                                "train",    "pretrain",  "synth",         "eval"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw Error("unknown config section '" + it.key() + "'");

    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();

    if (j.contains("generator")) {
        Section s(j["generator"], "generator");
        s.get("noise_dim", c.generator.noise_dim);
        s.get("type_dim", c.generator.type_dim);
        s.get("channels", c.generator.channels);
        s.get("resolutions", c.generator.resolutions);
        s.get("gte_blocks", c.generator.gte_blocks);
        s.get("attention_heads", c.generator.attention_heads);
        std::string variant = variant_str(c.generator.variant);
        s.get("variant", variant);
        c.generator.variant = variant_parse(variant);
        s.get("alpha_init", c.generator.alpha_init);
        s.get("beta_init", c.generator.beta_init);
        s.get("use_cna", c.generator.use_cna);
        s.get("use_nna", c.generator.use_nna);
        s.get("use_gmb", c.generator.use_gmb);
        s.get("normalize", c.generator.normalize);
        s.get("cnn_hidden", c.generator.cnn_hidden);
        s.get("head_channels", c.generator.head_channels);
        s.finish();
    }
    if (j.contains("discriminator")) {
        Section s(j["discriminator"], "discriminator");
        s.get("channels", c.discriminator.channels);
        s.get("type_channels", c.discriminator.type_channels);
        s.get("gte_blocks", c.discriminator.gte_blocks);
        s.get("attention_heads", c.discriminator.attention_heads);
        std::string variant = variant_str(c.discriminator.variant);
        s.get("variant", variant);
        c.discriminator.variant = variant_parse(variant);
        s.get("use_cna", c.discriminator.use_cna);
        s.get("use_nna", c.discriminator.use_nna);
        s.get("use_gmb", c.discriminator.use_gmb);
        s.get("normalize", c.discriminator.normalize);
        s.get("cnn_hidden", c.discriminator.cnn_hidden);
        s.get("room_vec_dim", c.discriminator.room_vec_dim);
        s.get("per_room_class_head", c.discriminator.per_room_class_head);
        s.finish();
    }
    if (j.contains("estimator")) {
        Section s(j["estimator"], "estimator");
        s.get("conv_channels", c.estimator.conv_channels);
        s.get("embed_dim", c.estimator.embed_dim);
        s.get("pair_hidden", c.estimator.pair_hidden);
        s.finish();
    }
    if (j.contains("train")) {
        Section s(j["train"], "train");
        s.get("lr_g", c.train.lr_g);
        s.get("lr_d", c.train.lr_d);
        s.get("beta1", c.train.beta1);
        s.get("beta2", c.train.beta2);
        s.get("batch_size", c.train.batch_size);
        s.get("lambda1", c.train.lambda1);
        s.get("lambda2", c.train.lambda2);
        s.get("lambda_gp", c.train.lambda_gp);
        s.get("critic_steps_per_gen", c.train.critic_steps_per_gen);
        s.get("max_steps", c.train.max_steps);
        s.get("checkpoint_every", c.train.checkpoint_every);
        s.get("real_mask_level", c.train.real_mask_level);
        s.finish();
    }
    if (j.contains("pretrain")) {
        Section s(j["pretrain"], "pretrain");
        s.get("encoder_blocks", c.pretrain.encoder_blocks);
        s.get("decoder_blocks", c.pretrain.decoder_blocks);
        s.get("mask_ratio", c.pretrain.mask_ratio);
        s.get("channels", c.pretrain.channels);
        s.get("spatial_side", c.pretrain.spatial_side);
        s.get("max_positions", c.pretrain.max_positions);
        s.get("steps", c.pretrain.steps);
        s.get("batch_size", c.pretrain.batch_size);
        s.get("lr", c.pretrain.lr);
        s.get("node_branch", c.pretrain.node_branch);
        s.get("edge_branch", c.pretrain.edge_branch);
        std::string mode = edge_mode_str(c.pretrain.edge_mode);
        s.get("edge_mode", mode);
        c.pretrain.edge_mode = edge_mode_parse(mode);
        s.get("use_cna", c.pretrain.use_cna);
        s.get("use_nna", c.pretrain.use_nna);
        s.get("use_gmb", c.pretrain.use_gmb);
        s.get("normalize", c.pretrain.normalize);
        s.get("heads", c.pretrain.heads);
        s.finish();
    }
    if (j.contains("synth")) {
        Section s(j["synth"], "synth");
        s.get("min_rooms", c.synth.min_rooms);
        s.get("max_rooms", c.synth.max_rooms);
        s.get("min_side", c.synth.min_side);
        s.get("wall", c.synth.wall);
        s.get("max_attempts", c.synth.max_attempts);
        s.finish();
    }
    if (j.contains("eval")) {
        Section s(j["eval"], "eval");
        s.get("n_samples", c.eval.n_samples);
        s.get("extractor_seed", c.eval.extractor_seed);
        s.finish();
    }
    return c;
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return run_config_from_json(ss.str(), std::move(base));
}

void write_run_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open " + path);
    f << run_config_to_json(cfg) << "\n";
}

}  // namespace plangan
