#include "plangan/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "plangan/checkpoint.hpp"
#include "plangan/errors.hpp"

namespace plangan {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

int masked_count(int n_items, double ratio) {
    if (n_items < 2) return 0;
    long r = std::lround(ratio * n_items);
    return static_cast<int>(std::clamp(r, 1L, static_cast<long>(n_items - 1)));
}

bool MaskPlan::is_masked(int i) const {
    return std::binary_search(masked.begin(), masked.end(), i);
}

std::vector<int> MaskPlan::visible(int n_items) const {
    std::vector<int> out;
    for (int i = 0; i < n_items; ++i)
        if (!is_masked(i)) out.push_back(i);
    return out;
}

MaskPlan sample_mask_plan(int n_items, double ratio, Rng& rng) {
    MaskPlan plan;
    plan.ratio = ratio;
    int k = masked_count(n_items, ratio);
    plan.masked = rng.sample_without_replacement(n_items, k);
    std::sort(plan.masked.begin(), plan.masked.end());
    return plan;
}

EdgeBranchGraph build_edge_branch(const BubbleDiagram& d, EdgeBranchMode mode) {
    EdgeBranchGraph g;
    if (mode == EdgeBranchMode::line_graph) {
        for (const auto& e : d.edges) {
            g.pair_of_node.push_back(e);
            g.presence.push_back(1);
        }
    } else {
        int m = d.num_rooms();
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
                g.pair_of_node.push_back({i, j});
                g.presence.push_back(d.has_edge(i, j) ? 1 : 0);
            }
    }
    if (g.pair_of_node.empty()) throw NoEdgesError();
    int n = g.num_nodes();
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            const auto& [i1, j1] = g.pair_of_node[static_cast<size_t>(a)];
            const auto& [i2, j2] = g.pair_of_node[static_cast<size_t>(b)];
            if (i1 == i2 || i1 == j2 || j1 == i2 || j1 == j2)
                g.connections.push_back({a, b});
        }
    return g;
}

void PretrainConfig::check() const {
    if (decoder_blocks >= encoder_blocks)
        throw Error("decoder must be lighter than the encoder");
    if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) throw Error("mask_ratio must be in (0,1)");
    if (encoder_blocks < 1 || decoder_blocks < 1) throw Error("block counts must be >= 1");
}

namespace {

GteConfig branch_gte_config(const PretrainConfig& cfg) {
    GteConfig gc;
    gc.channels = cfg.channels;
    gc.spatial = cfg.spatial_side * cfg.spatial_side;
    gc.heads = cfg.heads;
    gc.use_cna = cfg.use_cna;
    gc.use_nna = cfg.use_nna;
    gc.use_gmb = cfg.use_gmb;
    gc.normalize = cfg.normalize;
    return gc;
}

}  // namespace

MaskedGraphBranch::MaskedGraphBranch(const PretrainConfig& cfg, int arity,
                                     std::uint64_t init_seed)
    : cfg_(cfg), arity_(arity) {
    cfg_.check();
    Rng rng(init_seed);
    int d = cfg_.token_dim();
    embed_ = Linear(params_, "embed", arity_, d, rng);
    encoder_ = GteStack(params_, "enc", branch_gte_config(cfg_), cfg_.encoder_blocks, rng);
    mask_token_ = params_.add("dec.mask_token", xavier_normal({d}, d, d, rng));
    pos_table_ = params_.add("dec.pos", xavier_normal({cfg_.max_positions, d}, d, d, rng));
    decoder_ = GteStack(params_, "dec.stack", branch_gte_config(cfg_), cfg_.decoder_blocks, rng);
    head_ = Linear(params_, "dec.head", d, arity_, rng, /*zero_init=*/true);
}

long MaskedGraphBranch::encoder_param_scalars() const {
    long n = 0;
    for (const auto& [name, var] : params_.items())
        if (name.rfind("enc.", 0) == 0) n += var.size();
    return n;
}

long MaskedGraphBranch::decoder_param_scalars() const {
    long n = 0;
    for (const auto& [name, var] : params_.items())
        if (name.rfind("dec.", 0) == 0) n += var.size();
    return n;
}

namespace {

Tensor one_hot_rows(const std::vector<int>& attrs, const std::vector<int>& keep, int arity) {
    Tensor t({static_cast<int>(keep.size()), arity});
    for (size_t r = 0; r < keep.size(); ++r)
        t.at(static_cast<int>(r), attrs[static_cast<size_t>(keep[r])]) = 1.0;
    return t;
}

std::vector<std::pair<int, int>> induced_edges(const std::vector<std::pair<int, int>>& edges,
                                               const std::vector<int>& keep) {
    std::vector<int> pos(1 + (keep.empty() ? 0 : *std::max_element(keep.begin(), keep.end())), -1);
    for (size_t i = 0; i < keep.size(); ++i) pos[static_cast<size_t>(keep[i])] = static_cast<int>(i);
    std::vector<std::pair<int, int>> out;
    for (const auto& [a, b] : edges) {
        if (a >= static_cast<int>(pos.size()) || b >= static_cast<int>(pos.size())) continue;
        int pa = pos[static_cast<size_t>(a)], pb = pos[static_cast<size_t>(b)];
        if (pa >= 0 && pb >= 0) out.push_back({pa, pb});
    }
    return out;
}

}  // namespace

Var MaskedGraphBranch::encode_visible(const std::vector<int>& attrs,
                                      const std::vector<std::pair<int, int>>& edges,
                                      const MaskPlan& plan) const {
    int n = static_cast<int>(attrs.size());
    std::vector<int> keep = plan.visible(n);
    if (keep.empty()) throw Error("mask plan leaves no visible item");
    Var tokens = embed_.rows(constant(one_hot_rows(attrs, keep, arity_)));
    auto sub = induced_edges(edges, keep);
    NodeSets sets = NodeSets::from_edges(static_cast<int>(keep.size()), sub);
    Tensor adj = adjacency_with_self_loops(static_cast<int>(keep.size()), sub);
    return encoder_(tokens, sets, adj);
}

Var MaskedGraphBranch::decode_logits(const Var& latents, const MaskPlan& plan, int n_items,
                                     const std::vector<std::pair<int, int>>& edges) const {
    if (n_items > cfg_.max_positions)
        throw ShapeMismatchError("too many items for the positional table");
    std::vector<int> keep = plan.visible(n_items);
    if (static_cast<int>(keep.size()) != latents.shape()[0])
        throw ShapeMismatchError("latent count vs visible items");
    int d = cfg_.token_dim();

    Var tokens = scatter_rows(latents, keep, n_items);
    if (!plan.masked.empty()) {
        Var mask_rows = bcast_rows(mask_token_, static_cast<int>(plan.masked.size()));
        tokens = add(tokens, scatter_rows(mask_rows, plan.masked, n_items));
    }
    std::vector<int> all(static_cast<size_t>(n_items));
    for (int i = 0; i < n_items; ++i) all[static_cast<size_t>(i)] = i;
    tokens = add(tokens, gather_rows(pos_table_, all));

    NodeSets sets = NodeSets::from_edges(n_items, edges);
    Tensor adj = adjacency_with_self_loops(n_items, edges);
    Var decoded = decoder_(tokens, sets, adj);
    return head_.rows(decoded);
}

Var MaskedGraphBranch::reconstruct(const std::vector<int>& attrs,
                                   const std::vector<std::pair<int, int>>& edges,
                                   const MaskPlan& plan) const {
    Var latents = encode_visible(attrs, edges, plan);
    return decode_logits(latents, plan, static_cast<int>(attrs.size()), edges);
}

Var masked_ce_sum(const Var& logits, const MaskPlan& plan, const std::vector<int>& targets) {
    Var total;
    int arity = logits.shape()[1];
    for (int i : plan.masked) {
        Var row = reshape(gather_rows(logits, {i}), {arity});
        Var ce = cross_entropy_logits(row, targets[static_cast<size_t>(i)]);
        total = total.defined() ? add(total, ce) : ce;
    }
    if (!total.defined()) return constant(Tensor::scalar(0.0));
    return total;
}

Pretrainer::Pretrainer(const PretrainConfig& cfg_in, std::uint64_t seed)
    : cfg(cfg_in),
      node_branch(cfg_in, kNumRoomTypes, seed),
      edge_branch(cfg_in, 2, seed + 1) {}

Pretrainer::GraphLoss Pretrainer::graph_loss(const BubbleDiagram& d, Rng& rng) const {
    GraphLoss out;
    if (cfg.node_branch && d.num_rooms() >= 2) {
        std::vector<int> attrs;
        for (RoomType t : d.room_types) attrs.push_back(static_cast<int>(t));
        std::vector<std::pair<int, int>> edges(d.edges.begin(), d.edges.end());
        MaskPlan plan = sample_mask_plan(d.num_rooms(), cfg.mask_ratio, rng);
        Var logits = node_branch.reconstruct(attrs, edges, plan);
        out.node_loss = masked_ce_sum(logits, plan, attrs);
    }
    if (cfg.edge_branch && !d.edges.empty()) {
        EdgeBranchGraph ebg = build_edge_branch(d, cfg.edge_mode);
        if (ebg.num_nodes() >= 2) {
            MaskPlan plan = sample_mask_plan(ebg.num_nodes(), cfg.mask_ratio, rng);
            Var logits = edge_branch.reconstruct(ebg.presence, ebg.connections, plan);
            out.edge_loss = masked_ce_sum(logits, plan, ebg.presence);
        }
    }
    return out;
}

namespace {

BranchEval eval_branch(const MaskedGraphBranch& branch, double ratio,
                       const std::vector<std::vector<int>>& attr_sets,
                       const std::vector<std::vector<std::pair<int, int>>>& edge_sets, int rounds,
                       std::uint64_t seed) {
    NoGradGuard ng;
    BranchEval ev;
    Rng rng(seed);
    for (int round = 0; round < rounds; ++round) {
        for (size_t s = 0; s < attr_sets.size(); ++s) {
            int n = static_cast<int>(attr_sets[s].size());
            if (n < 2) continue;
            MaskPlan plan = sample_mask_plan(n, ratio, rng);
            Var logits = branch.reconstruct(attr_sets[s], edge_sets[s], plan);
            int arity = logits.shape()[1];
            for (int i : plan.masked) {
                const double* row = logits.val().data() + static_cast<size_t>(i) * arity;
                int best = 0;
                for (int c = 1; c < arity; ++c)
                    if (row[c] > row[best]) best = c;
                ev.masked += 1;
                if (best == attr_sets[s][static_cast<size_t>(i)]) ev.correct += 1;
                double mx = row[0];
                for (int c = 1; c < arity; ++c) mx = std::max(mx, row[c]);
                double z = 0;
                for (int c = 0; c < arity; ++c) z += std::exp(row[c] - mx);
                ev.loss_sum += std::log(z) + mx - row[attr_sets[s][static_cast<size_t>(i)]];
            }
        }
    }
    return ev;
}

}  // namespace

BranchEval Pretrainer::eval_nodes(const std::vector<LayoutSample>& samples, int rounds,
                                  std::uint64_t seed) const {
    std::vector<std::vector<int>> attrs;
    std::vector<std::vector<std::pair<int, int>>> edges;
    for (const auto& s : samples) {
        std::vector<int> a;
        for (RoomType t : s.diagram.room_types) a.push_back(static_cast<int>(t));
        attrs.push_back(std::move(a));
        edges.emplace_back(s.diagram.edges.begin(), s.diagram.edges.end());
    }
    return eval_branch(node_branch, cfg.mask_ratio, attrs, edges, rounds, seed);
}

BranchEval Pretrainer::eval_edges(const std::vector<LayoutSample>& samples, int rounds,
                                  std::uint64_t seed) const {
    std::vector<std::vector<int>> attrs;
    std::vector<std::vector<std::pair<int, int>>> edges;
    for (const auto& s : samples) {
        if (s.diagram.edges.empty()) continue;
        EdgeBranchGraph g = build_edge_branch(s.diagram, cfg.edge_mode);
        attrs.push_back(g.presence);
        edges.push_back(g.connections);
    }
    return eval_branch(edge_branch, cfg.mask_ratio, attrs, edges, rounds, seed);
}

PretrainResult pretrain_loop(Pretrainer& pt, const std::vector<LayoutSample>& samples,
                             const std::string& out_dir, const std::string& config_echo_json,
                             const std::function<void(long, double)>& on_step) {
    if (samples.empty()) throw Error("pretraining set is empty");
    const PretrainConfig& cfg = pt.cfg;
    cfg.check();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    std::ofstream log(fs::path(out_dir) / "pretrain_log.jsonl", std::ios::trunc);
    if (!log) throw IoError("cannot open pretrain log in " + out_dir);

    Adam opt(cfg.lr, cfg.beta1, cfg.beta2);
    std::vector<Var> all_params = pt.node_branch.params().vars();
    {
        auto e = pt.edge_branch.params().vars();
        all_params.insert(all_params.end(), e.begin(), e.end());
    }

    Rng rng(cfg.seed + 17);
    std::vector<int> order(samples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    size_t cursor = order.size();

    PretrainResult result;
    for (long step = 1; step <= cfg.steps; ++step) {
        int bs = std::min<int>(cfg.batch_size, static_cast<int>(samples.size()));
        Var node_total, edge_total;
        int graphs = 0;
        for (int b = 0; b < bs; ++b) {
            if (cursor >= order.size()) {
                rng.shuffle(order);
                cursor = 0;
            }
            const auto& s = samples[static_cast<size_t>(order[cursor++])];
            auto gl = pt.graph_loss(s.diagram, rng);
            if (gl.node_loss.defined())
                node_total = node_total.defined() ? add(node_total, gl.node_loss) : gl.node_loss;
            if (gl.edge_loss.defined())
                edge_total = edge_total.defined() ? add(edge_total, gl.edge_loss) : gl.edge_loss;
            ++graphs;
        }
        Var loss;
        if (node_total.defined()) loss = node_total;
        if (edge_total.defined()) loss = loss.defined() ? add(loss, edge_total) : edge_total;
        if (!loss.defined()) throw Error("no branch produced a loss");
        loss = mul_scalar(loss, 1.0 / graphs);

        double loss_v = loss.scalar();
        if (!std::isfinite(loss_v)) throw NonFiniteLossError("pretraining step " + std::to_string(step));
        auto grads = grad(loss, all_params);
        opt.step(all_params, grads);

        ordered_json rec;
        rec["step"] = step;
        rec["loss"] = loss_v;
        rec["node_loss"] = node_total.defined() ? node_total.scalar() / graphs : 0.0;
        rec["edge_loss"] = edge_total.defined() ? edge_total.scalar() / graphs : 0.0;
        log << rec.dump() << "\n";
        if (on_step) on_step(step, loss_v);
        result.last_loss = loss_v;
        result.steps = step;
    }

    // encoder-only checkpoint, one blob per trained branch
    ParamStore node_enc, edge_enc;
    for (const auto& [name, var] : pt.node_branch.params().items())
        if (name.rfind("enc.", 0) == 0) node_enc.add(name, var.val());
    for (const auto& [name, var] : pt.edge_branch.params().items())
        if (name.rfind("enc.", 0) == 0) edge_enc.add(name, var.val());
    std::string ckpt = (fs::path(out_dir) / "checkpoint").string();
    std::vector<std::pair<std::string, const ParamStore*>> blobs;
    if (cfg.node_branch) blobs.push_back({"node_encoder", &node_enc});
    if (cfg.edge_branch) blobs.push_back({"edge_encoder", &edge_enc});
    save_checkpoint(ckpt, result.steps, "gte_encoder", config_echo_json, blobs);
    result.checkpoint_dir = ckpt;
    return result;
}

PretrainResult pretrain_run(const std::vector<LayoutSample>& samples, const PretrainConfig& cfg,
                            const std::string& out_dir, const std::string& config_echo_json,
                            const std::function<void(long, double)>& on_step) {
    Pretrainer pt(cfg, cfg.seed);
    return pretrain_loop(pt, samples, out_dir, config_echo_json, on_step);
}

void export_encoder(const std::string& checkpoint_dir, Generator& generator) {
    auto info = read_checkpoint_info(checkpoint_dir);
    if (info.component != "gte_encoder")
        throw ShapeMismatchError("checkpoint is not a gte_encoder export");
    // node branch when present, otherwise the edge branch (edge-only runs)
    fs::path blob = fs::path(checkpoint_dir) / "node_encoder.bin";
    if (!fs::exists(blob)) blob = fs::path(checkpoint_dir) / "edge_encoder.bin";
    auto stored = read_params_raw(blob.string());

    ParamStore& gp = generator.params();
    long lvl0_targets = 0;
    for (const auto& [name, var] : gp.items())
        if (name.rfind("lvl0.conn.", 0) == 0) ++lvl0_targets;
    if (static_cast<long>(stored.size()) != lvl0_targets)
        throw ShapeMismatchError("encoder layout does not match the generator's first level");

    for (const auto& [name, tensor] : stored) {
        if (name.rfind("enc.", 0) != 0)
            throw ShapeMismatchError("unexpected parameter " + name + " in encoder blob");
        std::string suffix = name.substr(4);
        for (const std::string& prefix : {std::string("lvl0.conn."), std::string("lvl0.nonconn.")}) {
            Var* dst = gp.find(prefix + suffix);
            if (!dst)
                throw ShapeMismatchError("no generator parameter " + prefix + suffix);
            if (dst->shape() != tensor.shape())
                throw ShapeMismatchError("parameter " + prefix + suffix + ": " +
                                         shape_str(tensor.shape()) + " vs " +
                                         shape_str(dst->shape()));
            dst->node_->value = tensor;
        }
    }
}

}  // namespace plangan
