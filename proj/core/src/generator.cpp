#include "plangan/generator.hpp"

#include <cmath>

#include "plangan/errors.hpp"

namespace plangan {

void GeneratorConfig::check() const {
    if (noise_dim < 0 || type_dim < 1) throw Error("bad input dims");
    if (resolutions.empty()) throw Error("resolutions empty");
    for (size_t i = 1; i < resolutions.size(); ++i)
        if (resolutions[i] != 2 * resolutions[i - 1])
            throw Error("resolutions must double at each level");
    if (gte_blocks < 1) throw Error("gte_blocks must be >= 1");
    if (attention_heads < 1) throw Error("attention_heads must be >= 1");
    if (head_channels.empty() || head_channels.back() != 1)
        throw Error("head must end with a single channel");
    int d = channels * resolutions[0] * resolutions[0];
    if (attention_heads > 1 && d % attention_heads != 0)
        throw Error("attention_heads must divide the flattened feature length");
}

Generator::Generator(const GeneratorConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    cfg_.check();
    Rng rng(init_seed);
    int res0 = cfg_.resolutions[0];
    expand_ = Linear(params_, "expand", cfg_.input_dim(), cfg_.channels * res0 * res0, rng);
    for (size_t lvl = 0; lvl < cfg_.resolutions.size(); ++lvl) {
        int side = cfg_.resolutions[lvl];
        GteConfig gc;
        gc.channels = cfg_.channels;
        gc.spatial = side * side;
        gc.heads = cfg_.attention_heads;
        gc.use_cna = cfg_.use_cna;
        gc.use_nna = cfg_.use_nna;
        gc.use_gmb = cfg_.use_gmb;
        gc.normalize = cfg_.normalize;
        gc.alpha_init = cfg_.alpha_init;
        gc.beta_init = cfg_.beta_init;
        rounds_.emplace_back(params_, "lvl" + std::to_string(lvl), gc, cfg_.gte_blocks, side,
                             cfg_.variant, cfg_.cnn_hidden, rng);
        if (lvl + 1 < cfg_.resolutions.size())
            ups_.emplace_back(params_, "up" + std::to_string(lvl), cfg_.channels, cfg_.channels,
                              4, 2, 1, rng);
    }
    int cin = cfg_.channels;
    for (size_t i = 0; i < cfg_.head_channels.size(); ++i) {
        head_.emplace_back(params_, "head" + std::to_string(i), cin, cfg_.head_channels[i], 3, 1,
                           1, rng);
        cin = cfg_.head_channels[i];
    }
}

Var Generator::expand_to_volume(const Var& node_inputs) const {
    if (node_inputs.shape().size() != 2 || node_inputs.shape()[1] != cfg_.input_dim())
        throw ShapeMismatchError("expand_to_volume wants (M," +
                                 std::to_string(cfg_.input_dim()) + ")");
    return expand_.rows(node_inputs);
}

Var Generator::conv_mpn_round(const Var& feats, int level, const NodeSets& sets,
                              const Tensor& adjacency) const {
    return rounds_[static_cast<size_t>(level)](feats, sets, adjacency);
}

Var Generator::upsample(const Var& feats, int level) const {
    int side = cfg_.resolutions[static_cast<size_t>(level)];
    return ups_[static_cast<size_t>(level)].rows(feats, side, side);
}

Var Generator::generation_head(const Var& feats) const {
    int side = cfg_.resolutions.back();
    Var x = feats;
    for (size_t i = 0; i < head_.size(); ++i) {
        x = head_[i].rows(x, side, side);
        if (i + 1 < head_.size()) x = gelu(x);
    }
    return tanh(x);
}

Var Generator::forward(const BubbleDiagram& diagram, const Var& node_inputs) const {
    throw_if_invalid(diagram);
    if (node_inputs.shape()[0] != diagram.num_rooms())
        throw LengthMismatchError("node inputs vs rooms");
    NodeSets sets = NodeSets::from(diagram);
    Tensor adjacency = adjacency_with_self_loops(diagram);
    Var x = expand_to_volume(node_inputs);
    for (size_t lvl = 0; lvl < cfg_.resolutions.size(); ++lvl) {
        x = conv_mpn_round(x, static_cast<int>(lvl), sets, adjacency);
        if (lvl + 1 < cfg_.resolutions.size()) x = upsample(x, static_cast<int>(lvl));
    }
    return generation_head(x);
}

std::vector<Tensor> Generator::generate(const BubbleDiagram& diagram, Rng& rng) const {
    NoGradGuard ng;
    NodeInputConfig nic{cfg_.noise_dim, cfg_.type_dim};
    Tensor inputs = build_node_inputs(diagram, rng, nic);
    Var masks = forward(diagram, constant(inputs));
    int side = cfg_.resolutions.back();
    std::vector<Tensor> out;
    for (int r = 0; r < diagram.num_rooms(); ++r) {
        Tensor m({1, side, side});
        const double* src = masks.val().data() + static_cast<size_t>(r) * side * side;
        std::copy(src, src + side * side, m.data());
        out.push_back(std::move(m));
    }
    return out;
}

namespace {

Rect bounding_box(const Tensor& mask, bool* any_positive, int* argmax_flat) {
    const auto& s = mask.shape();
    int side = s.back();
    int pixels = side * side;
    if (mask.size() != pixels) throw ShapeMismatchError("mask must be a single (1,R,R) grid");
    int min_x = side, min_y = side, max_x = -1, max_y = -1;
    double best = -1e300;
    int best_i = 0;
    for (int i = 0; i < pixels; ++i) {
        double v = mask[i];
        if (v > best) {
            best = v;
            best_i = i;
        }
        if (v > 0.0) {
            int y = i / side, x = i % side;
            min_x = std::min(min_x, x);
            min_y = std::min(min_y, y);
            max_x = std::max(max_x, x);
            max_y = std::max(max_y, y);
        }
    }
    *any_positive = max_x >= 0;
    *argmax_flat = best_i;
    if (!*any_positive) return Rect{};
    return Rect{min_x, min_y, max_x + 1, max_y + 1};
}

}  // namespace

Rect fit_rectangle(const Tensor& mask) {
    bool any = false;
    int arg = 0;
    Rect r = bounding_box(mask, &any, &arg);
    if (!any) throw EmptyMaskError();
    return r;
}

Rect fit_rectangle_lenient(const Tensor& mask) {
    bool any = false;
    int arg = 0;
    Rect r = bounding_box(mask, &any, &arg);
    if (any) return r;
    int side = mask.shape().back();
    int y = arg / side, x = arg % side;
    return Rect{x, y, x + 1, y + 1};
}

std::vector<Rect> masks_to_rects(const std::vector<Tensor>& masks) {
    std::vector<Rect> out;
    out.reserve(masks.size());
    for (const auto& m : masks) out.push_back(fit_rectangle_lenient(m));
    return out;
}

}  // namespace plangan
