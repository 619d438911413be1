#include "plangan/discriminator.hpp"

#include "plangan/errors.hpp"

namespace plangan {

void DiscriminatorConfig::check() const {
    if (mask_side < 8 || mask_side % 4 != 0) throw Error("mask_side must be a multiple of 4, >= 8");
    if (gte_blocks < 1) throw Error("gte_blocks must be >= 1");
}

Discriminator::Discriminator(const DiscriminatorConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    cfg_.check();
    Rng rng(init_seed);
    int side = cfg_.mask_side;
    type_expand_ = Linear(params_, "type_expand", cfg_.type_dim,
                          cfg_.type_channels * side * side, rng);
    int ec = cfg_.type_channels + 1;
    emb1_ = Conv2d(params_, "emb1", ec, cfg_.channels, 3, 1, 1, rng);
    emb2_ = Conv2d(params_, "emb2", cfg_.channels, cfg_.channels, 3, 1, 1, rng);
    emb3_ = Conv2d(params_, "emb3", cfg_.channels, cfg_.channels, 3, 1, 1, rng);

    auto gte_cfg = [&](int s) {
        GteConfig gc;
        gc.channels = cfg_.channels;
        gc.spatial = s * s;
        gc.heads = cfg_.attention_heads;
        gc.use_cna = cfg_.use_cna;
        gc.use_nna = cfg_.use_nna;
        gc.use_gmb = cfg_.use_gmb;
        gc.normalize = cfg_.normalize;
        return gc;
    };
    round1_ = MpnRound(params_, "round1", gte_cfg(side), cfg_.gte_blocks, side, cfg_.variant,
                       cfg_.cnn_hidden, rng);
    down1_ = Conv2d(params_, "down1", cfg_.channels, cfg_.channels, 3, 2, 1, rng);
    round2_ = MpnRound(params_, "round2", gte_cfg(side / 2), cfg_.gte_blocks, side / 2,
                       cfg_.variant, cfg_.cnn_hidden, rng);
    down2_ = Conv2d(params_, "down2", cfg_.channels, cfg_.channels, 3, 2, 1, rng);

    // (C, side/4, side/4) -> room vector via three stride-2 convs
    int c = cfg_.channels;
    vec1_ = Conv2d(params_, "vec1", c, 2 * c, 3, 2, 1, rng);
    vec2_ = Conv2d(params_, "vec2", 2 * c, 4 * c, 3, 2, 1, rng);
    vec3_ = Conv2d(params_, "vec3", 4 * c, cfg_.room_vec_dim, 3, 2, 1, rng);
    score_head_ = Linear(params_, "score", cfg_.room_vec_dim, 1, rng);
    class_head_ = Linear(params_, "class", cfg_.room_vec_dim, cfg_.type_dim, rng);
}

Var Discriminator::embed_room_input(const Var& masks, const Var& type_onehots) const {
    int side = cfg_.mask_side;
    int m = masks.shape()[0];
    if (masks.shape()[1] != side * side) throw ShapeMismatchError("mask pixels");
    if (type_onehots.shape()[0] != m || type_onehots.shape()[1] != cfg_.type_dim)
        throw ShapeMismatchError("type one-hots");
    Var expanded = type_expand_.rows(type_onehots);  // (M, 8*side*side)
    (void)m;
    // channel-concat mask + type volume per row
    Var x = transpose(concat0({transpose(masks), transpose(expanded)}));
    Var y = emb1_.rows(x, side, side);
    y = emb2_.rows(gelu(y), side, side);
    y = emb3_.rows(gelu(y), side, side);
    return y;
}

Discriminator::Output Discriminator::forward(const Var& masks, const Var& type_onehots,
                                             const BubbleDiagram& diagram) const {
    int m = diagram.num_rooms();
    if (masks.shape()[0] != m) throw LengthMismatchError("masks vs rooms");
    NodeSets sets = NodeSets::from(diagram);
    Tensor adjacency = adjacency_with_self_loops(diagram);
    int side = cfg_.mask_side;

    Var x = embed_room_input(masks, type_onehots);
    x = round1_(x, sets, adjacency);
    x = conv_rows(down1_, x, cfg_.channels, side, side);
    x = round2_(x, sets, adjacency);
    x = conv_rows(down2_, x, cfg_.channels, side / 2, side / 2);

    int s = side / 4;
    Var y = vec1_.rows(x, s, s);
    y = vec2_.rows(gelu(y), s / 2, s / 2);
    y = vec3_.rows(gelu(y), s / 4, s / 4);
    Var room_vecs = y;  // (M, room_vec_dim)
    if (room_vecs.shape()[1] != cfg_.room_vec_dim)
        throw ShapeMismatchError("room vector dim " + shape_str(room_vecs.shape()));

    Var pooled = col_sum(room_vecs);  // (room_vec_dim)
    Output out;
    out.score = reshape(score_head_.vec(pooled), {1});
    out.class_logits = cfg_.per_room_class_head ? class_head_.rows(room_vecs)  // (M, 10)
                                                : class_head_.vec(pooled);     // (10)
    return out;
}

Tensor type_onehots(const BubbleDiagram& diagram) {
    int m = diagram.num_rooms();
    Tensor t({m, kNumRoomTypes});
    for (int r = 0; r < m; ++r)
        t.at(r, static_cast<int>(diagram.room_types[static_cast<size_t>(r)])) = 1.0;
    return t;
}

Var wgan_gradient_penalty(const std::function<Var(const Var&)>& critic, const Tensor& real_masks,
                          const Tensor& fake_masks, double lambda_gp, double epsilon) {
    if (!real_masks.same_shape(fake_masks)) throw ShapeMismatchError("penalty mask shapes");
    Tensor mixed = real_masks;
    for (int i = 0; i < mixed.size(); ++i)
        mixed[i] = epsilon * real_masks[i] + (1.0 - epsilon) * fake_masks[i];
    Var x_hat = parameter(std::move(mixed));  // leaf that wants a gradient
    Var score = critic(x_hat);
    Var g = grad(score, {x_hat}, /*create_graph=*/true)[0];
    Var norm = sqrt(sum(square(g)));
    return mul_scalar(square(add_scalar(norm, -1.0)), lambda_gp);
}

Var Discriminator::gradient_penalty(const Tensor& real_masks, const Tensor& fake_masks,
                                    const BubbleDiagram& diagram, double lambda_gp,
                                    Rng& rng) const {
    Tensor types = type_onehots(diagram);
    double eps = rng.uniform();
    auto critic = [&](const Var& m) { return forward(m, constant(types), diagram).score; };
    return wgan_gradient_penalty(critic, real_masks, fake_masks, lambda_gp, eps);
}

}  // namespace plangan
