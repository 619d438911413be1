#include "plangan/losses.hpp"

#include <cmath>

#include "plangan/errors.hpp"

namespace plangan {

bool LossBreakdown::all_finite() const {
    for (double v : {l_gan_d, l_gan_g, l_gp, l_class, l_gcyc, total})
        if (!std::isfinite(v)) return false;
    return true;
}

std::pair<double, double> adversarial_losses(double real_score, double fake_score) {
    return {fake_score - real_score, -fake_score};
}

Tensor multi_hot_types(const BubbleDiagram& diagram) {
    Tensor t({kNumRoomTypes});
    for (RoomType rt : diagram.room_types) t[static_cast<int>(rt)] = 1.0;
    return t;
}

Var classification_loss(const Var& class_logits, const BubbleDiagram& diagram) {
    if (class_logits.shape().size() == 1) {
        if (class_logits.shape()[0] != kNumRoomTypes)
            throw ShapeMismatchError("class logits length");
        return bce_with_logits_mean(class_logits, constant(multi_hot_types(diagram)));
    }
    // per-room head: each row scored against its own one-hot
    int m = diagram.num_rooms();
    if (class_logits.shape()[0] != m || class_logits.shape()[1] != kNumRoomTypes)
        throw ShapeMismatchError("per-room class logits");
    Tensor target({m, kNumRoomTypes});
    for (int r = 0; r < m; ++r)
        target.at(r, static_cast<int>(diagram.room_types[static_cast<size_t>(r)])) = 1.0;
    return bce_with_logits_mean(class_logits, constant(target));
}

GraphEstimator::GraphEstimator(const GraphEstimatorConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg) {
    Rng rng(init_seed);
    c1_ = Conv2d(params_, "c1", 1, cfg_.conv_channels, 3, 2, 1, rng);
    c2_ = Conv2d(params_, "c2", cfg_.conv_channels, 2 * cfg_.conv_channels, 3, 2, 1, rng);
    proj_ = Linear(params_, "proj", cfg_.conv_out_dim(), cfg_.embed_dim, rng);
    pair_hidden_ = Linear(params_, "pair_hidden", 2 * cfg_.embed_dim, cfg_.pair_hidden, rng);
    pair_out_ = Linear(params_, "pair_out", cfg_.pair_hidden, 1, rng);
}

Var GraphEstimator::operator()(const Var& masks) const {
    int side = cfg_.mask_side;
    if (masks.shape().size() != 2 || masks.shape()[1] != side * side)
        throw ShapeMismatchError("GraphEstimator masks " + shape_str(masks.shape()));
    int m = masks.shape()[0];
    if (m == 1) return constant(Tensor({1, 1}));

    Var y = gelu(c1_.rows(masks, side, side));
    y = gelu(c2_.rows(y, side / 2, side / 2));
    Var e = proj_.rows(y);  // (M, embed_dim)

    // pairwise scores for every ordered pair, then symmetrize
    std::vector<Var> entries;  // row-major M*M, diagonal skipped
    entries.reserve(static_cast<size_t>(m) * m);
    std::vector<Var> rows_cache;
    for (int i = 0; i < m; ++i) rows_cache.push_back(gather_rows(e, {i}));
    std::vector<Var> score_rows;
    for (int i = 0; i < m; ++i) {
        std::vector<Var> cols;
        for (int j = 0; j < m; ++j) {
            if (i == j) {
                cols.push_back(constant(Tensor({1, 1})));
                continue;
            }
            Var pair = transpose(concat0({transpose(rows_cache[static_cast<size_t>(i)]),
                                          transpose(rows_cache[static_cast<size_t>(j)])}));
            Var h = gelu(pair_hidden_.rows(pair));
            cols.push_back(pair_out_.rows(h));  // (1,1)
        }
        score_rows.push_back(transpose(concat0(cols)));  // (1, M)
    }
    Var s = concat0(score_rows);  // (M, M), zero diagonal by construction
    return mul_scalar(add(s, transpose(s)), 0.5);
}

Var gcyc_loss(const Tensor& g_gt, const Var& g_gen) {
    if (g_gt.shape() != g_gen.shape())
        throw ShapeMismatchError("gcyc " + shape_str(g_gt.shape()) + " vs " +
                                 shape_str(g_gen.shape()));
    return frobenius_norm(sub(constant(g_gt), g_gen));
}

}  // namespace plangan
