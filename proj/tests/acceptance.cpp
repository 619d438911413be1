// End-to-end acceptance suite. Each criterion prints one pass/fail line;
// the process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "plangan/checkpoint.hpp"
#include "plangan/cli.hpp"
#include "plangan/config.hpp"
#include "plangan/errors.hpp"
#include "plangan/discriminator.hpp"
#include "plangan/generator.hpp"
#include "plangan/gte.hpp"
#include "plangan/losses.hpp"
#include "plangan/metrics.hpp"
#include "plangan/pretrain.hpp"
#include "plangan/training.hpp"

using namespace plangan;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] C%d %s — %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void run_criterion(int id, const std::string& name,
                   const std::function<std::pair<bool, std::string>()>& fn) {
    try {
        auto [pass, detail] = fn();
        report(id, name, pass, detail);
    } catch (const std::exception& e) {
        report(id, name, false, std::string("exception: ") + e.what());
    }
}

double elapsed_s(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

BubbleDiagram random_diagram(Rng& rng, int m, double p = 0.35) {
    BubbleDiagram d;
    for (int i = 0; i < m; ++i)
        d.room_types.push_back(static_cast<RoomType>(rng.uniform_int(0, kNumRoomTypes - 1)));
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            if (rng.uniform() < p) d.add_edge(i, j);
    return d;
}

std::vector<double> finite_diff(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        double keep = x[i];
        x[i] = keep + h;
        double up = f(x);
        x[i] = keep - h;
        double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

double max_rel_err(const std::vector<double>& got, const std::vector<double>& want,
                   double floor_ = 1e-6) {
    double worst = 0;
    for (size_t i = 0; i < got.size(); ++i) {
        double denom = std::max({std::abs(want[i]), std::abs(got[i]), floor_});
        worst = std::max(worst, std::abs(got[i] - want[i]) / denom);
    }
    return worst;
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (int i = 0; i < t.size(); ++i) t[i] = rng.normal() * scale;
    return t;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot open " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------- C1

std::vector<std::vector<int>> floyd_warshall(const BubbleDiagram& d) {
    int m = d.num_rooms();
    const int inf = 1 << 20;
    std::vector<std::vector<int>> dist(m, std::vector<int>(m, inf));
    for (int i = 0; i < m; ++i) dist[i][i] = 0;
    for (const auto& [a, b] : d.edges) dist[a][b] = dist[b][a] = 1;
    for (int k = 0; k < m; ++k)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                if (dist[i][k] + dist[k][j] < dist[i][j]) dist[i][j] = dist[i][k] + dist[k][j];
    for (auto& row : dist)
        for (int& v : row)
            if (v >= inf) v = -1;
    return dist;
}

int edit_distance_oracle(const BubbleDiagram& a, const BubbleDiagram& b, int m) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) pairs.push_back({i, j});
    auto encode = [&](const std::set<std::pair<int, int>>& edges) {
        unsigned mask = 0;
        for (size_t k = 0; k < pairs.size(); ++k)
            if (edges.count(pairs[k])) mask |= 1u << k;
        return mask;
    };
    unsigned start = encode(a.edges), goal = encode(b.edges);
    std::map<unsigned, int> dist{{start, 0}};
    std::queue<unsigned> q;
    q.push(start);
    while (!q.empty()) {
        unsigned s = q.front();
        q.pop();
        if (s == goal) return dist[s];
        for (size_t k = 0; k < pairs.size(); ++k) {
            unsigned next = s ^ (1u << k);
            if (!dist.count(next)) {
                dist[next] = dist[s] + 1;
                q.push(next);
            }
        }
    }
    return -1;
}

std::pair<bool, std::string> c1_oracle_equivalence() {
    auto t0 = Clock::now();
    Rng rng(11001);
    for (int trial = 0; trial < 200; ++trial) {
        BubbleDiagram d = random_diagram(rng, static_cast<int>(rng.uniform_int(1, 10)));
        WeightedAdjacency got = shortest_path_matrix(d);
        auto want = floyd_warshall(d);
        for (int i = 0; i < d.num_rooms(); ++i)
            for (int j = 0; j < d.num_rooms(); ++j)
                if (got.at(i, j) != want[static_cast<size_t>(i)][static_cast<size_t>(j)])
                    return {false, "shortest-path mismatch on trial " + std::to_string(trial)};
    }
    for (int trial = 0; trial < 100; ++trial) {
        int m = static_cast<int>(rng.uniform_int(2, 6));
        BubbleDiagram a = random_diagram(rng, m);
        BubbleDiagram b = random_diagram(rng, m);
        b.room_types = a.room_types;
        if (edge_set_distance(a, b) != edit_distance_oracle(a, b, m))
            return {false, "edit-distance mismatch on trial " + std::to_string(trial)};
    }
    double dt = elapsed_s(t0);
    return {dt < 60.0,
            "200 shortest-path and 100 edit-distance cases match the oracles in " +
                std::to_string(dt).substr(0, 5) + " s"};
}

// ---------------------------------------------------------------------- C2

std::pair<bool, std::string> c2_gradient_correctness() {
    auto t0 = Clock::now();
    Rng rng(22002);
    const double tol = 1e-3;
    double worst = 0;

    for (int inst = 0; inst < 20; ++inst) {  // gcyc
        int m = static_cast<int>(rng.uniform_int(2, 5));
        Tensor gt = random_tensor({m, m}, rng);
        Tensor gen0 = random_tensor({m, m}, rng);
        Var gen = parameter(gen0);
        auto g = grad(gcyc_loss(gt, gen), {gen});
        auto fd = finite_diff(
            [&](const std::vector<double>& xs) {
                return gcyc_loss(gt, constant(Tensor({m, m}, xs))).scalar();
            },
            gen0.vec());
        worst = std::max(worst, max_rel_err(g[0].val().vec(), fd));
    }
    if (worst > tol) return {false, "gcyc gradient off by " + std::to_string(worst)};

    for (int inst = 0; inst < 20; ++inst) {  // classification
        BubbleDiagram d = random_diagram(rng, static_cast<int>(rng.uniform_int(1, 8)));
        Tensor x0 = random_tensor({10}, rng);
        Var x = parameter(x0);
        auto g = grad(classification_loss(x, d), {x});
        auto fd = finite_diff(
            [&](const std::vector<double>& xs) {
                return classification_loss(constant(Tensor({10}, xs)), d).scalar();
            },
            x0.vec());
        worst = std::max(worst, max_rel_err(g[0].val().vec(), fd));
    }
    if (worst > tol) return {false, "classification gradient off by " + std::to_string(worst)};

    for (int inst = 0; inst < 20; ++inst) {  // pretraining loss
        int n = static_cast<int>(rng.uniform_int(3, 8));
        Tensor logits0 = random_tensor({n, 10}, rng);
        MaskPlan plan = sample_mask_plan(n, 0.4, rng);
        std::vector<int> targets;
        for (int i = 0; i < n; ++i) targets.push_back(static_cast<int>(rng.uniform_int(0, 9)));
        Var x = parameter(logits0);
        auto g = grad(masked_ce_sum(x, plan, targets), {x});
        auto fd = finite_diff(
            [&](const std::vector<double>& xs) {
                return masked_ce_sum(constant(Tensor({n, 10}, xs)), plan, targets).scalar();
            },
            logits0.vec());
        worst = std::max(worst, max_rel_err(g[0].val().vec(), fd));
    }
    if (worst > tol) return {false, "pretraining-loss gradient off by " + std::to_string(worst)};

    GraphEstimatorConfig ec;
    ec.conv_channels = 2;
    ec.embed_dim = 8;
    ec.pair_hidden = 8;
    GraphEstimator est(ec, 9);
    for (int inst = 0; inst < 20; ++inst) {  // layout-to-graph outputs
        int m = static_cast<int>(rng.uniform_int(2, 4));
        Tensor masks = random_tensor({m, 32 * 32}, rng, 0.5);
        int entry = static_cast<int>(rng.uniform_int(0, m * m - 1));
        if (entry % (m + 1) == 0) entry = 1;  // skip the forced-zero diagonal
        Var mv = parameter(masks);
        auto g = grad(take(est(mv), entry), {mv});
        auto f = [&](const std::vector<double>& xs) {
            NoGradGuard ng;
            return take(est(constant(Tensor({m, 32 * 32}, xs))), entry).scalar();
        };
        std::vector<double> x = masks.vec();
        const double h = 1e-5;
        for (int probe = 0; probe < 10; ++probe) {
            int idx = static_cast<int>(rng.uniform_int(0, masks.size() - 1));
            double keep = x[static_cast<size_t>(idx)];
            x[static_cast<size_t>(idx)] = keep + h;
            double up = f(x);
            x[static_cast<size_t>(idx)] = keep - h;
            double down = f(x);
            x[static_cast<size_t>(idx)] = keep;
            double fd = (up - down) / (2 * h);
            double got = g[0].val()[idx];
            double denom = std::max({std::abs(fd), std::abs(got), 1e-6});
            worst = std::max(worst, std::abs(fd - got) / denom);
        }
    }
    double dt = elapsed_s(t0);
    if (worst > tol) return {false, "layout-to-graph gradient off by " + std::to_string(worst)};
    return {dt < 300.0, "worst relative error " + std::to_string(worst) + " over 4x20 instances in " +
                            std::to_string(dt).substr(0, 5) + " s"};
}

// ---------------------------------------------------------------------- C3

std::pair<bool, std::string> c3_identity_at_init() {
    Rng rng(33003);
    GteConfig gc;
    gc.channels = 4;
    gc.spatial = 16;
    for (int trial = 0; trial < 100; ++trial) {
        int m = static_cast<int>(rng.uniform_int(2, 9));
        BubbleDiagram d = random_diagram(rng, m);
        NodeSets sets = NodeSets::from(d);
        Tensor feats = random_tensor({m, gc.dim()}, rng);

        ParamStore ps;
        GteBlock block(ps, "b", gc, rng);
        if (block.alpha.scalar() != 0.0 || block.beta.scalar() != 0.0)
            return {false, "scales not initialized to zero"};

        Var cna = node_attention(constant(feats), sets.conn, block.alpha);
        Var nna = node_attention(constant(feats), sets.nonconn, block.beta);
        for (int i = 0; i < cna.size(); ++i)
            if (cna.val()[i] != 0.0 || nna.val()[i] != 0.0)
                return {false, "attention output not exactly zero at init"};

        Var h = block.attention_sum(constant(feats), sets);
        if (std::memcmp(h.val().data(), feats.data(),
                        sizeof(double) * static_cast<size_t>(feats.size())) != 0)
            return {false, "residual sum is not bit-identical to its input"};

        for (const auto& family : {sets.conn, sets.nonconn}) {
            Tensor w = attention_weight_rows(feats, family);
            for (int r = 0; r < m; ++r) {
                if (family[static_cast<size_t>(r)].empty()) continue;
                double s = 0;
                for (int j = 0; j < m; ++j) s += w.at(r, j);
                if (std::abs(s - 1.0) > 1e-6)
                    return {false, "softmax row sums to " + std::to_string(s)};
            }
        }
    }
    return {true, "zero blocks, bit-exact residual and unit row sums across 100 random graphs"};
}

// ---------------------------------------------------------------------- C4

std::pair<bool, std::string> c4_gradient_penalty() {
    Rng rng(44004);

    Tensor w = random_tensor({2, 25}, rng);
    double norm = 0;
    for (int i = 0; i < w.size(); ++i) norm += w[i] * w[i];
    norm = std::sqrt(norm);
    for (int i = 0; i < w.size(); ++i) w[i] /= norm;
    auto linear_critic = [&w](const Var& x) { return sum(mul(x, constant(w))); };
    Var gp_lin = wgan_gradient_penalty(linear_critic, random_tensor({2, 25}, rng),
                                       random_tensor({2, 25}, rng), 10.0, 0.3);
    if (!(gp_lin.scalar() < 1e-10))
        return {false, "unit-norm linear critic penalty " + std::to_string(gp_lin.scalar())};

    auto const_critic = [](const Var& x) { return add_scalar(mul_scalar(sum(x), 0.0), 1.5); };
    Var gp_const = wgan_gradient_penalty(const_critic, random_tensor({2, 25}, rng),
                                         random_tensor({2, 25}, rng), 10.0, 0.6);
    if (gp_const.scalar() != 10.0)
        return {false, "constant critic penalty " + std::to_string(gp_const.scalar()) +
                           " is not exactly lambda"};

    ParamStore ps;
    Rng init(7);
    Conv2d conv(ps, "c", 1, 2, 3, 1, 1, init);
    Linear lin(ps, "l", 2 * 25, 1, init);
    auto critic = [&](const Var& x) {
        Var y = gelu(conv.rows(x, 5, 5));
        return sum(lin.rows(y));
    };
    Tensor real = random_tensor({2, 25}, rng, 0.5);
    Tensor fake = random_tensor({2, 25}, rng, 0.5);
    const double eps = 0.45, lambda = 10.0;
    Var gp = wgan_gradient_penalty(critic, real, fake, lambda, eps);

    Tensor mixed({2, 25});
    for (int i = 0; i < mixed.size(); ++i) mixed[i] = eps * real[i] + (1 - eps) * fake[i];
    auto f = [&](const std::vector<double>& xs) {
        NoGradGuard ng;
        return critic(constant(Tensor({2, 25}, xs))).scalar();
    };
    auto fd = finite_diff(f, mixed.vec());
    double fd_norm = 0;
    for (double gi : fd) fd_norm += gi * gi;
    fd_norm = std::sqrt(fd_norm);
    double want = lambda * (fd_norm - 1.0) * (fd_norm - 1.0);
    double rel = std::abs(gp.scalar() - want) / std::max(std::abs(want), 1e-8);
    if (rel > 1e-3)
        return {false, "random critic penalty off by relative " + std::to_string(rel)};
    return {true, "linear<1e-10, constant==lambda, random critic matches finite differences (rel " +
                      std::to_string(rel).substr(0, 8) + ")"};
}

// ---------------------------------------------------------------------- C5

std::pair<bool, std::string> c5_masking() {
    for (int n = 2; n <= 20; ++n)
        for (int r = 1; r <= 9; ++r) {
            double ratio = r / 10.0;
            long want = std::clamp(std::lround(ratio * n), 1L, static_cast<long>(n - 1));
            if (masked_count(n, ratio) != static_cast<int>(want))
                return {false, "count(" + std::to_string(n) + "," + std::to_string(ratio) + ")"};
        }
    if (masked_count(10, 0.4) != 4) return {false, "ratio 0.4 with n=10 must mask 4"};

    PretrainConfig cfg;
    cfg.encoder_blocks = 2;
    cfg.decoder_blocks = 1;
    cfg.channels = 2;
    cfg.spatial_side = 2;
    MaskedGraphBranch branch(cfg, kNumRoomTypes, 5005);
    Rng rng(55005);
    for (int trial = 0; trial < 10; ++trial) {
        BubbleDiagram d = random_diagram(rng, static_cast<int>(rng.uniform_int(3, 9)));
        std::vector<int> attrs;
        for (RoomType t : d.room_types) attrs.push_back(static_cast<int>(t));
        std::vector<std::pair<int, int>> edges(d.edges.begin(), d.edges.end());
        MaskPlan plan = sample_mask_plan(d.num_rooms(), 0.4, rng);
        Var a = branch.encode_visible(attrs, edges, plan);
        std::vector<int> mutated = attrs;
        for (int i : plan.masked)
            mutated[static_cast<size_t>(i)] = (mutated[static_cast<size_t>(i)] + 5) % 10;
        Var b = branch.encode_visible(mutated, edges, plan);
        if (std::memcmp(a.val().data(), b.val().data(),
                        sizeof(double) * static_cast<size_t>(a.size())) != 0)
            return {false, "masked attributes leaked into the encoder"};
    }
    return {true, "counts exact for n=2..20 x ratios .1-.9; latents bitwise mask-invariant"};
}

// ---------------------------------------------------------------------- C6

std::pair<bool, std::string> c6_pretrain_overfit() {
    auto t0 = Clock::now();
    PretrainConfig cfg;
    cfg.encoder_blocks = 4;
    cfg.decoder_blocks = 2;
    cfg.channels = 8;
    cfg.spatial_side = 4;
    cfg.steps = 900;
    cfg.batch_size = 8;
    cfg.lr = 1e-3;
    cfg.mask_ratio = 0.4;
    cfg.seed = 66006;

    Rng rng(606);
    std::vector<LayoutSample> samples;
    for (int i = 0; i < 8; ++i)
        samples.push_back(sample_floorplan(rng, static_cast<int>(rng.uniform_int(3, 8))));

    Pretrainer model(cfg, cfg.seed);
    BranchEval ev0 = model.eval_nodes(samples, 4, 7);
    double start_loss = ev0.loss_sum / ev0.masked;
    if (std::abs(start_loss - std::log(10.0)) / std::log(10.0) > 0.01)
        return {false, "initial per-node loss " + std::to_string(start_loss) + " is not ln 10"};

    fs::path dir = fs::temp_directory_path() / "plangan_acc_c6";
    fs::remove_all(dir);
    pretrain_loop(model, samples, dir.string());

    BranchEval evn = model.eval_nodes(samples, 8, 7);
    BranchEval eve = model.eval_edges(samples, 8, 7);
    double node_acc = static_cast<double>(evn.correct) / evn.masked;
    double edge_acc = static_cast<double>(eve.correct) / eve.masked;
    double dt = elapsed_s(t0);
    fs::remove_all(dir);

    bool pass = node_acc >= 0.9 && edge_acc >= 0.9 && dt < 900.0 && cfg.steps <= 3000;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "start loss ln10 exact; node acc %.3f, edge acc %.3f after %ld steps in %.0f s",
                  node_acc, edge_acc, cfg.steps, dt);
    return {pass, buf};
}

// ---------------------------------------------------------------------- C7

double mean_compat(const Generator& g, const std::vector<LayoutSample>& set, std::uint64_t seed,
                   int draws) {
    NoGradGuard ng;
    long total = 0;
    int n = 0;
    Rng rng(seed);
    for (const auto& s : set)
        for (int d = 0; d < draws; ++d) {
            Rng r = rng.fork(static_cast<std::uint64_t>(n));
            auto masks = g.generate(s.diagram, r);
            total += compatibility(s.diagram, masks_to_rects(masks));
            ++n;
        }
    return static_cast<double>(total) / n;
}

std::pair<bool, std::string> c7_gan_overfit() {
    auto t0 = Clock::now();
    TrainConfig defaults;
    if (defaults.lambda1 != 1.0 || defaults.lambda2 != 0.1)
        return {false, "default loss weights are not the documented lambda1=1, lambda2=0.1"};

    GeneratorConfig gc;
    gc.channels = 6;
    gc.resolutions = {8, 16, 32};
    gc.gte_blocks = 1;
    gc.cnn_hidden = 8;
    gc.head_channels = {12, 6, 1};
    DiscriminatorConfig dc;
    dc.channels = 6;
    dc.type_channels = 2;
    dc.gte_blocks = 1;
    dc.cnn_hidden = 8;
    dc.room_vec_dim = 32;
    GraphEstimatorConfig ec;
    ec.conv_channels = 4;
    ec.embed_dim = 16;
    ec.pair_hidden = 16;
    TrainConfig tc;
    tc.lr_g = 5e-4;
    tc.lr_d = 5e-4;
    tc.batch_size = 1;
    tc.max_steps = 2000;
    tc.checkpoint_every = 0;
    tc.seed = 4242;

    Rng rng(777);
    std::vector<LayoutSample> set;
    while (static_cast<int>(set.size()) < 8)
        set.push_back(sample_floorplan(rng, static_cast<int>(rng.uniform_int(3, 6))));

    Models models(gc, dc, ec, 31337);
    double before = mean_compat(models.generator, set, 555, 2);

    fs::path dir = fs::temp_directory_path() / "plangan_acc_c7";
    fs::remove_all(dir);
    bool finite = true;
    try {
        run_training_samples(set, models, tc, dir.string());
    } catch (const NonFiniteLossError&) {
        finite = false;
    }
    double after = mean_compat(models.generator, set, 555, 2);
    double dt = elapsed_s(t0);
    fs::remove_all(dir);

    double reduction = before > 0 ? (before - after) / before : 0.0;
    bool pass = finite && reduction >= 0.5 && dt < 1800.0;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "compat %.3f -> %.3f (%.0f%% reduction) over 2000 steps in %.0f s; losses %s",
                  before, after, reduction * 100, dt, finite ? "finite" : "NON-FINITE");
    return {pass, buf};
}

// ---------------------------------------------------------------------- C8

Tensor random_psd(Rng& rng, int n, double jitter = 0.1) {
    Tensor b = random_tensor({n, n}, rng);
    Tensor out({n, n});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0;
            for (int k = 0; k < n; ++k) s += b.at(i, k) * b.at(j, k);
            out.at(i, j) = s + (i == j ? jitter : 0.0);
        }
    return out;
}

Tensor db_sqrt(const Tensor& a) {  // Denman-Beavers oracle
    int n = a.dim(0);
    auto identity = [&]() {
        Tensor t({n, n});
        for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
        return t;
    };
    auto mul_ = [&](const Tensor& x, const Tensor& y) {
        Tensor out({n, n});
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j) out.at(i, j) += x.at(i, k) * y.at(k, j);
        return out;
    };
    (void)mul_;
    auto inverse = [&](Tensor x) {
        Tensor inv = identity();
        for (int col = 0; col < n; ++col) {
            int piv = col;
            for (int r = col + 1; r < n; ++r)
                if (std::abs(x.at(r, col)) > std::abs(x.at(piv, col))) piv = r;
            for (int j = 0; j < n; ++j) {
                std::swap(x.at(col, j), x.at(piv, j));
                std::swap(inv.at(col, j), inv.at(piv, j));
            }
            double d = x.at(col, col);
            for (int j = 0; j < n; ++j) {
                x.at(col, j) /= d;
                inv.at(col, j) /= d;
            }
            for (int r = 0; r < n; ++r) {
                if (r == col) continue;
                double fct = x.at(r, col);
                for (int j = 0; j < n; ++j) {
                    x.at(r, j) -= fct * x.at(col, j);
                    inv.at(r, j) -= fct * inv.at(col, j);
                }
            }
        }
        return inv;
    };
    Tensor y = a, z = identity();
    for (int iter = 0; iter < 60; ++iter) {
        Tensor yi = inverse(y), zi = inverse(z);
        Tensor y2({n, n}), z2({n, n});
        for (int i = 0; i < n * n; ++i) {
            y2[i] = 0.5 * (y[i] + zi[i]);
            z2[i] = 0.5 * (z[i] + yi[i]);
        }
        y = y2;
        z = z2;
    }
    return y;
}

std::pair<bool, std::string> c8_frechet() {
    Rng rng(88008);
    Tensor mu = random_tensor({4}, rng);
    Tensor cov = random_psd(rng, 4);
    double self = frechet_distance(mu, cov, mu, cov);
    if (std::abs(self) > 1e-6) return {false, "d(X,X) = " + std::to_string(self)};

    Tensor mu1({3}, {1.0, -2.0, 0.5});
    Tensor mu2({3}, {0.0, 1.0, 0.5});
    Tensor eye({3, 3});
    for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    double want = 1.0 + 9.0 + 0.0;
    double got = frechet_distance(mu1, eye, mu2, eye);
    if (std::abs(got - want) > 1e-6)
        return {false, "equal-covariance case " + std::to_string(got) + " vs " + std::to_string(want)};

    double worst = 0;
    for (int trial = 0; trial < 5; ++trial) {
        Tensor m1 = random_tensor({4}, rng), m2 = random_tensor({4}, rng);
        Tensor c1 = random_psd(rng, 4), c2 = random_psd(rng, 4);
        double fd = frechet_distance(m1, c1, m2, c2);
        Tensor s2 = db_sqrt(c2);
        Tensor t({4, 4});
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                double acc = 0;
                for (int k = 0; k < 4; ++k)
                    for (int l = 0; l < 4; ++l) acc += s2.at(i, k) * c1.at(k, l) * s2.at(l, j);
                t.at(i, j) = acc;
            }
        Tensor st = db_sqrt(t);
        double tr_sqrt = 0, trace = 0, mu_term = 0;
        for (int i = 0; i < 4; ++i) {
            tr_sqrt += st.at(i, i);
            trace += c1.at(i, i) + c2.at(i, i);
            double d = m1[i] - m2[i];
            mu_term += d * d;
        }
        worst = std::max(worst, std::abs(fd - (mu_term + trace - 2 * tr_sqrt)));
    }
    if (worst > 1e-6) return {false, "eigendecomposition oracle gap " + std::to_string(worst)};
    return {true, "self-distance 0, analytic equal-covariance exact, oracle gap " +
                      std::to_string(worst).substr(0, 10)};
}

// ---------------------------------------------------------------------- C9

int run_cli(const std::vector<std::string>& args) {
    return cli::run(cli::parse(args));
}

std::string write_micro_config(const fs::path& dir) {
    RunConfig rc;
    rc.generator.channels = 2;
    rc.generator.gte_blocks = 2;  // matches the pretraining encoder depth
    rc.generator.cnn_hidden = 4;
    rc.generator.head_channels = {4, 1};
    rc.discriminator.channels = 2;
    rc.discriminator.type_channels = 2;
    rc.discriminator.gte_blocks = 1;
    rc.discriminator.cnn_hidden = 4;
    rc.discriminator.room_vec_dim = 8;
    rc.estimator.conv_channels = 2;
    rc.estimator.embed_dim = 8;
    rc.estimator.pair_hidden = 8;
    rc.train.batch_size = 2;
    rc.train.max_steps = 3;
    rc.train.checkpoint_every = 0;
    rc.pretrain.encoder_blocks = 2;
    rc.pretrain.decoder_blocks = 1;
    rc.pretrain.channels = 2;
    rc.pretrain.spatial_side = 8;
    rc.pretrain.steps = 3;
    rc.pretrain.batch_size = 4;
    rc.eval.n_samples = 6;
    fs::path p = dir / "micro.json";
    write_run_config(rc, p.string());
    return p.string();
}

std::pair<bool, std::string> c9_determinism() {
    fs::path root = fs::temp_directory_path() / "plangan_acc_c9";
    fs::remove_all(root);
    fs::create_directories(root);
    std::string cfg = write_micro_config(root);

    auto differs = [&](const fs::path& a, const fs::path& b) {
        return read_bytes(a) != read_bytes(b);
    };

    // synth-data
    for (const char* run : {"a", "b"}) {
        fs::path out = root / ("synth_" + std::string(run)) / "data.jsonl";
        fs::create_directories(out.parent_path());
        if (run_cli({"synth-data", "--count", "10", "--seed", "9", "--max-rooms", "6", "--out",
                     out.string()}) != 0)
            return {false, "synth-data run failed"};
    }
    if (differs(root / "synth_a/data.jsonl", root / "synth_b/data.jsonl"))
        return {false, "synth-data output differs between runs"};
    std::string data = (root / "synth_a/data.jsonl").string();

    // pretrain
    for (const char* run : {"a", "b"})
        if (run_cli({"pretrain", "--data", data, "--config", cfg, "--seed", "9", "--out",
                     (root / ("pre_" + std::string(run))).string()}) != 0)
            return {false, "pretrain run failed"};
    if (differs(root / "pre_a/pretrain_log.jsonl", root / "pre_b/pretrain_log.jsonl") ||
        differs(root / "pre_a/checkpoint/node_encoder.bin",
                root / "pre_b/checkpoint/node_encoder.bin"))
        return {false, "pretrain artifacts differ between runs"};

    // train
    for (const char* run : {"a", "b"})
        if (run_cli({"train", "--data", data, "--config", cfg, "--seed", "9", "--out",
                     (root / ("train_" + std::string(run))).string()}) != 0)
            return {false, "train run failed"};
    if (differs(root / "train_a/metrics.jsonl", root / "train_b/metrics.jsonl") ||
        differs(root / "train_a/checkpoint/generator.bin",
                root / "train_b/checkpoint/generator.bin"))
        return {false, "train artifacts differ between runs"};
    std::string ckpt = (root / "train_a/checkpoint").string();

    // generate
    for (const char* run : {"a", "b"})
        if (run_cli({"generate", "--diagrams", data, "--checkpoint", ckpt, "--config", cfg,
                     "--seed", "9", "--samples", "3", "--out",
                     (root / ("gen_" + std::string(run))).string()}) != 0)
            return {false, "generate run failed"};
    for (const char* f : {"sample_0000.ppm", "sample_0001.json", "sample_0002.ppm"})
        if (differs(root / "gen_a" / f, root / "gen_b" / f))
            return {false, "generate artifacts differ between runs"};

    // evaluate (model mode)
    for (const char* run : {"a", "b"})
        if (run_cli({"evaluate", "--data", data, "--checkpoint", ckpt, "--config", cfg, "--seed",
                     "9", "--out", (root / ("eval_" + std::string(run))).string()}) != 0)
            return {false, "evaluate run failed"};
    if (differs(root / "eval_a/report.json", root / "eval_b/report.json"))
        return {false, "evaluate report differs between runs"};

    // ablate (single configuration)
    for (const char* run : {"a", "b"})
        if (run_cli({"ablate", "--data", data, "--config", cfg, "--seed", "9", "--only",
                     "no-gmb", "--out", (root / ("abl_" + std::string(run))).string()}) != 0)
            return {false, "ablate run failed"};
    if (differs(root / "abl_a/no-gmb/report.json", root / "abl_b/no-gmb/report.json"))
        return {false, "ablate report differs between runs"};

    fs::remove_all(root);
    return {true, "synth-data, pretrain, train, generate, evaluate and ablate reproduce their "
                  "artifacts byte-for-byte"};
}

// --------------------------------------------------------------------- C10

std::pair<bool, std::string> c10_ablation_matrix() {
    fs::path root = fs::temp_directory_path() / "plangan_acc_c10";
    fs::remove_all(root);
    fs::create_directories(root);
    std::string cfg = write_micro_config(root);

    fs::path data = root / "data.jsonl";
    if (run_cli({"synth-data", "--count", "8", "--seed", "3", "--max-rooms", "6", "--out",
                 data.string()}) != 0)
        return {false, "corpus generation failed"};

    fs::path out = root / "ablate";
    if (run_cli({"ablate", "--data", data.string(), "--config", cfg, "--seed", "5", "--out",
                 out.string()}) != 0)
        return {false, "ablate failed"};

    int checked = 0;
    for (const std::string& preset : cli::ablation_preset_names()) {
        fs::path report = out / preset / "report.json";
        if (!fs::exists(report)) return {false, "missing report for " + preset};
        json j = json::parse(read_bytes(report));
        if (!j.contains("fid") || !j.contains("compatibility_mean") ||
            !j.contains("sample_count") || !j.contains("bucket"))
            return {false, "malformed report for " + preset};
        if (!std::isfinite(j["fid"].get<double>()) ||
            !std::isfinite(j["compatibility_mean"].get<double>()) ||
            j["sample_count"].get<int>() <= 0)
            return {false, "non-finite metrics for " + preset};
        ++checked;
    }
    fs::remove_all(root);
    return {checked == 8, std::to_string(checked) + "/8 configurations completed with well-formed reports"};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    auto wanted = [&](int id) { return only.empty() || only.count(id) > 0; };

    struct Entry {
        int id;
        const char* name;
        std::function<std::pair<bool, std::string>()> fn;
    };
    const Entry entries[] = {
        {1, "oracle equivalence (shortest paths, edit distance)", c1_oracle_equivalence},
        {2, "gradient correctness vs finite differences", c2_gradient_correctness},
        {3, "identity at initialization", c3_identity_at_init},
        {4, "gradient-penalty calibration", c4_gradient_penalty},
        {5, "masking exactness", c5_masking},
        {6, "pre-training overfit", c6_pretrain_overfit},
        {7, "adversarial overfit smoke test", c7_gan_overfit},
        {8, "Frechet distance reference cases", c8_frechet},
        {9, "CLI determinism", c9_determinism},
        {10, "structural ablation harness", c10_ablation_matrix},
    };
    for (const auto& e : entries)
        if (wanted(e.id)) run_criterion(e.id, e.name, e.fn);

    if (g_failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criteria failed\n", g_failures);
    return 1;
}
