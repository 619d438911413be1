#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <queue>

#include "plangan/errors.hpp"
#include "plangan/generator.hpp"
#include "plangan/metrics.hpp"
#include "test_util.hpp"

using namespace plangan;
using namespace plangan::testutil;
namespace fs = std::filesystem;

namespace {

// exhaustive edit-sequence oracle: BFS over edge-set states, one insert or
// delete per move, from the input edge set to the extracted one
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

BubbleDiagram random_diagram(Rng& rng, int m, double p = 0.4) {
    BubbleDiagram d;
    for (int i = 0; i < m; ++i)
        d.room_types.push_back(static_cast<RoomType>(rng.uniform_int(0, kNumRoomTypes - 1)));
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            if (rng.uniform() < p) d.add_edge(i, j);
    return d;
}

// Denman-Beavers iteration, an independent route to tr sqrt(S2*C1*S2)
Tensor db_sqrt(const Tensor& a) {
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
                double f = x.at(r, col);
                for (int j = 0; j < n; ++j) {
                    x.at(r, j) -= f * x.at(col, j);
                    inv.at(r, j) -= f * inv.at(col, j);
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

}  // namespace

TEST_CASE("rasterize: paint order and palette") {
    SUBCASE("one full-canvas room is uniform") {
        RasterImage img = rasterize({Rect{0, 0, 32, 32}}, {RoomType::kitchen});
        for (int i = 0; i < 32 * 32; ++i)
            CHECK(img.indices[static_cast<size_t>(i)] == 1 + static_cast<int>(RoomType::kitchen));
    }
    SUBCASE("smaller area paints on top of larger") {
        // areas 9 and 4, overlapping: the 4-area rect is painted last
        std::vector<Rect> rects{Rect{0, 0, 3, 3}, Rect{1, 1, 3, 3}};
        std::vector<RoomType> types{RoomType::kitchen, RoomType::bedroom};
        RasterImage img = rasterize(rects, types);
        CHECK(img.at(2, 2) == 1 + static_cast<int>(RoomType::bedroom));
        CHECK(img.at(0, 0) == 1 + static_cast<int>(RoomType::kitchen));
        CHECK(img.at(5, 5) == 0);  // background stays white
        CHECK(palette_color(0) == Rgb{255, 255, 255});
    }
    SUBCASE("equal areas: lower index painted first, higher ends on top") {
        std::vector<Rect> rects{Rect{0, 0, 2, 2}, Rect{1, 0, 3, 2}};
        std::vector<RoomType> types{RoomType::kitchen, RoomType::bedroom};
        RasterImage img = rasterize(rects, types);
        CHECK(img.at(0, 1) == 1 + static_cast<int>(RoomType::bedroom));
    }
    SUBCASE("deterministic across calls") {
        Rng rng(3);
        LayoutSample s = sample_floorplan(rng, 6);
        RasterImage a = rasterize(s.rects, s.diagram.room_types);
        RasterImage b = rasterize(s.rects, s.diagram.room_types);
        CHECK(a.indices == b.indices);
    }
}

TEST_CASE("ppm export") {
    fs::path p = fs::temp_directory_path() / "plangan_raster.ppm";
    RasterImage img = rasterize({Rect{0, 0, 32, 32}}, {RoomType::closet}, 2);
    write_ppm(img, p.string());
    std::ifstream f(p, std::ios::binary);
    std::string magic, dims;
    std::getline(f, magic);
    std::getline(f, dims);
    CHECK(magic == "P6");
    CHECK(dims == "64 64");
    fs::remove(p);
}

TEST_CASE("adjacency extraction gap rules") {
    std::vector<RoomType> tt{RoomType::kitchen, RoomType::bedroom};

    SUBCASE("shared boundary segment -> edge") {
        BubbleDiagram d = extract_bubble_diagram({Rect{0, 0, 4, 4}, Rect{4, 0, 8, 4}}, tt);
        CHECK(d.has_edge(0, 1));
    }
    SUBCASE("gap of 1 and 2 -> edge, 3 -> none") {
        CHECK(extract_bubble_diagram({Rect{0, 0, 4, 4}, Rect{5, 0, 8, 4}}, tt).has_edge(0, 1));
        CHECK(extract_bubble_diagram({Rect{0, 0, 4, 4}, Rect{6, 0, 9, 4}}, tt).has_edge(0, 1));
        CHECK_FALSE(extract_bubble_diagram({Rect{0, 0, 4, 4}, Rect{7, 0, 10, 4}}, tt).has_edge(0, 1));
    }
    SUBCASE("corner-only contact -> no edge") {
        CHECK_FALSE(extract_bubble_diagram({Rect{0, 0, 4, 4}, Rect{4, 4, 8, 8}}, tt).has_edge(0, 1));
    }
    SUBCASE("overlapping rectangles -> edge") {
        CHECK(extract_bubble_diagram({Rect{0, 0, 5, 5}, Rect{3, 3, 8, 8}}, tt).has_edge(0, 1));
    }
    SUBCASE("gap along y with x overlap -> edge") {
        CHECK(extract_bubble_diagram({Rect{0, 0, 4, 4}, Rect{2, 6, 6, 9}}, tt).has_edge(0, 1));
    }
}

TEST_CASE("compatibility equals the exhaustive edit oracle on 100 random pairs") {
    Rng rng(55);
    for (int trial = 0; trial < 100; ++trial) {
        int m = static_cast<int>(rng.uniform_int(2, 6));
        BubbleDiagram a = random_diagram(rng, m);
        BubbleDiagram b = random_diagram(rng, m);
        b.room_types = a.room_types;
        int got = edge_set_distance(a, b);
        int want = edit_distance_oracle(a, b, m);
        CHECK(got == want);
    }
}

TEST_CASE("compatibility examples and error paths") {
    BubbleDiagram in;
    in.room_types = {RoomType::kitchen, RoomType::bedroom, RoomType::closet};
    in.add_edge(0, 1);
    in.add_edge(1, 2);

    // identical adjacency -> 0 (two stacked side-by-side rooms & one apart)
    std::vector<Rect> rects{Rect{0, 0, 10, 10}, Rect{11, 0, 20, 10}, Rect{11, 12, 20, 20}};
    BubbleDiagram ext = extract_bubble_diagram(rects, in.room_types);
    CHECK(edge_set_distance(in, ext) == 0);
    CHECK(compatibility(in, rects) == 0);

    // one missing edge costs 1
    BubbleDiagram missing = in;
    missing.edges.erase({1, 2});
    CHECK(edge_set_distance(in, missing) == 1);

    CHECK_THROWS_AS(compatibility(in, std::vector<Rect>{Rect{0, 0, 4, 4}}),
                    LengthMismatchError);
}

TEST_CASE("edge-set distance is a metric on random triples") {
    Rng rng(66);
    for (int trial = 0; trial < 50; ++trial) {
        int m = static_cast<int>(rng.uniform_int(2, 6));
        BubbleDiagram a = random_diagram(rng, m);
        BubbleDiagram b = random_diagram(rng, m);
        BubbleDiagram c = random_diagram(rng, m);
        int ab = edge_set_distance(a, b);
        int ba = edge_set_distance(b, a);
        CHECK(ab == ba);
        CHECK((ab == 0) == (a.edges == b.edges));
        CHECK(edge_set_distance(a, c) <= ab + edge_set_distance(b, c));
    }
}

TEST_CASE("frechet distance reference cases") {
    SUBCASE("identical statistics -> 0") {
        Rng rng(5);
        Tensor mu = random_tensor({4}, rng);
        Tensor cov = random_psd(rng, 4);
        CHECK(frechet_distance(mu, cov, mu, cov) == doctest::Approx(0.0).epsilon(1e-6));
    }
    SUBCASE("identity covariances -> squared mean distance") {
        Tensor mu1({3}, {1.0, 2.0, 3.0});
        Tensor mu2({3}, {2.0, 0.0, 3.5});
        Tensor eye({3, 3});
        for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
        double want = 1.0 + 4.0 + 0.25;
        CHECK(frechet_distance(mu1, eye, mu2, eye) == doctest::Approx(want).epsilon(1e-9));
    }
    SUBCASE("random 4-d case matches the Denman-Beavers oracle") {
        Rng rng(8);
        for (int trial = 0; trial < 5; ++trial) {
            Tensor mu1 = random_tensor({4}, rng), mu2 = random_tensor({4}, rng);
            Tensor c1 = random_psd(rng, 4), c2 = random_psd(rng, 4);
            double got = frechet_distance(mu1, c1, mu2, c2);

            // oracle: same formula, matrix square roots via Denman-Beavers
            Tensor s2 = db_sqrt(c2);
            Tensor t({4, 4});
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) {
                    double acc = 0;
                    for (int k = 0; k < 4; ++k)
                        for (int l = 0; l < 4; ++l)
                            acc += s2.at(i, k) * c1.at(k, l) * s2.at(l, j);
                    t.at(i, j) = acc;
                }
            Tensor st = db_sqrt(t);
            double tr_sqrt = 0, trace = 0, mu_term = 0;
            for (int i = 0; i < 4; ++i) {
                tr_sqrt += st.at(i, i);
                trace += c1.at(i, i) + c2.at(i, i);
                double d = mu1[i] - mu2[i];
                mu_term += d * d;
            }
            double want = mu_term + trace - 2 * tr_sqrt;
            CHECK(got == doctest::Approx(want).epsilon(1e-6));
        }
    }
    SUBCASE("symmetry in the two arguments") {
        Rng rng(9);
        Tensor mu1 = random_tensor({4}, rng), mu2 = random_tensor({4}, rng);
        Tensor c1 = random_psd(rng, 4), c2 = random_psd(rng, 4);
        CHECK(frechet_distance(mu1, c1, mu2, c2) ==
              doctest::Approx(frechet_distance(mu2, c2, mu1, c1)).epsilon(1e-6));
    }
    SUBCASE("non-symmetric covariance is rejected") {
        Tensor mu({2});
        Tensor bad({2, 2}, {1.0, 0.5, 0.2, 1.0});
        CHECK_THROWS_AS((void)frechet_distance(mu, bad, mu, bad),
                        NonSymmetricCovarianceError);
    }
}

TEST_CASE("jacobi eigensolver reconstructs the matrix") {
    Rng rng(10);
    Tensor a = random_psd(rng, 5);
    Tensor evals, evecs;
    sym_eig(a, &evals, &evecs);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            double acc = 0;
            for (int k = 0; k < 5; ++k)
                acc += evecs.at(i, k) * evals[k] * evecs.at(j, k);
            CHECK(acc == doctest::Approx(a.at(i, j)).epsilon(1e-8));
        }
}

TEST_CASE("self evaluation yields zero fid and zero compatibility") {
    Rng rng(12);
    std::vector<LayoutSample> samples;
    for (int i = 0; i < 6; ++i) samples.push_back(sample_floorplan(rng, 4));
    ConvFeatureExtractor fx(77);
    EvalReport r = evaluate_self(samples, fx, "4-6");
    CHECK(r.fid == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(r.compatibility_mean == 0.0);
    CHECK(r.sample_count == 6);
    CHECK(r.bucket == "4-6");
}

TEST_CASE("evaluate_suite reports the requested sample count") {
    Rng rng(13);
    std::vector<LayoutSample> held;
    for (int i = 0; i < 3; ++i) held.push_back(sample_floorplan(rng, 3));

    GeneratorConfig gc;
    gc.channels = 2;
    gc.resolutions = {8, 16, 32};
    gc.gte_blocks = 1;
    gc.cnn_hidden = 4;
    gc.head_channels = {4, 1};
    Generator g(gc, 3);
    ConvFeatureExtractor fx(78);
    EvalReport r = evaluate_suite(g, held, fx, 5, 99, "1-3");
    CHECK(r.sample_count == 5);
    CHECK(r.fid >= 0.0);
    CHECK(r.compatibility_mean >= 0.0);
    CHECK(std::isfinite(r.fid));
}

TEST_CASE("extractor parameters persist") {
    ConvFeatureExtractor fx(123);
    fs::path p = fs::temp_directory_path() / "plangan_fx.bin";
    fx.save(p.string());
    ConvFeatureExtractor fx2(456);
    fx2.load(p.string());
    RasterImage img = rasterize({Rect{2, 3, 20, 21}}, {RoomType::bedroom});
    auto a = fx(img);
    auto b = fx2(img);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    fs::remove(p);
}
