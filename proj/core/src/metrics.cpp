#include "plangan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "plangan/checkpoint.hpp"
#include "plangan/errors.hpp"
#include "plangan/generator.hpp"
#include "plangan/nn.hpp"

namespace plangan {

using ordered_json = nlohmann::ordered_json;

Rgb palette_color(int index) {
    // background + one fixed color per room type
    static const Rgb table[11] = {
        {255, 255, 255},  // background
        {230, 76, 60},    // living room
        {243, 156, 18},   // kitchen
        {52, 152, 219},   // bedroom
        {26, 188, 156},   // bathroom
        {155, 89, 182},   // closet
        {46, 204, 113},   // balcony
        {149, 165, 166},  // corridor
        {241, 196, 15},   // dining room
        {52, 73, 94},     // laundry room
        {127, 140, 141},  // unknown
    };
    if (index < 0 || index > 10) return table[0];
    return table[index];
}

RasterImage rasterize(const std::vector<Rect>& rects, const std::vector<RoomType>& types,
                      int scale) {
    if (rects.size() != types.size()) throw LengthMismatchError("rects vs types");
    RasterImage img;
    img.side = kCanvas;
    img.scale = std::max(1, scale);
    img.indices.assign(static_cast<size_t>(img.side) * img.side, 0);

    // paint in decreasing area so small rooms end up on top; ties keep the
    // lower room index underneath
    std::vector<int> order(rects.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        int aa = rects[static_cast<size_t>(a)].area();
        int ab = rects[static_cast<size_t>(b)].area();
        if (aa != ab) return aa > ab;
        return a < b;
    });
    for (int i : order) {
        const Rect& r = rects[static_cast<size_t>(i)];
        std::uint8_t color = static_cast<std::uint8_t>(1 + static_cast<int>(types[static_cast<size_t>(i)]));
        for (int y = r.y0; y < r.y1; ++y)
            for (int x = r.x0; x < r.x1; ++x)
                img.indices[static_cast<size_t>(y) * img.side + x] = color;
    }
    return img;
}

void write_ppm(const RasterImage& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    int out_side = img.side * img.scale;
    f << "P6\n" << out_side << " " << out_side << "\n255\n";
    for (int y = 0; y < out_side; ++y)
        for (int x = 0; x < out_side; ++x) {
            Rgb c = palette_color(img.at(y / img.scale, x / img.scale));
            f.put(static_cast<char>(c.r));
            f.put(static_cast<char>(c.g));
            f.put(static_cast<char>(c.b));
        }
    if (!f) throw IoError("write failed for " + path);
}

namespace {

bool rects_adjacent(const Rect& a, const Rect& b) {
    int overlap_x = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
    int overlap_y = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
    int gap_x = -overlap_x;
    int gap_y = -overlap_y;
    if (overlap_x >= 1 && overlap_y >= 1) return true;  // touching interiors / overlap
    if (gap_x >= 0 && gap_x <= kAdjacencyGap && overlap_y >= 1) return true;
    if (gap_y >= 0 && gap_y <= kAdjacencyGap && overlap_x >= 1) return true;
    return false;
}

}  // namespace

BubbleDiagram extract_bubble_diagram(const std::vector<Rect>& rects,
                                     const std::vector<RoomType>& types) {
    if (rects.size() != types.size()) throw LengthMismatchError("rects vs types");
    BubbleDiagram d;
    d.room_types = types;
    int m = static_cast<int>(rects.size());
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            if (rects_adjacent(rects[static_cast<size_t>(i)], rects[static_cast<size_t>(j)]))
                d.add_edge(i, j);
    return d;
}

int edge_set_distance(const BubbleDiagram& a, const BubbleDiagram& b) {
    int dist = 0;
    for (const auto& e : a.edges)
        if (!b.edges.count(e)) ++dist;
    for (const auto& e : b.edges)
        if (!a.edges.count(e)) ++dist;
    return dist;
}

int compatibility(const BubbleDiagram& input, const std::vector<Rect>& generated_rects) {
    if (static_cast<int>(generated_rects.size()) != input.num_rooms())
        throw LengthMismatchError("generated rects vs input rooms");
    BubbleDiagram extracted = extract_bubble_diagram(generated_rects, input.room_types);
    return edge_set_distance(input, extracted);
}

// ------------------------------------------------------------------ frechet

void sym_eig(const Tensor& a, Tensor* eigenvalues, Tensor* eigenvectors) {
    int n = a.dim(0);
    Tensor m = a;
    Tensor v({n, n});
    for (int i = 0; i < n; ++i) v.at(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += m.at(i, j) * m.at(i, j);
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                double apq = m.at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                double theta = (m.at(q, q) - m.at(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double mkp = m.at(k, p), mkq = m.at(k, q);
                    m.at(k, p) = c * mkp - s * mkq;
                    m.at(k, q) = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    double mpk = m.at(p, k), mqk = m.at(q, k);
                    m.at(p, k) = c * mpk - s * mqk;
                    m.at(q, k) = s * mpk + c * mqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = v.at(k, p), vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
    }
    Tensor evals({n});
    for (int i = 0; i < n; ++i) evals[i] = m.at(i, i);
    if (eigenvalues) *eigenvalues = std::move(evals);
    if (eigenvectors) *eigenvectors = std::move(v);
}

namespace {

void check_symmetric(const Tensor& cov) {
    if (cov.ndim() != 2 || cov.dim(0) != cov.dim(1)) throw NonSymmetricCovarianceError();
    int n = cov.dim(0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(cov.at(i, j) - cov.at(j, i)) > 1e-9) throw NonSymmetricCovarianceError();
}

Tensor psd_sqrt(const Tensor& a) {
    int n = a.dim(0);
    Tensor evals, evecs;
    sym_eig(a, &evals, &evecs);
    Tensor out({n, n});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0;
            for (int k = 0; k < n; ++k) {
                double lam = std::max(0.0, evals[k]);
                s += evecs.at(i, k) * std::sqrt(lam) * evecs.at(j, k);
            }
            out.at(i, j) = s;
        }
    return out;
}

Tensor matmul_plain(const Tensor& a, const Tensor& b) {
    int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor out({m, n});
    for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < k; ++kk) {
            double av = a.at(i, kk);
            if (av == 0.0) continue;
            for (int j = 0; j < n; ++j) out.at(i, j) += av * b.at(kk, j);
        }
    return out;
}

}  // namespace

double frechet_distance(const Tensor& mu1, const Tensor& cov1, const Tensor& mu2,
                        const Tensor& cov2) {
    check_symmetric(cov1);
    check_symmetric(cov2);
    int n = mu1.size();
    if (mu2.size() != n || cov1.dim(0) != n || cov2.dim(0) != n)
        throw ShapeMismatchError("frechet inputs");

    double mu_term = 0;
    for (int i = 0; i < n; ++i) {
        double d = mu1[i] - mu2[i];
        mu_term += d * d;
    }
    // tr sqrt(cov1*cov2) computed on the symmetric form S2 cov1 S2
    Tensor s2 = psd_sqrt(cov2);
    Tensor t = matmul_plain(matmul_plain(s2, cov1), s2);
    Tensor evals;
    sym_eig(t, &evals, nullptr);
    double tr_sqrt = 0;
    for (int i = 0; i < n; ++i) tr_sqrt += std::sqrt(std::max(0.0, evals[i]));
    double trace = 0;
    for (int i = 0; i < n; ++i) trace += cov1.at(i, i) + cov2.at(i, i);
    return std::max(0.0, mu_term + trace - 2.0 * tr_sqrt);
}

void fit_gaussian(const std::vector<std::vector<double>>& feats, Tensor* mu, Tensor* cov) {
    if (feats.empty()) throw Error("no features to fit");
    int n = static_cast<int>(feats[0].size());
    int count = static_cast<int>(feats.size());
    Tensor m({n});
    for (const auto& f : feats)
        for (int i = 0; i < n; ++i) m[i] += f[static_cast<size_t>(i)];
    for (int i = 0; i < n; ++i) m[i] /= count;
    Tensor c({n, n});
    if (count > 1) {
        for (const auto& f : feats)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    c.at(i, j) += (f[static_cast<size_t>(i)] - m[i]) * (f[static_cast<size_t>(j)] - m[j]);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) c.at(i, j) /= (count - 1);
    }
    if (mu) *mu = std::move(m);
    if (cov) *cov = std::move(c);
}

// --------------------------------------------------------- feature extractor

struct ConvFeatureExtractor::Impl {
    ParamStore params;
    Conv2d c1, c2;
    Impl(std::uint64_t seed) {
        Rng rng(seed);
        c1 = Conv2d(params, "c1", 3, 8, 3, 2, 1, rng);
        c2 = Conv2d(params, "c2", 8, 16, 3, 2, 1, rng);
    }
};

ConvFeatureExtractor::ConvFeatureExtractor(std::uint64_t seed)
    : impl_(std::make_shared<Impl>(seed)) {}

int ConvFeatureExtractor::feature_dim() const { return 16; }

std::vector<double> ConvFeatureExtractor::operator()(const RasterImage& img) const {
    NoGradGuard ng;
    Tensor x({3, img.side, img.side});
    for (int y = 0; y < img.side; ++y)
        for (int x_ = 0; x_ < img.side; ++x_) {
            Rgb c = palette_color(img.at(y, x_));
            x.at(0, y, x_) = c.r / 255.0;
            x.at(1, y, x_) = c.g / 255.0;
            x.at(2, y, x_) = c.b / 255.0;
        }
    Var h = gelu(impl_->c2(gelu(impl_->c1(constant(x)))));  // (16, side/4, side/4)
    int s = h.shape()[1] * h.shape()[2];
    std::vector<double> out(16, 0.0);
    for (int c = 0; c < 16; ++c) {
        const double* plane = h.val().data() + static_cast<size_t>(c) * s;
        double acc = 0;
        for (int i = 0; i < s; ++i) acc += plane[i];
        out[static_cast<size_t>(c)] = acc / s;
    }
    return out;
}

void ConvFeatureExtractor::save(const std::string& path) const {
    save_params_blob(impl_->params, path);
}

void ConvFeatureExtractor::load(const std::string& path) {
    load_params_blob(impl_->params, path);
}

// ------------------------------------------------------------------- suites

EvalReport evaluate_suite(const Generator& model, const std::vector<LayoutSample>& held_out,
                          const FeatureExtractor& extractor, int n_samples, std::uint64_t seed,
                          const std::string& bucket) {
    if (held_out.empty()) throw Error("no held-out samples");
    NoGradGuard ng;
    EvalReport report;
    report.bucket = bucket;
    report.sample_count = n_samples;

    std::vector<std::vector<double>> gen_feats, real_feats;
    Rng rng(seed);
    long compat_sum = 0;
    for (int i = 0; i < n_samples; ++i) {
        const LayoutSample& s = held_out[static_cast<size_t>(i) % held_out.size()];
        std::vector<Tensor> masks = model.generate(s.diagram, rng);
        std::vector<Rect> rects = masks_to_rects(masks);
        compat_sum += compatibility(s.diagram, rects);
        gen_feats.push_back(extractor(rasterize(rects, s.diagram.room_types)));
    }
    for (const auto& s : held_out)
        real_feats.push_back(extractor(rasterize(s.rects, s.diagram.room_types)));

    report.compatibility_mean = static_cast<double>(compat_sum) / n_samples;
    Tensor mu_g, cov_g, mu_r, cov_r;
    fit_gaussian(gen_feats, &mu_g, &cov_g);
    fit_gaussian(real_feats, &mu_r, &cov_r);
    report.fid = frechet_distance(mu_g, cov_g, mu_r, cov_r);
    return report;
}

EvalReport evaluate_self(const std::vector<LayoutSample>& samples,
                         const FeatureExtractor& extractor, const std::string& bucket) {
    if (samples.empty()) throw Error("no samples");
    EvalReport report;
    report.bucket = bucket;
    report.sample_count = static_cast<int>(samples.size());
    long compat_sum = 0;
    std::vector<std::vector<double>> feats;
    for (const auto& s : samples) {
        compat_sum += compatibility(s.diagram, s.rects);
        feats.push_back(extractor(rasterize(s.rects, s.diagram.room_types)));
    }
    report.compatibility_mean = static_cast<double>(compat_sum) / report.sample_count;
    Tensor mu, cov;
    fit_gaussian(feats, &mu, &cov);
    report.fid = frechet_distance(mu, cov, mu, cov);
    return report;
}

void write_eval_report(const EvalReport& r, const std::string& path) {
    ordered_json j;
    j["bucket"] = r.bucket;
    j["sample_count"] = r.sample_count;
    j["compatibility_mean"] = r.compatibility_mean;
    j["fid"] = r.fid;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open " + path);
    f << j.dump(2) << "\n";
}

}  // namespace plangan
