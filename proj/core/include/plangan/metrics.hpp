#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "plangan/graph.hpp"
#include "plangan/synth.hpp"
#include "plangan/tensor.hpp"

namespace plangan {

struct Rgb {
    std::uint8_t r = 255, g = 255, b = 255;
    bool operator==(const Rgb&) const = default;
};

// Fixed palette: index 0 is the white background, index 1+t is room type t.
Rgb palette_color(int index);

struct RasterImage {
    int side = kCanvas;
    int scale = 1;
    std::vector<std::uint8_t> indices;  // side*side palette indices

    std::uint8_t at(int y, int x) const { return indices[static_cast<size_t>(y) * side + x]; }
};

RasterImage rasterize(const std::vector<Rect>& rects, const std::vector<RoomType>& types,
                      int scale = 1);
void write_ppm(const RasterImage& img, const std::string& path);

// Adjacency recovered from rectangle geometry: an edge when the gap along one
// axis is <= delta px and the projections on the other axis overlap by >= 1 px.
inline constexpr int kAdjacencyGap = 2;
BubbleDiagram extract_bubble_diagram(const std::vector<Rect>& rects,
                                     const std::vector<RoomType>& types);

// Graph editing distance with node correspondence fixed by room index:
// the size of the symmetric difference of the edge sets.
int compatibility(const BubbleDiagram& input, const std::vector<Rect>& generated_rects);
int edge_set_distance(const BubbleDiagram& a, const BubbleDiagram& b);

double frechet_distance(const Tensor& mu1, const Tensor& cov1, const Tensor& mu2,
                        const Tensor& cov2);

// mean/covariance fit of feature rows
void fit_gaussian(const std::vector<std::vector<double>>& feats, Tensor* mu, Tensor* cov);

// symmetric eigendecomposition (cyclic Jacobi); A is (n,n)
void sym_eig(const Tensor& a, Tensor* eigenvalues, Tensor* eigenvectors);

struct EvalReport {
    double compatibility_mean = 0.0;
    double fid = 0.0;
    int sample_count = 0;
    std::string bucket;
};

using FeatureExtractor = std::function<std::vector<double>(const RasterImage&)>;

class Generator;

// Fixed randomly initialized conv embedder; parameters persist for
// reproducible reports.
class ConvFeatureExtractor {
  public:
    explicit ConvFeatureExtractor(std::uint64_t seed = 9001);
    std::vector<double> operator()(const RasterImage& img) const;
    void save(const std::string& path) const;
    void load(const std::string& path);
    int feature_dim() const;

    struct Impl;
    std::shared_ptr<Impl> impl_;
};

EvalReport evaluate_suite(const Generator& model, const std::vector<LayoutSample>& held_out,
                          const FeatureExtractor& extractor, int n_samples, std::uint64_t seed,
                          const std::string& bucket);

// Self-comparison of a dataset (no model): compatibility of each sample's own
// rectangles and FID of the set against itself.
EvalReport evaluate_self(const std::vector<LayoutSample>& samples,
                         const FeatureExtractor& extractor, const std::string& bucket);

void write_eval_report(const EvalReport& r, const std::string& path);

}  // namespace plangan
