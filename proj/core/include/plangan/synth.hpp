#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "plangan/graph.hpp"
#include "plangan/rng.hpp"

namespace plangan {

inline constexpr int kCanvas = 32;

// Half-open pixel rectangle [x0,x1) x [y0,y1) on the 32x32 grid.
struct Rect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    int area() const { return width() * height(); }
    bool valid() const {
        return 0 <= x0 && x0 < x1 && x1 <= kCanvas && 0 <= y0 && y0 < y1 && y1 <= kCanvas;
    }
    bool operator==(const Rect&) const = default;
};

struct LayoutSample {
    BubbleDiagram diagram;
    std::vector<Rect> rects;
    bool operator==(const LayoutSample&) const = default;
};

enum class Bucket { b1_3, b4_6, b7_9, b10_12, b13p };

const char* bucket_label(Bucket b);
std::optional<Bucket> bucket_from_label(const std::string& s);
Bucket bucket_for_rooms(int rooms);  // rooms >= 1

struct DatasetSplit {
    Bucket bucket;
    std::vector<LayoutSample> samples;
};

struct SynthConfig {
    int min_rooms = 1;
    int max_rooms = 16;
    int min_side = 3;   // both rect sides >= this
    int wall = 1;       // gap left between split siblings
    int max_attempts = 50;
};

// Recursive guillotine split of the canvas into exactly `rooms` rectangles.
LayoutSample sample_floorplan(Rng& rng, int rooms, const SynthConfig& cfg = {});
std::vector<LayoutSample> generate_dataset(Rng& rng, int count, const SynthConfig& cfg = {});

// Newline-delimited JSON records, schema version 1:
//   {"v":1,"rooms":[...],"edges":[[i,j],...],"rects":[[x0,y0,x1,y1],...]}
void write_dataset(const std::vector<LayoutSample>& samples, const std::string& path);
std::vector<LayoutSample> read_dataset(const std::string& path);

std::map<Bucket, DatasetSplit> bucket_split(const std::vector<LayoutSample>& samples);
// everything NOT in the bucket (cross-subset training protocol)
std::vector<LayoutSample> exclude_bucket(const std::vector<LayoutSample>& samples, Bucket b);

// Per-room {-1,+1} masks of a sample's rectangles, one 32*32 row per room.
Tensor real_masks(const LayoutSample& s);

}  // namespace plangan
