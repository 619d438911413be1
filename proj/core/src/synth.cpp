#include "plangan/synth.hpp"

#include <fstream>

#include <json.hpp>

#include "plangan/errors.hpp"
#include "plangan/metrics.hpp"

namespace plangan {

using ordered_json = nlohmann::ordered_json;

const char* bucket_label(Bucket b) {
    switch (b) {
        case Bucket::b1_3: return "1-3";
        case Bucket::b4_6: return "4-6";
        case Bucket::b7_9: return "7-9";
        case Bucket::b10_12: return "10-12";
        case Bucket::b13p: return "13+";
    }
    return "?";
}

std::optional<Bucket> bucket_from_label(const std::string& s) {
    for (Bucket b : {Bucket::b1_3, Bucket::b4_6, Bucket::b7_9, Bucket::b10_12, Bucket::b13p})
        if (s == bucket_label(b)) return b;
    return std::nullopt;
}

Bucket bucket_for_rooms(int rooms) {
    if (rooms <= 3) return Bucket::b1_3;
    if (rooms <= 6) return Bucket::b4_6;
    if (rooms <= 9) return Bucket::b7_9;
    if (rooms <= 12) return Bucket::b10_12;
    return Bucket::b13p;
}

namespace {

// one guillotine attempt; returns rects.size() == rooms on success
std::vector<Rect> try_split(Rng& rng, int rooms, const SynthConfig& cfg) {
    std::vector<Rect> leaves{Rect{0, 0, kCanvas, kCanvas}};
    const int need = 2 * cfg.min_side + cfg.wall;  // min extent that still splits
    while (static_cast<int>(leaves.size()) < rooms) {
        std::vector<int> splittable;
        for (size_t i = 0; i < leaves.size(); ++i)
            if (leaves[i].width() >= need || leaves[i].height() >= need)
                splittable.push_back(static_cast<int>(i));
        if (splittable.empty()) return leaves;  // stuck
        int pick = splittable[static_cast<size_t>(
            rng.uniform_int(0, static_cast<int>(splittable.size()) - 1))];
        Rect r = leaves[static_cast<size_t>(pick)];
        bool can_v = r.width() >= need;
        bool can_h = r.height() >= need;
        bool vertical = can_v && (!can_h || rng.uniform_int(0, 1) == 0);
        Rect a = r, b = r;
        if (vertical) {
            int c = static_cast<int>(rng.uniform_int(r.x0 + cfg.min_side,
                                                     r.x1 - cfg.min_side - cfg.wall));
            a.x1 = c;
            b.x0 = c + cfg.wall;
        } else {
            int c = static_cast<int>(rng.uniform_int(r.y0 + cfg.min_side,
                                                     r.y1 - cfg.min_side - cfg.wall));
            a.y1 = c;
            b.y0 = c + cfg.wall;
        }
        leaves[static_cast<size_t>(pick)] = a;
        leaves.push_back(b);
    }
    return leaves;
}

RoomType sample_room_type(Rng& rng, bool living_used) {
    if (!living_used) return static_cast<RoomType>(rng.uniform_int(0, kNumRoomTypes - 1));
    return static_cast<RoomType>(rng.uniform_int(1, kNumRoomTypes - 1));
}

}  // namespace

LayoutSample sample_floorplan(Rng& rng, int rooms, const SynthConfig& cfg) {
    if (rooms < 1) throw UnsatisfiableError(rooms);
    std::vector<Rect> rects;
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
        rects = try_split(rng, rooms, cfg);
        if (static_cast<int>(rects.size()) == rooms) break;
        rects.clear();
    }
    if (rects.empty()) throw UnsatisfiableError(rooms);

    std::vector<RoomType> types;
    bool living_used = false;
    for (int i = 0; i < rooms; ++i) {
        RoomType t = sample_room_type(rng, living_used);
        if (t == RoomType::living_room) living_used = true;
        types.push_back(t);
    }

    LayoutSample s;
    s.rects = rects;
    s.diagram = extract_bubble_diagram(rects, types);
    return s;
}

std::vector<LayoutSample> generate_dataset(Rng& rng, int count, const SynthConfig& cfg) {
    std::vector<LayoutSample> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        int rooms = static_cast<int>(rng.uniform_int(cfg.min_rooms, cfg.max_rooms));
        out.push_back(sample_floorplan(rng, rooms, cfg));
    }
    return out;
}

void write_dataset(const std::vector<LayoutSample>& samples, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for writing");
    for (const auto& s : samples) {
        ordered_json rec;
        rec["v"] = 1;
        auto rooms = ordered_json::array();
        for (RoomType t : s.diagram.room_types) rooms.push_back(static_cast<int>(t));
        rec["rooms"] = rooms;
        auto edges = ordered_json::array();
        for (const auto& [a, b] : s.diagram.edges) edges.push_back(ordered_json::array({a, b}));
        rec["edges"] = edges;
        auto rects = ordered_json::array();
        for (const Rect& r : s.rects)
            rects.push_back(ordered_json::array({r.x0, r.y0, r.x1, r.y1}));
        rec["rects"] = rects;
        f << rec.dump() << "\n";
    }
    if (!f) throw IoError("write failed for " + path);
}

std::vector<LayoutSample> read_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::vector<LayoutSample> out;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        ordered_json rec;
        try {
            rec = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw ParseError(lineno, e.what());
        }
        if (!rec.is_object() || !rec.contains("v") || !rec["v"].is_number_integer())
            throw ParseError(lineno, "missing schema version");
        if (rec["v"].get<int>() != 1) throw SchemaVersionMismatchError(rec["v"].get<int>());
        if (!rec.contains("rooms") || !rec.contains("edges") || !rec.contains("rects"))
            throw ParseError(lineno, "missing rooms/edges/rects");
        LayoutSample s;
        try {
            for (const auto& v : rec["rooms"]) {
                auto t = room_type_from_id(v.get<int>());
                if (!t) throw Error("bad room type id");
                s.diagram.room_types.push_back(*t);
            }
            for (const auto& e : rec["edges"]) {
                if (!e.is_array() || e.size() != 2) throw Error("bad edge");
                s.diagram.add_edge(e[0].get<int>(), e[1].get<int>());
            }
            for (const auto& rj : rec["rects"]) {
                if (!rj.is_array() || rj.size() != 4) throw Error("bad rect");
                Rect r{rj[0].get<int>(), rj[1].get<int>(), rj[2].get<int>(), rj[3].get<int>()};
                if (!r.valid()) throw Error("rect out of canvas");
                s.rects.push_back(r);
            }
        } catch (const std::exception& e) {
            throw ParseError(lineno, e.what());
        }
        if (auto issue = validate(s.diagram)) throw ParseError(lineno, issue->describe());
        if (s.rects.size() != s.diagram.room_types.size())
            throw ParseError(lineno, "rects/rooms length mismatch");
        out.push_back(std::move(s));
    }
    return out;
}

std::map<Bucket, DatasetSplit> bucket_split(const std::vector<LayoutSample>& samples) {
    std::map<Bucket, DatasetSplit> out;
    for (Bucket b : {Bucket::b1_3, Bucket::b4_6, Bucket::b7_9, Bucket::b10_12, Bucket::b13p})
        out[b] = DatasetSplit{b, {}};
    for (const auto& s : samples)
        out[bucket_for_rooms(s.diagram.num_rooms())].samples.push_back(s);
    return out;
}

std::vector<LayoutSample> exclude_bucket(const std::vector<LayoutSample>& samples, Bucket b) {
    std::vector<LayoutSample> out;
    for (const auto& s : samples)
        if (bucket_for_rooms(s.diagram.num_rooms()) != b) out.push_back(s);
    return out;
}

Tensor real_masks(const LayoutSample& s) {
    int m = s.diagram.num_rooms();
    Tensor out = Tensor::full({m, kCanvas * kCanvas}, -1.0);
    for (int r = 0; r < m; ++r) {
        const Rect& rect = s.rects[static_cast<size_t>(r)];
        for (int y = rect.y0; y < rect.y1; ++y)
            for (int x = rect.x0; x < rect.x1; ++x)
                out.data()[static_cast<size_t>(r) * kCanvas * kCanvas + y * kCanvas + x] = 1.0;
    }
    return out;
}

}  // namespace plangan
