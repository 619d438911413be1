#include "plangan/graph.hpp"

#include <algorithm>
#include <deque>

#include "plangan/errors.hpp"

namespace plangan {

const char* room_type_name(RoomType t) {
    switch (t) {
        case RoomType::living_room: return "living room";
        case RoomType::kitchen: return "kitchen";
        case RoomType::bedroom: return "bedroom";
        case RoomType::bathroom: return "bathroom";
        case RoomType::closet: return "closet";
        case RoomType::balcony: return "balcony";
        case RoomType::corridor: return "corridor";
        case RoomType::dining_room: return "dining room";
        case RoomType::laundry_room: return "laundry room";
        case RoomType::unknown: return "unknown";
    }
    return "invalid";
}

std::optional<RoomType> room_type_from_id(int id) {
    if (id < 0 || id >= kNumRoomTypes) return std::nullopt;
    return static_cast<RoomType>(id);
}

void BubbleDiagram::add_edge(int i, int j) {
    edges.insert({std::min(i, j), std::max(i, j)});
}

bool BubbleDiagram::has_edge(int i, int j) const {
    return edges.count({std::min(i, j), std::max(i, j)}) > 0;
}

std::vector<int> BubbleDiagram::neighbors(int r) const {
    std::vector<int> out;
    for (const auto& [a, b] : edges) {
        if (a == r) out.push_back(b);
        else if (b == r) out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> BubbleDiagram::non_neighbors(int r) const {
    std::vector<int> out;
    for (int i = 0; i < num_rooms(); ++i)
        if (i != r && !has_edge(r, i)) out.push_back(i);
    return out;
}

std::string GraphIssue::describe() const {
    switch (kind) {
        case Kind::self_loop: return "self loop at node " + std::to_string(i);
        case Kind::index_out_of_range:
            return "edge (" + std::to_string(i) + "," + std::to_string(j) + ") out of range";
        case Kind::empty_graph: return "diagram has no rooms";
    }
    return "";
}

std::optional<GraphIssue> validate(const BubbleDiagram& d) {
    if (d.num_rooms() == 0)
        return GraphIssue{GraphIssue::Kind::empty_graph};
    int m = d.num_rooms();
    for (const auto& [a, b] : d.edges) {
        if (a < 0 || a >= m || b < 0 || b >= m)
            return GraphIssue{GraphIssue::Kind::index_out_of_range, a, b};
        if (a == b)
            return GraphIssue{GraphIssue::Kind::self_loop, a, b};
    }
    return std::nullopt;
}

void throw_if_invalid(const BubbleDiagram& d) {
    if (auto issue = validate(d)) throw Error("invalid diagram: " + issue->describe());
}

std::vector<double> one_hot(RoomType t) {
    std::vector<double> v(kNumRoomTypes, 0.0);
    v[static_cast<size_t>(static_cast<int>(t))] = 1.0;
    return v;
}

Tensor build_node_input(RoomType t, Rng& rng, const NodeInputConfig& cfg) {
    Tensor out({cfg.noise_dim + cfg.type_dim});
    for (int i = 0; i < cfg.noise_dim; ++i) out[i] = rng.normal();
    auto oh = one_hot(t);
    for (int i = 0; i < cfg.type_dim && i < kNumRoomTypes; ++i) out[cfg.noise_dim + i] = oh[static_cast<size_t>(i)];
    return out;
}

Tensor build_node_inputs(const BubbleDiagram& d, Rng& rng, const NodeInputConfig& cfg) {
    int m = d.num_rooms();
    Tensor out({m, cfg.noise_dim + cfg.type_dim});
    for (int r = 0; r < m; ++r) {
        Tensor row = build_node_input(d.room_types[static_cast<size_t>(r)], rng, cfg);
        std::copy(row.data(), row.data() + row.size(),
                  out.data() + static_cast<size_t>(r) * row.size());
    }
    return out;
}

WeightedAdjacency shortest_path_matrix(const BubbleDiagram& d) {
    int m = d.num_rooms();
    std::vector<std::vector<int>> adj(static_cast<size_t>(m));
    for (const auto& [a, b] : d.edges) {
        adj[static_cast<size_t>(a)].push_back(b);
        adj[static_cast<size_t>(b)].push_back(a);
    }
    WeightedAdjacency w;
    w.entries.assign(static_cast<size_t>(m), std::vector<int>(static_cast<size_t>(m), -1));
    for (int s = 0; s < m; ++s) {
        auto& dist = w.entries[static_cast<size_t>(s)];
        dist[static_cast<size_t>(s)] = 0;
        std::deque<int> q{s};
        while (!q.empty()) {
            int u = q.front();
            q.pop_front();
            for (int v : adj[static_cast<size_t>(u)]) {
                if (dist[static_cast<size_t>(v)] == -1) {
                    dist[static_cast<size_t>(v)] = dist[static_cast<size_t>(u)] + 1;
                    q.push_back(v);
                }
            }
        }
    }
    return w;
}

Tensor weighted_adjacency_tensor(const WeightedAdjacency& w) {
    int m = w.size();
    Tensor t({m, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) t.at(i, j) = static_cast<double>(w.at(i, j));
    return t;
}

}  // namespace plangan
