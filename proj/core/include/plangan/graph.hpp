#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "plangan/rng.hpp"
#include "plangan/tensor.hpp"

namespace plangan {

inline constexpr int kNumRoomTypes = 10;

enum class RoomType : int {
    living_room = 0,
    kitchen,
    bedroom,
    bathroom,
    closet,
    balcony,
    corridor,
    dining_room,
    laundry_room,
    unknown,
};

const char* room_type_name(RoomType t);
std::optional<RoomType> room_type_from_id(int id);

// Labeled undirected room graph. Edges are kept once, as canonical
// (min,max) pairs; a std::set keeps iteration deterministic.
struct BubbleDiagram {
    std::vector<RoomType> room_types;
    std::set<std::pair<int, int>> edges;

    int num_rooms() const { return static_cast<int>(room_types.size()); }
    void add_edge(int i, int j);
    bool has_edge(int i, int j) const;
    std::vector<int> neighbors(int r) const;
    std::vector<int> non_neighbors(int r) const;  // excludes r itself

    bool operator==(const BubbleDiagram&) const = default;
};

struct GraphIssue {
    enum class Kind { self_loop, index_out_of_range, empty_graph };
    Kind kind;
    int i = -1;
    int j = -1;
    std::string describe() const;
};

std::optional<GraphIssue> validate(const BubbleDiagram& d);
void throw_if_invalid(const BubbleDiagram& d);

std::vector<double> one_hot(RoomType t);

struct NodeInputConfig {
    int noise_dim = 128;
    int type_dim = 10;
};

// (noise_dim + type_dim) vector: iid standard normals then the one-hot type
Tensor build_node_input(RoomType t, Rng& rng, const NodeInputConfig& cfg = {});
Tensor build_node_inputs(const BubbleDiagram& d, Rng& rng, const NodeInputConfig& cfg = {});

// Pairwise shortest-path lengths; entries are -1 for unreachable pairs and
// 0 on the diagonal.
struct WeightedAdjacency {
    std::vector<std::vector<int>> entries;
    int size() const { return static_cast<int>(entries.size()); }
    int at(int i, int j) const { return entries[static_cast<size_t>(i)][static_cast<size_t>(j)]; }
};

WeightedAdjacency shortest_path_matrix(const BubbleDiagram& d);
Tensor weighted_adjacency_tensor(const WeightedAdjacency& w);  // (M, M) doubles

}  // namespace plangan
