#pragma once
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drrg/rng.hpp"

namespace drrg {

using NodeId = std::uint32_t;

enum class GraphKind { Complete, DRegular, Chord, Custom };

std::string_view to_string(GraphKind kind);

// Immutable communication graph. Complete graphs keep adjacency implicit and
// Chord rings compute fingers arithmetically; the other kinds store a sorted
// CSR neighbor list.
class Graph {
public:
    static constexpr unsigned kMaxChordBits = 24;

    std::size_t size() const noexcept { return n_; }
    GraphKind kind() const noexcept { return kind_; }
    unsigned chord_bits() const noexcept { return chord_bits_; }
    // Degree of the undirected view.
    std::size_t degree(NodeId i) const;
    std::size_t edge_count() const;
    // True when neighbors() can hand out a stored span (DRegular, Custom).
    bool stores_adjacency() const noexcept { return kind_ == GraphKind::DRegular || kind_ == GraphKind::Custom; }
    // Complete graphs have no neighbor list to hand out; Local-DRR rejects them.
    bool has_explicit_adjacency() const noexcept { return kind_ != GraphKind::Complete; }

    // Stored sorted neighbors. Only for DRegular and Custom.
    std::span<const NodeId> neighbors(NodeId i) const;
    // Sorted undirected neighbor set for any kind (materialized copy).
    std::vector<NodeId> neighbor_list(NodeId i) const;

    template <class F>
    void for_each_neighbor(NodeId i, F&& f) const {
        switch (kind_) {
            case GraphKind::Complete:
                for (NodeId j = 0; j < n_; ++j) {
                    if (j != i) f(j);
                }
                break;
            case GraphKind::Chord:
                for (NodeId j : neighbor_list(i)) f(j);
                break;
            default:
                for (NodeId j : neighbors(i)) f(j);
        }
    }

    // Chord out-finger k of node i: (i + 2^k) mod n.
    NodeId finger(NodeId i, unsigned k) const;

    bool operator==(const Graph&) const = default;

private:
    friend Graph build_complete(std::size_t n);
    friend Graph build_d_regular(std::size_t n, std::size_t d, std::uint64_t seed);
    friend Graph build_chord(unsigned bits);
    friend Graph graph_from_edges(std::size_t n, std::vector<std::pair<NodeId, NodeId>> edges, GraphKind kind);

    std::size_t n_ = 0;
    GraphKind kind_ = GraphKind::Custom;
    unsigned chord_bits_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<NodeId> targets_;
};

Graph build_complete(std::size_t n);
// Simple d-regular graph by incremental pairing of the configuration model.
Graph build_d_regular(std::size_t n, std::size_t d, std::uint64_t seed);
Graph build_chord(unsigned bits);
// Symmetrized, deduplicated adjacency from an undirected edge list.
Graph graph_from_edges(std::size_t n, std::vector<std::pair<NodeId, NodeId>> edges,
                       GraphKind kind = GraphKind::Custom);

// Reads whitespace-separated "u v" lines (0-based). Blank lines and lines
// starting with '#' are skipped.
Graph load_adjacency(std::istream& in);
Graph load_adjacency(const std::filesystem::path& path);

// Empty when the graph satisfies symmetry, simplicity, and (for DRegular)
// regularity.
std::vector<std::string> validate_graph(const Graph& g);

struct GraphSummary {
    GraphKind kind;
    std::size_t n;
    std::size_t edges;
    std::size_t degree_min;
    std::size_t degree_max;
};

GraphSummary summarize_graph(const Graph& g);
// One JSON-lines record {kind, n, edges, degree_min, degree_max}.
std::string graph_summary_json(const GraphSummary& s);

struct RouteResult {
    NodeId destination;
    unsigned hops;
    unsigned messages_used;
};

// Greedy clockwise finger routing on a Chord ring: every step takes the
// farthest finger that does not pass the target. Includes both endpoints.
std::vector<NodeId> chord_path(const Graph& g, NodeId src, NodeId dst);
RouteResult chord_route(const Graph& g, NodeId src, NodeId dst);

// Draws a uniform destination and routes to it. Chord: uniform ring id
// (possibly src itself) then greedy routing. Complete: one direct hop to a
// uniform node other than src.
RouteResult route_to_random(const Graph& g, NodeId src, Rng& rng);

}  // namespace drrg
