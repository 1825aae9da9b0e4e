#pragma once
#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drrg/rng.hpp"
#include "drrg/topology.hpp"
#include "drrg/transport.hpp"

namespace drrg {

// Uniform real rank with the node id as tiebreak, so the order is total.
struct Rank {
    double value = 0.0;
    NodeId tiebreak = 0;

    // Lexicographic: value first, then tiebreak.
    friend constexpr auto operator<=>(const Rank&, const Rank&) = default;
};

inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

// Disjoint rooted trees covering all nodes. `roots` is sorted ascending and
// `root_index[i]` is i's position in it (kNoNode for non-roots); per-root
// vectors elsewhere in the library are aligned with `roots`.
struct Forest {
    std::size_t n = 0;
    std::vector<Rank> rank;
    std::vector<std::optional<NodeId>> parent;
    std::vector<std::vector<NodeId>> children;
    std::vector<NodeId> roots;
    std::vector<NodeId> root_of;
    std::vector<NodeId> root_index;

    bool is_root(NodeId i) const { return !parent[i].has_value(); }
    std::size_t tree_count() const { return roots.size(); }
};

// Derives children, roots and root_of from parent links. Never loops on
// malformed input: nodes on a parent cycle get root_of = kNoNode, which
// validate_forest then reports.
Forest make_forest(std::vector<Rank> rank, std::vector<std::optional<NodeId>> parent);

struct DrrOptions {
    // Replaces the default budget max(0, ceil(log2 n) - 1).
    std::optional<unsigned> probe_budget_override;
    // Meter the rank reply of a probe as its own (droppable) message.
    bool count_probe_replies = false;
};

unsigned default_probe_budget(std::size_t n);

// Distributed random ranking on the complete graph. Protocol choices (ranks,
// probe targets) come from `rng`; message loss from the sim.
Forest run_drr(NetworkSim& sim, std::size_t n, Rng& rng, const DrrOptions& options = {});

// Local-DRR: every node adopts its highest-ranked neighbor as parent, local
// maxima become roots. A lost rank exchange is repeated in the next round.
Forest run_local_drr(NetworkSim& sim, const Graph& g, Rng& rng);
// Deterministic core for a given rank assignment; the message-free part of
// run_local_drr.
Forest local_drr_from_ranks(const Graph& g, std::vector<Rank> ranks);

std::vector<Rank> draw_ranks(std::size_t n, Rng& rng);

// One entry per violated invariant; empty when the forest is valid.
std::vector<std::string> validate_forest(const Forest& f);

struct ForestStats {
    std::size_t tree_count = 0;
    std::map<std::size_t, std::size_t> size_histogram;    // tree size -> trees
    std::map<std::size_t, std::size_t> height_histogram;  // tree height -> trees
    std::size_t max_size = 0;
    std::size_t max_height = 0;

    bool operator==(const ForestStats&) const = default;
};

ForestStats forest_stats(const Forest& f);
// Per-node depth below its root (roots have depth 0).
std::vector<std::size_t> node_depths(const Forest& f);

// JSON-lines dump: one {id, rank, parent, root} record per node.
void write_forest_jsonl(std::ostream& out, const Forest& f);
void write_forest_stats_csv_header(std::ostream& out);
void write_forest_stats_csv_row(std::ostream& out, const ForestStats& s);

}  // namespace drrg
