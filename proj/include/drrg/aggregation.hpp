#pragma once
#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "drrg/drr.hpp"
#include "drrg/transport.hpp"

namespace drrg {

// Per-node data values v_i.
using ValueAssignment = std::vector<double>;

// Per-root Phase II results, aligned with Forest::roots.
struct RootMax {
    std::vector<double> local_max;
};

struct RootSums {
    std::vector<double> sum;   // s: sum of values in the tree
    std::vector<double> size;  // g: number of nodes in the tree
};

// Level-synchronous convergecast: a node reports to its parent once every
// child has reported, and a lost report is resent the next round. Delivery is
// acknowledged within the same exchange, so a retried report never counts
// twice. Throws ModelViolation if the forest is invalid.
RootMax convergecast_max(NetworkSim& sim, const Forest& f, std::span<const double> values);
RootSums convergecast_sum(NetworkSim& sim, const Forest& f, std::span<const double> values);

// Root-to-leaf dissemination, one Broadcast message per tree edge (retried
// when lost). Returns, for every node, the order in which it received the
// payload from its parent; roots are not listed.
std::vector<NodeId> broadcast_schedule(NetworkSim& sim, const Forest& f);

// Copies each root's payload to every member of its tree along the
// broadcast schedule.
template <class T>
std::vector<T> broadcast_down(NetworkSim& sim, const Forest& f, std::span<const T> per_root) {
    if (per_root.size() != f.roots.size()) throw std::invalid_argument("payload must cover every root");
    std::vector<T> at_node(f.n);
    for (std::size_t r = 0; r < f.roots.size(); ++r) at_node[f.roots[r]] = per_root[r];
    for (NodeId i : broadcast_schedule(sim, f)) at_node[i] = at_node[*f.parent[i]];
    return at_node;
}

// CSV rows "root_id,max" / "root_id,s,g".
void write_root_max_csv(std::ostream& out, const Forest& f, const RootMax& agg);
void write_root_sums_csv(std::ostream& out, const Forest& f, const RootSums& agg);

}  // namespace drrg
