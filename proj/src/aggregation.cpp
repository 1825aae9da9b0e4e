#include "drrg/aggregation.hpp"

#include <algorithm>
#include <ostream>

#include "drrg/errors.hpp"

namespace drrg {

namespace {

void require_valid(const Forest& f, std::size_t value_count) {
    const auto problems = validate_forest(f);
    if (!problems.empty()) throw ModelViolation("invalid forest: " + problems.front());
    if (value_count != f.n) throw std::invalid_argument("values must cover every node");
}

// Shared leaf-to-root schedule. `report(i)` builds node i's payload,
// `absorb(parent, child)` folds a delivered report into the parent.
template <class Report, class Absorb>
void convergecast(NetworkSim& sim, const Forest& f, Report report, Absorb absorb) {
    std::vector<std::size_t> waiting(f.n);
    std::vector<NodeId> ready;
    for (NodeId i = 0; i < f.n; ++i) {
        waiting[i] = f.children[i].size();
        if (waiting[i] == 0 && !f.is_root(i)) ready.push_back(i);
    }
    while (!ready.empty()) {
        ScopedRound round(sim, Phase::Convergecast);
        std::vector<NodeId> next;
        for (NodeId i : ready) {
            const NodeId p = *f.parent[i];
            if (!sim.send(round, Message{i, p, report(i)}, CallKind::TreeLink)) {
                next.push_back(i);
                continue;
            }
            absorb(p, i);
            if (--waiting[p] == 0 && !f.is_root(p)) next.push_back(p);
        }
        std::sort(next.begin(), next.end());
        ready = std::move(next);
    }
}

}  // namespace

RootMax convergecast_max(NetworkSim& sim, const Forest& f, std::span<const double> values) {
    require_valid(f, values.size());
    std::vector<double> running(values.begin(), values.end());
    convergecast(
        sim, f, [&](NodeId i) { return Payload{value_field(running[i])}; },
        [&](NodeId p, NodeId c) { running[p] = std::max(running[p], running[c]); });
    RootMax out;
    out.local_max.reserve(f.roots.size());
    for (NodeId r : f.roots) out.local_max.push_back(running[r]);
    return out;
}

RootSums convergecast_sum(NetworkSim& sim, const Forest& f, std::span<const double> values) {
    require_valid(f, values.size());
    std::vector<double> sum(values.begin(), values.end());
    std::vector<double> count(f.n, 1.0);
    convergecast(
        sim, f, [&](NodeId i) { return Payload{value_field(sum[i]), count_field(count[i])}; },
        [&](NodeId p, NodeId c) {
            sum[p] += sum[c];
            count[p] += count[c];
            // Reset once the parent holds the contribution.
            sum[c] = 0.0;
            count[c] = 0.0;
        });
    RootSums out;
    out.sum.reserve(f.roots.size());
    out.size.reserve(f.roots.size());
    for (NodeId r : f.roots) {
        out.sum.push_back(sum[r]);
        out.size.push_back(count[r]);
    }
    return out;
}

std::vector<NodeId> broadcast_schedule(NetworkSim& sim, const Forest& f) {
    const auto problems = validate_forest(f);
    if (!problems.empty()) throw ModelViolation("invalid forest: " + problems.front());
    std::vector<NodeId> order;
    order.reserve(f.n - f.roots.size());
    std::vector<NodeId> pending;
    for (NodeId r : f.roots) pending.insert(pending.end(), f.children[r].begin(), f.children[r].end());
    while (!pending.empty()) {
        ScopedRound round(sim, Phase::Broadcast);
        std::vector<NodeId> next;
        for (NodeId c : pending) {
            if (!sim.send(round, Message{*f.parent[c], c, Payload{node_field(f.root_of[c])}}, CallKind::TreeLink)) {
                next.push_back(c);
                continue;
            }
            order.push_back(c);
            next.insert(next.end(), f.children[c].begin(), f.children[c].end());
        }
        pending = std::move(next);
    }
    return order;
}

void write_root_max_csv(std::ostream& out, const Forest& f, const RootMax& agg) {
    out << "root_id,max\n";
    for (std::size_t r = 0; r < f.roots.size(); ++r) out << f.roots[r] << ',' << agg.local_max[r] << '\n';
}

void write_root_sums_csv(std::ostream& out, const Forest& f, const RootSums& agg) {
    out << "root_id,s,g\n";
    for (std::size_t r = 0; r < f.roots.size(); ++r) {
        out << f.roots[r] << ',' << agg.sum[r] << ',' << agg.size[r] << '\n';
    }
}

}  // namespace drrg
