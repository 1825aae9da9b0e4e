#include "drrg/drr.hpp"

#include <algorithm>
#include <bit>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace drrg {

namespace {

NodeId uniform_other(std::size_t n, NodeId self, Rng& rng) {
    auto u = static_cast<NodeId>(rng.below(n - 1));
    return u >= self ? u + 1 : u;
}

}  // namespace

Forest make_forest(std::vector<Rank> rank, std::vector<std::optional<NodeId>> parent) {
    if (rank.size() != parent.size()) throw std::invalid_argument("rank and parent sizes differ");
    Forest f;
    f.n = rank.size();
    f.rank = std::move(rank);
    f.parent = std::move(parent);
    f.children.assign(f.n, {});
    f.root_of.assign(f.n, kNoNode);
    f.root_index.assign(f.n, kNoNode);

    for (NodeId i = 0; i < f.n; ++i) {
        if (!f.parent[i]) {
            f.root_index[i] = static_cast<NodeId>(f.roots.size());
            f.roots.push_back(i);
            f.root_of[i] = i;
        } else if (*f.parent[i] < f.n) {
            f.children[*f.parent[i]].push_back(i);
        }
    }

    // Resolve root_of by walking parent chains; 0 = unvisited, 1 = on the
    // current walk, 2 = resolved.
    std::vector<std::uint8_t> state(f.n, 0);
    for (NodeId r : f.roots) state[r] = 2;
    std::vector<NodeId> path;
    for (NodeId start = 0; start < f.n; ++start) {
        if (state[start] == 2) continue;
        path.clear();
        NodeId cur = start;
        NodeId resolved = kNoNode;
        while (true) {
            if (state[cur] == 2) {
                resolved = f.root_of[cur];
                break;
            }
            if (state[cur] == 1) break;  // cycle
            state[cur] = 1;
            path.push_back(cur);
            const NodeId next = *f.parent[cur];
            if (next >= f.n || next == cur) break;
            cur = next;
        }
        for (NodeId v : path) {
            f.root_of[v] = resolved;
            state[v] = 2;
        }
    }
    return f;
}

unsigned default_probe_budget(std::size_t n) {
    if (n <= 2) return 0;
    // ceil(log2 n) == bit_width(n - 1) for n >= 1.
    return static_cast<unsigned>(std::bit_width(n - 1)) - 1;
}

std::vector<Rank> draw_ranks(std::size_t n, Rng& rng) {
    std::vector<Rank> ranks(n);
    for (NodeId i = 0; i < n; ++i) ranks[i] = Rank{rng.uniform01(), i};
    return ranks;
}

Forest run_drr(NetworkSim& sim, std::size_t n, Rng& rng, const DrrOptions& options) {
    if (n == 0) throw std::invalid_argument("run_drr needs n >= 1");
    if (sim.size() != n) throw std::invalid_argument("sim size does not match n");

    std::vector<Rank> ranks = draw_ranks(n, rng);
    std::vector<std::optional<NodeId>> parent(n);
    const unsigned budget = options.probe_budget_override.value_or(default_probe_budget(n));

    std::vector<NodeId> searching;
    if (n > 1) {
        searching.resize(n);
        for (NodeId i = 0; i < n; ++i) searching[i] = i;
    }
    for (unsigned k = 0; k < budget && !searching.empty(); ++k) {
        ScopedRound round(sim, Phase::DrrProbe);
        std::vector<NodeId> still;
        still.reserve(searching.size());
        for (NodeId i : searching) {
            const NodeId u = uniform_other(n, i, rng);
            bool learned = sim.send(round, Message{i, u, Payload{node_field(i)}});
            if (learned && options.count_probe_replies) {
                learned = sim.send(round, Message{u, i, Payload{rank_field(ranks[u].value), node_field(u)}},
                                   CallKind::Reply);
            }
            if (learned && ranks[u] > ranks[i]) {
                parent[i] = u;
            } else {
                still.push_back(i);
            }
        }
        searching = std::move(still);
    }

    std::vector<NodeId> pending;
    for (NodeId i = 0; i < n; ++i) {
        if (parent[i]) pending.push_back(i);
    }
    while (!pending.empty()) {
        ScopedRound round(sim, Phase::DrrConnect);
        std::vector<NodeId> retry;
        for (NodeId i : pending) {
            if (!sim.send(round, Message{i, *parent[i], Payload{node_field(i)}})) retry.push_back(i);
        }
        pending = std::move(retry);
    }
    return make_forest(std::move(ranks), std::move(parent));
}

Forest local_drr_from_ranks(const Graph& g, std::vector<Rank> ranks) {
    if (ranks.size() != g.size()) throw std::invalid_argument("rank count does not match graph");
    std::vector<std::optional<NodeId>> parent(g.size());
    for (NodeId i = 0; i < g.size(); ++i) {
        const Rank* best = &ranks[i];
        NodeId best_id = i;
        g.for_each_neighbor(i, [&](NodeId j) {
            if (ranks[j] > *best) {
                best = &ranks[j];
                best_id = j;
            }
        });
        if (best_id != i) parent[i] = best_id;
    }
    return make_forest(std::move(ranks), std::move(parent));
}

Forest run_local_drr(NetworkSim& sim, const Graph& g, Rng& rng) {
    if (!g.has_explicit_adjacency()) throw std::invalid_argument("Local-DRR needs explicit adjacency; use run_drr");
    if (sim.size() != g.size()) throw std::invalid_argument("sim size does not match graph");

    std::vector<Rank> ranks = draw_ranks(g.size(), rng);

    // Every node announces its rank to every neighbor; lost announcements are
    // repeated until each node knows all of its neighbors' ranks.
    std::vector<std::pair<NodeId, NodeId>> pending;
    for (NodeId i = 0; i < g.size(); ++i) {
        g.for_each_neighbor(i, [&](NodeId j) { pending.emplace_back(i, j); });
    }
    while (!pending.empty()) {
        ScopedRound round(sim, Phase::DrrProbe);
        std::vector<std::pair<NodeId, NodeId>> retry;
        for (auto [i, j] : pending) {
            if (!sim.send(round, Message{i, j, Payload{rank_field(ranks[i].value), node_field(i)}},
                          CallKind::Neighbor)) {
                retry.emplace_back(i, j);
            }
        }
        pending = std::move(retry);
    }
    return local_drr_from_ranks(g, std::move(ranks));
}

std::vector<std::string> validate_forest(const Forest& f) {
    std::vector<std::string> problems;
    const std::size_t n = f.n;
    if (f.rank.size() != n || f.parent.size() != n || f.children.size() != n || f.root_of.size() != n ||
        f.root_index.size() != n) {
        problems.emplace_back("per-node arrays do not all have n entries");
        return problems;
    }
    auto id = [](std::size_t v) { return std::to_string(v); };

    std::vector<std::vector<NodeId>> expected_children(n);
    std::vector<NodeId> expected_roots;
    for (NodeId i = 0; i < n; ++i) {
        if (!f.parent[i]) {
            expected_roots.push_back(i);
            if (f.root_of[i] != i) problems.push_back("root " + id(i) + " has root_of " + id(f.root_of[i]));
            continue;
        }
        const NodeId p = *f.parent[i];
        if (p >= n) {
            problems.push_back("node " + id(i) + " has out-of-range parent " + id(p));
            continue;
        }
        if (p == i) problems.push_back("node " + id(i) + " is its own parent");
        expected_children[p].push_back(i);
        if (!(f.rank[p] > f.rank[i])) {
            problems.push_back("rank order violated on edge " + id(i) + " -> " + id(p));
        }
        if (f.root_of[i] == kNoNode) {
            problems.push_back("acyclicity violated: parent chain of " + id(i) + " never reaches a root");
        } else if (f.root_of[i] != f.root_of[p]) {
            problems.push_back("root_of of " + id(i) + " disagrees with its parent");
        }
    }
    if (expected_roots != f.roots) problems.emplace_back("root set does not match parentless nodes");
    for (std::size_t r = 0; r < f.roots.size() && r < n; ++r) {
        if (f.roots[r] < n && f.root_index[f.roots[r]] != r) {
            problems.push_back("root_index of " + id(f.roots[r]) + " is stale");
        }
    }
    for (NodeId i = 0; i < n; ++i) {
        auto have = f.children[i];
        std::sort(have.begin(), have.end());
        if (have != expected_children[i]) problems.push_back("children of " + id(i) + " are not the inverse of parent links");
    }
    return problems;
}

std::vector<std::size_t> node_depths(const Forest& f) {
    std::vector<std::size_t> depth(f.n, 0);
    std::vector<std::uint8_t> done(f.n, 0);
    std::vector<NodeId> path;
    for (NodeId start = 0; start < f.n; ++start) {
        path.clear();
        NodeId cur = start;
        while (!done[cur] && f.parent[cur] && path.size() <= f.n) {
            path.push_back(cur);
            cur = *f.parent[cur];
        }
        done[cur] = 1;
        std::size_t d = depth[cur];
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            depth[*it] = ++d;
            done[*it] = 1;
        }
    }
    return depth;
}

ForestStats forest_stats(const Forest& f) {
    ForestStats s;
    s.tree_count = f.roots.size();
    const auto depth = node_depths(f);
    std::vector<std::size_t> size(f.roots.size(), 0);
    std::vector<std::size_t> height(f.roots.size(), 0);
    for (NodeId i = 0; i < f.n; ++i) {
        const NodeId slot = f.root_index[f.root_of[i]];
        ++size[slot];
        height[slot] = std::max(height[slot], depth[i]);
    }
    for (std::size_t r = 0; r < f.roots.size(); ++r) {
        ++s.size_histogram[size[r]];
        ++s.height_histogram[height[r]];
        s.max_size = std::max(s.max_size, size[r]);
        s.max_height = std::max(s.max_height, height[r]);
    }
    return s;
}

void write_forest_jsonl(std::ostream& out, const Forest& f) {
    for (NodeId i = 0; i < f.n; ++i) {
        nlohmann::ordered_json j;
        j["id"] = i;
        j["rank"] = f.rank[i].value;
        j["parent"] = f.parent[i] ? nlohmann::ordered_json(*f.parent[i]) : nlohmann::ordered_json(nullptr);
        j["root"] = f.root_of[i];
        out << j.dump() << '\n';
    }
}

void write_forest_stats_csv_header(std::ostream& out) { out << "n,tree_count,max_size,max_height,mean_size\n"; }

void write_forest_stats_csv_row(std::ostream& out, const ForestStats& s) {
    std::size_t n = 0;
    for (auto [size, count] : s.size_histogram) n += size * count;
    const double mean = s.tree_count ? static_cast<double>(n) / static_cast<double>(s.tree_count) : 0.0;
    out << n << ',' << s.tree_count << ',' << s.max_size << ',' << s.max_height << ',' << mean << '\n';
}

}  // namespace drrg
