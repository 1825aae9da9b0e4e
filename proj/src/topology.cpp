#include "drrg/topology.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "drrg/errors.hpp"

namespace drrg {

namespace {

constexpr std::size_t kRegularRestarts = 1000;

}  // namespace

std::string_view to_string(GraphKind kind) {
    switch (kind) {
        case GraphKind::Complete: return "complete";
        case GraphKind::DRegular: return "dregular";
        case GraphKind::Chord: return "chord";
        case GraphKind::Custom: return "custom";
    }
    return "unknown";
}

std::size_t Graph::degree(NodeId i) const {
    if (i >= n_) throw std::out_of_range("node id out of range");
    switch (kind_) {
        case GraphKind::Complete: return n_ - 1;
        case GraphKind::Chord: return neighbor_list(i).size();
        default: return offsets_[i + 1] - offsets_[i];
    }
}

std::size_t Graph::edge_count() const {
    switch (kind_) {
        case GraphKind::Complete: return n_ * (n_ - 1) / 2;
        case GraphKind::Chord: {
            std::size_t sum = 0;
            for (NodeId i = 0; i < n_; ++i) sum += neighbor_list(i).size();
            return sum / 2;
        }
        default: return targets_.size() / 2;
    }
}

std::span<const NodeId> Graph::neighbors(NodeId i) const {
    if (!stores_adjacency()) throw std::invalid_argument("graph kind has no stored adjacency");
    if (i >= n_) throw std::out_of_range("node id out of range");
    return {targets_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
}

std::vector<NodeId> Graph::neighbor_list(NodeId i) const {
    if (i >= n_) throw std::out_of_range("node id out of range");
    std::vector<NodeId> out;
    switch (kind_) {
        case GraphKind::Complete:
            out.reserve(n_ - 1);
            for (NodeId j = 0; j < n_; ++j) {
                if (j != i) out.push_back(j);
            }
            break;
        case GraphKind::Chord: {
            const NodeId mask = static_cast<NodeId>(n_ - 1);
            out.reserve(2 * chord_bits_);
            for (unsigned k = 0; k < chord_bits_; ++k) {
                out.push_back((i + (NodeId{1} << k)) & mask);
                out.push_back((i - (NodeId{1} << k)) & mask);
            }
            std::sort(out.begin(), out.end());
            out.erase(std::unique(out.begin(), out.end()), out.end());
            break;
        }
        default: {
            auto span = neighbors(i);
            out.assign(span.begin(), span.end());
        }
    }
    return out;
}

NodeId Graph::finger(NodeId i, unsigned k) const {
    if (kind_ != GraphKind::Chord) throw std::invalid_argument("fingers exist only on chord graphs");
    if (i >= n_ || k >= chord_bits_) throw std::out_of_range("finger index out of range");
    return (i + (NodeId{1} << k)) & static_cast<NodeId>(n_ - 1);
}

Graph build_complete(std::size_t n) {
    if (n == 0) throw std::invalid_argument("complete graph needs n >= 1");
    if (n > std::numeric_limits<NodeId>::max()) throw std::invalid_argument("n exceeds NodeId range");
    Graph g;
    g.n_ = n;
    g.kind_ = GraphKind::Complete;
    return g;
}

Graph graph_from_edges(std::size_t n, std::vector<std::pair<NodeId, NodeId>> edges, GraphKind kind) {
    std::vector<std::pair<NodeId, NodeId>> directed;
    directed.reserve(edges.size() * 2);
    for (auto [u, v] : edges) {
        if (u >= n || v >= n) throw std::invalid_argument("edge endpoint out of range");
        if (u == v) throw std::invalid_argument("self-loop at node " + std::to_string(u));
        directed.emplace_back(u, v);
        directed.emplace_back(v, u);
    }
    std::sort(directed.begin(), directed.end());
    directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

    Graph g;
    g.n_ = n;
    g.kind_ = kind;
    g.offsets_.assign(n + 1, 0);
    for (auto [u, v] : directed) ++g.offsets_[u + 1];
    for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
    g.targets_.reserve(directed.size());
    for (auto [u, v] : directed) g.targets_.push_back(v);
    return g;
}

Graph build_d_regular(std::size_t n, std::size_t d, std::uint64_t seed) {
    if (d < 1 || d >= n) throw std::invalid_argument("d-regular graph needs 1 <= d < n");
    if ((n * d) % 2 != 0) throw std::invalid_argument("n*d must be even");
    if (n > std::numeric_limits<NodeId>::max()) throw std::invalid_argument("n exceeds NodeId range");

    Rng rng(stream_seed(seed, 0x7265677Bu));
    std::vector<std::vector<NodeId>> adj(n);
    std::vector<NodeId> stubs;

    auto adjacent = [&](NodeId u, NodeId v) {
        const auto& a = adj[u].size() <= adj[v].size() ? adj[u] : adj[v];
        const NodeId other = adj[u].size() <= adj[v].size() ? v : u;
        return std::find(a.begin(), a.end(), other) != a.end();
    };
    // Any admissible pair left among the remaining stubs?
    auto pairable = [&]() {
        std::vector<NodeId> owners(stubs);
        std::sort(owners.begin(), owners.end());
        owners.erase(std::unique(owners.begin(), owners.end()), owners.end());
        for (std::size_t a = 0; a < owners.size(); ++a) {
            for (std::size_t b = a + 1; b < owners.size(); ++b) {
                if (!adjacent(owners[a], owners[b])) return true;
            }
        }
        return false;
    };

    for (std::size_t attempt = 0; attempt < kRegularRestarts; ++attempt) {
        for (auto& a : adj) a.clear();
        stubs.clear();
        stubs.reserve(n * d);
        for (NodeId i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < d; ++k) stubs.push_back(i);
        }
        bool stuck = false;
        std::size_t misses = 0;
        while (!stubs.empty()) {
            const std::size_t a = rng.below(stubs.size());
            std::size_t b = rng.below(stubs.size() - 1);
            if (b >= a) ++b;
            const NodeId u = stubs[a];
            const NodeId v = stubs[b];
            if (u == v || adjacent(u, v)) {
                if (++misses > 64 + 4 * stubs.size()) {
                    if (!pairable()) {
                        stuck = true;
                        break;
                    }
                    misses = 0;
                }
                continue;
            }
            misses = 0;
            adj[u].push_back(v);
            adj[v].push_back(u);
            // Remove the higher index first so the lower one stays valid.
            for (std::size_t idx : {std::max(a, b), std::min(a, b)}) {
                stubs[idx] = stubs.back();
                stubs.pop_back();
            }
        }
        if (stuck) continue;

        std::vector<std::pair<NodeId, NodeId>> edges;
        edges.reserve(n * d / 2);
        for (NodeId u = 0; u < n; ++u) {
            for (NodeId v : adj[u]) {
                if (u < v) edges.emplace_back(u, v);
            }
        }
        return graph_from_edges(n, std::move(edges), GraphKind::DRegular);
    }
    throw ConstructionFailure("d-regular construction did not produce a simple graph", kRegularRestarts);
}

Graph build_chord(unsigned bits) {
    if (bits < 1 || bits > Graph::kMaxChordBits) throw std::invalid_argument("chord bits must be in [1, 24]");
    Graph g;
    g.n_ = std::size_t{1} << bits;
    g.kind_ = GraphKind::Chord;
    g.chord_bits_ = bits;
    return g;
}

Graph load_adjacency(std::istream& in) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::size_t max_id = 0;
    bool any = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        long long u = 0;
        long long v = 0;
        std::string extra;
        if (!(fields >> u >> v)) throw InputFormatError("expected two integer node ids", lineno);
        if (fields >> extra) throw InputFormatError("unexpected trailing token '" + extra + "'", lineno);
        if (u < 0 || v < 0) throw InputFormatError("negative node id", lineno);
        if (u > std::numeric_limits<NodeId>::max() - 1 || v > std::numeric_limits<NodeId>::max() - 1) {
            throw InputFormatError("node id too large", lineno);
        }
        if (u == v) throw InputFormatError("self-loop at node " + std::to_string(u), lineno);
        edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
        max_id = std::max<std::size_t>(max_id, static_cast<std::size_t>(std::max(u, v)));
        any = true;
    }
    if (!any) throw InputFormatError("no edges in input", lineno);
    return graph_from_edges(max_id + 1, std::move(edges), GraphKind::Custom);
}

Graph load_adjacency(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open edge list " + path.string());
    return load_adjacency(in);
}

std::vector<std::string> validate_graph(const Graph& g) {
    std::vector<std::string> problems;
    if (!g.stores_adjacency() && g.kind() != GraphKind::Chord) return problems;
    const std::size_t n = g.size();
    std::vector<std::vector<NodeId>> lists(n);
    for (NodeId i = 0; i < n; ++i) lists[i] = g.neighbor_list(i);
    for (NodeId i = 0; i < n; ++i) {
        const auto& nb = lists[i];
        for (std::size_t k = 0; k < nb.size(); ++k) {
            const NodeId j = nb[k];
            if (j == i) problems.push_back("self-loop at " + std::to_string(i));
            if (k > 0 && nb[k - 1] >= j) problems.push_back("unsorted or duplicate neighbor at " + std::to_string(i));
            if (j >= n) {
                problems.push_back("neighbor out of range at " + std::to_string(i));
                continue;
            }
            if (!std::binary_search(lists[j].begin(), lists[j].end(), i)) {
                problems.push_back("asymmetric edge " + std::to_string(i) + "->" + std::to_string(j));
            }
        }
    }
    if (g.kind() == GraphKind::DRegular && n > 0) {
        const std::size_t d = lists[0].size();
        for (NodeId i = 0; i < n; ++i) {
            if (lists[i].size() != d) {
                problems.push_back("node " + std::to_string(i) + " has degree " + std::to_string(lists[i].size()) +
                                   ", expected " + std::to_string(d));
            }
        }
    }
    return problems;
}

GraphSummary summarize_graph(const Graph& g) {
    GraphSummary s{g.kind(), g.size(), g.edge_count(), 0, 0};
    if (g.kind() == GraphKind::Complete) {
        s.degree_min = s.degree_max = g.size() - 1;
        return s;
    }
    s.degree_min = std::numeric_limits<std::size_t>::max();
    for (NodeId i = 0; i < g.size(); ++i) {
        const std::size_t d = g.degree(i);
        s.degree_min = std::min(s.degree_min, d);
        s.degree_max = std::max(s.degree_max, d);
    }
    return s;
}

std::string graph_summary_json(const GraphSummary& s) {
    nlohmann::ordered_json j;
    j["kind"] = std::string(to_string(s.kind));
    j["n"] = s.n;
    j["edges"] = s.edges;
    j["degree_min"] = s.degree_min;
    j["degree_max"] = s.degree_max;
    return j.dump();
}

std::vector<NodeId> chord_path(const Graph& g, NodeId src, NodeId dst) {
    if (g.kind() != GraphKind::Chord) throw std::invalid_argument("chord routing needs a chord graph");
    if (src >= g.size() || dst >= g.size()) throw std::out_of_range("node id out of range");
    const NodeId mask = static_cast<NodeId>(g.size() - 1);
    std::vector<NodeId> path{src};
    NodeId cur = src;
    while (cur != dst) {
        const NodeId remaining = (dst - cur) & mask;
        // Farthest finger that does not overshoot the target.
        unsigned k = g.chord_bits();
        while (k > 0 && (NodeId{1} << (k - 1)) > remaining) --k;
        cur = g.finger(cur, k - 1);
        path.push_back(cur);
    }
    return path;
}

RouteResult chord_route(const Graph& g, NodeId src, NodeId dst) {
    const auto hops = static_cast<unsigned>(chord_path(g, src, dst).size() - 1);
    return {dst, hops, hops};
}

RouteResult route_to_random(const Graph& g, NodeId src, Rng& rng) {
    if (src >= g.size()) throw std::out_of_range("node id out of range");
    switch (g.kind()) {
        case GraphKind::Chord: {
            const auto target = static_cast<NodeId>(rng.below(g.size()));
            return chord_route(g, src, target);
        }
        case GraphKind::Complete: {
            if (g.size() == 1) return {src, 0, 0};
            auto target = static_cast<NodeId>(rng.below(g.size() - 1));
            if (target >= src) ++target;
            return {target, 1, 1};
        }
        default:
            throw std::invalid_argument("route_to_random supports chord and complete graphs only");
    }
}

}  // namespace drrg
