#include "drrg/protocols.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace drrg {

namespace {

constexpr std::uint64_t kValueStream = 0x76616C;
constexpr std::uint64_t kProtocolStream = 0x70726F;

double parse_double(std::string_view text, std::string_view what) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw std::invalid_argument("bad number '" + std::string(text) + "' in " + std::string(what));
    }
    return v;
}

// Participants after removing crashed nodes, relabelled 0..k-1.
struct Setup {
    std::size_t n_total;
    std::vector<NodeId> members;  // compact id -> original id
    std::shared_ptr<const Graph> graph;
    ValueAssignment all_values;
    ValueAssignment values;
    NetworkSim sim;
    Rng rng;

    Setup(const ProtocolConfig& cfg, std::vector<NodeId> members_, std::shared_ptr<const Graph> graph_,
          ValueAssignment all_values_)
        : n_total(cfg.graph->size()),
          members(std::move(members_)),
          graph(std::move(graph_)),
          all_values(std::move(all_values_)),
          sim(graph, SimConfig{cfg.delta, cfg.seed, 4, cfg.forward_batching, cfg.debug_drop_every}),
          rng(stream_seed(cfg.seed, kProtocolStream)) {
        values.reserve(members.size());
        for (NodeId id : members) values.push_back(all_values[id]);
    }

    std::size_t n() const { return members.size(); }
};

std::shared_ptr<const Graph> induced(const Graph& g, const std::vector<NodeId>& members) {
    if (members.size() == g.size()) return std::make_shared<const Graph>(g);
    if (g.kind() == GraphKind::Complete) return std::make_shared<const Graph>(build_complete(members.size()));
    std::vector<NodeId> compact(g.size(), kNoNode);
    for (NodeId k = 0; k < members.size(); ++k) compact[members[k]] = k;
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId k = 0; k < members.size(); ++k) {
        g.for_each_neighbor(members[k], [&](NodeId j) {
            if (compact[j] != kNoNode && k < compact[j]) edges.emplace_back(k, compact[j]);
        });
    }
    return std::make_shared<const Graph>(graph_from_edges(members.size(), std::move(edges)));
}

Setup prepare(const ProtocolConfig& cfg) {
    if (!cfg.graph) throw std::invalid_argument("protocol config has no graph");
    const std::size_t n = cfg.graph->size();
    if (n == 0) throw std::invalid_argument("graph has no nodes");
    if (!(cfg.delta >= 0.0 && cfg.delta < 1.0)) throw std::invalid_argument("delta must lie in [0, 1)");
    if (!(cfg.tolerance >= 0.0)) throw std::invalid_argument("tolerance must be non-negative");
    if (!cfg.alive.empty() && cfg.alive.size() != n) throw std::invalid_argument("alive mask must have one entry per node");

    ValueAssignment all;
    if (cfg.explicit_values) {
        if (cfg.explicit_values->size() != n) throw std::invalid_argument("explicit values must have one entry per node");
        all = *cfg.explicit_values;
    } else {
        Rng vrng(stream_seed(cfg.seed, kValueStream));
        all = generate_values(cfg.values, n, vrng);
    }

    std::vector<NodeId> members;
    for (NodeId i = 0; i < n; ++i) {
        if (cfg.alive.empty() || cfg.alive[i]) members.push_back(i);
    }
    if (members.empty()) throw std::invalid_argument("every node is crashed");
    for (NodeId i = 0; i < n; ++i) {
        if (!cfg.alive.empty() && !cfg.alive[i]) all[i] = 0.0;
    }
    auto graph = induced(*cfg.graph, members);
    return Setup(cfg, std::move(members), std::move(graph), std::move(all));
}

DrrMode resolve_mode(const ProtocolConfig& cfg, const Graph& g) {
    const DrrMode mode = cfg.drr_mode.value_or(g.kind() == GraphKind::Complete ? DrrMode::Sampled : DrrMode::Local);
    if (mode == DrrMode::Sampled && g.kind() != GraphKind::Complete) {
        throw std::invalid_argument("sampled DRR needs a complete graph; use Local-DRR on sparse overlays");
    }
    if (mode == DrrMode::Local && !g.has_explicit_adjacency()) {
        throw std::invalid_argument("Local-DRR needs explicit adjacency");
    }
    return mode;
}

Forest build_forest(Setup& s, const ProtocolConfig& cfg, DrrMode mode) {
    if (mode == DrrMode::Sampled) {
        DrrOptions opts{cfg.probe_budget_override, cfg.count_probe_replies};
        return run_drr(s.sim, s.n(), s.rng, opts);
    }
    return run_local_drr(s.sim, *s.graph, s.rng);
}

ProtocolResult start_result(ProtocolKind kind, const Setup& s) {
    ProtocolResult r;
    r.protocol = kind;
    r.n = s.n_total;
    r.alive = s.n();
    r.values = s.all_values;
    r.answers.assign(s.n_total, std::nullopt);
    return r;
}

void record_forest(ProtocolResult& r, const Forest& f) {
    r.forest_problems = validate_forest(f);
    r.root_count = f.roots.size();
    if (r.forest_problems.empty()) r.forest_stats = forest_stats(f);
    r.forest = f;
}

void finish(ProtocolResult& r, const Setup& s) {
    r.metrics = s.sim.snapshot();
    const PhaseMeter total = r.metrics.total();
    r.ledger_consistent = total.messages_sent == s.sim.total_sent() &&
                          total.messages_delivered == s.sim.total_delivered() &&
                          total.rounds == s.sim.total_rounds();
}

double relative_error(double answer, double oracle) {
    const double diff = std::abs(answer - oracle);
    return oracle == 0.0 ? diff : diff / std::abs(oracle);
}

// Copies compact per-node answers back to original ids and scores them.
void score(ProtocolResult& r, const Setup& s, std::span<const std::optional<double>> compact, double oracle,
           double tolerance) {
    r.oracle = oracle;
    double worst = 0.0;
    bool all_answered = true;
    r.consensus = true;
    for (NodeId k = 0; k < s.n(); ++k) {
        r.answers[s.members[k]] = compact[k];
        if (!compact[k]) {
            all_answered = false;
            r.consensus = false;
            continue;
        }
        worst = std::max(worst, relative_error(*compact[k], oracle));
        if (!compact[0] || *compact[k] != *compact[0]) r.consensus = false;
    }
    r.max_relative_error = all_answered ? worst : std::numeric_limits<double>::infinity();
    r.correct = all_answered && r.max_relative_error <= tolerance;
}

}  // namespace

std::string_view to_string(ProtocolKind kind) {
    switch (kind) {
        case ProtocolKind::DrrGossipMax: return "drr-gossip-max";
        case ProtocolKind::DrrGossipAve: return "drr-gossip-ave";
        case ProtocolKind::UniformPushSum: return "uniform-push-sum";
        case ProtocolKind::DrrOnly: return "drr-only";
        case ProtocolKind::LocalDrrOnly: return "local-drr-only";
    }
    return "unknown";
}

ProtocolKind protocol_from_string(std::string_view name) {
    for (auto k : {ProtocolKind::DrrGossipMax, ProtocolKind::DrrGossipAve, ProtocolKind::UniformPushSum,
                   ProtocolKind::DrrOnly, ProtocolKind::LocalDrrOnly}) {
        if (to_string(k) == name) return k;
    }
    throw std::invalid_argument("unknown protocol '" + std::string(name) + "'");
}

double oracle_aggregate(std::span<const double> vals, AggregateKind kind) {
    if (vals.empty()) throw std::invalid_argument("oracle_aggregate: empty input");
    switch (kind) {
        case AggregateKind::Max: return *std::max_element(vals.begin(), vals.end());
        case AggregateKind::Count: return static_cast<double>(vals.size());
        case AggregateKind::Sum:
        case AggregateKind::Ave: {
            double sum = 0.0;
            for (double v : vals) sum += v;
            return kind == AggregateKind::Sum ? sum : sum / static_cast<double>(vals.size());
        }
    }
    throw std::invalid_argument("oracle_aggregate: unknown kind");
}

std::string ValueSpec::str() const {
    auto num = [](double v) {
        std::string s = std::to_string(v);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    };
    switch (kind) {
        case Kind::Uniform: return "uniform:" + num(a) + "," + num(b);
        case Kind::Constant: return "constant:" + num(a);
        case Kind::Zipf: return "zipf:" + num(a);
    }
    return {};
}

ValueSpec parse_value_spec(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("value spec needs the form kind:params");
    const auto kind = text.substr(0, colon);
    const auto params = text.substr(colon + 1);
    ValueSpec spec;
    if (kind == "uniform") {
        const auto comma = params.find(',');
        if (comma == std::string_view::npos) throw std::invalid_argument("uniform value spec needs a,b");
        spec.kind = ValueSpec::Kind::Uniform;
        spec.a = parse_double(params.substr(0, comma), "uniform:a,b");
        spec.b = parse_double(params.substr(comma + 1), "uniform:a,b");
        if (!(spec.a <= spec.b)) throw std::invalid_argument("uniform value spec needs a <= b");
    } else if (kind == "constant") {
        spec.kind = ValueSpec::Kind::Constant;
        spec.a = parse_double(params, "constant:v");
    } else if (kind == "zipf") {
        spec.kind = ValueSpec::Kind::Zipf;
        spec.a = parse_double(params, "zipf:s");
        if (!(spec.a > 0.0)) throw std::invalid_argument("zipf exponent must be positive");
    } else {
        throw std::invalid_argument("unknown value distribution '" + std::string(kind) + "'");
    }
    return spec;
}

ValueAssignment generate_values(const ValueSpec& spec, std::size_t n, Rng& rng) {
    ValueAssignment v(n);
    switch (spec.kind) {
        case ValueSpec::Kind::Uniform:
            for (auto& x : v) x = rng.uniform(spec.a, spec.b);
            break;
        case ValueSpec::Kind::Constant:
            std::fill(v.begin(), v.end(), spec.a);
            break;
        case ValueSpec::Kind::Zipf: {
            std::vector<double> cdf(n);
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) cdf[k] = (acc += std::pow(static_cast<double>(k + 1), -spec.a));
            for (auto& x : v) {
                const double u = rng.uniform01() * acc;
                const auto k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
                x = static_cast<double>(std::min(k, n - 1) + 1);
            }
            break;
        }
    }
    return v;
}

ProtocolResult drr_gossip_max(const ProtocolConfig& cfg) {
    Setup s = prepare(cfg);
    const DrrMode mode = resolve_mode(cfg, *s.graph);
    ProtocolResult r = start_result(ProtocolKind::DrrGossipMax, s);

    const Forest f = build_forest(s, cfg, mode);
    record_forest(r, f);
    const auto root_of = broadcast_down<NodeId>(s.sim, f, f.roots);
    const RootMax local = convergecast_max(s.sim, f, s.values);

    r.budgets = default_budgets(s.n(), f.roots.size(), cfg.delta, cfg.budgets);
    const auto est = gossip_max(s.sim, f, root_of, std::span<const double>(local.local_max), r.budgets, s.rng);
    const auto at_node = broadcast_down<std::optional<double>>(s.sim, f, est);

    score(r, s, at_node, oracle_aggregate(s.values, AggregateKind::Max), 0.0);
    finish(r, s);
    return r;
}

ProtocolResult drr_gossip_ave(const ProtocolConfig& cfg) {
    Setup s = prepare(cfg);
    const DrrMode mode = resolve_mode(cfg, *s.graph);
    ProtocolResult r = start_result(ProtocolKind::DrrGossipAve, s);

    const Forest f = build_forest(s, cfg, mode);
    record_forest(r, f);
    const std::size_t m = f.roots.size();
    const auto root_of = broadcast_down<NodeId>(s.sim, f, f.roots);
    const RootSums sums = convergecast_sum(s.sim, f, s.values);
    r.budgets = default_budgets(s.n(), m, cfg.delta, cfg.budgets);

    // Find the largest tree; the root id breaks size ties.
    std::vector<std::optional<TreeSizeKey>> keys(m);
    std::size_t true_largest = 0;
    for (std::size_t i = 0; i < m; ++i) {
        keys[i] = TreeSizeKey{sums.size[i], f.roots[i]};
        if (*keys[true_largest] < *keys[i]) true_largest = i;
    }
    const auto size_est =
        gossip_max(s.sim, f, root_of, std::span<const std::optional<TreeSizeKey>>(keys), r.budgets, s.rng);

    GossipAveOptions opts;
    opts.record_trace = cfg.record_trace;
    opts.observer = cfg.ave_observer;
    GossipAveResult ave = gossip_ave(s.sim, f, root_of, sums, r.budgets, s.rng, opts);

    const double oracle = oracle_aggregate(s.values, AggregateKind::Ave);
    r.largest_root_error = relative_error(ave.estimate[true_largest], oracle);

    // Every root that believes it owns the largest tree spreads its estimate.
    RootEstimates<double> sources(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (size_est[i] && size_est[i]->root == f.roots[i]) {
            sources[i] = ave.estimate[i];
            ++r.largest_claims;
        }
    }
    const auto spread = data_spread(s.sim, f, root_of, std::span<const std::optional<double>>(sources), r.budgets, s.rng);

    // A root the spread never reached keeps its own estimate.
    std::vector<std::optional<double>> final_est(m);
    for (std::size_t i = 0; i < m; ++i) final_est[i] = spread[i] ? spread[i] : std::optional<double>(ave.estimate[i]);
    const auto at_node = broadcast_down<std::optional<double>>(s.sim, f, final_est);

    score(r, s, at_node, oracle, cfg.tolerance);
    r.trace = std::move(ave.trace);
    finish(r, s);
    return r;
}

ProtocolResult run_uniform_push_sum(const ProtocolConfig& cfg) {
    Setup s = prepare(cfg);
    ProtocolResult r = start_result(ProtocolKind::UniformPushSum, s);
    const unsigned rounds = cfg.baseline_rounds.value_or(default_baseline_rounds(s.n()));
    const BaselineResult b = uniform_push_sum_baseline(s.sim, s.values, rounds, s.rng);
    std::vector<std::optional<double>> est(b.estimate.begin(), b.estimate.end());
    score(r, s, est, oracle_aggregate(s.values, AggregateKind::Ave), cfg.tolerance);
    finish(r, s);
    return r;
}

ProtocolResult run_drr_only(const ProtocolConfig& cfg, DrrMode mode) {
    Setup s = prepare(cfg);
    ProtocolConfig forced = cfg;
    forced.drr_mode = mode;
    resolve_mode(forced, *s.graph);
    ProtocolResult r = start_result(mode == DrrMode::Sampled ? ProtocolKind::DrrOnly : ProtocolKind::LocalDrrOnly, s);
    const Forest f = build_forest(s, cfg, mode);
    record_forest(r, f);
    r.correct = r.forest_problems.empty();
    finish(r, s);
    return r;
}

ProtocolResult run_protocol(ProtocolKind kind, const ProtocolConfig& cfg) {
    switch (kind) {
        case ProtocolKind::DrrGossipMax: return drr_gossip_max(cfg);
        case ProtocolKind::DrrGossipAve: return drr_gossip_ave(cfg);
        case ProtocolKind::UniformPushSum: return run_uniform_push_sum(cfg);
        case ProtocolKind::DrrOnly: return run_drr_only(cfg, DrrMode::Sampled);
        case ProtocolKind::LocalDrrOnly: return run_drr_only(cfg, DrrMode::Local);
    }
    throw std::invalid_argument("unknown protocol");
}

}  // namespace drrg
