#include "drrg/gossip.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace drrg {

namespace {

unsigned ceil_nonneg(double x) { return x <= 0.0 ? 0u : static_cast<unsigned>(std::ceil(x - 1e-12)); }

template <class T>
void fold_max(std::optional<T>& into, const std::optional<T>& other) {
    if (other && (!into || *into < *other)) into = other;
}

Payload encode(const std::optional<double>& v) {
    return v ? Payload{value_field(*v)} : Payload{};
}

Payload encode(const std::optional<TreeSizeKey>& v) {
    return v ? Payload{count_field(v->size), node_field(v->root)} : Payload{};
}

void check_inputs(const NetworkSim& sim, const Forest& f, std::span<const NodeId> root_of, std::size_t per_root) {
    if (sim.size() != f.n) throw std::invalid_argument("sim size does not match forest");
    if (root_of.size() != f.n) throw std::invalid_argument("root_of must cover every node");
    if (per_root != f.roots.size()) throw std::invalid_argument("initial values must cover every root");
}

template <class T>
RootEstimates<T> max_gossip(NetworkSim& sim, const Forest& f, std::span<const NodeId> root_of,
                            std::span<const std::optional<T>> init, const GossipBudgets& budgets, Rng& rng,
                            Phase gossip_phase, Phase sample_phase,
                            const std::function<void(unsigned, const RootEstimates<T>&)>& observer) {
    check_inputs(sim, f, root_of, init.size());
    RootEstimates<T> est(init.begin(), init.end());
    const std::size_t m = f.roots.size();
    unsigned t = 0;
    if (observer) observer(t, est);

    // Gossip procedure: push the current value to the root of a uniform node.
    for (unsigned k = 0; k < budgets.gossip_rounds; ++k) {
        ScopedRound round(sim, gossip_phase);
        RootEstimates<T> next = est;
        for (std::size_t r = 0; r < m; ++r) {
            const NodeId src = f.roots[r];
            const NodeId target = sim.sample_peer(src, rng);
            const auto out = sim.two_hop_root_send(round, src, target, root_of, encode(est[r]));
            if (out.delivered_to_root) fold_max(next[f.root_index[out.root]], est[r]);
        }
        est = std::move(next);
        if (observer) observer(++t, est);
    }

    // Sampling procedure: inquire at the root of a uniform node, which
    // answers directly with its value.
    for (unsigned k = 0; k < budgets.sampling_rounds; ++k) {
        ScopedRound round(sim, sample_phase);
        RootEstimates<T> next = est;
        for (std::size_t r = 0; r < m; ++r) {
            const NodeId src = f.roots[r];
            const NodeId target = sim.sample_peer(src, rng);
            const auto inquiry =
                sim.two_hop_root_send(round, src, target, root_of, Payload{node_field(src)}, /*batchable=*/false);
            if (!inquiry.delivered_to_root || inquiry.root == src) continue;
            const std::size_t answering = f.root_index[inquiry.root];
            const auto reply =
                sim.route(round, Message{inquiry.root, src, encode(est[answering])}, CallKind::Reply, inquiry.hops);
            if (reply.delivered) fold_max(next[r], est[answering]);
        }
        est = std::move(next);
        if (observer) observer(++t, est);
    }
    return est;
}

}  // namespace

GossipBudgets default_budgets(std::size_t n, std::size_t m, double delta, const BudgetOverrides& overrides) {
    if (n == 0) throw std::invalid_argument("budgets need n >= 1");
    GossipBudgets b;
    b.c = overrides.c.value_or(0.25);
    b.alpha = overrides.alpha.value_or(1.0);
    if (!(b.c > 0.0 && b.c < 1.0)) throw std::invalid_argument("c must lie in (0, 1)");
    if (!(b.alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    const double log_n = std::log2(static_cast<double>(n));

    if (overrides.gossip_rounds) {
        b.gossip_rounds = *overrides.gossip_rounds;
    } else {
        if (!(delta < 0.5)) throw std::invalid_argument("default gossip budget needs delta < 1/2");
        if (!(b.c < 0.5)) throw std::invalid_argument("default gossip budget needs c < 1/2");
        const double beta = 1.0 + (1.0 - 2.0 * b.c) * (1.0 - 2.0 * delta) / 2.0;
        b.gossip_rounds = ceil_nonneg(8.0 * log_n / (1.0 - 2.0 * delta)) +
                          ceil_nonneg(std::log(static_cast<double>(n)) / std::log(beta));
    }
    b.sampling_rounds = overrides.sampling_rounds.value_or(ceil_nonneg(log_n / b.c));
    const double log_m = m > 0 ? std::log2(static_cast<double>(m)) : 0.0;
    b.ave_rounds = overrides.ave_rounds.value_or(ceil_nonneg(log_m + 2.0 * b.alpha * log_n));
    return b;
}

RootEstimates<double> gossip_max(NetworkSim& sim, const Forest& f, std::span<const NodeId> root_of,
                                 std::span<const std::optional<double>> init, const GossipBudgets& budgets,
                                 Rng& rng, const MaxObserver& observer) {
    std::function<void(unsigned, const RootEstimates<double>&)> hook;
    if (observer) hook = [&](unsigned t, const RootEstimates<double>& e) { observer(t, e); };
    return max_gossip<double>(sim, f, root_of, init, budgets, rng, Phase::GossipMax, Phase::GossipSample, hook);
}

RootEstimates<double> gossip_max(NetworkSim& sim, const Forest& f, std::span<const NodeId> root_of,
                                 std::span<const double> init, const GossipBudgets& budgets, Rng& rng) {
    RootEstimates<double> wrapped(init.begin(), init.end());
    return gossip_max(sim, f, root_of, std::span<const std::optional<double>>(wrapped), budgets, rng);
}

RootEstimates<TreeSizeKey> gossip_max(NetworkSim& sim, const Forest& f, std::span<const NodeId> root_of,
                                      std::span<const std::optional<TreeSizeKey>> init,
                                      const GossipBudgets& budgets, Rng& rng) {
    return max_gossip<TreeSizeKey>(sim, f, root_of, init, budgets, rng, Phase::GossipMax, Phase::GossipSample, {});
}

RootEstimates<double> data_spread(NetworkSim& sim, const Forest& f, std::span<const NodeId> root_of,
                                  std::span<const std::optional<double>> init, const GossipBudgets& budgets,
                                  Rng& rng) {
    return max_gossip<double>(sim, f, root_of, init, budgets, rng, Phase::DataSpread, Phase::DataSpread, {});
}

RootEstimates<double> data_spread(NetworkSim& sim, const Forest& f, std::span<const NodeId> root_of,
                                  NodeId source_root, double value, const GossipBudgets& budgets, Rng& rng) {
    if (source_root >= f.n || !f.is_root(source_root)) throw std::invalid_argument("data_spread source must be a root");
    RootEstimates<double> init(f.roots.size());
    init[f.root_index[source_root]] = value;
    return data_spread(sim, f, root_of, std::span<const std::optional<double>>(init), budgets, rng);
}

GossipAveResult gossip_ave(NetworkSim& sim, const Forest& f, std::span<const NodeId> root_of, const RootSums& init,
                           const GossipBudgets& budgets, Rng& rng, const GossipAveOptions& options) {
    check_inputs(sim, f, root_of, init.sum.size());
    if (init.size.size() != init.sum.size()) throw std::invalid_argument("sum and size vectors differ in length");
    for (double g : init.size) {
        if (!(g > 0.0)) throw std::invalid_argument("gossip_ave needs positive initial weights");
    }
    const std::size_t m = f.roots.size();
    GossipAveResult res;
    res.s = init.sum;
    res.g = init.size;
    res.w.assign(m, 1.0);

    auto record = [&](unsigned t) {
        if (options.record_trace) {
            for (std::size_t r = 0; r < m; ++r) res.trace.push_back({t, f.roots[r], res.s[r], res.g[r]});
        }
        if (options.observer) options.observer(t, PushSumView{res.s, res.g, res.w});
    };
    record(0);

    std::vector<double> ns(m), ng(m), nw(m);
    for (unsigned t = 1; t <= budgets.ave_rounds; ++t) {
        ScopedRound round(sim, Phase::GossipAve);
        for (std::size_t r = 0; r < m; ++r) {
            ns[r] = res.s[r] / 2.0;
            ng[r] = res.g[r] / 2.0;
            nw[r] = res.w[r] / 2.0;
        }
        for (std::size_t r = 0; r < m; ++r) {
            const NodeId src = f.roots[r];
            const NodeId target = sim.sample_peer(src, rng);
            const double hs = res.s[r] / 2.0;
            const double hg = res.g[r] / 2.0;
            const double hw = res.w[r] / 2.0;
            const auto out = sim.two_hop_root_send(round, src, target, root_of,
                                                   Payload{value_field(hs), count_field(hg), value_field(hw)});
            if (!out.delivered_to_root) continue;
            const std::size_t into = f.root_index[out.root];
            ns[into] += hs;
            ng[into] += hg;
            nw[into] += hw;
        }
        std::swap(res.s, ns);
        std::swap(res.g, ng);
        std::swap(res.w, nw);
        record(t);
    }
    res.estimate.resize(m);
    for (std::size_t r = 0; r < m; ++r) res.estimate[r] = res.s[r] / res.g[r];
    return res;
}

void write_push_sum_trace_csv(std::ostream& out, std::span<const PushSumTraceRow> trace) {
    out << "round,root,s,g,estimate\n";
    for (const auto& row : trace) {
        out << row.round << ',' << row.root << ',' << row.s << ',' << row.g << ',' << row.s / row.g << '\n';
    }
}

unsigned default_baseline_rounds(std::size_t n) {
    return n <= 1 ? 0u : ceil_nonneg(4.0 * std::log2(static_cast<double>(n)));
}

BaselineResult uniform_push_sum_baseline(NetworkSim& sim, std::span<const double> values, unsigned rounds, Rng& rng) {
    const std::size_t n = values.size();
    if (n == 0) throw std::invalid_argument("baseline needs n >= 1");
    if (sim.size() != n) throw std::invalid_argument("sim size does not match values");
    BaselineResult res;
    res.s.assign(values.begin(), values.end());
    res.w.assign(n, 1.0);
    std::vector<double> ns(n), nw(n);
    for (unsigned t = 0; t < rounds; ++t) {
        ScopedRound round(sim, Phase::Baseline);
        for (std::size_t i = 0; i < n; ++i) {
            ns[i] = res.s[i] / 2.0;
            nw[i] = res.w[i] / 2.0;
        }
        for (NodeId i = 0; i < n; ++i) {
            const NodeId target = sim.sample_peer(i, rng);
            const double hs = res.s[i] / 2.0;
            const double hw = res.w[i] / 2.0;
            const auto out = sim.route(round, Message{i, target, Payload{value_field(hs), count_field(hw)}});
            if (!out.delivered) continue;
            ns[target] += hs;
            nw[target] += hw;
        }
        std::swap(res.s, ns);
        std::swap(res.w, nw);
    }
    res.estimate.resize(n);
    for (std::size_t i = 0; i < n; ++i) res.estimate[i] = res.s[i] / res.w[i];
    return res;
}

PotentialTrace track_push_sum_potential(std::size_t m, std::span<const double> tree_sizes, double delta,
                                        std::size_t trials, unsigned rounds, std::uint64_t seed) {
    if (m != tree_sizes.size()) throw std::invalid_argument("m does not match the number of tree sizes");
    if (m < 2) throw std::invalid_argument("potential tracking needs m >= 2");
    if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in [0, 1)");
    double n = 0.0;
    for (double g : tree_sizes) {
        if (!(g > 0.0)) throw std::invalid_argument("tree sizes must be positive");
        n += g;
    }
    // Cumulative selection distribution over roots.
    std::vector<double> cdf(m);
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) cdf[i] = (acc += tree_sizes[i] / n);
    cdf.back() = 1.0;

    const double md = static_cast<double>(m);
    auto potential = [&](const std::vector<double>& y, const std::vector<double>& w) {
        double phi = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double mean = w[i] / md;
            for (std::size_t j = 0; j < m; ++j) {
                const double d = y[i * m + j] - mean;
                phi += d * d;
            }
        }
        return phi;
    };

    PotentialTrace out;
    out.mean_ratio.assign(rounds, 0.0);
    out.samples.assign(rounds, 0);
    Rng rng(stream_seed(seed, 0x706869u));
    std::vector<double> y(m * m), w(m), ny(m * m), nw(m);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::fill(y.begin(), y.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) y[i * m + i] = 1.0;
        std::fill(w.begin(), w.end(), 1.0);
        double phi = potential(y, w);
        out.phi0 = phi;
        for (unsigned t = 0; t < rounds; ++t) {
            for (std::size_t k = 0; k < m * m; ++k) ny[k] = y[k] / 2.0;
            for (std::size_t i = 0; i < m; ++i) nw[i] = w[i] / 2.0;
            for (std::size_t k = 0; k < m; ++k) {
                const double u = rng.uniform01();
                const auto target = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
                if (delta > 0.0 && rng.bernoulli(delta)) continue;
                const std::size_t into = std::min(target, m - 1);
                for (std::size_t j = 0; j < m; ++j) ny[into * m + j] += y[k * m + j] / 2.0;
                nw[into] += w[k] / 2.0;
            }
            std::swap(y, ny);
            std::swap(w, nw);
            const double next = potential(y, w);
            if (phi > 0.0) {
                out.mean_ratio[t] += next / phi;
                ++out.samples[t];
            }
            phi = next;
        }
    }
    for (unsigned t = 0; t < rounds; ++t) {
        if (out.samples[t] > 0) out.mean_ratio[t] /= static_cast<double>(out.samples[t]);
    }
    return out;
}

double expected_potential_contraction(std::span<const double> tree_sizes) {
    double n = 0.0;
    for (double g : tree_sizes) n += g;
    if (!(n > 0.0)) throw std::invalid_argument("tree sizes must sum to a positive total");
    double sum_sq = 0.0;
    for (double g : tree_sizes) sum_sq += (g / n) * (g / n);
    return 0.5 - 0.25 * sum_sq;
}

}  // namespace drrg
