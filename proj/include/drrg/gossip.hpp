#pragma once
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "drrg/aggregation.hpp"
#include "drrg/drr.hpp"
#include "drrg/rng.hpp"
#include "drrg/transport.hpp"

namespace drrg {

struct GossipBudgets {
    unsigned gossip_rounds = 0;
    unsigned sampling_rounds = 0;
    double c = 0.25;
    unsigned ave_rounds = 0;
    double alpha = 1.0;
};

struct BudgetOverrides {
    std::optional<unsigned> gossip_rounds;
    std::optional<unsigned> sampling_rounds;
    std::optional<unsigned> ave_rounds;
    std::optional<double> c;
    std::optional<double> alpha;
};

// Round budgets for n nodes, m roots and loss probability delta (L = log2 n):
//   gossip   = ceil(8 L / (1 - 2 delta)) + ceil(log_beta n),
//              beta = 1 + (1 - 2c)(1 - 2 delta) / 2
//   sampling = ceil(L / c)
//   ave      = ceil(log2 m + 2 alpha L)
// Overrides replace individual entries; the formulas need delta < 1/2 and
// c < 1/2 unless the dependent budget is overridden.
GossipBudgets default_budgets(std::size_t n, std::size_t m, double delta, const BudgetOverrides& overrides = {});

// Tree size with the root id as tiebreak; the largest key names exactly one
// root.
struct TreeSizeKey {
    double size = 0.0;
    NodeId root = 0;

    friend constexpr auto operator<=>(const TreeSizeKey&, const TreeSizeKey&) = default;
};

// Per-root estimates aligned with Forest::roots; nullopt is "no value yet"
// (minus infinity for Data-spread).
template <class T>
using RootEstimates = std::vector<std::optional<T>>;

using MaxObserver = std::function<void(unsigned round, std::span<const std::optional<double>> estimates)>;

// Gossip-max: gossip procedure then sampling procedure. `root_of` is the
// root address each node learned in Phase II. The observer, if set, sees the
// estimates after every round (round 0 = init).
RootEstimates<double> gossip_max(NetworkSim& sim, const Forest& f, std::span<const NodeId> root_of,
                                 std::span<const std::optional<double>> init, const GossipBudgets& budgets,
                                 Rng& rng, const MaxObserver& observer = {});
RootEstimates<double> gossip_max(NetworkSim& sim, const Forest& f, std::span<const NodeId> root_of,
                                 std::span<const double> init, const GossipBudgets& budgets, Rng& rng);
RootEstimates<TreeSizeKey> gossip_max(NetworkSim& sim, const Forest& f, std::span<const NodeId> root_of,
                                      std::span<const std::optional<TreeSizeKey>> init,
                                      const GossipBudgets& budgets, Rng& rng);

// Gossip-max seeded with `value` at source_root and nothing elsewhere,
// metered as DataSpread.
RootEstimates<double> data_spread(NetworkSim& sim, const Forest& f, std::span<const NodeId> root_of,
                                  NodeId source_root, double value, const GossipBudgets& budgets, Rng& rng);
// Several competing sources: each listed root starts with its value.
RootEstimates<double> data_spread(NetworkSim& sim, const Forest& f, std::span<const NodeId> root_of,
                                  std::span<const std::optional<double>> init, const GossipBudgets& budgets,
                                  Rng& rng);

struct PushSumView {
    std::span<const double> s;
    std::span<const double> g;
    std::span<const double> w;
};

using PushSumObserver = std::function<void(unsigned round, const PushSumView& state)>;

struct PushSumTraceRow {
    unsigned round;
    NodeId root;
    double s;
    double g;
};

struct GossipAveResult {
    std::vector<double> estimate;  // s / g per root
    std::vector<double> s;
    std::vector<double> g;
    std::vector<double> w;  // dummy weights, start at 1
    std::vector<PushSumTraceRow> trace;
};

struct GossipAveOptions {
    bool record_trace = false;
    PushSumObserver observer;  // called at round 0 and after every round
};

// Push-sum over the roots: each round every root keeps half of (s, g, w) and
// sends the other half to the root of a uniform node. Lost halves are lost.
GossipAveResult gossip_ave(NetworkSim& sim, const Forest& f, std::span<const NodeId> root_of, const RootSums& init,
                           const GossipBudgets& budgets, Rng& rng, const GossipAveOptions& options = {});

void write_push_sum_trace_csv(std::ostream& out, std::span<const PushSumTraceRow> trace);

struct BaselineResult {
    std::vector<double> estimate;  // s / w per node
    std::vector<double> s;
    std::vector<double> w;
};

// Classic push-sum on all n nodes: one Baseline message per node per round.
BaselineResult uniform_push_sum_baseline(NetworkSim& sim, std::span<const double> values, unsigned rounds, Rng& rng);

// Rounds the baseline runs by default: ceil(4 log2 n).
unsigned default_baseline_rounds(std::size_t n);

struct PotentialTrace {
    double phi0 = 0.0;
    // mean_ratio[t] = mean over trials of Phi_{t+1} / Phi_t (trials with
    // Phi_t > 0 only); samples[t] counts them.
    std::vector<double> mean_ratio;
    std::vector<std::size_t> samples;
};

// Instrumented push-sum on m roots tracking full contribution vectors. Each
// root's half goes to root i with probability size_i / n and is lost with
// probability delta. Phi_t = sum_{i,j} (y_{t,i,j} - w_{t,i}/m)^2.
PotentialTrace track_push_sum_potential(std::size_t m, std::span<const double> tree_sizes, double delta,
                                        std::size_t trials, unsigned rounds, std::uint64_t seed);

// E[Phi_{t+1} | Phi_t] / Phi_t for lossless push-sum when every root
// targets root i with probability p_i: 1/2 - (1/4) sum p_i^2.
double expected_potential_contraction(std::span<const double> tree_sizes);

}  // namespace drrg
