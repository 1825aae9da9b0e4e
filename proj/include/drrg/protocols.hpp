#pragma once
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drrg/aggregation.hpp"
#include "drrg/drr.hpp"
#include "drrg/gossip.hpp"
#include "drrg/topology.hpp"
#include "drrg/transport.hpp"

namespace drrg {

enum class ProtocolKind { DrrGossipMax, DrrGossipAve, UniformPushSum, DrrOnly, LocalDrrOnly };

// "drr-gossip-max", "drr-gossip-ave", "uniform-push-sum", "drr-only", "local-drr-only".
std::string_view to_string(ProtocolKind kind);
ProtocolKind protocol_from_string(std::string_view name);

enum class DrrMode { Sampled, Local };

enum class AggregateKind { Max, Sum, Ave, Count };

// Direct single pass over the values. Throws std::invalid_argument on empty input.
double oracle_aggregate(std::span<const double> vals, AggregateKind kind);

// Distribution of node values: "uniform:a,b", "constant:v" or "zipf:s"
// (integer values in 1..n with P(k) proportional to k^-s).
struct ValueSpec {
    enum class Kind { Uniform, Constant, Zipf };
    Kind kind = Kind::Uniform;
    double a = 0.0;
    double b = 1.0;

    std::string str() const;
};

ValueSpec parse_value_spec(std::string_view text);
ValueAssignment generate_values(const ValueSpec& spec, std::size_t n, Rng& rng);

struct ProtocolConfig {
    std::shared_ptr<const Graph> graph;
    double delta = 0.0;
    std::uint64_t seed = 0;
    BudgetOverrides budgets;
    // Default: Sampled on complete graphs, Local otherwise. Sampled needs a
    // complete graph, Local needs explicit adjacency.
    std::optional<DrrMode> drr_mode;
    ValueSpec values;
    // Replaces the generated values when set (one per node).
    std::optional<ValueAssignment> explicit_values;
    // Empty means every node is alive. Crashed nodes hold no value, take no
    // part and get no answer.
    std::vector<bool> alive;
    bool forward_batching = true;
    bool count_probe_replies = false;
    std::optional<unsigned> probe_budget_override;
    // Relative error below which an Ave/Sum answer counts as correct. Max
    // answers must be exact.
    double tolerance = 1e-2;
    std::uint64_t debug_drop_every = 0;
    std::optional<unsigned> baseline_rounds;
    PushSumObserver ave_observer;
    bool record_trace = false;
};

struct ProtocolResult {
    ProtocolKind protocol = ProtocolKind::DrrOnly;
    std::size_t n = 0;      // nodes in the graph
    std::size_t alive = 0;  // nodes that took part
    ValueAssignment values;                      // per node; crashed nodes hold 0
    std::vector<std::optional<double>> answers;  // per node
    std::optional<double> oracle;
    MeterSnapshot metrics;
    // Phase meters summed to the sim's own running totals.
    bool ledger_consistent = true;
    std::optional<Forest> forest;  // compact ids when nodes crashed
    std::optional<ForestStats> forest_stats;
    std::vector<std::string> forest_problems;
    std::size_t root_count = 0;
    GossipBudgets budgets;
    // Every alive node holds the same answer.
    bool consensus = false;
    double max_relative_error = 0.0;
    // Ave only: the true largest root's push-sum estimate before spreading.
    std::optional<double> largest_root_error;
    // Ave only: roots that concluded they own the largest tree.
    std::size_t largest_claims = 0;
    bool correct = false;
    std::vector<PushSumTraceRow> trace;
};

// DRR (or Local-DRR), root-address broadcast, convergecast of the maximum,
// Gossip-max over the roots, broadcast of the result.
ProtocolResult drr_gossip_max(const ProtocolConfig& cfg);
// DRR, root-address broadcast, convergecast of (sum, size), Gossip-max on
// (size, root id) to find the largest tree, Gossip-ave, Data-spread of the
// largest root's estimate, broadcast of the result.
ProtocolResult drr_gossip_ave(const ProtocolConfig& cfg);
// Push-sum on all nodes with one uniform push per node per round.
ProtocolResult run_uniform_push_sum(const ProtocolConfig& cfg);
// Phase I only; `correct` means the forest passed validation.
ProtocolResult run_drr_only(const ProtocolConfig& cfg, DrrMode mode);

ProtocolResult run_protocol(ProtocolKind kind, const ProtocolConfig& cfg);

}  // namespace drrg
