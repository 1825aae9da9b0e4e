#pragma once
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drrg/metrics.hpp"
#include "drrg/protocols.hpp"
#include "drrg/topology.hpp"

namespace drrg {

// "complete:n", "dregular:n,d", "chord:bits" or "file:path".
struct TopologySpec {
    GraphKind kind = GraphKind::Complete;
    std::size_t n = 0;
    std::size_t d = 0;
    unsigned bits = 0;
    std::string path;

    std::string str() const;
};

TopologySpec parse_topology(std::string_view text);
// Sweep form: "complete", "chord" or "dregular:d", resized to n nodes.
TopologySpec topology_for_n(std::string_view text, std::size_t n);
std::shared_ptr<const Graph> build_topology(const TopologySpec& spec, std::uint64_t seed);

struct ExperimentSpec {
    std::optional<ProtocolKind> protocol;
    std::optional<std::string> topology;
    double delta = 0.0;
    std::size_t trials = 1;
    std::uint64_t seed = 1;
    ValueSpec values;
    BudgetOverrides budgets;
    std::optional<unsigned> baseline_rounds;
    std::optional<DrrMode> drr_mode;
    double tolerance = 1e-2;
    bool forward_batching = true;
    bool count_probe_replies = false;
    // Fraction of nodes crashed before each trial.
    double crash_fraction = 0.0;
    std::uint64_t debug_drop_every = 0;
    unsigned jobs = 1;
    std::vector<std::size_t> n_list;
};

// Throws std::invalid_argument describing the first bad field.
void validate_spec(const ExperimentSpec& spec, bool need_protocol = true);

// Trial k of a batch: seed trial_seed(spec.seed, k), run id k.
ProtocolConfig trial_config(const ExperimentSpec& spec, std::shared_ptr<const Graph> graph, std::uint64_t seed);
RunMetrics to_run_metrics(const ProtocolResult& r, std::uint64_t run_id, std::uint64_t seed, double delta,
                          const std::string& topology);

struct TrialOutput {
    RunMetrics metrics;
    ProtocolResult result;
};

// Runs spec.trials trials on `topology`, up to spec.jobs at a time. Output
// order is trial order. Only trial 0 keeps its full ProtocolResult (with a
// push-sum trace) when keep_first_result is set; the rest keep metrics.
std::vector<TrialOutput> run_trials(const ExperimentSpec& spec, const TopologySpec& topology,
                                    bool keep_first_result = false);

struct CheckOutcome {
    std::string name;
    bool passed;
    std::string detail;
};

// Invariant suite: graph and forest validation, convergecast against the
// direct oracle, phase ledger against the sim totals (and sent = delivered at
// delta 0), push-sum conservation at delta 0, and consensus implying the
// right Max.
std::vector<CheckOutcome> run_validation(const ExperimentSpec& spec);

// Entry point behind the drrg tool. Returns the process exit code:
// 0 success, 1 check failure, 2 usage or input error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace drrg
