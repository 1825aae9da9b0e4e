#include "drrg/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <CLI11.hpp>

#include "drrg/aggregation.hpp"
#include "drrg/errors.hpp"

namespace drrg {

namespace {

constexpr std::uint64_t kCrashStream = 0x637261;

std::size_t parse_size(std::string_view text, std::string_view what) {
    std::size_t v = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        throw std::invalid_argument("bad integer '" + std::string(text) + "' in " + std::string(what));
    }
    return v;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Opens `path` for writing, or hands back `fallback` for "-".
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
        if (!path.empty() && path != "-") {
            file_.open(path);
            if (!file_) throw std::runtime_error("cannot write " + path);
            out_ = &file_;
        }
    }
    std::ostream& operator*() { return *out_; }

private:
    std::ofstream file_;
    std::ostream* out_;
};

std::vector<bool> crash_mask(std::size_t n, double fraction, std::uint64_t seed) {
    if (fraction <= 0.0) return {};
    Rng rng(stream_seed(seed, kCrashStream));
    std::vector<bool> alive(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        alive[i] = !rng.bernoulli(fraction);
        any = any || alive[i];
    }
    if (!any) alive[0] = true;
    return alive;
}

void write_graph(std::ostream& out, const Graph& g) {
    out << "# " << graph_summary_json(summarize_graph(g)) << '\n';
    for (NodeId i = 0; i < g.size(); ++i) {
        g.for_each_neighbor(i, [&](NodeId j) {
            if (i < j) out << i << ' ' << j << '\n';
        });
    }
}

}  // namespace

std::string TopologySpec::str() const {
    switch (kind) {
        case GraphKind::Complete: return "complete:" + std::to_string(n);
        case GraphKind::DRegular: return "dregular:" + std::to_string(n) + "," + std::to_string(d);
        case GraphKind::Chord: return "chord:" + std::to_string(bits);
        case GraphKind::Custom: return "file:" + path;
    }
    return {};
}

TopologySpec parse_topology(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("topology needs the form kind:params");
    const auto kind = text.substr(0, colon);
    const auto params = text.substr(colon + 1);
    TopologySpec t;
    if (kind == "complete") {
        t.kind = GraphKind::Complete;
        t.n = parse_size(params, "complete:n");
        if (t.n == 0) throw std::invalid_argument("complete graph needs n >= 1");
    } else if (kind == "dregular") {
        const auto comma = params.find(',');
        if (comma == std::string_view::npos) throw std::invalid_argument("dregular topology needs n,d");
        t.kind = GraphKind::DRegular;
        t.n = parse_size(params.substr(0, comma), "dregular:n,d");
        t.d = parse_size(params.substr(comma + 1), "dregular:n,d");
    } else if (kind == "chord") {
        t.kind = GraphKind::Chord;
        const auto bits = parse_size(params, "chord:bits");
        if (bits < 1 || bits > Graph::kMaxChordBits) {
            throw std::invalid_argument("chord bits must lie in 1.." + std::to_string(Graph::kMaxChordBits));
        }
        t.bits = static_cast<unsigned>(bits);
        t.n = std::size_t{1} << t.bits;
    } else if (kind == "file") {
        t.kind = GraphKind::Custom;
        t.path = std::string(params);
        if (t.path.empty()) throw std::invalid_argument("file topology needs a path");
    } else {
        throw std::invalid_argument("unknown topology '" + std::string(kind) + "'");
    }
    return t;
}

TopologySpec topology_for_n(std::string_view text, std::size_t n) {
    if (n == 0) throw std::invalid_argument("sweep sizes must be positive");
    if (text == "complete") return parse_topology("complete:" + std::to_string(n));
    if (text == "chord") {
        if ((n & (n - 1)) != 0) throw std::invalid_argument("chord sweep sizes must be powers of two");
        unsigned bits = 0;
        while ((std::size_t{1} << bits) < n) ++bits;
        return parse_topology("chord:" + std::to_string(bits));
    }
    if (text.starts_with("dregular:") && text.find(',') == std::string_view::npos) {
        return parse_topology("dregular:" + std::to_string(n) + "," + std::string(text.substr(9)));
    }
    throw std::invalid_argument("sweep topology must be complete, chord or dregular:d");
}

std::shared_ptr<const Graph> build_topology(const TopologySpec& spec, std::uint64_t seed) {
    switch (spec.kind) {
        case GraphKind::Complete: return std::make_shared<const Graph>(build_complete(spec.n));
        case GraphKind::DRegular: return std::make_shared<const Graph>(build_d_regular(spec.n, spec.d, seed));
        case GraphKind::Chord: return std::make_shared<const Graph>(build_chord(spec.bits));
        case GraphKind::Custom: return std::make_shared<const Graph>(load_adjacency(std::filesystem::path(spec.path)));
    }
    throw std::invalid_argument("unknown topology kind");
}

void validate_spec(const ExperimentSpec& spec, bool need_protocol) {
    if (need_protocol && !spec.protocol) throw std::invalid_argument("--protocol is required");
    if (!spec.topology) throw std::invalid_argument("--topology is required");
    if (!(spec.delta >= 0.0 && spec.delta < 1.0)) throw std::invalid_argument("--delta must lie in [0, 1)");
    if (spec.trials == 0) throw std::invalid_argument("--trials must be at least 1");
    if (spec.jobs == 0) throw std::invalid_argument("--jobs must be at least 1");
    if (!(spec.tolerance >= 0.0)) throw std::invalid_argument("--tolerance must be non-negative");
    if (!(spec.crash_fraction >= 0.0 && spec.crash_fraction < 1.0)) {
        throw std::invalid_argument("--crash-fraction must lie in [0, 1)");
    }
    if (spec.budgets.c && !(*spec.budgets.c > 0.0 && *spec.budgets.c < 1.0)) {
        throw std::invalid_argument("--budget-c must lie in (0, 1)");
    }
    if (spec.budgets.alpha && !(*spec.budgets.alpha > 0.0)) throw std::invalid_argument("--budget-alpha must be positive");
    const bool gossiping = !spec.protocol || *spec.protocol == ProtocolKind::DrrGossipMax ||
                           *spec.protocol == ProtocolKind::DrrGossipAve;
    if (gossiping && !spec.budgets.gossip_rounds && !(spec.delta < 0.5)) {
        throw std::invalid_argument("default gossip budget needs --delta < 0.5; set --budget-gossip");
    }
    if (gossiping && !spec.budgets.gossip_rounds && spec.budgets.c && !(*spec.budgets.c < 0.5)) {
        throw std::invalid_argument("default gossip budget needs --budget-c < 0.5; set --budget-gossip");
    }
}

ProtocolConfig trial_config(const ExperimentSpec& spec, std::shared_ptr<const Graph> graph, std::uint64_t seed) {
    ProtocolConfig cfg;
    cfg.alive = crash_mask(graph->size(), spec.crash_fraction, seed);
    cfg.graph = std::move(graph);
    cfg.delta = spec.delta;
    cfg.seed = seed;
    cfg.budgets = spec.budgets;
    cfg.drr_mode = spec.drr_mode;
    cfg.values = spec.values;
    cfg.forward_batching = spec.forward_batching;
    cfg.count_probe_replies = spec.count_probe_replies;
    cfg.tolerance = spec.tolerance;
    cfg.debug_drop_every = spec.debug_drop_every;
    cfg.baseline_rounds = spec.baseline_rounds;
    return cfg;
}

RunMetrics to_run_metrics(const ProtocolResult& r, std::uint64_t run_id, std::uint64_t seed, double delta,
                          const std::string& topology) {
    RunMetrics m;
    m.run_id = run_id;
    m.protocol = std::string(to_string(r.protocol));
    m.topology = topology;
    m.n = r.n;
    m.delta = delta;
    m.seed = seed;
    m.phases = r.metrics;
    m.correct = r.correct;
    if (r.oracle) m.max_relative_error = r.max_relative_error;
    return m;
}

std::vector<TrialOutput> run_trials(const ExperimentSpec& spec, const TopologySpec& topology, bool keep_first_result) {
    validate_spec(spec);
    const std::string topo_name = topology.str();
    // Only d-regular graphs are random; the rest are built once.
    std::shared_ptr<const Graph> shared;
    if (topology.kind != GraphKind::DRegular) shared = build_topology(topology, spec.seed);

    const std::size_t trials = spec.trials;
    std::vector<std::optional<TrialOutput>> slots(trials);
    std::vector<std::exception_ptr> errors(trials);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next++) < trials;) {
            try {
                const std::uint64_t seed = trial_seed(spec.seed, k);
                auto graph = shared ? shared : build_topology(topology, seed);
                ProtocolConfig cfg = trial_config(spec, std::move(graph), seed);
                const bool keep = keep_first_result && k == 0;
                cfg.record_trace = keep;
                ProtocolResult r = run_protocol(*spec.protocol, cfg);
                RunMetrics m = to_run_metrics(r, k, seed, spec.delta, topo_name);
                slots[k] = TrialOutput{std::move(m), keep ? std::move(r) : ProtocolResult{}};
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(spec.jobs, trials));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<TrialOutput> out;
    out.reserve(trials);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

std::vector<CheckOutcome> run_validation(const ExperimentSpec& spec_in) {
    ExperimentSpec spec = spec_in;
    if (!spec.topology) spec.topology = "complete:64";
    validate_spec(spec, false);
    const TopologySpec topo = parse_topology(*spec.topology);

    std::map<std::string, CheckOutcome> checks;
    std::vector<std::string> order;
    auto note = [&](const std::string& name, bool ok, const std::string& detail) {
        auto [it, fresh] = checks.emplace(name, CheckOutcome{name, true, {}});
        if (fresh) order.push_back(name);
        if (!ok && it->second.passed) {
            it->second.passed = false;
            it->second.detail = detail;
        }
    };
    auto ledger = [&](const ProtocolResult& r, const std::string& what, std::size_t trial) {
        const std::string where = what + ", trial " + std::to_string(trial);
        note("ledger", r.ledger_consistent, where + ": phase meters do not sum to the sim totals");
        if (spec.delta == 0.0) {
            for (Phase p : kAllPhases) {
                const auto& m = r.metrics[p];
                note("ledger", m.messages_sent == m.messages_delivered,
                     where + ": " + std::string(to_string(p)) + " sent " + std::to_string(m.messages_sent) +
                         " but delivered " + std::to_string(m.messages_delivered) + " at delta 0");
            }
        }
    };

    for (std::size_t k = 0; k < spec.trials; ++k) {
        const std::uint64_t seed = trial_seed(spec.seed, k);
        const std::string tag = "trial " + std::to_string(k);
        auto graph = build_topology(topo, seed);
        const auto gproblems = validate_graph(*graph);
        note("graph", gproblems.empty(), tag + ": " + (gproblems.empty() ? "" : gproblems.front()));

        ProtocolConfig cfg = trial_config(spec, graph, seed);
        const DrrMode mode =
            spec.drr_mode.value_or(graph->kind() == GraphKind::Complete ? DrrMode::Sampled : DrrMode::Local);

        const ProtocolResult forest_run = run_drr_only(cfg, mode);
        note("forest", forest_run.forest_problems.empty(),
             tag + ": " + (forest_run.forest_problems.empty() ? "" : forest_run.forest_problems.front()));
        ledger(forest_run, "forest", k);

        if (forest_run.forest_problems.empty()) {
            // Convergecast against a direct per-tree scan of the same forest.
            const Forest& f = *forest_run.forest;
            std::vector<double> vals;
            for (std::size_t i = 0; i < forest_run.n; ++i) {
                if (cfg.alive.empty() || cfg.alive[i]) vals.push_back(forest_run.values[i]);
            }
            NetworkSim sim(f.n, SimConfig{spec.delta, seed, 4, true, spec.debug_drop_every});
            const RootMax mx = convergecast_max(sim, f, vals);
            const RootSums sm = convergecast_sum(sim, f, vals);
            std::vector<double> want_max(f.roots.size(), -std::numeric_limits<double>::infinity());
            std::vector<double> want_sum(f.roots.size(), 0.0), want_size(f.roots.size(), 0.0);
            for (NodeId i = 0; i < f.n; ++i) {
                const NodeId r = f.root_index[f.root_of[i]];
                want_max[r] = std::max(want_max[r], vals[i]);
                want_sum[r] += vals[i];
                want_size[r] += 1.0;
            }
            bool ok = mx.local_max == want_max && sm.size == want_size;
            for (std::size_t r = 0; ok && r < f.roots.size(); ++r) {
                ok = std::abs(sm.sum[r] - want_sum[r]) <= 1e-9 * std::max(1.0, std::abs(want_sum[r]));
            }
            note("convergecast", ok, tag + ": per-root aggregates differ from the direct scan");
        }

        if (graph->size() >= 2) {
            const ProtocolResult mx = drr_gossip_max(cfg);
            ledger(mx, "drr-gossip-max", k);
            note("max-consensus", !mx.consensus || mx.correct, tag + ": roots agree on a value that is not the maximum");

            ProtocolConfig ave_cfg = cfg;
            double s0 = 0.0, g0 = 0.0;
            bool have_start = false;
            bool conserved = true;
            std::string why;
            if (spec.delta == 0.0) {
                ave_cfg.ave_observer = [&](unsigned round, const PushSumView& v) {
                    double s = 0.0, g = 0.0;
                    for (double x : v.s) s += x;
                    for (double x : v.g) g += x;
                    if (!have_start) {
                        s0 = s;
                        g0 = g;
                        have_start = true;
                    }
                    const bool ok = std::abs(s - s0) <= 1e-9 * std::max(1.0, std::abs(s0)) &&
                                    std::abs(g - g0) <= 1e-9 * std::max(1.0, g0);
                    if (!ok && conserved) {
                        conserved = false;
                        why = tag + ": mass changed at round " + std::to_string(round);
                    }
                };
            }
            const ProtocolResult ave = drr_gossip_ave(ave_cfg);
            ledger(ave, "drr-gossip-ave", k);
            if (spec.delta == 0.0) {
                note("conservation", conserved, why);
                note("conservation", g0 == static_cast<double>(ave.alive),
                     tag + ": tree sizes do not add up to the node count");
            }
        }
    }
    std::vector<CheckOutcome> out;
    for (const auto& name : order) out.push_back(checks.at(name));
    return out;
}

namespace {

constexpr const char* kSubcommands[] = {"run", "sweep", "validate", "report"};

// Splices "key=value" lines from the --config file in right after the
// subcommand, so flags given on the command line come later and win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file");
            path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].starts_with("--config=")) {
            path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (!path) return args;

    std::ifstream in(*path);
    if (!in) throw std::runtime_error("cannot read config file " + *path);
    std::vector<std::string> injected;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw InputFormatError("expected key=value in " + *path, lineno);
        }
        injected.push_back("--" + trim(std::string_view(t).substr(0, eq)) + "=" +
                           trim(std::string_view(t).substr(eq + 1)));
    }
    auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) {
        return std::find(std::begin(kSubcommands), std::end(kSubcommands), a) != std::end(kSubcommands);
    });
    if (sub == args.end()) throw CLI::CallForHelp();
    args.insert(sub + 1, injected.begin(), injected.end());
    return args;
}

struct Options {
    std::string protocol;
    std::string topology;
    double delta = 0.0;
    std::size_t trials = 1;
    std::uint64_t seed = 1;
    std::string values = "uniform:0,1";
    std::optional<unsigned> budget_gossip, budget_sampling, budget_ave, baseline_rounds;
    std::optional<double> budget_c, budget_alpha;
    std::string drr_mode;
    double tolerance = 1e-2;
    bool no_batching = false;
    bool count_probe_replies = false;
    double crash_fraction = 0.0;
    std::uint64_t drop_every = 0;
    unsigned jobs = 1;
    std::string n_list;
    std::string out = "-";
    std::string csv;
    std::string summary = "-";
    std::string forest_out, graph_out, trace_out;
    bool no_timestamp = false;
    std::vector<std::string> files;
    std::string reference = "uniform-push-sum";
};

void add_experiment_options(CLI::App* sub, Options& o, bool with_protocol) {
    if (with_protocol) sub->add_option("--protocol", o.protocol, "drr-gossip-max | drr-gossip-ave | uniform-push-sum | drr-only | local-drr-only");
    sub->add_option("--topology", o.topology, "complete:n | dregular:n,d | chord:bits | file:path");
    sub->add_option("--delta", o.delta, "per-message loss probability");
    sub->add_option("--trials", o.trials, "number of trials");
    sub->add_option("--seed", o.seed, "base seed; trial k uses seed ^ mix64(k)");
    sub->add_option("--values", o.values, "uniform:a,b | constant:v | zipf:s");
    sub->add_option("--budget-gossip", o.budget_gossip, "gossip procedure rounds");
    sub->add_option("--budget-sampling", o.budget_sampling, "sampling procedure rounds");
    sub->add_option("--budget-ave", o.budget_ave, "push-sum rounds over the roots");
    sub->add_option("--budget-c", o.budget_c, "sampling constant c");
    sub->add_option("--budget-alpha", o.budget_alpha, "accuracy exponent alpha");
    sub->add_option("--baseline-rounds", o.baseline_rounds, "rounds of uniform push-sum");
    sub->add_option("--drr-mode", o.drr_mode, "sampled | local");
    sub->add_option("--tolerance", o.tolerance, "relative error accepted as correct");
    sub->add_flag("--no-batching", o.no_batching, "forward every relayed message separately");
    sub->add_flag("--count-probe-replies", o.count_probe_replies, "meter DRR probe replies as messages");
    sub->add_option("--crash-fraction", o.crash_fraction, "fraction of nodes crashed before each trial");
    sub->add_option("--jobs", o.jobs, "trials run in parallel");
    sub->add_option("--debug-drop-every", o.drop_every, "fault hook: drop every k-th message");
}

ExperimentSpec to_spec(const Options& o) {
    ExperimentSpec s;
    if (!o.protocol.empty()) s.protocol = protocol_from_string(o.protocol);
    if (!o.topology.empty()) s.topology = o.topology;
    s.delta = o.delta;
    s.trials = o.trials;
    s.seed = o.seed;
    s.values = parse_value_spec(o.values);
    s.budgets.gossip_rounds = o.budget_gossip;
    s.budgets.sampling_rounds = o.budget_sampling;
    s.budgets.ave_rounds = o.budget_ave;
    s.budgets.c = o.budget_c;
    s.budgets.alpha = o.budget_alpha;
    s.baseline_rounds = o.baseline_rounds;
    if (o.drr_mode == "sampled") {
        s.drr_mode = DrrMode::Sampled;
    } else if (o.drr_mode == "local") {
        s.drr_mode = DrrMode::Local;
    } else if (!o.drr_mode.empty()) {
        throw std::invalid_argument("--drr-mode must be sampled or local");
    }
    s.tolerance = o.tolerance;
    s.forward_batching = !o.no_batching;
    s.count_probe_replies = o.count_probe_replies;
    s.crash_fraction = o.crash_fraction;
    s.debug_drop_every = o.drop_every;
    s.jobs = o.jobs;
    if (!o.n_list.empty()) {
        std::stringstream in(o.n_list);
        std::string item;
        while (std::getline(in, item, ',')) s.n_list.push_back(parse_size(trim(item), "--n-list"));
    }
    return s;
}

void write_runs(const std::vector<RunMetrics>& runs, const Options& o, std::ostream& out) {
    {
        Sink sink(o.out, out);
        write_metrics_jsonl_header(*sink, o.no_timestamp ? std::string() : utc_timestamp());
        for (const auto& r : runs) write_metrics_jsonl(*sink, r);
    }
    if (!o.csv.empty()) {
        Sink sink(o.csv, out);
        write_metrics_csv_header(*sink);
        for (const auto& r : runs) write_metrics_csv(*sink, r);
    }
}

int cmd_run(const Options& o, std::ostream& out) {
    const ExperimentSpec spec = to_spec(o);
    validate_spec(spec);
    const TopologySpec topo = parse_topology(*spec.topology);
    const bool keep = !o.forest_out.empty() || !o.trace_out.empty();
    auto trials = run_trials(spec, topo, keep);

    std::vector<RunMetrics> runs;
    for (auto& t : trials) runs.push_back(std::move(t.metrics));
    write_runs(runs, o, out);

    if (!o.forest_out.empty()) {
        const auto& r = trials.front().result;
        if (!r.forest) throw std::invalid_argument("--forest-out: protocol builds no forest");
        Sink sink(o.forest_out, out);
        write_forest_jsonl(*sink, *r.forest);
    }
    if (!o.trace_out.empty()) {
        Sink sink(o.trace_out, out);
        write_push_sum_trace_csv(*sink, trials.front().result.trace);
    }
    if (!o.graph_out.empty()) {
        Sink sink(o.graph_out, out);
        write_graph(*sink, *build_topology(topo, trial_seed(spec.seed, 0)));
    }
    return 0;
}

int cmd_sweep(const Options& o, std::ostream& out) {
    const ExperimentSpec spec = to_spec(o);
    if (spec.n_list.empty()) throw CLI::ValidationError("--n-list", "sweep needs a non-empty --n-list");
    validate_spec(spec);
    std::vector<RunMetrics> runs;
    std::uint64_t next_id = 0;
    for (std::size_t n : spec.n_list) {
        const TopologySpec topo = topology_for_n(*spec.topology, n);
        for (auto& t : run_trials(spec, topo)) {
            t.metrics.run_id = next_id++;
            runs.push_back(std::move(t.metrics));
        }
    }
    if (o.out != "-") write_runs(runs, o, out);
    Sink sink(o.summary, out);
    write_summary_csv(*sink, summarize(runs));
    return 0;
}

int cmd_validate(const Options& o, std::ostream& out) {
    const auto checks = run_validation(to_spec(o));
    bool ok = true;
    for (const auto& c : checks) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name;
        if (!c.passed) out << ": " << c.detail;
        out << '\n';
        ok = ok && c.passed;
    }
    return ok ? 0 : 1;
}

int cmd_report(const Options& o, std::ostream& out) {
    std::vector<RunMetrics> runs;
    for (const auto& f : o.files) {
        auto more = read_metrics(std::filesystem::path(f));
        runs.insert(runs.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    }
    if (runs.empty()) throw std::runtime_error("no runs in the given metrics files");
    const SweepSummary summary = summarize(runs);
    const auto table = comparison_table(summary, o.reference);
    print_comparison(out, table);
    if (!o.csv.empty()) {
        Sink sink(o.csv, out);
        write_comparison_csv(*sink, table);
    }

    std::map<std::string, std::vector<std::pair<double, double>>> msgs, rounds;
    for (const auto& row : summary.rows) {
        msgs[row.protocol].emplace_back(static_cast<double>(row.n), row.messages.mean);
        rounds[row.protocol].emplace_back(static_cast<double>(row.n), row.rounds.mean);
    }
    for (const auto& [protocol, pts] : msgs) {
        if (pts.size() < 3) {
            out << "\n" << protocol << ": fewer than 3 sizes, no growth fit\n";
            continue;
        }
        out << "\n" << protocol << " growth fits (r2)\n";
        out << "  regressor          messages    rounds\n";
        for (Regressor r : kAllRegressors) {
            std::ostringstream line;
            line << "  " << std::left << std::setw(16) << to_string(r) << std::right << std::fixed
                 << std::setprecision(4);
            try {
                line << std::setw(11) << fit_growth(pts, r).r2 << std::setw(10) << fit_growth(rounds[protocol], r).r2;
            } catch (const std::invalid_argument&) {
                line << std::setw(11) << "-" << std::setw(10) << "-";
            }
            out << line.str() << '\n';
        }
    }
    return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulator for DRR-gossip aggregation and its baselines", "drrg"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    app.footer("--config FILE after the subcommand reads key=value lines (keys are flag names); flags on the\n"
               "command line win.");
    Options o;

    auto* run = app.add_subcommand("run", "run trials of one protocol and emit per-run metrics");
    add_experiment_options(run, o, true);
    run->add_option("--out", o.out, "JSON-lines metrics file (- for stdout)");
    run->add_option("--csv", o.csv, "CSV metrics file");
    run->add_option("--forest-out", o.forest_out, "JSON-lines forest of trial 0");
    run->add_option("--graph-out", o.graph_out, "edge list of the trial 0 graph");
    run->add_option("--trace-out", o.trace_out, "push-sum trace CSV of trial 0");
    run->add_flag("--no-timestamp", o.no_timestamp, "leave the timestamp out of the metrics header");

    auto* sweep = app.add_subcommand("sweep", "run trials for each size in --n-list and summarize");
    add_experiment_options(sweep, o, true);
    sweep->add_option("--n-list", o.n_list, "comma-separated sizes; topology is complete, chord or dregular:d");
    sweep->add_option("--out", o.out, "JSON-lines metrics of every run");
    sweep->add_option("--csv", o.csv, "CSV metrics of every run (needs --out)");
    sweep->add_option("--summary", o.summary, "summary CSV (- for stdout)");
    sweep->add_flag("--no-timestamp", o.no_timestamp, "leave the timestamp out of the metrics header");

    auto* validate = app.add_subcommand("validate", "run the invariant suite");
    add_experiment_options(validate, o, false);

    auto* report = app.add_subcommand("report", "comparison table and growth fits from metrics files");
    report->add_option("files", o.files, "metrics files (JSON-lines or CSV)")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    report->add_option("--csv", o.csv, "comparison table as CSV");
    report->add_option("--reference", o.reference, "protocol the ratios are taken against");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = expand_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*run) return cmd_run(o, out);
        if (*sweep) return cmd_sweep(o, out);
        if (*validate) return cmd_validate(o, out);
        return cmd_report(o, out);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace drrg
