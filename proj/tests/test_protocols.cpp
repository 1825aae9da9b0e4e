#include <doctest.h>

#include <cmath>
#include <memory>
#include <numeric>

#include "drrg/protocols.hpp"

using namespace drrg;

namespace {

ProtocolConfig config(std::shared_ptr<const Graph> g, std::uint64_t seed, double delta = 0.0) {
    ProtocolConfig cfg;
    cfg.graph = std::move(g);
    cfg.seed = seed;
    cfg.delta = delta;
    return cfg;
}

std::shared_ptr<const Graph> complete(std::size_t n) { return std::make_shared<const Graph>(build_complete(n)); }

}  // namespace

TEST_CASE("protocol names") {
    for (auto k : {ProtocolKind::DrrGossipMax, ProtocolKind::DrrGossipAve, ProtocolKind::UniformPushSum,
                   ProtocolKind::DrrOnly, ProtocolKind::LocalDrrOnly}) {
        CHECK(protocol_from_string(to_string(k)) == k);
    }
    CHECK(to_string(ProtocolKind::DrrGossipAve) == "drr-gossip-ave");
    CHECK_THROWS_AS(protocol_from_string("gossip"), std::invalid_argument);
}

TEST_CASE("oracle aggregates") {
    const std::vector<double> v{1, 2, 3, 4};
    CHECK(oracle_aggregate(v, AggregateKind::Max) == 4);
    CHECK(oracle_aggregate(v, AggregateKind::Sum) == 10);
    CHECK(oracle_aggregate(v, AggregateKind::Ave) == 2.5);
    CHECK(oracle_aggregate(v, AggregateKind::Count) == 4);
    const std::vector<double> one{-7};
    CHECK(oracle_aggregate(one, AggregateKind::Max) == -7);
    CHECK(oracle_aggregate(one, AggregateKind::Ave) == -7);
    CHECK_THROWS_AS(oracle_aggregate(std::vector<double>{}, AggregateKind::Sum), std::invalid_argument);
}

TEST_CASE("value specs") {
    const auto u = parse_value_spec("uniform:-1,3");
    CHECK(u.kind == ValueSpec::Kind::Uniform);
    CHECK(u.a == -1);
    CHECK(u.b == 3);
    CHECK(parse_value_spec(u.str()).str() == u.str());
    CHECK(parse_value_spec("constant:2.5").a == 2.5);
    CHECK(parse_value_spec("zipf:1.2").kind == ValueSpec::Kind::Zipf);
    for (const char* bad : {"uniform", "uniform:3,1", "uniform:1", "zipf:0", "normal:0,1", "constant:x"}) {
        CHECK_THROWS_AS(parse_value_spec(bad), std::invalid_argument);
    }

    Rng rng(1);
    for (double x : generate_values(u, 1000, rng)) CHECK((x >= -1 && x <= 3));
    for (double x : generate_values(parse_value_spec("constant:2.5"), 10, rng)) CHECK(x == 2.5);
    const auto z = generate_values(parse_value_spec("zipf:1.5"), 2000, rng);
    std::size_t ones = 0;
    for (double x : z) {
        CHECK(x == std::floor(x));
        CHECK((x >= 1 && x <= 2000));
        ones += x == 1.0;
    }
    // P(1) = 1 / H(2000, 1.5), about 0.39.
    double h = 0.0;
    for (int k = 1; k <= 2000; ++k) h += std::pow(k, -1.5);
    CHECK(std::abs(static_cast<double>(ones) / 2000 - 1.0 / h) < 0.05);
}

TEST_CASE("single node") {
    for (auto k : {ProtocolKind::DrrGossipMax, ProtocolKind::DrrGossipAve, ProtocolKind::UniformPushSum}) {
        auto cfg = config(complete(1), 3);
        cfg.explicit_values = ValueAssignment{4.5};
        const auto r = run_protocol(k, cfg);
        CHECK(r.answers.front() == 4.5);
        CHECK(r.correct);
        CHECK(r.consensus);
        CHECK(r.metrics.total().messages_sent == 0);
    }
}

TEST_CASE("constant values") {
    for (auto k : {ProtocolKind::DrrGossipMax, ProtocolKind::DrrGossipAve, ProtocolKind::UniformPushSum}) {
        auto cfg = config(complete(200), 9);
        cfg.values = parse_value_spec("constant:3");
        const auto r = run_protocol(k, cfg);
        CHECK(r.oracle == 3.0);
        for (const auto& a : r.answers) CHECK(*a == doctest::Approx(3.0).epsilon(1e-9));
        CHECK(r.correct);
    }
}

TEST_CASE("DRR-gossip-max on 64 nodes") {
    int correct = 0;
    for (int t = 0; t < 50; ++t) {
        const auto r = drr_gossip_max(config(complete(64), trial_seed(1, t)));
        REQUIRE(r.forest);
        CHECK(r.forest_problems.empty());
        CHECK(r.ledger_consistent);
        CHECK(r.oracle == oracle_aggregate(r.values, AggregateKind::Max));
        correct += r.correct;
        if (r.correct) {
            CHECK(r.consensus);
            CHECK(r.max_relative_error == 0.0);
        }
        const auto& m = r.metrics;
        CHECK(m[Phase::DrrConnect].messages_sent == 64 - r.root_count);
        CHECK(m[Phase::Convergecast].messages_sent == 64 - r.root_count);
        CHECK(m[Phase::Broadcast].messages_sent == 2 * (64 - r.root_count));
        CHECK(m.total().messages_sent == m.total().messages_delivered);
    }
    CHECK(correct >= 49);
}

TEST_CASE("DRR-gossip-ave on 1024 nodes") {
    for (int t = 0; t < 5; ++t) {
        const auto r = drr_gossip_ave(config(complete(1024), trial_seed(2, t)));
        CHECK(r.correct);
        CHECK(r.max_relative_error < 1e-2);
        CHECK(r.largest_claims == 1);
        REQUIRE(r.largest_root_error);
        CHECK(*r.largest_root_error < 1e-2);
        CHECK(r.ledger_consistent);
        CHECK(r.metrics[Phase::DataSpread].messages_sent > 0);
    }
}

TEST_CASE("uniform push-sum on 1024 nodes") {
    const auto r = run_uniform_push_sum(config(complete(1024), 4));
    CHECK(r.correct);
    CHECK(r.metrics.total() == PhaseMeter{40, 40 * 1024, 40 * 1024});
    auto cfg = config(complete(1024), 4);
    cfg.baseline_rounds = 3;
    CHECK(run_uniform_push_sum(cfg).metrics.total().rounds == 3);
}

TEST_CASE("lossy runs stay consistent") {
    for (auto k : {ProtocolKind::DrrGossipMax, ProtocolKind::DrrGossipAve}) {
        const auto r = run_protocol(k, config(complete(512), 8, 0.2));
        CHECK(r.ledger_consistent);
        CHECK(r.forest_problems.empty());
        CHECK(r.metrics.total().messages_delivered < r.metrics.total().messages_sent);
    }
}

TEST_CASE("same seed, same run") {
    auto run = [] { return drr_gossip_ave(config(complete(300), 77, 0.1)); };
    const auto a = run();
    const auto b = run();
    CHECK(a.answers == b.answers);
    CHECK(a.metrics == b.metrics);
    CHECK(a.values == b.values);
    CHECK(drr_gossip_ave(config(complete(300), 78, 0.1)).values != a.values);
}

TEST_CASE("crashed nodes") {
    auto cfg = config(complete(100), 5);
    cfg.explicit_values = ValueAssignment(100);
    std::iota(cfg.explicit_values->begin(), cfg.explicit_values->end(), 0.0);
    cfg.alive.assign(100, true);
    cfg.alive[99] = false;
    cfg.alive[0] = false;
    const auto r = drr_gossip_max(cfg);
    CHECK(r.alive == 98);
    CHECK(r.oracle == 98.0);
    CHECK_FALSE(r.answers[99].has_value());
    CHECK_FALSE(r.answers[0].has_value());
    CHECK(r.values[99] == 0.0);
    CHECK(r.correct);
    CHECK(r.answers[50] == 98.0);

    cfg.alive.assign(100, false);
    CHECK_THROWS_AS(drr_gossip_max(cfg), std::invalid_argument);
    cfg.alive.assign(3, true);
    CHECK_THROWS_AS(drr_gossip_max(cfg), std::invalid_argument);

    // Crashes on a sparse overlay leave an induced subgraph.
    auto sparse = config(std::make_shared<const Graph>(build_d_regular(128, 6, 1)), 2);
    sparse.alive.assign(128, true);
    for (NodeId i = 0; i < 128; i += 9) sparse.alive[i] = false;
    const auto s = run_drr_only(sparse, DrrMode::Local);
    CHECK(s.correct);
    CHECK(s.forest->rank.size() == s.alive);
}

TEST_CASE("DRR mode selection") {
    auto chord = config(std::make_shared<const Graph>(build_chord(6)), 1);
    chord.drr_mode = DrrMode::Sampled;
    CHECK_THROWS_AS(drr_gossip_max(chord), std::invalid_argument);
    chord.drr_mode.reset();
    const auto r = drr_gossip_max(chord);
    CHECK(r.correct);
    CHECK(r.forest_problems.empty());

    const auto local = run_protocol(ProtocolKind::LocalDrrOnly, config(std::make_shared<const Graph>(build_chord(5)), 1));
    CHECK(local.correct);
    CHECK(local.metrics[Phase::DrrProbe].messages_sent == 2 * build_chord(5).edge_count());

    CHECK_THROWS_AS(drr_gossip_max(ProtocolConfig{}), std::invalid_argument);
    auto bad = config(complete(8), 1, 1.0);
    CHECK_THROWS_AS(drr_gossip_max(bad), std::invalid_argument);
}

TEST_CASE("DRR-only runs meter only phase I") {
    const auto r = run_drr_only(config(complete(256), 3), DrrMode::Sampled);
    CHECK(r.correct);
    REQUIRE(r.forest_stats);
    CHECK(r.forest_stats->tree_count == r.root_count);
    for (Phase p : kAllPhases) {
        if (p != Phase::DrrProbe && p != Phase::DrrConnect) CHECK(r.metrics[p] == PhaseMeter{});
    }
}
