#include <doctest.h>

#include <sstream>

#include "drrg/aggregation.hpp"
#include "drrg/errors.hpp"

using namespace drrg;

namespace {

Forest hand_forest(std::vector<double> ranks, std::vector<std::optional<NodeId>> parent) {
    std::vector<Rank> r;
    for (NodeId i = 0; i < ranks.size(); ++i) r.push_back(Rank{ranks[i], i});
    return make_forest(std::move(r), std::move(parent));
}

// Each node picks a parent among higher-ranked nodes or becomes a root.
Forest random_forest(std::size_t n, Rng& rng) {
    std::vector<Rank> ranks = draw_ranks(n, rng);
    std::vector<std::optional<NodeId>> parent(n);
    for (NodeId i = 0; i < n; ++i) {
        if (rng.bernoulli(0.25)) continue;
        std::vector<NodeId> higher;
        for (NodeId j = 0; j < n; ++j) {
            if (ranks[j] > ranks[i]) higher.push_back(j);
        }
        if (!higher.empty()) parent[i] = higher[rng.below(higher.size())];
    }
    return make_forest(std::move(ranks), std::move(parent));
}

}  // namespace

TEST_CASE("singleton trees") {
    const Forest f = hand_forest({0.5}, {std::nullopt});
    NetworkSim sim(1, SimConfig{});
    const std::vector<double> v{7.0};
    CHECK(convergecast_max(sim, f, v).local_max == std::vector<double>{7.0});
    const RootSums s = convergecast_sum(sim, f, v);
    CHECK(s.sum == std::vector<double>{7.0});
    CHECK(s.size == std::vector<double>{1.0});
    CHECK(sim.snapshot().total().messages_sent == 0);
    const std::vector<int> payload{42};
    CHECK(broadcast_down<int>(sim, f, payload) == std::vector<int>{42});
}

TEST_CASE("star convergecast of the maximum") {
    const Forest f = hand_forest({0.9, 0.1, 0.2, 0.3}, {std::nullopt, 0, 0, 0});
    NetworkSim sim(4, SimConfig{});
    const std::vector<double> v{1, 5, -1, 3};
    CHECK(convergecast_max(sim, f, v).local_max == std::vector<double>{5});
    CHECK(sim.snapshot()[Phase::Convergecast] == PhaseMeter{1, 3, 3});
}

TEST_CASE("chain convergecast of sums") {
    const Forest f = hand_forest({0.9, 0.5, 0.1}, {std::nullopt, 0, 1});
    NetworkSim sim(3, SimConfig{});
    const RootSums s = convergecast_sum(sim, f, std::vector<double>{1, 2, 3});
    CHECK(s.sum == std::vector<double>{6});
    CHECK(s.size == std::vector<double>{3});
    CHECK(sim.snapshot()[Phase::Convergecast] == PhaseMeter{2, 2, 2});
}

TEST_CASE("constant field") {
    const Forest f = hand_forest({0.9, 0.1, 0.8, 0.2}, {std::nullopt, 0, std::nullopt, 2});
    NetworkSim sim(4, SimConfig{});
    CHECK(convergecast_max(sim, f, std::vector<double>(4, 4.0)).local_max == std::vector<double>{4, 4});
}

TEST_CASE("broadcast along a star") {
    const Forest f = hand_forest({0.9, 0.1, 0.2, 0.3, 0.4}, {std::nullopt, 0, 0, 0, 0});
    NetworkSim sim(5, SimConfig{});
    const std::vector<NodeId> roots{0};
    CHECK(broadcast_down<NodeId>(sim, f, roots) == std::vector<NodeId>(5, 0));
    CHECK(sim.snapshot()[Phase::Broadcast] == PhaseMeter{1, 4, 4});
}

TEST_CASE("random forests against a direct scan") {
    Rng gen(2025);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 1 + gen.below(64);
        const Forest f = random_forest(n, gen);
        REQUIRE(validate_forest(f).empty());
        std::vector<double> vals(n);
        for (auto& v : vals) v = static_cast<double>(static_cast<int>(gen.below(201)) - 100);

        std::vector<double> want_max(f.roots.size(), -1e300), want_sum(f.roots.size(), 0.0),
            want_size(f.roots.size(), 0.0);
        for (NodeId i = 0; i < n; ++i) {
            const NodeId r = f.root_index[f.root_of[i]];
            want_max[r] = std::max(want_max[r], vals[i]);
            want_sum[r] += vals[i];
            want_size[r] += 1.0;
        }
        const auto depth = node_depths(f);
        const std::size_t height = n ? *std::max_element(depth.begin(), depth.end()) : 0;

        for (double delta : {0.0, 0.2}) {
            NetworkSim sim(n, SimConfig{delta, trial_seed(3, t)});
            CHECK(convergecast_max(sim, f, vals).local_max == want_max);
            const RootSums s = convergecast_sum(sim, f, vals);
            CHECK(s.sum == want_sum);
            CHECK(s.size == want_size);
            const auto at = broadcast_down<NodeId>(sim, f, f.roots);
            CHECK(at == f.root_of);
            const auto snap = sim.snapshot();
            if (delta == 0.0) {
                CHECK(snap[Phase::Convergecast].messages_sent == 2 * (n - f.roots.size()));
                CHECK(snap[Phase::Convergecast].rounds == 2 * height);
                CHECK(snap[Phase::Broadcast].messages_sent == n - f.roots.size());
                CHECK(snap[Phase::Broadcast].rounds == height);
            } else {
                CHECK(snap[Phase::Convergecast].messages_delivered == 2 * (n - f.roots.size()));
                CHECK(snap[Phase::Broadcast].messages_delivered == n - f.roots.size());
            }
        }
    }
}

TEST_CASE("invalid forests are rejected") {
    const Forest inverted = hand_forest({0.1, 0.9}, {std::nullopt, 0});
    NetworkSim sim(2, SimConfig{});
    CHECK_THROWS_AS(convergecast_max(sim, inverted, std::vector<double>{1, 2}), ModelViolation);
    CHECK_THROWS_AS(convergecast_sum(sim, inverted, std::vector<double>{1, 2}), ModelViolation);
    const Forest ok = hand_forest({0.9, 0.1}, {std::nullopt, 0});
    CHECK_THROWS_AS(convergecast_max(sim, ok, std::vector<double>{1}), std::invalid_argument);
}

TEST_CASE("root aggregate CSV") {
    const Forest f = hand_forest({0.9, 0.1, 0.8}, {std::nullopt, 0, std::nullopt});
    NetworkSim sim(3, SimConfig{});
    const std::vector<double> v{1, 2, 5};
    std::ostringstream mx, sm;
    write_root_max_csv(mx, f, convergecast_max(sim, f, v));
    write_root_sums_csv(sm, f, convergecast_sum(sim, f, v));
    CHECK(mx.str() == "root_id,max\n0,2\n2,5\n");
    CHECK(sm.str() == "root_id,s,g\n0,3,2\n2,5,1\n");
}
