#include <doctest.h>

#include <cmath>
#include <memory>

#include "drrg/errors.hpp"
#include "drrg/transport.hpp"

using namespace drrg;

namespace {

Message msg(NodeId s, NodeId d) { return Message{s, d, Payload{node_field(s)}}; }

}  // namespace

TEST_CASE("phase names round-trip") {
    for (Phase p : kAllPhases) CHECK(phase_from_string(to_string(p)) == p);
    CHECK(to_string(Phase::DrrProbe) == "DrrProbe");
    CHECK_THROWS_AS(phase_from_string("Nope"), std::invalid_argument);
}

TEST_CASE("lossless sends are metered per phase") {
    NetworkSim sim(8, SimConfig{});
    {
        ScopedRound r(sim, Phase::DrrProbe);
        for (NodeId i = 0; i < 8; ++i) CHECK(sim.send(r, msg(i, (i + 1) % 8)));
    }
    {
        ScopedRound r(sim, Phase::Convergecast);
        CHECK(sim.send(r, msg(1, 0), CallKind::TreeLink));
    }
    const auto snap = sim.snapshot();
    CHECK(snap[Phase::DrrProbe] == PhaseMeter{1, 8, 8});
    CHECK(snap[Phase::Convergecast] == PhaseMeter{1, 1, 1});
    CHECK(snap.total() == PhaseMeter{2, 9, 9});
    CHECK(sim.total_sent() == 9);
    CHECK(sim.total_rounds() == 2);
}

TEST_CASE("round model violations") {
    NetworkSim sim(4, SimConfig{});
    auto h = sim.begin_round(Phase::GossipMax);
    CHECK_THROWS_AS(sim.begin_round(Phase::GossipMax), UsageError);
    sim.send(h, msg(0, 1));
    CHECK_THROWS_AS(sim.send(h, msg(0, 2)), ModelViolation);
    // Replies and relays do not use the caller's initiation.
    CHECK_NOTHROW(sim.send(h, msg(0, 2), CallKind::Reply));
    CHECK_NOTHROW(sim.send(h, msg(0, 3), CallKind::Forward));
    // Many nodes may call the same node in one round.
    CHECK_NOTHROW(sim.send(h, msg(2, 1)));
    CHECK_NOTHROW(sim.send(h, msg(3, 1)));

    const Payload big{value_field(1), value_field(2), value_field(3), value_field(4), value_field(5)};
    CHECK_THROWS_AS(sim.send(h, Message{1, 2, big}), ModelViolation);
    sim.end_round(h);
    CHECK_THROWS_AS(sim.end_round(h), UsageError);

    // A new round resets the initiation budget.
    ScopedRound r(sim, Phase::GossipMax);
    CHECK_NOTHROW(sim.send(r, msg(0, 1)));
    CHECK_THROWS_AS(Payload({value_field(0), value_field(0), value_field(0), value_field(0), value_field(0),
                             value_field(0), value_field(0), value_field(0), value_field(0)}),
                    ModelViolation);
}

TEST_CASE("loss rate matches delta") {
    NetworkSim sim(2, SimConfig{0.2, 99});
    const int rounds = 50000;
    for (int t = 0; t < rounds; ++t) {
        ScopedRound r(sim, Phase::Baseline);
        sim.send(r, msg(0, 1));
    }
    const auto m = sim.snapshot()[Phase::Baseline];
    CHECK(m.messages_sent == rounds);
    const double rate = 1.0 - static_cast<double>(m.messages_delivered) / rounds;
    // Four standard deviations of a binomial proportion.
    CHECK(std::abs(rate - 0.2) < 4.0 * std::sqrt(0.2 * 0.8 / rounds));
}

TEST_CASE("same seed, same fates") {
    auto fates = [](std::uint64_t seed) {
        NetworkSim sim(4, SimConfig{0.3, seed});
        std::vector<bool> out;
        for (int t = 0; t < 200; ++t) {
            ScopedRound r(sim, Phase::GossipAve);
            out.push_back(sim.send(r, msg(0, 1)));
        }
        return out;
    };
    CHECK(fates(5) == fates(5));
    CHECK(fates(5) != fates(6));
}

TEST_CASE("debug drop hook") {
    NetworkSim sim(4, SimConfig{0.0, 1, 4, true, 3});
    ScopedRound r(sim, Phase::DrrProbe);
    std::vector<bool> got;
    for (NodeId i = 0; i < 4; ++i) got.push_back(sim.send(r, msg(i, (i + 1) % 4)));
    CHECK(got == std::vector<bool>{true, true, false, true});
}

TEST_CASE("two-hop delivery to a root with batched forwards") {
    NetworkSim sim(6, SimConfig{});
    // Node 2 is a non-root whose root is 5.
    const std::vector<NodeId> root_of{0, 1, 5, 3, 4, 5};
    ScopedRound r(sim, Phase::GossipMax);
    auto a = sim.two_hop_root_send(r, 0, 2, root_of, Payload{value_field(1)});
    CHECK(a.delivered_to_root);
    CHECK(a.root == 5);
    CHECK(a.messages == 2);
    auto b = sim.two_hop_root_send(r, 1, 2, root_of, Payload{value_field(2)});
    CHECK(b.delivered_to_root);
    CHECK(b.messages == 1);  // rides on the forward already sent this round
    auto c = sim.two_hop_root_send(r, 3, 5, root_of, Payload{value_field(3)});
    CHECK(c.messages == 1);
    // Inquiries need their own forward.
    auto d = sim.two_hop_root_send(r, 4, 2, root_of, Payload{node_field(4)}, false);
    CHECK(d.messages == 2);
    CHECK(sim.snapshot()[Phase::GossipMax].messages_sent == 6);
}

TEST_CASE("unbatched forwards cost one message each") {
    NetworkSim sim(4, SimConfig{0.0, 1, 4, false});
    const std::vector<NodeId> root_of{0, 0, 2, 3};
    ScopedRound r(sim, Phase::GossipMax);
    CHECK(sim.two_hop_root_send(r, 2, 1, root_of, Payload{}).messages == 2);
    CHECK(sim.two_hop_root_send(r, 3, 1, root_of, Payload{}).messages == 2);
}

TEST_CASE("routing over a chord overlay") {
    auto ring = std::make_shared<const Graph>(build_chord(3));
    NetworkSim sim(ring, SimConfig{});
    CHECK(sim.routes_over_chord());
    {
        ScopedRound r(sim, Phase::Baseline);
        const auto out = sim.route(r, msg(0, 7));
        CHECK(out.delivered);
        CHECK(out.hops == 3);
        CHECK(out.messages == 3);
        const auto self = sim.route(r, msg(1, 1));
        CHECK(self.delivered);
        CHECK(self.messages == 0);
    }
    // The round lasts as long as its longest hop chain.
    CHECK(sim.snapshot()[Phase::Baseline] == PhaseMeter{3, 3, 3});

    {
        ScopedRound r(sim, Phase::GossipSample);
        sim.route(r, msg(0, 1));
        // The reply 1 -> 0 is 3 hops and starts after a 3-hop chain.
        sim.route(r, msg(1, 0), CallKind::Reply, 3);
    }
    CHECK(sim.snapshot()[Phase::GossipSample].rounds == 6);
}

TEST_CASE("peer sampling") {
    NetworkSim direct(5, SimConfig{});
    Rng rng(3);
    for (int t = 0; t < 200; ++t) CHECK(direct.sample_peer(2, rng) != 2);

    NetworkSim ring(std::make_shared<const Graph>(build_chord(2)), SimConfig{});
    bool saw_self = false;
    for (int t = 0; t < 200; ++t) saw_self = saw_self || ring.sample_peer(1, rng) == 1;
    CHECK(saw_self);
}

TEST_CASE("analysis range for delta") {
    CHECK(delta_in_analysis_range(0.11, 1024));
    CHECK_FALSE(delta_in_analysis_range(0.05, 1024));
    CHECK_FALSE(delta_in_analysis_range(0.125, 1 << 20));
}
