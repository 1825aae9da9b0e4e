#include <doctest.h>

#include <bit>
#include <map>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "drrg/errors.hpp"
#include "drrg/topology.hpp"

using namespace drrg;

TEST_CASE("complete graph") {
    const Graph one = build_complete(1);
    CHECK(one.size() == 1);
    CHECK(one.edge_count() == 0);

    const Graph g4 = build_complete(4);
    CHECK(g4.neighbor_list(0) == std::vector<NodeId>{1, 2, 3});

    const Graph g = build_complete(1024);
    for (NodeId i : {0u, 511u, 1023u}) CHECK(g.degree(i) == 1023);
    CHECK(g.edge_count() == 1024u * 1023u / 2);
    CHECK(validate_graph(g).empty());
    CHECK_THROWS_AS(build_complete(0), std::invalid_argument);
}

TEST_CASE("d-regular graphs") {
    // K4 is the only simple 3-regular graph on 4 nodes.
    const Graph k4 = build_d_regular(4, 3, 11);
    for (NodeId i = 0; i < 4; ++i) CHECK(k4.degree(i) == 3);
    CHECK(k4.edge_count() == 6);

    const Graph ring = build_d_regular(8, 2, 7);
    for (NodeId i = 0; i < 8; ++i) CHECK(ring.degree(i) == 2);

    const Graph g = build_d_regular(1024, 8, 1);
    CHECK(validate_graph(g).empty());
    std::map<std::size_t, std::size_t> hist;
    for (NodeId i = 0; i < g.size(); ++i) {
        const auto nb = g.neighbors(i);
        ++hist[nb.size()];
        for (NodeId j : nb) {
            CHECK(j != i);
            const auto back = g.neighbors(j);
            CHECK(std::binary_search(back.begin(), back.end(), i));
        }
        CHECK(std::adjacent_find(nb.begin(), nb.end()) == nb.end());
    }
    CHECK(hist == std::map<std::size_t, std::size_t>{{8, 1024}});

    CHECK(build_d_regular(200, 6, 42) == build_d_regular(200, 6, 42));
    CHECK_FALSE(build_d_regular(200, 6, 42) == build_d_regular(200, 6, 43));

    CHECK_THROWS_AS(build_d_regular(5, 3, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_d_regular(4, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_d_regular(4, 0, 1), std::invalid_argument);
}

TEST_CASE("chord fingers and neighbor view") {
    const Graph g1 = build_chord(1);
    CHECK(g1.size() == 2);
    CHECK(g1.finger(0, 0) == 1);
    CHECK(g1.finger(1, 0) == 0);

    const Graph g3 = build_chord(3);
    CHECK(g3.finger(0, 0) == 1);
    CHECK(g3.finger(0, 1) == 2);
    CHECK(g3.finger(0, 2) == 4);

    const Graph g = build_chord(10);
    for (NodeId i = 0; i < g.size(); i += 37) {
        // Oracle: union of out-fingers and in-fingers.
        std::vector<NodeId> want;
        for (unsigned k = 0; k < 10; ++k) {
            want.push_back((i + (1u << k)) % 1024);
            want.push_back((i + 1024 - (1u << k)) % 1024);
        }
        std::sort(want.begin(), want.end());
        want.erase(std::unique(want.begin(), want.end()), want.end());
        CHECK(g.neighbor_list(i) == want);
        CHECK(g.degree(i) <= 20);
        CHECK(g.degree(i) == 19);  // 2^9 is its own inverse
    }
    CHECK(validate_graph(g).empty());
    CHECK_THROWS_AS(build_chord(0), std::invalid_argument);
    CHECK_THROWS_AS(build_chord(25), std::invalid_argument);
}

TEST_CASE("greedy chord routing") {
    const Graph g = build_chord(3);
    CHECK(chord_path(g, 0, 7) == std::vector<NodeId>{0, 4, 6, 7});
    CHECK(chord_route(g, 0, 7).hops == 3);
    CHECK(chord_route(g, 0, 0).hops == 0);

    // Oracle: greedy routing takes one finger per set bit of the clockwise distance.
    const Graph g6 = build_chord(6);
    for (NodeId s = 0; s < 64; ++s) {
        for (NodeId d = 0; d < 64; ++d) {
            const auto path = chord_path(g6, s, d);
            REQUIRE(path.back() == d);
            CHECK(path.size() - 1 == static_cast<std::size_t>(std::popcount((d + 64 - s) % 64)));
            CHECK(path.size() - 1 <= 6);
        }
    }
}

TEST_CASE("route_to_random is uniform over ring ids") {
    const Graph g = build_chord(10);
    Rng rng(2024);
    std::vector<double> counts(1024, 0.0);
    const int draws = 10000;
    double hops = 0.0;
    for (int t = 0; t < draws; ++t) {
        const auto r = route_to_random(g, 5, rng);
        counts[r.destination] += 1.0;
        hops += r.hops;
        CHECK(r.messages_used == r.hops);
    }
    CHECK(hops / draws <= 10.0);
    const double expected = static_cast<double>(draws) / 1024.0;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    const boost::math::chi_squared dist(1023);
    CHECK(chi2 < boost::math::quantile(dist, 0.99));

    Rng r2(1);
    const auto direct = route_to_random(build_complete(8), 3, r2);
    CHECK(direct.hops == 1);
    CHECK(direct.destination != 3);
    CHECK_THROWS_AS(route_to_random(build_d_regular(8, 2, 1), 0, r2), std::invalid_argument);
}

TEST_CASE("edge list loading") {
    std::istringstream one("0 1\n");
    const Graph g = load_adjacency(one);
    CHECK(g.size() == 2);
    CHECK(g.edge_count() == 1);

    std::istringstream dup("0 1\n1 0\n");
    CHECK(load_adjacency(dup).edge_count() == 1);

    std::istringstream path("# a path\n\n0 1\n1 2\n");
    const Graph p = load_adjacency(path);
    CHECK(p.neighbor_list(1) == std::vector<NodeId>{0, 2});
    CHECK(p.kind() == GraphKind::Custom);

    auto line_of = [](const std::string& text) {
        std::istringstream in(text);
        try {
            load_adjacency(in);
        } catch (const InputFormatError& e) {
            return e.line();
        }
        return std::size_t{0};
    };
    CHECK(line_of("0 1\n1 x\n") == 2);
    CHECK(line_of("0 1\n\n-1 2\n") == 3);
    CHECK(line_of("3 3\n") == 1);
    CHECK(line_of("0 1 2\n") == 1);
    CHECK(line_of("# nothing\n") != 0);
}

TEST_CASE("graph summary") {
    const auto s = summarize_graph(build_chord(3));
    CHECK(s.n == 8);
    CHECK(s.degree_min == 5);
    CHECK(s.degree_max == 5);
    CHECK(graph_summary_json(s) == R"({"kind":"chord","n":8,"edges":20,"degree_min":5,"degree_max":5})");
}
