#include <catch2/catch.hpp>

#include <random>

#include "mvjoint/maxflow.hpp"
#include "oracles.hpp"

using namespace mvjoint;

TEST_CASE("single node routes through the smaller terminal") {
    MaxFlow g(1);
    g.add_terminal(0, 3.0, 5.0);
    CHECK(g.solve() == Approx(3.0));
    CHECK(g.reaches_sink(0));  // residual to sink remains
}

TEST_CASE("two node chain") {
    MaxFlow g(2);
    g.add_terminal(0, 4.0, 0.0);
    g.add_terminal(1, 0.0, 4.0);
    g.add_edge(0, 1, 2.5, 0.0);
    CHECK(g.solve() == Approx(2.5));
    CHECK_FALSE(g.reaches_sink(0));  // the saturated edge separates it
    CHECK(g.reaches_sink(1));
}

TEST_CASE("matches brute-force min cut on random graphs") {
    std::mt19937 eng(2024);
    auto uni = [&](double lo, double hi) {
        return lo + (hi - lo) * (double(eng()) / 4294967296.0);
    };
    for (int trial = 0; trial < 300; ++trial) {
        int n = 2 + int(eng() % 7);  // 2..8 nodes
        MaxFlow g(n);
        oracle::BruteGraph brute(n);
        for (int i = 0; i < n; ++i) {
            double s = eng() % 3 ? uni(0, 10) : 0.0;
            double t = eng() % 3 ? uni(0, 10) : 0.0;
            g.add_terminal(i, s, t);
            brute.term[i] = {s, t};
        }
        int edges = int(eng() % (2 * n + 1));
        for (int e = 0; e < edges; ++e) {
            int u = int(eng() % n), v = int(eng() % n);
            if (u == v) continue;
            double cap = uni(0, 8), rev = eng() % 2 ? uni(0, 8) : 0.0;
            g.add_edge(u, v, cap, rev);
            brute.edges.emplace_back(u, v, cap, rev);
        }
        double flow = g.solve();
        double cut = brute.min_cut();
        REQUIRE(flow == Approx(cut).margin(1e-9));

        // the reported partition must itself be a cut of that value
        double partition_cut = 0.0;
        for (int i = 0; i < n; ++i)
            partition_cut += g.reaches_sink(i) ? 0.0 : brute.term[i].second;
        for (int i = 0; i < n; ++i)
            partition_cut += g.reaches_sink(i) ? brute.term[i].first : 0.0;
        for (const auto& [u, v, cap, rev] : brute.edges) {
            bool su = !g.reaches_sink(u), sv = !g.reaches_sink(v);
            if (su && !sv) partition_cut += cap;
            if (sv && !su) partition_cut += rev;
        }
        REQUIRE(partition_cut == Approx(cut).margin(1e-9));
    }
}

TEST_CASE("input validation") {
    MaxFlow g(2);
    CHECK_THROWS_AS(g.add_edge(0, 0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(g.add_edge(0, 5, 1, 1), std::out_of_range);
    CHECK_THROWS_AS(g.add_terminal(0, -1, 0), std::invalid_argument);
    CHECK_THROWS_AS(g.reaches_sink(0), std::logic_error);
}
