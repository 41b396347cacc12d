#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "departnet/metrics.hpp"
#include "helpers.hpp"
#include "oracles/brute_force.hpp"

using namespace departnet;
using testing::make_graph;

TEST_CASE("closeness") {
    CHECK(closeness(make_graph({{0, 1, 1}, {1, 2, 1}, {0, 2, 1}})) == 1.0);
    CHECK(closeness(make_graph({{0, 1, 1}, {1, 2, 1}})) == doctest::Approx(2.5 / 3).epsilon(1e-15));
    CHECK(closeness(make_graph({{0, 1, 1}, {2, 3, 1}})) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(closeness(Graph{}) == 0.0);
    CHECK(closeness(make_graph({}, {4})) == 0.0);
}

TEST_CASE("closure") {
    CHECK(closure(make_graph({{0, 1, 1}, {1, 2, 1}, {0, 2, 1}})) == 1.0);
    CHECK(closure(make_graph({{0, 1, 1}, {0, 2, 1}, {0, 3, 1}})) == 0.0);
    // 4-cycle 0-1-2-3 with chord 0-2: nodes 0 and 2 have 2 of 3 neighbor pairs linked, 1 and 3 have 1 of 1.
    auto g = make_graph({{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {3, 0, 1}, {0, 2, 1}});
    CHECK(closure(g) == doctest::Approx((2.0 / 3 + 1 + 2.0 / 3 + 1) / 4).epsilon(1e-15));
    CHECK(closure(g) == doctest::Approx(oracle::closure(oracle::dense(g))).epsilon(1e-15));
    CHECK(closure(Graph{}) == 0.0);
}

TEST_CASE("components and largest component share") {
    CHECK(components(make_graph({{0, 1, 1}, {1, 2, 1}, {0, 2, 1}})) == 1);
    CHECK(components(make_graph({{0, 1, 1}, {2, 3, 1}})) == 2);
    CHECK(components(Graph{}) == 0);
    CHECK(largest_component_share(make_graph({{0, 1, 1}, {1, 2, 1}})) == 1.0);
    CHECK(largest_component_share(make_graph({{0, 1, 1}, {1, 2, 1}}, {7})) == 0.75);
    CHECK(largest_component_share(make_graph({{0, 1, 1}, {2, 3, 1}})) == 0.5);
    CHECK(largest_component_share(Graph{}) == 0.0);
}

TEST_CASE("connections, volume and n_active") {
    auto triangle = make_graph({{0, 1, 1}, {1, 2, 2}, {0, 2, 3}});
    CHECK(group_connections(triangle) == 1.0);
    CHECK(group_connections(make_graph({{0, 1, 1}, {1, 2, 1}})) == doctest::Approx(2.0 / 3).epsilon(1e-15));
    CHECK(group_connections(Graph{}) == 0.0);
    CHECK(group_volume(triangle) == 2.0);
    CHECK(group_volume(make_graph({{4, 9, 0.1}})) == 0.05);
    CHECK(group_volume(Graph{}) == 0.0);

    SocializationSet set;
    for (EmployeeId m = 0; m < 12; ++m) set.members.push_back(m);
    auto week = make_graph({{0, 1, 1}, {2, 3, 1}, {3, 4, 1}, {20, 21, 1}});
    CHECK(n_active(group_subgraph(week, set)) == 5);
    CHECK(n_active(group_subgraph(make_graph({{20, 21, 1}}), set)) == 0);
    auto full = make_graph({{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {3, 4, 1}, {4, 5, 1}, {5, 6, 1},
                            {6, 7, 1}, {7, 8, 1}, {8, 9, 1}, {9, 10, 1}, {10, 11, 1}});
    CHECK(n_active(group_subgraph(full, set)) == 12);
}

TEST_CASE("individual metrics") {
    auto closed = individual_metrics(make_graph({{0, 1, 1}, {0, 2, 2}, {1, 2, 1}}), 0);
    REQUIRE(closed);
    CHECK(closed->clustering == 1.0);
    CHECK(closed->connections == 2.0);
    CHECK(closed->volume == 3.0);
    CHECK(closed->diversity == 1.0);

    auto open = individual_metrics(make_graph({{0, 1, 1}, {0, 2, 1}}), 0);
    REQUIRE(open);
    CHECK(open->clustering == 0.0);
    CHECK(open->diversity == 2.0);

    auto pairs = individual_metrics(make_graph({{0, 1, 1}, {0, 2, 1}, {0, 3, 1}, {0, 4, 1}, {1, 2, 1}, {3, 4, 1}}), 0);
    REQUIRE(pairs);
    CHECK(pairs->diversity == 2.0);
    CHECK(pairs->connections == 4.0);

    CHECK_FALSE(individual_metrics(make_graph({{1, 2, 1}}), 0).has_value());
    CHECK_FALSE(individual_metrics(ego_network(make_graph({{1, 2, 1}}), 0)).has_value());
}

TEST_CASE("aggregate_individual averages over active members") {
    std::vector<IndividualRecord> two = {{1.0, 2, 3, 1}, {0.0, 4, 1, 3}};
    auto m = aggregate_individual(two);
    REQUIRE(m);
    CHECK(m->clustering == 0.5);
    CHECK(m->connections == 3.0);
    CHECK(m->diversity == 2.0);
    std::vector<IndividualRecord> one = {{0.25, 1, 2, 1}};
    CHECK(*aggregate_individual(one) == one[0]);
    CHECK_FALSE(aggregate_individual({}).has_value());
}

TEST_CASE("metrics agree with brute force on random graphs") {
    std::mt19937_64 rng(47);
    for (int rep = 0; rep < 300; ++rep) {
        const auto g = testing::random_graph(rng, 30);
        const auto d = oracle::dense(g);
        const auto r = group_metrics(g);
        CHECK(r.closeness == doctest::Approx(oracle::closeness(d)).epsilon(1e-12));
        CHECK(r.closure == doctest::Approx(oracle::closure(d)).epsilon(1e-12));
        CHECK(r.components == static_cast<double>(oracle::components(d)));
        CHECK(r.largest_component_share == doctest::Approx(oracle::largest_component_share(d)).epsilon(1e-12));
        CHECK(r.n_active == static_cast<double>(d.n()));
        if (d.n() > 0) {
            CHECK(r.connections == doctest::Approx(double(oracle::edge_count(d)) / d.n()).epsilon(1e-12));
            CHECK(r.volume == doctest::Approx(oracle::weight_sum(d) / d.n()).epsilon(1e-12));
        }
        for (auto id : d.ids) {
            auto mine = individual_metrics(g, id);
            auto ref = oracle::individual(d, id);
            REQUIRE(mine);
            REQUIRE(ref);
            CHECK(mine->clustering == doctest::Approx(ref->clustering).epsilon(1e-12));
            CHECK(mine->connections == ref->connections);
            CHECK(mine->volume == doctest::Approx(ref->volume).epsilon(1e-12));
            CHECK(mine->diversity == ref->diversity);
            CHECK(*individual_metrics(ego_network(g, id)) == *mine);
        }
    }
}

TEST_CASE("closeness is 1 exactly on complete graphs, share is 1 exactly when connected") {
    std::mt19937_64 rng(53);
    for (int rep = 0; rep < 300; ++rep) {
        const auto g = testing::random_graph(rng, 12);
        if (g.empty()) continue;
        const auto n = g.node_count();
        const bool complete = n >= 2 && g.edge_count() == n * (n - 1) / 2;
        CHECK((closeness(g) == 1.0) == complete);
        CHECK((largest_component_share(g) == 1.0) == (components(g) <= 1));
    }
    for (std::size_t n = 2; n <= 9; ++n) {
        std::vector<Edge> edges;
        std::vector<EmployeeId> nodes;
        for (EmployeeId i = 0; i < n; ++i) {
            nodes.push_back(i);
            for (EmployeeId j = i + 1; j < n; ++j) edges.push_back({i, j, 1.0});
        }
        CHECK(closeness(Graph(nodes, edges)) == 1.0);
    }
}

TEST_CASE("removing an isolated member equals the definitions on the reduced node set") {
    auto base = make_graph({{0, 1, 2}, {1, 2, 1}, {3, 4, 1}});
    auto with = make_graph({{0, 1, 2}, {1, 2, 1}, {3, 4, 1}}, {9});
    CHECK(n_active(with) == n_active(base) + 1);
    CHECK(group_connections(with) == doctest::Approx(3.0 / 6).epsilon(1e-15));
    CHECK(group_volume(with) == doctest::Approx(4.0 / 6).epsilon(1e-15));
    CHECK(components(with) == components(base) + 1);
    CHECK(closeness(with) == doctest::Approx(oracle::closeness(oracle::dense(with))).epsilon(1e-15));
    CHECK(group_connections(base) == doctest::Approx(3.0 / 5).epsilon(1e-15));
}

namespace {

struct Fixture {
    Roster roster;
    GraphSeries graphs;
};

Fixture random_fixture(std::uint64_t seed, int weeks = 40) {
    std::mt19937_64 rng(seed);
    Fixture f;
    for (int i = 0; i < 70; ++i) f.roster.intern("m" + std::to_string(100 + i));
    f.graphs = GraphSeries(0, weeks - 1, {7});
    for (int w = 0; w < weeks; ++w)
        if (f.graphs.observed(w)) f.graphs.set(w, testing::random_graph(rng, 30, false));
    return f;
}

}  // namespace

TEST_CASE("metric series cover the horizon and truncate at the data edge") {
    auto f = random_fixture(59);
    const auto table = compute_node_metrics(f.graphs);
    SocializationSet mid{3, 20, {1, 2, 5, 8, 13}, -10, -6, true};
    auto series = build_metric_series(mid, f.graphs, table, f.roster, 16);
    REQUIRE(series.size() == kMetricCount);
    for (const auto& s : series) {
        CHECK(s.t_begin == -16);
        CHECK(s.values.size() == 33);
        CHECK(s.treated);
        CHECK(s.set_id == mid.set_id(f.roster));
        CHECK_FALSE(s.at(7 - 20).has_value());  // excluded week
    }

    SocializationSet late{3, 35, {1, 2, 5}, -10, -6, false};
    auto tail = build_metric_series(late, f.graphs, table, f.roster, 16);
    CHECK(tail[0].values.size() == 16 + 5);
    CHECK_FALSE(tail[0].treated);
    CHECK_FALSE(tail[0].at(5).has_value());
}

TEST_CASE("series values follow the group and individual definitions") {
    auto f = random_fixture(61);
    const auto table = compute_node_metrics(f.graphs);
    SocializationSet set{0, 22, {2, 3, 4, 6, 9, 11, 12, 15, 17, 20}, -10, -6, true};
    auto series = build_metric_series(set, f.graphs, table, f.roster, 16);
    for (int t = -16; t <= 16; ++t) {
        const Graph* g = f.graphs.at(22 + t);
        if (!g) continue;
        auto sub = oracle::dense(group_subgraph(*g, set));
        CHECK(*series[0].at(t) == doctest::Approx(oracle::closeness(sub)).epsilon(1e-12));
        CHECK(*series[2].at(t) == static_cast<double>(oracle::components(sub)));
        CHECK(*series[6].at(t) == static_cast<double>(sub.n()));
        auto whole = oracle::dense(*g);
        double conn = 0, n = 0;
        for (auto m : set.members)
            if (auto r = oracle::individual(whole, m)) {
                conn += r->connections;
                n += 1;
            }
        if (n > 0) CHECK(*series[8].at(t) == doctest::Approx(conn / n).epsilon(1e-12));
        else CHECK_FALSE(series[8].at(t).has_value());
    }
}

TEST_CASE("parallel kernels equal their serial references") {
    auto f = random_fixture(67);
    const auto table = compute_node_metrics(f.graphs);
    CHECK(table == compute_node_metrics_serial(f.graphs));
    std::vector<SocializationSet> sets;
    for (EmployeeId e = 0; e < 20; ++e)
        if (auto s = build_socialization_set(f.graphs, e, 18 + static_cast<int>(e % 5), WindowSpec{}, e % 2 == 0))
            sets.push_back(*s);
    REQUIRE(sets.size() > 5);
    CHECK(compute_series(sets, f.graphs, table, f.roster) == compute_series_serial(sets, f.graphs, table, f.roster));
}

TEST_CASE("node metric and series files round trip") {
    auto f = random_fixture(71, 24);
    const auto table = compute_node_metrics(f.graphs);
    std::ostringstream out;
    write_node_metrics(out, table, f.roster);
    std::istringstream in(out.str());
    const auto back = read_node_metrics(in, f.graphs, f.roster);
    for (int w : f.graphs.observed_weeks())
        for (auto id : f.graphs.at(w)->nodes()) CHECK(*back.lookup(w, id) == *table.lookup(w, id));

    std::vector<SocializationSet> sets = {{1, 12, {2, 3, 4, 5}, -10, -6, true}, {9, 12, {2, 7}, -10, -6, false}};
    auto nested = compute_series(sets, f.graphs, table, f.roster);
    std::ostringstream sout;
    write_series(sout, nested);
    CHECK(sout.str().rfind("set_id,treated,t,metric,value\n", 0) == 0);
    std::istringstream sin(sout.str());
    auto flat = read_series(sin);
    std::vector<MetricSeries> expected;
    for (auto& v : nested) expected.insert(expected.end(), v.begin(), v.end());
    CHECK(flat == expected);
}

TEST_CASE("metric names round trip") {
    for (auto m : kAllMetrics) CHECK(parse_metric(metric_name(m)) == m);
    CHECK_THROWS(parse_metric("eigenvector"));
    CHECK(is_log_metric(Metric::volume));
    CHECK(is_log_metric(Metric::n_active));
    CHECK(is_log_metric(Metric::connections_ind));
    CHECK_FALSE(is_log_metric(Metric::closure));
    CHECK(is_group_metric(Metric::n_active));
    CHECK_FALSE(is_group_metric(Metric::diversity_ind));
}
