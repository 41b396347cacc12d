#include <doctest.h>

#include <random>
#include <sstream>

#include "departnet/cohort.hpp"
#include "helpers.hpp"

using namespace departnet;
using testing::make_graph;

namespace {

// Employee 0 talks to `partner` in each listed week; 1 and 2 talk every week.
GraphSeries activity_series(int last_week, const std::vector<int>& active_weeks, EmployeeId partner = 5) {
    GraphSeries s(0, last_week, {});
    for (int w = 0; w <= last_week; ++w) {
        const bool active = std::find(active_weeks.begin(), active_weeks.end(), w) != active_weeks.end();
        s.set(w, active ? make_graph({{0, partner, 1}, {1, 2, 1}}) : make_graph({{1, 2, 1}}));
    }
    return s;
}

std::vector<int> range(int a, int b) {
    std::vector<int> v;
    for (int w = a; w <= b; ++w) v.push_back(w);
    return v;
}

std::optional<DepartureEvent> departure_of(const std::vector<DepartureEvent>& ds, EmployeeId ego) {
    for (const auto& d : ds)
        if (d.ego == ego) return d;
    return std::nullopt;
}

}  // namespace

TEST_CASE("an ego silent through the end of data departs after the last active week") {
    auto ds = detect_departures(activity_series(52, range(1, 20)), 6, 12);
    auto d = departure_of(ds, 0);
    REQUIRE(d);
    CHECK(d->t_star == 21);
    CHECK(d->last_active_week == 20);
    CHECK_FALSE(departure_of(ds, 1));
}

TEST_CASE("a departure too close to the end of data is not reported") {
    auto ds = detect_departures(activity_series(52, range(1, 48)), 6, 12);
    CHECK_FALSE(departure_of(ds, 0));
}

TEST_CASE("a vacation gap is not a departure") {
    auto weeks = range(1, 29);
    auto later = range(34, 52);
    weeks.insert(weeks.end(), later.begin(), later.end());
    auto ds = detect_departures(activity_series(52, weeks), 6, 12);
    CHECK_FALSE(departure_of(ds, 0));
}

TEST_CASE("a lookahead beyond the data span is an error") {
    CHECK_THROWS_AS(detect_departures(activity_series(10, range(0, 3)), 6, 11), DataError);
    CHECK_NOTHROW(detect_departures(activity_series(10, range(0, 3)), 6, 10));
}

TEST_CASE("departure detection is stable under truncation past t_star + lookahead") {
    const auto full = activity_series(60, range(2, 25));
    const auto d = departure_of(detect_departures(full, 6, 12), 0);
    REQUIRE(d);
    for (int end = d->t_star + 12; end <= 60; ++end) {
        GraphSeries cut(0, end, {});
        for (int w = 0; w <= end; ++w) cut.set(w, *full.at(w));
        auto again = departure_of(detect_departures(cut, 6, 12), 0);
        REQUIRE(again);
        CHECK(again->t_star == d->t_star);
    }
}

TEST_CASE("a socialization set is the union of freeze-window neighbors") {
    GraphSeries s(0, 30, {});
    const int t_star = 20;
    s.set(t_star - 10, make_graph({{0, 1, 1}, {0, 2, 1}}));
    s.set(t_star - 7, make_graph({{0, 2, 1}, {0, 3, 1}}));
    s.set(t_star - 5, make_graph({{0, 4, 1}}));   // buffer, ignored
    s.set(t_star - 11, make_graph({{0, 6, 1}}));  // before the window
    auto set = build_socialization_set(s, 0, t_star, WindowSpec{});
    REQUIRE(set);
    CHECK(set->members == std::vector<EmployeeId>{1, 2, 3});
    CHECK(set->start_offset == -10);
    CHECK(set->end_offset == -6);
    CHECK(set->treated);

    WindowSpec wide;
    wide.freeze = 6;
    auto bigger = build_socialization_set(s, 0, t_star, wide);
    REQUIRE(bigger);
    CHECK(bigger->members == std::vector<EmployeeId>{1, 2, 3, 6});
}

TEST_CASE("a right-exclusive window drops the last week") {
    GraphSeries s(0, 30, {});
    s.set(14, make_graph({{0, 1, 1}}));
    s.set(10, make_graph({{0, 2, 1}}));
    WindowSpec w;
    w.right_exclusive = true;
    auto set = build_socialization_set(s, 0, 20, w);
    REQUIRE(set);
    CHECK(set->members == std::vector<EmployeeId>{2});
    CHECK(set->end_offset == -7);
}

TEST_CASE("an inactive ego has no set and an unobserved window is an error") {
    GraphSeries s(0, 30, {});
    CHECK_FALSE(build_socialization_set(s, 0, 20, WindowSpec{}).has_value());
    GraphSeries holes(0, 30, range(10, 14));
    CHECK_THROWS_AS(build_socialization_set(holes, 0, 20, WindowSpec{}), DataError);
}

TEST_CASE("members grow with the freeze length") {
    std::mt19937_64 rng(43);
    GraphSeries s(0, 40, {});
    for (int w = 0; w <= 40; ++w) s.set(w, testing::random_graph(rng, 25, false));
    for (EmployeeId ego = 0; ego < 30; ++ego)
        for (int f = 1; f < 8; ++f) {
            WindowSpec a, b;
            a.freeze = f;
            b.freeze = f + 1;
            auto small = build_socialization_set(s, ego, 30, a);
            auto large = build_socialization_set(s, ego, 30, b);
            if (!small) continue;
            REQUIRE(large);
            CHECK(std::includes(large->members.begin(), large->members.end(), small->members.begin(),
                                small->members.end()));
        }
}

TEST_CASE("group subgraphs") {
    SocializationSet set;
    set.members = {1, 2, 3};
    auto induced = group_subgraph(make_graph({{1, 2, 1}, {1, 9, 1}}), set);
    CHECK(std::vector<EmployeeId>(induced.nodes().begin(), induced.nodes().end()) == std::vector<EmployeeId>{1, 2});
    CHECK(induced.edge_count() == 1);

    CHECK(group_subgraph(make_graph({{7, 8, 1}}), set).empty());

    auto whole = make_graph({{1, 2, 1}, {2, 3, 2}});
    CHECK(group_subgraph(whole, set) == whole);
    CHECK(group_subgraph(group_subgraph(whole, set), set) == group_subgraph(whole, set));
}

TEST_CASE("ego networks") {
    auto net = ego_network(make_graph({{0, 1, 1}, {0, 2, 1}, {1, 2, 1}, {2, 5, 1}}), 0);
    CHECK(net.active);
    CHECK(net.graph.node_count() == 3);
    CHECK(net.graph.edge_count() == 3);

    auto absent = ego_network(make_graph({{1, 2, 1}}), 0);
    CHECK_FALSE(absent.active);
    CHECK(absent.graph.empty());

    auto clique = make_graph({{0, 1, 1}, {0, 2, 1}, {0, 3, 1}, {1, 2, 1}, {1, 3, 1}, {2, 3, 1}});
    CHECK(ego_network(clique, 2).graph == clique);
}

TEST_CASE("sets and departures round trip through their files") {
    Roster roster;
    for (const char* n : {"ann", "bo", "cy", "di"}) roster.intern(n);
    std::vector<SocializationSet> sets = {{0, 20, {1, 2}, -10, -6, true}, {3, 20, {1}, -10, -6, false}};
    std::ostringstream out;
    write_sets(out, sets, roster);
    CHECK(out.str() == "ego,t_star,treated,member\nann,20,1,bo\nann,20,1,cy\ndi,20,0,bo\n");
    std::istringstream in(out.str());
    CHECK(read_sets(in, roster, WindowSpec{}) == sets);
    CHECK(sets[0].set_id(roster) == "ann@20");

    std::vector<DepartureEvent> ds = {{0, 12, 11}, {2, 15, 14}};
    std::ostringstream dout;
    write_departures(dout, ds, roster);
    std::istringstream din(dout.str());
    CHECK(read_departures(din, roster) == ds);
}
