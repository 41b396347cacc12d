#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "departnet/numeric.hpp"
#include "departnet/panel.hpp"

using namespace departnet;

namespace {

struct Cohort {
    Roster roster;
    std::vector<SocializationSet> sets;
    std::vector<MetricSeries> series;
};

// One series per metric for each set, full 33-week coverage with random values.
Cohort random_cohort(std::uint64_t seed, const std::vector<std::pair<int, bool>>& anchors) {
    std::mt19937_64 rng(seed);
    std::lognormal_distribution<double> heavy(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Cohort c;
    for (std::size_t i = 0; i < anchors.size(); ++i) c.roster.intern("s" + std::to_string(1000 + i));
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        SocializationSet s{static_cast<EmployeeId>(i), anchors[i].first, {}, -10, -6, anchors[i].second};
        for (EmployeeId m = 0; m < 3 + i % 5; ++m) s.members.push_back(100 + m);
        for (auto metric : kAllMetrics) {
            MetricSeries ms{s.set_id(c.roster), s.treated, metric, -16, {}};
            for (int t = -16; t <= 16; ++t)
                ms.values.push_back(is_log_metric(metric) ? heavy(rng) : unit(rng));
            c.series.push_back(std::move(ms));
        }
        c.sets.push_back(std::move(s));
    }
    return c;
}

double skewness(const std::vector<double>& v) {
    const double m = mean(v);
    double m2 = 0, m3 = 0;
    for (double x : v) {
        m2 += (x - m) * (x - m);
        m3 += (x - m) * (x - m) * (x - m);
    }
    m2 /= v.size();
    m3 /= v.size();
    return m3 / std::pow(m2, 1.5);
}

}  // namespace

TEST_CASE("log-family values go through log1p") {
    CHECK(transform_value(0.0, Metric::volume) == 0.0);
    CHECK(transform_value(std::exp(2.0) - 1, Metric::n_active) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(transform_value(0.7, Metric::closure) == 0.7);
    CHECK_THROWS_AS(transform_value(-0.1, Metric::connections), DataError);
    CHECK_NOTHROW(transform_value(-0.1, Metric::closure));
}

TEST_CASE("the log transform preserves order and reduces skew") {
    std::mt19937_64 rng(97);
    std::lognormal_distribution<double> heavy(0.0, 1.0);
    std::vector<double> raw, logged;
    for (int i = 0; i < 5000; ++i) {
        raw.push_back(heavy(rng));
        logged.push_back(transform_value(raw.back(), Metric::volume));
    }
    for (std::size_t i = 1; i < raw.size(); ++i) CHECK((raw[i - 1] < raw[i]) == (logged[i - 1] < logged[i]));
    CHECK(std::abs(skewness(logged)) < std::abs(skewness(raw)));
}

TEST_CASE("a constant metric is dropped with a diagnostic") {
    Panel p;
    for (int t = -2; t <= 2; ++t) {
        p.rows.push_back({"a@1", true, t, Metric::closure, 0.5, 1, 1});
        p.rows.push_back({"a@1", true, t, Metric::closeness, 0.1 * t, 1, 1});
    }
    standardize(p);
    CHECK(panel_metrics(p) == std::vector<Metric>{Metric::closeness});
    REQUIRE(p.diagnostics.size() == 1);
    CHECK(p.diagnostics[0].find("closure") != std::string::npos);
}

TEST_CASE("z-scored panels have zero mean and unit variance per metric") {
    auto c = random_cohort(101, {{20, true}, {20, false}, {20, false}, {20, false}, {24, true}, {24, false}});
    auto panels = assemble_panel(c.sets, c.series, c.roster, std::nullopt);
    REQUIRE(panels.size() == 1);
    CHECK(panels[0].period == 0);
    for (auto metric : panel_metrics(panels[0])) {
        std::vector<double> y;
        for (const auto& r : rows_for(panels[0], metric)) y.push_back(r.y);
        CHECK(std::abs(mean(y)) < 1e-9);
        CHECK(std::abs(variance(y) - 1.0) < 1e-9);
    }
}

TEST_CASE("one treated and three controls give at most 4 x 33 x 11 rows") {
    auto c = random_cohort(103, {{20, true}, {20, false}, {20, false}, {20, false}});
    auto panels = assemble_panel(c.sets, c.series, c.roster, std::nullopt);
    CHECK(panels[0].rows.size() <= 4u * 33u * 11u);
    CHECK(panels[0].rows.size() == 4u * 33u * 11u);
    for (const auto& r : panels[0].rows) {
        CHECK(std::isfinite(r.y));
        CHECK(r.t >= -16);
        CHECK(r.t <= 16);
        CHECK(r.anchor_week == 20);
    }
    CHECK(panels[0].rows[0].baseline_size == doctest::Approx(std::log1p(3.0)).epsilon(1e-15));
}

TEST_CASE("rows outside the horizon are dropped") {
    auto c = random_cohort(107, {{20, true}, {20, false}});
    auto panels = assemble_panel(c.sets, c.series, c.roster, std::nullopt, 8);
    for (const auto& r : panels[0].rows) CHECK(std::abs(r.t) <= 8);
    CHECK(panels[0].rows.size() == 2u * 17u * 11u);
}

TEST_CASE("missing values are absent rows") {
    auto c = random_cohort(109, {{20, true}, {20, false}});
    c.series[0].values[3] = std::nullopt;
    auto panels = assemble_panel(c.sets, c.series, c.roster, std::nullopt);
    CHECK(panels[0].rows.size() == 2u * 33u * 11u - 1u);
}

TEST_CASE("period split routes sets by anchor week and drops the buffer") {
    std::vector<std::pair<int, bool>> anchors = {{10, true}, {10, false}, {25, true}, {25, false},
                                                 {29, true}, {31, false}, {34, true}, {35, false},
                                                 {40, true}, {40, false}};
    auto c = random_cohort(113, anchors);
    PeriodSplit split{30, 4};
    CHECK(split.period_of(25) == 1);
    CHECK_FALSE(split.period_of(26).has_value());
    CHECK_FALSE(split.period_of(34).has_value());
    CHECK(split.period_of(35) == 2);

    auto both = assemble_panel(c.sets, c.series, c.roster, split);
    REQUIRE(both.size() == 2);
    CHECK(both[0].period == 1);
    CHECK(both[1].period == 2);
    auto pooled = assemble_panel(c.sets, c.series, c.roster, std::nullopt);

    auto ids = [](const Panel& p) {
        std::set<std::string> s;
        for (const auto& r : p.rows) s.insert(r.set_id);
        return s;
    };
    auto keys = [](const Panel& p) {
        std::set<std::tuple<std::string, int, Metric>> s;
        for (const auto& r : p.rows) s.emplace(r.set_id, r.t, r.metric);
        return s;
    };
    const auto a = ids(both[0]), b = ids(both[1]), all = ids(pooled[0]);
    for (const auto& id : a) CHECK(b.count(id) == 0);
    std::set<std::string> buffered;
    for (const auto& s : c.sets)
        if (!split.period_of(s.t_star)) buffered.insert(s.set_id(c.roster));
    CHECK(buffered.size() == 3);
    std::set<std::string> rebuilt = a;
    rebuilt.insert(b.begin(), b.end());
    rebuilt.insert(buffered.begin(), buffered.end());
    CHECK(rebuilt == all);

    auto pooled_keys = keys(pooled[0]);
    auto split_keys = keys(both[0]);
    auto k2 = keys(both[1]);
    split_keys.insert(k2.begin(), k2.end());
    for (const auto& k : pooled_keys)
        CHECK((split_keys.count(k) == 1) == (buffered.count(std::get<0>(k)) == 0));
}

TEST_CASE("pipeline guards") {
    auto c = random_cohort(127, {{20, true}, {20, false}});
    auto dup = c.series;
    dup.push_back(c.series[0]);
    CHECK_THROWS_AS(assemble_panel(c.sets, dup, c.roster, std::nullopt), DataError);

    auto orphan = c.series;
    orphan[0].set_id = "nobody@3";
    CHECK_THROWS_AS(assemble_panel(c.sets, orphan, c.roster, std::nullopt), DataError);

    auto twice = c.sets;
    twice.push_back(c.sets[0]);
    CHECK_THROWS_AS(assemble_panel(twice, c.series, c.roster, std::nullopt), DataError);

    auto negative = c.series;
    for (auto& ms : negative)
        if (ms.metric == Metric::volume) ms.values[0] = -1.0;
    CHECK_THROWS_AS(assemble_panel(c.sets, negative, c.roster, std::nullopt), DataError);
}

TEST_CASE("panel files round trip") {
    auto c = random_cohort(131, {{20, true}, {20, false}, {21, false}});
    auto panel = assemble_panel(c.sets, c.series, c.roster, std::nullopt)[0];
    std::ostringstream out;
    write_panel(out, panel);
    CHECK(out.str().rfind("set_id,treated,t,metric,y,baseline_size,anchor_week\n", 0) == 0);
    std::istringstream in(out.str());
    auto back = read_panel(in, 2);
    CHECK(back.period == 2);
    CHECK(back.rows == panel.rows);

    std::istringstream dup(out.str() + out.str().substr(out.str().find('\n') + 1));
    CHECK_THROWS_AS(read_panel(dup), DataError);
}
