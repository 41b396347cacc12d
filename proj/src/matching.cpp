#include "departnet/matching.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "departnet/numeric.hpp"
#include "departnet/table_io.hpp"

namespace departnet {

AttributeTable read_attributes(std::istream& in, const Roster& roster) {
    CsvReader csv(in, {"employee", "is_manager", "leader", "senior", "gender"}, "attributes");
    AttributeTable table(roster.size());
    while (csv.next()) {
        if (!roster.contains(csv.field(0))) continue;
        auto& a = table[roster.find(csv.field(0))];
        a.is_manager = csv.as_bool(1);
        a.leader = csv.as_bool(2);
        a.senior = csv.as_bool(3);
        a.gender = csv.as_bool(4);
    }
    return table;
}

void write_attributes(std::ostream& out, const Roster& roster, const AttributeTable& attributes) {
    out << "employee,is_manager,leader,senior,gender\n";
    for (EmployeeId id = 0; id < attributes.size(); ++id) {
        const auto& a = attributes[id];
        out << roster.name(id) << ',' << int(a.is_manager) << ',' << int(a.leader) << ',' << int(a.senior) << ','
            << int(a.gender) << '\n';
    }
}

std::optional<MatchFeatures> compute_match_features(EmployeeId employee, int anchor_week, const GraphSeries& graphs,
                                                    const NodeMetricTable& table, const WindowSpec& window,
                                                    bool is_manager, FeatureAveraging averaging) {
    MatchFeatures f;
    f.ego = employee;
    f.week = anchor_week;
    f.is_manager = is_manager ? 1.0 : 0.0;
    std::size_t observed = 0, active = 0;
    for (int w = anchor_week + window.start_offset(); w <= anchor_week + window.end_offset(); ++w) {
        if (!graphs.observed(w)) continue;
        ++observed;
        auto r = table.lookup(w, employee);
        if (!r) continue;
        ++active;
        f.connections += r->connections;
        f.volume += r->volume;
        f.clustering += r->clustering;
    }
    if (active == 0) return std::nullopt;
    const double denom = static_cast<double>(averaging == FeatureAveraging::active_weeks ? active : observed);
    f.connections /= denom;
    f.volume /= denom;
    f.clustering /= denom;
    return f;
}

bool ExclusionLedger::excluded(EmployeeId id, int week) const {
    auto it = last_matched_.find(id);
    return it != last_matched_.end() && week - it->second <= window_ && week >= it->second;
}

void ExclusionLedger::record(EmployeeId id, int week) {
    auto [it, inserted] = last_matched_.emplace(id, week);
    if (!inserted) it->second = std::max(it->second, week);
}

Standardizer Standardizer::fit(std::span<const MatchFeatures> pool) {
    Standardizer s;
    for (std::size_t j = 0; j < 4; ++j) {
        std::vector<double> column;
        column.reserve(pool.size());
        for (const auto& f : pool) column.push_back(f.vector()[j]);
        s.mean[j] = departnet::mean(column);
        s.sd[j] = std::sqrt(variance(column));
    }
    return s;
}

std::array<double, 4> Standardizer::apply(const MatchFeatures& f) const {
    auto v = f.vector();
    std::array<double, 4> z{};
    for (std::size_t j = 0; j < 4; ++j) z[j] = sd[j] > 0.0 ? (v[j] - mean[j]) / sd[j] : 0.0;
    return z;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_below(0)");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % n;
}

std::optional<MatchAssignment> find_matches(EmployeeId treated, int t_star, const std::array<double, 4>& treated_z,
                                            std::span<const Candidate> pool, const MatchOptions& options,
                                            ExclusionLedger& ledger, std::mt19937_64& rng) {
    struct Scored {
        double distance;
        EmployeeId id;
    };
    std::vector<Scored> scored;
    scored.reserve(pool.size());
    for (const auto& c : pool) {
        if (c.id == treated || ledger.excluded(c.id, t_star)) continue;
        double d2 = 0.0;
        for (std::size_t j = 0; j < 4; ++j) d2 += (c.z[j] - treated_z[j]) * (c.z[j] - treated_z[j]);
        scored.push_back({std::sqrt(d2), c.id});
    }
    const auto m = static_cast<std::size_t>(options.m);
    if (scored.size() < m || m == 0) return std::nullopt;
    const auto k = std::min(scored.size(), static_cast<std::size_t>(std::max(options.k, options.m)));
    auto by_rank = [](const Scored& a, const Scored& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
    };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), by_rank);

    // Partial Fisher-Yates over the kNN ranks.
    std::vector<std::size_t> ranks(k);
    std::iota(ranks.begin(), ranks.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_below(rng, k - i));
        std::swap(ranks[i], ranks[j]);
    }
    ranks.resize(m);
    std::sort(ranks.begin(), ranks.end());

    MatchAssignment a;
    a.treated_ego = treated;
    a.t_star = t_star;
    for (auto r : ranks) {
        a.controls.push_back(scored[r].id);
        a.distances.push_back(scored[r].distance);
        ledger.record(scored[r].id, t_star);
    }
    return a;
}

CohortMatch match_departures(std::span<const DepartureEvent> departures,
                             const std::vector<std::vector<EmployeeId>>& neighbor_sets, const GraphSeries& graphs,
                             const NodeMetricTable& table, const AttributeTable& attributes, std::size_t roster_size,
                             const WindowSpec& window, const MatchOptions& options) {
    if (neighbor_sets.size() != departures.size()) throw DataError("one neighbor set per departure is required");
    CohortMatch result;
    std::vector<char> departing(roster_size, 0);
    for (const auto& d : departures) departing[d.ego] = 1;
    const auto spans = activity_spans(graphs, roster_size);
    auto manager = [&](EmployeeId id) { return id < attributes.size() && attributes[id].is_manager; };

    std::vector<std::size_t> order(departures.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return departures[a].t_star != departures[b].t_star ? departures[a].t_star < departures[b].t_star
                                                            : departures[a].ego < departures[b].ego;
    });

    ExclusionLedger ledger(options.exclusion_weeks);
    std::mt19937_64 rng(options.seed);
    std::size_t i = 0;
    while (i < order.size()) {
        const int week = departures[order[i]].t_star;
        std::size_t end = i;
        while (end < order.size() && departures[order[end]].t_star == week) ++end;

        // Week pool: present at the anchor week, never departing, with features.
        std::vector<MatchFeatures> pool;
        for (EmployeeId id = 0; id < roster_size; ++id) {
            if (departing[id] || !spans[id] || spans[id]->last < week) continue;
            if (auto f = compute_match_features(id, week, graphs, table, window, manager(id), options.averaging))
                pool.push_back(*f);
        }
        const auto standardizer = Standardizer::fit(pool);
        std::vector<Candidate> candidates;
        candidates.reserve(pool.size());
        for (const auto& f : pool) candidates.push_back({f.ego, standardizer.apply(f), f.is_manager > 0.5});

        for (; i < end; ++i) {
            const auto& dep = departures[order[i]];
            const auto& excluded = neighbor_sets[order[i]];
            auto features = compute_match_features(dep.ego, week, graphs, table, window, manager(dep.ego),
                                                   options.averaging);
            if (!features) {
                ++result.dropped_no_features;
                continue;
            }
            std::vector<Candidate> eligible;
            eligible.reserve(candidates.size());
            for (const auto& c : candidates) {
                if (std::binary_search(excluded.begin(), excluded.end(), c.id)) continue;
                if (options.exact_manager && c.is_manager != manager(dep.ego)) continue;
                eligible.push_back(c);
            }
            auto match = find_matches(dep.ego, week, standardizer.apply(*features), eligible, options, ledger, rng);
            if (!match) {
                ++result.dropped_small_pool;
                continue;
            }
            result.assignments.push_back(std::move(*match));
        }
    }
    return result;
}

void write_assignments(std::ostream& out, const std::vector<MatchAssignment>& assignments, const Roster& roster) {
    out << "treated_ego,t_star,control_ego,distance\n";
    for (const auto& a : assignments)
        for (std::size_t k = 0; k < a.controls.size(); ++k)
            out << roster.name(a.treated_ego) << ',' << a.t_star << ',' << roster.name(a.controls[k]) << ','
                << format_double(a.distances[k]) << '\n';
}

std::vector<MatchAssignment> read_assignments(std::istream& in, const Roster& roster) {
    CsvReader csv(in, {"treated_ego", "t_star", "control_ego", "distance"}, "assignments");
    std::vector<MatchAssignment> out;
    while (csv.next()) {
        const auto ego = roster.find(csv.field(0));
        const int t_star = csv.as_int(1);
        if (out.empty() || out.back().treated_ego != ego || out.back().t_star != t_star) {
            MatchAssignment a;
            a.treated_ego = ego;
            a.t_star = t_star;
            out.push_back(std::move(a));
        }
        out.back().controls.push_back(roster.find(csv.field(2)));
        out.back().distances.push_back(csv.as_double(3));
    }
    return out;
}

MatchDiagnostics match_diagnostics(std::span<const MatchAssignment> assignments, std::span<const MetricSeries> series,
                                   double bin_width) {
    MatchDiagnostics diag;
    std::map<int, std::vector<double>> by_week;
    double max_distance = 0.0;
    for (const auto& a : assignments)
        for (double d : a.distances) {
            by_week[a.t_star].push_back(d);
            max_distance = std::max(max_distance, d);
        }
    const auto bins = static_cast<std::size_t>(std::floor(max_distance / bin_width)) + 1;
    for (const auto& [week, distances] : by_week) {
        std::vector<std::size_t> counts(bins, 0);
        for (double d : distances) ++counts[std::min(bins - 1, static_cast<std::size_t>(std::floor(d / bin_width)))];
        for (std::size_t b = 0; b < bins; ++b)
            diag.histogram.push_back({week, b * bin_width, (b + 1) * bin_width, counts[b]});
    }

    std::map<std::pair<Metric, bool>, std::vector<double>> pre;
    for (const auto& ms : series)
        for (std::size_t k = 0; k < ms.values.size(); ++k)
            if (ms.t_begin + static_cast<int>(k) < 0 && ms.values[k]) pre[{ms.metric, ms.treated}].push_back(*ms.values[k]);
    constexpr std::array<double, 5> levels = {0.05, 0.25, 0.5, 0.75, 0.95};
    for (auto metric : kAllMetrics)
        for (bool treated : {true, false}) {
            auto it = pre.find({metric, treated});
            if (it == pre.end()) continue;
            QuantileRow row;
            row.metric = metric;
            row.treated = treated;
            row.n = it->second.size();
            for (std::size_t j = 0; j < levels.size(); ++j) row.q[j] = quantile(it->second, levels[j]);
            diag.quantiles.push_back(row);
        }
    return diag;
}

void write_histogram(std::ostream& out, const std::vector<DistanceBin>& bins) {
    out << "anchor_week,bin_lo,bin_hi,count\n";
    for (const auto& b : bins)
        out << b.anchor_week << ',' << format_double(b.lo) << ',' << format_double(b.hi) << ',' << b.count << '\n';
}

void write_quantiles(std::ostream& out, const std::vector<QuantileRow>& rows) {
    out << "metric,group,n,q05,q25,q50,q75,q95\n";
    for (const auto& r : rows) {
        out << metric_name(r.metric) << ',' << (r.treated ? "treated" : "control") << ',' << r.n;
        for (double q : r.q) out << ',' << format_double(q);
        out << '\n';
    }
}

}  // namespace departnet
