#include "departnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include "departnet/numeric.hpp"
#include "departnet/table_io.hpp"

namespace departnet {

TreatedCohort build_treated_sets(const GraphSeries& graphs, std::span<const DepartureEvent> departures,
                                 const WindowSpec& window) {
    TreatedCohort out;
    for (const auto& d : departures) {
        bool any = false;
        for (int w = d.t_star + window.start_offset(); w <= d.t_star + window.end_offset(); ++w)
            any = any || graphs.observed(w);
        if (!any) {
            ++out.dropped_no_window;
            continue;
        }
        auto set = build_socialization_set(graphs, d.ego, d.t_star, window, true);
        if (!set) {
            ++out.dropped_empty;
            continue;
        }
        out.departures.push_back(d);
        out.sets.push_back(std::move(*set));
    }
    return out;
}

MatchedCohort match_cohort(const TreatedCohort& cohort, const GraphSeries& graphs, const NodeMetricTable& table,
                           const AttributeTable& attributes, std::size_t roster_size, const PipelineConfig& config) {
    MatchedCohort out;
    std::vector<std::vector<EmployeeId>> neighbors;
    neighbors.reserve(cohort.sets.size());
    for (const auto& s : cohort.sets) neighbors.push_back(s.members);
    out.match = match_departures(cohort.departures, neighbors, graphs, table, attributes, roster_size, config.window,
                                 config.matching);
    for (const auto& a : out.match.assignments) {
        auto it = std::find_if(cohort.sets.begin(), cohort.sets.end(), [&](const SocializationSet& s) {
            return s.ego == a.treated_ego && s.t_star == a.t_star;
        });
        out.treated.push_back(*it);
        for (auto c : a.controls) {
            auto set = build_socialization_set(graphs, c, a.t_star, config.window, false);
            if (set) out.controls.push_back(std::move(*set));
            else ++out.dropped_controls;
        }
    }
    return out;
}

std::vector<MetricSeries> flatten(std::vector<std::vector<MetricSeries>> nested) {
    std::vector<MetricSeries> out;
    for (auto& v : nested)
        for (auto& s : v) out.push_back(std::move(s));
    return out;
}

CohortRun run_cohort(const EventLog& log, const AttributeTable& attributes, const PipelineConfig& config) {
    CohortRun run;
    EventLog filtered{log.roster, filter_excluded(log.events, config.calendar)};
    run.graphs = build_graph_series(filtered, config.calendar, config.weighting);
    run.table = compute_node_metrics(run.graphs);
    run.departures = detect_departures(run.graphs, log.roster.size(), config.lookahead);
    run.treated = build_treated_sets(run.graphs, run.departures, config.window);
    run.matched = match_cohort(run.treated, run.graphs, run.table, attributes, log.roster.size(), config);

    std::vector<SocializationSet> all = run.matched.treated;
    all.insert(all.end(), run.matched.controls.begin(), run.matched.controls.end());
    run.series = flatten(compute_series(all, run.graphs, run.table, log.roster, config.horizon));
    run.panels = assemble_panel(all, run.series, log.roster, config.split, config.horizon);
    return run;
}

EgoAttributeTable ego_attribute_table(std::span<const SocializationSet> treated_sets, const GraphSeries& graphs,
                                      const NodeMetricTable& table, const AttributeTable& attributes,
                                      const Roster& roster) {
    EgoAttributeTable out;
    out.names = {"leader", "senior", "gender", "volume", "connections", "clustering", "diversity"};
    out.binary = {true, true, true, false, false, false, false};
    for (const auto& s : treated_sets) {
        IndividualRecord sum;
        int active = 0;
        for (int w = s.t_star + s.start_offset; w <= s.t_star + s.end_offset; ++w) {
            if (!graphs.observed(w)) continue;
            if (auto r = table.lookup(w, s.ego)) {
                sum.volume += r->volume;
                sum.connections += r->connections;
                sum.clustering += r->clustering;
                sum.diversity += r->diversity;
                ++active;
            }
        }
        const double k = active ? active : 1.0;
        const auto a = s.ego < attributes.size() ? attributes[s.ego] : EmployeeAttributes{};
        out.by_set[s.set_id(roster)] = {double(a.leader), double(a.senior), double(a.gender), sum.volume / k,
                                        sum.connections / k, sum.clustering / k, sum.diversity / k};
    }
    return out;
}

std::vector<double> model_free_did(const Panel& panel, int t_minus, int t_plus) {
    const int pre_lo = 2 * t_minus, post_hi = 2 * t_plus - 1;
    struct Acc {
        double pre = 0, post = 0;
        int n_pre = 0, n_post = 0;
        bool treated = false;
    };
    std::map<std::pair<std::string, Metric>, Acc> sets;
    for (const auto& r : panel.rows) {
        if (r.t < pre_lo || r.t > post_hi) continue;
        auto& a = sets[{r.set_id, r.metric}];
        a.treated = r.treated;
        if (r.t <= 0) {
            a.pre += r.y;
            ++a.n_pre;
        } else {
            a.post += r.y;
            ++a.n_post;
        }
    }
    std::vector<double> sum(2 * kMetricCount, 0.0), count(2 * kMetricCount, 0.0);
    for (const auto& [key, a] : sets) {
        if (!a.n_pre || !a.n_post) continue;
        const auto slot = 2 * static_cast<std::size_t>(key.second) + (a.treated ? 1 : 0);
        sum[slot] += a.post / a.n_post - a.pre / a.n_pre;
        count[slot] += 1;
    }
    std::vector<double> out(kMetricCount, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t m = 0; m < kMetricCount; ++m)
        if (count[2 * m] > 0 && count[2 * m + 1] > 0)
            out[m] = sum[2 * m + 1] / count[2 * m + 1] - sum[2 * m] / count[2 * m];
    return out;
}

std::vector<OracleBand> oracle_expected_did(const SimConfig& sim, const PipelineConfig& config, int replicates) {
    if (replicates < 100) throw ConfigError("oracle needs at least 100 replicates");
    std::vector<std::vector<double>> dids(static_cast<std::size_t>(replicates));
    std::vector<std::string> errors(static_cast<std::size_t>(replicates));
    auto pooled = config;
    pooled.split.reset();
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < replicates; ++r) {
        try {
            auto sc = sim;
            sc.seed = sim.seed + static_cast<std::uint64_t>(r);
            auto pc = pooled;
            pc.matching.seed = pooled.matching.seed + static_cast<std::uint64_t>(r);
            auto out = generate_log(sc);
            auto run = run_cohort(out.log, out.attributes, pc);
            dids[static_cast<std::size_t>(r)] =
                model_free_did(run.panels.at(0), pc.inference.t_minus, pc.inference.t_plus);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(r)] = e.what();
        }
    }
    for (int r = 0; r < replicates; ++r)
        if (!errors[static_cast<std::size_t>(r)].empty())
            throw DataError("oracle replicate " + std::to_string(r) + ": " + errors[static_cast<std::size_t>(r)]);

    std::vector<OracleBand> out;
    for (auto metric : kAllMetrics) {
        std::vector<double> v;
        for (const auto& d : dids)
            if (std::isfinite(d[static_cast<std::size_t>(metric)])) v.push_back(d[static_cast<std::size_t>(metric)]);
        if (v.empty()) continue;
        out.push_back({metric, mean(v), quantile(v, 0.025), quantile(v, 0.975), v.size()});
    }
    return out;
}

void write_oracle(std::ostream& out, const std::vector<OracleBand>& bands) {
    out << "metric,mean_did,lo,hi\n";
    for (const auto& b : bands)
        out << metric_name(b.metric) << ',' << format_double(b.mean_did) << ',' << format_double(b.lo) << ','
            << format_double(b.hi) << '\n';
}

std::vector<OracleBand> read_oracle(std::istream& in) {
    CsvReader csv(in, {"metric", "mean_did", "lo", "hi"}, "oracle");
    std::vector<OracleBand> out;
    while (csv.next()) out.push_back({parse_metric(csv.field(0)), csv.as_double(1), csv.as_double(2), csv.as_double(3), 0});
    return out;
}

}  // namespace departnet
