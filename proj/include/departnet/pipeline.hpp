#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "departnet/cohort.hpp"
#include "departnet/graph.hpp"
#include "departnet/ingest.hpp"
#include "departnet/matching.hpp"
#include "departnet/metrics.hpp"
#include "departnet/model.hpp"
#include "departnet/panel.hpp"
#include "departnet/synth.hpp"

namespace departnet {

struct PipelineConfig {
    CalendarConfig calendar;
    WindowSpec window;
    int horizon = 16;
    int lookahead = 12;
    Weighting weighting = Weighting::sum;
    MatchOptions matching;
    std::optional<PeriodSplit> split;
    ModelSpec model;
    FitOptions fit;
    InferenceOptions inference;
    bool heterogeneous = true;
};

struct TreatedCohort {
    std::vector<DepartureEvent> departures;  // those with a non-empty set
    std::vector<SocializationSet> sets;      // aligned with departures
    std::size_t dropped_no_window = 0;
    std::size_t dropped_empty = 0;
};

TreatedCohort build_treated_sets(const GraphSeries& graphs, std::span<const DepartureEvent> departures,
                                 const WindowSpec& window);

struct MatchedCohort {
    CohortMatch match;
    std::vector<SocializationSet> treated;   // sets of matched departures
    std::vector<SocializationSet> controls;  // non-empty control sets
    std::size_t dropped_controls = 0;
};

MatchedCohort match_cohort(const TreatedCohort& cohort, const GraphSeries& graphs, const NodeMetricTable& table,
                           const AttributeTable& attributes, std::size_t roster_size, const PipelineConfig& config);

// Everything up to the panels, in memory.
struct CohortRun {
    GraphSeries graphs;
    NodeMetricTable table;
    std::vector<DepartureEvent> departures;
    TreatedCohort treated;
    MatchedCohort matched;
    std::vector<MetricSeries> series;  // treated sets first, then controls
    std::vector<Panel> panels;
};

CohortRun run_cohort(const EventLog& log, const AttributeTable& attributes, const PipelineConfig& config);

std::vector<MetricSeries> flatten(std::vector<std::vector<MetricSeries>> nested);

// leader, senior, gender (binary) and the ego's freeze-window mean
// volume, connections, clustering and diversity (continuous).
EgoAttributeTable ego_attribute_table(std::span<const SocializationSet> treated_sets, const GraphSeries& graphs,
                                      const NodeMetricTable& table, const AttributeTable& attributes,
                                      const Roster& roster);

// Model-free difference in differences per metric (NaN when unavailable):
// treated minus control mean of (post mean - pre mean), where the post
// window is [1, 2*t_plus - 1] and the pre window [2*t_minus, 0].
std::vector<double> model_free_did(const Panel& panel, int t_minus = -8, int t_plus = 8);

struct OracleBand {
    Metric metric = Metric::closeness;
    double mean_did = 0;
    double lo = 0;  // 2.5% quantile over replicates
    double hi = 0;  // 97.5% quantile
    std::size_t replicates = 0;
};

// Replicate r simulates with seed + r and matches with the matching seed + r.
// Panels are pooled (no period split).
std::vector<OracleBand> oracle_expected_did(const SimConfig& sim, const PipelineConfig& config, int replicates);

void write_oracle(std::ostream& out, const std::vector<OracleBand>& bands);
std::vector<OracleBand> read_oracle(std::istream& in);

}  // namespace departnet
