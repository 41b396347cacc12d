#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "departnet/cohort.hpp"
#include "departnet/metrics.hpp"

namespace departnet {

struct PanelRow {
    std::string set_id;
    bool treated = true;
    int t = 0;
    Metric metric = Metric::closeness;
    double y = 0;
    double baseline_size = 0;  // log(1 + |members|)
    int anchor_week = 0;       // t_star

    friend bool operator==(const PanelRow&, const PanelRow&) = default;
};

struct PeriodSplit {
    int cutoff_week = 0;
    int buffer = 4;

    // 1 before the cutoff, 2 after, nullopt inside the buffer.
    [[nodiscard]] std::optional<int> period_of(int t_star) const;
};

struct Panel {
    int period = 0;  // 0 unsplit, else 1 or 2
    std::vector<PanelRow> rows;
    std::vector<std::string> diagnostics;
};

// log(1 + f) for the log family (throws DataError on negative input), identity otherwise.
double transform_value(double value, Metric metric);

// Transforms and z-scores each metric over the table's rows in place.
// Metrics with zero variance are removed and reported in diagnostics.
void standardize(Panel& panel);

// One row per observed (set, t, metric); t is limited to [-horizon, horizon].
// Sets are matched to series by set id; a series without a set is an error.
// With a split, sets are routed by t_star and the buffered ones dropped.
std::vector<Panel> assemble_panel(std::span<const SocializationSet> sets, std::span<const MetricSeries> series,
                                  const Roster& roster, const std::optional<PeriodSplit>& split,
                                  int horizon = 16);

// Rows of one metric, in table order.
std::vector<PanelRow> rows_for(const Panel& panel, Metric metric);
// Metrics present in the panel, in kAllMetrics order.
std::vector<Metric> panel_metrics(const Panel& panel);

void write_panel(std::ostream& out, const Panel& panel);
Panel read_panel(std::istream& in, int period = 0);

}  // namespace departnet
