#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "departnet/cohort.hpp"
#include "departnet/graph.hpp"

namespace departnet {

enum class Metric : std::uint8_t {
    closeness,
    closure,
    components,
    largest_component_share,
    connections,
    volume,
    n_active,
    clustering_ind,
    connections_ind,
    volume_ind,
    diversity_ind,
};
inline constexpr std::size_t kMetricCount = 11;
inline constexpr std::array<Metric, kMetricCount> kAllMetrics = {
    Metric::closeness,       Metric::closure,        Metric::components,
    Metric::largest_component_share, Metric::connections, Metric::volume,
    Metric::n_active,        Metric::clustering_ind, Metric::connections_ind,
    Metric::volume_ind,      Metric::diversity_ind,
};

std::string_view metric_name(Metric m);
Metric parse_metric(std::string_view name);
bool is_group_metric(Metric m);
// Heavy-tailed metrics that enter the model through log(1 + f).
bool is_log_metric(Metric m);

// Group perspective. Empty graphs yield 0 throughout.

// Mean of 1/d(u,v) over unordered node pairs, hop distances, 1/inf = 0.
double closeness(const Graph& g);
// Mean local clustering coefficient; nodes of degree < 2 count as 0.
double closure(const Graph& g);
std::size_t components(const Graph& g);
double largest_component_share(const Graph& g);
double group_connections(const Graph& g);
double group_volume(const Graph& g);
std::size_t n_active(const Graph& g);

struct GroupRecord {
    double closeness = 0, closure = 0, components = 0, largest_component_share = 0;
    double connections = 0, volume = 0, n_active = 0;
};
GroupRecord group_metrics(const Graph& g);

// Individual perspective of one member in one week.
struct IndividualRecord {
    double clustering = 0;
    double connections = 0;  // number of alters
    double volume = 0;       // weighted degree
    double diversity = 0;    // components of the ego network minus the center

    friend bool operator==(const IndividualRecord&, const IndividualRecord&) = default;
};
// nullopt when the member is inactive that week.
std::optional<IndividualRecord> individual_metrics(const EgoNetwork& ego);
// Same values computed directly on the week graph, without materializing the ego network.
std::optional<IndividualRecord> individual_metrics(const Graph& week_graph, EmployeeId member);

// Unweighted mean over the records; nullopt when empty.
std::optional<IndividualRecord> aggregate_individual(std::span<const IndividualRecord> records);

// Individual metrics for every active node of every observed week.
class NodeMetricTable {
public:
    NodeMetricTable() = default;
    NodeMetricTable(int first_week, std::vector<std::vector<IndividualRecord>> per_week,
                    std::vector<std::vector<EmployeeId>> nodes);

    [[nodiscard]] std::optional<IndividualRecord> lookup(int week, EmployeeId id) const;
    [[nodiscard]] int first_week() const { return first_week_; }
    [[nodiscard]] std::size_t week_count() const { return records_.size(); }
    [[nodiscard]] std::span<const EmployeeId> nodes(int week) const;
    [[nodiscard]] std::span<const IndividualRecord> records(int week) const;

    friend bool operator==(const NodeMetricTable&, const NodeMetricTable&) = default;

private:
    int first_week_ = 0;
    std::vector<std::vector<IndividualRecord>> records_;
    std::vector<std::vector<EmployeeId>> nodes_;
};

NodeMetricTable compute_node_metrics(const GraphSeries& graphs);         // OpenMP over (week, node)
NodeMetricTable compute_node_metrics_serial(const GraphSeries& graphs);  // reference

void write_node_metrics(std::ostream& out, const NodeMetricTable& table, const Roster& roster);
NodeMetricTable read_node_metrics(std::istream& in, const GraphSeries& graphs, const Roster& roster);

// Series over relative weeks [t_begin, t_begin + size), clipped to the data
// range; unobserved weeks and empty individual aggregates are nullopt.
struct MetricSeries {
    std::string set_id;
    bool treated = true;
    Metric metric = Metric::closeness;
    int t_begin = 0;
    std::vector<std::optional<double>> values;

    [[nodiscard]] std::optional<double> at(int t) const;
    friend bool operator==(const MetricSeries&, const MetricSeries&) = default;
};

// One series per metric, in kAllMetrics order.
std::vector<MetricSeries> build_metric_series(const SocializationSet& set, const GraphSeries& graphs,
                                              const NodeMetricTable& table, const Roster& roster,
                                              int horizon = 16);

// All sets; OpenMP over (set, week) with a serial reference.
std::vector<std::vector<MetricSeries>> compute_series(std::span<const SocializationSet> sets,
                                                      const GraphSeries& graphs, const NodeMetricTable& table,
                                                      const Roster& roster, int horizon = 16);
std::vector<std::vector<MetricSeries>> compute_series_serial(std::span<const SocializationSet> sets,
                                                             const GraphSeries& graphs,
                                                             const NodeMetricTable& table,
                                                             const Roster& roster, int horizon = 16);

// Long format `set_id,treated,t,metric,value`; empty value means missing.
void write_series(std::ostream& out, const std::vector<std::vector<MetricSeries>>& series);
std::vector<MetricSeries> read_series(std::istream& in);

}  // namespace departnet
