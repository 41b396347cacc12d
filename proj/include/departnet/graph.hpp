#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "departnet/core.hpp"
#include "departnet/ingest.hpp"

namespace departnet {

enum class Weighting { sum, harmonic };
Weighting parse_weighting(std::string_view text);
std::string_view to_string(Weighting w);

struct Edge {
    EmployeeId u = 0;  // u < v
    EmployeeId v = 0;
    double weight = 0.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

// Undirected weighted graph over a sorted node set with CSR adjacency in
// local (position-in-nodes) indices. Nodes may be isolated; weekly graphs
// built from events never are.
class Graph {
public:
    Graph() = default;
    // nodes sorted and unique; edges sorted by (u, v), u < v, endpoints in nodes, weight > 0.
    Graph(std::vector<EmployeeId> nodes, std::vector<Edge> edges);

    [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }
    [[nodiscard]] std::size_t edge_count() const { return edges_.size(); }
    [[nodiscard]] bool empty() const { return nodes_.empty(); }
    [[nodiscard]] std::span<const EmployeeId> nodes() const { return nodes_; }
    [[nodiscard]] std::span<const Edge> edges() const { return edges_; }

    [[nodiscard]] std::optional<std::uint32_t> index_of(EmployeeId id) const;
    [[nodiscard]] bool contains(EmployeeId id) const { return index_of(id).has_value(); }

    [[nodiscard]] std::span<const std::uint32_t> adjacent(std::uint32_t local) const {
        return {adj_.data() + offsets_[local], adj_.data() + offsets_[local + 1]};
    }
    [[nodiscard]] std::span<const double> adjacent_weights(std::uint32_t local) const {
        return {adj_weight_.data() + offsets_[local], adj_weight_.data() + offsets_[local + 1]};
    }
    [[nodiscard]] std::size_t degree(std::uint32_t local) const {
        return offsets_[local + 1] - offsets_[local];
    }
    [[nodiscard]] double total_weight() const;

    // Induced subgraph on subset ∩ nodes(); subset must be sorted.
    [[nodiscard]] Graph induced(std::span<const EmployeeId> subset) const;

    friend bool operator==(const Graph& a, const Graph& b) {
        return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
    }

private:
    std::vector<EmployeeId> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::size_t> offsets_{0};
    std::vector<std::uint32_t> adj_;
    std::vector<double> adj_weight_;
};

struct WeeklyGraph {
    int week = 0;
    Graph graph;

    friend bool operator==(const WeeklyGraph&, const WeeklyGraph&) = default;
};

// Adjacent node ids; empty when the node is absent.
std::vector<EmployeeId> neighbors(const Graph& graph, EmployeeId node);

// 2ab/(a+b) when both directions are present, nullopt otherwise.
std::optional<double> harmonic_symmetrize(double forward, double backward);

struct DirectedPairWeight {
    EmployeeId u = 0;  // u < v
    EmployeeId v = 0;
    double forward = 0.0;   // u -> v
    double backward = 0.0;  // v -> u
};
std::vector<Edge> harmonic_symmetrize(std::span<const DirectedPairWeight> pairs);

// Aggregates one week's events. Sum mode: a dm adds 1 to its pair, a group
// event with k participants adds 1/k to each listed participant pair. Harmonic
// mode: dms are directed sender -> recipient, group shares go both ways, and
// the pair weight is the harmonic mean of the two directions.
WeeklyGraph build_weekly_graph(std::span<const EventRecord> events, int week, Weighting mode);

// All observed weeks in [first_week, last_week]; excluded weeks carry no graph.
class GraphSeries {
public:
    GraphSeries() = default;
    GraphSeries(int first_week, int last_week, std::vector<int> excluded);

    [[nodiscard]] int first_week() const { return first_week_; }
    [[nodiscard]] int last_week() const { return last_week_; }
    [[nodiscard]] const std::vector<int>& excluded() const { return excluded_; }
    [[nodiscard]] bool observed(int week) const;
    // nullptr for weeks out of range or excluded.
    [[nodiscard]] const Graph* at(int week) const;
    void set(int week, Graph graph);
    [[nodiscard]] std::vector<int> observed_weeks() const;

    friend bool operator==(const GraphSeries&, const GraphSeries&) = default;

private:
    int first_week_ = 0;
    int last_week_ = -1;
    std::vector<int> excluded_;
    std::vector<std::optional<Graph>> graphs_;
};

// Week range defaults to the span of event weeks. Parallel over weeks.
GraphSeries build_graph_series(const EventLog& log, const CalendarConfig& calendar, Weighting mode,
                               std::optional<std::pair<int, int>> week_range = std::nullopt);
GraphSeries build_graph_series_serial(const EventLog& log, const CalendarConfig& calendar,
                                      Weighting mode,
                                      std::optional<std::pair<int, int>> week_range = std::nullopt);

// Edge list `week,src,dst,weight` with 9 significant digits; pairs as (min id, max id).
void write_graph_edges(std::ostream& out, const GraphSeries& series, const Roster& roster);
// Reads edges into a series whose range/exclusions come from the caller;
// names are interned into `roster`, which is canonicalized afterwards.
GraphSeries read_graph_edges(std::istream& in, int first_week, int last_week,
                             std::vector<int> excluded, Roster& roster);

std::string format_weight(double w);

}  // namespace departnet
