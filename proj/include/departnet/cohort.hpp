#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "departnet/graph.hpp"

namespace departnet {

struct DepartureEvent {
    EmployeeId ego = 0;
    int t_star = 0;  // first fully inactive week
    int last_active_week = 0;

    friend bool operator==(const DepartureEvent&, const DepartureEvent&) = default;
};

// First/last observed activity per employee (nullopt if never active).
struct ActivitySpan {
    int first = 0;
    int last = 0;
};
std::vector<std::optional<ActivitySpan>> activity_spans(const GraphSeries& graphs, std::size_t roster_size);

// An ego departs at t_star = last_active + 1 when the data extends at least
// `lookahead` weeks past t_star. Sorted by (t_star, ego).
std::vector<DepartureEvent> detect_departures(const GraphSeries& graphs, std::size_t roster_size,
                                              int lookahead);

struct WindowSpec {
    int buffer = 6;
    int freeze = 4;
    bool right_exclusive = false;  // [t*-buffer-freeze, t*-buffer) instead of both-inclusive

    [[nodiscard]] int start_offset() const { return -(buffer + freeze); }
    [[nodiscard]] int end_offset() const { return right_exclusive ? -buffer - 1 : -buffer; }
};

struct SocializationSet {
    EmployeeId ego = 0;
    int t_star = 0;
    std::vector<EmployeeId> members;  // sorted, ego excluded
    int start_offset = -10;
    int end_offset = -6;
    bool treated = true;

    [[nodiscard]] std::string set_id(const Roster& roster) const;

    friend bool operator==(const SocializationSet&, const SocializationSet&) = default;
};

// Union of the ego's weekly neighbors over the freeze window. Throws DataError
// when no week of the window is observed; nullopt when the union is empty.
std::optional<SocializationSet> build_socialization_set(const GraphSeries& graphs, EmployeeId ego,
                                                        int t_star, const WindowSpec& window,
                                                        bool treated = true);

// Induced weighted graph on members active in the week (isolated members kept).
Graph group_subgraph(const Graph& week_graph, const SocializationSet& set);

struct EgoNetwork {
    Graph graph;  // induced on {center} ∪ neighbors(center)
    EmployeeId center = 0;
    bool active = false;
};
EgoNetwork ego_network(const Graph& week_graph, EmployeeId member);

// Long format `ego,t_star,treated,member`.
void write_sets(std::ostream& out, const std::vector<SocializationSet>& sets, const Roster& roster);
std::vector<SocializationSet> read_sets(std::istream& in, const Roster& roster, const WindowSpec& window);

void write_departures(std::ostream& out, const std::vector<DepartureEvent>& departures, const Roster& roster);
std::vector<DepartureEvent> read_departures(std::istream& in, const Roster& roster);

}  // namespace departnet
