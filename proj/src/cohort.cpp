#include "departnet/cohort.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <tuple>

#include "departnet/table_io.hpp"

namespace departnet {

std::vector<std::optional<ActivitySpan>> activity_spans(const GraphSeries& graphs, std::size_t roster_size) {
    std::vector<std::optional<ActivitySpan>> spans(roster_size);
    for (int w : graphs.observed_weeks()) {
        for (auto id : graphs.at(w)->nodes()) {
            if (id >= roster_size) throw DataError("graph node outside the roster");
            auto& s = spans[id];
            if (!s) s = ActivitySpan{w, w};
            else s->last = w;  // weeks visited in increasing order
        }
    }
    return spans;
}

std::vector<DepartureEvent> detect_departures(const GraphSeries& graphs, std::size_t roster_size,
                                              int lookahead) {
    const int horizon = graphs.last_week();
    if (lookahead < 0 || lookahead > horizon - graphs.first_week())
        throw DataError("lookahead of " + std::to_string(lookahead) + " weeks exceeds the data span of " +
                        std::to_string(horizon - graphs.first_week()) + " weeks");
    std::vector<DepartureEvent> out;
    auto spans = activity_spans(graphs, roster_size);
    for (EmployeeId id = 0; id < spans.size(); ++id) {
        if (!spans[id]) continue;
        const int t_star = spans[id]->last + 1;
        if (horizon - t_star >= lookahead) out.push_back({id, t_star, spans[id]->last});
    }
    std::sort(out.begin(), out.end(), [](const DepartureEvent& a, const DepartureEvent& b) {
        return std::tie(a.t_star, a.ego) < std::tie(b.t_star, b.ego);
    });
    return out;
}

std::string SocializationSet::set_id(const Roster& roster) const {
    return roster.name(ego) + "@" + std::to_string(t_star);
}

std::optional<SocializationSet> build_socialization_set(const GraphSeries& graphs, EmployeeId ego,
                                                        int t_star, const WindowSpec& window, bool treated) {
    SocializationSet set;
    set.ego = ego;
    set.t_star = t_star;
    set.start_offset = window.start_offset();
    set.end_offset = window.end_offset();
    set.treated = treated;
    bool any_week = false;
    for (int w = t_star + set.start_offset; w <= t_star + set.end_offset; ++w) {
        const Graph* g = graphs.at(w);
        if (!g) continue;
        any_week = true;
        auto adj = neighbors(*g, ego);
        set.members.insert(set.members.end(), adj.begin(), adj.end());
    }
    if (!any_week)
        throw DataError("no observed weeks in the freeze window of set anchored at week " + std::to_string(t_star));
    std::sort(set.members.begin(), set.members.end());
    set.members.erase(std::unique(set.members.begin(), set.members.end()), set.members.end());
    if (set.members.empty()) return std::nullopt;
    return set;
}

Graph group_subgraph(const Graph& week_graph, const SocializationSet& set) {
    return week_graph.induced(set.members);
}

EgoNetwork ego_network(const Graph& week_graph, EmployeeId member) {
    EgoNetwork net;
    net.center = member;
    if (!week_graph.contains(member)) return net;
    auto keep = neighbors(week_graph, member);
    keep.insert(std::lower_bound(keep.begin(), keep.end(), member), member);
    net.graph = week_graph.induced(keep);
    net.active = true;
    return net;
}

void write_sets(std::ostream& out, const std::vector<SocializationSet>& sets, const Roster& roster) {
    out << "ego,t_star,treated,member\n";
    for (const auto& s : sets)
        for (auto m : s.members)
            out << roster.name(s.ego) << ',' << s.t_star << ',' << (s.treated ? 1 : 0) << ','
                << roster.name(m) << '\n';
}

std::vector<SocializationSet> read_sets(std::istream& in, const Roster& roster, const WindowSpec& window) {
    CsvReader csv(in, {"ego", "t_star", "treated", "member"}, "sets");
    std::vector<SocializationSet> sets;
    std::map<std::tuple<EmployeeId, int, bool>, std::size_t> index;
    while (csv.next()) {
        const auto ego = roster.find(csv.field(0));
        const int t_star = csv.as_int(1);
        const bool treated = csv.as_bool(2);
        auto key = std::make_tuple(ego, t_star, treated);
        auto it = index.find(key);
        if (it == index.end()) {
            SocializationSet s;
            s.ego = ego;
            s.t_star = t_star;
            s.treated = treated;
            s.start_offset = window.start_offset();
            s.end_offset = window.end_offset();
            it = index.emplace(key, sets.size()).first;
            sets.push_back(std::move(s));
        }
        sets[it->second].members.push_back(roster.find(csv.field(3)));
    }
    for (auto& s : sets) {
        std::sort(s.members.begin(), s.members.end());
        if (std::adjacent_find(s.members.begin(), s.members.end()) != s.members.end())
            throw DataError("sets: duplicate member in set " + s.set_id(roster));
        if (std::binary_search(s.members.begin(), s.members.end(), s.ego))
            throw DataError("sets: ego listed as its own member in " + s.set_id(roster));
    }
    return sets;
}

void write_departures(std::ostream& out, const std::vector<DepartureEvent>& departures, const Roster& roster) {
    out << "ego,t_star,last_active_week\n";
    for (const auto& d : departures)
        out << roster.name(d.ego) << ',' << d.t_star << ',' << d.last_active_week << '\n';
}

std::vector<DepartureEvent> read_departures(std::istream& in, const Roster& roster) {
    CsvReader csv(in, {"ego", "t_star", "last_active_week"}, "departures");
    std::vector<DepartureEvent> out;
    while (csv.next()) out.push_back({roster.find(csv.field(0)), csv.as_int(1), csv.as_int(2)});
    return out;
}

}  // namespace departnet
