#include "departnet/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>

#include "departnet/numeric.hpp"

namespace departnet {

Weighting parse_weighting(std::string_view text) {
    if (text == "sum") return Weighting::sum;
    if (text == "harmonic") return Weighting::harmonic;
    throw ConfigError("unknown weighting '" + std::string(text) + "' (expected sum or harmonic)");
}

std::string_view to_string(Weighting w) { return w == Weighting::sum ? "sum" : "harmonic"; }

Graph::Graph(std::vector<EmployeeId> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    const auto n = nodes_.size();
    std::vector<std::size_t> deg(n, 0);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> local;
    local.reserve(edges_.size());
    for (const auto& e : edges_) {
        auto a = index_of(e.u);
        auto b = index_of(e.v);
        if (!a || !b) throw DataError("edge endpoint outside the node set");
        if (e.u >= e.v) throw DataError("edge endpoints must satisfy u < v");
        if (!(e.weight > 0.0)) throw DataError("edge weights must be positive");
        ++deg[*a];
        ++deg[*b];
        local.emplace_back(*a, *b);
    }
    offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + deg[i];
    adj_.resize(offsets_[n]);
    adj_weight_.resize(offsets_[n]);
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    // Edges sorted by (u, v) leave each row sorted.
    for (std::size_t k = 0; k < local.size(); ++k) {
        auto [a, b] = local[k];
        adj_[fill[a]] = b;
        adj_weight_[fill[a]++] = edges_[k].weight;
        adj_[fill[b]] = a;
        adj_weight_[fill[b]++] = edges_[k].weight;
    }
}

std::optional<std::uint32_t> Graph::index_of(EmployeeId id) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id);
    if (it == nodes_.end() || *it != id) return std::nullopt;
    return static_cast<std::uint32_t>(it - nodes_.begin());
}

double Graph::total_weight() const {
    ExactAccumulator total;
    for (const auto& e : edges_) total.add(e.weight);
    return total.value();
}

Graph Graph::induced(std::span<const EmployeeId> subset) const {
    std::vector<EmployeeId> keep;
    std::set_intersection(subset.begin(), subset.end(), nodes_.begin(), nodes_.end(),
                          std::back_inserter(keep));
    std::vector<Edge> kept;
    for (auto id : keep) {
        const auto i = *index_of(id);
        auto adj = adjacent(i);
        auto w = adjacent_weights(i);
        for (std::size_t k = 0; k < adj.size(); ++k) {
            const EmployeeId other = nodes_[adj[k]];
            if (other > id && std::binary_search(keep.begin(), keep.end(), other))
                kept.push_back({id, other, w[k]});
        }
    }
    return Graph(std::move(keep), std::move(kept));
}

std::vector<EmployeeId> neighbors(const Graph& graph, EmployeeId node) {
    std::vector<EmployeeId> out;
    auto i = graph.index_of(node);
    if (!i) return out;
    for (auto j : graph.adjacent(*i)) out.push_back(graph.nodes()[j]);
    return out;
}

std::optional<double> harmonic_symmetrize(double forward, double backward) {
    if (!(forward > 0.0) || !(backward > 0.0)) return std::nullopt;
    return 2.0 * forward * backward / (forward + backward);
}

std::vector<Edge> harmonic_symmetrize(std::span<const DirectedPairWeight> pairs) {
    std::vector<Edge> out;
    for (const auto& p : pairs)
        if (auto w = harmonic_symmetrize(p.forward, p.backward)) out.push_back({p.u, p.v, *w});
    return out;
}

namespace {

// A single weight contribution. Tag 0: dm from u to v, 1: dm from v to u,
// k >= 2: share of a group event with k participants.
struct Contribution {
    std::uint64_t key;
    std::uint32_t tag;
};

constexpr std::uint64_t pair_key(EmployeeId a, EmployeeId b) {
    return a < b ? (std::uint64_t{a} << 32) | b : (std::uint64_t{b} << 32) | a;
}

void contribute(const EventRecord& e, std::vector<Contribution>& parts,
                std::vector<EmployeeId>& participants) {
    if (e.kind == EventKind::direct) {
        if (e.recipients.size() != 1) throw DataError("dm event must have exactly one recipient");
        const auto r = e.recipients.front();
        if (r == e.sender) throw DataError("self-addressed dm");
        parts.push_back({pair_key(e.sender, r), e.sender < r ? 0u : 1u});
        return;
    }
    const int k = e.group_size;
    if (k < 2) throw DataError("group event with fewer than 2 participants");
    participants.assign(e.recipients.begin(), e.recipients.end());
    participants.push_back(e.sender);
    std::sort(participants.begin(), participants.end());
    participants.erase(std::unique(participants.begin(), participants.end()), participants.end());
    for (std::size_t i = 0; i < participants.size(); ++i)
        for (std::size_t j = i + 1; j < participants.size(); ++j)
            parts.push_back({pair_key(participants[i], participants[j]), static_cast<std::uint32_t>(k)});
}

Graph reduce_contributions(std::vector<Contribution>& parts, Weighting mode) {
    // Sorting the contributions makes the result independent of event order
    // and bit-reproducible.
    std::sort(parts.begin(), parts.end(), [](const Contribution& a, const Contribution& b) {
        return a.key != b.key ? a.key < b.key : a.tag < b.tag;
    });

    std::vector<Edge> edges;
    std::vector<EmployeeId> nodes;
    for (std::size_t i = 0; i < parts.size();) {
        const auto key = parts[i].key;
        std::uint64_t forward_dm = 0, backward_dm = 0;
        double shared = 0.0;
        while (i < parts.size() && parts[i].key == key) {
            const auto tag = parts[i].tag;
            std::uint64_t count = 0;
            while (i < parts.size() && parts[i].key == key && parts[i].tag == tag) {
                ++count;
                ++i;
            }
            if (tag == 0) forward_dm = count;
            else if (tag == 1) backward_dm = count;
            else shared += static_cast<double>(count) / static_cast<double>(tag);
        }
        const auto u = static_cast<EmployeeId>(key >> 32);
        const auto v = static_cast<EmployeeId>(key & 0xffffffffu);
        double weight = 0.0;
        if (mode == Weighting::sum) {
            weight = static_cast<double>(forward_dm + backward_dm) + shared;
        } else {
            auto h = harmonic_symmetrize(static_cast<double>(forward_dm) + shared,
                                         static_cast<double>(backward_dm) + shared);
            if (!h) continue;
            weight = *h;
        }
        edges.push_back({u, v, weight});
        nodes.push_back(u);
        nodes.push_back(v);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    return Graph(std::move(nodes), std::move(edges));
}

}  // namespace

WeeklyGraph build_weekly_graph(std::span<const EventRecord> events, int week, Weighting mode) {
    std::vector<Contribution> parts;
    std::vector<EmployeeId> participants;
    for (const auto& e : events) contribute(e, parts, participants);
    return {week, reduce_contributions(parts, mode)};
}

GraphSeries::GraphSeries(int first_week, int last_week, std::vector<int> excluded)
    : first_week_(first_week), last_week_(last_week), excluded_(std::move(excluded)) {
    if (last_week_ < first_week_ - 1) throw DataError("invalid week range");
    std::sort(excluded_.begin(), excluded_.end());
    excluded_.erase(std::unique(excluded_.begin(), excluded_.end()), excluded_.end());
    graphs_.resize(static_cast<std::size_t>(last_week_ - first_week_ + 1));
    for (int w = first_week_; w <= last_week_; ++w)
        if (observed(w)) graphs_[static_cast<std::size_t>(w - first_week_)] = Graph{};
}

bool GraphSeries::observed(int week) const {
    return week >= first_week_ && week <= last_week_ &&
           !std::binary_search(excluded_.begin(), excluded_.end(), week);
}

const Graph* GraphSeries::at(int week) const {
    if (week < first_week_ || week > last_week_) return nullptr;
    const auto& slot = graphs_[static_cast<std::size_t>(week - first_week_)];
    return slot ? &*slot : nullptr;
}

void GraphSeries::set(int week, Graph graph) {
    if (!observed(week)) throw DataError("week " + std::to_string(week) + " is not observed");
    graphs_[static_cast<std::size_t>(week - first_week_)] = std::move(graph);
}

std::vector<int> GraphSeries::observed_weeks() const {
    std::vector<int> out;
    for (int w = first_week_; w <= last_week_; ++w)
        if (observed(w)) out.push_back(w);
    return out;
}

namespace {

struct WeekBuckets {
    int first = 0;
    int last = -1;
    std::vector<std::vector<std::size_t>> events;  // indices into the log, per week
};

WeekBuckets bucket_events(const EventLog& log, const CalendarConfig& calendar,
                          std::optional<std::pair<int, int>> range) {
    std::vector<int> weeks(log.events.size());
    int lo = 0, hi = -1;
    for (std::size_t i = 0; i < log.events.size(); ++i) {
        weeks[i] = assign_week(log.events[i].timestamp, calendar);
        if (i == 0 || weeks[i] < lo) lo = weeks[i];
        if (i == 0 || weeks[i] > hi) hi = weeks[i];
    }
    if (range) std::tie(lo, hi) = *range;
    WeekBuckets b{lo, hi, {}};
    b.events.resize(hi >= lo ? static_cast<std::size_t>(hi - lo + 1) : 0);
    for (std::size_t i = 0; i < weeks.size(); ++i)
        if (weeks[i] >= lo && weeks[i] <= hi && !calendar.is_excluded(weeks[i]))
            b.events[static_cast<std::size_t>(weeks[i] - lo)].push_back(i);
    return b;
}

Graph build_bucket(const EventLog& log, const std::vector<std::size_t>& idx, Weighting mode) {
    std::vector<Contribution> parts;
    std::vector<EmployeeId> participants;
    parts.reserve(idx.size() * 2);
    for (auto i : idx) contribute(log.events[i], parts, participants);
    return reduce_contributions(parts, mode);
}

GraphSeries empty_series(const WeekBuckets& b, const CalendarConfig& calendar) {
    std::vector<int> excluded;
    for (int w : calendar.excluded_weeks)
        if (w >= b.first && w <= b.last) excluded.push_back(w);
    return GraphSeries(b.first, b.last, std::move(excluded));
}

}  // namespace

GraphSeries build_graph_series(const EventLog& log, const CalendarConfig& calendar, Weighting mode,
                               std::optional<std::pair<int, int>> week_range) {
    auto buckets = bucket_events(log, calendar, week_range);
    GraphSeries series = empty_series(buckets, calendar);
    const auto n = static_cast<std::ptrdiff_t>(buckets.events.size());
    std::vector<Graph> built(buckets.events.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const int week = buckets.first + static_cast<int>(i);
        if (!series.observed(week)) continue;
        try {
            built[static_cast<std::size_t>(i)] = build_bucket(log, buckets.events[static_cast<std::size_t>(i)], mode);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const int week = buckets.first + static_cast<int>(i);
        if (series.observed(week)) series.set(week, std::move(built[static_cast<std::size_t>(i)]));
    }
    return series;
}

GraphSeries build_graph_series_serial(const EventLog& log, const CalendarConfig& calendar,
                                      Weighting mode, std::optional<std::pair<int, int>> week_range) {
    auto buckets = bucket_events(log, calendar, week_range);
    GraphSeries series = empty_series(buckets, calendar);
    for (std::size_t i = 0; i < buckets.events.size(); ++i) {
        const int week = buckets.first + static_cast<int>(i);
        if (series.observed(week)) series.set(week, build_bucket(log, buckets.events[i], mode));
    }
    return series;
}

std::string format_weight(double w) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", w);
    return buf;
}

void write_graph_edges(std::ostream& out, const GraphSeries& series, const Roster& roster) {
    out << "week,src,dst,weight\n";
    std::string row;
    for (int w : series.observed_weeks()) {
        const Graph* g = series.at(w);
        std::vector<std::pair<const std::string*, const std::string*>> names;
        std::vector<double> weights;
        std::vector<std::size_t> order(g->edge_count());
        for (std::size_t k = 0; k < g->edge_count(); ++k) {
            const auto& e = g->edges()[k];
            const auto* a = &roster.name(e.u);
            const auto* b = &roster.name(e.v);
            if (*b < *a) std::swap(a, b);
            names.emplace_back(a, b);
            order[k] = k;
        }
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return *names[x].first != *names[y].first ? *names[x].first < *names[y].first
                                                      : *names[x].second < *names[y].second;
        });
        for (auto k : order) {
            row.clear();
            row += std::to_string(w);
            row += ',';
            row += *names[k].first;
            row += ',';
            row += *names[k].second;
            row += ',';
            row += format_weight(g->edges()[k].weight);
            row += '\n';
            out << row;
        }
    }
}

GraphSeries read_graph_edges(std::istream& in, int first_week, int last_week, std::vector<int> excluded,
                             Roster& roster) {
    struct Row {
        int week;
        std::string a, b;
        double w;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (line_no == 1 && line.rfind("week,", 0) == 0)) continue;
        auto c1 = line.find(',');
        auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        auto c3 = c2 == std::string::npos ? c2 : line.find(',', c2 + 1);
        if (c3 == std::string::npos) throw DataError("graph edges line " + std::to_string(line_no) + ": expected 4 fields");
        try {
            rows.push_back({std::stoi(line.substr(0, c1)), line.substr(c1 + 1, c2 - c1 - 1),
                            line.substr(c2 + 1, c3 - c2 - 1), std::stod(line.substr(c3 + 1))});
        } catch (const std::exception&) {
            throw DataError("graph edges line " + std::to_string(line_no) + ": bad number");
        }
        roster.intern(rows.back().a);
        roster.intern(rows.back().b);
    }
    roster.canonicalize();
    GraphSeries series(first_week, last_week, std::move(excluded));
    std::map<int, std::vector<Edge>> by_week;
    for (const auto& r : rows) {
        if (!series.observed(r.week))
            throw DataError("graph edges reference unobserved week " + std::to_string(r.week));
        auto u = roster.find(r.a), v = roster.find(r.b);
        if (u == v) throw DataError("self-loop in graph edges");
        if (u > v) std::swap(u, v);
        by_week[r.week].push_back({u, v, r.w});
    }
    for (auto& [week, edges] : by_week) {
        std::sort(edges.begin(), edges.end(),
                  [](const Edge& x, const Edge& y) { return x.u != y.u ? x.u < y.u : x.v < y.v; });
        for (std::size_t k = 1; k < edges.size(); ++k)
            if (edges[k].u == edges[k - 1].u && edges[k].v == edges[k - 1].v)
                throw DataError("duplicate edge in week " + std::to_string(week));
        std::vector<EmployeeId> nodes;
        for (const auto& e : edges) {
            nodes.push_back(e.u);
            nodes.push_back(e.v);
        }
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
        series.set(week, Graph(std::move(nodes), std::move(edges)));
    }
    return series;
}

}  // namespace departnet
