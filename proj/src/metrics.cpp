#include "departnet/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>

#include "departnet/numeric.hpp"
#include "departnet/table_io.hpp"

namespace departnet {

namespace {

constexpr std::array<std::string_view, kMetricCount> kNames = {
    "closeness",   "closure", "components",     "largest_component_share", "connections",   "volume",
    "n_active",    "clustering_ind", "connections_ind", "volume_ind",      "diversity_ind",
};

// Union-find over a small index range.
class DisjointSets {
public:
    explicit DisjointSets(std::size_t n = 0) { reset(n); }
    void reset(std::size_t n) {
        parent_.resize(n);
        std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
        size_.assign(n, 1);
    }
    std::uint32_t find(std::uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
    }
    std::uint32_t size_of(std::uint32_t x) { return size_[find(x)]; }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> size_;
};

struct ComponentSummary {
    std::size_t count = 0;
    std::size_t largest = 0;
};

ComponentSummary summarize_components(const Graph& g) {
    const auto n = g.node_count();
    DisjointSets ds(n);
    for (std::uint32_t u = 0; u < n; ++u)
        for (auto v : g.adjacent(u))
            if (v > u) ds.unite(u, v);
    ComponentSummary s;
    for (std::uint32_t u = 0; u < n; ++u) {
        if (ds.find(u) == u) {
            ++s.count;
            s.largest = std::max<std::size_t>(s.largest, ds.size_of(u));
        }
    }
    return s;
}

// Per-thread scratch for ego computations on a week graph.
struct EgoScratch {
    std::vector<std::uint32_t> slot;  // local node -> alter position + 1, 0 when unmarked
    DisjointSets alters;
};

IndividualRecord ego_record(const Graph& g, std::uint32_t center, EgoScratch& scratch) {
    if (scratch.slot.size() < g.node_count()) scratch.slot.assign(g.node_count(), 0);
    auto adj = g.adjacent(center);
    auto weights = g.adjacent_weights(center);
    const auto d = adj.size();
    for (std::size_t k = 0; k < d; ++k) scratch.slot[adj[k]] = static_cast<std::uint32_t>(k + 1);
    scratch.alters.reset(d);
    std::size_t links = 0;
    for (std::size_t k = 0; k < d; ++k) {
        const auto y = adj[k];
        for (auto z : g.adjacent(y)) {
            if (z > y && scratch.slot[z] != 0) {
                ++links;
                scratch.alters.unite(static_cast<std::uint32_t>(k), scratch.slot[z] - 1);
            }
        }
    }
    IndividualRecord r;
    r.connections = static_cast<double>(d);
    r.volume = std::accumulate(weights.begin(), weights.end(), 0.0);
    r.clustering = d < 2 ? 0.0 : static_cast<double>(links) / (static_cast<double>(d) * (d - 1) / 2.0);
    std::size_t roots = 0;
    for (std::uint32_t k = 0; k < d; ++k)
        if (scratch.alters.find(k) == k) ++roots;
    r.diversity = static_cast<double>(roots);
    for (auto y : adj) scratch.slot[y] = 0;
    return r;
}

}  // namespace

std::string_view metric_name(Metric m) { return kNames[static_cast<std::size_t>(m)]; }

Metric parse_metric(std::string_view name) {
    for (std::size_t i = 0; i < kMetricCount; ++i)
        if (kNames[i] == name) return static_cast<Metric>(i);
    throw DataError("unknown metric '" + std::string(name) + "'");
}

bool is_group_metric(Metric m) { return static_cast<std::size_t>(m) <= static_cast<std::size_t>(Metric::n_active); }

bool is_log_metric(Metric m) {
    switch (m) {
        case Metric::connections:
        case Metric::volume:
        case Metric::n_active:
        case Metric::connections_ind:
        case Metric::volume_ind:
            return true;
        default:
            return false;
    }
}

double closeness(const Graph& g) {
    const auto n = g.node_count();
    if (n < 2) return 0.0;
    std::vector<int> dist(n);
    std::vector<std::uint32_t> queue(n);
    double total = 0.0;
    for (std::uint32_t s = 0; s < n; ++s) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[s] = 0;
        std::size_t head = 0, tail = 0;
        queue[tail++] = s;
        double row = 0.0;
        while (head < tail) {
            const auto u = queue[head++];
            for (auto v : g.adjacent(u)) {
                if (dist[v] >= 0) continue;
                dist[v] = dist[u] + 1;
                row += 1.0 / dist[v];
                queue[tail++] = v;
            }
        }
        total += row;
    }
    return total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double closure(const Graph& g) {
    const auto n = g.node_count();
    if (n == 0) return 0.0;
    std::vector<char> mark(n, 0);
    double sum = 0.0;
    for (std::uint32_t u = 0; u < n; ++u) {
        const auto d = g.degree(u);
        if (d < 2) continue;
        auto adj = g.adjacent(u);
        for (auto v : adj) mark[v] = 1;
        std::size_t links = 0;
        for (auto v : adj)
            for (auto w : g.adjacent(v))
                if (w > v && mark[w]) ++links;
        for (auto v : adj) mark[v] = 0;
        sum += static_cast<double>(links) / (static_cast<double>(d) * (d - 1) / 2.0);
    }
    return sum / static_cast<double>(n);
}

std::size_t components(const Graph& g) { return summarize_components(g).count; }

double largest_component_share(const Graph& g) {
    if (g.empty()) return 0.0;
    auto s = summarize_components(g);
    return static_cast<double>(s.largest) / static_cast<double>(g.node_count());
}

double group_connections(const Graph& g) {
    return g.empty() ? 0.0 : static_cast<double>(g.edge_count()) / static_cast<double>(g.node_count());
}

double group_volume(const Graph& g) {
    return g.empty() ? 0.0 : g.total_weight() / static_cast<double>(g.node_count());
}

std::size_t n_active(const Graph& g) { return g.node_count(); }

GroupRecord group_metrics(const Graph& g) {
    GroupRecord r;
    if (g.empty()) return r;
    auto comp = summarize_components(g);
    const double n = static_cast<double>(g.node_count());
    r.closeness = closeness(g);
    r.closure = closure(g);
    r.components = static_cast<double>(comp.count);
    r.largest_component_share = static_cast<double>(comp.largest) / n;
    r.connections = static_cast<double>(g.edge_count()) / n;
    r.volume = g.total_weight() / n;
    r.n_active = n;
    return r;
}

std::optional<IndividualRecord> individual_metrics(const EgoNetwork& ego) {
    if (!ego.active) return std::nullopt;
    return individual_metrics(ego.graph, ego.center);
}

std::optional<IndividualRecord> individual_metrics(const Graph& week_graph, EmployeeId member) {
    auto i = week_graph.index_of(member);
    if (!i) return std::nullopt;
    EgoScratch scratch;
    return ego_record(week_graph, *i, scratch);
}

std::optional<IndividualRecord> aggregate_individual(std::span<const IndividualRecord> records) {
    if (records.empty()) return std::nullopt;
    IndividualRecord m;
    for (const auto& r : records) {
        m.clustering += r.clustering;
        m.connections += r.connections;
        m.volume += r.volume;
        m.diversity += r.diversity;
    }
    const double n = static_cast<double>(records.size());
    m.clustering /= n;
    m.connections /= n;
    m.volume /= n;
    m.diversity /= n;
    return m;
}

NodeMetricTable::NodeMetricTable(int first_week, std::vector<std::vector<IndividualRecord>> per_week,
                                 std::vector<std::vector<EmployeeId>> nodes)
    : first_week_(first_week), records_(std::move(per_week)), nodes_(std::move(nodes)) {
    if (records_.size() != nodes_.size()) throw DataError("node metric table shape mismatch");
    for (std::size_t w = 0; w < records_.size(); ++w)
        if (records_[w].size() != nodes_[w].size()) throw DataError("node metric table shape mismatch");
}

std::optional<IndividualRecord> NodeMetricTable::lookup(int week, EmployeeId id) const {
    const auto nodes = this->nodes(week);
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id);
    if (it == nodes.end() || *it != id) return std::nullopt;
    return records_[static_cast<std::size_t>(week - first_week_)][static_cast<std::size_t>(it - nodes.begin())];
}

std::span<const EmployeeId> NodeMetricTable::nodes(int week) const {
    if (week < first_week_ || week - first_week_ >= static_cast<int>(nodes_.size())) return {};
    return nodes_[static_cast<std::size_t>(week - first_week_)];
}

std::span<const IndividualRecord> NodeMetricTable::records(int week) const {
    if (week < first_week_ || week - first_week_ >= static_cast<int>(records_.size())) return {};
    return records_[static_cast<std::size_t>(week - first_week_)];
}

namespace {

struct NodeTableLayout {
    std::vector<const Graph*> graphs;  // per week slot, nullptr if unobserved
    std::vector<std::size_t> offsets;  // flat (week, node) prefix sums
};

NodeTableLayout layout_for(const GraphSeries& graphs) {
    NodeTableLayout l;
    l.offsets.push_back(0);
    for (int w = graphs.first_week(); w <= graphs.last_week(); ++w) {
        const Graph* g = graphs.at(w);
        l.graphs.push_back(g);
        l.offsets.push_back(l.offsets.back() + (g ? g->node_count() : 0));
    }
    return l;
}

NodeMetricTable assemble_table(const GraphSeries& graphs, const NodeTableLayout& l,
                               std::vector<IndividualRecord>&& flat) {
    std::vector<std::vector<IndividualRecord>> per_week(l.graphs.size());
    std::vector<std::vector<EmployeeId>> nodes(l.graphs.size());
    for (std::size_t w = 0; w < l.graphs.size(); ++w) {
        if (!l.graphs[w]) continue;
        per_week[w].assign(flat.begin() + static_cast<std::ptrdiff_t>(l.offsets[w]),
                           flat.begin() + static_cast<std::ptrdiff_t>(l.offsets[w + 1]));
        auto ids = l.graphs[w]->nodes();
        nodes[w].assign(ids.begin(), ids.end());
    }
    return NodeMetricTable(graphs.first_week(), std::move(per_week), std::move(nodes));
}

}  // namespace

NodeMetricTable compute_node_metrics(const GraphSeries& graphs) {
    const auto layout = layout_for(graphs);
    const auto total = static_cast<std::ptrdiff_t>(layout.offsets.back());
    std::vector<IndividualRecord> flat(static_cast<std::size_t>(total));
#pragma omp parallel
    {
        EgoScratch scratch;
        std::size_t week_slot = 0;
#pragma omp for schedule(dynamic, 256)
        for (std::ptrdiff_t i = 0; i < total; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            while (layout.offsets[week_slot + 1] <= idx) ++week_slot;
            if (layout.offsets[week_slot] > idx) {
                week_slot = static_cast<std::size_t>(
                    std::upper_bound(layout.offsets.begin(), layout.offsets.end(), idx) - layout.offsets.begin() - 1);
            }
            const Graph& g = *layout.graphs[week_slot];
            flat[idx] = ego_record(g, static_cast<std::uint32_t>(idx - layout.offsets[week_slot]), scratch);
        }
    }
    return assemble_table(graphs, layout, std::move(flat));
}

NodeMetricTable compute_node_metrics_serial(const GraphSeries& graphs) {
    const auto layout = layout_for(graphs);
    std::vector<IndividualRecord> flat(layout.offsets.back());
    EgoScratch scratch;
    for (std::size_t w = 0; w < layout.graphs.size(); ++w) {
        const Graph* g = layout.graphs[w];
        if (!g) continue;
        for (std::uint32_t u = 0; u < g->node_count(); ++u)
            flat[layout.offsets[w] + u] = ego_record(*g, u, scratch);
    }
    return assemble_table(graphs, layout, std::move(flat));
}

void write_node_metrics(std::ostream& out, const NodeMetricTable& table, const Roster& roster) {
    out << "week,employee,clustering,connections,volume,diversity\n";
    for (std::size_t w = 0; w < table.week_count(); ++w) {
        const int week = table.first_week() + static_cast<int>(w);
        auto nodes = table.nodes(week);
        auto recs = table.records(week);
        for (std::size_t k = 0; k < nodes.size(); ++k)
            out << week << ',' << roster.name(nodes[k]) << ',' << format_double(recs[k].clustering) << ','
                << format_double(recs[k].connections) << ',' << format_double(recs[k].volume) << ','
                << format_double(recs[k].diversity) << '\n';
    }
}

NodeMetricTable read_node_metrics(std::istream& in, const GraphSeries& graphs, const Roster& roster) {
    CsvReader csv(in, {"week", "employee", "clustering", "connections", "volume", "diversity"}, "node metrics");
    const auto slots = static_cast<std::size_t>(std::max(0, graphs.last_week() - graphs.first_week() + 1));
    std::vector<std::vector<std::pair<EmployeeId, IndividualRecord>>> rows(slots);
    while (csv.next()) {
        const int week = csv.as_int(0);
        if (!graphs.observed(week)) throw DataError("node metrics reference unobserved week " + std::to_string(week));
        rows[static_cast<std::size_t>(week - graphs.first_week())].push_back(
            {roster.find(csv.field(1)),
             {csv.as_double(2), csv.as_double(3), csv.as_double(4), csv.as_double(5)}});
    }
    std::vector<std::vector<IndividualRecord>> per_week(slots);
    std::vector<std::vector<EmployeeId>> nodes(slots);
    for (std::size_t w = 0; w < slots; ++w) {
        auto& r = rows[w];
        std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& [id, rec] : r) {
            nodes[w].push_back(id);
            per_week[w].push_back(rec);
        }
    }
    return NodeMetricTable(graphs.first_week(), std::move(per_week), std::move(nodes));
}

std::optional<double> MetricSeries::at(int t) const {
    if (t < t_begin || t >= t_begin + static_cast<int>(values.size())) return std::nullopt;
    return values[static_cast<std::size_t>(t - t_begin)];
}

namespace {

struct SeriesPlan {
    int t_begin = 0;
    int t_end = -1;  // inclusive
};

SeriesPlan plan_for(const SocializationSet& set, const GraphSeries& graphs, int horizon) {
    SeriesPlan p;
    p.t_begin = std::max(-horizon, graphs.first_week() - set.t_star);
    p.t_end = std::min(horizon, graphs.last_week() - set.t_star);
    return p;
}

std::vector<MetricSeries> empty_series(const SocializationSet& set, const SeriesPlan& plan, const Roster& roster) {
    std::vector<MetricSeries> out(kMetricCount);
    const auto len = static_cast<std::size_t>(std::max(0, plan.t_end - plan.t_begin + 1));
    const auto id = set.set_id(roster);
    for (std::size_t m = 0; m < kMetricCount; ++m) {
        out[m].set_id = id;
        out[m].treated = set.treated;
        out[m].metric = kAllMetrics[m];
        out[m].t_begin = plan.t_begin;
        out[m].values.assign(len, std::nullopt);
    }
    return out;
}

// Fills every metric of one (set, relative week) cell.
void fill_cell(std::vector<MetricSeries>& out, const SocializationSet& set, const GraphSeries& graphs,
               const NodeMetricTable& table, int t, std::vector<IndividualRecord>& buffer) {
    const int week = set.t_star + t;
    const Graph* g = graphs.at(week);
    if (!g) return;
    const auto slot = static_cast<std::size_t>(t - out.front().t_begin);
    auto group = group_metrics(group_subgraph(*g, set));
    const std::array<double, 7> gv = {group.closeness,   group.closure, group.components,
                                      group.largest_component_share, group.connections, group.volume,
                                      group.n_active};
    for (std::size_t m = 0; m < gv.size(); ++m) out[m].values[slot] = gv[m];

    buffer.clear();
    for (auto member : set.members)
        if (auto r = table.lookup(week, member)) buffer.push_back(*r);
    if (auto agg = aggregate_individual(buffer)) {
        out[static_cast<std::size_t>(Metric::clustering_ind)].values[slot] = agg->clustering;
        out[static_cast<std::size_t>(Metric::connections_ind)].values[slot] = agg->connections;
        out[static_cast<std::size_t>(Metric::volume_ind)].values[slot] = agg->volume;
        out[static_cast<std::size_t>(Metric::diversity_ind)].values[slot] = agg->diversity;
    }
}

}  // namespace

std::vector<MetricSeries> build_metric_series(const SocializationSet& set, const GraphSeries& graphs,
                                              const NodeMetricTable& table, const Roster& roster, int horizon) {
    const auto plan = plan_for(set, graphs, horizon);
    auto out = empty_series(set, plan, roster);
    std::vector<IndividualRecord> buffer;
    for (int t = plan.t_begin; t <= plan.t_end; ++t) fill_cell(out, set, graphs, table, t, buffer);
    return out;
}

std::vector<std::vector<MetricSeries>> compute_series(std::span<const SocializationSet> sets,
                                                      const GraphSeries& graphs, const NodeMetricTable& table,
                                                      const Roster& roster, int horizon) {
    std::vector<std::vector<MetricSeries>> out(sets.size());
    std::vector<SeriesPlan> plans(sets.size());
    std::vector<std::size_t> offsets(sets.size() + 1, 0);
    for (std::size_t s = 0; s < sets.size(); ++s) {
        plans[s] = plan_for(sets[s], graphs, horizon);
        out[s] = empty_series(sets[s], plans[s], roster);
        offsets[s + 1] = offsets[s] + out[s].front().values.size();
    }
    const auto total = static_cast<std::ptrdiff_t>(offsets.back());
#pragma omp parallel
    {
        std::vector<IndividualRecord> buffer;
#pragma omp for schedule(dynamic, 16)
        for (std::ptrdiff_t i = 0; i < total; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            const auto s = static_cast<std::size_t>(
                std::upper_bound(offsets.begin(), offsets.end(), idx) - offsets.begin() - 1);
            const int t = plans[s].t_begin + static_cast<int>(idx - offsets[s]);
            fill_cell(out[s], sets[s], graphs, table, t, buffer);
        }
    }
    return out;
}

std::vector<std::vector<MetricSeries>> compute_series_serial(std::span<const SocializationSet> sets,
                                                             const GraphSeries& graphs,
                                                             const NodeMetricTable& table, const Roster& roster,
                                                             int horizon) {
    std::vector<std::vector<MetricSeries>> out;
    out.reserve(sets.size());
    for (const auto& set : sets) out.push_back(build_metric_series(set, graphs, table, roster, horizon));
    return out;
}

void write_series(std::ostream& out, const std::vector<std::vector<MetricSeries>>& series) {
    out << "set_id,treated,t,metric,value\n";
    std::string row;
    for (const auto& per_set : series)
        for (const auto& ms : per_set)
            for (std::size_t k = 0; k < ms.values.size(); ++k) {
                row.clear();
                row += ms.set_id;
                row += ms.treated ? ",1," : ",0,";
                row += std::to_string(ms.t_begin + static_cast<int>(k));
                row += ',';
                row += metric_name(ms.metric);
                row += ',';
                if (ms.values[k]) row += format_double(*ms.values[k]);
                row += '\n';
                out << row;
            }
}

std::vector<MetricSeries> read_series(std::istream& in) {
    CsvReader csv(in, {"set_id", "treated", "t", "metric", "value"}, "series");
    std::vector<MetricSeries> out;
    std::map<std::pair<std::string, Metric>, std::size_t> index;
    while (csv.next()) {
        auto key = std::make_pair(csv.text(0), parse_metric(csv.field(3)));
        const int t = csv.as_int(2);
        auto it = index.find(key);
        if (it == index.end()) {
            MetricSeries ms;
            ms.set_id = key.first;
            ms.treated = csv.as_bool(1);
            ms.metric = key.second;
            ms.t_begin = t;
            it = index.emplace(key, out.size()).first;
            out.push_back(std::move(ms));
        }
        auto& ms = out[it->second];
        const int expected = ms.t_begin + static_cast<int>(ms.values.size());
        if (t < expected) throw DataError("series: weeks out of order for set " + ms.set_id);
        while (ms.t_begin + static_cast<int>(ms.values.size()) < t) ms.values.push_back(std::nullopt);
        ms.values.push_back(csv.as_optional_double(4));
    }
    return out;
}

}  // namespace departnet
