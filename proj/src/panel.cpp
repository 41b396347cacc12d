#include "departnet/panel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <set>
#include <tuple>
#include <unordered_map>

#include "departnet/numeric.hpp"
#include "departnet/table_io.hpp"

namespace departnet {

std::optional<int> PeriodSplit::period_of(int t_star) const {
    if (t_star < cutoff_week - buffer) return 1;
    if (t_star > cutoff_week + buffer) return 2;
    return std::nullopt;
}

double transform_value(double value, Metric metric) {
    if (!is_log_metric(metric)) return value;
    if (value < 0.0)
        throw DataError("negative value " + format_double(value) + " for log-transformed metric " +
                        std::string(metric_name(metric)));
    return std::log1p(value);
}

void standardize(Panel& panel) {
    std::array<std::vector<double>, kMetricCount> values;
    for (auto& row : panel.rows) {
        row.y = transform_value(row.y, row.metric);
        values[static_cast<std::size_t>(row.metric)].push_back(row.y);
    }
    std::array<double, kMetricCount> mu{}, sd{};
    std::array<bool, kMetricCount> keep{};
    for (auto metric : kAllMetrics) {
        const auto m = static_cast<std::size_t>(metric);
        if (values[m].empty()) continue;
        mu[m] = mean(values[m]);
        sd[m] = std::sqrt(variance(values[m]));
        keep[m] = sd[m] > 0.0 && std::isfinite(sd[m]);
        if (!keep[m])
            panel.diagnostics.push_back("metric " + std::string(metric_name(metric)) +
                                        " has zero variance and was dropped");
    }
    std::erase_if(panel.rows, [&](const PanelRow& r) { return !keep[static_cast<std::size_t>(r.metric)]; });
    for (auto& row : panel.rows) {
        const auto m = static_cast<std::size_t>(row.metric);
        row.y = (row.y - mu[m]) / sd[m];
    }
}

std::vector<Panel> assemble_panel(std::span<const SocializationSet> sets, std::span<const MetricSeries> series,
                                  const Roster& roster, const std::optional<PeriodSplit>& split, int horizon) {
    std::unordered_map<std::string, const SocializationSet*> by_id;
    for (const auto& s : sets) {
        if (!by_id.emplace(s.set_id(roster), &s).second)
            throw DataError("panel: duplicate socialization set " + s.set_id(roster));
    }

    std::vector<Panel> tables(split ? 2 : 1);
    if (split) {
        tables[0].period = 1;
        tables[1].period = 2;
    }
    std::set<std::tuple<std::string, int, Metric>> seen;
    for (const auto& ms : series) {
        auto it = by_id.find(ms.set_id);
        if (it == by_id.end()) throw DataError("panel: series for unknown set " + ms.set_id);
        const auto& set = *it->second;
        if (ms.treated != set.treated) throw DataError("panel: treatment flag mismatch for set " + ms.set_id);
        Panel* target = &tables[0];
        if (split) {
            auto period = split->period_of(set.t_star);
            if (!period) continue;
            target = &tables[static_cast<std::size_t>(*period - 1)];
        }
        for (std::size_t k = 0; k < ms.values.size(); ++k) {
            const int t = ms.t_begin + static_cast<int>(k);
            if (!ms.values[k] || t < -horizon || t > horizon) continue;
            if (!std::isfinite(*ms.values[k])) throw DataError("panel: non-finite value in set " + ms.set_id);
            if (!seen.emplace(ms.set_id, t, ms.metric).second)
                throw DataError("panel: duplicate row for set " + ms.set_id + " t=" + std::to_string(t) + " metric " +
                                std::string(metric_name(ms.metric)));
            target->rows.push_back({ms.set_id, set.treated, t, ms.metric, *ms.values[k],
                                    std::log1p(static_cast<double>(set.members.size())), set.t_star});
        }
    }
    for (auto& table : tables) standardize(table);
    return tables;
}

std::vector<PanelRow> rows_for(const Panel& panel, Metric metric) {
    std::vector<PanelRow> out;
    for (const auto& r : panel.rows)
        if (r.metric == metric) out.push_back(r);
    return out;
}

std::vector<Metric> panel_metrics(const Panel& panel) {
    std::array<bool, kMetricCount> present{};
    for (const auto& r : panel.rows) present[static_cast<std::size_t>(r.metric)] = true;
    std::vector<Metric> out;
    for (auto m : kAllMetrics)
        if (present[static_cast<std::size_t>(m)]) out.push_back(m);
    return out;
}

void write_panel(std::ostream& out, const Panel& panel) {
    out << "set_id,treated,t,metric,y,baseline_size,anchor_week\n";
    for (const auto& r : panel.rows)
        out << r.set_id << ',' << (r.treated ? 1 : 0) << ',' << r.t << ',' << metric_name(r.metric) << ','
            << format_double(r.y) << ',' << format_double(r.baseline_size) << ',' << r.anchor_week << '\n';
}

Panel read_panel(std::istream& in, int period) {
    CsvReader csv(in, {"set_id", "treated", "t", "metric", "y", "baseline_size", "anchor_week"}, "panel");
    Panel panel;
    panel.period = period;
    std::set<std::tuple<std::string, int, Metric>> seen;
    while (csv.next()) {
        PanelRow r{csv.text(0), csv.as_bool(1), csv.as_int(2), parse_metric(csv.field(3)),
                   csv.as_double(4), csv.as_double(5), csv.as_int(6)};
        if (!std::isfinite(r.y)) throw DataError("panel: non-finite y on line " + std::to_string(csv.line()));
        if (!seen.emplace(r.set_id, r.t, r.metric).second)
            throw DataError("panel: duplicate row on line " + std::to_string(csv.line()));
        panel.rows.push_back(std::move(r));
    }
    return panel;
}

}  // namespace departnet
