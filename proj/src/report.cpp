#include "departnet/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include "departnet/table_io.hpp"

namespace departnet {

namespace {

DiDKind parse_kind(std::string_view s) {
    if (s == "value") return DiDKind::value;
    if (s == "slope") return DiDKind::slope;
    throw DataError("unknown estimate kind '" + std::string(s) + "'");
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

void write_estimates(std::ostream& out, const std::vector<DiDEstimate>& estimates) {
    out << "metric,kind,period,estimate,se,z,p_raw,significant\n";
    for (const auto& e : estimates)
        out << metric_name(e.metric) << ',' << to_string(e.kind) << ',' << e.period << ',' << format_double(e.estimate)
            << ',' << format_double(e.std_error) << ',' << format_double(e.z) << ',' << format_double(e.p_raw) << ','
            << (e.significant ? 1 : 0) << '\n';
}

std::vector<DiDEstimate> read_estimates(std::istream& in) {
    CsvReader csv(in, {"metric", "kind", "period", "estimate", "se", "z", "p_raw", "significant"}, "estimates");
    std::vector<DiDEstimate> out;
    while (csv.next())
        out.push_back({parse_metric(csv.field(0)), parse_kind(csv.field(1)), csv.as_int(2), csv.as_double(3),
                       csv.as_double(4), csv.as_double(5), csv.as_double(6), csv.as_bool(7)});
    return out;
}

nlohmann::json estimates_to_json(const std::vector<DiDEstimate>& estimates) {
    auto arr = nlohmann::json::array();
    for (const auto& e : estimates)
        arr.push_back({{"metric", metric_name(e.metric)},
                       {"kind", to_string(e.kind)},
                       {"period", e.period},
                       {"estimate", e.estimate},
                       {"se", e.std_error},
                       {"z", e.z},
                       {"p_raw", e.p_raw},
                       {"significant", e.significant}});
    return arr;
}

void write_quadrant(std::ostream& out, const std::vector<DiDEstimate>& estimates) {
    out << "metric,value_did,slope_did,period\n";
    std::map<std::pair<int, Metric>, std::pair<std::optional<double>, std::optional<double>>> cells;
    for (const auto& e : estimates) {
        auto& c = cells[{e.period, e.metric}];
        (e.kind == DiDKind::value ? c.first : c.second) = e.estimate;
    }
    for (const auto& [key, c] : cells) {
        if (!c.first || !c.second) continue;
        out << metric_name(key.second) << ',' << format_double(*c.first) << ',' << format_double(*c.second) << ','
            << key.first << '\n';
    }
}

void write_trajectories(std::ostream& out, const std::vector<TrajectoryPoint>& points) {
    out << "metric,A,t,yhat,se,period\n";
    for (const auto& p : points)
        out << metric_name(p.metric) << ',' << (p.treated ? 1 : 0) << ',' << p.t << ',' << format_double(p.yhat) << ','
            << format_double(p.se) << ',' << p.period << '\n';
}

void write_heterogeneous(std::ostream& out, const std::vector<HetContrast>& contrasts) {
    out << "metric,attribute,period,lo,hi,estimate,se,z,p_raw,significant\n";
    for (const auto& c : contrasts)
        out << metric_name(c.metric) << ',' << c.attribute << ',' << c.period << ',' << format_double(c.lo) << ','
            << format_double(c.hi) << ',' << format_double(c.estimate) << ',' << format_double(c.std_error) << ','
            << format_double(c.z) << ',' << format_double(c.p_raw) << ',' << (c.significant ? 1 : 0) << '\n';
}

std::vector<HetContrast> read_heterogeneous(std::istream& in) {
    CsvReader csv(in, {"metric", "attribute", "period", "lo", "hi", "estimate", "se", "z", "p_raw", "significant"},
                  "heterogeneous");
    std::vector<HetContrast> out;
    while (csv.next())
        out.push_back({parse_metric(csv.field(0)), csv.as_int(2), csv.text(1), csv.as_double(3), csv.as_double(4),
                       csv.as_double(5), csv.as_double(6), csv.as_double(7), csv.as_double(8), csv.as_bool(9)});
    return out;
}

void write_het_grid(std::ostream& out, const std::vector<HetContrast>& contrasts) {
    std::vector<std::string> attributes;
    for (const auto& c : contrasts)
        if (std::find(attributes.begin(), attributes.end(), c.attribute) == attributes.end())
            attributes.push_back(c.attribute);
    out << "metric,period";
    for (const auto& a : attributes) out << ',' << a;
    out << '\n';
    std::map<std::pair<int, Metric>, std::map<std::string, const HetContrast*>> rows;
    for (const auto& c : contrasts) rows[{c.period, c.metric}][c.attribute] = &c;
    for (const auto& [key, cells] : rows) {
        out << metric_name(key.second) << ',' << key.first;
        for (const auto& a : attributes) {
            out << ',';
            if (auto it = cells.find(a); it != cells.end()) out << format_double(it->second->estimate);
        }
        out << '\n';
    }
}

void write_period_overlay(std::ostream& out, const std::vector<DiDEstimate>& estimates) {
    out << "metric,kind,period,estimate,se,significant\n";
    auto sorted = estimates;
    std::stable_sort(sorted.begin(), sorted.end(), [](const DiDEstimate& a, const DiDEstimate& b) {
        if (a.metric != b.metric) return a.metric < b.metric;
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.period < b.period;
    });
    for (const auto& e : sorted)
        out << metric_name(e.metric) << ',' << to_string(e.kind) << ',' << e.period << ','
            << format_double(e.estimate) << ',' << format_double(e.std_error) << ',' << (e.significant ? 1 : 0)
            << '\n';
}

void write_summary(std::ostream& out, const std::vector<DiDEstimate>& estimates,
                   const std::vector<std::string>& diagnostics) {
    out << "# Value DiD in DM, Slope DiD in DM/week; * = significant after Bonferroni over "
        << estimates.size() << " estimates\n";
    if (estimates.empty()) out << "no estimates\n";
    std::set<int> periods;
    for (const auto& e : estimates) periods.insert(e.period);
    for (const auto& e : estimates) {
        out << metric_name(e.metric) << ' ' << to_string(e.kind);
        if (periods.size() > 1 || e.period != 0) out << " period=" << e.period;
        out << ' ' << fixed(e.estimate, 4) << " (se " << fixed(e.std_error, 4) << ", p " << format_double(e.p_raw)
            << ')' << (e.significant ? " *" : "") << '\n';
    }
    for (const auto& d : diagnostics) out << "# note: " << d << '\n';
}

}  // namespace departnet
