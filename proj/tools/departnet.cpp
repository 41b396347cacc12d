#include <omp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "departnet/config.hpp"
#include "departnet/manifest.hpp"
#include "departnet/pipeline.hpp"
#include "departnet/report.hpp"
#include "departnet/table_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace departnet;

namespace {

struct Context {
    RunConfig config;
    json config_json;
    fs::path root;

    [[nodiscard]] std::string path(const std::string& name) const { return (root / name).string(); }
};

// Artifact name -> stage that writes it.
const std::map<std::string, std::string>& producers() {
    static const std::map<std::string, std::string> m = {
        {"events.csv", "ingest"},        {"roster.csv", "ingest"},          {"attributes.csv", "ingest"},
        {"graphs.csv", "graphs"},        {"weeks.json", "graphs"},          {"departures.csv", "departures"},
        {"sets.csv", "sets"},            {"node_metrics.csv", "metrics"},   {"matches.csv", "match"},
        {"cohort_sets.csv", "match"},    {"series.csv", "panel"},           {"panels.json", "panel"},
        {"ego_attributes.csv", "panel"}, {"estimates.csv", "fit"},          {"estimates.json", "fit"},
        {"heterogeneous.csv", "fit"},    {"trajectories.csv", "fit"},
    };
    return m;
}

std::string require(const Context& ctx, const std::string& name) {
    auto p = ctx.path(name);
    if (!fs::exists(p)) {
        auto it = producers().find(name);
        const std::string stage = it == producers().end() ? "?" : it->second;
        throw DataError("missing " + p + "; run the '" + stage + "' stage first");
    }
    return p;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path);
    return in;
}

std::ofstream open_out(const std::string& path) {
    fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out.precision(17);
    return out;
}

json read_json(const std::string& path) {
    auto in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(path + ": " + e.what());
    }
}

void write_json(const std::string& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

void finish(const Context& ctx, const std::string& stage, const std::vector<std::string>& inputs,
            const std::vector<std::string>& outputs) {
    write_manifest(ctx.path("manifest/" + stage + ".json"),
                   build_manifest(stage, ctx.root.string(), inputs, outputs, ctx.config_json));
}

Roster load_roster(const Context& ctx) {
    auto in = open_in(require(ctx, "roster.csv"));
    CsvReader csv(in, {"employee"}, "roster");
    Roster roster;
    while (csv.next()) roster.intern(csv.field(0));
    if (!roster.is_canonical()) throw DataError("roster.csv is not in sorted order");
    return roster;
}

GraphSeries load_graphs(const Context& ctx, const Roster& roster) {
    const auto weeks = read_json(require(ctx, "weeks.json"));
    auto in = open_in(require(ctx, "graphs.csv"));
    Roster copy = roster;
    auto graphs = read_graph_edges(in, weeks.at("first_week").get<int>(), weeks.at("last_week").get<int>(),
                                   weeks.at("excluded_weeks").get<std::vector<int>>(), copy);
    if (copy.size() != roster.size()) throw DataError("graphs.csv names employees missing from roster.csv");
    return graphs;
}

AttributeTable load_attributes(const Context& ctx, const Roster& roster) {
    auto in = open_in(require(ctx, "attributes.csv"));
    return read_attributes(in, roster);
}

NodeMetricTable load_node_metrics(const Context& ctx, const GraphSeries& graphs, const Roster& roster) {
    auto in = open_in(require(ctx, "node_metrics.csv"));
    return read_node_metrics(in, graphs, roster);
}

std::vector<SocializationSet> load_sets(const Context& ctx, const std::string& name, const Roster& roster) {
    auto in = open_in(require(ctx, name));
    return read_sets(in, roster, ctx.config.pipeline.window);
}

// ---- stages ---------------------------------------------------------------

void stage_ingest(const Context& ctx) {
    const auto& c = ctx.config;
    if (c.events_path.empty()) throw ConfigError("paths.events is not set");
    auto in = open_in(c.events_path);
    auto parsed = parse_events(in, c.format, c.on_malformed);
    const auto& roster = parsed.log.roster;

    AttributeTable attributes(roster.size());
    if (!c.attributes_path.empty()) {
        auto ain = open_in(c.attributes_path);
        attributes = read_attributes(ain, roster);
    }
    {
        auto out = open_out(ctx.path("events.csv"));
        write_events(out, parsed.log, EventFormat::csv);
    }
    {
        auto out = open_out(ctx.path("roster.csv"));
        out << "employee\n";
        for (const auto& n : roster.names()) out << n << '\n';
    }
    {
        auto out = open_out(ctx.path("attributes.csv"));
        write_attributes(out, roster, attributes);
    }
    json issues = json::array();
    for (const auto& i : parsed.issues) issues.push_back({{"line", i.line}, {"message", i.message}});
    write_json(ctx.path("ingest.json"), {{"events", parsed.log.events.size()},
                                         {"employees", roster.size()},
                                         {"skipped", parsed.skipped},
                                         {"issues", issues}});
    std::cerr << "ingest: " << parsed.log.events.size() << " events, " << roster.size() << " employees, "
              << parsed.skipped << " skipped\n";

    std::vector<std::string> inputs{c.events_path};
    if (!c.attributes_path.empty()) inputs.push_back(c.attributes_path);
    finish(ctx, "ingest", inputs,
           {ctx.path("events.csv"), ctx.path("roster.csv"), ctx.path("attributes.csv"), ctx.path("ingest.json")});
}

void stage_graphs(const Context& ctx) {
    const auto& pl = ctx.config.pipeline;
    const auto roster = load_roster(ctx);
    auto in = open_in(require(ctx, "events.csv"));
    auto parsed = parse_events(in, EventFormat::csv);
    if (parsed.log.roster.names() != roster.names()) throw DataError("events.csv and roster.csv disagree");

    EventLog filtered{parsed.log.roster, filter_excluded(std::move(parsed.log.events), pl.calendar)};
    const auto graphs = build_graph_series(filtered, pl.calendar, pl.weighting);
    {
        auto out = open_out(ctx.path("graphs.csv"));
        write_graph_edges(out, graphs, roster);
    }
    std::vector<int> excluded;
    for (int w : graphs.excluded())
        if (w >= graphs.first_week() && w <= graphs.last_week()) excluded.push_back(w);
    write_json(ctx.path("weeks.json"), {{"first_week", graphs.first_week()},
                                        {"last_week", graphs.last_week()},
                                        {"excluded_weeks", excluded}});
    std::cerr << "graphs: weeks " << graphs.first_week() << ".." << graphs.last_week() << ", "
              << graphs.observed_weeks().size() << " observed\n";
    finish(ctx, "graphs", {ctx.path("events.csv"), ctx.path("roster.csv")},
           {ctx.path("graphs.csv"), ctx.path("weeks.json")});
}

void stage_departures(const Context& ctx) {
    const auto roster = load_roster(ctx);
    const auto graphs = load_graphs(ctx, roster);
    const auto departures = detect_departures(graphs, roster.size(), ctx.config.pipeline.lookahead);
    auto out = open_out(ctx.path("departures.csv"));
    write_departures(out, departures, roster);
    out.close();
    std::cerr << "departures: " << departures.size() << '\n';
    finish(ctx, "departures", {ctx.path("roster.csv"), ctx.path("graphs.csv"), ctx.path("weeks.json")},
           {ctx.path("departures.csv")});
}

void stage_sets(const Context& ctx) {
    const auto roster = load_roster(ctx);
    const auto graphs = load_graphs(ctx, roster);
    auto in = open_in(require(ctx, "departures.csv"));
    const auto departures = read_departures(in, roster);
    const auto cohort = build_treated_sets(graphs, departures, ctx.config.pipeline.window);
    {
        auto out = open_out(ctx.path("sets.csv"));
        write_sets(out, cohort.sets, roster);
    }
    write_json(ctx.path("sets.json"), {{"sets", cohort.sets.size()},
                                       {"dropped_no_window", cohort.dropped_no_window},
                                       {"dropped_empty", cohort.dropped_empty}});
    std::cerr << "sets: " << cohort.sets.size() << " treated (" << cohort.dropped_no_window << " without window, "
              << cohort.dropped_empty << " empty)\n";
    finish(ctx, "sets",
           {ctx.path("roster.csv"), ctx.path("graphs.csv"), ctx.path("weeks.json"), ctx.path("departures.csv")},
           {ctx.path("sets.csv"), ctx.path("sets.json")});
}

void stage_metrics(const Context& ctx) {
    const auto roster = load_roster(ctx);
    const auto graphs = load_graphs(ctx, roster);
    const auto table = compute_node_metrics(graphs);
    auto out = open_out(ctx.path("node_metrics.csv"));
    write_node_metrics(out, table, roster);
    out.close();
    finish(ctx, "metrics", {ctx.path("roster.csv"), ctx.path("graphs.csv"), ctx.path("weeks.json")},
           {ctx.path("node_metrics.csv")});
}

void stage_match(const Context& ctx) {
    const auto& pl = ctx.config.pipeline;
    const auto roster = load_roster(ctx);
    const auto graphs = load_graphs(ctx, roster);
    const auto table = load_node_metrics(ctx, graphs, roster);
    const auto attributes = load_attributes(ctx, roster);
    auto din = open_in(require(ctx, "departures.csv"));
    const auto departures = read_departures(din, roster);

    TreatedCohort cohort;
    cohort.sets = load_sets(ctx, "sets.csv", roster);
    for (const auto& s : cohort.sets) {
        auto it = std::find_if(departures.begin(), departures.end(),
                               [&](const DepartureEvent& d) { return d.ego == s.ego && d.t_star == s.t_star; });
        if (it == departures.end()) throw DataError("sets.csv has a set without a departure: " + s.set_id(roster));
        cohort.departures.push_back(*it);
    }
    const auto matched = match_cohort(cohort, graphs, table, attributes, roster.size(), pl);
    {
        auto out = open_out(ctx.path("matches.csv"));
        write_assignments(out, matched.match.assignments, roster);
    }
    {
        auto all = matched.treated;
        all.insert(all.end(), matched.controls.begin(), matched.controls.end());
        auto out = open_out(ctx.path("cohort_sets.csv"));
        write_sets(out, all, roster);
    }
    write_json(ctx.path("match.json"), {{"matched", matched.match.assignments.size()},
                                        {"dropped_no_features", matched.match.dropped_no_features},
                                        {"dropped_small_pool", matched.match.dropped_small_pool},
                                        {"dropped_empty_controls", matched.dropped_controls}});
    std::cerr << "match: " << matched.match.assignments.size() << " treated, " << matched.controls.size()
              << " control sets\n";
    finish(ctx, "match",
           {ctx.path("roster.csv"), ctx.path("graphs.csv"), ctx.path("weeks.json"), ctx.path("node_metrics.csv"),
            ctx.path("attributes.csv"), ctx.path("departures.csv"), ctx.path("sets.csv")},
           {ctx.path("matches.csv"), ctx.path("cohort_sets.csv"), ctx.path("match.json")});
}

std::string panel_file(int period) {
    return period == 0 ? "panel.csv" : "panel_p" + std::to_string(period) + ".csv";
}

void stage_panel(const Context& ctx) {
    const auto& pl = ctx.config.pipeline;
    const auto roster = load_roster(ctx);
    const auto graphs = load_graphs(ctx, roster);
    const auto table = load_node_metrics(ctx, graphs, roster);
    const auto attributes = load_attributes(ctx, roster);
    const auto sets = load_sets(ctx, "cohort_sets.csv", roster);

    const auto nested = compute_series(sets, graphs, table, roster, pl.horizon);
    {
        auto out = open_out(ctx.path("series.csv"));
        write_series(out, nested);
    }
    const auto series = flatten(nested);
    const auto panels = assemble_panel(sets, series, roster, pl.split, pl.horizon);

    std::vector<std::string> outputs{ctx.path("series.csv")};
    json listing = json::array();
    for (const auto& p : panels) {
        const auto name = panel_file(p.period);
        auto out = open_out(ctx.path(name));
        write_panel(out, p);
        out.close();
        outputs.push_back(ctx.path(name));
        listing.push_back({{"period", p.period}, {"file", name}, {"rows", p.rows.size()}, {"diagnostics", p.diagnostics}});
    }

    std::vector<SocializationSet> treated;
    for (const auto& s : sets)
        if (s.treated) treated.push_back(s);
    const auto ego = ego_attribute_table(treated, graphs, table, attributes, roster);
    {
        auto out = open_out(ctx.path("ego_attributes.csv"));
        out << "set_id";
        for (const auto& n : ego.names) out << ',' << n;
        out << '\n';
        std::vector<std::string> ids;
        for (const auto& [id, values] : ego.by_set) ids.push_back(id);
        std::sort(ids.begin(), ids.end());
        for (const auto& id : ids) {
            out << id;
            for (double v : ego.by_set.at(id)) out << ',' << format_double(v);
            out << '\n';
        }
    }
    write_json(ctx.path("panels.json"), {{"panels", listing}});
    outputs.push_back(ctx.path("ego_attributes.csv"));
    outputs.push_back(ctx.path("panels.json"));
    std::cerr << "panel: " << panels.size() << " table(s)\n";
    finish(ctx, "panel",
           {ctx.path("roster.csv"), ctx.path("graphs.csv"), ctx.path("weeks.json"), ctx.path("node_metrics.csv"),
            ctx.path("attributes.csv"), ctx.path("cohort_sets.csv")},
           outputs);
}

EgoAttributeTable load_ego_attributes(const Context& ctx) {
    auto table = ego_attribute_table({}, GraphSeries{}, NodeMetricTable{}, AttributeTable{}, Roster{});
    std::vector<std::string> header{"set_id"};
    header.insert(header.end(), table.names.begin(), table.names.end());
    auto in = open_in(require(ctx, "ego_attributes.csv"));
    CsvReader csv(in, header, "ego attributes");
    while (csv.next()) {
        std::vector<double> values;
        for (std::size_t i = 1; i < header.size(); ++i) values.push_back(csv.as_double(i));
        table.by_set[csv.text(0)] = std::move(values);
    }
    return table;
}

void stage_fit(const Context& ctx) {
    const auto& pl = ctx.config.pipeline;
    const auto listing = read_json(require(ctx, "panels.json"));
    std::vector<std::string> inputs{ctx.path("panels.json")};
    std::vector<Panel> panels;
    for (const auto& entry : listing.at("panels")) {
        const auto name = entry.at("file").get<std::string>();
        auto in = open_in(require(ctx, name));
        panels.push_back(read_panel(in, entry.at("period").get<int>()));
        panels.back().diagnostics = entry.at("diagnostics").get<std::vector<std::string>>();
        inputs.push_back(ctx.path(name));
    }

    auto fit = fit_panels(panels, pl.model, pl.fit, pl.inference, pl.horizon);
    std::vector<std::string> diagnostics = fit.diagnostics;

    std::vector<HetContrast> het;
    if (pl.heterogeneous) {
        const auto attributes = load_ego_attributes(ctx);
        inputs.push_back(ctx.path("ego_attributes.csv"));
        for (const auto& p : panels) {
            try {
                auto h = fit_heterogeneous(p, attributes, pl.model, pl.fit, pl.inference);
                het.insert(het.end(), h.contrasts.begin(), h.contrasts.end());
                diagnostics.insert(diagnostics.end(), h.diagnostics.begin(), h.diagnostics.end());
            } catch (const ModelError& e) {
                diagnostics.push_back("heterogeneous model skipped for period " + std::to_string(p.period) + ": " +
                                      e.what());
            }
        }
        const double threshold = pl.inference.alpha / static_cast<double>(std::max<std::size_t>(het.size(), 1));
        for (auto& c : het) c.significant = c.p_raw < threshold;
    }

    {
        auto out = open_out(ctx.path("estimates.csv"));
        write_estimates(out, fit.estimates);
    }
    json fits = json::array();
    for (const auto& f : fit.fits)
        fits.push_back({{"metric", metric_name(f.metric)},
                        {"period", f.period},
                        {"estimation", to_string(f.fit.estimation)},
                        {"var_group", f.fit.var_group},
                        {"var_resid", f.fit.var_resid},
                        {"n_obs", f.fit.n_obs},
                        {"n_groups", f.fit.n_groups}});
    write_json(ctx.path("estimates.json"),
               {{"estimates", estimates_to_json(fit.estimates)}, {"fits", fits}, {"diagnostics", diagnostics}});
    {
        auto out = open_out(ctx.path("trajectories.csv"));
        write_trajectories(out, fit.trajectories);
    }
    {
        auto out = open_out(ctx.path("heterogeneous.csv"));
        write_heterogeneous(out, het);
    }
    std::size_t significant = 0;
    for (const auto& e : fit.estimates) significant += e.significant;
    std::cerr << "fit: " << fit.estimates.size() << " estimates, " << significant << " significant\n";
    finish(ctx, "fit", inputs,
           {ctx.path("estimates.csv"), ctx.path("estimates.json"), ctx.path("trajectories.csv"),
            ctx.path("heterogeneous.csv")});
}

void stage_report(const Context& ctx) {
    std::vector<DiDEstimate> estimates;
    {
        auto in = open_in(require(ctx, "estimates.csv"));
        estimates = read_estimates(in);
    }
    std::vector<HetContrast> het;
    {
        auto in = open_in(require(ctx, "heterogeneous.csv"));
        het = read_heterogeneous(in);
    }
    const auto diagnostics =
        read_json(require(ctx, "estimates.json")).at("diagnostics").get<std::vector<std::string>>();
    const auto roster = load_roster(ctx);
    std::vector<MatchAssignment> assignments;
    {
        auto in = open_in(require(ctx, "matches.csv"));
        assignments = read_assignments(in, roster);
    }
    std::vector<MetricSeries> series;
    {
        auto in = open_in(require(ctx, "series.csv"));
        series = read_series(in);
    }
    const auto diag = match_diagnostics(assignments, series);

    const std::vector<std::pair<std::string, std::function<void(std::ostream&)>>> files = {
        {"report/quadrant.csv", [&](std::ostream& o) { write_quadrant(o, estimates); }},
        {"report/period_overlay.csv", [&](std::ostream& o) { write_period_overlay(o, estimates); }},
        {"report/het_grid.csv", [&](std::ostream& o) { write_het_grid(o, het); }},
        {"report/match_quantiles.csv", [&](std::ostream& o) { write_quantiles(o, diag.quantiles); }},
        {"report/match_distance_hist.csv", [&](std::ostream& o) { write_histogram(o, diag.histogram); }},
        {"report/summary.txt", [&](std::ostream& o) { write_summary(o, estimates, diagnostics); }},
    };
    std::vector<std::string> outputs;
    for (const auto& [name, write] : files) {
        auto out = open_out(ctx.path(name));
        write(out);
        outputs.push_back(ctx.path(name));
    }
    std::cerr << "report: " << ctx.path("report") << '\n';
    finish(ctx, "report",
           {ctx.path("estimates.csv"), ctx.path("estimates.json"), ctx.path("heterogeneous.csv"),
            ctx.path("roster.csv"), ctx.path("matches.csv"), ctx.path("series.csv")},
           outputs);
}

void stage_simulate(const Context& ctx) {
    const auto& sim = ctx.config.simulation;
    const auto out = generate_log(sim);
    const std::string events_name = std::string("simulated/events.") + (ctx.config.format == EventFormat::csv ? "csv" : "jsonl");
    {
        auto f = open_out(ctx.path(events_name));
        write_events(f, out.log, ctx.config.format);
    }
    {
        auto f = open_out(ctx.path("simulated/attributes.csv"));
        write_attributes(f, out.log.roster, out.attributes);
    }
    {
        auto f = open_out(ctx.path("simulated/schedule.csv"));
        write_schedule(f, out.schedule, sim.n_employees);
    }
    std::cerr << "simulate: " << out.log.events.size() << " events, " << out.schedule.size() << " departures\n";
    finish(ctx, "simulate", {},
           {ctx.path(events_name), ctx.path("simulated/attributes.csv"), ctx.path("simulated/schedule.csv")});
}

void stage_oracle(const Context& ctx) {
    const auto bands = oracle_expected_did(ctx.config.simulation, ctx.config.pipeline, ctx.config.oracle_replicates);
    auto out = open_out(ctx.path("oracle.csv"));
    write_oracle(out, bands);
    out.close();
    std::cerr << "oracle: " << ctx.config.oracle_replicates << " replicates\n";
    finish(ctx, "oracle", {}, {ctx.path("oracle.csv")});
}

const std::vector<std::pair<std::string, void (*)(const Context&)>>& stages() {
    static const std::vector<std::pair<std::string, void (*)(const Context&)>> s = {
        {"ingest", stage_ingest}, {"graphs", stage_graphs}, {"departures", stage_departures},
        {"sets", stage_sets},     {"metrics", stage_metrics}, {"match", stage_match},
        {"panel", stage_panel},   {"fit", stage_fit},       {"report", stage_report},
        {"simulate", stage_simulate}, {"oracle", stage_oracle},
    };
    return s;
}

void run(const std::string& name, const Context& ctx) {
    if (name == "all") {
        for (const auto& [stage, fn] : stages()) {
            if (stage == "simulate" || stage == "oracle") continue;
            fn(ctx);
        }
        return;
    }
    for (const auto& [stage, fn] : stages())
        if (stage == name) return fn(ctx);
    throw ConfigError("unknown stage " + name);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Departure impact pipeline over weekly communication graphs"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;
    app.add_option("--config", config_path, "JSON run config")->check(CLI::ExistingFile);
    app.add_option("--format", overrides.format, "event log format")->check(CLI::IsMember({"csv", "jsonl"}));
    app.add_option("--threads", overrides.threads, "worker cap (0: OpenMP default)")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", overrides.seed, "root seed");
    app.add_option("--freeze", overrides.freeze, "freeze window length in weeks")->check(CLI::PositiveNumber);
    app.add_option("--weighting", overrides.weighting, "edge weighting")->check(CLI::IsMember({"sum", "harmonic"}));
    app.add_option("--split-cutoff", overrides.split_cutoff, "enable the period split at this week");
    app.add_option("--workdir", overrides.workdir, "artifact directory");

    std::string chosen;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"ingest", "parse and validate the event log"},
        {"graphs", "build weekly graphs"},
        {"departures", "detect departures"},
        {"sets", "build treated socialization sets"},
        {"metrics", "per-node weekly metrics"},
        {"match", "kNN control matching"},
        {"panel", "metric series and standardized panels"},
        {"fit", "mixed-model DiD estimates"},
        {"report", "figure-ready tables and summary"},
        {"simulate", "generate a synthetic organization log"},
        {"oracle", "model-free DiD band over simulated replicates"},
        {"all", "ingest through report"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        sub->callback([&chosen, n = name] { chosen = n; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        Context ctx;
        ctx.config = config_path.empty() ? run_config_from_json(json::object()) : load_run_config(config_path);
        apply_overrides(ctx.config, overrides);
        validate(ctx.config);
        ctx.config_json = run_config_to_json(ctx.config);
        ctx.root = ctx.config.workdir;
        if (ctx.config.threads > 0) omp_set_num_threads(ctx.config.threads);
        fs::create_directories(ctx.root);
        run(chosen, ctx);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ModelError& e) {
        std::cerr << "model error: " << e.what() << '\n';
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
