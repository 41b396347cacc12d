#include "departnet/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace departnet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void allow_keys(const json& j, const std::string& section, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError("config: '" + section + "' must be an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : j.items())
        if (!allowed.contains(key)) throw ConfigError("config: unknown key '" + key + "' in " + section);
}

std::string resolve(const std::string& path, const std::string& base) {
    if (path.empty() || fs::path(path).is_absolute()) return path;
    return (fs::path(base) / path).lexically_normal().string();
}

FeatureAveraging parse_averaging(const std::string& s) {
    if (s == "active_weeks") return FeatureAveraging::active_weeks;
    if (s == "all_weeks") return FeatureAveraging::all_weeks;
    throw ConfigError("config: matching.feature_averaging must be active_weeks or all_weeks");
}

}  // namespace

RunConfig run_config_from_json(const json& j, const std::string& config_dir) {
    RunConfig c;
    c.config_dir = config_dir;
    try {
        allow_keys(j, "config", {"paths", "format", "on_malformed", "calendar", "windows", "weighting", "matching",
                                 "split", "model", "heterogeneous", "threads", "seed", "simulation", "oracle"});
        if (j.contains("paths")) {
            const auto& p = j.at("paths");
            allow_keys(p, "paths", {"events", "workdir", "attributes"});
            c.events_path = resolve(p.value("events", std::string{}), config_dir);
            c.workdir = resolve(p.value("workdir", c.workdir), config_dir);
            c.attributes_path = resolve(p.value("attributes", std::string{}), config_dir);
        }
        if (j.contains("format")) c.format = parse_event_format(j.at("format").get<std::string>());
        if (j.contains("on_malformed")) {
            const auto s = j.at("on_malformed").get<std::string>();
            if (s == "abort") c.on_malformed = OnMalformed::abort;
            else if (s == "skip") c.on_malformed = OnMalformed::skip;
            else throw ConfigError("config: on_malformed must be abort or skip");
        }
        auto& pl = c.pipeline;
        if (j.contains("calendar")) {
            const auto& cal = j.at("calendar");
            allow_keys(cal, "calendar", {"week_origin", "excluded_weeks"});
            if (cal.contains("week_origin")) pl.calendar.week_origin = parse_date(cal.at("week_origin").get<std::string>());
            if (cal.contains("excluded_weeks")) {
                auto weeks = cal.at("excluded_weeks").get<std::vector<int>>();
                std::sort(weeks.begin(), weeks.end());
                weeks.erase(std::unique(weeks.begin(), weeks.end()), weeks.end());
                pl.calendar.excluded_weeks = std::move(weeks);
            }
        }
        if (j.contains("windows")) {
            const auto& w = j.at("windows");
            allow_keys(w, "windows", {"buffer", "freeze", "right_exclusive", "horizon", "lookahead"});
            pl.window.buffer = w.value("buffer", pl.window.buffer);
            pl.window.freeze = w.value("freeze", pl.window.freeze);
            pl.window.right_exclusive = w.value("right_exclusive", pl.window.right_exclusive);
            pl.horizon = w.value("horizon", pl.horizon);
            pl.lookahead = w.value("lookahead", pl.lookahead);
        }
        if (j.contains("weighting")) pl.weighting = parse_weighting(j.at("weighting").get<std::string>());
        if (j.contains("matching")) {
            const auto& m = j.at("matching");
            allow_keys(m, "matching", {"k", "m", "exclusion_weeks", "feature_averaging", "exact_manager"});
            pl.matching.k = m.value("k", pl.matching.k);
            pl.matching.m = m.value("m", pl.matching.m);
            pl.matching.exclusion_weeks = m.value("exclusion_weeks", pl.matching.exclusion_weeks);
            if (m.contains("feature_averaging"))
                pl.matching.averaging = parse_averaging(m.at("feature_averaging").get<std::string>());
            pl.matching.exact_manager = m.value("exact_manager", pl.matching.exact_manager);
        }
        if (j.contains("split")) {
            const auto& s = j.at("split");
            allow_keys(s, "split", {"enabled", "cutoff_week", "buffer"});
            if (s.value("enabled", false)) {
                if (!s.contains("cutoff_week")) throw ConfigError("config: split.cutoff_week is required when enabled");
                pl.split = PeriodSplit{s.at("cutoff_week").get<int>(), s.value("buffer", 4)};
            }
        }
        if (j.contains("model")) {
            const auto& m = j.at("model");
            allow_keys(m, "model", {"estimation", "alpha", "inference", "t_minus", "t_plus", "controls"});
            if (m.contains("estimation")) {
                pl.model.estimation = parse_estimation(m.at("estimation").get<std::string>());
                pl.fit.estimation = pl.model.estimation;
            }
            pl.inference.alpha = m.value("alpha", pl.inference.alpha);
            if (m.contains("inference")) pl.inference.inference = parse_inference(m.at("inference").get<std::string>());
            pl.inference.t_minus = m.value("t_minus", pl.inference.t_minus);
            pl.inference.t_plus = m.value("t_plus", pl.inference.t_plus);
            if (m.contains("controls")) pl.model.controls = m.at("controls").get<std::vector<std::string>>();
        }
        pl.heterogeneous = j.value("heterogeneous", pl.heterogeneous);
        c.threads = j.value("threads", c.threads);
        c.seed = j.value("seed", c.seed);
        if (j.contains("simulation")) {
            if (j.at("simulation").contains("seed"))
                throw ConfigError("config: simulation.seed is not allowed; the root seed drives the simulation");
            c.simulation = sim_config_from_json(j.at("simulation"));
        }
        if (j.contains("oracle")) {
            allow_keys(j.at("oracle"), "oracle", {"replicates"});
            c.oracle_replicates = j.at("oracle").value("replicates", c.oracle_replicates);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const DataError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    apply_overrides(c, {});
    validate(c);
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    const auto dir = fs::path(path).parent_path().string();
    return run_config_from_json(j, dir.empty() ? "." : dir);
}

json run_config_to_json(const RunConfig& c) {
    const auto& pl = c.pipeline;
    json j;
    j["format"] = c.format == EventFormat::csv ? "csv" : "jsonl";
    j["on_malformed"] = c.on_malformed == OnMalformed::abort ? "abort" : "skip";
    j["calendar"] = {{"week_origin", format_date(pl.calendar.week_origin)},
                     {"excluded_weeks", pl.calendar.excluded_weeks}};
    j["windows"] = {{"buffer", pl.window.buffer},
                    {"freeze", pl.window.freeze},
                    {"right_exclusive", pl.window.right_exclusive},
                    {"horizon", pl.horizon},
                    {"lookahead", pl.lookahead}};
    j["weighting"] = std::string(to_string(pl.weighting));
    j["matching"] = {{"k", pl.matching.k},
                     {"m", pl.matching.m},
                     {"exclusion_weeks", pl.matching.exclusion_weeks},
                     {"feature_averaging",
                      pl.matching.averaging == FeatureAveraging::active_weeks ? "active_weeks" : "all_weeks"},
                     {"exact_manager", pl.matching.exact_manager}};
    j["split"] = pl.split ? json{{"enabled", true}, {"cutoff_week", pl.split->cutoff_week}, {"buffer", pl.split->buffer}}
                          : json{{"enabled", false}};
    j["model"] = {{"estimation", std::string(to_string(pl.fit.estimation))},
                  {"alpha", pl.inference.alpha},
                  {"inference", std::string(to_string(pl.inference.inference))},
                  {"t_minus", pl.inference.t_minus},
                  {"t_plus", pl.inference.t_plus},
                  {"controls", pl.model.controls}};
    j["heterogeneous"] = pl.heterogeneous;
    j["seed"] = c.seed;
    auto sim = sim_config_to_json(c.simulation);
    sim.erase("seed");
    j["simulation"] = sim;
    j["oracle"] = {{"replicates", c.oracle_replicates}};
    return j;
}

void apply_overrides(RunConfig& c, const Overrides& o) {
    if (o.format) c.format = parse_event_format(*o.format);
    if (o.weighting) c.pipeline.weighting = parse_weighting(*o.weighting);
    if (o.threads) c.threads = *o.threads;
    if (o.seed) c.seed = *o.seed;
    if (o.freeze) c.pipeline.window.freeze = *o.freeze;
    if (o.split_cutoff) {
        const int buffer = c.pipeline.split ? c.pipeline.split->buffer : 4;
        c.pipeline.split = PeriodSplit{*o.split_cutoff, buffer};
    }
    if (o.workdir) c.workdir = *o.workdir;
    c.pipeline.matching.seed = c.seed;
    c.simulation.seed = c.seed;
    c.pipeline.model.estimation = c.pipeline.fit.estimation;
}

void validate(const RunConfig& c) {
    const auto& pl = c.pipeline;
    if (pl.window.buffer <= 0 || pl.window.freeze <= 0) throw ConfigError("config: buffer and freeze must be positive");
    if (pl.window.right_exclusive && pl.window.freeze < 2)
        throw ConfigError("config: a right-exclusive window needs freeze >= 2");
    if (pl.horizon <= 0) throw ConfigError("config: horizon must be positive");
    if (pl.lookahead < 0) throw ConfigError("config: lookahead must be non-negative");
    if (pl.matching.m < 1 || pl.matching.k < pl.matching.m) throw ConfigError("config: matching needs 1 <= m <= k");
    if (pl.matching.exclusion_weeks < 0) throw ConfigError("config: exclusion_weeks must be non-negative");
    if (pl.split && pl.split->buffer < 0) throw ConfigError("config: split.buffer must be non-negative");
    if (!(pl.inference.alpha > 0 && pl.inference.alpha < 1)) throw ConfigError("config: alpha must be in (0, 1)");
    if (pl.inference.t_minus >= 0 || pl.inference.t_plus <= 0)
        throw ConfigError("config: t_minus must be negative and t_plus positive");
    if (-pl.inference.t_minus > pl.horizon || pl.inference.t_plus > pl.horizon)
        throw ConfigError("config: contrast weeks must lie within the horizon");
    if (c.threads < 0) throw ConfigError("config: threads must be non-negative");
    if (c.oracle_replicates < 100) throw ConfigError("config: oracle.replicates must be at least 100");
    for (const auto& control : pl.model.controls)
        if (control != "baseline_size" && control != "anchor_week")
            throw ConfigError("config: unknown control '" + control + "'");
}

}  // namespace departnet
