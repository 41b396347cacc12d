#include "departnet/synth.hpp"

#include <algorithm>
#include <climits>
#include <utility>
#include <ostream>
#include <random>
#include <set>

namespace departnet {

namespace {

constexpr Timestamp kMillisPerWeek = 7LL * 24 * 3600 * 1000;

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int poisson(std::mt19937_64& rng, double rate) {
    if (rate <= 0.0) return 0;
    return std::poisson_distribution<int>(rate)(rng);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return std::mt19937_64(seq);
}

void check_factors(const EffectFactors& f, const std::string& what) {
    if (!(f.volume_factor > 0) || !(f.fragmentation_factor > 0) || !(f.activity_factor > 0))
        throw ConfigError(what + ": effect factors must be positive");
}

EffectFactors factors_from_json(const nlohmann::json& j) {
    EffectFactors f;
    f.volume_factor = j.value("volume_factor", 1.0);
    f.fragmentation_factor = j.value("fragmentation_factor", 1.0);
    f.activity_factor = j.value("activity_factor", 1.0);
    return f;
}

nlohmann::json factors_to_json(const EffectFactors& f) {
    return {{"volume_factor", f.volume_factor},
            {"fragmentation_factor", f.fragmentation_factor},
            {"activity_factor", f.activity_factor}};
}

}  // namespace

void SimConfig::validate() const {
    if (n_employees < 2) throw ConfigError("simulation: n_employees must be at least 2");
    if (n_teams < 1 || n_teams > n_employees) throw ConfigError("simulation: n_teams must be in [1, n_employees]");
    if (n_weeks < 1) throw ConfigError("simulation: n_weeks must be positive");
    if (within_rate < 0 || across_rate < 0 || meeting_rate < 0) throw ConfigError("simulation: rates must be >= 0");
    if (attendance < 0 || attendance > 1) throw ConfigError("simulation: attendance must be in [0, 1]");
    if (reply_probability < 0 || reply_probability > 1)
        throw ConfigError("simulation: reply_probability must be in [0, 1]");
    for (double share : {manager_share, leader_share, senior_share, gender_share})
        if (share < 0 || share > 1) throw ConfigError("simulation: attribute shares must be in [0, 1]");
    check_factors(effects, "simulation.effects");
    if (stress) check_factors(stress->factors, "simulation.stress");
    std::set<std::uint32_t> egos;
    for (const auto& d : schedule) {
        if (d.employee >= static_cast<std::uint32_t>(n_employees))
            throw ConfigError("simulation: scheduled employee out of range");
        if (d.t_star < 1 || d.t_star > n_weeks) throw ConfigError("simulation: t_star must be in [1, n_weeks]");
        if (!egos.insert(d.employee).second) throw ConfigError("simulation: departure egos must be distinct");
    }
    if (schedule.empty() && random_schedule) {
        const auto& r = *random_schedule;
        const int limit = r.one_per_team ? n_teams : n_employees;
        if (r.count < 0 || r.count > limit)
            throw ConfigError("simulation: departures.count must be in [0, " + std::string(r.one_per_team ? "n_teams" : "n_employees") + "]");
        if (r.t_min < 1 || r.t_max < r.t_min || r.t_max > n_weeks)
            throw ConfigError("simulation: departure weeks must satisfy 1 <= t_min <= t_max <= n_weeks");
    }
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
    SimConfig c;
    try {
        c.seed = j.value("seed", c.seed);
        c.n_employees = j.value("n_employees", c.n_employees);
        c.n_teams = j.value("n_teams", c.n_teams);
        c.n_weeks = j.value("n_weeks", c.n_weeks);
        c.within_rate = j.value("within_rate", c.within_rate);
        c.across_rate = j.value("across_rate", c.across_rate);
        c.meeting_rate = j.value("meeting_rate", c.meeting_rate);
        c.attendance = j.value("attendance", c.attendance);
        c.reply_probability = j.value("reply_probability", c.reply_probability);
        c.manager_share = j.value("manager_share", c.manager_share);
        c.leader_share = j.value("leader_share", c.leader_share);
        c.senior_share = j.value("senior_share", c.senior_share);
        c.gender_share = j.value("gender_share", c.gender_share);
        if (j.contains("schedule"))
            for (const auto& d : j.at("schedule"))
                c.schedule.push_back({d.at("employee").get<std::uint32_t>(), d.at("t_star").get<int>()});
        if (j.contains("departures")) {
            const auto& d = j.at("departures");
            c.random_schedule = RandomSchedule{d.at("count").get<int>(), d.at("t_min").get<int>(),
                                               d.at("t_max").get<int>(), d.value("one_per_team", false)};
        }
        if (j.contains("effects")) c.effects = factors_from_json(j.at("effects"));
        if (j.contains("stress")) {
            const auto& s = j.at("stress");
            c.stress = StressWindow{s.at("start_week").get<int>(), factors_from_json(s)};
        }
        if (j.contains("week_origin")) c.calendar.week_origin = parse_date(j.at("week_origin").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("simulation config: ") + e.what());
    } catch (const DataError& e) {
        throw ConfigError(std::string("simulation config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json sim_config_to_json(const SimConfig& c) {
    nlohmann::json j = {{"seed", c.seed},
                        {"n_employees", c.n_employees},
                        {"n_teams", c.n_teams},
                        {"n_weeks", c.n_weeks},
                        {"within_rate", c.within_rate},
                        {"across_rate", c.across_rate},
                        {"meeting_rate", c.meeting_rate},
                        {"attendance", c.attendance},
                        {"reply_probability", c.reply_probability},
                        {"manager_share", c.manager_share},
                        {"leader_share", c.leader_share},
                        {"senior_share", c.senior_share},
                        {"gender_share", c.gender_share},
                        {"effects", factors_to_json(c.effects)},
                        {"week_origin", format_date(c.calendar.week_origin)}};
    if (!c.schedule.empty()) {
        j["schedule"] = nlohmann::json::array();
        for (const auto& d : c.schedule) j["schedule"].push_back({{"employee", d.employee}, {"t_star", d.t_star}});
    }
    if (c.random_schedule)
        j["departures"] = {{"count", c.random_schedule->count},
                           {"t_min", c.random_schedule->t_min},
                           {"t_max", c.random_schedule->t_max},
                           {"one_per_team", c.random_schedule->one_per_team}};
    if (c.stress) {
        auto s = factors_to_json(c.stress->factors);
        s["start_week"] = c.stress->start_week;
        j["stress"] = s;
    }
    return j;
}

std::string employee_name(std::uint32_t index, int n_employees) {
    const std::string digits = std::to_string(index);
    const std::size_t width = std::max<std::size_t>(4, std::to_string(std::max(n_employees - 1, 0)).size());
    return "e" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

int team_of(std::uint32_t employee, const SimConfig& config) {
    return static_cast<int>(static_cast<long long>(employee) * config.n_teams / config.n_employees);
}

std::vector<ScheduledDeparture> resolve_schedule(const SimConfig& config) {
    std::vector<ScheduledDeparture> out = config.schedule;
    if (out.empty() && config.random_schedule) {
        const auto& r = *config.random_schedule;
        auto rng = stream(config.seed, 1);
        auto draw_week = [&] {
            return r.t_min + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(r.t_max - r.t_min + 1)));
        };
        if (!r.one_per_team) {
            std::vector<std::uint32_t> ids(static_cast<std::size_t>(config.n_employees));
            for (std::uint32_t e = 0; e < ids.size(); ++e) ids[e] = e;
            for (int i = 0; i < r.count; ++i) {
                const auto j = static_cast<std::size_t>(i) + uniform_below(rng, ids.size() - static_cast<std::size_t>(i));
                std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
                out.push_back({ids[static_cast<std::size_t>(i)], draw_week()});
            }
        } else {
            std::vector<int> teams(static_cast<std::size_t>(config.n_teams));
            for (int t = 0; t < config.n_teams; ++t) teams[static_cast<std::size_t>(t)] = t;
            for (int i = 0; i < r.count; ++i) {
                const auto j = static_cast<std::size_t>(i) + uniform_below(rng, teams.size() - static_cast<std::size_t>(i));
                std::swap(teams[static_cast<std::size_t>(i)], teams[j]);
            }
            std::vector<std::uint32_t> first(static_cast<std::size_t>(config.n_teams) + 1, 0);
            for (std::uint32_t e = static_cast<std::uint32_t>(config.n_employees); e-- > 0;)
                first[static_cast<std::size_t>(team_of(e, config))] = e;
            first[static_cast<std::size_t>(config.n_teams)] = static_cast<std::uint32_t>(config.n_employees);
            for (int i = 0; i < r.count; ++i) {
                const auto team = static_cast<std::size_t>(teams[static_cast<std::size_t>(i)]);
                const auto size = first[team + 1] - first[team];
                const auto ego = first[team] + static_cast<std::uint32_t>(uniform_below(rng, size));
                out.push_back({ego, draw_week()});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.t_star != b.t_star ? a.t_star < b.t_star : a.employee < b.employee;
    });
    return out;
}

SimOutput generate_log(const SimConfig& config) {
    config.validate();
    SimOutput out;
    out.schedule = resolve_schedule(config);
    const auto n = static_cast<std::uint32_t>(config.n_employees);
    for (std::uint32_t e = 0; e < n; ++e) out.log.roster.intern(employee_name(e, config.n_employees));

    {
        auto rng = stream(config.seed, 3);
        out.attributes.resize(n);
        for (auto& a : out.attributes) {
            a.is_manager = unit(rng) < config.manager_share;
            a.leader = unit(rng) < config.leader_share;
            a.senior = unit(rng) < config.senior_share;
            a.gender = unit(rng) < config.gender_share;
        }
    }

    std::vector<int> departs(n, INT_MAX);
    for (const auto& d : out.schedule) departs[d.employee] = d.t_star;
    std::vector<std::uint32_t> team_begin(static_cast<std::size_t>(config.n_teams) + 1, n);
    for (std::uint32_t e = n; e-- > 0;) team_begin[static_cast<std::size_t>(team_of(e, config))] = e;
    // Each departure scales its team from its own t_star on; several departures compound.
    std::vector<std::vector<std::pair<int, EffectFactors>>> team_effects(static_cast<std::size_t>(config.n_teams));
    for (const auto& d : out.schedule) {
        const bool stressed = config.stress && d.t_star >= config.stress->start_week;
        team_effects[static_cast<std::size_t>(team_of(d.employee, config))].emplace_back(
            d.t_star, stressed ? config.stress->factors : config.effects);
    }

    auto rng = stream(config.seed, 2);
    const Timestamp origin = std::chrono::duration_cast<std::chrono::milliseconds>(
                                 config.calendar.week_origin.time_since_epoch())
                                 .count();
    auto& events = out.log.events;
    auto stamp = [&](int week) {
        return origin + week * kMillisPerWeek + static_cast<Timestamp>(uniform_below(rng, kMillisPerWeek));
    };
    auto dm = [&](int week, std::uint32_t from, std::uint32_t to) {
        events.push_back({stamp(week), from, {to}, EventKind::direct, 0});
        if (config.reply_probability > 0 && unit(rng) < config.reply_probability)
            events.push_back({stamp(week), to, {from}, EventKind::direct, 0});
    };

    std::vector<std::uint32_t> pool;
    for (int w = 0; w < config.n_weeks; ++w) {
        for (int team = 0; team < config.n_teams; ++team) {
            const auto b = team_begin[static_cast<std::size_t>(team)];
            const auto e = team_begin[static_cast<std::size_t>(team) + 1];
            const auto half = b + (e - b) / 2;
            bool affected = false;
            EffectFactors f;
            for (const auto& [t_star, g] : team_effects[static_cast<std::size_t>(team)]) {
                if (t_star > w) continue;
                affected = true;
                f.volume_factor *= g.volume_factor;
                f.fragmentation_factor *= g.fragmentation_factor;
                f.activity_factor *= g.activity_factor;
            }
            auto alive = [&](std::uint32_t i) { return w < departs[i]; };

            for (auto i = b; i < e; ++i) {
                if (!alive(i)) continue;
                for (auto j = i + 1; j < e; ++j) {
                    if (!alive(j)) continue;
                    double rate = config.within_rate;
                    if (affected) {
                        rate *= f.volume_factor * f.activity_factor * f.activity_factor;
                        if ((i < half) != (j < half)) rate *= f.fragmentation_factor;
                    }
                    for (int k = poisson(rng, rate); k > 0; --k) {
                        if (rng() & 1) dm(w, i, j);
                        else dm(w, j, i);
                    }
                }
            }

            const double meeting_rate = config.meeting_rate * (affected ? f.volume_factor : 1.0);
            for (int k = poisson(rng, meeting_rate); k > 0; --k) {
                pool.clear();
                auto lo = b, hi = e;
                if (affected && unit(rng) >= std::min(1.0, f.fragmentation_factor)) {
                    if (rng() & 1) hi = half;
                    else lo = half;
                }
                for (auto i = lo; i < hi; ++i)
                    if (alive(i) && unit(rng) < config.attendance) pool.push_back(i);
                const auto size = static_cast<int>(pool.size());
                if (size < 2) continue;
                std::swap(pool[0], pool[uniform_below(rng, pool.size())]);
                std::vector<EmployeeId> recipients(pool.begin() + 1, pool.begin() + size);
                std::sort(recipients.begin(), recipients.end());
                events.push_back({stamp(w), pool[0], std::move(recipients), EventKind::group, size});
            }

            const auto outside = n - (e - b);
            if (outside == 0) continue;
            for (auto i = b; i < e; ++i) {
                if (!alive(i)) continue;
                const double rate = config.across_rate * (affected ? f.activity_factor : 1.0);
                for (int k = poisson(rng, rate); k > 0; --k) {
                    auto partner = static_cast<std::uint32_t>(uniform_below(rng, outside));
                    if (partner >= b) partner += e - b;
                    if (alive(partner)) dm(w, i, partner);
                }
            }
        }
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const EventRecord& x, const EventRecord& y) { return x.timestamp < y.timestamp; });
    return out;
}

void write_schedule(std::ostream& out, const std::vector<ScheduledDeparture>& schedule, int n_employees) {
    out << "ego,t_star\n";
    for (const auto& d : schedule) out << employee_name(d.employee, n_employees) << ',' << d.t_star << '\n';
}

}  // namespace departnet
