#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "departnet/ingest.hpp"
#include "departnet/matching.hpp"

namespace departnet {

// Multipliers applied to a departed ego's team from t_star onward; the
// factors of several departures in one team multiply.
struct EffectFactors {
    double volume_factor = 1.0;         // within-team pair and meeting rates
    double fragmentation_factor = 1.0;  // rates between the two halves of the team
    double activity_factor = 1.0;       // every remaining member's overall activity

    friend bool operator==(const EffectFactors&, const EffectFactors&) = default;
};

// Departures with t_star >= start_week use `factors` instead of the base effects.
struct StressWindow {
    int start_week = 0;
    EffectFactors factors;
};

struct ScheduledDeparture {
    std::uint32_t employee = 0;  // index into the generated roster
    int t_star = 0;

    friend bool operator==(const ScheduledDeparture&, const ScheduledDeparture&) = default;
};

// Random schedule with t_star uniform in [t_min, t_max]. Egos are one per
// chosen team, or drawn uniformly from the whole roster.
struct RandomSchedule {
    int count = 0;
    int t_min = 0;
    int t_max = 0;
    bool one_per_team = false;
};

struct SimConfig {
    std::uint64_t seed = 0;
    int n_employees = 200;
    int n_teams = 20;
    int n_weeks = 40;
    double within_rate = 0.8;  // events per within-team pair-week
    double across_rate = 1.0;  // across-team events initiated per employee-week
    double meeting_rate = 1.0; // group meetings per team-week
    double attendance = 0.5;   // each eligible member joins a meeting independently
    double reply_probability = 0.0;  // a direct message is answered within the same week
    std::vector<ScheduledDeparture> schedule;
    std::optional<RandomSchedule> random_schedule;  // used when `schedule` is empty
    EffectFactors effects;
    std::optional<StressWindow> stress;
    double manager_share = 0.1;
    double leader_share = 0.2;
    double senior_share = 0.4;
    double gender_share = 0.5;
    CalendarConfig calendar;

    void validate() const;  // throws ConfigError
};

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json sim_config_to_json(const SimConfig& config);

// e0000, e0001, ... padded so that name order equals index order.
std::string employee_name(std::uint32_t index, int n_employees);
int team_of(std::uint32_t employee, const SimConfig& config);

// The explicit schedule, or one drawn from `random_schedule` and the seed;
// sorted by (t_star, employee).
std::vector<ScheduledDeparture> resolve_schedule(const SimConfig& config);

struct SimOutput {
    EventLog log;
    AttributeTable attributes;
    std::vector<ScheduledDeparture> schedule;
};

// Byte-reproducible given the config (including seed).
SimOutput generate_log(const SimConfig& config);

void write_schedule(std::ostream& out, const std::vector<ScheduledDeparture>& schedule, int n_employees);

}  // namespace departnet
