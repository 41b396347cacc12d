#pragma once

#include <chrono>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "departnet/core.hpp"

namespace departnet {

enum class EventKind { direct, group };

// One communication event. Group participants are the sender plus recipients;
// group_size may exceed the listed participants when the log only names some.
struct EventRecord {
    Timestamp timestamp = 0;
    EmployeeId sender = 0;
    std::vector<EmployeeId> recipients;
    EventKind kind = EventKind::direct;
    int group_size = 0;  // 0 for direct events

    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct EventLog {
    Roster roster;
    std::vector<EventRecord> events;
};

enum class EventFormat { csv, jsonl };
EventFormat parse_event_format(std::string_view text);

enum class OnMalformed { abort, skip };

struct ParseIssue {
    std::size_t line = 0;
    std::string message;
};

struct ParseResult {
    EventLog log;
    std::size_t skipped = 0;
    std::vector<ParseIssue> issues;  // first few skipped lines, for reporting
};

// Reads a line-oriented event log. Malformed lines either throw DataError
// carrying the line number, or are skipped and counted. The returned roster
// is canonical (ids in name order).
ParseResult parse_events(std::istream& in, EventFormat format,
                         OnMalformed on_error = OnMalformed::abort);

void write_events(std::ostream& out, const EventLog& log, EventFormat format);

// Checks the EventRecord invariants; throws DataError with a description.
void validate_event(const EventRecord& event);

Timestamp parse_rfc3339(std::string_view text);
std::string format_rfc3339(Timestamp ts);

struct CalendarConfig {
    std::chrono::sys_days week_origin{std::chrono::year{2021} / std::chrono::January / 4};
    std::vector<int> excluded_weeks;  // sorted, unique

    [[nodiscard]] bool is_excluded(int week) const;
};

std::chrono::sys_days parse_date(std::string_view text);  // YYYY-MM-DD
std::string format_date(std::chrono::sys_days day);

// floor(days since origin / 7). Throws DataError for timestamps before the origin.
int assign_week(Timestamp ts, const CalendarConfig& calendar);

// Drops events whose week is excluded, preserving order.
std::vector<EventRecord> filter_excluded(std::vector<EventRecord> events,
                                         const CalendarConfig& calendar);

}  // namespace departnet
