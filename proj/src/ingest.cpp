#include "departnet/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace departnet {

namespace {

constexpr std::int64_t kMillisPerDay = 86'400'000;
constexpr std::size_t kMaxReportedIssues = 20;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

int parse_int(std::string_view s, const char* what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw DataError(std::string("invalid ") + what + " '" + std::string(s) + "'");
    return value;
}

int fixed_digits(std::string_view s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) throw DataError("truncated timestamp '" + std::string(s) + "'");
    return parse_int(s.substr(pos, n), "timestamp field");
}

EventKind parse_kind(std::string_view s) {
    if (s == "dm") return EventKind::direct;
    if (s == "group") return EventKind::group;
    throw DataError("unknown kind '" + std::string(s) + "' (expected dm or group)");
}

// Raw record with string ids, validated before interning.
struct RawEvent {
    Timestamp timestamp = 0;
    std::string sender;
    std::vector<std::string> recipients;
    EventKind kind = EventKind::direct;
    int group_size = 0;
};

void validate_raw(const RawEvent& e) {
    if (e.sender.empty()) throw DataError("empty sender");
    if (e.recipients.empty()) throw DataError("empty recipients");
    for (const auto& r : e.recipients) {
        if (r.empty()) throw DataError("empty recipient id");
        if (r == e.sender) throw DataError("sender listed among recipients");
    }
    auto sorted = e.recipients;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw DataError("duplicate recipient");
    if (e.kind == EventKind::direct) {
        if (e.recipients.size() != 1) throw DataError("dm event must have exactly one recipient");
        if (e.group_size != 0) throw DataError("dm event must not carry group_size");
    } else {
        if (e.group_size < 2) throw DataError("group event needs group_size >= 2");
        if (static_cast<std::size_t>(e.group_size) < e.recipients.size() + 1)
            throw DataError("group_size smaller than listed participants");
    }
}

RawEvent parse_csv_line(std::string_view line) {
    auto fields = split(line, ',');
    if (fields.size() != 5)
        throw DataError("expected 5 comma-separated fields, found " + std::to_string(fields.size()));
    RawEvent e;
    e.timestamp = parse_rfc3339(trim(fields[0]));
    e.sender = std::string(trim(fields[1]));
    auto recips = trim(fields[2]);
    if (!recips.empty())
        for (auto r : split(recips, ';')) e.recipients.emplace_back(trim(r));
    e.kind = parse_kind(trim(fields[3]));
    auto size = trim(fields[4]);
    e.group_size = size.empty() ? 0 : parse_int(size, "group_size");
    return e;
}

RawEvent parse_jsonl_line(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& err) {
        throw DataError(std::string("invalid JSON: ") + err.what());
    }
    if (!j.is_object()) throw DataError("expected a JSON object");
    RawEvent e;
    try {
        e.timestamp = parse_rfc3339(j.at("ts").get<std::string>());
        e.sender = j.at("sender").get<std::string>();
        const auto& r = j.at("recipients");
        if (r.is_array()) {
            for (const auto& item : r) e.recipients.push_back(item.get<std::string>());
        } else {
            auto joined = r.get<std::string>();
            if (!joined.empty())
                for (auto part : split(joined, ';')) e.recipients.emplace_back(trim(part));
        }
        e.kind = parse_kind(j.at("kind").get<std::string>());
        if (j.contains("group_size") && !j["group_size"].is_null())
            e.group_size = j["group_size"].get<int>();
    } catch (const nlohmann::json::exception& err) {
        throw DataError(std::string("bad field: ") + err.what());
    }
    return e;
}

bool is_csv_header(std::string_view line) {
    return trim(line).substr(0, 3) == "ts,";
}

}  // namespace

EventFormat parse_event_format(std::string_view text) {
    if (text == "csv") return EventFormat::csv;
    if (text == "jsonl") return EventFormat::jsonl;
    throw ConfigError("unknown event format '" + std::string(text) + "' (expected csv or jsonl)");
}

Timestamp parse_rfc3339(std::string_view s) {
    s = trim(s);
    // YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)
    if (s.size() < 20 || s[4] != '-' || s[7] != '-' || s[13] != ':' || s[16] != ':' ||
        (s[10] != 'T' && s[10] != 't' && s[10] != ' '))
        throw DataError("malformed RFC 3339 timestamp '" + std::string(s) + "'");
    using namespace std::chrono;
    const int y = fixed_digits(s, 0, 4);
    const int mo = fixed_digits(s, 5, 2);
    const int d = fixed_digits(s, 8, 2);
    const int hh = fixed_digits(s, 11, 2);
    const int mm = fixed_digits(s, 14, 2);
    const int ss = fixed_digits(s, 17, 2);
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60)
        throw DataError("invalid calendar value in '" + std::string(s) + "'");

    std::size_t pos = 19;
    std::int64_t millis = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            if (digits < 3) millis = millis * 10 + (s[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) throw DataError("empty fractional seconds in '" + std::string(s) + "'");
        for (int k = digits; k < 3; ++k) millis *= 10;
    }
    std::int64_t offset_minutes = 0;
    if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
        ++pos;
    } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        if (pos + 6 != s.size() || s[pos + 3] != ':')
            throw DataError("malformed UTC offset in '" + std::string(s) + "'");
        const int sign = s[pos] == '-' ? -1 : 1;
        offset_minutes = sign * (fixed_digits(s, pos + 1, 2) * 60 + fixed_digits(s, pos + 4, 2));
        pos += 6;
    } else {
        throw DataError("missing UTC designator in '" + std::string(s) + "'");
    }
    if (pos != s.size()) throw DataError("trailing characters in '" + std::string(s) + "'");

    const std::int64_t days_since_epoch = sys_days{ymd}.time_since_epoch().count();
    const std::int64_t seconds = days_since_epoch * 86'400 + hh * 3600 + mm * 60 + ss - offset_minutes * 60;
    return seconds * 1000 + millis;
}

std::string format_rfc3339(Timestamp ts) {
    using namespace std::chrono;
    std::int64_t day_index = ts >= 0 ? ts / kMillisPerDay : -((-ts + kMillisPerDay - 1) / kMillisPerDay);
    std::int64_t in_day = ts - day_index * kMillisPerDay;
    year_month_day ymd{sys_days{days{day_index}}};
    const auto millis = in_day % 1000;
    const auto secs = in_day / 1000;
    char buf[96];
    if (millis == 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", int(ymd.year()),
                      unsigned(ymd.month()), unsigned(ymd.day()), static_cast<long long>(secs / 3600),
                      static_cast<long long>(secs / 60 % 60), static_cast<long long>(secs % 60));
    } else {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ", int(ymd.year()),
                      unsigned(ymd.month()), unsigned(ymd.day()), static_cast<long long>(secs / 3600),
                      static_cast<long long>(secs / 60 % 60), static_cast<long long>(secs % 60),
                      static_cast<long long>(millis));
    }
    return buf;
}

std::chrono::sys_days parse_date(std::string_view s) {
    s = trim(s);
    if (s.size() != 10 || s[4] != '-' || s[7] != '-')
        throw ConfigError("malformed date '" + std::string(s) + "' (expected YYYY-MM-DD)");
    using namespace std::chrono;
    year_month_day ymd{year{fixed_digits(s, 0, 4)}, month{static_cast<unsigned>(fixed_digits(s, 5, 2))},
                       day{static_cast<unsigned>(fixed_digits(s, 8, 2))}};
    if (!ymd.ok()) throw ConfigError("invalid date '" + std::string(s) + "'");
    return sys_days{ymd};
}

std::string format_date(std::chrono::sys_days d) {
    std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

void validate_event(const EventRecord& e) {
    if (e.recipients.empty()) throw DataError("empty recipients");
    auto sorted = e.recipients;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw DataError("duplicate recipient");
    if (std::binary_search(sorted.begin(), sorted.end(), e.sender))
        throw DataError("sender listed among recipients");
    if (e.kind == EventKind::direct) {
        if (e.recipients.size() != 1) throw DataError("dm event must have exactly one recipient");
    } else if (e.group_size < 2 || static_cast<std::size_t>(e.group_size) < e.recipients.size() + 1) {
        throw DataError("group_size inconsistent with participants");
    }
}

ParseResult parse_events(std::istream& in, EventFormat format, OnMalformed on_error) {
    ParseResult result;
    std::vector<RawEvent> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        if (format == EventFormat::csv && line_no == 1 && is_csv_header(line)) continue;
        try {
            RawEvent e = format == EventFormat::csv ? parse_csv_line(line) : parse_jsonl_line(line);
            validate_raw(e);
            raw.push_back(std::move(e));
        } catch (const DataError& err) {
            if (on_error == OnMalformed::abort)
                throw DataError("line " + std::to_string(line_no) + ": " + err.what());
            ++result.skipped;
            if (result.issues.size() < kMaxReportedIssues)
                result.issues.push_back({line_no, err.what()});
        }
    }

    Roster& roster = result.log.roster;
    for (const auto& e : raw) {
        roster.intern(e.sender);
        for (const auto& r : e.recipients) roster.intern(r);
    }
    roster.canonicalize();
    result.log.events.reserve(raw.size());
    for (auto& e : raw) {
        EventRecord rec;
        rec.timestamp = e.timestamp;
        rec.sender = roster.find(e.sender);
        rec.recipients.reserve(e.recipients.size());
        for (const auto& r : e.recipients) rec.recipients.push_back(roster.find(r));
        rec.kind = e.kind;
        rec.group_size = e.kind == EventKind::group ? e.group_size : 0;
        result.log.events.push_back(std::move(rec));
    }
    return result;
}

void write_events(std::ostream& out, const EventLog& log, EventFormat format) {
    const auto& roster = log.roster;
    if (format == EventFormat::csv) {
        out << "ts,sender,recipients,kind,group_size\n";
        std::string row;
        for (const auto& e : log.events) {
            row.clear();
            row += format_rfc3339(e.timestamp);
            row += ',';
            row += roster.name(e.sender);
            row += ',';
            for (std::size_t i = 0; i < e.recipients.size(); ++i) {
                if (i) row += ';';
                row += roster.name(e.recipients[i]);
            }
            row += e.kind == EventKind::direct ? ",dm," : ",group,";
            if (e.kind == EventKind::group) row += std::to_string(e.group_size);
            row += '\n';
            out << row;
        }
        return;
    }
    for (const auto& e : log.events) {
        nlohmann::ordered_json j;
        j["ts"] = format_rfc3339(e.timestamp);
        j["sender"] = roster.name(e.sender);
        auto recips = nlohmann::ordered_json::array();
        for (auto r : e.recipients) recips.push_back(roster.name(r));
        j["recipients"] = std::move(recips);
        j["kind"] = e.kind == EventKind::direct ? "dm" : "group";
        if (e.kind == EventKind::group) j["group_size"] = e.group_size;
        out << j.dump() << '\n';
    }
}

bool CalendarConfig::is_excluded(int week) const {
    return std::binary_search(excluded_weeks.begin(), excluded_weeks.end(), week);
}

int assign_week(Timestamp ts, const CalendarConfig& calendar) {
    const std::int64_t origin = calendar.week_origin.time_since_epoch().count() * kMillisPerDay;
    if (ts < origin)
        throw DataError("timestamp " + format_rfc3339(ts) + " precedes week origin " +
                        format_date(calendar.week_origin));
    return static_cast<int>((ts - origin) / (7 * kMillisPerDay));
}

std::vector<EventRecord> filter_excluded(std::vector<EventRecord> events, const CalendarConfig& calendar) {
    if (calendar.excluded_weeks.empty()) return events;
    std::erase_if(events, [&](const EventRecord& e) {
        return calendar.is_excluded(assign_week(e.timestamp, calendar));
    });
    return events;
}

}  // namespace departnet
