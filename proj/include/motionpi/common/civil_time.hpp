#pragma once

#include <string>
#include <string_view>

namespace motionpi {

struct LocalDate {
    int year = 1970;
    unsigned month = 1;
    unsigned day = 1;

    friend bool operator==(const LocalDate&, const LocalDate&) = default;
    [[nodiscard]] LocalDate plus_days(int n) const;
    [[nodiscard]] std::string to_string() const;  // YYYY-MM-DD
    [[nodiscard]] static LocalDate parse(std::string_view text);
};

/// Parses "HH:MM" or "HH:MM:SS" into seconds since local midnight.
[[nodiscard]] int parse_time_of_day(std::string_view text);
[[nodiscard]] std::string format_time_of_day(double seconds_since_midnight);

/// Fixed-offset local calendar. Time zones with DST are out of scope; a
/// study site is configured with its standard offset.
class LocalCalendar {
public:
    explicit LocalCalendar(int utc_offset_minutes = 0) : offset_s_(utc_offset_minutes * 60) {}

    [[nodiscard]] int utc_offset_minutes() const { return offset_s_ / 60; }
    [[nodiscard]] double midnight(LocalDate date) const;
    [[nodiscard]] double at(LocalDate date, double seconds_since_midnight) const {
        return midnight(date) + seconds_since_midnight;
    }
    [[nodiscard]] LocalDate date_of(double t) const;
    [[nodiscard]] double seconds_of_day(double t) const;

    /// ISO-8601 local time with millisecond precision and offset suffix,
    /// e.g. 2025-01-06T07:30:00.000-07:00.
    [[nodiscard]] std::string iso8601(double t) const;
    /// YYYYMMDD-HHMMSS in local time.
    [[nodiscard]] std::string compact_stamp(double t) const;

private:
    int offset_s_;
};

}  // namespace motionpi
