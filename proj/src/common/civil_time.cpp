#include "motionpi/common/civil_time.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace motionpi {

namespace {

using std::chrono::days;
using std::chrono::sys_days;
using std::chrono::year_month_day;

year_month_day to_ymd(LocalDate d) {
    return year_month_day{std::chrono::year{d.year}, std::chrono::month{d.month}, std::chrono::day{d.day}};
}

LocalDate from_ymd(year_month_day ymd) {
    return LocalDate{static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day())};
}

int parse_int(std::string_view s, std::string_view what) {
    if (s.empty()) {
        throw std::invalid_argument("empty " + std::string(what));
    }
    int v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') {
            throw std::invalid_argument("bad digit in " + std::string(what) + ": " + std::string(s));
        }
        v = v * 10 + (c - '0');
    }
    return v;
}

}  // namespace

LocalDate LocalDate::plus_days(int n) const { return from_ymd(year_month_day{sys_days{to_ymd(*this)} + days{n}}); }

std::string LocalDate::to_string() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
    return buf;
}

LocalDate LocalDate::parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw std::invalid_argument("expected YYYY-MM-DD, got '" + std::string(text) + "'");
    }
    LocalDate d{parse_int(text.substr(0, 4), "year"), static_cast<unsigned>(parse_int(text.substr(5, 2), "month")),
                static_cast<unsigned>(parse_int(text.substr(8, 2), "day"))};
    if (!to_ymd(d).ok()) {
        throw std::invalid_argument("invalid calendar date '" + std::string(text) + "'");
    }
    return d;
}

int parse_time_of_day(std::string_view text) {
    if (text.size() != 5 && text.size() != 8) {
        throw std::invalid_argument("expected HH:MM[:SS], got '" + std::string(text) + "'");
    }
    if (text[2] != ':' || (text.size() == 8 && text[5] != ':')) {
        throw std::invalid_argument("expected HH:MM[:SS], got '" + std::string(text) + "'");
    }
    const int h = parse_int(text.substr(0, 2), "hour");
    const int m = parse_int(text.substr(3, 2), "minute");
    const int s = text.size() == 8 ? parse_int(text.substr(6, 2), "second") : 0;
    if (h > 24 || m > 59 || s > 59 || (h == 24 && (m != 0 || s != 0))) {
        throw std::invalid_argument("time of day out of range: '" + std::string(text) + "'");
    }
    return h * 3600 + m * 60 + s;
}

std::string format_time_of_day(double seconds_since_midnight) {
    const auto total = static_cast<long>(std::floor(seconds_since_midnight));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%02ld:%02ld:%02ld", total / 3600, (total / 60) % 60, total % 60);
    return buf;
}

double LocalCalendar::midnight(LocalDate date) const {
    const auto day_index = sys_days{to_ymd(date)}.time_since_epoch().count();
    return static_cast<double>(day_index) * 86400.0 - offset_s_;
}

LocalDate LocalCalendar::date_of(double t) const {
    const double local = t + offset_s_;
    const auto day_index = static_cast<long>(std::floor(local / 86400.0));
    return from_ymd(year_month_day{sys_days{days{day_index}}});
}

double LocalCalendar::seconds_of_day(double t) const { return t - midnight(date_of(t)); }

std::string LocalCalendar::iso8601(double t) const {
    const LocalDate d = date_of(t);
    const double sod = seconds_of_day(t);
    auto ms_total = static_cast<long long>(std::llround(sod * 1000.0));
    if (ms_total >= 86400000LL) {
        ms_total = 86399999LL;
    }
    const long long secs = ms_total / 1000;
    const int off_min = offset_s_ / 60;
    const char sign = off_min < 0 ? '-' : '+';
    const int abs_off = off_min < 0 ? -off_min : off_min;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lld%c%02d:%02d", d.year, d.month, d.day,
                  secs / 3600, (secs / 60) % 60, secs % 60, ms_total % 1000, sign, abs_off / 60, abs_off % 60);
    return buf;
}

std::string LocalCalendar::compact_stamp(double t) const {
    const LocalDate d = date_of(t);
    const auto secs = static_cast<long>(std::floor(seconds_of_day(t)));
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d%02u%02u-%02ld%02ld%02ld", d.year, d.month, d.day, secs / 3600,
                  (secs / 60) % 60, secs % 60);
    return buf;
}

}  // namespace motionpi
