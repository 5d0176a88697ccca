#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "v2hg/errors.hpp"

namespace v2hg {

using TimePoint = std::chrono::sys_seconds;

inline constexpr int kHoursPerYear = 8760;

namespace detail {

inline bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc() && p == s.data() + pos + len;
}

inline TimePoint make_time(int y, int mo, int d, int h, int mi, int sec) {
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 59)
        throw ValidationError("invalid date/time");
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

} // namespace detail

/// Parses "YYYY-MM-DD[T ]HH:MM[:SS][Z|+00:00]" (UTC) or the market-export
/// form "DD.MM.YYYY HH:MM[ - ...]".
inline TimePoint parse_timestamp(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    std::size_t rest = 0;
    try {
        if (s.size() >= 16 && s[4] == '-' && s[7] == '-' && (s[10] == 'T' || s[10] == ' ') && s[13] == ':') {
            if (!detail::read_int(s, 0, 4, y) || !detail::read_int(s, 5, 2, mo) || !detail::read_int(s, 8, 2, d) ||
                !detail::read_int(s, 11, 2, h) || !detail::read_int(s, 14, 2, mi))
                throw ValidationError("");
            rest = 16;
            if (s.size() >= 19 && s[16] == ':') {
                if (!detail::read_int(s, 17, 2, sec)) throw ValidationError("");
                rest = 19;
            }
            std::string_view tz = s.substr(rest);
            if (!(tz.empty() || tz == "Z" || tz == "+00:00" || tz == "+0000" || tz == " UTC"))
                throw ValidationError("");
        } else if (s.size() >= 16 && s[2] == '.' && s[5] == '.' && s[10] == ' ' && s[13] == ':') {
            if (!detail::read_int(s, 0, 2, d) || !detail::read_int(s, 3, 2, mo) || !detail::read_int(s, 6, 4, y) ||
                !detail::read_int(s, 11, 2, h) || !detail::read_int(s, 14, 2, mi))
                throw ValidationError("");
        } else {
            throw ValidationError("");
        }
        return detail::make_time(y, mo, d, h, mi, sec);
    } catch (const ValidationError&) {
        throw ValidationError("unparseable UTC timestamp '" + std::string(s) + "'");
    }
}

inline std::string format_timestamp(TimePoint t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss hms{t - day};
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                  static_cast<long>(hms.seconds().count()));
    return buf;
}

struct CalendarFeatures {
    int day_of_year = 1; // 1..365 (day 366 of a leap year maps to 365)
    int day_of_week = 0; // Monday = 0
    int hour_of_day = 0;
};

inline CalendarFeatures calendar_at(TimePoint t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const auto jan1 = sys_days{ymd.year() / January / 1};
    CalendarFeatures c;
    c.day_of_year = std::min(365, static_cast<int>((day - jan1).count()) + 1);
    c.day_of_week = static_cast<int>(weekday{day}.iso_encoding()) - 1;
    c.hour_of_day = static_cast<int>(duration_cast<hours>(t - day).count());
    return c;
}

/// Hourly values with their UTC timestamps.
struct HourlySeries {
    std::vector<TimePoint> time;
    std::vector<double> value;

    std::size_t size() const { return value.size(); }
    bool empty() const { return value.empty(); }

    static HourlySeries regular(TimePoint start, std::vector<double> values) {
        HourlySeries s;
        s.time.reserve(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) s.time.push_back(start + std::chrono::hours(i));
        s.value = std::move(values);
        return s;
    }

    CalendarFeatures calendar(std::size_t i) const { return calendar_at(time.at(i)); }

    HourlySeries slice(std::size_t begin, std::size_t count) const {
        if (begin + count > size()) throw ValidationError("series slice out of range");
        HourlySeries s;
        s.time.assign(time.begin() + static_cast<std::ptrdiff_t>(begin),
                      time.begin() + static_cast<std::ptrdiff_t>(begin + count));
        s.value.assign(value.begin() + static_cast<std::ptrdiff_t>(begin),
                       value.begin() + static_cast<std::ptrdiff_t>(begin + count));
        return s;
    }

    void append(const HourlySeries& o) {
        time.insert(time.end(), o.time.begin(), o.time.end());
        value.insert(value.end(), o.value.begin(), o.value.end());
    }
};

inline TimePoint utc(int y, int mo, int d, int h = 0) { return detail::make_time(y, mo, d, h, 0, 0); }

} // namespace v2hg
