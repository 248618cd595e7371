#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include "trendlab/errors.hpp"

namespace trendlab {

// Calendar date, no timezone. Comparable, ISO-8601 in/out.
struct Date {
    int year = 0;
    int month = 0; // 1..12
    int day = 0;   // 1..31

    auto operator<=>(const Date&) const = default;

    bool valid() const {
        if (year < 1 || month < 1 || month > 12 || day < 1) return false;
        static constexpr int md[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        int dmax = md[month - 1];
        if (month == 2 && (year % 4 == 0 && (year % 100 != 0 || year % 400 == 0))) dmax = 29;
        return day <= dmax;
    }

    std::string to_string() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
        return buf;
    }

    static Date parse(std::string_view s) {
        auto digits = [](std::string_view v) {
            for (char c : v)
                if (c < '0' || c > '9') return false;
            return !v.empty();
        };
        if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !digits(s.substr(0, 4)) ||
            !digits(s.substr(5, 2)) || !digits(s.substr(8, 2)))
            throw ParseError("bad date '" + std::string(s) + "' (expected YYYY-MM-DD)");
        Date d{std::stoi(std::string(s.substr(0, 4))), std::stoi(std::string(s.substr(5, 2))),
               std::stoi(std::string(s.substr(8, 2)))};
        if (!d.valid()) throw ParseError("invalid calendar date '" + std::string(s) + "'");
        return d;
    }
};

// Days since 1970-01-01 (proleptic Gregorian), Howard Hinnant's algorithm.
inline std::int64_t days_from_civil(const Date& dt) {
    std::int64_t y = dt.year;
    unsigned m = static_cast<unsigned>(dt.month);
    unsigned d = static_cast<unsigned>(dt.day);
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline Date civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

// 0 = Monday .. 6 = Sunday.
inline int weekday(const Date& d) {
    std::int64_t z = days_from_civil(d); // 1970-01-01 was a Thursday
    return static_cast<int>(((z % 7) + 7 + 3) % 7);
}

inline Date next_weekday(Date d) {
    std::int64_t z = days_from_civil(d) + 1;
    Date n = civil_from_days(z);
    while (weekday(n) >= 5) n = civil_from_days(++z);
    return n;
}

} // namespace trendlab
