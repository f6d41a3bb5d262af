#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fincast {

/// Calendar date (proleptic Gregorian). Comparable, serializable as ISO-8601.
struct Date {
    int year = 0;
    int month = 0;  // 1..12
    int day = 0;    // 1..31

    auto operator<=>(const Date&) const = default;
};

inline bool is_leap_year(int y) {
    return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0);
}

inline int days_in_month(int year, int month) {
    static constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap_year(year)) return 29;
    return lengths[month - 1];
}

inline bool valid_date(const Date& d) {
    return d.month >= 1 && d.month <= 12 && d.day >= 1 && d.day <= days_in_month(d.year, d.month);
}

// Days since 1970-01-01 (Howard Hinnant's civil-days algorithm).
inline std::int64_t to_serial(const Date& d) {
    const int y = d.year - (d.month <= 2);
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy =
        (153u * static_cast<unsigned>(d.month + (d.month > 2 ? -3 : 9)) + 2u) / 5u +
        static_cast<unsigned>(d.day) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline Date from_serial(std::int64_t serial) {
    serial += 719468;
    const std::int64_t era = (serial >= 0 ? serial : serial - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(serial - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

inline Date add_days(const Date& d, std::int64_t n) { return from_serial(to_serial(d) + n); }

/// Shift by whole months, clamping the day to the target month's length
/// (2017-01-31 + 1 month = 2017-02-28).
inline Date add_months(const Date& d, int n) {
    int total = d.year * 12 + (d.month - 1) + n;
    int year = total / 12;
    int month = total % 12;
    if (month < 0) {
        month += 12;
        year -= 1;
    }
    month += 1;
    int day = d.day;
    const int dim = days_in_month(year, month);
    if (day > dim) day = dim;
    return Date{year, month, day};
}

/// Last calendar day of quarter q (1..4) in the given year.
inline Date quarter_end(int year, int q) {
    const int month = q * 3;
    return Date{year, month, days_in_month(year, month)};
}

/// Last day of the n calendar months following d: a June-30 anchor with a
/// 6-month span ends December 31, not December 30.
inline Date period_end_after(const Date& d, int months) {
    return add_days(add_months(add_days(d, 1), months), -1);
}

inline std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return std::string(buf);
}

inline Date parse_date(const std::string& s) {
    Date d;
    const char* p = s.data();
    const char* end = s.data() + s.size();
    auto r1 = std::from_chars(p, end, d.year);
    if (r1.ec != std::errc{} || r1.ptr == end || *r1.ptr != '-')
        throw std::invalid_argument("bad date: " + s);
    auto r2 = std::from_chars(r1.ptr + 1, end, d.month);
    if (r2.ec != std::errc{} || r2.ptr == end || *r2.ptr != '-')
        throw std::invalid_argument("bad date: " + s);
    auto r3 = std::from_chars(r2.ptr + 1, end, d.day);
    if (r3.ec != std::errc{} || r3.ptr != end || !valid_date(d))
        throw std::invalid_argument("bad date: " + s);
    return d;
}

}  // namespace fincast
