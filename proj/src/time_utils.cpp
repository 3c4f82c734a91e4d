#include "paxflow/time_utils.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>

namespace paxflow {

namespace {

bool parse_fixed_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = 0; i < len; ++i) {
        char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

bool valid_civil_date(int y, int m, int d) {
    if (m < 1 || m > 12 || d < 1) return false;
    static constexpr std::array<int, 12> days{31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int max_d = days[static_cast<std::size_t>(m - 1)];
    bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    if (m == 2 && leap) max_d = 29;
    return d <= max_d;
}

} // namespace

std::int64_t days_from_civil(int year, int month, int day) {
    // Howard Hinnant's algorithm.
    year -= month <= 2;
    const std::int64_t era = (year >= 0 ? year : year - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(year - era * 400);
    const unsigned doy =
        static_cast<unsigned>((153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t days, int& year, int& month, int& day) {
    days += 719468;
    const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(days - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    year = static_cast<int>(y + (month <= 2));
}

std::optional<UtcSeconds> parse_iso8601(std::string_view text) {
    // YYYY-MM-DDTHH:MM:SS[.frac](Z|±HH:MM|±HHMM)
    int y, mo, d, h, mi, s;
    if (!parse_fixed_int(text, 0, 4, y)) return std::nullopt;
    if (text.size() < 19 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
        text[13] != ':' || text[16] != ':')
        return std::nullopt;
    if (!parse_fixed_int(text, 5, 2, mo) || !parse_fixed_int(text, 8, 2, d) ||
        !parse_fixed_int(text, 11, 2, h) || !parse_fixed_int(text, 14, 2, mi) ||
        !parse_fixed_int(text, 17, 2, s))
        return std::nullopt;
    if (!valid_civil_date(y, mo, d) || h > 23 || mi > 59 || s > 60) return std::nullopt;
    if (s == 60) s = 59; // fold leap seconds

    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        std::size_t digits = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            ++pos;
            ++digits;
        }
        if (digits == 0) return std::nullopt;
    }

    if (pos >= text.size()) return std::nullopt; // offset is mandatory
    std::int64_t offset = 0;
    if (text[pos] == 'Z') {
        ++pos;
    } else if (text[pos] == '+' || text[pos] == '-') {
        const int sign = text[pos] == '+' ? 1 : -1;
        ++pos;
        int oh = 0, om = 0;
        if (!parse_fixed_int(text, pos, 2, oh)) return std::nullopt;
        pos += 2;
        if (pos < text.size() && text[pos] == ':') ++pos;
        if (pos + 2 <= text.size()) {
            if (!parse_fixed_int(text, pos, 2, om)) return std::nullopt;
            pos += 2;
        }
        if (oh > 14 || om > 59) return std::nullopt;
        offset = sign * (oh * 3600 + om * 60);
    } else {
        return std::nullopt;
    }
    if (pos != text.size()) return std::nullopt;

    const std::int64_t days = days_from_civil(y, mo, d);
    return days * kSecondsPerDay + h * 3600 + mi * 60 + s - offset;
}

std::string format_iso8601_utc(UtcSeconds t) {
    const std::int64_t days = floor_div(t, kSecondsPerDay);
    std::int64_t rem = t - days * kSecondsPerDay;
    int y, mo, d;
    civil_from_days(days, y, mo, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", y, mo, d,
                  static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                  static_cast<int>(rem % 60));
    return buf;
}

std::optional<UtcSeconds> parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    int y, mo, d;
    if (!parse_fixed_int(text, 0, 4, y) || !parse_fixed_int(text, 5, 2, mo) ||
        !parse_fixed_int(text, 8, 2, d))
        return std::nullopt;
    if (!valid_civil_date(y, mo, d)) return std::nullopt;
    return days_from_civil(y, mo, d) * kSecondsPerDay;
}

std::string format_date(UtcSeconds t) {
    int y, mo, d;
    civil_from_days(floor_div(t, kSecondsPerDay), y, mo, d);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, mo, d);
    return buf;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

UtcSeconds day_start(UtcSeconds t) { return floor_div(t, kSecondsPerDay) * kSecondsPerDay; }

UtcSeconds bin_floor(UtcSeconds t, std::int64_t width) { return floor_div(t, width) * width; }

int hour_of_day(UtcSeconds t) {
    return static_cast<int>((t - day_start(t)) / 3600);
}

} // namespace paxflow
