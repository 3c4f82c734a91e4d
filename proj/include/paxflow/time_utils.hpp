#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace paxflow {

// All timestamps are stored as seconds since the Unix epoch, UTC.
using UtcSeconds = std::int64_t;

constexpr std::int64_t kSecondsPerDay = 86400;

// Parses an ISO 8601 timestamp with an explicit offset:
//   2012-08-12T06:15:00+10:00   2012-08-12T20:15:00Z   2012-08-12T06:15:00+1000
// Fractional seconds are accepted and truncated. Returns nullopt on anything
// malformed, including a missing offset.
std::optional<UtcSeconds> parse_iso8601(std::string_view text);

// Canonical form: YYYY-MM-DDTHH:MM:SSZ.
std::string format_iso8601_utc(UtcSeconds t);

// YYYY-MM-DD, interpreted as midnight UTC.
std::optional<UtcSeconds> parse_date(std::string_view text);
std::string format_date(UtcSeconds t);

// Floor divisions that work for negative timestamps.
std::int64_t floor_div(std::int64_t a, std::int64_t b);
UtcSeconds day_start(UtcSeconds t);
UtcSeconds bin_floor(UtcSeconds t, std::int64_t width);
int hour_of_day(UtcSeconds t);

// Proleptic Gregorian conversions.
std::int64_t days_from_civil(int year, int month, int day);
void civil_from_days(std::int64_t days, int& year, int& month, int& day);

} // namespace paxflow
