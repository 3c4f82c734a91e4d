#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace paxflow::csv {

// Minimal comma-separated reader: header row required, no quoting (none of the
// pipeline's fields may contain commas), CRLF tolerated, blank lines skipped.

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers; // 1-based source line per row
};

std::vector<std::string> split_line(std::string_view line);

// Throws SchemaError if the stream has no header row.
Table read_table(std::istream& in);

// Column indexes for required names, in order; throws SchemaError naming the
// first missing column.
std::vector<std::size_t> require_columns(const Table& table, const std::vector<std::string>& names);
std::optional<std::size_t> find_column(const Table& table, const std::string& name);

// Deterministic shortest round-trip formatting for doubles.
std::string format_double(double v);
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

} // namespace paxflow::csv
