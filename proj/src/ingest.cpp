#include "paxflow/ingest.hpp"

#include "paxflow/csv.hpp"
#include "paxflow/errors.hpp"

#include <algorithm>
#include <ostream>
#include <tuple>

namespace paxflow::ingest {

namespace {

std::optional<Direction> parse_direction(const std::string& s) {
    if (s == "arrival") return Direction::arrival;
    if (s == "departure") return Direction::departure;
    return std::nullopt;
}

const char* direction_name(Direction d) {
    return d == Direction::arrival ? "arrival" : "departure";
}

} // namespace

int FlightOccupancyDistribution::sample(const std::string& flight_id, RngStream& rng) const {
    auto it = per_flight.find(flight_id);
    const std::vector<int>& counts = it != per_flight.end() ? it->second : fallback;
    if (counts.empty()) throw DataError("occupancy distribution has no observations");
    std::size_t i = static_cast<std::size_t>(rng.uniform() * static_cast<double>(counts.size()));
    if (i >= counts.size()) i = counts.size() - 1;
    return counts[i];
}

std::vector<FlightArrival> parse_flight_schedule(std::istream& in, ParseDiagnostics* diag) {
    csv::Table table = csv::read_table(in);
    auto idx = csv::require_columns(
        table, {"flight_id", "scheduled_time", "actual_time", "gate", "direction"});
    auto pax_col = csv::find_column(table, "passenger_count");

    ParseDiagnostics d;
    std::vector<FlightArrival> out;
    for (const auto& row : table.rows) {
        ++d.rows_read;
        if (row.size() != table.header.size()) {
            ++d.rows_skipped;
            continue;
        }
        auto scheduled = parse_iso8601(row[idx[1]]);
        auto actual = parse_iso8601(row[idx[2]]);
        auto dir = parse_direction(row[idx[4]]);
        const std::string& gate = row[idx[3]];
        if (!scheduled || !actual || !dir || gate.empty()) {
            ++d.rows_skipped;
            continue;
        }
        std::optional<int> pax;
        if (pax_col && !row[*pax_col].empty()) {
            auto n = csv::parse_int(row[*pax_col]);
            if (!n || *n < 0) {
                ++d.rows_skipped;
                continue;
            }
            pax = static_cast<int>(*n);
        }
        if (*dir == Direction::departure) {
            ++d.filtered_out;
            continue;
        }
        out.push_back({row[idx[0]], *scheduled, *actual, gate, pax});
        ++d.rows_kept;
    }
    if (diag) *diag = d;
    return out;
}

std::vector<StampRecord> parse_immigration_stamps(std::istream& in, ParseDiagnostics* diag) {
    csv::Table table = csv::read_table(in);
    auto idx = csv::require_columns(table, {"timestamp", "desk_id", "flight_id", "direction"});

    ParseDiagnostics d;
    std::vector<StampRecord> out;
    for (const auto& row : table.rows) {
        ++d.rows_read;
        if (row.size() != table.header.size()) {
            ++d.rows_skipped;
            continue;
        }
        auto ts = parse_iso8601(row[idx[0]]);
        auto dir = parse_direction(row[idx[3]]);
        const std::string& desk = row[idx[1]];
        if (!ts || !dir || desk.empty()) {
            ++d.rows_skipped;
            continue;
        }
        std::optional<std::string> flight;
        if (!row[idx[2]].empty()) flight = row[idx[2]];
        out.push_back({*ts, desk, std::move(flight), *dir});
        ++d.rows_kept;
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const StampRecord& a, const StampRecord& b) {
                         return a.timestamp < b.timestamp;
                     });
    if (diag) *diag = d;
    return out;
}

std::vector<DeviceObservation> parse_wifi_traces(std::istream& in, ParseDiagnostics* diag) {
    csv::Table table = csv::read_table(in);
    auto idx = csv::require_columns(table, {"device_id", "timestamp", "zone"});
    auto x_col = csv::find_column(table, "x");
    auto y_col = csv::find_column(table, "y");

    ParseDiagnostics d;
    std::vector<DeviceObservation> out;
    std::set<std::tuple<std::string, UtcSeconds, std::string>> seen;
    for (const auto& row : table.rows) {
        ++d.rows_read;
        if (row.size() != table.header.size()) {
            ++d.rows_skipped;
            continue;
        }
        auto ts = parse_iso8601(row[idx[1]]);
        const std::string& device = row[idx[0]];
        const std::string& zone = row[idx[2]];
        if (!ts || device.empty() || zone.empty()) {
            ++d.rows_skipped;
            continue;
        }
        std::optional<std::pair<double, double>> position;
        if (x_col && y_col && !(row[*x_col].empty() && row[*y_col].empty())) {
            auto x = csv::parse_double(row[*x_col]);
            auto y = csv::parse_double(row[*y_col]);
            if (!x || !y) {
                ++d.rows_skipped;
                continue;
            }
            position = std::make_pair(*x, *y);
        }
        if (!seen.emplace(device, *ts, zone).second) {
            ++d.filtered_out; // exact duplicate
            continue;
        }
        out.push_back({device, *ts, zone, position});
        ++d.rows_kept;
    }
    if (diag) *diag = d;
    return out;
}

std::map<std::string, double> parse_gate_distances(std::istream& in, ParseDiagnostics* diag) {
    csv::Table table = csv::read_table(in);
    auto idx = csv::require_columns(table, {"gate", "distance_m"});

    ParseDiagnostics d;
    std::map<std::string, double> out;
    for (const auto& row : table.rows) {
        ++d.rows_read;
        if (row.size() != table.header.size()) {
            ++d.rows_skipped;
            continue;
        }
        auto dist = csv::parse_double(row[idx[1]]);
        if (row[idx[0]].empty() || !dist || *dist <= 0.0) {
            ++d.rows_skipped;
            continue;
        }
        out[row[idx[0]]] = *dist;
        ++d.rows_kept;
    }
    if (diag) *diag = d;
    return out;
}

std::vector<WalkObservation> join_gate_to_immigration(
    const std::vector<DeviceObservation>& traces,
    const std::set<std::string>& gate_zones,
    const std::set<std::string>& immigration_zones,
    JoinDiagnostics* diag) {
    for (const auto& z : gate_zones)
        if (immigration_zones.count(z))
            throw ConfigError("zone '" + z + "' is listed as both gate and immigration");

    struct DeviceSpan {
        UtcSeconds last_gate = 0;
        std::string gate_zone;
        bool has_gate = false;
        UtcSeconds first_immigration = 0;
        bool has_immigration = false;
    };
    std::map<std::string, DeviceSpan> spans;
    for (const auto& obs : traces) {
        if (gate_zones.count(obs.zone)) {
            auto& s = spans[obs.device_id];
            // latest gate record wins; ties resolved by zone name for determinism
            if (!s.has_gate || obs.timestamp > s.last_gate ||
                (obs.timestamp == s.last_gate && obs.zone < s.gate_zone)) {
                s.last_gate = obs.timestamp;
                s.gate_zone = obs.zone;
                s.has_gate = true;
            }
        } else if (immigration_zones.count(obs.zone)) {
            auto& s = spans[obs.device_id];
            if (!s.has_immigration || obs.timestamp < s.first_immigration) {
                s.first_immigration = obs.timestamp;
                s.has_immigration = true;
            }
        }
    }

    JoinDiagnostics d;
    std::vector<WalkObservation> out;
    for (const auto& [device, s] : spans) {
        if (s.has_gate) ++d.gate_devices;
        if (s.has_immigration) ++d.immigration_devices;
        if (!s.has_gate || !s.has_immigration) continue;
        const double walk = static_cast<double>(s.first_immigration - s.last_gate);
        if (walk <= 0.0) {
            ++d.nonpositive_dropped;
            continue;
        }
        out.push_back({device, s.gate_zone, s.last_gate, s.first_immigration, walk});
        ++d.matched;
    }
    if (diag) *diag = d;
    return out;
}

FlightOccupancyDistribution estimate_passengers_per_flight(
    const std::vector<StampRecord>& stamps,
    const std::vector<FlightArrival>& flights) {
    if (stamps.empty() || flights.empty())
        throw DataError("passengers-per-flight estimation needs both stamps and flights");

    std::set<std::string> known_flights;
    for (const auto& f : flights) known_flights.insert(f.flight_id);

    bool any_flight_id = false;
    std::map<std::pair<std::string, UtcSeconds>, int> daily_counts;
    for (const auto& s : stamps) {
        if (!s.flight_id) continue;
        any_flight_id = true;
        if (!known_flights.count(*s.flight_id)) continue;
        ++daily_counts[{*s.flight_id, day_start(s.timestamp)}];
    }
    if (!any_flight_id)
        throw DataError("no stamp carries a flight id; occupancy join unusable");
    if (daily_counts.empty())
        throw DataError("no stamp flight id matches the flight schedule");

    FlightOccupancyDistribution dist;
    for (const auto& [key, count] : daily_counts) {
        dist.per_flight[key.first].push_back(count);
        dist.fallback.push_back(count);
    }
    return dist;
}

std::map<UtcSeconds, int> estimate_open_desks(const std::vector<StampRecord>& stamps,
                                              std::int64_t window_seconds) {
    if (window_seconds <= 0) throw ConfigError("open-desk window must be positive");

    std::map<UtcSeconds, std::set<std::string>> desks_per_window;
    for (const auto& s : stamps)
        desks_per_window[bin_floor(s.timestamp, window_seconds)].insert(s.desk_id);

    std::map<UtcSeconds, int> counts;
    for (const auto& [w, desks] : desks_per_window)
        counts[w] = static_cast<int>(desks.size());

    // Fill stamp-free windows inside each day's active span with the day's
    // minimum staffing level.
    std::map<UtcSeconds, std::tuple<UtcSeconds, UtcSeconds, int>> day_span; // first, last, min
    for (const auto& [w, c] : counts) {
        const UtcSeconds day = day_start(w);
        auto it = day_span.find(day);
        if (it == day_span.end()) {
            day_span[day] = {w, w, c};
        } else {
            auto& [first, last, min_c] = it->second;
            first = std::min(first, w);
            last = std::max(last, w);
            min_c = std::min(min_c, c);
        }
    }
    for (const auto& [day, span] : day_span) {
        const auto& [first, last, min_c] = span;
        for (UtcSeconds w = first; w <= last; w += window_seconds)
            counts.emplace(w, min_c); // no-op where a count already exists
    }
    return counts;
}

void write_flights_csv(std::ostream& out, const std::vector<FlightArrival>& flights) {
    out << "flight_id,scheduled_time,actual_time,gate,direction,passenger_count\n";
    for (const auto& f : flights) {
        out << f.flight_id << ',' << format_iso8601_utc(f.scheduled_time) << ','
            << format_iso8601_utc(f.actual_time) << ',' << f.gate << ",arrival,";
        if (f.passenger_count) out << *f.passenger_count;
        out << '\n';
    }
}

void write_stamps_csv(std::ostream& out, const std::vector<StampRecord>& stamps) {
    out << "timestamp,desk_id,flight_id,direction\n";
    for (const auto& s : stamps) {
        out << format_iso8601_utc(s.timestamp) << ',' << s.desk_id << ','
            << (s.flight_id ? *s.flight_id : std::string{}) << ','
            << direction_name(s.direction) << '\n';
    }
}

void write_wifi_csv(std::ostream& out, const std::vector<DeviceObservation>& traces) {
    out << "device_id,timestamp,zone,x,y\n";
    for (const auto& t : traces) {
        out << t.device_id << ',' << format_iso8601_utc(t.timestamp) << ',' << t.zone << ',';
        if (t.position)
            out << csv::format_double(t.position->first) << ','
                << csv::format_double(t.position->second);
        else
            out << ',';
        out << '\n';
    }
}

void write_distances_csv(std::ostream& out, const std::map<std::string, double>& distances) {
    out << "gate,distance_m\n";
    for (const auto& [gate, d] : distances)
        out << gate << ',' << csv::format_double(d) << '\n';
}

void write_walks_csv(std::ostream& out, const std::vector<WalkObservation>& walks) {
    out << "device_id,gate,gate_exit_time,immigration_entry_time,walk_time_s\n";
    for (const auto& w : walks) {
        out << w.device_id << ',' << w.gate << ',' << format_iso8601_utc(w.gate_exit_time)
            << ',' << format_iso8601_utc(w.immigration_entry_time) << ','
            << csv::format_double(w.walk_time_s) << '\n';
    }
}

std::vector<WalkObservation> read_walks_csv(std::istream& in) {
    csv::Table table = csv::read_table(in);
    auto idx = csv::require_columns(
        table, {"device_id", "gate", "gate_exit_time", "immigration_entry_time", "walk_time_s"});
    std::vector<WalkObservation> out;
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) continue;
        auto exit_t = parse_iso8601(row[idx[2]]);
        auto entry_t = parse_iso8601(row[idx[3]]);
        auto walk = csv::parse_double(row[idx[4]]);
        if (!exit_t || !entry_t || !walk || *walk <= 0.0) continue;
        out.push_back({row[idx[0]], row[idx[1]], *exit_t, *entry_t, *walk});
    }
    return out;
}

void write_open_desks_csv(std::ostream& out, const std::map<UtcSeconds, int>& desks) {
    out << "window_start,desk_count\n";
    for (const auto& [w, c] : desks)
        out << format_iso8601_utc(w) << ',' << c << '\n';
}

std::map<UtcSeconds, int> read_open_desks_csv(std::istream& in) {
    csv::Table table = csv::read_table(in);
    auto idx = csv::require_columns(table, {"window_start", "desk_count"});
    std::map<UtcSeconds, int> out;
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) continue;
        auto w = parse_iso8601(row[idx[0]]);
        auto c = csv::parse_int(row[idx[1]]);
        if (!w || !c || *c < 0) continue;
        out[*w] = static_cast<int>(*c);
    }
    return out;
}

} // namespace paxflow::ingest
