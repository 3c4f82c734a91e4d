#pragma once

#include "paxflow/random.hpp"
#include "paxflow/time_utils.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace paxflow::ingest {

enum class Direction { arrival, departure };

// One arriving flight from the flight information display feed. Delay
// (actual - scheduled) may be negative for early arrivals.
struct FlightArrival {
    std::string flight_id;
    UtcSeconds scheduled_time = 0;
    UtcSeconds actual_time = 0; // block time at the gate
    std::string gate;
    std::optional<int> passenger_count;

    double delay_seconds() const {
        return static_cast<double>(actual_time - scheduled_time);
    }
    bool operator==(const FlightArrival&) const = default;
};

// One border-crossing stamp. flight_id is frequently missing in the source
// logs; such records are kept but excluded from flight joins.
struct StampRecord {
    UtcSeconds timestamp = 0;
    std::string desk_id;
    std::optional<std::string> flight_id;
    Direction direction = Direction::arrival;

    bool operator==(const StampRecord&) const = default;
};

// One Wi-Fi positioning sample. A device may be assigned to several zones at
// the same timestamp; ambiguous assignments are preserved as separate rows.
struct DeviceObservation {
    std::string device_id;
    UtcSeconds timestamp = 0;
    std::string zone;
    std::optional<std::pair<double, double>> position;

    bool operator==(const DeviceObservation&) const = default;
};

// A device traced from a gate zone to an immigration zone.
struct WalkObservation {
    std::string device_id;
    std::string gate;
    UtcSeconds gate_exit_time = 0;        // last record in the gate zone
    UtcSeconds immigration_entry_time = 0; // first record at immigration
    double walk_time_s = 0.0;              // always > 0

    bool operator==(const WalkObservation&) const = default;
};

// Empirical passengers-per-flight distribution: daily stamp counts keyed by
// flight id, with a global fallback for flights never seen in the stamps.
struct FlightOccupancyDistribution {
    std::map<std::string, std::vector<int>> per_flight;
    std::vector<int> fallback;

    int sample(const std::string& flight_id, RngStream& rng) const;
};

struct ParseDiagnostics {
    std::size_t rows_read = 0;
    std::size_t rows_kept = 0;
    std::size_t rows_skipped = 0;
    std::size_t filtered_out = 0; // departures (flights) or duplicates (wifi)
};

struct JoinDiagnostics {
    std::size_t gate_devices = 0;        // devices seen in any gate zone
    std::size_t immigration_devices = 0; // devices seen at immigration
    std::size_t matched = 0;
    std::size_t nonpositive_dropped = 0;
};

// flights.csv: flight_id,scheduled_time,actual_time,gate,direction[,passenger_count]
// Keeps arrival rows only; malformed rows are skipped and counted.
std::vector<FlightArrival> parse_flight_schedule(std::istream& in,
                                                 ParseDiagnostics* diag = nullptr);

// stamps.csv: timestamp,desk_id,flight_id,direction — output ordered by timestamp.
std::vector<StampRecord> parse_immigration_stamps(std::istream& in,
                                                  ParseDiagnostics* diag = nullptr);

// wifi.csv: device_id,timestamp,zone[,x,y] — exact duplicate rows dropped,
// multi-zone timestamps preserved.
std::vector<DeviceObservation> parse_wifi_traces(std::istream& in,
                                                 ParseDiagnostics* diag = nullptr);

// distances.csv: gate,distance_m
std::map<std::string, double> parse_gate_distances(std::istream& in,
                                                   ParseDiagnostics* diag = nullptr);

// Walk time per device = first immigration record minus last gate record.
// Devices whose records run the wrong way (walk time <= 0) are dropped and
// counted. Zone sets must be disjoint.
std::vector<WalkObservation> join_gate_to_immigration(
    const std::vector<DeviceObservation>& traces,
    const std::set<std::string>& gate_zones,
    const std::set<std::string>& immigration_zones,
    JoinDiagnostics* diag = nullptr);

// Daily stamp counts per flight id, restricted to flights present in the
// schedule; throws DataError when the join is unusable.
FlightOccupancyDistribution estimate_passengers_per_flight(
    const std::vector<StampRecord>& stamps,
    const std::vector<FlightArrival>& flights);

// Distinct stamping desks per time window. Stamp-free windows inside a day's
// active span get the day's minimum nonzero count.
std::map<UtcSeconds, int> estimate_open_desks(const std::vector<StampRecord>& stamps,
                                              std::int64_t window_seconds);

// Canonical serialization (timestamps rendered as UTC ISO 8601).
void write_flights_csv(std::ostream& out, const std::vector<FlightArrival>& flights);
void write_stamps_csv(std::ostream& out, const std::vector<StampRecord>& stamps);
void write_wifi_csv(std::ostream& out, const std::vector<DeviceObservation>& traces);
void write_distances_csv(std::ostream& out, const std::map<std::string, double>& distances);
void write_walks_csv(std::ostream& out, const std::vector<WalkObservation>& walks);
std::vector<WalkObservation> read_walks_csv(std::istream& in);
void write_open_desks_csv(std::ostream& out, const std::map<UtcSeconds, int>& desks);
std::map<UtcSeconds, int> read_open_desks_csv(std::istream& in);

} // namespace paxflow::ingest
