#pragma once

#include "paxflow/calibrate.hpp"
#include "paxflow/errors.hpp"
#include "paxflow/ingest.hpp"
#include "paxflow/random.hpp"
#include "paxflow/staffing.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <variant>
#include <vector>

namespace paxflow::engine {

using SimTime = double; // seconds on the same epoch as UtcSeconds

enum class EventKind {
    flight_arrival,
    passenger_queue_arrival,
    service_completion,
    staffing_change,
};

struct EventNotice {
    SimTime time = 0.0;
    EventKind kind = EventKind::flight_arrival;
    int payload = 0; // flight index, passenger id, desk slot, or desk count
    std::uint64_t sequence = 0;
};

// Min-heap of event notices ordered by (time, insertion sequence), so
// simultaneous events replay in the order they were scheduled.
class FutureEventList {
public:
    void schedule(SimTime time, EventKind kind, int payload) {
        if (time < clock_)
            throw SimulationError("event scheduled in the past (causality violation)");
        heap_.push(EventNotice{time, kind, payload, next_sequence_++});
    }

    EventNotice pop() {
        EventNotice notice = heap_.top();
        heap_.pop();
        clock_ = notice.time;
        return notice;
    }

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    SimTime clock() const { return clock_; }
    SimTime peek_time() const { return heap_.top().time; }

private:
    struct Later {
        bool operator()(const EventNotice& a, const EventNotice& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.sequence > b.sequence;
        }
    };
    std::priority_queue<EventNotice, std::vector<EventNotice>, Later> heap_;
    std::uint64_t next_sequence_ = 0;
    SimTime clock_ = -std::numeric_limits<double>::infinity();
};

// Threshold staffing control: open one more desk when the queue reaches
// `upper`, close one when it falls to `lower`.
struct CongestionPolicy {
    int upper = 280;
    int lower = 5;
    int min_desks = 1;
    int max_desks = 40;
    int initial_desks = 1;
};

int congestion_based_staffing(int queue_length, int current_desks, int upper, int lower,
                              int min_desks, int max_desks);

using StaffingSource = std::variant<StaffingSchedule, CongestionPolicy>;

// Service duration (seconds) for a passenger starting service at time t.
using ServiceSampler = std::function<double(SimTime t, RngStream& rng)>;

// Exponential durations with mean = window / per-desk-rate draw, the rate
// redrawn per passenger.
ServiceSampler make_service_sampler(const calibrate::ServiceRateModel& model);

struct DeskService {
    int passenger = 0;
    SimTime completion = 0.0;
};

// Mutable state of the immigration service node. Desk slots are numbered from
// zero; a slot may only pick up new work while its index is below
// active_desks, so slots stranded above the level by a staffing decrease
// finish their current passenger and close.
struct QueueState {
    std::deque<int> waiting;             // passenger ids, FCFS order
    std::map<int, DeskService> in_service; // desk slot -> current service
    int active_desks = 0;

    std::optional<int> idle_desk() const {
        for (int slot = 0; slot < active_desks; ++slot)
            if (!in_service.count(slot)) return slot;
        return std::nullopt;
    }
};

struct StartedService {
    int passenger = 0;
    int desk = 0;
    SimTime start = 0.0;
    double duration = 0.0;
};

// Arrival at the queue: start service immediately when a desk is idle and
// nobody is waiting, otherwise join the tail.
std::optional<StartedService> handle_queue_arrival(QueueState& state, int passenger, SimTime t,
                                                   const ServiceSampler& sampler, RngStream& rng,
                                                   FutureEventList& fel);

struct CompletionOutcome {
    int departed = 0;
    std::optional<StartedService> started; // head of queue, if one was pulled
    bool desk_closed = false;              // staffing dropped below this slot
};

CompletionOutcome handle_service_completion(QueueState& state, int desk, SimTime t,
                                            const ServiceSampler& sampler, RngStream& rng,
                                            FutureEventList& fel);

// Staffing increase pulls waiting passengers onto the new desks immediately;
// a decrease lets excess busy desks finish their current passenger.
std::vector<StartedService> apply_staffing_change(QueueState& state, int new_count, SimTime t,
                                                  const ServiceSampler& sampler, RngStream& rng,
                                                  FutureEventList& fel);

struct PassengerTrace {
    int passenger_id = 0;
    std::string flight_id;
    std::string gate;
    SimTime gate_time = 0.0;
    SimTime queue_arrival = 0.0;
    SimTime service_start = 0.0;
    SimTime departure = 0.0;

    double wait() const { return service_start - queue_arrival; }
    double sojourn() const { return departure - queue_arrival; }
    bool operator==(const PassengerTrace&) const = default;
};

// A passenger already materialized from a flight and walk draw.
struct PassengerArrival {
    std::string flight_id;
    std::string gate;
    SimTime gate_time = 0.0;
    SimTime queue_arrival = 0.0;
};

struct SimDiagnostics {
    bool unstable = false;
    int max_queue = 0;
    std::uint64_t events_processed = 0;
    std::size_t passengers_generated = 0;
    std::size_t unserved = 0;
    double queue_area = 0.0; // integral of queue length over time
    SimTime first_event = 0.0;
    SimTime last_event = 0.0;

    bool operator==(const SimDiagnostics&) const = default;
};

struct SimulationResult {
    std::vector<PassengerTrace> traces; // served passengers only
    std::map<std::int64_t, int> queue_length_series; // bin start -> length at bin end
    std::map<std::int64_t, int> demand_series;       // waiting + in service at bin end
    SimDiagnostics diagnostics;

    bool operator==(const SimulationResult&) const = default;
};

struct SimConfig {
    int instability_cap = 100000;
    std::uint64_t seed = 0;
    std::int64_t bin_width = 900;
    bool validate_invariants = false; // throw on any internal invariant breach
};

// Passengers for one flight: headcount from the flight record or an occupancy
// draw, arrival time = block time + walk-time draw.
std::vector<PassengerArrival> generate_passenger_arrivals(
    const ingest::FlightArrival& flight,
    const ingest::FlightOccupancyDistribution& occupancy,
    const calibrate::WalkSpeedModel& walk_model, RngStream& rng);

// Core queue simulation over a fixed arrival list.
SimulationResult run_queue_simulation(const std::vector<PassengerArrival>& arrivals,
                                      const ServiceSampler& sampler,
                                      const StaffingSource& staffing, const SimConfig& config);

// Full day: flight arrivals -> per-passenger walks -> FCFS immigration queue.
SimulationResult simulate_day(const std::vector<ingest::FlightArrival>& flights,
                              const ingest::FlightOccupancyDistribution& occupancy,
                              const calibrate::WalkSpeedModel& walk_model,
                              const calibrate::ServiceRateModel& service_model,
                              const StaffingSource& staffing, const SimConfig& config);

void write_traces_csv(std::ostream& out, const std::vector<PassengerTrace>& traces);
std::vector<PassengerTrace> read_traces_csv(std::istream& in);

} // namespace paxflow::engine
