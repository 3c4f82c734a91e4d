#include "paxflow/engine.hpp"

#include "paxflow/csv.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

namespace paxflow::engine {

namespace {

StartedService start_service_on(QueueState& state, int slot, int passenger, SimTime t,
                                const ServiceSampler& sampler, RngStream& rng,
                                FutureEventList& fel) {
    if (slot >= state.active_desks || state.in_service.count(slot))
        throw SimulationError("service start on a closed or busy desk");
    const double duration = sampler(t, rng);
    if (!(duration >= 0.0))
        throw SimulationError("service sampler returned a negative or NaN duration");
    fel.schedule(t + duration, EventKind::service_completion, slot);
    state.in_service[slot] = {passenger, t + duration};
    return {passenger, slot, t, duration};
}

} // namespace

int congestion_based_staffing(int queue_length, int current_desks, int upper, int lower,
                              int min_desks, int max_desks) {
    if (lower >= upper)
        throw SimulationError("congestion thresholds must satisfy lower < upper");
    if (queue_length >= upper) return std::min(current_desks + 1, max_desks);
    if (queue_length <= lower) return std::max(current_desks - 1, min_desks);
    return current_desks;
}

ServiceSampler make_service_sampler(const calibrate::ServiceRateModel& model) {
    model.validate();
    return [model](SimTime, RngStream& rng) {
        const double rate = model.sample(rng); // passengers per desk per window
        return rng.exponential(model.window_seconds / rate);
    };
}

std::optional<StartedService> handle_queue_arrival(QueueState& state, int passenger, SimTime t,
                                                   const ServiceSampler& sampler, RngStream& rng,
                                                   FutureEventList& fel) {
    const auto idle = state.idle_desk();
    if (idle && state.waiting.empty())
        return start_service_on(state, *idle, passenger, t, sampler, rng, fel);
    state.waiting.push_back(passenger);
    return std::nullopt;
}

CompletionOutcome handle_service_completion(QueueState& state, int desk, SimTime t,
                                            const ServiceSampler& sampler, RngStream& rng,
                                            FutureEventList& fel) {
    auto it = state.in_service.find(desk);
    if (it == state.in_service.end())
        throw SimulationError("service completion for a desk that is not serving");

    CompletionOutcome out;
    out.departed = it->second.passenger;
    state.in_service.erase(it);

    if (desk >= state.active_desks) {
        out.desk_closed = true; // staffing dropped mid-service: finish, then close
        return out;
    }
    if (!state.waiting.empty()) {
        const int next = state.waiting.front();
        state.waiting.pop_front();
        out.started = start_service_on(state, desk, next, t, sampler, rng, fel);
    }
    return out;
}

std::vector<StartedService> apply_staffing_change(QueueState& state, int new_count, SimTime t,
                                                  const ServiceSampler& sampler, RngStream& rng,
                                                  FutureEventList& fel) {
    if (new_count < 0) throw SimulationError("staffing level must be nonnegative");
    state.active_desks = new_count;
    std::vector<StartedService> started;
    while (!state.waiting.empty()) {
        const auto idle = state.idle_desk();
        if (!idle) break;
        const int next = state.waiting.front();
        state.waiting.pop_front();
        started.push_back(start_service_on(state, *idle, next, t, sampler, rng, fel));
    }
    return started;
}

std::vector<PassengerArrival> generate_passenger_arrivals(
    const ingest::FlightArrival& flight,
    const ingest::FlightOccupancyDistribution& occupancy,
    const calibrate::WalkSpeedModel& walk_model, RngStream& rng) {
    const int n = flight.passenger_count ? *flight.passenger_count
                                         : occupancy.sample(flight.flight_id, rng);
    std::vector<PassengerArrival> out;
    out.reserve(static_cast<std::size_t>(std::max(n, 0)));
    const auto block_time = static_cast<SimTime>(flight.actual_time);
    for (int i = 0; i < n; ++i) {
        const double walk = calibrate::sample_walk_time(walk_model, flight.gate, rng);
        out.push_back({flight.flight_id, flight.gate, block_time, block_time + walk});
    }
    return out;
}

namespace {

class Simulator {
public:
    Simulator(const ServiceSampler& sampler, const StaffingSource& staffing,
              const SimConfig& config)
        : sampler_(sampler), config_(config), rng_(config.seed) {
        if (config.bin_width <= 0) throw ConfigError("bin width must be positive");
        if (config.instability_cap < 1) throw ConfigError("instability cap must be positive");
        if (const auto* schedule = std::get_if<StaffingSchedule>(&staffing)) {
            schedule_ = schedule;
        } else {
            policy_ = std::get<CongestionPolicy>(staffing);
            use_policy_ = true;
        }
    }

    SimulationResult run_with_arrivals(const std::vector<PassengerArrival>& arrivals) {
        for (const auto& a : arrivals) add_passenger(a);
        return run();
    }

    SimulationResult run_with_flights(const std::vector<ingest::FlightArrival>& flights,
                                      const ingest::FlightOccupancyDistribution& occupancy,
                                      const calibrate::WalkSpeedModel& walk_model) {
        flights_ = &flights;
        occupancy_ = &occupancy;
        walk_model_ = &walk_model;
        std::vector<std::size_t> order(flights.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return flights[a].actual_time < flights[b].actual_time;
        });
        for (std::size_t i : order)
            fel_.schedule(static_cast<SimTime>(flights[i].actual_time),
                          EventKind::flight_arrival, static_cast<int>(i));
        return run();
    }

private:
    struct Pax {
        std::string flight_id;
        std::string gate;
        SimTime gate_time = 0.0;
        SimTime queue_arrival = 0.0;
        SimTime service_start = -1.0;
        SimTime departure = -1.0;
    };

    void add_passenger(const PassengerArrival& a) {
        const int id = static_cast<int>(pax_.size());
        pax_.push_back({a.flight_id, a.gate, a.gate_time, a.queue_arrival, -1.0, -1.0});
        fel_.schedule(a.queue_arrival, EventKind::passenger_queue_arrival, id);
    }

    void init_staffing(SimTime t0) {
        if (use_policy_) {
            state_.active_desks =
                std::clamp(policy_.initial_desks, policy_.min_desks, policy_.max_desks);
            return;
        }
        schedule_->validate();
        if (!schedule_->covers(t0))
            throw SimulationError("staffing schedule does not cover the simulation horizon");
        state_.active_desks = schedule_->count_at(t0);
        for (const auto& [time, count] : schedule_->breakpoints)
            if (time > t0) fel_.schedule(time, EventKind::staffing_change, count);
    }

    void record_start(const StartedService& s) {
        pax_[static_cast<std::size_t>(s.passenger)].service_start = s.start;
    }

    void policy_review(SimTime t) {
        if (!use_policy_) return;
        const int next = congestion_based_staffing(
            static_cast<int>(state_.waiting.size()), state_.active_desks, policy_.upper,
            policy_.lower, policy_.min_desks, policy_.max_desks);
        if (next == state_.active_desks) return;
        for (const auto& s : apply_staffing_change(state_, next, t, sampler_, rng_, fel_))
            record_start(s);
    }

    void check_invariants(std::size_t arrived, std::size_t departed) const {
        if (!state_.waiting.empty() && state_.idle_desk())
            throw SimulationError("invariant breach: idle desk while passengers wait");
        if (state_.waiting.size() + state_.in_service.size() != arrived - departed)
            throw SimulationError("invariant breach: passenger conservation");
        for (const auto& [slot, svc] : state_.in_service)
            if (slot < 0) throw SimulationError("invariant breach: negative desk slot");
    }

    SimulationResult run() {
        SimulationResult result;
        if (fel_.empty()) return result;

        init_staffing(fel_.peek_time());

        const auto width = static_cast<double>(config_.bin_width);
        double next_bin = 0.0;
        bool have_bin = false;
        SimTime last_time = 0.0;
        bool have_time = false;
        std::size_t arrived = 0, departed = 0;
        auto& diag = result.diagnostics;

        while (!fel_.empty()) {
            const SimTime t_next = fel_.peek_time();
            if (!have_bin) {
                next_bin = std::floor(t_next / width) * width + width;
                have_bin = true;
            }
            // end-of-bin snapshots for every boundary before this event
            while (next_bin <= t_next) {
                const auto bin_start = static_cast<std::int64_t>(std::llround(next_bin - width));
                result.queue_length_series[bin_start] = static_cast<int>(state_.waiting.size());
                result.demand_series[bin_start] =
                    static_cast<int>(state_.waiting.size() + state_.in_service.size());
                next_bin += width;
            }

            const EventNotice ev = fel_.pop();
            if (have_time) {
                diag.queue_area +=
                    static_cast<double>(state_.waiting.size()) * (ev.time - last_time);
            } else {
                diag.first_event = ev.time;
            }
            last_time = ev.time;
            have_time = true;
            ++diag.events_processed;

            switch (ev.kind) {
                case EventKind::flight_arrival: {
                    const auto& flight = (*flights_)[static_cast<std::size_t>(ev.payload)];
                    for (const auto& a :
                         generate_passenger_arrivals(flight, *occupancy_, *walk_model_, rng_))
                        add_passenger(a);
                    break;
                }
                case EventKind::passenger_queue_arrival: {
                    ++arrived;
                    if (auto started =
                            handle_queue_arrival(state_, ev.payload, ev.time, sampler_, rng_, fel_))
                        record_start(*started);
                    diag.max_queue =
                        std::max(diag.max_queue, static_cast<int>(state_.waiting.size()));
                    policy_review(ev.time);
                    break;
                }
                case EventKind::service_completion: {
                    const auto outcome =
                        handle_service_completion(state_, ev.payload, ev.time, sampler_, rng_, fel_);
                    pax_[static_cast<std::size_t>(outcome.departed)].departure = ev.time;
                    ++departed;
                    if (outcome.started) record_start(*outcome.started);
                    policy_review(ev.time);
                    break;
                }
                case EventKind::staffing_change: {
                    for (const auto& s :
                         apply_staffing_change(state_, ev.payload, ev.time, sampler_, rng_, fel_))
                        record_start(s);
                    break;
                }
            }

            if (config_.validate_invariants) check_invariants(arrived, departed);
            if (static_cast<int>(state_.waiting.size()) > config_.instability_cap) {
                diag.unstable = true;
                break;
            }
        }

        diag.last_event = last_time;
        diag.passengers_generated = pax_.size();
        result.traces.reserve(pax_.size());
        for (std::size_t i = 0; i < pax_.size(); ++i) {
            const Pax& p = pax_[i];
            if (p.departure < 0.0) {
                ++diag.unserved;
                continue;
            }
            result.traces.push_back({static_cast<int>(i), p.flight_id, p.gate, p.gate_time,
                                     p.queue_arrival, p.service_start, p.departure});
        }
        return result;
    }

    const ServiceSampler& sampler_;
    const SimConfig& config_;
    RngStream rng_;
    FutureEventList fel_;
    QueueState state_;
    std::vector<Pax> pax_;

    const StaffingSchedule* schedule_ = nullptr;
    CongestionPolicy policy_;
    bool use_policy_ = false;

    const std::vector<ingest::FlightArrival>* flights_ = nullptr;
    const ingest::FlightOccupancyDistribution* occupancy_ = nullptr;
    const calibrate::WalkSpeedModel* walk_model_ = nullptr;
};

} // namespace

SimulationResult run_queue_simulation(const std::vector<PassengerArrival>& arrivals,
                                      const ServiceSampler& sampler,
                                      const StaffingSource& staffing, const SimConfig& config) {
    return Simulator(sampler, staffing, config).run_with_arrivals(arrivals);
}

SimulationResult simulate_day(const std::vector<ingest::FlightArrival>& flights,
                              const ingest::FlightOccupancyDistribution& occupancy,
                              const calibrate::WalkSpeedModel& walk_model,
                              const calibrate::ServiceRateModel& service_model,
                              const StaffingSource& staffing, const SimConfig& config) {
    if (flights.empty()) throw SimulationError("simulate_day needs at least one flight");
    const ServiceSampler sampler = make_service_sampler(service_model);
    return Simulator(sampler, staffing, config).run_with_flights(flights, occupancy, walk_model);
}

void write_traces_csv(std::ostream& out, const std::vector<PassengerTrace>& traces) {
    out << "passenger_id,flight_id,gate,gate_time,queue_arrival,service_start,departure\n";
    for (const auto& t : traces) {
        out << t.passenger_id << ',' << t.flight_id << ',' << t.gate << ','
            << csv::format_double(t.gate_time) << ',' << csv::format_double(t.queue_arrival)
            << ',' << csv::format_double(t.service_start) << ','
            << csv::format_double(t.departure) << '\n';
    }
}

std::vector<PassengerTrace> read_traces_csv(std::istream& in) {
    csv::Table table = csv::read_table(in);
    auto idx = csv::require_columns(table, {"passenger_id", "flight_id", "gate", "gate_time",
                                            "queue_arrival", "service_start", "departure"});
    std::vector<PassengerTrace> out;
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) continue;
        auto id = csv::parse_int(row[idx[0]]);
        auto gate_time = csv::parse_double(row[idx[3]]);
        auto queue_arrival = csv::parse_double(row[idx[4]]);
        auto service_start = csv::parse_double(row[idx[5]]);
        auto departure = csv::parse_double(row[idx[6]]);
        if (!id || !gate_time || !queue_arrival || !service_start || !departure) continue;
        out.push_back({static_cast<int>(*id), row[idx[1]], row[idx[2]], *gate_time,
                       *queue_arrival, *service_start, *departure});
    }
    return out;
}

} // namespace paxflow::engine
