#pragma once

#include "paxflow/engine.hpp"
#include "paxflow/ingest.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

namespace paxflow::analyze {

// Per-bin queue statistics. Bins are left-closed right-open, aligned to
// midnight; queue_length_end and demand are snapshots at the end of the bin.
struct BinnedQueueStats {
    std::int64_t bin_start = 0;
    std::int64_t bin_width = 900;
    double mean_wait = 0.0;   // seconds, over passengers departing in the bin
    double throughput = 0.0;  // departures in the bin
    int queue_length_end = 0;
    int demand = 0; // passengers in the queue zone at bin end

    bool operator==(const BinnedQueueStats&) const = default;
};

struct BinOptions {
    std::int64_t bin_width = 900;
    bool demand_includes_in_service = true;
};

// Reconstructs the binned series from passenger traces. Bins are contiguous
// from the first queue arrival to the last departure.
std::vector<BinnedQueueStats> bin_statistics(const std::vector<engine::PassengerTrace>& traces,
                                             const BinOptions& options = {});

struct DelaySummary {
    std::map<std::int64_t, double> per_bin_mean_delay_min; // keyed by scheduled-time bin
    double overall_mean_delay_min = 0.0;
    std::size_t flight_count = 0;
};

// Flight delay = actual - scheduled block time, in minutes.
DelaySummary flight_delay_summary(const std::vector<ingest::FlightArrival>& flights,
                                  std::int64_t bin_width = 900);

struct ThroughputDemandCurve {
    struct Point {
        int demand = 0;
        double throughput = 0.0;
        bool operator==(const Point&) const = default;
    };
    std::vector<Point> points; // sorted by demand
    std::optional<int> saturation_demand;
};

// One point per distinct demand level, throughput averaged across all bins
// (and days) observed at that level.
ThroughputDemandCurve throughput_vs_demand(const std::vector<BinnedQueueStats>& stats);

// Smallest demand beyond which every moving-window least-squares slope of the
// curve stays below slope_epsilon; nullopt when the curve never flattens.
std::optional<int> detect_saturation(const ThroughputDemandCurve& curve, int window = 5,
                                     double slope_epsilon = 0.05);

struct ValidationMetrics {
    double mae_wait = 0.0;  // seconds
    double rmse_wait = 0.0; // seconds
    double mae_queue = 0.0; // passengers
    struct Residual {
        std::int64_t bin_start = 0;
        double wait_residual = 0.0; // simulated - actual
        int queue_residual = 0;
    };
    std::vector<Residual> per_bin_residuals;
};

// Error metrics over the bins common to both series (intersected by
// bin_start). Throws AnalysisError when the intersection is empty.
ValidationMetrics validate_against_actual(const std::vector<BinnedQueueStats>& simulated,
                                          const std::vector<BinnedQueueStats>& actual);

// bin_start,queue_length,throughput,mean_wait[,demand]
void write_bins_csv(std::ostream& out, const std::vector<BinnedQueueStats>& stats,
                    bool include_demand = false);
std::vector<BinnedQueueStats> read_bins_csv(std::istream& in);
void write_curve_csv(std::ostream& out, const ThroughputDemandCurve& curve);

} // namespace paxflow::analyze
