#include "paxflow/analyze.hpp"

#include "paxflow/csv.hpp"
#include "paxflow/errors.hpp"
#include "paxflow/time_utils.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace paxflow::analyze {

namespace {

// Number of values in `sorted` strictly below x.
std::size_t count_below(const std::vector<double>& sorted, double x) {
    return static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin());
}

} // namespace

std::vector<BinnedQueueStats> bin_statistics(const std::vector<engine::PassengerTrace>& traces,
                                             const BinOptions& options) {
    if (options.bin_width <= 0) throw AnalysisError("bin width must be positive");
    std::vector<BinnedQueueStats> out;
    if (traces.empty()) return out;

    const auto width = static_cast<double>(options.bin_width);
    std::vector<double> arrivals, starts, departures;
    arrivals.reserve(traces.size());
    starts.reserve(traces.size());
    departures.reserve(traces.size());
    double t_min = traces.front().queue_arrival, t_max = traces.front().departure;
    for (const auto& t : traces) {
        arrivals.push_back(t.queue_arrival);
        starts.push_back(t.service_start);
        departures.push_back(t.departure);
        t_min = std::min(t_min, t.queue_arrival);
        t_max = std::max(t_max, t.departure);
    }
    std::sort(arrivals.begin(), arrivals.end());
    std::sort(starts.begin(), starts.end());
    std::sort(departures.begin(), departures.end());

    const auto first_bin = static_cast<std::int64_t>(std::floor(t_min / width)) * options.bin_width;
    const auto last_bin = static_cast<std::int64_t>(std::floor(t_max / width)) * options.bin_width;

    // per-bin wait sums over departing passengers
    std::map<std::int64_t, std::pair<double, std::size_t>> waits;
    for (const auto& t : traces) {
        auto key = static_cast<std::int64_t>(std::floor(t.departure / width)) * options.bin_width;
        auto& [sum, n] = waits[key];
        sum += t.wait();
        ++n;
    }

    for (std::int64_t bin = first_bin; bin <= last_bin; bin += options.bin_width) {
        BinnedQueueStats s;
        s.bin_start = bin;
        s.bin_width = options.bin_width;
        const auto bin_end = static_cast<double>(bin + options.bin_width);

        auto it = waits.find(bin);
        if (it != waits.end()) {
            s.throughput = static_cast<double>(it->second.second);
            s.mean_wait = it->second.first / static_cast<double>(it->second.second);
        }
        // snapshot at bin end: arrived strictly before, not yet started/departed
        const auto arrived = count_below(arrivals, bin_end);
        s.queue_length_end = static_cast<int>(arrived - count_below(starts, bin_end));
        s.demand = options.demand_includes_in_service
                       ? static_cast<int>(arrived - count_below(departures, bin_end))
                       : s.queue_length_end;
        out.push_back(s);
    }
    return out;
}

DelaySummary flight_delay_summary(const std::vector<ingest::FlightArrival>& flights,
                                  std::int64_t bin_width) {
    if (flights.empty()) throw AnalysisError("flight delay summary needs at least one flight");
    if (bin_width <= 0) throw AnalysisError("bin width must be positive");

    DelaySummary summary;
    std::map<std::int64_t, std::pair<double, std::size_t>> bins;
    double total = 0.0;
    for (const auto& f : flights) {
        const double delay_min = f.delay_seconds() / 60.0;
        total += delay_min;
        auto& [sum, n] = bins[bin_floor(f.scheduled_time, bin_width)];
        sum += delay_min;
        ++n;
    }
    for (const auto& [bin, acc] : bins)
        summary.per_bin_mean_delay_min[bin] = acc.first / static_cast<double>(acc.second);
    summary.overall_mean_delay_min = total / static_cast<double>(flights.size());
    summary.flight_count = flights.size();
    return summary;
}

ThroughputDemandCurve throughput_vs_demand(const std::vector<BinnedQueueStats>& stats) {
    if (stats.empty()) throw AnalysisError("throughput-demand curve needs at least one bin");
    std::map<int, std::pair<double, std::size_t>> by_demand;
    for (const auto& s : stats) {
        auto& [sum, n] = by_demand[s.demand];
        sum += s.throughput;
        ++n;
    }
    ThroughputDemandCurve curve;
    for (const auto& [demand, acc] : by_demand)
        curve.points.push_back({demand, acc.first / static_cast<double>(acc.second)});
    return curve;
}

std::optional<int> detect_saturation(const ThroughputDemandCurve& curve, int window,
                                     double slope_epsilon) {
    const auto n = curve.points.size();
    if (window < 2) throw AnalysisError("saturation window must be at least 2 points");
    if (n < 2 * static_cast<std::size_t>(window))
        throw AnalysisError("saturation detection needs at least 2*window points");

    const std::size_t w = static_cast<std::size_t>(window);
    const std::size_t n_windows = n - w + 1;
    std::vector<bool> flat(n_windows);
    for (std::size_t i = 0; i < n_windows; ++i) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (std::size_t j = i; j < i + w; ++j) {
            const double x = curve.points[j].demand;
            const double y = curve.points[j].throughput;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double wd = static_cast<double>(w);
        const double denom = wd * sxx - sx * sx;
        const double slope = denom != 0.0 ? (wd * sxy - sx * sy) / denom : 0.0;
        flat[i] = slope < slope_epsilon;
    }

    // smallest start index whose windows are flat from there on
    std::optional<std::size_t> first;
    for (std::size_t i = n_windows; i-- > 0;) {
        if (!flat[i]) break;
        first = i;
    }
    if (!first) return std::nullopt;
    return curve.points[*first].demand;
}

ValidationMetrics validate_against_actual(const std::vector<BinnedQueueStats>& simulated,
                                          const std::vector<BinnedQueueStats>& actual) {
    std::map<std::int64_t, const BinnedQueueStats*> actual_by_bin;
    for (const auto& a : actual) actual_by_bin[a.bin_start] = &a;

    ValidationMetrics m;
    double abs_wait = 0.0, sq_wait = 0.0, abs_queue = 0.0;
    for (const auto& s : simulated) {
        auto it = actual_by_bin.find(s.bin_start);
        if (it == actual_by_bin.end()) continue;
        const double dw = s.mean_wait - it->second->mean_wait;
        const int dq = s.queue_length_end - it->second->queue_length_end;
        abs_wait += std::abs(dw);
        sq_wait += dw * dw;
        abs_queue += std::abs(dq);
        m.per_bin_residuals.push_back({s.bin_start, dw, dq});
    }
    if (m.per_bin_residuals.empty())
        throw AnalysisError("no common bins between simulated and actual series");
    const auto n = static_cast<double>(m.per_bin_residuals.size());
    m.mae_wait = abs_wait / n;
    m.rmse_wait = std::sqrt(sq_wait / n);
    m.mae_queue = abs_queue / n;
    return m;
}

void write_bins_csv(std::ostream& out, const std::vector<BinnedQueueStats>& stats,
                    bool include_demand) {
    out << "bin_start,queue_length,throughput,mean_wait";
    if (include_demand) out << ",demand";
    out << '\n';
    for (const auto& s : stats) {
        out << format_iso8601_utc(s.bin_start) << ',' << s.queue_length_end << ','
            << csv::format_double(s.throughput) << ',' << csv::format_double(s.mean_wait);
        if (include_demand) out << ',' << s.demand;
        out << '\n';
    }
}

std::vector<BinnedQueueStats> read_bins_csv(std::istream& in) {
    csv::Table table = csv::read_table(in);
    auto idx = csv::require_columns(table, {"bin_start", "queue_length", "throughput", "mean_wait"});
    auto demand_col = csv::find_column(table, "demand");
    std::vector<BinnedQueueStats> out;
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) continue;
        auto bin = parse_iso8601(row[idx[0]]);
        auto queue = csv::parse_int(row[idx[1]]);
        auto throughput = csv::parse_double(row[idx[2]]);
        auto wait = csv::parse_double(row[idx[3]]);
        if (!bin || !queue || !throughput || !wait) continue;
        BinnedQueueStats s;
        s.bin_start = *bin;
        s.queue_length_end = static_cast<int>(*queue);
        s.throughput = *throughput;
        s.mean_wait = *wait;
        if (demand_col) {
            auto demand = csv::parse_int(row[*demand_col]);
            s.demand = demand ? static_cast<int>(*demand) : s.queue_length_end;
        } else {
            s.demand = s.queue_length_end;
        }
        out.push_back(s);
    }
    // infer bin width from consecutive starts when possible
    if (out.size() >= 2) {
        const auto width = out[1].bin_start - out[0].bin_start;
        if (width > 0)
            for (auto& s : out) s.bin_width = width;
    }
    return out;
}

void write_curve_csv(std::ostream& out, const ThroughputDemandCurve& curve) {
    out << "demand,throughput\n";
    for (const auto& p : curve.points)
        out << p.demand << ',' << csv::format_double(p.throughput) << '\n';
}

} // namespace paxflow::analyze
