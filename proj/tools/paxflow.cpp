// paxflow: passenger-flow pipeline for an airport immigration hall.
//
//   paxflow ingest    parse and clean the flight/stamp/wifi logs
//   paxflow calibrate fit the walk-speed mixture and per-desk service rates
//   paxflow simulate  run the day-by-day queue simulation
//   paxflow analyze   binned statistics, delay summary, saturation, validation
//   paxflow all       the four stages in sequence
//
// Stage failures use distinct exit codes: 2 ingest, 3 calibrate, 4 simulate,
// 5 analyze. Identical inputs and seed produce byte-identical output trees.

#include "paxflow/analyze.hpp"
#include "paxflow/calibrate.hpp"
#include "paxflow/csv.hpp"
#include "paxflow/engine.hpp"
#include "paxflow/errors.hpp"
#include "paxflow/ingest.hpp"
#include "paxflow/time_utils.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace paxflow;

namespace {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("PAXFLOW_LOG");
    if (!env) return LogLevel::info;
    const std::string v(env);
    if (v == "quiet" || v == "0") return LogLevel::quiet;
    if (v == "debug" || v == "2") return LogLevel::debug;
    return LogLevel::info;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) std::cerr << "[paxflow] " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::debug) std::cerr << "[paxflow] " << msg << "\n";
}

struct RunConfig {
    fs::path flights_path;
    fs::path stamps_path;
    fs::path wifi_path;
    fs::path distances_path;

    std::set<std::string> gate_zones;
    std::set<std::string> immigration_zones;

    std::optional<UtcSeconds> date_start;
    std::optional<UtcSeconds> date_end; // exclusive

    std::string staffing_mode = "derived"; // file | derived | policy
    fs::path staffing_file;
    engine::CongestionPolicy policy;

    std::string service_filter = "top_k_days"; // top_k_days | min_wait
    int top_k_days = 10;
    double min_wait_s = 900.0;
    bool hourly_max = false;

    int saturation_window = 5;
    double slope_epsilon = 0.05;
    bool demand_includes_in_service = true;
    fs::path actual_bins_path;

    std::uint64_t seed = 0;
    std::int64_t bin_width_s = 900;
    int instability_cap = 100000;
    int max_components = 8;
    fs::path out_dir = "out";
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> bin_width;
    std::optional<std::string> out;
    std::optional<std::string> staffing_mode;
    std::optional<int> upper;
    std::optional<int> lower;
};

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

RunConfig load_config(const fs::path& config_path, const Overrides& overrides) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file: " + config_path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }

    const fs::path base = config_path.parent_path();
    RunConfig cfg;

    const auto& inputs = j.at("inputs");
    cfg.flights_path = resolve(base, inputs.at("flights").get<std::string>());
    cfg.stamps_path = resolve(base, inputs.at("stamps").get<std::string>());
    cfg.wifi_path = resolve(base, inputs.at("wifi").get<std::string>());
    cfg.distances_path = resolve(base, inputs.at("distances").get<std::string>());

    if (j.contains("zones")) {
        for (const auto& z : j["zones"].value("gates", json::array()))
            cfg.gate_zones.insert(z.get<std::string>());
        for (const auto& z : j["zones"].value("immigration", json::array()))
            cfg.immigration_zones.insert(z.get<std::string>());
    }

    if (j.contains("dates")) {
        if (j["dates"].contains("start")) {
            auto t = parse_date(j["dates"]["start"].get<std::string>());
            if (!t) throw ConfigError("bad dates.start (expected YYYY-MM-DD)");
            cfg.date_start = *t;
        }
        if (j["dates"].contains("end")) {
            auto t = parse_date(j["dates"]["end"].get<std::string>());
            if (!t) throw ConfigError("bad dates.end (expected YYYY-MM-DD)");
            cfg.date_end = *t;
        }
    }

    if (j.contains("staffing")) {
        const auto& s = j["staffing"];
        cfg.staffing_mode = s.value("mode", cfg.staffing_mode);
        cfg.staffing_file = resolve(base, s.value("file", std::string{}));
        cfg.policy.upper = s.value("upper", cfg.policy.upper);
        cfg.policy.lower = s.value("lower", cfg.policy.lower);
        cfg.policy.min_desks = s.value("min_desks", cfg.policy.min_desks);
        cfg.policy.max_desks = s.value("max_desks", cfg.policy.max_desks);
        cfg.policy.initial_desks = s.value("initial_desks", cfg.policy.initial_desks);
    }

    if (j.contains("service")) {
        const auto& s = j["service"];
        cfg.service_filter = s.value("filter", cfg.service_filter);
        cfg.top_k_days = s.value("top_k_days", cfg.top_k_days);
        cfg.min_wait_s = s.value("min_wait_s", cfg.min_wait_s);
        cfg.hourly_max = s.value("hourly_max", cfg.hourly_max);
    }

    if (j.contains("analysis")) {
        const auto& a = j["analysis"];
        cfg.saturation_window = a.value("saturation_window", cfg.saturation_window);
        cfg.slope_epsilon = a.value("slope_epsilon", cfg.slope_epsilon);
        cfg.demand_includes_in_service =
            a.value("demand_includes_in_service", cfg.demand_includes_in_service);
        cfg.actual_bins_path = resolve(base, a.value("actual_bins", std::string{}));
    }

    cfg.seed = j.value("seed", cfg.seed);
    cfg.bin_width_s = j.value("bin_width_s", cfg.bin_width_s);
    cfg.instability_cap = j.value("instability_cap", cfg.instability_cap);
    cfg.max_components = j.value("max_components", cfg.max_components);
    cfg.out_dir = j.value("out", cfg.out_dir.string());

    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.bin_width) cfg.bin_width_s = *overrides.bin_width;
    if (overrides.out) cfg.out_dir = *overrides.out;
    if (overrides.staffing_mode) cfg.staffing_mode = *overrides.staffing_mode;
    if (overrides.upper) cfg.policy.upper = *overrides.upper;
    if (overrides.lower) cfg.policy.lower = *overrides.lower;

    if (cfg.staffing_mode != "file" && cfg.staffing_mode != "derived" &&
        cfg.staffing_mode != "policy")
        throw ConfigError("staffing mode must be file, derived, or policy");
    if (cfg.bin_width_s <= 0) throw ConfigError("bin_width_s must be positive");
    return cfg;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << content;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    return in;
}

// Days with zero records between the first and last observed day.
std::vector<std::string> missing_days(const std::set<UtcSeconds>& present) {
    std::vector<std::string> out;
    if (present.size() < 2) return out;
    for (UtcSeconds d = *present.begin(); d < *present.rbegin(); d += kSecondsPerDay)
        if (!present.count(d)) out.push_back(format_date(d));
    return out;
}

json diagnostics_json(const ingest::ParseDiagnostics& d) {
    return {{"rows_read", d.rows_read},
            {"rows_kept", d.rows_kept},
            {"rows_skipped", d.rows_skipped},
            {"filtered_out", d.filtered_out}};
}

std::string occupancy_to_json(const ingest::FlightOccupancyDistribution& dist) {
    json j;
    j["per_flight"] = json::object();
    for (const auto& [fid, counts] : dist.per_flight) j["per_flight"][fid] = counts;
    j["fallback"] = dist.fallback;
    return j.dump(2) + "\n";
}

ingest::FlightOccupancyDistribution occupancy_from_json(const std::string& text) {
    json j = json::parse(text);
    ingest::FlightOccupancyDistribution dist;
    for (const auto& [fid, counts] : j.at("per_flight").items())
        dist.per_flight[fid] = counts.get<std::vector<int>>();
    dist.fallback = j.at("fallback").get<std::vector<int>>();
    return dist;
}

engine::StaffingSchedule parse_staffing_csv(std::istream& in) {
    csv::Table table = csv::read_table(in);
    auto idx = csv::require_columns(table, {"start_time", "desk_count"});
    engine::StaffingSchedule schedule;
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) continue;
        auto t = parse_iso8601(row[idx[0]]);
        auto c = csv::parse_int(row[idx[1]]);
        if (!t || !c || *c < 0) continue;
        schedule.breakpoints.emplace_back(static_cast<double>(*t), static_cast<int>(*c));
    }
    schedule.validate();
    return schedule;
}

std::map<UtcSeconds, double> wait_estimates_from_bins(const fs::path& path) {
    auto in = open_input(path);
    std::map<UtcSeconds, double> out;
    for (const auto& b : analyze::read_bins_csv(in)) out[b.bin_start] = b.mean_wait;
    return out;
}

// --- stages -------------------------------------------------------------------

int cmd_ingest(const RunConfig& cfg) {
    for (const fs::path& p :
         {cfg.flights_path, cfg.stamps_path, cfg.wifi_path, cfg.distances_path})
        if (!fs::exists(p)) {
            std::cerr << "paxflow ingest: missing input file: " << p << "\n";
            return 2;
        }

    try {
        ingest::ParseDiagnostics flights_diag, stamps_diag, wifi_diag, distances_diag;
        auto flights_in = open_input(cfg.flights_path);
        auto flights = ingest::parse_flight_schedule(flights_in, &flights_diag);
        auto stamps_in = open_input(cfg.stamps_path);
        auto stamps = ingest::parse_immigration_stamps(stamps_in, &stamps_diag);
        auto wifi_in = open_input(cfg.wifi_path);
        auto wifi = ingest::parse_wifi_traces(wifi_in, &wifi_diag);
        auto distances_in = open_input(cfg.distances_path);
        auto distances = ingest::parse_gate_distances(distances_in, &distances_diag);

        ingest::JoinDiagnostics join_diag;
        auto walks = ingest::join_gate_to_immigration(wifi, cfg.gate_zones,
                                                      cfg.immigration_zones, &join_diag);
        auto occupancy = ingest::estimate_passengers_per_flight(stamps, flights);
        auto open_desks = ingest::estimate_open_desks(stamps, cfg.bin_width_s);

        const fs::path dir = cfg.out_dir / "ingest";
        fs::create_directories(dir);
        std::ostringstream buf;
        ingest::write_flights_csv(buf, flights);
        write_text(dir / "flights.csv", buf.str());
        buf.str({});
        ingest::write_stamps_csv(buf, stamps);
        write_text(dir / "stamps.csv", buf.str());
        buf.str({});
        ingest::write_walks_csv(buf, walks);
        write_text(dir / "walks.csv", buf.str());
        buf.str({});
        ingest::write_distances_csv(buf, distances);
        write_text(dir / "distances.csv", buf.str());
        buf.str({});
        ingest::write_open_desks_csv(buf, open_desks);
        write_text(dir / "open_desks.csv", buf.str());
        write_text(dir / "occupancy.json", occupancy_to_json(occupancy));

        std::set<UtcSeconds> flight_days, stamp_days, wifi_days;
        for (const auto& f : flights) flight_days.insert(day_start(f.actual_time));
        for (const auto& s : stamps) stamp_days.insert(day_start(s.timestamp));
        for (const auto& w : wifi) wifi_days.insert(day_start(w.timestamp));

        json report;
        report["flights"] = diagnostics_json(flights_diag);
        report["stamps"] = diagnostics_json(stamps_diag);
        report["wifi"] = diagnostics_json(wifi_diag);
        report["distances"] = diagnostics_json(distances_diag);
        report["join"] = {{"gate_devices", join_diag.gate_devices},
                          {"immigration_devices", join_diag.immigration_devices},
                          {"matched", join_diag.matched},
                          {"nonpositive_dropped", join_diag.nonpositive_dropped}};
        report["missing_days"] = {{"flights", missing_days(flight_days)},
                                  {"stamps", missing_days(stamp_days)},
                                  {"wifi", missing_days(wifi_days)}};
        write_text(dir / "diagnostics.json", report.dump(2) + "\n");

        log_info("ingest: " + std::to_string(flights.size()) + " flights, " +
                 std::to_string(stamps.size()) + " stamps, " + std::to_string(walks.size()) +
                 " walk observations");
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "paxflow ingest: " << e.what() << "\n";
        return 2;
    }
}

int cmd_calibrate(const RunConfig& cfg) {
    const fs::path bundle = cfg.out_dir / "ingest";
    try {
        for (const char* name : {"walks.csv", "distances.csv", "stamps.csv", "open_desks.csv"})
            if (!fs::exists(bundle / name))
                throw CalibrationError("ingest bundle is missing " + (bundle / name).string());

        auto walks_in = open_input(bundle / "walks.csv");
        auto walks = ingest::read_walks_csv(walks_in);
        auto distances_in = open_input(bundle / "distances.csv");
        auto distances = ingest::parse_gate_distances(distances_in);

        std::size_t missing_distance = 0;
        auto speeds = calibrate::walk_times_to_speeds(walks, distances, &missing_distance);
        if (missing_distance > 0)
            log_info("calibrate: " + std::to_string(missing_distance) +
                     " walk observations had no gate distance");

        std::vector<calibrate::FitReport> reports;
        auto walk_model =
            calibrate::build_walk_speed_model(speeds, distances, &reports, cfg.max_components);

        auto stamps_in = open_input(bundle / "stamps.csv");
        auto stamps = ingest::parse_immigration_stamps(stamps_in);
        auto desks_in = open_input(bundle / "open_desks.csv");
        auto open_desks = ingest::read_open_desks_csv(desks_in);

        calibrate::CongestionFilter filter;
        filter.window_seconds = cfg.bin_width_s;
        filter.hourly_max = cfg.hourly_max;
        filter.min_wait_seconds = cfg.min_wait_s;
        filter.top_k_days = cfg.top_k_days;
        if (cfg.service_filter == "min_wait") {
            filter.mode = calibrate::CongestionFilter::Mode::min_wait;
            if (cfg.actual_bins_path.empty())
                throw CalibrationError(
                    "service filter min_wait needs analysis.actual_bins for wait estimates");
            filter.wait_estimates = wait_estimates_from_bins(cfg.actual_bins_path);
        } else if (cfg.service_filter == "top_k_days") {
            filter.mode = calibrate::CongestionFilter::Mode::top_k_days;
            if (!cfg.actual_bins_path.empty() && fs::exists(cfg.actual_bins_path))
                filter.wait_estimates = wait_estimates_from_bins(cfg.actual_bins_path);
        } else {
            throw ConfigError("service filter must be top_k_days or min_wait");
        }
        auto service_model = calibrate::estimate_desk_service_rate(stamps, open_desks, filter);

        const fs::path dir = cfg.out_dir / "models";
        fs::create_directories(dir);
        write_text(dir / "walk_speed_model.json", calibrate::walk_speed_model_to_json(walk_model));
        write_text(dir / "service_rate_model.json",
                   calibrate::service_rate_model_to_json(service_model));
        write_text(dir / "fit_report.json", calibrate::fit_reports_to_json(reports));
        write_text(dir / "fit_report.csv", calibrate::fit_reports_to_csv(reports));

        log_info("calibrate: " + std::to_string(walk_model.components.size()) +
                 " mixture components, " + std::to_string(service_model.per_desk_rates.size()) +
                 " service-rate samples");
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "paxflow calibrate: " << e.what() << "\n";
        return 3;
    }
}

int cmd_simulate(const RunConfig& cfg) {
    try {
        const fs::path models = cfg.out_dir / "models";
        const fs::path bundle = cfg.out_dir / "ingest";
        for (const fs::path& p : {models / "walk_speed_model.json",
                                  models / "service_rate_model.json", bundle / "flights.csv",
                                  bundle / "occupancy.json"})
            if (!fs::exists(p))
                throw SimulationError("missing simulation input: " + p.string());

        auto walk_model =
            calibrate::walk_speed_model_from_json(read_text(models / "walk_speed_model.json"));
        auto service_model = calibrate::service_rate_model_from_json(
            read_text(models / "service_rate_model.json"));
        auto occupancy = occupancy_from_json(read_text(bundle / "occupancy.json"));
        auto flights_in = open_input(bundle / "flights.csv");
        auto flights = ingest::parse_flight_schedule(flights_in);
        if (flights.empty()) throw SimulationError("no flights in the ingest bundle");

        // day list: config range or every day present in the schedule
        std::set<UtcSeconds> days;
        for (const auto& f : flights) days.insert(day_start(f.actual_time));
        std::vector<UtcSeconds> day_list;
        if (cfg.date_start) {
            const UtcSeconds end = cfg.date_end ? *cfg.date_end : *cfg.date_start + kSecondsPerDay;
            for (UtcSeconds d = *cfg.date_start; d < end; d += kSecondsPerDay)
                if (days.count(d)) day_list.push_back(d);
        } else {
            day_list.assign(days.begin(), days.end());
        }
        if (day_list.empty())
            throw SimulationError("no simulation days match the configured date range");

        engine::StaffingSource staffing = engine::CongestionPolicy{};
        if (cfg.staffing_mode == "file") {
            if (cfg.staffing_file.empty() || !fs::exists(cfg.staffing_file))
                throw SimulationError("staffing mode 'file' needs an existing staffing.file");
            auto staffing_in = open_input(cfg.staffing_file);
            staffing = parse_staffing_csv(staffing_in);
        } else if (cfg.staffing_mode == "derived") {
            auto desks_in = open_input(bundle / "open_desks.csv");
            auto open_desks = ingest::read_open_desks_csv(desks_in);
            if (open_desks.empty())
                throw SimulationError("derived staffing needs a nonempty open_desks.csv");
            staffing = engine::StaffingSchedule::from_open_desks(open_desks);
        } else {
            staffing = cfg.policy;
        }

        const fs::path dir = cfg.out_dir / "sim";
        fs::create_directories(dir);
        json summary;
        summary["days"] = json::array();
        std::vector<std::string> unstable_days;

        for (std::size_t day_index = 0; day_index < day_list.size(); ++day_index) {
            const UtcSeconds day = day_list[day_index];
            std::vector<ingest::FlightArrival> day_flights;
            for (const auto& f : flights)
                if (day_start(f.actual_time) == day) day_flights.push_back(f);

            engine::SimConfig sim_config;
            sim_config.seed = cfg.seed + day_index;
            sim_config.bin_width = cfg.bin_width_s;
            sim_config.instability_cap = cfg.instability_cap;
            auto result = engine::simulate_day(day_flights, occupancy, walk_model, service_model,
                                               staffing, sim_config);

            const std::string date = format_date(day);
            std::ostringstream buf;
            engine::write_traces_csv(buf, result.traces);
            write_text(dir / ("traces_" + date + ".csv"), buf.str());

            analyze::BinOptions bin_options;
            bin_options.bin_width = cfg.bin_width_s;
            auto bins = analyze::bin_statistics(result.traces, bin_options);
            buf.str({});
            analyze::write_bins_csv(buf, bins);
            write_text(dir / ("bins_" + date + ".csv"), buf.str());

            summary["days"].push_back({{"date", date},
                                       {"seed", sim_config.seed},
                                       {"served", result.traces.size()},
                                       {"unserved", result.diagnostics.unserved},
                                       {"unstable", result.diagnostics.unstable},
                                       {"max_queue", result.diagnostics.max_queue},
                                       {"events", result.diagnostics.events_processed}});
            if (result.diagnostics.unstable) unstable_days.push_back(date);
            log_debug("simulate: " + date + " served " + std::to_string(result.traces.size()));
        }
        summary["unstable_days"] = unstable_days;
        write_text(dir / "summary.json", summary.dump(2) + "\n");

        log_info("simulate: " + std::to_string(day_list.size()) + " day(s), " +
                 std::to_string(unstable_days.size()) + " unstable");
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "paxflow simulate: " << e.what() << "\n";
        return 4;
    }
}

int cmd_analyze(const RunConfig& cfg) {
    try {
        const fs::path sim_dir = cfg.out_dir / "sim";
        std::vector<fs::path> trace_files;
        if (fs::exists(sim_dir))
            for (const auto& entry : fs::directory_iterator(sim_dir)) {
                const std::string name = entry.path().filename().string();
                if (name.rfind("traces_", 0) == 0 && entry.path().extension() == ".csv")
                    trace_files.push_back(entry.path());
            }
        std::sort(trace_files.begin(), trace_files.end());
        if (trace_files.empty())
            throw AnalysisError("no simulation traces under " + sim_dir.string());

        std::vector<analyze::BinnedQueueStats> all_bins;
        for (const auto& path : trace_files) {
            auto in = open_input(path);
            auto traces = engine::read_traces_csv(in);
            analyze::BinOptions bin_options;
            bin_options.bin_width = cfg.bin_width_s;
            bin_options.demand_includes_in_service = cfg.demand_includes_in_service;
            auto bins = analyze::bin_statistics(traces, bin_options);
            all_bins.insert(all_bins.end(), bins.begin(), bins.end());
        }

        const fs::path dir = cfg.out_dir / "analysis";
        fs::create_directories(dir);
        json report;
        report["days"] = trace_files.size();
        report["bins_total"] = all_bins.size();

        // flight delay summary, when the ingest bundle is available
        const fs::path flights_path = cfg.out_dir / "ingest" / "flights.csv";
        if (fs::exists(flights_path)) {
            auto flights_in = open_input(flights_path);
            auto flights = ingest::parse_flight_schedule(flights_in);
            if (!flights.empty()) {
                auto summary = analyze::flight_delay_summary(flights, cfg.bin_width_s);
                std::ostringstream buf;
                buf << "bin_start,mean_delay_min\n";
                for (const auto& [bin, delay] : summary.per_bin_mean_delay_min)
                    buf << format_iso8601_utc(bin) << ',' << csv::format_double(delay) << '\n';
                write_text(dir / "delay_summary.csv", buf.str());
                report["delay"] = {{"overall_mean_delay_min", summary.overall_mean_delay_min},
                                   {"flight_count", summary.flight_count}};
            }
        }

        auto curve = analyze::throughput_vs_demand(all_bins);
        if (curve.points.size() >= 2 * static_cast<std::size_t>(cfg.saturation_window))
            curve.saturation_demand =
                analyze::detect_saturation(curve, cfg.saturation_window, cfg.slope_epsilon);
        std::ostringstream buf;
        analyze::write_curve_csv(buf, curve);
        write_text(dir / "throughput_demand.csv", buf.str());
        if (curve.saturation_demand)
            report["saturation_demand"] = *curve.saturation_demand;
        else
            report["saturation_demand"] = nullptr;

        if (!cfg.actual_bins_path.empty()) {
            if (!fs::exists(cfg.actual_bins_path))
                throw AnalysisError("actual bins file not found: " +
                                    cfg.actual_bins_path.string());
            auto actual_in = open_input(cfg.actual_bins_path);
            auto actual = analyze::read_bins_csv(actual_in);
            auto metrics = analyze::validate_against_actual(all_bins, actual);
            report["validation"] = {{"mae_wait_s", metrics.mae_wait},
                                    {"rmse_wait_s", metrics.rmse_wait},
                                    {"mae_queue", metrics.mae_queue},
                                    {"bins_compared", metrics.per_bin_residuals.size()}};
            buf.str({});
            buf << "bin_start,wait_residual_s,queue_residual\n";
            for (const auto& r : metrics.per_bin_residuals)
                buf << format_iso8601_utc(r.bin_start) << ','
                    << csv::format_double(r.wait_residual) << ',' << r.queue_residual << '\n';
            write_text(dir / "validation.csv", buf.str());
        }

        write_text(dir / "analysis.json", report.dump(2) + "\n");
        log_info("analyze: " + std::to_string(all_bins.size()) + " bins across " +
                 std::to_string(trace_files.size()) + " day(s)");
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "paxflow analyze: " << e.what() << "\n";
        return 5;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"passenger-flow simulation pipeline for an immigration hall"};
    app.require_subcommand(1);

    std::string config_path = "paxflow.json";
    std::uint64_t seed_flag = 0;
    std::int64_t bin_width_flag = 0;
    std::string out_flag, staffing_mode_flag;
    int upper_flag = 0, lower_flag = 0;

    app.add_option("--config", config_path, "path to the JSON run configuration");
    auto* seed_opt = app.add_option("--seed", seed_flag, "override the run seed");
    auto* bin_opt = app.add_option("--bin-width", bin_width_flag, "override bin width (seconds)");
    auto* out_opt = app.add_option("--out", out_flag, "override the output directory");
    auto* mode_opt = app.add_option("--staffing-mode", staffing_mode_flag,
                                    "override staffing mode: file, derived, or policy");
    auto* upper_opt = app.add_option("--upper", upper_flag, "congestion policy upper threshold");
    auto* lower_opt = app.add_option("--lower", lower_flag, "congestion policy lower threshold");

    auto* ingest_cmd = app.add_subcommand("ingest", "parse and clean the event logs");
    auto* calibrate_cmd = app.add_subcommand("calibrate", "fit walk-speed and service models");
    auto* simulate_cmd = app.add_subcommand("simulate", "run the day-by-day simulation");
    auto* analyze_cmd = app.add_subcommand("analyze", "compute statistics and validation");
    auto* all_cmd = app.add_subcommand("all", "run every stage in order");
    for (auto* cmd : {ingest_cmd, calibrate_cmd, simulate_cmd, analyze_cmd, all_cmd})
        cmd->fallthrough(); // global flags may follow the subcommand

    CLI11_PARSE(app, argc, argv);

    Overrides overrides;
    if (*seed_opt) overrides.seed = seed_flag;
    if (*bin_opt) overrides.bin_width = bin_width_flag;
    if (*out_opt) overrides.out = out_flag;
    if (*mode_opt) overrides.staffing_mode = staffing_mode_flag;
    if (*upper_opt) overrides.upper = upper_flag;
    if (*lower_opt) overrides.lower = lower_flag;

    RunConfig cfg;
    try {
        cfg = load_config(config_path, overrides);
    } catch (const std::exception& e) {
        std::cerr << "paxflow: " << e.what() << "\n";
        if (*analyze_cmd) return 5;
        if (*simulate_cmd) return 4;
        if (*calibrate_cmd) return 3;
        return 2;
    }

    if (*ingest_cmd) return cmd_ingest(cfg);
    if (*calibrate_cmd) return cmd_calibrate(cfg);
    if (*simulate_cmd) return cmd_simulate(cfg);
    if (*analyze_cmd) return cmd_analyze(cfg);
    if (*all_cmd) {
        if (int rc = cmd_ingest(cfg)) return rc;
        if (int rc = cmd_calibrate(cfg)) return rc;
        if (int rc = cmd_simulate(cfg)) return rc;
        return cmd_analyze(cfg);
    }
    return 1;
}
