#include "paxflow/calibrate.hpp"
#include "paxflow/csv.hpp"
#include "paxflow/errors.hpp"

#include "json.hpp"

#include <sstream>

namespace paxflow::calibrate {

using nlohmann::json;

std::string walk_speed_model_to_json(const WalkSpeedModel& model) {
    json j;
    j["components"] = json::array();
    for (const auto& c : model.components)
        j["components"].push_back({{"weight", c.weight},
                                   {"family", family_name(c.family)},
                                   {"p1", c.p1},
                                   {"p2", c.p2}});
    j["gate_distances"] = json::object();
    for (const auto& [gate, d] : model.gate_distances) j["gate_distances"][gate] = d;
    return j.dump(2) + "\n";
}

WalkSpeedModel walk_speed_model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("walk-speed model JSON is invalid: ") + e.what());
    }
    WalkSpeedModel model;
    if (!j.contains("components") || !j["components"].is_array())
        throw ConfigError("walk-speed model JSON lacks a components array");
    for (const auto& c : j["components"]) {
        auto family = family_from_name(c.at("family").get<std::string>());
        if (!family) throw ConfigError("unknown distribution family in walk-speed model");
        model.components.push_back({c.at("weight").get<double>(), *family,
                                    c.at("p1").get<double>(), c.at("p2").get<double>()});
    }
    if (j.contains("gate_distances"))
        for (const auto& [gate, d] : j["gate_distances"].items())
            model.gate_distances[gate] = d.get<double>();
    model.validate();
    return model;
}

std::string service_rate_model_to_json(const ServiceRateModel& model) {
    json j;
    j["per_desk_rates"] = model.per_desk_rates;
    j["window_seconds"] = model.window_seconds;
    j["source_windows"] = json::array();
    for (UtcSeconds w : model.source_windows)
        j["source_windows"].push_back(format_iso8601_utc(w));
    return j.dump(2) + "\n";
}

ServiceRateModel service_rate_model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("service-rate model JSON is invalid: ") + e.what());
    }
    ServiceRateModel model;
    if (!j.contains("per_desk_rates") || !j["per_desk_rates"].is_array())
        throw ConfigError("service-rate model JSON lacks a per_desk_rates array");
    model.per_desk_rates = j["per_desk_rates"].get<std::vector<double>>();
    if (j.contains("window_seconds")) model.window_seconds = j["window_seconds"].get<double>();
    if (j.contains("source_windows"))
        for (const auto& w : j["source_windows"]) {
            auto t = parse_iso8601(w.get<std::string>());
            if (!t) throw ConfigError("bad timestamp in service-rate model source_windows");
            model.source_windows.push_back(*t);
        }
    model.validate();
    return model;
}

std::string fit_reports_to_json(const std::vector<FitReport>& reports) {
    json j = json::array();
    for (const auto& r : reports) {
        json fits = json::object();
        for (const auto& [family, fit] : r.per_family)
            fits[family_name(family)] = {{"p1", fit.p1},
                                         {"p2", fit.p2},
                                         {"log_likelihood", fit.log_likelihood},
                                         {"aic", fit.aic}};
        j.push_back({{"component", r.component_index},
                     {"selected", family_name(r.selected)},
                     {"fits", fits}});
    }
    return j.dump(2) + "\n";
}

std::string fit_reports_to_csv(const std::vector<FitReport>& reports) {
    std::ostringstream out;
    out << "component,logistic_aic,lognormal_aic,gamma_aic,selected\n";
    for (const auto& r : reports) {
        out << r.component_index;
        for (Family f : {Family::logistic, Family::lognormal, Family::gamma}) {
            out << ',';
            auto it = r.per_family.find(f);
            if (it != r.per_family.end()) out << csv::format_double(it->second.aic);
        }
        out << ',' << family_name(r.selected) << '\n';
    }
    return out.str();
}

} // namespace paxflow::calibrate
