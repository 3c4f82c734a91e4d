#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "paxflow/calibrate.hpp"
#include "paxflow/errors.hpp"
#include "paxflow/staffing.hpp"

#include <cmath>

using namespace paxflow;
using namespace paxflow::calibrate;

TEST_CASE("walk-speed model JSON round trip is exact") {
    WalkSpeedModel model;
    model.components = {
        {0.0999, Family::logistic, 1.26, 0.118234567890123},
        {0.7558, Family::lognormal, 1.1502, 0.1103},
        {0.0627 / (1.0 - 0.0816), Family::gamma, 81.3, 0.0784},
    };
    // renormalize to satisfy the weight-sum invariant
    double total = 0.0;
    for (const auto& c : model.components) total += c.weight;
    for (auto& c : model.components) c.weight /= total;
    model.gate_distances = {{"53", 240.0}, {"54", 301.25}, {"60", 417.0}};

    const std::string text = walk_speed_model_to_json(model);
    const WalkSpeedModel back = walk_speed_model_from_json(text);
    REQUIRE(back.components.size() == model.components.size());
    for (std::size_t i = 0; i < model.components.size(); ++i) {
        CHECK(back.components[i].family == model.components[i].family);
        CHECK(std::abs(back.components[i].weight - model.components[i].weight) < 1e-12);
        CHECK(std::abs(back.components[i].p1 - model.components[i].p1) < 1e-12);
        CHECK(std::abs(back.components[i].p2 - model.components[i].p2) < 1e-12);
    }
    CHECK(back.gate_distances == model.gate_distances);

    // a second round trip is byte-identical
    CHECK(walk_speed_model_to_json(back) == text);
}

TEST_CASE("service-rate model JSON round trip is exact") {
    ServiceRateModel model;
    model.per_desk_rates = {11.25, 12.0, 13.333333333333333, 15.0};
    model.window_seconds = 900.0;
    model.source_windows = {1344729600, 1344730500};

    const std::string text = service_rate_model_to_json(model);
    const ServiceRateModel back = service_rate_model_from_json(text);
    CHECK(back == model);
    CHECK(service_rate_model_to_json(back) == text);
}

TEST_CASE("invalid model JSON is rejected") {
    CHECK_THROWS_AS(walk_speed_model_from_json("not json"), ConfigError);
    CHECK_THROWS_AS(walk_speed_model_from_json("{}"), ConfigError);
    CHECK_THROWS_AS(walk_speed_model_from_json(
                        R"({"components":[{"weight":1.0,"family":"cauchy","p1":0,"p2":1}]})"),
                    ConfigError);
    CHECK_THROWS_AS(service_rate_model_from_json("{}"), ConfigError);
    // weights not summing to one fail validation on load
    CHECK_THROWS_AS(walk_speed_model_from_json(
                        R"({"components":[{"weight":0.5,"family":"logistic","p1":0,"p2":1}]})"),
                    CalibrationError);
}

TEST_CASE("fit reports serialize to the AIC table layout") {
    FamilyFit logistic_fit{1.0, 0.5, -78.0, 161.0323};
    FamilyFit lognormal_fit{0.1, 0.9, -76.0, 156.8922};
    FamilyFit gamma_fit{2.0, 0.4, -77.0, 158.1537};
    FitReport report;
    report.component_index = 2;
    report.per_family = {{Family::logistic, logistic_fit},
                         {Family::lognormal, lognormal_fit},
                         {Family::gamma, gamma_fit}};
    report.selected = Family::lognormal;

    const std::string csv = fit_reports_to_csv({report});
    CHECK(csv.find("component,logistic_aic,lognormal_aic,gamma_aic,selected") == 0);
    CHECK(csv.find("2,161.0323,156.8922,158.1537,lognormal") != std::string::npos);

    const std::string json_text = fit_reports_to_json({report});
    CHECK(json_text.find("\"selected\": \"lognormal\"") != std::string::npos);
    CHECK(json_text.find("\"aic\": 156.8922") != std::string::npos);
}

TEST_CASE("staffing schedule helpers") {
    SUBCASE("from_open_desks merges equal adjacent levels") {
        std::map<UtcSeconds, int> desks{
            {0, 4}, {900, 4}, {1800, 6}, {2700, 6}, {3600, 2}};
        auto schedule = engine::StaffingSchedule::from_open_desks(desks);
        REQUIRE(schedule.breakpoints.size() == 3);
        CHECK(schedule.count_at(0.0) == 4);
        CHECK(schedule.count_at(1700.0) == 4);
        CHECK(schedule.count_at(1800.0) == 6);
        CHECK(schedule.count_at(1e9) == 2);
    }

    SUBCASE("undefined before the first breakpoint") {
        auto schedule = engine::StaffingSchedule::constant(3, 1000.0);
        CHECK_FALSE(schedule.covers(999.0));
        CHECK_THROWS_AS(schedule.count_at(999.0), SimulationError);
    }

    SUBCASE("validation rejects bad schedules") {
        engine::StaffingSchedule empty;
        CHECK_THROWS_AS(empty.validate(), SimulationError);
        engine::StaffingSchedule unsorted{{{10.0, 1}, {5.0, 2}}};
        CHECK_THROWS_AS(unsorted.validate(), SimulationError);
        engine::StaffingSchedule negative{{{0.0, -1}}};
        CHECK_THROWS_AS(negative.validate(), SimulationError);
    }
}
