#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

#include "paxflow/calibrate.hpp"
#include "paxflow/errors.hpp"
#include "paxflow/random.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace paxflow;
using namespace paxflow::calibrate;

namespace {

// Generator-side sampling for the fit oracles, independent of RngStream.
struct Generator {
    std::mt19937_64 gen;
    explicit Generator(std::uint64_t seed) : gen(seed) {}
    double normal(double mu, double sigma) {
        return std::normal_distribution<double>(mu, sigma)(gen);
    }
    double lognormal(double mu, double sigma) {
        return std::exp(normal(mu, sigma));
    }
    double logistic(double loc, double scale) {
        double u = std::uniform_real_distribution<double>(1e-12, 1.0 - 1e-12)(gen);
        return loc + scale * std::log(u / (1.0 - u));
    }
};

std::vector<double> mixture_sample(Generator& g, const std::vector<double>& weights,
                                   const std::vector<double>& means,
                                   const std::vector<double>& sigmas, std::size_t n) {
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = pick(g.gen);
        out.push_back(g.normal(means[k], sigmas[k]));
    }
    return out;
}

// Matches each recovered component to the nearest generator mean.
std::vector<int> match_components(const std::vector<EmComponent>& comps,
                                  const std::vector<double>& true_means) {
    std::vector<int> match(comps.size(), -1);
    for (std::size_t j = 0; j < comps.size(); ++j) {
        double best = 1e300;
        for (std::size_t t = 0; t < true_means.size(); ++t) {
            const double d = std::abs(comps[j].mean - true_means[t]);
            if (d < best) {
                best = d;
                match[j] = static_cast<int>(t);
            }
        }
    }
    return match;
}

} // namespace

TEST_CASE("walk_times_to_speeds") {
    const std::map<std::string, double> distances{{"53", 300.0}, {"54", 420.0}};

    SUBCASE("unit cases") {
        std::vector<ingest::WalkObservation> obs{
            {"d1", "53", 0, 300, 300.0},
            {"d2", "53", 0, 200, 200.0},
        };
        auto speeds = walk_times_to_speeds(obs, distances);
        REQUIRE(speeds.size() == 2);
        CHECK(speeds[0] == doctest::Approx(1.0));
        CHECK(speeds[1] == doctest::Approx(1.5));
    }

    SUBCASE("five observations across two gates match hand division") {
        std::vector<ingest::WalkObservation> obs{
            {"d1", "53", 0, 0, 150.0}, {"d2", "53", 0, 0, 600.0}, {"d3", "54", 0, 0, 210.0},
            {"d4", "54", 0, 0, 840.0}, {"d5", "53", 0, 0, 250.0},
        };
        auto speeds = walk_times_to_speeds(obs, distances);
        REQUIRE(speeds.size() == 5);
        CHECK(speeds[0] == doctest::Approx(2.0));
        CHECK(speeds[1] == doctest::Approx(0.5));
        CHECK(speeds[2] == doctest::Approx(2.0));
        CHECK(speeds[3] == doctest::Approx(0.5));
        CHECK(speeds[4] == doctest::Approx(1.2));
    }

    SUBCASE("unknown gate is skipped and counted") {
        std::vector<ingest::WalkObservation> obs{
            {"d1", "53", 0, 0, 300.0},
            {"d2", "99", 0, 0, 300.0},
        };
        std::size_t missing = 0;
        auto speeds = walk_times_to_speeds(obs, distances, &missing);
        CHECK(speeds.size() == 1);
        CHECK(missing == 1);
    }

    SUBCASE("empty distance table is fatal") {
        CHECK_THROWS_AS(walk_times_to_speeds({}, {}), ConfigError);
    }
}

TEST_CASE("em_cluster") {
    SUBCASE("identical points collapse to one floored component") {
        std::vector<double> pts(50, 3.7);
        auto r = em_cluster(pts, 3);
        REQUIRE(r.components.size() == 1);
        CHECK(r.components[0].mean == doctest::Approx(3.7));
        CHECK(r.components[0].variance == doctest::Approx(1e-8));
        CHECK(r.components[0].weight == doctest::Approx(1.0));
    }

    SUBCASE("two well-separated components are recovered with their weights") {
        Generator g(2012);
        auto pts = mixture_sample(g, {0.3, 0.7}, {0.0, 4.5}, {1.0, 1.0}, 2000);
        auto r = em_cluster(pts, 5);
        REQUIRE(r.components.size() == 2);
        auto match = match_components(r.components, {0.0, 4.5});
        for (std::size_t j = 0; j < r.components.size(); ++j) {
            const double want = match[j] == 0 ? 0.3 : 0.7;
            CHECK(r.components[j].weight == doctest::Approx(want).epsilon(0.17)); // +-0.05 abs
            CHECK(std::abs(r.components[j].weight - want) < 0.05);
        }
    }

    SUBCASE("six modes are admissible") {
        Generator g(53);
        std::vector<double> means{0.5, 1.5, 2.5, 3.5, 4.5, 5.5};
        auto pts = mixture_sample(g, {1, 1, 1, 1, 1, 1}, means,
                                  {0.05, 0.05, 0.05, 0.05, 0.05, 0.05}, 1200);
        auto r = em_cluster(pts, 8);
        CHECK(r.components.size() == 6);
    }

    SUBCASE("posterior rows sum to one") {
        Generator g(77);
        auto pts = mixture_sample(g, {0.5, 0.5}, {0.0, 3.0}, {0.7, 0.7}, 400);
        auto r = em_cluster(pts, 4);
        for (const auto& row : r.posteriors) {
            double sum = 0.0;
            for (double p : row) sum += p;
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }

    SUBCASE("preconditions") {
        CHECK_THROWS_AS(em_cluster({1.0}, 2), CalibrationError);
        CHECK_THROWS_AS(em_cluster({1.0, 2.0}, 0), CalibrationError);
    }
}

TEST_CASE("assign_clusters") {
    SUBCASE("dominant posterior gives one assignment") {
        auto a = assign_clusters({{0.97, 0.03}});
        REQUIRE(a.size() == 1);
        CHECK(a[0].component_index == 0);
    }

    SUBCASE("tie above threshold gives two assignments") {
        auto a = assign_clusters({{0.50, 0.50}});
        CHECK(a.size() == 2);
    }

    SUBCASE("threshold boundary keeps only the argmax") {
        auto a = assign_clusters({{0.96, 0.04}});
        REQUIRE(a.size() == 1);
        CHECK(a[0].component_index == 0);
        CHECK(a[0].posterior == doctest::Approx(0.96));
    }

    SUBCASE("argmax survives even below the threshold") {
        // 25 components at 0.04 each: nothing clears 0.05, argmax still kept
        std::vector<double> row(25, 0.04);
        auto a = assign_clusters({row});
        REQUIRE(a.size() == 1);
        CHECK(a[0].component_index == 0);
    }

    SUBCASE("strictly-above semantics at the threshold") {
        auto a = assign_clusters({{0.95, 0.05}});
        REQUIRE(a.size() == 1); // 0.05 is not > 0.05
    }
}

TEST_CASE("fit_component") {
    SUBCASE("lognormal data reproduces the gate-53 family ordering") {
        // sampled from the reported lognormal walk-speed fit for gate 53
        Generator g(5353);
        std::vector<double> pts;
        for (int i = 0; i < 200; ++i) pts.push_back(g.lognormal(-0.33383, 1.03455));
        const auto ln = fit_component(pts, Family::lognormal);
        const auto ga = fit_component(pts, Family::gamma);
        const auto lo = fit_component(pts, Family::logistic);
        CHECK(ln.aic < ga.aic);
        CHECK(ga.aic < lo.aic);
        // closed-form ML estimates recover the generator parameters
        CHECK(ln.p1 == doctest::Approx(-0.33383).epsilon(0.25));
        CHECK(ln.p2 == doctest::Approx(1.03455).epsilon(0.15));
    }

    SUBCASE("logistic data prefers the logistic family") {
        Generator g(31);
        std::vector<double> pts;
        while (pts.size() < 1000) {
            const double x = g.logistic(12.0, 1.0);
            if (x > 0.0) pts.push_back(x); // keep families comparable
        }
        const auto lo = fit_component(pts, Family::logistic);
        const auto ln = fit_component(pts, Family::lognormal);
        const auto ga = fit_component(pts, Family::gamma);
        CHECK(lo.aic < ln.aic);
        CHECK(lo.aic < ga.aic);
        CHECK(lo.p1 == doctest::Approx(12.0).epsilon(0.02));
        CHECK(lo.p2 == doctest::Approx(1.0).epsilon(0.1));
    }

    SUBCASE("constant data is infeasible") {
        std::vector<double> pts(20, 2.0);
        CHECK_THROWS_AS(fit_component(pts, Family::logistic), CalibrationError);
        CHECK_THROWS_AS(fit_component(pts, Family::lognormal), CalibrationError);
        CHECK_THROWS_AS(fit_component(pts, Family::gamma), CalibrationError);
    }

    SUBCASE("nonpositive data knocks out lognormal and gamma") {
        std::vector<double> pts{-1.0, 0.5, 2.0, 3.0};
        CHECK_THROWS_AS(fit_component(pts, Family::lognormal), CalibrationError);
        CHECK_THROWS_AS(fit_component(pts, Family::gamma), CalibrationError);
        CHECK_NOTHROW(fit_component(pts, Family::logistic));
        auto fits = fit_all_families(pts);
        CHECK(fits.size() == 1);
        CHECK(fits.count(Family::logistic) == 1);
    }

    SUBCASE("too few points") {
        CHECK_THROWS_AS(fit_component({1.0, 2.0}, Family::logistic), CalibrationError);
    }

    SUBCASE("gamma ML on gamma data") {
        Generator g(9001);
        RngStream rng(9001);
        std::vector<double> pts;
        for (int i = 0; i < 4000; ++i) pts.push_back(rng.gamma(5.0, 2.0));
        const auto fit = fit_component(pts, Family::gamma);
        CHECK(fit.p1 == doctest::Approx(5.0).epsilon(0.06));
        CHECK(fit.p2 == doctest::Approx(2.0).epsilon(0.06));
    }
}

TEST_CASE("select_family") {
    auto fit_with_aic = [](double aic) {
        FamilyFit f;
        f.aic = aic;
        return f;
    };

    SUBCASE("gate-53 component-2 table row selects lognormal") {
        std::map<Family, FamilyFit> reports{
            {Family::logistic, fit_with_aic(161.0323)},
            {Family::lognormal, fit_with_aic(156.8922)},
            {Family::gamma, fit_with_aic(158.1537)},
        };
        CHECK(select_family(reports) == Family::lognormal);
    }

    SUBCASE("single feasible family wins by default") {
        std::map<Family, FamilyFit> reports{{Family::gamma, fit_with_aic(10.0)}};
        CHECK(select_family(reports) == Family::gamma);
    }

    SUBCASE("exact tie breaks in fixed order") {
        std::map<Family, FamilyFit> reports{
            {Family::logistic, fit_with_aic(5.0)},
            {Family::gamma, fit_with_aic(5.0)},
        };
        CHECK(select_family(reports) == Family::logistic);
        reports.erase(Family::logistic);
        reports[Family::lognormal] = fit_with_aic(5.0);
        CHECK(select_family(reports) == Family::lognormal);
    }

    SUBCASE("empty report map is an error") {
        CHECK_THROWS_AS(select_family({}), CalibrationError);
    }

    SUBCASE("matches brute-force argmin on random report maps") {
        std::mt19937 gen(4242);
        const Family all[] = {Family::logistic, Family::lognormal, Family::gamma};
        for (int trial = 0; trial < 2000; ++trial) {
            std::map<Family, FamilyFit> reports;
            for (Family f : all)
                if (gen() % 4 != 0) // random subset
                    reports[f] = fit_with_aic(static_cast<double>(gen() % 16) / 4.0);
            if (reports.empty()) continue;
            // brute force: min AIC value, then first family in fixed order
            double best = 1e300;
            for (const auto& [f, fit] : reports) best = std::min(best, fit.aic);
            Family expected = Family::logistic;
            for (Family f : all) {
                auto it = reports.find(f);
                if (it != reports.end() && it->second.aic == best) {
                    expected = f;
                    break;
                }
            }
            CHECK(select_family(reports) == expected);
        }
    }
}

TEST_CASE("build_walk_speed_model") {
    const std::map<std::string, double> distances{{"53", 240.0}};

    SUBCASE("unimodal data gives a single component") {
        Generator g(11);
        std::vector<double> speeds;
        for (int i = 0; i < 500; ++i) speeds.push_back(g.normal(1.3, 0.2));
        auto model = build_walk_speed_model(speeds, distances);
        CHECK(model.components.size() == 1);
        CHECK(model.components[0].weight == doctest::Approx(1.0));
    }

    SUBCASE("two modes recover generator weights within 0.05") {
        Generator g(22);
        auto speeds = mixture_sample(g, {0.35, 0.65}, {0.8, 2.4}, {0.12, 0.2}, 2000);
        std::vector<FitReport> reports;
        auto model = build_walk_speed_model(speeds, distances, &reports);
        REQUIRE(model.components.size() == 2);
        REQUIRE(reports.size() == 2);
        const bool first_is_low = model.components[0].p1 < model.components[1].p1 ||
                                  model.components[0].weight < model.components[1].weight;
        const double w_low = first_is_low ? model.components[0].weight
                                          : model.components[1].weight;
        CHECK(std::abs(w_low - 0.35) < 0.05);
        double sum = 0.0;
        for (const auto& c : model.components) sum += c.weight;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }

    SUBCASE("gate-53-like four-cluster data reproduces the mixture coefficients") {
        Generator g(530053);
        const std::vector<double> weights{0.0999, 0.7558, 0.0627, 0.0816};
        const std::vector<double> means{1.26, 3.16, 0.638, 6.0};
        const std::vector<double> sigmas{0.12, 0.35, 0.07, 0.4};
        auto speeds = mixture_sample(g, weights, means, sigmas, 3000);
        auto model = build_walk_speed_model(speeds, distances);
        REQUIRE(model.components.size() == 4);

        // locate each recovered component by sampling its central tendency
        for (std::size_t t = 0; t < means.size(); ++t) {
            double best_d = 1e300;
            double got_weight = 0.0;
            for (const auto& c : model.components) {
                double center = 0.0;
                switch (c.family) {
                    case Family::logistic: center = c.p1; break;
                    case Family::lognormal: center = std::exp(c.p1 + c.p2 * c.p2 / 2.0); break;
                    case Family::gamma: center = c.p1 * c.p2; break;
                }
                const double d = std::abs(center - means[t]);
                if (d < best_d) {
                    best_d = d;
                    got_weight = c.weight;
                }
            }
            CHECK(std::abs(got_weight - weights[t]) < 0.05);
        }
    }

    SUBCASE("too few points") {
        std::vector<double> speeds{1.0, 1.1, 1.2};
        CHECK_THROWS_AS(build_walk_speed_model(speeds, distances), CalibrationError);
    }
}

TEST_CASE("sample_walk_time") {
    SUBCASE("degenerate single component is deterministic") {
        WalkSpeedModel model;
        model.components = {{1.0, Family::logistic, 1.0, 0.0}}; // point mass at 1 m/s
        model.gate_distances = {{"53", 300.0}};
        RngStream rng(5);
        for (int i = 0; i < 10; ++i)
            CHECK(sample_walk_time(model, "53", rng) == doctest::Approx(300.0));
    }

    SUBCASE("zero-weight component is never drawn") {
        WalkSpeedModel model;
        model.components = {{1.0, Family::logistic, 2.0, 0.0},
                            {0.0, Family::logistic, 500.0, 0.0}};
        model.gate_distances = {{"53", 300.0}};
        RngStream rng(6);
        for (int i = 0; i < 100000; ++i)
            CHECK(sample_walk_time(model, "53", rng) == doctest::Approx(150.0));
    }

    SUBCASE("unknown gate is an error") {
        WalkSpeedModel model;
        model.components = {{1.0, Family::logistic, 1.0, 0.0}};
        model.gate_distances = {{"53", 300.0}};
        RngStream rng(7);
        CHECK_THROWS_AS(sample_walk_time(model, "99", rng), CalibrationError);
    }

    SUBCASE("hopelessly negative mixture errors after 100 redraws") {
        WalkSpeedModel model;
        model.components = {{1.0, Family::logistic, -50.0, 0.0001}};
        model.gate_distances = {{"53", 300.0}};
        RngStream rng(8);
        CHECK_THROWS_AS(sample_walk_time(model, "53", rng), CalibrationError);
    }

    SUBCASE("Monte Carlo mean matches the quadrature oracle within 2%") {
        WalkSpeedModel model;
        model.components = {{0.6, Family::lognormal, 0.2, 0.3},
                            {0.4, Family::gamma, 9.0, 0.15}};
        const double distance = 300.0;
        model.gate_distances = {{"53", distance}};

        // independent oracle: E[d / s] via Simpson integration of each density
        auto lognormal_pdf = [](double s, double mu, double sigma) {
            if (s <= 0.0) return 0.0;
            const double z = (std::log(s) - mu) / sigma;
            return std::exp(-0.5 * z * z) / (s * sigma * std::sqrt(2.0 * 3.141592653589793));
        };
        auto gamma_pdf = [](double s, double k, double theta) {
            if (s <= 0.0) return 0.0;
            return std::exp((k - 1.0) * std::log(s) - s / theta - std::lgamma(k) -
                            k * std::log(theta));
        };
        const double expected =
            0.6 * testsupport::simpson(
                      [&](double s) { return distance / s * lognormal_pdf(s, 0.2, 0.3); },
                      1e-4, 60.0, 400000) +
            0.4 * testsupport::simpson(
                      [&](double s) { return distance / s * gamma_pdf(s, 9.0, 0.15); },
                      1e-4, 60.0, 400000);

        RngStream rng(1234);
        double acc = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) acc += sample_walk_time(model, "53", rng);
        const double mc = acc / n;
        CHECK(std::abs(mc - expected) / expected < 0.02);
    }
}

TEST_CASE("estimate_desk_service_rate") {
    constexpr UtcSeconds kDay = 1344729600;

    auto make_stamps = [](UtcSeconds window_start, int n) {
        std::vector<ingest::StampRecord> out;
        for (int i = 0; i < n; ++i)
            out.push_back({window_start + i % 900, "D" + std::to_string(i % 6), std::nullopt,
                           ingest::Direction::arrival});
        return out;
    };

    SUBCASE("rate is stamps over desks") {
        auto stamps = make_stamps(kDay, 60);
        std::map<UtcSeconds, int> desks{{kDay, 4}};
        CongestionFilter filter;
        filter.mode = CongestionFilter::Mode::top_k_days;
        filter.top_k_days = 1;
        auto model = estimate_desk_service_rate(stamps, desks, filter);
        REQUIRE(model.per_desk_rates.size() == 1);
        CHECK(model.per_desk_rates[0] == doctest::Approx(15.0));
    }

    SUBCASE("hourly max keeps the larger rate in the hour") {
        auto stamps = make_stamps(kDay, 40); // rate 10
        auto more = make_stamps(kDay + 900, 56); // rate 14, same hour of day
        stamps.insert(stamps.end(), more.begin(), more.end());
        std::map<UtcSeconds, int> desks{{kDay, 4}, {kDay + 900, 4}};
        CongestionFilter filter;
        filter.mode = CongestionFilter::Mode::top_k_days;
        filter.top_k_days = 1;
        filter.hourly_max = true;
        auto model = estimate_desk_service_rate(stamps, desks, filter);
        REQUIRE(model.per_desk_rates.size() == 1);
        CHECK(model.per_desk_rates[0] == doctest::Approx(14.0));
    }

    SUBCASE("min-wait filter keeps only congested windows") {
        auto stamps = make_stamps(kDay, 40);
        auto more = make_stamps(kDay + 900, 56);
        stamps.insert(stamps.end(), more.begin(), more.end());
        std::map<UtcSeconds, int> desks{{kDay, 4}, {kDay + 900, 4}};
        CongestionFilter filter; // min_wait mode, 15 min
        filter.wait_estimates = {{kDay, 600.0}, {kDay + 900, 1200.0}};
        auto model = estimate_desk_service_rate(stamps, desks, filter);
        REQUIRE(model.per_desk_rates.size() == 1);
        CHECK(model.per_desk_rates[0] == doctest::Approx(14.0));
        CHECK(model.source_windows == std::vector<UtcSeconds>{kDay + 900});
    }

    SUBCASE("nothing passing the filter is an error") {
        auto stamps = make_stamps(kDay, 40);
        std::map<UtcSeconds, int> desks{{kDay, 4}};
        CongestionFilter filter;
        filter.wait_estimates = {{kDay, 60.0}}; // under the 15-min threshold
        CHECK_THROWS_AS(estimate_desk_service_rate(stamps, desks, filter), CalibrationError);
    }

    SUBCASE("missing open-desk count for a retained window is an error") {
        auto stamps = make_stamps(kDay, 40);
        CongestionFilter filter;
        filter.mode = CongestionFilter::Mode::top_k_days;
        CHECK_THROWS_AS(estimate_desk_service_rate(stamps, {}, filter), CalibrationError);
    }

    SUBCASE("Poisson-thinned synthetic log recovers the true rate within 5%") {
        const double true_rate = 12.0; // per desk per 15-min window
        const int desks_open = 4;
        std::mt19937 gen(2024);
        std::poisson_distribution<int> poisson(true_rate * desks_open);
        std::vector<ingest::StampRecord> stamps;
        std::map<UtcSeconds, int> desks;
        for (int w = 0; w < 200; ++w) {
            const UtcSeconds start = kDay + 900 * w;
            desks[start] = desks_open;
            const int n = poisson(gen);
            for (int i = 0; i < n; ++i)
                stamps.push_back({start + i % 900, "D" + std::to_string(i % desks_open),
                                  std::nullopt, ingest::Direction::arrival});
        }
        CongestionFilter filter;
        filter.mode = CongestionFilter::Mode::top_k_days;
        filter.top_k_days = 10;
        auto model = estimate_desk_service_rate(stamps, desks, filter);
        CHECK(std::abs(model.mean() - true_rate) / true_rate < 0.05);
    }
}

TEST_CASE("service_rate_at") {
    ServiceRateModel model;
    model.per_desk_rates = {12.0};

    SUBCASE("zero desks means zero rate") {
        auto staffing = engine::StaffingSchedule::constant(0, 0.0);
        RngStream rng(1);
        CHECK(service_rate_at(model, staffing, 100.0, rng) == 0.0);
    }

    SUBCASE("degenerate distribution scales linearly with desks") {
        auto staffing = engine::StaffingSchedule::constant(5, 0.0);
        RngStream rng(1);
        CHECK(service_rate_at(model, staffing, 100.0, rng) == doctest::Approx(60.0));
    }

    SUBCASE("Monte Carlo mean matches c times the distribution mean") {
        ServiceRateModel spread;
        spread.per_desk_rates = {8.0, 10.0, 12.0, 14.0, 16.0};
        auto staffing = engine::StaffingSchedule::constant(3, 0.0);
        RngStream rng(99);
        double acc = 0.0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) acc += service_rate_at(spread, staffing, 50.0, rng);
        const double expected = 3.0 * spread.mean();
        CHECK(std::abs(acc / n - expected) / expected < 0.02);
    }
}

TEST_CASE("component-count recovery on separated mixtures (quick property)") {
    // acceptance runs the full 100-seed version; keep a smoke check here
    int recovered = 0;
    for (int seed = 0; seed < 10; ++seed) {
        Generator g(1000 + static_cast<std::uint64_t>(seed));
        auto pts = mixture_sample(g, {0.4, 0.6}, {0.0, 5.0}, {1.0, 1.0}, 2000);
        auto r = em_cluster(pts, 5);
        if (r.components.size() == 2) ++recovered;
    }
    CHECK(recovered >= 9);
}
