#pragma once

#include "paxflow/ingest.hpp"
#include "paxflow/random.hpp"
#include "paxflow/staffing.hpp"
#include "paxflow/time_utils.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace paxflow::calibrate {

enum class Family { logistic, lognormal, gamma };

const char* family_name(Family f);
std::optional<Family> family_from_name(std::string_view name);

// Parameter conventions: logistic (location, scale), lognormal (log-mean,
// log-sd), gamma (shape, scale).
struct MixtureComponent {
    double weight = 0.0;
    Family family = Family::logistic;
    double p1 = 0.0;
    double p2 = 0.0;

    bool operator==(const MixtureComponent&) const = default;
};

// Mixture distribution of passenger walk speeds (m/s) plus the gate distance
// table used to turn a speed draw into a walk time.
struct WalkSpeedModel {
    std::vector<MixtureComponent> components;
    std::map<std::string, double> gate_distances;

    // Weights must sum to 1 and be positive; scale parameters nonnegative.
    void validate() const;

    // Draws a strictly positive speed; nonpositive draws are rejected and the
    // whole draw repeated, up to 100 times.
    double sample_speed(RngStream& rng) const;

    bool operator==(const WalkSpeedModel&) const = default;
};

// distance(gate) / speed draw, in seconds. Throws on unknown gate.
double sample_walk_time(const WalkSpeedModel& model, const std::string& gate, RngStream& rng);

// --- walk-speed calibration -------------------------------------------------

// speed = distance(gate) / walk_time. Observations whose gate has no distance
// entry are skipped and counted.
std::vector<double> walk_times_to_speeds(const std::vector<ingest::WalkObservation>& observations,
                                         const std::map<std::string, double>& distances,
                                         std::size_t* missing_distance = nullptr);

struct EmComponent {
    double weight = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

struct EmResult {
    std::vector<EmComponent> components;
    std::vector<std::vector<double>> posteriors; // point x component, rows sum to 1
    double log_likelihood = 0.0;
    double aic = 0.0;
    int iterations = 0;
};

// Gaussian-mixture EM, run for K = 1..max_components with deterministic
// quantile initialization; the K with minimum AIC wins. Components whose
// variance collapses below 1e-8 are removed and the fit restarted with K-1.
EmResult em_cluster(const std::vector<double>& points, int max_components,
                    double tolerance = 1e-6, int max_iterations = 500);

struct ClusterAssignment {
    int point_index = 0;
    int component_index = 0;
    double posterior = 0.0;

    bool operator==(const ClusterAssignment&) const = default;
};

// Every (point, component) pair with posterior above the threshold; the
// argmax component is always kept so no point is left unassigned.
std::vector<ClusterAssignment> assign_clusters(const std::vector<std::vector<double>>& posteriors,
                                               double threshold = 0.05);

struct FamilyFit {
    double p1 = 0.0;
    double p2 = 0.0;
    double log_likelihood = 0.0;
    double aic = 0.0; // 2k - 2 logL with k = 2
};

// Maximum-likelihood fit of one family to one cluster. Throws
// CalibrationError when the family is infeasible for the data (nonpositive
// points for lognormal/gamma, constant data, fewer than 3 points).
FamilyFit fit_component(const std::vector<double>& cluster_points, Family family);

// All feasible family fits; infeasible families are simply absent.
std::map<Family, FamilyFit> fit_all_families(const std::vector<double>& cluster_points);

// Minimum AIC; exact ties break logistic < lognormal < gamma.
Family select_family(const std::map<Family, FamilyFit>& reports);

struct FitReport {
    int component_index = 0;
    std::map<Family, FamilyFit> per_family;
    Family selected = Family::logistic;
};

// Two-step calibration: EM clustering of the speeds, then a per-cluster
// family fit chosen by AIC. Mixture weights are the EM coefficients,
// renormalized over the clusters that produced a feasible fit.
WalkSpeedModel build_walk_speed_model(const std::vector<double>& speeds,
                                      const std::map<std::string, double>& distances,
                                      std::vector<FitReport>* reports = nullptr,
                                      int max_components = 8);

// --- service-rate calibration -----------------------------------------------

// Empirical per-desk service rates (passengers per desk per window).
struct ServiceRateModel {
    std::vector<double> per_desk_rates;
    double window_seconds = 900.0;
    std::vector<UtcSeconds> source_windows;

    void validate() const;
    double sample(RngStream& rng) const;
    double mean() const;

    bool operator==(const ServiceRateModel&) const = default;
};

// Picks the congested windows the rates are estimated from. min_wait needs a
// per-window wait-estimate series (e.g. derived from device traces); top-k
// ranks days by their mean wait estimate when available, otherwise by total
// stamp volume as a demand proxy.
struct CongestionFilter {
    enum class Mode { min_wait, top_k_days };
    Mode mode = Mode::min_wait;
    double min_wait_seconds = 15 * 60.0;
    int top_k_days = 10;
    std::map<UtcSeconds, double> wait_estimates; // window start -> mean wait (s)
    bool hourly_max = false; // keep only the max rate per hour of day
    std::int64_t window_seconds = 900;
};

// rate(window) = stamps in window / open desks in window, over the retained
// congested windows. Throws CalibrationError when nothing passes the filter
// or a retained window has no open-desk count.
ServiceRateModel estimate_desk_service_rate(const std::vector<ingest::StampRecord>& stamps,
                                            const std::map<UtcSeconds, int>& open_desks,
                                            const CongestionFilter& filter);

// mu(t) = open desks at t x one draw from the per-desk distribution, in
// passengers per window.
double service_rate_at(const ServiceRateModel& model, const engine::StaffingSchedule& staffing,
                       double t, RngStream& rng);

// --- serialization ------------------------------------------------------------

std::string walk_speed_model_to_json(const WalkSpeedModel& model);
WalkSpeedModel walk_speed_model_from_json(const std::string& text);
std::string service_rate_model_to_json(const ServiceRateModel& model);
ServiceRateModel service_rate_model_from_json(const std::string& text);
std::string fit_reports_to_json(const std::vector<FitReport>& reports);
// component,logistic_aic,lognormal_aic,gamma_aic,selected — one row per cluster
std::string fit_reports_to_csv(const std::vector<FitReport>& reports);

} // namespace paxflow::calibrate
