#include "paxflow/calibrate.hpp"

#include "paxflow/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace paxflow::calibrate {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kVarianceFloor = 1e-8;

double sample_mean(const std::vector<double>& xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(const std::vector<double>& xs, double mean) {
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(xs.size());
}

double normal_log_pdf(double x, double mean, double variance) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * kPi * variance) + d * d / variance);
}

double digamma(double x) {
    double result = 0.0;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    return result + std::log(x) - 0.5 * inv -
           inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
}

double trigamma(double x) {
    double result = 0.0;
    while (x < 6.0) {
        result += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    return result + inv * (1.0 + 0.5 * inv +
                           inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 / 42.0)));
}

double softplus(double x) { // log(1 + e^x), stable
    if (x > 35.0) return x;
    if (x < -35.0) return 0.0;
    return std::log1p(std::exp(x));
}

// Minimal Nelder-Mead for the 2-parameter likelihood surfaces.
template <typename F>
std::array<double, 2> nelder_mead_2d(F f, std::array<double, 2> x0, int max_iter) {
    struct Vertex {
        std::array<double, 2> x;
        double fx;
    };
    auto make = [&](std::array<double, 2> x) { return Vertex{x, f(x)}; };

    std::array<Vertex, 3> s;
    s[0] = make(x0);
    for (int i = 0; i < 2; ++i) {
        auto x = x0;
        x[static_cast<std::size_t>(i)] += 0.25 * std::max(std::abs(x[static_cast<std::size_t>(i)]), 0.5);
        s[static_cast<std::size_t>(i) + 1] = make(x);
    }

    for (int it = 0; it < max_iter; ++it) {
        std::sort(s.begin(), s.end(),
                  [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; });
        if (std::abs(s[2].fx - s[0].fx) <= 1e-12 * (1.0 + std::abs(s[0].fx))) break;

        const std::array<double, 2> centroid{(s[0].x[0] + s[1].x[0]) / 2.0,
                                             (s[0].x[1] + s[1].x[1]) / 2.0};
        auto at = [&](double coeff) {
            return std::array<double, 2>{centroid[0] + coeff * (centroid[0] - s[2].x[0]),
                                         centroid[1] + coeff * (centroid[1] - s[2].x[1])};
        };
        Vertex reflected = make(at(1.0));
        if (reflected.fx < s[0].fx) {
            Vertex expanded = make(at(2.0));
            s[2] = expanded.fx < reflected.fx ? expanded : reflected;
        } else if (reflected.fx < s[1].fx) {
            s[2] = reflected;
        } else {
            Vertex contracted = make(at(reflected.fx < s[2].fx ? 0.5 : -0.5));
            if (contracted.fx < std::min(reflected.fx, s[2].fx)) {
                s[2] = contracted;
            } else { // shrink toward the best vertex
                for (int i = 1; i < 3; ++i) {
                    auto& v = s[static_cast<std::size_t>(i)];
                    v.x[0] = s[0].x[0] + 0.5 * (v.x[0] - s[0].x[0]);
                    v.x[1] = s[0].x[1] + 0.5 * (v.x[1] - s[0].x[1]);
                    v = make(v.x);
                }
            }
        }
    }
    std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; });
    return s[0].x;
}

struct EmRun {
    std::vector<EmComponent> components;
    std::vector<std::vector<double>> posteriors;
    double log_likelihood = 0.0;
    int iterations = 0;
    bool degenerate = false;
};

// Two components whose means sit within twice the broader sigma have not
// found separate modes, they are splitting one; such a fit is treated like a
// variance collapse and retried with K-1. Posterior overlap between adjacent
// modes is unaffected: it happens at separations well beyond this.
bool components_collapsed(const std::vector<EmComponent>& components) {
    for (std::size_t i = 0; i < components.size(); ++i)
        for (std::size_t j = i + 1; j < components.size(); ++j) {
            const double sep = std::abs(components[i].mean - components[j].mean);
            const double broad =
                std::sqrt(std::max(components[i].variance, components[j].variance));
            if (sep < 2.0 * broad) return true;
        }
    return false;
}

// A component needs enough effective points to support its three parameters.
double min_component_support(std::size_t n) {
    return std::min(10.0, std::max(3.0, static_cast<double>(n) / 10.0));
}

// Quantile positions: one seed at the (j+0.5)/k quantile of the data.
std::vector<double> quantile_means(const std::vector<double>& sorted, int k) {
    const std::size_t n = sorted.size();
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        const auto q = static_cast<std::size_t>((static_cast<double>(j) + 0.5) /
                                                static_cast<double>(k) * static_cast<double>(n));
        means.push_back(sorted[std::min(q, n - 1)]);
    }
    return means;
}

// Histogram-peak positions: the k tallest separated local maxima of a smoothed
// histogram. Quantile seeding alone misses low-weight separated modes; a peak
// seed lands in every mode regardless of its mass.
std::vector<double> histogram_peak_means(const std::vector<double>& sorted, int k) {
    constexpr int kBins = 64;
    const double lo = sorted.front(), hi = sorted.back();
    if (hi <= lo) return std::vector<double>(static_cast<std::size_t>(k), lo);
    const double width = (hi - lo) / kBins;

    std::array<double, kBins> counts{};
    for (double p : sorted) {
        auto b = static_cast<std::size_t>((p - lo) / width);
        counts[std::min(b, static_cast<std::size_t>(kBins - 1))] += 1.0;
    }
    std::array<double, kBins> smooth{};
    for (int i = 0; i < kBins; ++i) {
        smooth[static_cast<std::size_t>(i)] =
            (i > 0 ? counts[static_cast<std::size_t>(i - 1)] : 0.0) +
            2.0 * counts[static_cast<std::size_t>(i)] +
            (i < kBins - 1 ? counts[static_cast<std::size_t>(i + 1)] : 0.0);
    }

    std::vector<std::pair<double, int>> maxima; // (height, bin)
    for (int i = 0; i < kBins; ++i) {
        const double here = smooth[static_cast<std::size_t>(i)];
        if (here <= 0.0) continue;
        const double left = i > 0 ? smooth[static_cast<std::size_t>(i - 1)] : -1.0;
        const double right = i < kBins - 1 ? smooth[static_cast<std::size_t>(i + 1)] : -1.0;
        if (here >= left && here >= right) maxima.emplace_back(here, i);
    }
    std::sort(maxima.begin(), maxima.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    const double min_separation = (hi - lo) / (4.0 * k);
    std::vector<double> means;
    for (const auto& [height, bin] : maxima) {
        if (means.size() == static_cast<std::size_t>(k)) break;
        const double center = lo + (bin + 0.5) * width;
        bool ok = true;
        for (double m : means)
            if (std::abs(m - center) < min_separation) ok = false;
        if (ok) means.push_back(center);
    }
    for (double q : quantile_means(sorted, k)) {
        if (means.size() == static_cast<std::size_t>(k)) break;
        means.push_back(q);
    }
    return means;
}

EmRun run_em(const std::vector<double>& points, const std::vector<double>& init_means,
             double init_variance, double tolerance, int max_iterations) {
    const std::size_t n = points.size();
    const auto k = init_means.size();

    EmRun run;
    run.components.resize(k);
    for (std::size_t j = 0; j < k; ++j)
        run.components[j] = {1.0 / static_cast<double>(k), init_means[j], init_variance};

    run.posteriors.assign(n, std::vector<double>(static_cast<std::size_t>(k), 0.0));
    double prev_log_likelihood = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < max_iterations; ++iter) {
        // E step
        double log_likelihood = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto& row = run.posteriors[i];
            double row_max = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < run.components.size(); ++j) {
                const auto& c = run.components[j];
                row[j] = std::log(c.weight) + normal_log_pdf(points[i], c.mean, c.variance);
                row_max = std::max(row_max, row[j]);
            }
            double sum = 0.0;
            for (double v : row) sum += std::exp(v - row_max);
            const double log_norm = row_max + std::log(sum);
            for (double& v : row) v = std::exp(v - log_norm);
            log_likelihood += log_norm;
        }

        // The log-likelihood may never decrease between iterations.
        if (log_likelihood + 1e-7 * (1.0 + std::abs(log_likelihood)) < prev_log_likelihood)
            throw CalibrationError("EM log-likelihood decreased");
        run.log_likelihood = log_likelihood;
        run.iterations = iter + 1;
        if (std::abs(log_likelihood - prev_log_likelihood) < tolerance) {
            run.degenerate = components_collapsed(run.components);
            return run;
        }
        prev_log_likelihood = log_likelihood;

        // M step
        for (std::size_t j = 0; j < run.components.size(); ++j) {
            double resp = 0.0, mean_acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                resp += run.posteriors[i][j];
                mean_acc += run.posteriors[i][j] * points[i];
            }
            if (resp < min_component_support(n) && run.components.size() > 1) {
                run.degenerate = true;
                return run;
            }
            if (resp < 1e-10) { // single remaining component starved of mass
                run.degenerate = true;
                return run;
            }
            const double mean = mean_acc / resp;
            double var_acc = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                var_acc += run.posteriors[i][j] * (points[i] - mean) * (points[i] - mean);
            double variance = var_acc / resp;
            if (variance < kVarianceFloor) {
                if (run.components.size() > 1) {
                    run.degenerate = true;
                    return run;
                }
                variance = kVarianceFloor;
            }
            run.components[j] = {resp / static_cast<double>(n), mean, variance};
        }

        // collapsed pairs only drift closer; give the components a short
        // warmup to spread out, then abort instead of converging slowly
        if (iter >= 25 && components_collapsed(run.components)) {
            run.degenerate = true;
            return run;
        }
    }
    run.degenerate = components_collapsed(run.components);
    return run;
}

} // namespace

const char* family_name(Family f) {
    switch (f) {
        case Family::logistic: return "logistic";
        case Family::lognormal: return "lognormal";
        case Family::gamma: return "gamma";
    }
    return "unknown";
}

std::optional<Family> family_from_name(std::string_view name) {
    if (name == "logistic") return Family::logistic;
    if (name == "lognormal") return Family::lognormal;
    if (name == "gamma") return Family::gamma;
    return std::nullopt;
}

void WalkSpeedModel::validate() const {
    if (components.empty()) throw CalibrationError("walk-speed model has no components");
    double total = 0.0;
    for (const auto& c : components) {
        if (c.weight <= 0.0) throw CalibrationError("mixture weight must be positive");
        if (c.p2 < 0.0) throw CalibrationError("scale parameter must be nonnegative");
        if (c.family == Family::gamma && c.p1 <= 0.0)
            throw CalibrationError("gamma shape must be positive");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw CalibrationError("mixture weights must sum to 1");
    for (const auto& [gate, d] : gate_distances)
        if (d <= 0.0) throw CalibrationError("gate distance must be positive: " + gate);
}

double WalkSpeedModel::sample_speed(RngStream& rng) const {
    if (components.empty()) throw CalibrationError("walk-speed model has no components");
    double total = 0.0;
    for (const auto& c : components) total += c.weight;

    for (int attempt = 0; attempt < 100; ++attempt) {
        const double u = rng.uniform() * total;
        double cum = 0.0;
        const MixtureComponent* picked = &components.back();
        for (const auto& c : components) {
            cum += c.weight;
            if (u < cum) {
                picked = &c;
                break;
            }
        }
        double v = 0.0;
        switch (picked->family) {
            case Family::logistic:
                v = picked->p2 == 0.0 ? picked->p1 : rng.logistic(picked->p1, picked->p2);
                break;
            case Family::lognormal:
                v = picked->p2 == 0.0 ? std::exp(picked->p1)
                                      : rng.lognormal(picked->p1, picked->p2);
                break;
            case Family::gamma:
                v = rng.gamma(picked->p1, picked->p2);
                break;
        }
        if (v > 0.0) return v;
    }
    throw CalibrationError("walk-speed mixture produced 100 consecutive nonpositive draws");
}

double sample_walk_time(const WalkSpeedModel& model, const std::string& gate, RngStream& rng) {
    auto it = model.gate_distances.find(gate);
    if (it == model.gate_distances.end())
        throw CalibrationError("unknown gate '" + gate + "' in walk-speed model");
    return it->second / model.sample_speed(rng);
}

std::vector<double> walk_times_to_speeds(const std::vector<ingest::WalkObservation>& observations,
                                         const std::map<std::string, double>& distances,
                                         std::size_t* missing_distance) {
    if (distances.empty()) throw ConfigError("gate distance table is empty");
    std::size_t missing = 0;
    std::vector<double> speeds;
    speeds.reserve(observations.size());
    for (const auto& obs : observations) {
        auto it = distances.find(obs.gate);
        if (it == distances.end()) {
            ++missing;
            continue;
        }
        speeds.push_back(it->second / obs.walk_time_s);
    }
    if (missing_distance) *missing_distance = missing;
    return speeds;
}

EmResult em_cluster(const std::vector<double>& points, int max_components, double tolerance,
                    int max_iterations) {
    if (points.size() < 2) throw CalibrationError("EM clustering needs at least 2 points");
    if (max_components < 1) throw CalibrationError("max_components must be at least 1");

    std::vector<double> sorted(points);
    std::sort(sorted.begin(), sorted.end());
    const double var_all =
        std::max(sample_variance(points, sample_mean(points)), kVarianceFloor);

    // Per K, try a histogram-peak seeding and a quantile seeding and keep the
    // higher-likelihood run; if every seeding collapses, retry with K-1.
    auto best_run_for = [&](int k) {
        EmRun best_k;
        bool have = false;
        const double init_var = std::max(var_all / (static_cast<double>(k) * k), kVarianceFloor);
        for (const auto& init :
             {histogram_peak_means(sorted, k), quantile_means(sorted, k)}) {
            EmRun run = run_em(points, init, init_var, tolerance, max_iterations);
            if (run.degenerate) continue;
            if (!have || run.log_likelihood > best_k.log_likelihood) {
                best_k = std::move(run);
                have = true;
            }
        }
        if (!have) best_k.degenerate = true;
        return best_k;
    };

    EmResult best;
    bool have_best = false;
    for (int k = 1; k <= max_components; ++k) {
        EmRun run;
        for (int kk = k; kk >= 1; --kk) {
            // a single component never degenerates: its variance is floored
            run = best_run_for(kk);
            if (!run.degenerate) break;
        }
        const auto k_eff = static_cast<double>(run.components.size());
        const double aic = 2.0 * (3.0 * k_eff - 1.0) - 2.0 * run.log_likelihood;
        if (!have_best || aic < best.aic) {
            best = {std::move(run.components), std::move(run.posteriors), run.log_likelihood,
                    aic, run.iterations};
            have_best = true;
        }
    }
    return best;
}

std::vector<ClusterAssignment> assign_clusters(const std::vector<std::vector<double>>& posteriors,
                                               double threshold) {
    std::vector<ClusterAssignment> out;
    for (std::size_t i = 0; i < posteriors.size(); ++i) {
        const auto& row = posteriors[i];
        if (row.empty()) continue;
        std::size_t argmax = 0;
        for (std::size_t j = 1; j < row.size(); ++j)
            if (row[j] > row[argmax]) argmax = j;
        for (std::size_t j = 0; j < row.size(); ++j)
            if (row[j] > threshold || j == argmax)
                out.push_back({static_cast<int>(i), static_cast<int>(j), row[j]});
    }
    return out;
}

FamilyFit fit_component(const std::vector<double>& cluster_points, Family family) {
    const std::size_t n = cluster_points.size();
    if (n < 3) throw CalibrationError("component fit needs at least 3 points");
    const auto nd = static_cast<double>(n);
    const double mean = sample_mean(cluster_points);
    const double variance = sample_variance(cluster_points, mean);

    FamilyFit fit;
    switch (family) {
        case Family::lognormal: {
            double sum_log = 0.0;
            for (double x : cluster_points) {
                if (x <= 0.0)
                    throw CalibrationError("lognormal is infeasible for nonpositive data");
                sum_log += std::log(x);
            }
            const double mu = sum_log / nd;
            double v = 0.0;
            for (double x : cluster_points) v += (std::log(x) - mu) * (std::log(x) - mu);
            v /= nd;
            if (v < 1e-12) throw CalibrationError("lognormal fit degenerate: zero variance");
            fit.p1 = mu;
            fit.p2 = std::sqrt(v);
            fit.log_likelihood = -0.5 * nd * std::log(2.0 * kPi * v) - sum_log - 0.5 * nd;
            break;
        }
        case Family::gamma: {
            double sum_log = 0.0;
            for (double x : cluster_points) {
                if (x <= 0.0) throw CalibrationError("gamma is infeasible for nonpositive data");
                sum_log += std::log(x);
            }
            const double s = std::log(mean) - sum_log / nd;
            if (s < 1e-12) throw CalibrationError("gamma fit degenerate: zero variance");
            double k = (3.0 - s + std::sqrt((s - 3.0) * (s - 3.0) + 24.0 * s)) / (12.0 * s);
            for (int it = 0; it < 100; ++it) {
                const double f = std::log(k) - digamma(k) - s;
                const double fp = 1.0 / k - trigamma(k);
                const double step = f / fp;
                k -= step;
                if (k <= 0.0) k = 1e-8;
                if (std::abs(step) < 1e-12 * (1.0 + k)) break;
            }
            const double theta = mean / k;
            fit.p1 = k;
            fit.p2 = theta;
            fit.log_likelihood =
                (k - 1.0) * sum_log - nd * k - nd * k * std::log(theta) - nd * std::lgamma(k);
            break;
        }
        case Family::logistic: {
            if (variance < 1e-12)
                throw CalibrationError("logistic fit degenerate: zero variance");
            const double s0 = std::sqrt(3.0 * variance) / kPi;
            auto nll = [&](std::array<double, 2> p) {
                const double loc = p[0], scale = std::exp(p[1]);
                double acc = 0.0;
                for (double x : cluster_points) {
                    const double z = (x - loc) / scale;
                    acc += z + std::log(scale) + 2.0 * softplus(-z);
                }
                return acc;
            };
            const auto p = nelder_mead_2d(nll, {mean, std::log(s0)}, 500);
            fit.p1 = p[0];
            fit.p2 = std::exp(p[1]);
            fit.log_likelihood = -nll(p);
            break;
        }
    }
    fit.aic = 2.0 * 2.0 - 2.0 * fit.log_likelihood;
    return fit;
}

std::map<Family, FamilyFit> fit_all_families(const std::vector<double>& cluster_points) {
    std::map<Family, FamilyFit> fits;
    for (Family f : {Family::logistic, Family::lognormal, Family::gamma}) {
        try {
            fits.emplace(f, fit_component(cluster_points, f));
        } catch (const CalibrationError&) {
            // family infeasible for this cluster
        }
    }
    return fits;
}

Family select_family(const std::map<Family, FamilyFit>& reports) {
    if (reports.empty()) throw CalibrationError("no feasible family to select from");
    bool have = false;
    Family best = Family::logistic;
    double best_aic = 0.0;
    for (Family f : {Family::logistic, Family::lognormal, Family::gamma}) {
        auto it = reports.find(f);
        if (it == reports.end()) continue;
        if (!have || it->second.aic < best_aic) {
            best = f;
            best_aic = it->second.aic;
            have = true;
        }
    }
    return best;
}

WalkSpeedModel build_walk_speed_model(const std::vector<double>& speeds,
                                      const std::map<std::string, double>& distances,
                                      std::vector<FitReport>* reports, int max_components) {
    if (speeds.size() < 10)
        throw CalibrationError("walk-speed calibration needs at least 10 speed points");

    const EmResult em = em_cluster(speeds, max_components);
    const auto assignments = assign_clusters(em.posteriors);

    std::vector<std::vector<double>> cluster_points(em.components.size());
    for (const auto& a : assignments)
        cluster_points[static_cast<std::size_t>(a.component_index)].push_back(
            speeds[static_cast<std::size_t>(a.point_index)]);

    WalkSpeedModel model;
    std::vector<FitReport> out_reports;
    for (std::size_t j = 0; j < em.components.size(); ++j) {
        auto fits = fit_all_families(cluster_points[j]);
        if (fits.empty()) continue; // cluster too small or constant: dropped
        const Family selected = select_family(fits);
        const FamilyFit& ff = fits.at(selected);
        model.components.push_back({em.components[j].weight, selected, ff.p1, ff.p2});
        out_reports.push_back({static_cast<int>(j), std::move(fits), selected});
    }
    if (model.components.empty())
        throw CalibrationError("no cluster produced a feasible component fit");

    double total = 0.0;
    for (const auto& c : model.components) total += c.weight;
    for (auto& c : model.components) c.weight /= total;

    model.gate_distances = distances;
    model.validate();
    if (reports) *reports = std::move(out_reports);
    return model;
}

void ServiceRateModel::validate() const {
    if (per_desk_rates.empty()) throw CalibrationError("service-rate model is empty");
    if (window_seconds <= 0.0) throw CalibrationError("service-rate window must be positive");
    for (double r : per_desk_rates)
        if (r <= 0.0) throw CalibrationError("per-desk service rates must be positive");
}

double ServiceRateModel::sample(RngStream& rng) const {
    if (per_desk_rates.empty()) throw CalibrationError("service-rate model is empty");
    auto i = static_cast<std::size_t>(rng.uniform() *
                                      static_cast<double>(per_desk_rates.size()));
    if (i >= per_desk_rates.size()) i = per_desk_rates.size() - 1;
    return per_desk_rates[i];
}

double ServiceRateModel::mean() const {
    return std::accumulate(per_desk_rates.begin(), per_desk_rates.end(), 0.0) /
           static_cast<double>(per_desk_rates.size());
}

ServiceRateModel estimate_desk_service_rate(const std::vector<ingest::StampRecord>& stamps,
                                            const std::map<UtcSeconds, int>& open_desks,
                                            const CongestionFilter& filter) {
    if (filter.window_seconds <= 0) throw ConfigError("service-rate window must be positive");

    std::map<UtcSeconds, int> stamps_per_window;
    for (const auto& s : stamps) ++stamps_per_window[bin_floor(s.timestamp, filter.window_seconds)];

    std::vector<UtcSeconds> retained;
    if (filter.mode == CongestionFilter::Mode::min_wait) {
        for (const auto& [w, count] : stamps_per_window) {
            auto it = filter.wait_estimates.find(w);
            if (it != filter.wait_estimates.end() && it->second >= filter.min_wait_seconds)
                retained.push_back(w);
        }
    } else {
        if (filter.top_k_days < 1) throw ConfigError("top_k_days must be at least 1");
        // Rank days by mean wait estimate when available, otherwise by stamp
        // volume as a congestion proxy.
        std::map<UtcSeconds, double> day_score;
        if (!filter.wait_estimates.empty()) {
            std::map<UtcSeconds, std::pair<double, int>> acc;
            for (const auto& [w, wait] : filter.wait_estimates) {
                auto& [sum, cnt] = acc[day_start(w)];
                sum += wait;
                ++cnt;
            }
            for (const auto& [day, sc] : acc) day_score[day] = sc.first / sc.second;
        } else {
            for (const auto& [w, count] : stamps_per_window)
                day_score[day_start(w)] += static_cast<double>(count);
        }
        std::vector<std::pair<UtcSeconds, double>> ranked(day_score.begin(), day_score.end());
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        std::set<UtcSeconds> selected_days;
        for (std::size_t i = 0; i < ranked.size() &&
                                i < static_cast<std::size_t>(filter.top_k_days); ++i)
            selected_days.insert(ranked[i].first);
        for (const auto& [w, count] : stamps_per_window)
            if (selected_days.count(day_start(w))) retained.push_back(w);
    }
    if (retained.empty())
        throw CalibrationError("no congested window passes the service-rate filter");

    ServiceRateModel model;
    model.window_seconds = static_cast<double>(filter.window_seconds);
    model.source_windows = retained;
    for (UtcSeconds w : retained) {
        auto it = open_desks.find(w);
        if (it == open_desks.end() || it->second <= 0)
            throw CalibrationError("no open-desk count for retained window " +
                                   format_iso8601_utc(w));
        model.per_desk_rates.push_back(static_cast<double>(stamps_per_window.at(w)) /
                                       static_cast<double>(it->second));
    }

    if (filter.hourly_max) {
        std::map<int, double> best;
        for (std::size_t i = 0; i < retained.size(); ++i) {
            const int hour = hour_of_day(retained[i]);
            auto it = best.find(hour);
            if (it == best.end() || model.per_desk_rates[i] > it->second)
                best[hour] = model.per_desk_rates[i];
        }
        model.per_desk_rates.clear();
        for (const auto& [hour, rate] : best) model.per_desk_rates.push_back(rate);
    }

    model.validate();
    return model;
}

double service_rate_at(const ServiceRateModel& model, const engine::StaffingSchedule& staffing,
                       double t, RngStream& rng) {
    const int desks = staffing.count_at(t);
    if (desks == 0) return 0.0;
    return static_cast<double>(desks) * model.sample(rng);
}

} // namespace paxflow::calibrate
