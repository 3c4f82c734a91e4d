#pragma once

// Shared helpers for the test binaries: independent oracles (Erlang C,
// Simpson quadrature), small statistics, and process/file utilities for the
// CLI tests. Everything here is test-only and independent of the library's
// implementation paths.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace testsupport {

inline double mean(const std::vector<double>& xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double variance(const std::vector<double>& xs) {
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return acc / static_cast<double>(xs.size());
}

// Erlang C: probability an arrival waits in an M/M/c queue with offered load
// a = lambda/mu. Computed through the Erlang B recurrence for stability.
inline double erlang_c_probability(int servers, double offered_load) {
    double b = 1.0;
    for (int k = 1; k <= servers; ++k)
        b = offered_load * b / (static_cast<double>(k) + offered_load * b);
    const double rho = offered_load / static_cast<double>(servers);
    return b / (1.0 - rho * (1.0 - b));
}

// Mean wait in queue for M/M/c (time units of 1/mu and matching lambda).
inline double erlang_c_mean_wait(double lambda, double mu, int servers) {
    const double a = lambda / mu;
    const double c_prob = erlang_c_probability(servers, a);
    return c_prob / (static_cast<double>(servers) * mu - lambda);
}

// Composite Simpson integration on [lo, hi].
template <typename F>
double simpson(F f, double lo, double hi, int intervals) {
    if (intervals % 2 != 0) ++intervals;
    const double h = (hi - lo) / intervals;
    double acc = f(lo) + f(hi);
    for (int i = 1; i < intervals; ++i)
        acc += f(lo + h * i) * (i % 2 == 0 ? 2.0 : 4.0);
    return acc * h / 3.0;
}

// Unique scratch directory under the system temp dir; removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0;; ++i) {
            auto candidate = base / (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(i));
            std::error_code ec;
            if (std::filesystem::create_directories(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string cli_binary() {
    if (const char* bin = std::getenv("PAXFLOW_BIN")) return bin;
#ifdef PAXFLOW_BIN_DEFAULT
    return PAXFLOW_BIN_DEFAULT;
#else
    return "paxflow";
#endif
}

// Runs the CLI binary; returns the process exit code.
inline int run_cli(const std::string& args) {
    const std::string cmd = cli_binary() + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (status < 0) return -1;
    return (status >> 8) & 0xff;
}

inline std::filesystem::path fixtures_dir() {
    if (const char* dir = std::getenv("PAXFLOW_FIXTURES")) return dir;
#ifdef PAXFLOW_FIXTURES_DEFAULT
    return PAXFLOW_FIXTURES_DEFAULT;
#else
    return "tests/fixtures";
#endif
}

} // namespace testsupport
