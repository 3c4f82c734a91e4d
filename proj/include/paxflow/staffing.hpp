#pragma once

#include "paxflow/errors.hpp"
#include "paxflow/time_utils.hpp"

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

namespace paxflow::engine {

// Piecewise-constant open-desk count c(t): each breakpoint starts a new level
// that holds until the next one. Undefined before the first breakpoint.
struct StaffingSchedule {
    std::vector<std::pair<double, int>> breakpoints; // (start time, desk count)

    void validate() const {
        if (breakpoints.empty()) throw SimulationError("staffing schedule is empty");
        for (std::size_t i = 0; i < breakpoints.size(); ++i) {
            if (breakpoints[i].second < 0)
                throw SimulationError("staffing schedule has a negative desk count");
            if (i > 0 && breakpoints[i].first <= breakpoints[i - 1].first)
                throw SimulationError("staffing breakpoints must be strictly increasing");
        }
    }

    bool covers(double t) const {
        return !breakpoints.empty() && breakpoints.front().first <= t;
    }

    int count_at(double t) const {
        if (!covers(t)) throw SimulationError("staffing schedule undefined at requested time");
        auto it = std::upper_bound(
            breakpoints.begin(), breakpoints.end(), t,
            [](double v, const std::pair<double, int>& bp) { return v < bp.first; });
        return std::prev(it)->second;
    }

    static StaffingSchedule constant(int desks, double from) {
        return StaffingSchedule{{{from, desks}}};
    }

    static StaffingSchedule from_open_desks(const std::map<UtcSeconds, int>& open_desks) {
        StaffingSchedule s;
        for (const auto& [w, c] : open_desks) {
            if (!s.breakpoints.empty() && s.breakpoints.back().second == c) continue;
            s.breakpoints.emplace_back(static_cast<double>(w), c);
        }
        s.validate();
        return s;
    }
};

} // namespace paxflow::engine
