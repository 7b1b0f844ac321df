// Copyright 2025 The mapp-solve authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace mapp {

/// Per-(instance, method) evaluation record.
struct Metrics {
    std::optional<double> p_feasible;
    std::optional<double> p_success;
    std::optional<double> delta_alpha;
    std::optional<double> best_cost; // absent when no feasible solution was found
    bool feasible = false;
    bool optimal = false;
    double wall_time_s = 0;
};

/// Normalized quality gap versus the reference solver: 1 - C_method / C_ref.
/// Negative values mean the method beat a time-limited reference.
inline double delta_alpha(double cost_method, double cost_reference) {
    if (cost_reference == 0.0)
        throw std::invalid_argument("delta_alpha: reference cost is zero; metric undefined");
    return 1.0 - cost_method / cost_reference;
}

struct BoxStats {
    std::size_t count = 0;
    double median = 0;
    double q1 = 0;
    double q3 = 0;
    double whisker_lo = 0;
    double whisker_hi = 0;
    std::vector<double> outliers; // beyond 1.5 * IQR, ascending
};

/// Linear-interpolation quantile (the "type 7" convention) on sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty data");
    if (sorted.size() == 1) return sorted[0];
    double h = p * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, 0.5);
}

inline BoxStats box_stats(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("box_stats: empty data");
    std::sort(values.begin(), values.end());
    BoxStats b;
    b.count = values.size();
    b.median = quantile_sorted(values, 0.5);
    b.q1 = quantile_sorted(values, 0.25);
    b.q3 = quantile_sorted(values, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr;
    const double hi_fence = b.q3 + 1.5 * iqr;
    b.whisker_lo = b.q3;
    b.whisker_hi = b.q1;
    bool any_inside = false;
    for (double v : values) {
        if (v < lo_fence || v > hi_fence) {
            b.outliers.push_back(v);
        } else {
            if (!any_inside) {
                b.whisker_lo = v;
                any_inside = true;
            }
            b.whisker_hi = v;
        }
    }
    if (!any_inside) {
        b.whisker_lo = b.median;
        b.whisker_hi = b.median;
    }
    return b;
}

} // namespace mapp
