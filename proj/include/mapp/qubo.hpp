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

#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mapp/instance.hpp"

namespace mapp {

/// Quadratic pseudo-boolean objective with soft-penalty constraints folded
/// in: value(x) = constant + sum_i linear_i x_i + sum_{i<j} quadratic_ij x_i x_j.
/// Immutable after construction.
struct QuboModel {
    int dimension = 0;
    std::vector<double> linear;
    std::map<std::pair<int, int>, double> quadratic; // key (i, j) with i < j
    double constant = 0;
    double penalty = 0;

    void add_quadratic(int i, int j, double w) {
        if (i == j) {
            linear[i] += w; // x^2 = x on binaries
            return;
        }
        if (i > j) std::swap(i, j);
        quadratic[{i, j}] += w;
    }
};

/// Soft-penalty reformulation of the constrained problem: the cost polynomial
/// plus penalty * (squared one-hot residual per site + squared cardinality
/// residual), expanded over binary variables.
inline QuboModel to_qubo(const Instance& inst, const QubitLayout& layout, double penalty) {
    if (penalty <= 0) throw std::invalid_argument("to_qubo: penalty must be positive");
    if (layout.n_sites != inst.n_sites || layout.n_freq != inst.n_freq)
        throw std::invalid_argument("to_qubo: layout mismatch");
    QuboModel m;
    m.dimension = layout.n_qubits();
    m.linear.assign(m.dimension, 0.0);
    m.penalty = penalty;

    // Cost polynomial.
    for (const PairOverlap& po : inst.overlaps)
        for (const OverlapEntry& e : po.entries)
            m.add_quadratic(layout.index(po.v, e.p), layout.index(po.u, e.q), e.value);
    for (int v = 0; v < inst.n_sites; ++v) {
        for (int p = 1; p <= inst.n_freq; ++p) m.linear[layout.index(v, p)] -= inst.areas[v];
        for (int p = 2; p <= inst.n_freq; ++p) m.linear[layout.index(v, p)] += inst.alpha * p;
    }

    // One-hot residual per site: (sum_p x_{vp} - 1)^2.
    for (int v = 0; v < inst.n_sites; ++v) {
        for (int p = 0; p <= inst.n_freq; ++p) {
            int i = layout.index(v, p);
            m.linear[i] -= penalty; // (1 - 2) * penalty from the square
            for (int q = p + 1; q <= inst.n_freq; ++q)
                m.add_quadratic(i, layout.index(v, q), 2.0 * penalty);
        }
        m.constant += penalty;
    }

    // Cardinality residual: (sum_{v,p>=1} x_{vp} - k)^2.
    const double k = static_cast<double>(inst.n_antennas);
    std::vector<int> antenna_vars;
    antenna_vars.reserve(static_cast<std::size_t>(inst.n_sites) * inst.n_freq);
    for (int v = 0; v < inst.n_sites; ++v)
        for (int p = 1; p <= inst.n_freq; ++p) antenna_vars.push_back(layout.index(v, p));
    for (std::size_t a = 0; a < antenna_vars.size(); ++a) {
        m.linear[antenna_vars[a]] += penalty * (1.0 - 2.0 * k);
        for (std::size_t b = a + 1; b < antenna_vars.size(); ++b)
            m.add_quadratic(antenna_vars[a], antenna_vars[b], 2.0 * penalty);
    }
    m.constant += penalty * k * k;
    return m;
}

inline double qubo_value(const QuboModel& m, const Bitstring& bits) {
    if (static_cast<int>(bits.size()) != m.dimension)
        throw std::invalid_argument("qubo_value: length mismatch");
    double value = m.constant;
    for (int i = 0; i < m.dimension; ++i)
        if (bits[i]) value += m.linear[i];
    for (const auto& [key, w] : m.quadratic)
        if (bits[key.first] && bits[key.second]) value += w;
    return value;
}

/// Penalty weight proportional (factor c) to the largest coefficient
/// magnitude appearing in the quadratic program.
inline double default_penalty(const Instance& inst, double c = 2.0) {
    double scale = 0.0;
    for (double a : inst.areas) scale = std::max(scale, std::abs(a));
    for (const PairOverlap& po : inst.overlaps)
        for (const OverlapEntry& e : po.entries) scale = std::max(scale, std::abs(e.value));
    scale = std::max(scale, inst.alpha * inst.n_freq);
    if (scale == 0.0) return 1.0;
    return c * scale;
}

/// Largest absolute entry over linear, quadratic and constant terms.
inline double max_norm(const QuboModel& m) {
    double norm = std::abs(m.constant);
    for (double v : m.linear) norm = std::max(norm, std::abs(v));
    for (const auto& [key, w] : m.quadratic) norm = std::max(norm, std::abs(w));
    return norm;
}

/// Same model divided entrywise by its max norm; the bitstring ordering (and
/// hence the argmin) is unchanged.
inline QuboModel normalized(const QuboModel& m) {
    double norm = max_norm(m);
    if (norm == 0.0) throw std::invalid_argument("normalized: zero model");
    QuboModel out = m;
    out.constant /= norm;
    out.penalty /= norm;
    for (double& v : out.linear) v /= norm;
    for (auto& [key, w] : out.quadratic) w /= norm;
    return out;
}

} // namespace mapp
