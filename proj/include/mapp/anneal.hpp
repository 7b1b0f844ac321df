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
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mapp/common.hpp"
#include "mapp/exact.hpp"
#include "mapp/instance.hpp"
#include "mapp/qubo.hpp"

namespace mapp {

struct AnnealConfig {
    int sweeps = 500;          // one sweep = Q (flip SA) or N (move SA) proposals
    double t_initial = 0;      // <= 0: calibrated from sampled move magnitudes
    double t_final = 0;        // <= 0: 1e-3 * t_initial
    int restarts = 100;
    std::uint64_t seed = 0;
    unsigned workers = 1;      // restarts are embarrassingly parallel

    void validate() const {
        if (sweeps < 1) throw std::invalid_argument("AnnealConfig: sweeps must be >= 1");
        if (restarts < 1) throw std::invalid_argument("AnnealConfig: restarts must be >= 1");
        if (t_initial > 0 && t_final > t_initial)
            throw std::invalid_argument("AnnealConfig: t_final must not exceed t_initial");
    }
};

struct SaResult {
    Bitstring best_bits;      // lowest objective value visited, feasible or not
    double best_value = std::numeric_limits<double>::infinity();
    std::optional<Assignment> best_feasible;
    double best_feasible_cost = std::numeric_limits<double>::infinity();
    double wall_time_s = 0;
};

namespace detail {

inline double temperature_at(int sweep, int sweeps, double t0, double t1) {
    if (sweeps <= 1) return t0;
    return t0 * std::pow(t1 / t0, static_cast<double>(sweep) / (sweeps - 1));
}

} // namespace detail

/// Exact change of the cost when site v is relabeled to p_new, computed from
/// the site's overlap neighborhood only.
inline double delta_cost_onsite(const Instance& inst, const Assignment& a, int v, int p_new) {
    if (v < 0 || v >= inst.n_sites) throw std::out_of_range("delta_cost_onsite: site index");
    if (p_new < 0 || p_new > inst.n_freq)
        throw std::out_of_range("delta_cost_onsite: label out of range");
    const int p_old = a[v];
    if (p_new == p_old) return 0.0;
    double delta = 0.0;
    for (int id : inst.pair_ids[v]) {
        const PairOverlap& po = inst.overlaps[id];
        const int other = po.v == v ? po.u : po.v;
        const int f_other = a[other];
        if (f_other < 1) continue;
        delta += inst.overlap_value(v, other, p_new, f_other) -
                 inst.overlap_value(v, other, p_old, f_other);
    }
    if (p_old >= 1) delta += inst.areas[v];
    if (p_new >= 1) delta -= inst.areas[v];
    if (p_old >= 2) delta -= inst.alpha * p_old;
    if (p_new >= 2) delta += inst.alpha * p_new;
    return delta;
}

/// Exact change of the cost when the labels of sites v and u are swapped.
inline double delta_cost_swap(const Instance& inst, const Assignment& a, int v, int u) {
    if (v < 0 || v >= inst.n_sites || u < 0 || u >= inst.n_sites)
        throw std::out_of_range("delta_cost_swap: site index");
    if (v == u) return 0.0;
    const int pv = a[v];
    const int pu = a[u];
    if (pv == pu) return 0.0;
    double delta = 0.0;
    for (int id : inst.pair_ids[v]) {
        const PairOverlap& po = inst.overlaps[id];
        const int other = po.v == v ? po.u : po.v;
        if (other == u) continue;
        const int f_other = a[other];
        if (f_other < 1) continue;
        delta += inst.overlap_value(v, other, pu, f_other) -
                 inst.overlap_value(v, other, pv, f_other);
    }
    for (int id : inst.pair_ids[u]) {
        const PairOverlap& po = inst.overlaps[id];
        const int other = po.v == u ? po.u : po.v;
        if (other == v) continue;
        const int f_other = a[other];
        if (f_other < 1) continue;
        delta += inst.overlap_value(u, other, pv, f_other) -
                 inst.overlap_value(u, other, pu, f_other);
    }
    delta += inst.overlap_value(v, u, pu, pv) - inst.overlap_value(v, u, pv, pu);
    delta -= inst.areas[v] * ((pu >= 1) - (pv >= 1));
    delta -= inst.areas[u] * ((pv >= 1) - (pu >= 1));
    // The label multiset is preserved, so the tie-break term cancels.
    return delta;
}

/// Single-flip Metropolis annealing on the penalty model. Tracks both the
/// best objective value visited and, separately, the best feasible bitstring
/// across all restarts.
inline SaResult sa_run(const QuboModel& model, const Instance& inst, const AnnealConfig& config) {
    config.validate();
    Stopwatch timer;
    const int q = model.dimension;
    const QubitLayout layout = inst.layout();
    if (q != layout.n_qubits()) throw std::invalid_argument("sa_run: model/instance mismatch");

    // Dense neighbor rows for O(1) flip deltas via cached local fields.
    std::vector<std::vector<std::pair<int, double>>> adj(q);
    for (const auto& [key, w] : model.quadratic) {
        adj[key.first].push_back({key.second, w});
        adj[key.second].push_back({key.first, w});
    }

    std::vector<SaResult> per_restart(config.restarts);
    parallel_for(config.restarts, config.workers, [&](std::size_t restart) {
        Rng rng(derive_seed(config.seed, restart));
        Bitstring x(q);
        for (int i = 0; i < q; ++i) x[i] = rng.coin();
        std::vector<double> field(q, 0.0); // field[i] = sum_j quad(i,j) x_j
        for (int i = 0; i < q; ++i)
            for (const auto& [j, w] : adj[i])
                if (x[j]) field[i] += w;
        double value = qubo_value(model, x);

        // Feasibility bookkeeping in O(1) per flip: per-site one-hot sums
        // plus the global antenna count.
        std::vector<int> site_sum(inst.n_sites, 0);
        std::vector<int> site_of(q), freq_of(q);
        for (int i = 0; i < q; ++i) {
            auto [s, f] = layout.site_freq(i);
            site_of[i] = s;
            freq_of[i] = f;
            if (x[i]) ++site_sum[s];
        }
        int violated = 0;
        for (int s : site_sum)
            if (s != 1) ++violated;
        int antennas = 0;
        for (int i = 0; i < q; ++i)
            if (x[i] && freq_of[i] >= 1) ++antennas;

        SaResult local;
        auto visit = [&]() {
            if (value < local.best_value) {
                local.best_value = value;
                local.best_bits = x;
            }
            if (violated == 0 && antennas == inst.n_antennas &&
                value < local.best_feasible_cost) {
                local.best_feasible_cost = value;
                local.best_feasible = bits_to_assignment(layout, x);
            }
        };
        visit();

        double t0 = config.t_initial;
        if (t0 <= 0) {
            for (int trial = 0; trial < 100; ++trial) {
                int i = rng.below_int(q);
                double d = (x[i] ? -1.0 : 1.0) * (model.linear[i] + field[i]);
                t0 = std::max(t0, std::abs(d));
            }
            if (t0 <= 0) t0 = 1.0;
        }
        double t1 = config.t_final > 0 ? config.t_final : 1e-3 * t0;
        t1 = std::min(t1, t0);

        for (int sweep = 0; sweep < config.sweeps; ++sweep) {
            const double temp = detail::temperature_at(sweep, config.sweeps, t0, t1);
            for (int step = 0; step < q; ++step) {
                const int i = rng.below_int(q);
                const double delta = (x[i] ? -1.0 : 1.0) * (model.linear[i] + field[i]);
                if (delta > 0 && rng.uniform01() >= std::exp(-delta / temp)) continue;
                const double sign = x[i] ? -1.0 : 1.0;
                x[i] ^= 1;
                value += delta;
                for (const auto& [j, w] : adj[i]) field[j] += sign * w;
                const int s = site_of[i];
                const int before = site_sum[s];
                site_sum[s] += x[i] ? 1 : -1;
                if (before == 1 && site_sum[s] != 1) ++violated;
                if (before != 1 && site_sum[s] == 1) --violated;
                if (freq_of[i] >= 1) antennas += x[i] ? 1 : -1;
                visit();
            }
        }
        per_restart[restart] = std::move(local);
    });

    SaResult best;
    for (const SaResult& r : per_restart) {
        if (r.best_value < best.best_value) {
            best.best_value = r.best_value;
            best.best_bits = r.best_bits;
        }
        if (r.best_feasible && r.best_feasible_cost < best.best_feasible_cost) {
            best.best_feasible_cost = r.best_feasible_cost;
            best.best_feasible = r.best_feasible;
        }
    }
    // Accumulated increments can drift; report exactly re-evaluated values.
    if (!best.best_bits.empty()) best.best_value = qubo_value(model, best.best_bits);
    if (best.best_feasible) best.best_feasible_cost = cost(inst, *best.best_feasible);
    best.wall_time_s = timer.seconds();
    return best;
}

/// Constraint-preserving Metropolis annealing on assignments. Proposals
/// alternate uniformly between relabeling one active site and swapping the
/// labels of two sites; both conserve the antenna count, so every visited
/// state is feasible.
inline SolveResult custom_sa_run(const Instance& inst, const AnnealConfig& config) {
    config.validate();
    Stopwatch timer;
    const int n = inst.n_sites;
    const int f = inst.n_freq;

    std::vector<std::pair<double, Assignment>> per_restart(
        config.restarts, {std::numeric_limits<double>::infinity(), {}});
    parallel_for(config.restarts, config.workers, [&](std::size_t restart) {
        Rng rng(derive_seed(config.seed, restart));
        Assignment a;
        try {
            FeasibleBasis basis(n, f, inst.n_antennas);
            a = basis.unrank(rng.below(basis.size()));
        } catch (const std::overflow_error&) {
            // Feasible space beyond 64-bit counting: draw a uniform subset
            // and labels directly.
            a.assign(n, 0);
            std::vector<int> perm(n);
            for (int i = 0; i < n; ++i) perm[i] = i;
            for (int i = 0; i < inst.n_antennas; ++i)
                std::swap(perm[i], perm[i + rng.below_int(n - i)]);
            for (int i = 0; i < inst.n_antennas; ++i) a[perm[i]] = 1 + rng.below_int(f);
        }
        double value = cost(inst, a);
        double best_value = value;
        Assignment best = a;

        double t0 = config.t_initial;
        if (t0 <= 0) {
            for (int trial = 0; trial < 100; ++trial) {
                double d = 0;
                if (rng.coin()) {
                    int v = rng.below_int(n);
                    if (a[v] > 0) d = delta_cost_onsite(inst, a, v, 1 + rng.below_int(f));
                } else {
                    d = delta_cost_swap(inst, a, rng.below_int(n), rng.below_int(n));
                }
                t0 = std::max(t0, std::abs(d));
            }
            if (t0 <= 0) t0 = 1.0;
        }
        double t1 = config.t_final > 0 ? config.t_final : 1e-3 * t0;
        t1 = std::min(t1, t0);

        for (int sweep = 0; sweep < config.sweeps; ++sweep) {
            const double temp = detail::temperature_at(sweep, config.sweeps, t0, t1);
            for (int step = 0; step < n; ++step) {
                if (rng.coin()) {
                    const int v = rng.below_int(n);
                    if (a[v] < 1) continue; // relabeling fires on active sites only
                    const int p_new = 1 + rng.below_int(f);
                    const double delta = delta_cost_onsite(inst, a, v, p_new);
                    if (delta > 0 && rng.uniform01() >= std::exp(-delta / temp)) continue;
                    a[v] = p_new;
                    value += delta;
                } else {
                    const int v = rng.below_int(n);
                    const int u = rng.below_int(n);
                    const double delta = delta_cost_swap(inst, a, v, u);
                    if (delta > 0 && rng.uniform01() >= std::exp(-delta / temp)) continue;
                    std::swap(a[v], a[u]);
                    value += delta;
                }
                if (value < best_value) {
                    best_value = value;
                    best = a;
                }
            }
        }
        per_restart[restart] = {best_value, std::move(best)};
    });

    SolveResult result;
    for (auto& [value, a] : per_restart) {
        if (value < result.best_cost) {
            result.best_cost = value;
            result.best = std::move(a);
        }
    }
    // Accumulated deltas can drift; report the exactly re-evaluated cost.
    result.best_cost = cost(inst, result.best);
    result.nodes = static_cast<std::uint64_t>(config.restarts) * config.sweeps * n;
    result.wall_time_s = timer.seconds();
    return result;
}

} // namespace mapp
