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
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mapp/common.hpp"
#include "mapp/instance.hpp"

namespace mapp {

/// Bijection between {0, ..., C(N,k)*F^k - 1} and feasible assignments.
/// Ordering is lexicographic in (active-site subset, frequency digits): the
/// subset uses the combinatorial number system, and within a subset the
/// frequency labels of the active sites (ascending site order) form base-F
/// digits with the first active site most significant.
class FeasibleBasis {
  public:
    FeasibleBasis(int n_sites, int n_freq, int n_antennas)
        : n_sites_(n_sites), n_freq_(n_freq), n_antennas_(n_antennas) {
        size_ = feasible_space_size(n_sites, n_freq, n_antennas);
        freq_block_ = 1;
        for (int i = 0; i < n_antennas_; ++i)
            freq_block_ *= static_cast<std::uint64_t>(n_freq_);
        // binom_[n][j] = C(n, j) for the subset ranking recurrences.
        binom_.assign(n_sites_ + 1, std::vector<std::uint64_t>(n_antennas_ + 1, 0));
        for (int n = 0; n <= n_sites_; ++n) {
            binom_[n][0] = 1;
            for (int j = 1; j <= std::min(n, n_antennas_); ++j)
                binom_[n][j] = (j == n) ? 1 : binom_[n - 1][j - 1] + binom_[n - 1][j];
        }
    }

    int n_sites() const { return n_sites_; }
    int n_freq() const { return n_freq_; }
    int n_antennas() const { return n_antennas_; }
    std::uint64_t size() const { return size_; }

    Assignment unrank(std::uint64_t index) const {
        if (index >= size_) throw std::out_of_range("FeasibleBasis::unrank: index out of range");
        std::uint64_t subset_rank = index / freq_block_;
        std::uint64_t digits = index % freq_block_;
        Assignment a(n_sites_, 0);
        std::vector<int> active(n_antennas_);
        int start = 0;
        for (int j = 0; j < n_antennas_; ++j) {
            for (int t = start;; ++t) {
                std::uint64_t block = binom_[n_sites_ - 1 - t][n_antennas_ - 1 - j];
                if (subset_rank < block) {
                    active[j] = t;
                    start = t + 1;
                    break;
                }
                subset_rank -= block;
            }
        }
        for (int j = n_antennas_ - 1; j >= 0; --j) {
            a[active[j]] = static_cast<int>(digits % n_freq_) + 1;
            digits /= static_cast<std::uint64_t>(n_freq_);
        }
        return a;
    }

    std::uint64_t rank(const Assignment& a) const {
        if (static_cast<int>(a.size()) != n_sites_)
            throw std::invalid_argument("FeasibleBasis::rank: length mismatch");
        int count = 0;
        for (int f : a) {
            if (f < 0 || f > n_freq_)
                throw std::invalid_argument("FeasibleBasis::rank: label out of range");
            if (f > 0) ++count;
        }
        if (count != n_antennas_)
            throw std::invalid_argument("FeasibleBasis::rank: assignment is not feasible");
        std::uint64_t subset_rank = 0;
        std::uint64_t digits = 0;
        int j = 0;
        int prev = -1;
        for (int v = 0; v < n_sites_; ++v) {
            if (a[v] == 0) continue;
            for (int t = prev + 1; t < v; ++t)
                subset_rank += binom_[n_sites_ - 1 - t][n_antennas_ - 1 - j];
            digits = digits * static_cast<std::uint64_t>(n_freq_) +
                     static_cast<std::uint64_t>(a[v] - 1);
            prev = v;
            ++j;
        }
        return subset_rank * freq_block_ + digits;
    }

  private:
    int n_sites_;
    int n_freq_;
    int n_antennas_;
    std::uint64_t size_ = 0;
    std::uint64_t freq_block_ = 1;
    std::vector<std::vector<std::uint64_t>> binom_;
};

struct SolveResult {
    Assignment best;
    double best_cost = std::numeric_limits<double>::infinity();
    bool optimal = false;
    std::uint64_t nodes = 0;
    double wall_time_s = 0;
    /// All cost-minimal assignments in rank order (brute force only).
    std::vector<Assignment> optimal_set;
};

namespace detail {

// Tolerance for collecting cost ties; exact ties can round differently when
// terms are summed in another order.
inline double tie_eps(double best) { return 1e-9 * (1.0 + std::abs(best)); }

} // namespace detail

/// Exhaustive minimization over the feasible set. Ties are broken by lowest
/// rank; the full optimal set is returned. Refuses instances whose feasible
/// space exceeds the budget.
inline SolveResult solve_brute_force(const Instance& inst, std::uint64_t budget = 100000000ULL) {
    std::uint64_t space = feasible_space_size(inst.n_sites, inst.n_freq, inst.n_antennas);
    if (space > budget)
        throw std::invalid_argument("solve_brute_force: feasible space exceeds budget; "
                                    "use solve_branch_and_bound");
    Stopwatch timer;
    const int n = inst.n_sites;
    const int k = inst.n_antennas;
    const int F = inst.n_freq;

    SolveResult result;
    std::vector<std::pair<std::uint64_t, Assignment>> candidates; // (rank, assignment)
    std::uint64_t rank = 0;

    std::vector<int> active(k);
    std::iota(active.begin(), active.end(), 0);
    Assignment a(n, 0);

    // Per-subset recursion over frequency digits, with the cost built up
    // incrementally (areas, alpha and overlaps against earlier active sites).
    std::vector<double> partial(k + 1, 0.0);
    auto consider = [&](double total) {
        if (candidates.empty() || total < result.best_cost - detail::tie_eps(result.best_cost)) {
            result.best_cost = total;
            candidates.clear();
            candidates.push_back({rank, a});
        } else if (total <= result.best_cost + detail::tie_eps(result.best_cost)) {
            candidates.push_back({rank, a});
        }
        ++rank;
    };
    auto recurse = [&](auto&& self, int j) -> void {
        if (j == k) {
            consider(partial[k]);
            return;
        }
        int v = active[j];
        for (int p = 1; p <= F; ++p) {
            a[v] = p;
            double delta = -inst.areas[v];
            if (p >= 2) delta += inst.alpha * p;
            for (int t = 0; t < j; ++t)
                delta += inst.overlap_value(active[t], v, a[active[t]], p);
            partial[j + 1] = partial[j] + delta;
            self(self, j + 1);
        }
        a[v] = 0;
    };

    bool more = true;
    while (more) {
        recurse(recurse, 0);
        // Next k-subset in lexicographic order.
        more = false;
        for (int j = k - 1; j >= 0; --j) {
            if (active[j] < n - (k - j)) {
                ++active[j];
                for (int t = j + 1; t < k; ++t) active[t] = active[t - 1] + 1;
                more = true;
                break;
            }
        }
        if (k == 0) break;
    }

    // A strictly better candidate may have shrunk the tie window after some
    // earlier borderline entries were kept; filter once more.
    result.optimal_set.clear();
    for (auto& [r, cand] : candidates)
        if (cost(inst, cand) <= result.best_cost + detail::tie_eps(result.best_cost))
            result.optimal_set.push_back(std::move(cand));
    result.best = result.optimal_set.front();
    result.optimal = true;
    result.nodes = space;
    result.wall_time_s = timer.seconds();
    return result;
}

/// Depth-first branch and bound over sites in decreasing-area order. The
/// lower bound ignores future interference and tie-break terms (both
/// nonnegative), subtracting only the best still-collectable areas, so it
/// never overestimates the reachable minimum. On timeout the incumbent is
/// returned with the optimality flag cleared.
inline SolveResult solve_branch_and_bound(
    const Instance& inst, double time_limit_s = std::numeric_limits<double>::infinity()) {
    Stopwatch timer;
    const int n = inst.n_sites;
    const int k = inst.n_antennas;
    const int F = inst.n_freq;

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return inst.areas[a] > inst.areas[b]; });

    // Sites are visited in decreasing-area order, so the r largest areas of
    // the suffix order[d..) are simply the next r in the order.
    std::vector<double> prefix(n + 1, 0.0);
    for (int d = 0; d < n; ++d) prefix[d + 1] = prefix[d] + inst.areas[order[d]];
    auto suffix_gain = [&](int d, int r) { return prefix[std::min(n, d + r)] - prefix[d]; };

    SolveResult result;
    Assignment a(n, 0);
    bool timed_out = false;
    const bool finite_limit = std::isfinite(time_limit_s);

    // Per-depth scratch: (cost increment, label) children, kept sorted by
    // increment so the first dive lands on a strong incumbent.
    std::vector<std::vector<std::pair<double, int>>> scratch(
        n, std::vector<std::pair<double, int>>(F + 1));
    std::vector<double> freq_delta(F + 1, 0.0);

    auto dfs = [&](auto&& self, int depth, int placed, double partial) -> void {
        if (timed_out) return;
        ++result.nodes;
        if (depth == n) {
            if (partial < result.best_cost - 1e-12) {
                result.best_cost = partial;
                result.best = a;
            }
            return;
        }
        if (!result.best.empty()) {
            if (finite_limit && timer.seconds() > time_limit_s) {
                timed_out = true;
                return;
            }
            if (partial - suffix_gain(depth, k - placed) >= result.best_cost - 1e-12) return;
        }
        const int v = order[depth];
        const int remaining = n - depth - 1;
        auto& children = scratch[depth];
        int n_children = 0;
        if (k - placed <= remaining) children[n_children++] = {0.0, 0};
        if (placed < k) {
            // Interference increments against the already-placed antennas,
            // accumulated for all candidate frequencies in one pass over v's
            // overlap neighborhood.
            for (int p = 1; p <= F; ++p) freq_delta[p] = 0.0;
            for (int id : inst.pair_ids[v]) {
                const PairOverlap& po = inst.overlaps[id];
                const int other = po.v == v ? po.u : po.v;
                const int f_other = a[other];
                if (f_other < 1) continue;
                if (po.v == v) {
                    for (const OverlapEntry& e : po.entries)
                        if (e.q == f_other) freq_delta[e.p] += e.value;
                } else {
                    for (const OverlapEntry& e : po.entries)
                        if (e.p == f_other) freq_delta[e.q] += e.value;
                }
            }
            for (int p = 1; p <= F; ++p) {
                double delta = -inst.areas[v] + freq_delta[p];
                if (p >= 2) delta += inst.alpha * p;
                children[n_children++] = {delta, p};
            }
        }
        // Insertion sort: tiny arrays, deterministic (delta, label) order.
        for (int i = 1; i < n_children; ++i) {
            auto key = children[i];
            int j = i - 1;
            while (j >= 0 && children[j].first > key.first) {
                children[j + 1] = children[j];
                --j;
            }
            children[j + 1] = key;
        }
        for (int i = 0; i < n_children; ++i) {
            const auto [delta, p] = children[i];
            a[v] = p;
            self(self, depth + 1, placed + (p > 0 ? 1 : 0), partial + delta);
            a[v] = 0;
            if (timed_out) return;
        }
    };
    dfs(dfs, 0, 0, 0.0);

    result.optimal = !timed_out;
    result.wall_time_s = timer.seconds();
    return result;
}

} // namespace mapp
