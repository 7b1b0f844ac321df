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
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mapp/common.hpp"

namespace mapp {

/// One frequency label per site; 0 means the site is empty, labels 1..F are
/// operating frequencies. Exactly-one-label-per-site holds by construction.
using Assignment = std::vector<int>;

/// Binary one-hot encoding of an assignment: N*(F+1) bits in QubitLayout order.
using Bitstring = std::vector<std::uint8_t>;

/// Maps variables x_{v,p} to qubit positions: the N empty-site variables come
/// first, then one contiguous F-wide register per site.
struct QubitLayout {
    int n_sites = 0;
    int n_freq = 0;

    int n_qubits() const { return n_sites * (n_freq + 1); }

    /// site in [0, N), freq in [0, F].
    int index(int site, int freq) const {
        if (site < 0 || site >= n_sites || freq < 0 || freq > n_freq)
            throw std::out_of_range("QubitLayout::index: site or frequency out of range");
        if (freq == 0) return site;
        return n_sites + site * n_freq + (freq - 1);
    }

    /// Inverse of index(): returns {site, freq}.
    std::pair<int, int> site_freq(int qubit) const {
        if (qubit < 0 || qubit >= n_qubits())
            throw std::out_of_range("QubitLayout::site_freq: qubit out of range");
        if (qubit < n_sites) return {qubit, 0};
        int rest = qubit - n_sites;
        return {rest / n_freq, rest % n_freq + 1};
    }
};

struct Site {
    double x = 0;
    double y = 0;
    double r = 0;
};

/// One nonzero interference coefficient for a site pair: frequency p at the
/// lower-indexed site, q at the higher-indexed one.
struct OverlapEntry {
    int p = 0;
    int q = 0;
    double value = 0;
};

struct PairOverlap {
    int v = 0; // v < u
    int u = 0;
    std::vector<OverlapEntry> entries;
};

/// A full problem instance. Immutable after finalize(); safe to share across
/// concurrent solver runs.
struct Instance {
    int n_sites = 0;
    int n_freq = 1;
    int n_antennas = 0;
    double alpha = 0;
    std::vector<Site> sites;            // empty for purely synthetic instances
    std::vector<double> areas;          // coverage area per site
    std::vector<PairOverlap> overlaps;  // sparse, v < u, nonzero entries only

    // pair_ids[v] lists indices into overlaps touching site v (built by finalize).
    std::vector<std::vector<int>> pair_ids;

    QubitLayout layout() const { return QubitLayout{n_sites, n_freq}; }
    int n_qubits() const { return n_sites * (n_freq + 1); }

    /// Validates invariants and builds the per-site pair index.
    void finalize() {
        if (n_sites <= 0) throw std::invalid_argument("Instance: n_sites must be positive");
        if (n_freq < 1) throw std::invalid_argument("Instance: n_freq must be >= 1");
        if (n_antennas < 0 || n_antennas > n_sites)
            throw std::invalid_argument("Instance: need 0 <= n_antennas <= n_sites");
        if (alpha < 0) throw std::invalid_argument("Instance: alpha must be >= 0");
        if (static_cast<int>(areas.size()) != n_sites)
            throw std::invalid_argument("Instance: areas size mismatch");
        for (double a : areas)
            if (a < 0) throw std::invalid_argument("Instance: negative area");
        if (!sites.empty() && static_cast<int>(sites.size()) != n_sites)
            throw std::invalid_argument("Instance: sites size mismatch");
        pair_ids.assign(n_sites, {});
        for (std::size_t i = 0; i < overlaps.size(); ++i) {
            const PairOverlap& po = overlaps[i];
            if (po.v < 0 || po.u <= po.v || po.u >= n_sites)
                throw std::invalid_argument("Instance: overlap pair must satisfy 0 <= v < u < N");
            for (const OverlapEntry& e : po.entries) {
                if (e.p < 1 || e.p > n_freq || e.q < 1 || e.q > n_freq)
                    throw std::invalid_argument("Instance: overlap frequency out of range");
                if (e.value < 0) throw std::invalid_argument("Instance: negative overlap");
            }
            pair_ids[po.v].push_back(static_cast<int>(i));
            pair_ids[po.u].push_back(static_cast<int>(i));
        }
    }

    /// Interference coefficient between site a at frequency pa and site b at
    /// frequency pb. Zero if either is empty or no entry is stored.
    double overlap_value(int a, int b, int pa, int pb) const {
        if (pa < 1 || pb < 1) return 0.0;
        if (a > b) {
            std::swap(a, b);
            std::swap(pa, pb);
        }
        for (int id : pair_ids[a]) {
            const PairOverlap& po = overlaps[id];
            if (po.v != a || po.u != b) continue;
            for (const OverlapEntry& e : po.entries)
                if (e.p == pa && e.q == pb) return e.value;
            return 0.0;
        }
        return 0.0;
    }

    /// True when every stored pair carries exactly the diagonal entries
    /// (p, p, w) for p = 1..F with one common weight w.
    bool frequency_diagonal() const {
        for (const PairOverlap& po : overlaps) {
            if (static_cast<int>(po.entries.size()) != n_freq) return false;
            for (const OverlapEntry& e : po.entries) {
                if (e.p != e.q) return false;
                if (e.value != po.entries.front().value) return false;
            }
        }
        return true;
    }
};

/// Area of the intersection of two discs with radii r1, r2 and center
/// distance d (the circular lens).
inline double disc_overlap_area(double r1, double r2, double d) {
    if (d >= r1 + r2) return 0.0;
    double rmin = std::min(r1, r2);
    if (d <= std::abs(r1 - r2)) return std::numbers::pi * rmin * rmin;
    double c1 = (d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1);
    double c2 = (d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2);
    c1 = std::clamp(c1, -1.0, 1.0);
    c2 = std::clamp(c2, -1.0, 1.0);
    double kite = 0.5 * std::sqrt(std::max(0.0, (-d + r1 + r2) * (d + r1 - r2) *
                                                    (d - r1 + r2) * (d + r1 + r2)));
    return r1 * r1 * std::acos(c1) + r2 * r2 * std::acos(c2) - kite;
}

struct GeometryParams {
    double width = 10.0;
    double height = 10.0;
    double r_min = 0.8;
    double r_max = 2.0;
    double alpha_scale = 0.01; // alpha = alpha_scale * max area
};

/// Random planar instance: sites uniform in a box, disc coverage, lens
/// overlaps stored only where discs intersect. Interference is
/// frequency-diagonal: antennas disturb each other only on equal frequencies.
inline Instance generate_instance(int n_sites, int n_freq, int n_antennas, std::uint64_t seed,
                                  const GeometryParams& geom = {}) {
    if (n_sites <= 0 || n_freq < 1 || n_antennas < 0 || n_antennas > n_sites)
        throw std::invalid_argument("generate_instance: invalid sizes");
    if (geom.r_min <= 0 || geom.r_max < geom.r_min)
        throw std::invalid_argument("generate_instance: invalid radius range");
    Rng rng(seed);
    Instance inst;
    inst.n_sites = n_sites;
    inst.n_freq = n_freq;
    inst.n_antennas = n_antennas;
    inst.sites.resize(n_sites);
    inst.areas.resize(n_sites);
    for (int v = 0; v < n_sites; ++v) {
        inst.sites[v].x = rng.uniform(0.0, geom.width);
        inst.sites[v].y = rng.uniform(0.0, geom.height);
        inst.sites[v].r = rng.uniform(geom.r_min, geom.r_max);
        inst.areas[v] = std::numbers::pi * inst.sites[v].r * inst.sites[v].r;
    }
    for (int v = 0; v < n_sites; ++v) {
        for (int u = v + 1; u < n_sites; ++u) {
            double dx = inst.sites[v].x - inst.sites[u].x;
            double dy = inst.sites[v].y - inst.sites[u].y;
            double d = std::hypot(dx, dy);
            double w = disc_overlap_area(inst.sites[v].r, inst.sites[u].r, d);
            if (w <= 0.0) continue;
            PairOverlap po;
            po.v = v;
            po.u = u;
            for (int p = 1; p <= n_freq; ++p) po.entries.push_back({p, p, w});
            inst.overlaps.push_back(std::move(po));
        }
    }
    double max_area = *std::max_element(inst.areas.begin(), inst.areas.end());
    inst.alpha = geom.alpha_scale * max_area;
    inst.finalize();
    return inst;
}

inline void check_labels(const Instance& inst, const Assignment& a) {
    if (static_cast<int>(a.size()) != inst.n_sites)
        throw std::invalid_argument("assignment length mismatch");
    for (int f : a)
        if (f < 0 || f > inst.n_freq)
            throw std::out_of_range("assignment label out of range");
}

/// Objective value: pairwise interference minus covered area plus the
/// frequency tie-break term. Defined on any label vector, feasible or not.
inline double cost(const Instance& inst, const Assignment& a) {
    check_labels(inst, a);
    double c = 0.0;
    for (const PairOverlap& po : inst.overlaps) {
        int fv = a[po.v];
        int fu = a[po.u];
        if (fv < 1 || fu < 1) continue;
        for (const OverlapEntry& e : po.entries)
            if (e.p == fv && e.q == fu) c += e.value;
    }
    for (int v = 0; v < inst.n_sites; ++v) {
        int f = a[v];
        if (f >= 1) c -= inst.areas[v];
        if (f >= 2) c += inst.alpha * f;
    }
    return c;
}

inline int cardinality(const Assignment& a) {
    int k = 0;
    for (int f : a)
        if (f > 0) ++k;
    return k;
}

inline bool is_feasible(const Instance& inst, const Assignment& a) {
    if (static_cast<int>(a.size()) != inst.n_sites) return false;
    for (int f : a)
        if (f < 0 || f > inst.n_freq) return false;
    return cardinality(a) == inst.n_antennas;
}

/// Both constraint families on the raw encoding: one-hot per site block and
/// exactly k antennas in total.
inline bool is_feasible_bits(const Instance& inst, const Bitstring& bits) {
    QubitLayout layout = inst.layout();
    if (static_cast<int>(bits.size()) != layout.n_qubits())
        throw std::invalid_argument("is_feasible_bits: length mismatch");
    int antennas = 0;
    for (int v = 0; v < inst.n_sites; ++v) {
        int ones = bits[layout.index(v, 0)];
        for (int p = 1; p <= inst.n_freq; ++p) {
            int b = bits[layout.index(v, p)];
            ones += b;
            antennas += b;
        }
        if (ones != 1) return false;
    }
    return antennas == inst.n_antennas;
}

inline Bitstring assignment_to_bits(const QubitLayout& layout, const Assignment& a) {
    if (static_cast<int>(a.size()) != layout.n_sites)
        throw std::invalid_argument("assignment_to_bits: length mismatch");
    Bitstring bits(layout.n_qubits(), 0);
    for (int v = 0; v < layout.n_sites; ++v) {
        if (a[v] < 0 || a[v] > layout.n_freq)
            throw std::out_of_range("assignment_to_bits: label out of range");
        bits[layout.index(v, a[v])] = 1;
    }
    return bits;
}

/// Requires one-hot site blocks; the cardinality constraint is not checked.
inline Assignment bits_to_assignment(const QubitLayout& layout, const Bitstring& bits) {
    if (static_cast<int>(bits.size()) != layout.n_qubits())
        throw std::invalid_argument("bits_to_assignment: length mismatch");
    Assignment a(layout.n_sites, -1);
    for (int v = 0; v < layout.n_sites; ++v) {
        for (int p = 0; p <= layout.n_freq; ++p) {
            if (!bits[layout.index(v, p)]) continue;
            if (a[v] != -1)
                throw std::invalid_argument("bits_to_assignment: site block not one-hot");
            a[v] = p;
        }
        if (a[v] == -1) throw std::invalid_argument("bits_to_assignment: site block not one-hot");
    }
    return a;
}

namespace detail {
inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b, const char* what) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error(what);
    return r;
}
inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b, const char* what) {
    std::uint64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error(what);
    return r;
}
} // namespace detail

/// C(n, k) with overflow detection.
inline std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::vector<std::uint64_t> row(static_cast<std::size_t>(k) + 1, 0);
    row[0] = 1;
    for (int i = 1; i <= n; ++i)
        for (int j = std::min(i, k); j >= 1; --j)
            row[j] = detail::checked_add(row[j], row[j - 1], "binomial overflow");
    return row[k];
}

/// Number of feasible configurations: C(N, k) * F^k, exact or overflow error.
inline std::uint64_t feasible_space_size(int n_sites, int n_freq, int n_antennas) {
    if (n_antennas < 0 || n_antennas > n_sites)
        throw std::invalid_argument("feasible_space_size: need 0 <= k <= N");
    if (n_freq < 1) throw std::invalid_argument("feasible_space_size: need F >= 1");
    std::uint64_t size = binomial(n_sites, n_antennas);
    for (int i = 0; i < n_antennas; ++i)
        size = detail::checked_mul(size, static_cast<std::uint64_t>(n_freq),
                                   "feasible_space_size overflow");
    return size;
}

/// Antenna count maximizing the feasible-space size at fixed N and F.
inline int optimal_k(int n_sites, int n_freq) {
    if (n_sites < 1 || n_freq < 1) throw std::invalid_argument("optimal_k: need N, F >= 1");
    return static_cast<int>((static_cast<long long>(n_freq) * (n_sites + 1)) / (n_freq + 1));
}

} // namespace mapp
