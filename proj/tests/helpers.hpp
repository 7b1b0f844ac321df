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

// Test-only oracles. Everything here evaluates definitions directly (naive
// sums, explicit enumerations, dense matrices) and stays independent of the
// implementation paths it is used to check.

#pragma once

#include <array>
#include <complex>
#include <vector>

#include "mapp/common.hpp"
#include "mapp/instance.hpp"
#include "mapp/qubo.hpp"

namespace test_oracles {

/// Instance with explicit areas and frequency-diagonal overlaps; no geometry.
inline mapp::Instance make_instance(int n_sites, int n_freq, int n_antennas,
                                    std::vector<double> areas,
                                    std::vector<std::tuple<int, int, double>> diag_overlaps,
                                    double alpha) {
    mapp::Instance inst;
    inst.n_sites = n_sites;
    inst.n_freq = n_freq;
    inst.n_antennas = n_antennas;
    inst.alpha = alpha;
    inst.areas = std::move(areas);
    for (auto& [v, u, w] : diag_overlaps) {
        mapp::PairOverlap po;
        po.v = v;
        po.u = u;
        for (int p = 1; p <= n_freq; ++p) po.entries.push_back({p, p, w});
        inst.overlaps.push_back(std::move(po));
    }
    inst.finalize();
    return inst;
}

/// Naive evaluation of the soft-penalty objective straight from its
/// definition: cost polynomial plus penalty * squared residuals.
inline double penalty_form_value(const mapp::Instance& inst, double penalty,
                                 const mapp::Bitstring& bits) {
    const mapp::QubitLayout layout = inst.layout();
    double value = 0;
    // Cost as a polynomial over the raw bits.
    for (const mapp::PairOverlap& po : inst.overlaps)
        for (const mapp::OverlapEntry& e : po.entries)
            if (bits[layout.index(po.v, e.p)] && bits[layout.index(po.u, e.q)])
                value += e.value;
    for (int v = 0; v < inst.n_sites; ++v) {
        for (int p = 1; p <= inst.n_freq; ++p)
            if (bits[layout.index(v, p)]) value -= inst.areas[v];
        for (int p = 2; p <= inst.n_freq; ++p)
            if (bits[layout.index(v, p)]) value += inst.alpha * p;
    }
    // One-hot residuals.
    for (int v = 0; v < inst.n_sites; ++v) {
        int s = 0;
        for (int p = 0; p <= inst.n_freq; ++p) s += bits[layout.index(v, p)];
        value += penalty * (s - 1) * (s - 1);
    }
    // Cardinality residual.
    int antennas = 0;
    for (int v = 0; v < inst.n_sites; ++v)
        for (int p = 1; p <= inst.n_freq; ++p) antennas += bits[layout.index(v, p)];
    value += penalty * (antennas - inst.n_antennas) * (antennas - inst.n_antennas);
    return value;
}

/// Monte Carlo estimate of the intersection area of two discs.
inline double mc_disc_overlap(double r1, double r2, double d, std::uint64_t seed,
                              std::size_t samples) {
    // Sample inside disc 1's bounding box; count points inside both discs.
    mapp::Rng rng(seed);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        double x = rng.uniform(-r1, r1);
        double y = rng.uniform(-r1, r1);
        if (x * x + y * y > r1 * r1) continue;
        double dx = x - d;
        if (dx * dx + y * y <= r2 * r2) ++hits;
    }
    return 4.0 * r1 * r1 * static_cast<double>(hits) / static_cast<double>(samples);
}

/// Every feasible assignment by direct enumeration of all (F+1)^N label
/// vectors (independent of the ranking code).
inline std::vector<mapp::Assignment> enumerate_feasible(int n_sites, int n_freq, int n_antennas) {
    std::vector<mapp::Assignment> out;
    mapp::Assignment a(n_sites, 0);
    auto rec = [&](auto&& self, int v) -> void {
        if (v == n_sites) {
            if (mapp::cardinality(a) == n_antennas) out.push_back(a);
            return;
        }
        for (int p = 0; p <= n_freq; ++p) {
            a[v] = p;
            self(self, v + 1);
        }
        a[v] = 0;
    };
    rec(rec, 0);
    return out;
}

/// Random feasible assignment drawn without the ranking code.
inline mapp::Assignment random_feasible(const mapp::Instance& inst, mapp::Rng& rng) {
    mapp::Assignment a(inst.n_sites, 0);
    std::vector<int> perm(inst.n_sites);
    for (int i = 0; i < inst.n_sites; ++i) perm[i] = i;
    for (int i = 0; i < inst.n_antennas; ++i)
        std::swap(perm[i], perm[i + rng.below_int(inst.n_sites - i)]);
    for (int i = 0; i < inst.n_antennas; ++i) a[perm[i]] = 1 + rng.below_int(inst.n_freq);
    return a;
}

// ---------------------------------------------------------------------------
// Dense linear algebra over small complex matrices (row-major vectors).
// ---------------------------------------------------------------------------

using CMatrix = std::vector<std::complex<double>>; // dim x dim row-major

inline CMatrix cm_identity(std::size_t dim) {
    CMatrix m(dim * dim, {0, 0});
    for (std::size_t i = 0; i < dim; ++i) m[i * dim + i] = 1.0;
    return m;
}

inline CMatrix cm_mul(const CMatrix& a, const CMatrix& b, std::size_t dim) {
    CMatrix c(dim * dim, {0, 0});
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t t = 0; t < dim; ++t) {
            std::complex<double> av = a[i * dim + t];
            if (av == std::complex<double>(0, 0)) continue;
            for (std::size_t j = 0; j < dim; ++j) c[i * dim + j] += av * b[t * dim + j];
        }
    return c;
}

inline std::vector<std::complex<double>> cm_apply(const CMatrix& m,
                                                  const std::vector<std::complex<double>>& x) {
    std::size_t dim = x.size();
    std::vector<std::complex<double>> y(dim, {0, 0});
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) y[i] += m[i * dim + j] * x[j];
    return y;
}

/// Pauli string on n qubits (characters 'I', 'X', 'Y', 'Z'; entry q acts on
/// qubit q, which is bit q of the basis index).
inline CMatrix pauli_string(const std::string& ops) {
    const std::size_t n = ops.size();
    const std::size_t dim = std::size_t{1} << n;
    CMatrix m(dim * dim, {0, 0});
    for (std::size_t col = 0; col < dim; ++col) {
        std::size_t row = col;
        std::complex<double> coeff = 1.0;
        for (std::size_t q = 0; q < n; ++q) {
            const int bit = (col >> q) & 1;
            switch (ops[q]) {
            case 'I':
                break;
            case 'X':
                row ^= (std::size_t{1} << q);
                break;
            case 'Y':
                row ^= (std::size_t{1} << q);
                coeff *= bit ? std::complex<double>(0, -1) : std::complex<double>(0, 1);
                break;
            case 'Z':
                coeff *= bit ? -1.0 : 1.0;
                break;
            default:
                throw std::invalid_argument("pauli_string: bad op");
            }
        }
        m[row * dim + col] += coeff;
    }
    return m;
}

/// exp(i angle P) for an involutory Pauli string P.
inline CMatrix pauli_exponential(const std::string& ops, double angle) {
    const std::size_t dim = std::size_t{1} << ops.size();
    CMatrix p = pauli_string(ops);
    CMatrix m = cm_identity(dim);
    const std::complex<double> is(0, std::sin(angle));
    const double c = std::cos(angle);
    for (std::size_t i = 0; i < dim * dim; ++i) m[i] = c * m[i] + is * p[i];
    return m;
}

} // namespace test_oracles
