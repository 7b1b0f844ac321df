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
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "mapp/common.hpp"
#include "mapp/exact.hpp"
#include "mapp/instance.hpp"
#include "mapp/qubo.hpp"

namespace mapp {

/// Hard cap on the dense engine; 2^26 amplitudes is 1 GiB.
inline constexpr int kMaxFullSpaceQubits = 26;
/// Hard cap on the feasible-subspace engine dimension.
inline constexpr std::uint64_t kMaxSubspaceDim = 1ULL << 22;

/// Dense amplitude vector over all 2^Q basis states. Basis state x encodes
/// qubit q as bit q of the index.
struct StateVector {
    int n_qubits = 0;
    std::vector<std::complex<double>> amp;

    double norm() const {
        double s = 0;
        for (const auto& a : amp) s += std::norm(a);
        return std::sqrt(s);
    }
};

/// Amplitudes over feasible assignments only, indexed by FeasibleBasis rank.
/// Represents a full-space state whose support is exactly the feasible set.
struct FeasibleStateVector {
    FeasibleBasis basis;
    std::vector<std::complex<double>> amp;

    explicit FeasibleStateVector(FeasibleBasis b)
        : basis(std::move(b)), amp(basis.size(), std::complex<double>(0, 0)) {}

    double norm() const {
        double s = 0;
        for (const auto& a : amp) s += std::norm(a);
        return std::sqrt(s);
    }
};

/// Annealing-schedule parameters for the Trotterized adiabatic evolution.
/// The interpolation is linear, so layer l of L carries problem weight l/L
/// and mixer weight 1 - l/L, each scaled by tau = T/L.
struct QaaSchedule {
    double total_time = 10.0;
    int layers = 15;
    int mixer_steps = 1;       // Trotter steps inside one mixer application
    double beta = 1.0;         // mixer strength
    double lambda_scale = 2.0; // penalty proportionality (QUBO-based run only)

    void validate() const {
        if (layers < 1) throw std::invalid_argument("QaaSchedule: layers must be >= 1");
        if (mixer_steps < 1) throw std::invalid_argument("QaaSchedule: mixer_steps must be >= 1");
        if (total_time < 0) throw std::invalid_argument("QaaSchedule: total_time must be >= 0");
        if (beta <= 0) throw std::invalid_argument("QaaSchedule: beta must be > 0");
    }
};

inline QaaSchedule default_basic_schedule() { return QaaSchedule{20.0, 100, 1, 1.0, 2.0}; }
inline QaaSchedule default_app_schedule() { return QaaSchedule{10.0, 15, 1, 1.0, 2.0}; }

// --------------------------------------------------------------------------
// Bitstring / index helpers
// --------------------------------------------------------------------------

inline std::uint64_t bits_to_index(const Bitstring& bits) {
    if (bits.size() > 64) throw std::invalid_argument("bits_to_index: more than 64 qubits");
    std::uint64_t x = 0;
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) x |= (1ULL << i);
    return x;
}

inline Bitstring index_to_bits(std::uint64_t index, int n_qubits) {
    Bitstring bits(n_qubits, 0);
    for (int i = 0; i < n_qubits; ++i) bits[i] = (index >> i) & 1ULL;
    return bits;
}

/// Textual bitstring: character i is the value of qubit i.
inline std::string bits_to_key(const Bitstring& bits) {
    std::string s(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) s[i] = '1';
    return s;
}

inline Bitstring key_to_bits(const std::string& key) {
    Bitstring bits(key.size(), 0);
    for (std::size_t i = 0; i < key.size(); ++i) {
        if (key[i] != '0' && key[i] != '1')
            throw std::invalid_argument("key_to_bits: invalid character");
        bits[i] = key[i] == '1';
    }
    return bits;
}

inline std::uint64_t assignment_to_index(const QubitLayout& layout, const Assignment& a) {
    return bits_to_index(assignment_to_bits(layout, a));
}

// --------------------------------------------------------------------------
// State preparation
// --------------------------------------------------------------------------

inline StateVector prepare_plus_state(int n_qubits, int max_qubits = kMaxFullSpaceQubits) {
    if (n_qubits < 1) throw std::invalid_argument("prepare_plus_state: need at least one qubit");
    if (n_qubits > max_qubits)
        throw std::length_error("prepare_plus_state: qubit count exceeds the memory cap");
    StateVector sv;
    sv.n_qubits = n_qubits;
    double a = std::pow(2.0, -0.5 * n_qubits);
    sv.amp.assign(std::size_t{1} << n_qubits, std::complex<double>(a, 0));
    return sv;
}

/// Equal-weight superposition of every feasible configuration. Built by
/// direct amplitude construction on the subspace engine.
inline FeasibleStateVector prepare_feasible_superposition(const FeasibleBasis& basis) {
    FeasibleStateVector fsv(basis);
    double a = 1.0 / std::sqrt(static_cast<double>(basis.size()));
    std::fill(fsv.amp.begin(), fsv.amp.end(), std::complex<double>(a, 0));
    return fsv;
}

/// Lifts a subspace state to the dense engine: feasible basis states receive
/// their amplitudes, everything else is exactly zero.
inline StateVector embed_feasible(const FeasibleStateVector& fsv,
                                  int max_qubits = kMaxFullSpaceQubits) {
    QubitLayout layout{fsv.basis.n_sites(), fsv.basis.n_freq()};
    int q = layout.n_qubits();
    if (q > max_qubits)
        throw std::length_error("embed_feasible: qubit count exceeds the memory cap");
    StateVector sv;
    sv.n_qubits = q;
    sv.amp.assign(std::size_t{1} << q, std::complex<double>(0, 0));
    for (std::uint64_t r = 0; r < fsv.basis.size(); ++r)
        sv.amp[assignment_to_index(layout, fsv.basis.unrank(r))] = fsv.amp[r];
    return sv;
}

// --------------------------------------------------------------------------
// Elementary operations
// --------------------------------------------------------------------------

namespace detail {

/// (x, y) -> (c x + i s y, i s x + c y): the two-level rotation block shared
/// by every mixer term.
inline void rotate_pair(std::complex<double>& x, std::complex<double>& y, double c, double s) {
    double xr = x.real(), xi = x.imag();
    double yr = y.real(), yi = y.imag();
    x = std::complex<double>(c * xr - s * yi, c * xi + s * yr);
    y = std::complex<double>(c * yr - s * xi, c * yi + s * xr);
}

} // namespace detail

/// Multiplies every amplitude by exp(-i * angle * values[x]). The problem
/// Hamiltonian is diagonal in the computational basis on either engine, so
/// this is the exact evolution under it.
inline void apply_diagonal_phase(StateVector& sv, std::span<const double> values, double angle) {
    if (values.size() != sv.amp.size())
        throw std::invalid_argument("apply_diagonal_phase: dimension mismatch");
    if (angle == 0.0) return;
    for (std::size_t i = 0; i < sv.amp.size(); ++i)
        sv.amp[i] *= std::polar(1.0, -angle * values[i]);
}

inline void apply_diagonal_phase(FeasibleStateVector& fsv, std::span<const double> values,
                                 double angle) {
    if (values.size() != fsv.amp.size())
        throw std::invalid_argument("apply_diagonal_phase: dimension mismatch");
    if (angle == 0.0) return;
    for (std::size_t i = 0; i < fsv.amp.size(); ++i)
        fsv.amp[i] *= std::polar(1.0, -angle * values[i]);
}

namespace detail {

/// Contiguous-span form of rotate_pair over raw doubles (re/im interleaved);
/// writing it this way lets the compiler vectorize the whole span.
inline void rotate_span(double* __restrict__ x, double* __restrict__ y, std::size_t n_cplx,
                        double c, double s) {
    for (std::size_t i = 0; i < n_cplx; ++i) {
        const double xr = x[2 * i], xi = x[2 * i + 1];
        const double yr = y[2 * i], yi = y[2 * i + 1];
        x[2 * i] = c * xr - s * yi;
        x[2 * i + 1] = c * xi + s * yr;
        y[2 * i] = c * yr - s * xi;
        y[2 * i + 1] = c * yi + s * xr;
    }
}

/// Two single-qubit rotations fused into one pass over four coupled spans
/// (radix-4 butterfly). Same arithmetic as two rotate_span sweeps but with
/// half the memory traffic.
inline void rotate_span4(double* __restrict__ p0, double* __restrict__ p1,
                         double* __restrict__ p2, double* __restrict__ p3, std::size_t n_cplx,
                         double c, double s) {
    const double cc = c * c, ss = s * s, cs = c * s;
    for (std::size_t i = 0; i < n_cplx; ++i) {
        const double a0r = p0[2 * i], a0i = p0[2 * i + 1];
        const double a1r = p1[2 * i], a1i = p1[2 * i + 1];
        const double a2r = p2[2 * i], a2i = p2[2 * i + 1];
        const double a3r = p3[2 * i], a3i = p3[2 * i + 1];
        // J multiplies a complex value by i: J(re, im) = (-im, re).
        const double j03r = -(a0i + a3i), j03i = a0r + a3r;
        const double j12r = -(a1i + a2i), j12i = a1r + a2r;
        p0[2 * i] = cc * a0r + cs * j12r - ss * a3r;
        p0[2 * i + 1] = cc * a0i + cs * j12i - ss * a3i;
        p1[2 * i] = cs * j03r + cc * a1r - ss * a2r;
        p1[2 * i + 1] = cs * j03i + cc * a1i - ss * a2i;
        p2[2 * i] = cs * j03r - ss * a1r + cc * a2r;
        p2[2 * i + 1] = cs * j03i - ss * a1i + cc * a2i;
        p3[2 * i] = -ss * a0r + cs * j12r + cc * a3r;
        p3[2 * i + 1] = -ss * a0i + cs * j12i + cc * a3i;
    }
}

/// One layer of exp(i theta X) on every qubit, cache-blocked. Qubits below
/// `block_bits` are rotated inside cache-resident blocks (two qubits per
/// sweep); higher qubits act on the block index and are handled in groups
/// whose working set stays in L2, so the array streams through memory only a
/// few times instead of once per qubit. `pre` runs once per element range
/// ahead of the butterflies and can fold an elementwise update (e.g. a
/// diagonal phase) into the same pass.
template <typename Pre>
void x_mixer_sweep(StateVector& sv, double theta, Pre&& pre) {
    const int q_total = sv.n_qubits;
    const std::size_t n = sv.amp.size();
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    double* a = reinterpret_cast<double*>(sv.amp.data());

    const int block_bits = std::min(q_total, 12);
    const std::size_t block = std::size_t{1} << block_bits;

    for (std::size_t base = 0; base < n; base += block) {
        pre(base, base + block);
        int q = 0;
        for (; q + 1 < block_bits; q += 2) {
            const std::size_t half = std::size_t{1} << q;
            for (std::size_t i0 = base; i0 < base + block; i0 += 4 * half)
                rotate_span4(a + 2 * i0, a + 2 * (i0 + half), a + 2 * (i0 + 2 * half),
                             a + 2 * (i0 + 3 * half), half, c, s);
        }
        for (; q < block_bits; ++q) {
            const std::size_t half = std::size_t{1} << q;
            for (std::size_t i0 = base; i0 < base + block; i0 += 2 * half)
                rotate_span(a + 2 * i0, a + 2 * (i0 + half), half, c, s);
        }
    }

    int q = block_bits;
    const int group_max = 4; // 2^group_max blocks stay L2-resident
    while (q < q_total) {
        const int g = std::min(group_max, q_total - q);
        const int qb = q - block_bits; // group bits inside the block index
        const std::size_t n_blocks = n >> block_bits;
        const std::size_t lo_mask = (std::size_t{1} << qb) - 1;
        for (std::size_t m = 0; m < (n_blocks >> g); ++m) {
            const std::size_t lo = m & lo_mask;
            const std::size_t hi = (m >> qb) << (qb + g);
            auto block_ptr = [&](std::size_t t) {
                return a + 2 * (((hi | (t << qb)) | lo) << block_bits);
            };
            int level = 0;
            for (; level + 1 < g; level += 2) {
                for (std::size_t t = 0; t < (std::size_t{1} << g); ++t) {
                    if (t & (std::size_t{3} << level)) continue;
                    rotate_span4(block_ptr(t), block_ptr(t | (std::size_t{1} << level)),
                                 block_ptr(t | (std::size_t{2} << level)),
                                 block_ptr(t | (std::size_t{3} << level)), block, c, s);
                }
            }
            for (; level < g; ++level) {
                for (std::size_t t = 0; t < (std::size_t{1} << g); ++t) {
                    if (t & (std::size_t{1} << level)) continue;
                    rotate_span(block_ptr(t), block_ptr(t | (std::size_t{1} << level)), block,
                                c, s);
                }
            }
        }
        q += g;
    }
}

} // namespace detail

/// Uniform transverse mixer layer: exp(i theta X) applied to every qubit.
/// Dense engine only.
inline void apply_x_mixer_layer(StateVector& sv, double theta) {
    detail::x_mixer_sweep(sv, theta, [](std::size_t, std::size_t) {});
}

[[noreturn]] inline void apply_x_mixer_layer(FeasibleStateVector&, double) {
    throw std::logic_error("apply_x_mixer_layer: not defined on the feasible-subspace engine "
                           "(it does not preserve the constraints)");
}

/// Hopping rotation between two qubits: identity on |00> and |11>, the
/// two-level rotation with angle theta on the {|01>, |10>} pair.
inline void apply_xy_pair_rotation(StateVector& sv, int qubit_a, int qubit_b, double theta) {
    if (qubit_a == qubit_b) throw std::invalid_argument("apply_xy_pair_rotation: equal qubits");
    if (qubit_a < 0 || qubit_b < 0 || qubit_a >= sv.n_qubits || qubit_b >= sv.n_qubits)
        throw std::out_of_range("apply_xy_pair_rotation: qubit out of range");
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const std::uint64_t ma = 1ULL << qubit_a;
    const std::uint64_t mb = 1ULL << qubit_b;
    for (std::uint64_t i = 0; i < sv.amp.size(); ++i)
        if ((i & ma) == 0 && (i & mb) != 0)
            detail::rotate_pair(sv.amp[i ^ ma ^ mb], sv.amp[i], c, s);
}

/// Subspace version: the pair must be two frequency variables (p, p' >= 1) of
/// one site, so both images of every coupled pair stay feasible.
inline void apply_xy_pair_rotation(FeasibleStateVector& fsv, int qubit_a, int qubit_b,
                                   double theta) {
    QubitLayout layout{fsv.basis.n_sites(), fsv.basis.n_freq()};
    auto [va, pa] = layout.site_freq(qubit_a);
    auto [vb, pb] = layout.site_freq(qubit_b);
    if (va != vb || pa < 1 || pb < 1 || pa == pb)
        throw std::invalid_argument("apply_xy_pair_rotation: subspace pair must be two distinct "
                                    "frequency variables of one site");
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (std::uint64_t r = 0; r < fsv.basis.size(); ++r) {
        Assignment a = fsv.basis.unrank(r);
        if (a[va] != pa) continue;
        a[va] = pb;
        detail::rotate_pair(fsv.amp[r], fsv.amp[fsv.basis.rank(a)], c, s);
    }
}

/// Antenna-relocation rotation: couples basis states where site v is empty
/// and site u runs at frequency p' with the states where the antenna has
/// moved to site v at frequency p (all other variables equal). Exact
/// exponential of one ladder-operator mixer term.
inline void apply_pmpm_rotation(StateVector& sv, const QubitLayout& layout, int v, int u, int p,
                                int p_prime, double theta) {
    if (v == u) throw std::invalid_argument("apply_pmpm_rotation: sites must differ");
    if (p < 1 || p > layout.n_freq || p_prime < 1 || p_prime > layout.n_freq)
        throw std::out_of_range("apply_pmpm_rotation: frequency out of range");
    if (layout.n_qubits() != sv.n_qubits)
        throw std::invalid_argument("apply_pmpm_rotation: layout mismatch");
    const std::uint64_t m_vp = 1ULL << layout.index(v, p);
    const std::uint64_t m_u0 = 1ULL << layout.index(u, 0);
    const std::uint64_t m_v0 = 1ULL << layout.index(v, 0);
    const std::uint64_t m_up = 1ULL << layout.index(u, p_prime);
    const std::uint64_t mask = m_vp | m_u0 | m_v0 | m_up;
    const std::uint64_t pattern = m_v0 | m_up; // v empty, u at p'
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (std::uint64_t i = 0; i < sv.amp.size(); ++i)
        if ((i & mask) == pattern) detail::rotate_pair(sv.amp[i], sv.amp[i ^ mask], c, s);
}

inline void apply_pmpm_rotation(FeasibleStateVector& fsv, int v, int u, int p, int p_prime,
                                double theta) {
    const int n = fsv.basis.n_sites();
    const int f = fsv.basis.n_freq();
    if (v == u || v < 0 || u < 0 || v >= n || u >= n)
        throw std::out_of_range("apply_pmpm_rotation: site out of range");
    if (p < 1 || p > f || p_prime < 1 || p_prime > f)
        throw std::out_of_range("apply_pmpm_rotation: frequency out of range");
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (std::uint64_t r = 0; r < fsv.basis.size(); ++r) {
        Assignment a = fsv.basis.unrank(r);
        if (a[v] != 0 || a[u] != p_prime) continue;
        a[v] = p;
        a[u] = 0;
        detail::rotate_pair(fsv.amp[r], fsv.amp[fsv.basis.rank(a)], c, s);
    }
}

// --------------------------------------------------------------------------
// Constraint-preserving mixer
// --------------------------------------------------------------------------

/// One factor of the Trotterized mixer.
struct MixerTermSpec {
    enum class Kind { PmPm, XY };
    Kind kind;
    int v = 0;
    int u = 0; // PmPm only
    int p = 0;
    int p_prime = 0;
};

/// Deterministic factor ordering of one mixer Trotter step: all
/// antenna-relocation terms (site pairs lexicographic, then both frequency
/// indices), then all frequency-ring terms (site, then frequency). Ring
/// terms are skipped for F = 1, where they reduce to a global phase.
inline std::vector<MixerTermSpec> app_mixer_terms(int n_sites, int n_freq) {
    std::vector<MixerTermSpec> terms;
    for (int v = 0; v < n_sites; ++v)
        for (int u = v + 1; u < n_sites; ++u)
            for (int p = 1; p <= n_freq; ++p)
                for (int pp = 1; pp <= n_freq; ++pp)
                    terms.push_back({MixerTermSpec::Kind::PmPm, v, u, p, pp});
    if (n_freq >= 2)
        for (int v = 0; v < n_sites; ++v)
            for (int p = 1; p <= n_freq; ++p)
                terms.push_back({MixerTermSpec::Kind::XY, v, 0, p, p % n_freq + 1});
    return terms;
}

/// Precomputed coupled-rank pairs per mixer term on a fixed basis; reused
/// across layers and Trotter steps.
struct SubspaceMixerPlan {
    std::vector<MixerTermSpec> terms;
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> pairs;
};

inline SubspaceMixerPlan build_mixer_plan(const FeasibleBasis& basis) {
    SubspaceMixerPlan plan;
    plan.terms = app_mixer_terms(basis.n_sites(), basis.n_freq());
    plan.pairs.resize(plan.terms.size());
    if (basis.size() > std::numeric_limits<std::uint32_t>::max())
        throw std::length_error("build_mixer_plan: basis too large");
    Assignment b;
    for (std::uint64_t r = 0; r < basis.size(); ++r) {
        Assignment a = basis.unrank(r);
        for (std::size_t t = 0; t < plan.terms.size(); ++t) {
            const MixerTermSpec& term = plan.terms[t];
            if (term.kind == MixerTermSpec::Kind::PmPm) {
                if (a[term.v] != 0 || a[term.u] != term.p_prime) continue;
                b = a;
                b[term.v] = term.p;
                b[term.u] = 0;
            } else {
                if (a[term.v] != term.p) continue;
                b = a;
                b[term.v] = term.p_prime;
            }
            plan.pairs[t].push_back({static_cast<std::uint32_t>(r),
                                     static_cast<std::uint32_t>(basis.rank(b))});
        }
    }
    return plan;
}

/// Evolution under the two-component mixer for time tau_prime, Trotterized
/// over `mixer_steps` sweeps. Every factor is an exact two-level rotation, so
/// the feasible support is preserved for any number of steps.
inline void apply_app_mixer(FeasibleStateVector& fsv, double tau_prime, int mixer_steps,
                            double beta, const SubspaceMixerPlan* plan = nullptr) {
    if (mixer_steps < 1) throw std::invalid_argument("apply_app_mixer: mixer_steps must be >= 1");
    if (tau_prime == 0.0) return;
    SubspaceMixerPlan local;
    if (plan == nullptr) {
        local = build_mixer_plan(fsv.basis);
        plan = &local;
    }
    const double theta = tau_prime / mixer_steps * beta;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (int m = 0; m < mixer_steps; ++m)
        for (const auto& term_pairs : plan->pairs)
            for (const auto& [i, j] : term_pairs)
                detail::rotate_pair(fsv.amp[i], fsv.amp[j], c, s);
}

/// Dense-engine mirror of the same factor sequence (cross-check path).
inline void apply_app_mixer(StateVector& sv, const QubitLayout& layout, double tau_prime,
                            int mixer_steps, double beta) {
    if (mixer_steps < 1) throw std::invalid_argument("apply_app_mixer: mixer_steps must be >= 1");
    if (tau_prime == 0.0) return;
    const double theta = tau_prime / mixer_steps * beta;
    const auto terms = app_mixer_terms(layout.n_sites, layout.n_freq);
    for (int m = 0; m < mixer_steps; ++m) {
        for (const MixerTermSpec& term : terms) {
            if (term.kind == MixerTermSpec::Kind::PmPm)
                apply_pmpm_rotation(sv, layout, term.v, term.u, term.p, term.p_prime, theta);
            else
                apply_xy_pair_rotation(sv, layout.index(term.v, term.p),
                                       layout.index(term.v, term.p_prime), theta);
        }
    }
}

// --------------------------------------------------------------------------
// Full algorithm runs
// --------------------------------------------------------------------------

/// Evaluates the quadratic model on every bitstring of its dimension by
/// single-bit increments; O(2^Q * Q) and exact.
inline std::vector<double> qubo_value_table(const QuboModel& model) {
    const int q = model.dimension;
    if (q < 1 || q > kMaxFullSpaceQubits)
        throw std::length_error("qubo_value_table: dimension exceeds the memory cap");
    std::vector<double> row(static_cast<std::size_t>(q) * q, 0.0);
    for (const auto& [key, w] : model.quadratic) {
        row[static_cast<std::size_t>(key.first) * q + key.second] = w;
        row[static_cast<std::size_t>(key.second) * q + key.first] = w;
    }
    const std::size_t n = std::size_t{1} << q;
    std::vector<double> values(n);
    values[0] = model.constant;
    for (std::size_t x = 1; x < n; ++x) {
        const int b = std::countr_zero(x);
        const std::size_t y = x & (x - 1);
        double delta = model.linear[b];
        const double* rb = row.data() + static_cast<std::size_t>(b) * q;
        for (std::size_t t = y; t != 0; t &= t - 1) delta += rb[std::countr_zero(t)];
        values[x] = values[y] + delta;
    }
    return values;
}

namespace detail {

inline void check_final_norm(double norm, const char* what) {
    if (std::abs(norm - 1.0) > 1e-9)
        throw std::runtime_error(std::string(what) +
                                 ": unitarity drift exceeded tolerance; refusing to hide it");
}

} // namespace detail

/// QUBO-driven adiabatic run on the dense engine: uniform start, then L
/// layers of problem phase (weight l/L) followed by the transverse mixer
/// (weight 1 - l/L). The problem diagonal is the penalty model normalized by
/// its max coefficient norm.
inline StateVector run_qaa_basic(const Instance& inst, const QaaSchedule& sched,
                                 int max_qubits = kMaxFullSpaceQubits) {
    sched.validate();
    const QubitLayout layout = inst.layout();
    const int q = layout.n_qubits();
    StateVector sv = prepare_plus_state(q, max_qubits);
    const std::size_t n = sv.amp.size();

    const double lambda = default_penalty(inst, sched.lambda_scale);
    const QuboModel model = to_qubo(inst, layout, lambda);
    const double norm = max_norm(model);
    const double tau = sched.total_time / sched.layers;

    // Per-layer diagonal phases are powers of one elementary step factor:
    // exp(-i tau (l/L) v) = step^l. Keeping the running power avoids a
    // sincos per element per layer and stays within ~L ulp of the direct
    // evaluation.
    std::vector<std::complex<double>> step(n);
    {
        std::vector<double> values = qubo_value_table(model);
        const double scale = tau / sched.layers / norm;
        for (std::size_t i = 0; i < n; ++i) step[i] = std::polar(1.0, -scale * values[i]);
    }
    std::vector<std::complex<double>> running(n, std::complex<double>(1, 0));

    for (int l = 1; l <= sched.layers; ++l) {
        const double mix_theta = tau * (1.0 - static_cast<double>(l) / sched.layers);
        auto phase_pass = [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                running[i] *= step[i];
                sv.amp[i] *= running[i];
            }
        };
        if (l == sched.layers) {
            // Zero mixer weight on the last layer: apply the phase alone.
            phase_pass(0, n);
        } else {
            detail::x_mixer_sweep(sv, mix_theta, phase_pass);
        }
    }
    detail::check_final_norm(sv.norm(), "run_qaa_basic");
    return sv;
}

/// Magnitude of the two-component mixer's ground energy at unit coupling:
/// the uniform feasible superposition has energy -beta * this value (each
/// assignment admits k F (N - k) relocation moves plus 2k ring moves).
inline double app_mixer_energy_scale(int n_sites, int n_freq, int n_antennas) {
    double e0 = static_cast<double>(n_antennas) * n_freq * (n_sites - n_antennas);
    if (n_freq >= 2) e0 += 2.0 * n_antennas;
    return e0 > 0 ? e0 : 1.0;
}

/// Constraint-preserving adiabatic run on the subspace engine: feasible
/// superposition start, cost diagonal, two-component mixer. The schedule's
/// beta is expressed relative to the mixer's ground-energy magnitude, so the
/// interpolation moves between comparable energy scales regardless of the
/// instance size. The support never leaves the feasible set, for any
/// schedule.
inline FeasibleStateVector run_qaa_app(const Instance& inst, const QaaSchedule& sched,
                                       std::uint64_t max_dim = kMaxSubspaceDim) {
    sched.validate();
    FeasibleBasis basis(inst.n_sites, inst.n_freq, inst.n_antennas);
    if (basis.size() > max_dim)
        throw std::length_error("run_qaa_app: feasible-space dimension exceeds the budget");
    std::vector<double> values(basis.size());
    for (std::uint64_t r = 0; r < basis.size(); ++r) values[r] = cost(inst, basis.unrank(r));
    const double coupling =
        sched.beta / app_mixer_energy_scale(inst.n_sites, inst.n_freq, inst.n_antennas);

    FeasibleStateVector fsv = prepare_feasible_superposition(basis);
    const SubspaceMixerPlan plan = build_mixer_plan(basis);
    const double tau = sched.total_time / sched.layers;
    for (int l = 1; l <= sched.layers; ++l) {
        apply_diagonal_phase(fsv, values, tau * l / sched.layers);
        apply_app_mixer(fsv, tau * (1.0 - static_cast<double>(l) / sched.layers),
                        sched.mixer_steps, coupling, &plan);
    }
    detail::check_final_norm(fsv.norm(), "run_qaa_app");
    return fsv;
}

// --------------------------------------------------------------------------
// Sampling and metrics
// --------------------------------------------------------------------------

struct SampleCounts {
    std::map<std::string, std::uint64_t> counts; // full-Q bitstring -> count
    std::uint64_t total = 0;
};

namespace detail {

/// Inverse-CDF multinomial draw: sorted uniforms against one probability
/// sweep. prob(i) must enumerate |amplitude|^2 in index order.
template <typename ProbFn, typename KeyFn>
SampleCounts sweep_sample(std::uint64_t dim, std::uint64_t shots, std::uint64_t seed,
                          ProbFn&& prob, KeyFn&& key) {
    if (shots < 1) throw std::invalid_argument("sample_counts: shots must be >= 1");
    Rng rng(seed);
    std::vector<double> draws(shots);
    for (auto& d : draws) d = rng.uniform01();
    std::sort(draws.begin(), draws.end());
    std::vector<std::uint64_t> sampled;
    sampled.reserve(shots);
    double cum = 0;
    std::size_t ptr = 0;
    for (std::uint64_t i = 0; i < dim && ptr < shots; ++i) {
        cum += prob(i);
        while (ptr < shots && draws[ptr] < cum) {
            sampled.push_back(i);
            ++ptr;
        }
    }
    // Rounding can leave a draw at or above the accumulated total.
    while (ptr < shots) {
        sampled.push_back(dim - 1);
        ++ptr;
    }
    SampleCounts out;
    out.total = shots;
    for (std::uint64_t i : sampled) ++out.counts[key(i)];
    return out;
}

} // namespace detail

inline SampleCounts sample_counts(const StateVector& sv, std::uint64_t shots, std::uint64_t seed) {
    return detail::sweep_sample(
        sv.amp.size(), shots, seed, [&](std::uint64_t i) { return std::norm(sv.amp[i]); },
        [&](std::uint64_t i) { return bits_to_key(index_to_bits(i, sv.n_qubits)); });
}

/// Subspace states report full-Q bitstrings through the layout.
inline SampleCounts sample_counts(const FeasibleStateVector& fsv, std::uint64_t shots,
                                  std::uint64_t seed) {
    QubitLayout layout{fsv.basis.n_sites(), fsv.basis.n_freq()};
    return detail::sweep_sample(
        fsv.amp.size(), shots, seed, [&](std::uint64_t i) { return std::norm(fsv.amp[i]); },
        [&](std::uint64_t i) {
            return bits_to_key(assignment_to_bits(layout, fsv.basis.unrank(i)));
        });
}

struct SampleMetrics {
    double p_feasible = 0;
    std::optional<double> p_success;          // absent when the optimal set is unknown
    std::optional<Assignment> best_feasible;  // lowest-cost feasible sample
    std::optional<double> best_feasible_cost;
};

inline SampleMetrics run_metrics(const SampleCounts& counts, const Instance& inst,
                                 const std::vector<Assignment>& optimal_set) {
    const QubitLayout layout = inst.layout();
    std::unordered_set<std::string> optimal_keys;
    for (const Assignment& a : optimal_set)
        optimal_keys.insert(bits_to_key(assignment_to_bits(layout, a)));
    SampleMetrics m;
    std::uint64_t feasible = 0;
    std::uint64_t success = 0;
    for (const auto& [key, c] : counts.counts) {
        Bitstring bits = key_to_bits(key);
        if (is_feasible_bits(inst, bits)) {
            feasible += c;
            Assignment a = bits_to_assignment(layout, bits);
            double value = cost(inst, a);
            if (!m.best_feasible_cost || value < *m.best_feasible_cost) {
                m.best_feasible_cost = value;
                m.best_feasible = std::move(a);
            }
        }
        if (!optimal_keys.empty() && optimal_keys.count(key)) success += c;
    }
    m.p_feasible = static_cast<double>(feasible) / static_cast<double>(counts.total);
    if (!optimal_set.empty())
        m.p_success = static_cast<double>(success) / static_cast<double>(counts.total);
    return m;
}

} // namespace mapp
