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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mapp/anneal.hpp"
#include "mapp/common.hpp"
#include "mapp/exact.hpp"
#include "mapp/instance.hpp"
#include "mapp/qsim.hpp"
#include "mapp/qubo.hpp"

namespace mapp {

/// Site-to-subproblem map with per-subproblem antenna budgets. All F+1
/// variables of a site share its label, which keeps every subproblem one-hot
/// by construction.
struct ClusterPartition {
    int num_clusters = 0;
    std::vector<int> label;   // per site
    std::vector<int> budgets; // per cluster, sums to k once assigned

    std::vector<int> cluster_sizes() const {
        std::vector<int> sizes(num_clusters, 0);
        for (int c : label) ++sizes[c];
        return sizes;
    }
};

namespace detail {

/// Seeded k-means with k-means++ initialization; restarts keep the lowest
/// inertia. Ties in assignment go to the lowest center index, so the result
/// is a pure function of (points, k, seed).
inline std::vector<int> kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed,
                               int restarts = 10, int max_iter = 100) {
    const int n = static_cast<int>(points.rows());
    std::vector<int> best_labels(n, 0);
    double best_inertia = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < restarts; ++restart) {
        Rng rng(derive_seed(seed, restart));
        Eigen::MatrixXd centers(k, points.cols());
        centers.row(0) = points.row(rng.below_int(n));
        Eigen::VectorXd dist2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
        for (int c = 1; c < k; ++c) {
            double total = dist2.sum();
            int pick = 0;
            if (total > 0) {
                double target = rng.uniform01() * total;
                double cum = 0;
                for (int i = 0; i < n; ++i) {
                    cum += dist2[i];
                    if (target < cum) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = rng.below_int(n);
            }
            centers.row(c) = points.row(pick);
            dist2 = dist2.cwiseMin(
                (points.rowwise() - centers.row(c)).rowwise().squaredNorm());
        }
        std::vector<int> labels(n, 0);
        for (int iter = 0; iter < max_iter; ++iter) {
            bool changed = false;
            for (int i = 0; i < n; ++i) {
                int arg = 0;
                double best = (points.row(i) - centers.row(0)).squaredNorm();
                for (int c = 1; c < k; ++c) {
                    double d = (points.row(i) - centers.row(c)).squaredNorm();
                    if (d < best) {
                        best = d;
                        arg = c;
                    }
                }
                if (labels[i] != arg) {
                    labels[i] = arg;
                    changed = true;
                }
            }
            if (!changed && iter > 0) break;
            Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
            std::vector<int> counts(k, 0);
            for (int i = 0; i < n; ++i) {
                sums.row(labels[i]) += points.row(i);
                ++counts[labels[i]];
            }
            for (int c = 0; c < k; ++c)
                if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
        }
        double inertia = 0;
        for (int i = 0; i < n; ++i) inertia += (points.row(i) - centers.row(labels[i])).squaredNorm();
        if (inertia < best_inertia - 1e-15) {
            best_inertia = inertia;
            best_labels = labels;
        }
    }
    return best_labels;
}

} // namespace detail

/// Groups sites by Euclidean proximity: Gaussian affinities (bandwidth =
/// median pairwise distance), symmetric normalized Laplacian, k-means on the
/// rows of the bottom eigenvector matrix. Budgets are left unset.
inline ClusterPartition spectral_cluster(const Instance& inst, int num_clusters,
                                         std::uint64_t seed) {
    const int n = inst.n_sites;
    if (num_clusters < 1 || num_clusters > n)
        throw std::invalid_argument("spectral_cluster: need 1 <= num_clusters <= N");
    if (inst.sites.empty())
        throw std::invalid_argument("spectral_cluster: instance carries no site coordinates");
    ClusterPartition part;
    part.num_clusters = num_clusters;
    part.budgets.assign(num_clusters, 0);
    if (num_clusters == 1) {
        part.label.assign(n, 0);
        return part;
    }
    if (num_clusters == n) {
        part.label.resize(n);
        for (int v = 0; v < n; ++v) part.label[v] = v;
        return part;
    }

    Eigen::MatrixXd dist(n, n);
    std::vector<double> all_d;
    all_d.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int v = 0; v < n; ++v) {
        dist(v, v) = 0;
        for (int u = v + 1; u < n; ++u) {
            double d = std::hypot(inst.sites[v].x - inst.sites[u].x,
                                  inst.sites[v].y - inst.sites[u].y);
            dist(v, u) = dist(u, v) = d;
            all_d.push_back(d);
        }
    }
    std::sort(all_d.begin(), all_d.end());
    double sigma = all_d[all_d.size() / 2];

    Eigen::MatrixXd affinity(n, n);
    if (sigma <= 0) {
        // Degenerate geometry (coincident sites): complete graph, arbitrary
        // but deterministic split.
        affinity.setOnes();
    } else {
        for (int v = 0; v < n; ++v)
            for (int u = 0; u < n; ++u)
                affinity(v, u) = std::exp(-dist(v, u) * dist(v, u) / (2.0 * sigma * sigma));
    }
    affinity.diagonal().setZero();

    Eigen::VectorXd degree = affinity.rowwise().sum();
    Eigen::VectorXd dinv = degree.cwiseMax(1e-300).cwiseInverse().cwiseSqrt();
    Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n, n) -
                          dinv.asDiagonal() * affinity * dinv.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
    Eigen::MatrixXd embedding = solver.eigenvectors().leftCols(num_clusters);

    part.label = detail::kmeans(embedding, num_clusters, seed);

    // Subproblem state spaces grow combinatorially with cluster size, so an
    // oversized cluster can blow the quantum subsolver's budget. Cap sizes
    // near balance by moving the cheapest boundary points (in embedding
    // distance) into under-capacity clusters; deterministic by index.
    const int cap = (n + num_clusters - 1) / num_clusters + 1;
    std::vector<int> sizes(num_clusters, 0);
    for (int l : part.label) ++sizes[l];
    Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(num_clusters, num_clusters);
    for (int v = 0; v < n; ++v) centers.row(part.label[v]) += embedding.row(v);
    for (int c2 = 0; c2 < num_clusters; ++c2)
        if (sizes[c2] > 0) centers.row(c2) /= sizes[c2];
    while (true) {
        int over = -1;
        for (int c2 = 0; c2 < num_clusters; ++c2)
            if (sizes[c2] > cap) {
                over = c2;
                break;
            }
        if (over < 0) break;
        int best_site = -1, best_target = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (int v = 0; v < n; ++v) {
            if (part.label[v] != over) continue;
            for (int c2 = 0; c2 < num_clusters; ++c2) {
                if (c2 == over || sizes[c2] >= cap) continue;
                double d = (embedding.row(v) - centers.row(c2)).squaredNorm();
                if (d < best_dist) {
                    best_dist = d;
                    best_site = v;
                    best_target = c2;
                }
            }
        }
        part.label[best_site] = best_target;
        --sizes[over];
        ++sizes[best_target];
    }
    return part;
}

/// Proportional budgets with a largest-remainder correction: budgets sum to
/// k and respect cluster capacities.
inline ClusterPartition initial_budgets(const ClusterPartition& partition, int k) {
    ClusterPartition part = partition;
    const std::vector<int> sizes = part.cluster_sizes();
    const int n = static_cast<int>(part.label.size());
    if (k < 0 || k > n) throw std::invalid_argument("initial_budgets: need 0 <= k <= N");
    const int c_count = part.num_clusters;
    part.budgets.assign(c_count, 0);
    std::vector<long long> remainder(c_count, 0);
    int assigned = 0;
    for (int c = 0; c < c_count; ++c) {
        long long num = static_cast<long long>(k) * sizes[c];
        part.budgets[c] = static_cast<int>(num / n);
        remainder[c] = num % n;
        assigned += part.budgets[c];
    }
    int left = k - assigned;
    while (left > 0) {
        int pick = -1;
        for (int c = 0; c < c_count; ++c) {
            if (part.budgets[c] >= sizes[c]) continue;
            if (pick == -1 || remainder[c] > remainder[pick]) pick = c;
        }
        ++part.budgets[pick];
        remainder[pick] = -1; // one correction unit per cluster per round
        --left;
        bool any_fresh = false;
        for (int c = 0; c < c_count; ++c)
            if (remainder[c] >= 0 && part.budgets[c] < sizes[c]) any_fresh = true;
        if (left > 0 && !any_fresh)
            for (int c = 0; c < c_count; ++c) remainder[c] = 0; // next round by index
    }
    return part;
}

/// Restriction of an instance to one cluster: its sites, areas and
/// intra-cluster overlaps with the local antenna budget. Interactions that
/// cross clusters are intentionally absent; the sweep step reconciles them.
struct Subproblem {
    int cluster = 0;
    Instance instance;
    std::vector<int> sites; // local index -> site index in the parent
};

inline std::vector<Subproblem> build_subproblems(const Instance& inst,
                                                 const ClusterPartition& partition) {
    if (static_cast<int>(partition.label.size()) != inst.n_sites)
        throw std::invalid_argument("build_subproblems: partition size mismatch");
    std::vector<Subproblem> subs;
    for (int c = 0; c < partition.num_clusters; ++c) {
        Subproblem sub;
        sub.cluster = c;
        for (int v = 0; v < inst.n_sites; ++v)
            if (partition.label[v] == c) sub.sites.push_back(v);
        if (sub.sites.empty()) continue;
        std::vector<int> local(inst.n_sites, -1);
        for (std::size_t i = 0; i < sub.sites.size(); ++i) local[sub.sites[i]] = static_cast<int>(i);
        Instance& si = sub.instance;
        si.n_sites = static_cast<int>(sub.sites.size());
        si.n_freq = inst.n_freq;
        si.n_antennas = partition.budgets[c];
        si.alpha = inst.alpha;
        for (int v : sub.sites) {
            if (!inst.sites.empty()) si.sites.push_back(inst.sites[v]);
            si.areas.push_back(inst.areas[v]);
        }
        for (const PairOverlap& po : inst.overlaps) {
            if (local[po.v] < 0 || local[po.u] < 0) continue;
            PairOverlap copy = po;
            copy.v = local[po.v];
            copy.u = local[po.u];
            if (copy.v > copy.u) {
                std::swap(copy.v, copy.u);
                for (OverlapEntry& e : copy.entries) std::swap(e.p, e.q);
            }
            si.overlaps.push_back(std::move(copy));
        }
        si.finalize();
        subs.push_back(std::move(sub));
    }
    return subs;
}

struct SweepResult {
    Assignment assignment;
    double cost = 0;
    int sweeps = 0;
};

/// Deterministic greedy descent: onsite relabelings over all sites
/// (frequencies ascending), then label swaps over all inter-cluster site
/// pairs (lexicographic). Improving moves apply immediately; repeats until a
/// full sweep changes nothing or the cap is reached. Preserves feasibility.
inline SweepResult sweep_update(const Instance& inst, const ClusterPartition& partition,
                                const Assignment& assignment, int sweep_cap = 50) {
    if (!is_feasible(inst, assignment))
        throw std::invalid_argument("sweep_update: input assignment is infeasible");
    SweepResult out;
    out.assignment = assignment;
    Assignment& a = out.assignment;
    double value = cost(inst, a);
    const int n = inst.n_sites;
    for (int sweep = 0; sweep < sweep_cap; ++sweep) {
        bool improved = false;
        const double eps = 1e-12 * (1.0 + std::abs(value));
        for (int v = 0; v < n; ++v) {
            if (a[v] < 1) continue;
            for (int p = 1; p <= inst.n_freq; ++p) {
                if (p == a[v]) continue;
                double d = delta_cost_onsite(inst, a, v, p);
                if (d < -eps) {
                    a[v] = p;
                    value += d;
                    improved = true;
                }
            }
        }
        for (int v = 0; v < n; ++v) {
            for (int u = v + 1; u < n; ++u) {
                if (partition.label[v] == partition.label[u]) continue;
                double d = delta_cost_swap(inst, a, v, u);
                if (d < -eps) {
                    std::swap(a[v], a[u]);
                    value += d;
                    improved = true;
                }
            }
        }
        ++out.sweeps;
        if (!improved) break;
    }
    out.cost = cost(inst, a); // exact, not the accumulated increments
    return out;
}

/// Budgets recomputed from the actual antenna placement; they sum to k
/// automatically on any feasible assignment.
inline ClusterPartition update_budgets(const ClusterPartition& partition,
                                       const Assignment& assignment) {
    ClusterPartition part = partition;
    part.budgets.assign(part.num_clusters, 0);
    for (std::size_t v = 0; v < assignment.size(); ++v)
        if (assignment[v] > 0) ++part.budgets[part.label[v]];
    return part;
}

struct PlainSweepResult {
    Bitstring bits;
    double qubo_value = 0;
    int sweeps = 0;
};

/// Single-bit greedy descent on the penalty model, index order, until a full
/// pass improves nothing. One-hot structure is not guaranteed afterwards.
inline PlainSweepResult sweep_update_plain(const Instance& inst, const Bitstring& bits,
                                           int sweep_cap = 50) {
    const QubitLayout layout = inst.layout();
    const QuboModel model = to_qubo(inst, layout, default_penalty(inst));
    if (static_cast<int>(bits.size()) != model.dimension)
        throw std::invalid_argument("sweep_update_plain: length mismatch");
    std::vector<std::vector<std::pair<int, double>>> adj(model.dimension);
    for (const auto& [key, w] : model.quadratic) {
        adj[key.first].push_back({key.second, w});
        adj[key.second].push_back({key.first, w});
    }
    PlainSweepResult out;
    out.bits = bits;
    Bitstring& x = out.bits;
    double value = qubo_value(model, x);
    for (int sweep = 0; sweep < sweep_cap; ++sweep) {
        bool improved = false;
        const double eps = 1e-12 * (1.0 + std::abs(value));
        for (int i = 0; i < model.dimension; ++i) {
            double field = 0;
            for (const auto& [j, w] : adj[i])
                if (x[j]) field += w;
            double delta = (x[i] ? -1.0 : 1.0) * (model.linear[i] + field);
            if (delta < -eps) {
                x[i] ^= 1;
                value += delta;
                improved = true;
            }
        }
        ++out.sweeps;
        if (!improved) break;
    }
    out.qubo_value = qubo_value(model, x);
    return out;
}

enum class SubSolver { BranchAndBound, QaaApp, CustomSa };

struct SplitConfig {
    int num_clusters = 3;
    SubSolver subsolver = SubSolver::BranchAndBound;
    bool plain = false; // single-flip sweep, static budgets
    int iterations = 10;
    std::uint64_t seed = 0;
    int shots = 5000; // per QAA subproblem run
    QaaSchedule qaa = default_app_schedule();
    AnnealConfig anneal;
    double bb_time_limit_s = std::numeric_limits<double>::infinity();
    int sweep_cap = 50;
    unsigned workers = 1; // subproblem solves are independent
};

struct SplitTraceRow {
    int iteration = 0;
    std::vector<int> budgets;             // per cluster, as used this iteration
    std::vector<double> subproblem_costs; // per cluster (empty clusters omitted)
    double global_cost = 0;               // after the sweep step
};

struct SplitResult {
    Assignment best;
    double best_cost = std::numeric_limits<double>::infinity();
    int iterations_run = 0;
    std::vector<SplitTraceRow> trace;
    double wall_time_s = 0;
};

namespace detail {

inline Assignment solve_subproblem(const Subproblem& sub, const SplitConfig& config,
                                   std::uint64_t seed) {
    switch (config.subsolver) {
    case SubSolver::BranchAndBound:
        return solve_branch_and_bound(sub.instance, config.bb_time_limit_s).best;
    case SubSolver::QaaApp: {
        FeasibleStateVector fsv = run_qaa_app(sub.instance, config.qaa);
        SampleCounts counts = sample_counts(fsv, config.shots, seed);
        SampleMetrics metrics = run_metrics(counts, sub.instance, {});
        if (!metrics.best_feasible)
            throw std::runtime_error("QAA subproblem produced no feasible sample");
        return *metrics.best_feasible;
    }
    case SubSolver::CustomSa: {
        AnnealConfig cfg = config.anneal;
        cfg.seed = seed;
        return custom_sa_run(sub.instance, cfg).best;
    }
    }
    throw std::logic_error("solve_subproblem: unknown subsolver");
}

} // namespace detail

/// The decomposition loop: cluster sites, solve subproblems under local
/// budgets, stitch the solutions (disjoint over sites, hence feasible),
/// reconcile cross-cluster interactions with the greedy sweep, redistribute
/// budgets from the improved solution, iterate. The plain variant keeps
/// budgets static and uses the single-flip sweep instead.
inline SplitResult split_solve(const Instance& inst, const SplitConfig& config) {
    if (config.iterations < 1) throw std::invalid_argument("split_solve: iterations must be >= 1");
    Stopwatch timer;
    ClusterPartition partition =
        spectral_cluster(inst, config.num_clusters, derive_seed(config.seed, 0));
    partition = initial_budgets(partition, inst.n_antennas);

    SplitResult result;
    double prev_cost = std::numeric_limits<double>::quiet_NaN();
    for (int iter = 1; iter <= config.iterations; ++iter) {
        std::vector<Subproblem> subs = build_subproblems(inst, partition);
        std::vector<Assignment> locals(subs.size());
        std::vector<double> sub_costs(subs.size(), 0.0);
        parallel_for(subs.size(), config.workers, [&](std::size_t i) {
            try {
                locals[i] = detail::solve_subproblem(subs[i], config,
                                                     derive_seed(config.seed, iter, i));
                sub_costs[i] = cost(subs[i].instance, locals[i]);
            } catch (const std::exception& e) {
                throw std::runtime_error("split_solve: subproblem for cluster " +
                                         std::to_string(subs[i].cluster) + " failed: " +
                                         e.what());
            }
        });

        Assignment global(inst.n_sites, 0);
        for (std::size_t i = 0; i < subs.size(); ++i)
            for (std::size_t j = 0; j < subs[i].sites.size(); ++j)
                global[subs[i].sites[j]] = locals[i][j];

        SplitTraceRow row;
        row.iteration = iter;
        row.budgets = partition.budgets;
        row.subproblem_costs = sub_costs;

        double iter_cost;
        if (config.plain) {
            double concat_cost = cost(inst, global);
            if (concat_cost < result.best_cost) {
                result.best_cost = concat_cost;
                result.best = global;
            }
            PlainSweepResult plain =
                sweep_update_plain(inst, assignment_to_bits(inst.layout(), global),
                                   config.sweep_cap);
            iter_cost = concat_cost;
            if (is_feasible_bits(inst, plain.bits)) {
                Assignment swept = bits_to_assignment(inst.layout(), plain.bits);
                double swept_cost = cost(inst, swept);
                iter_cost = swept_cost;
                if (swept_cost < result.best_cost) {
                    result.best_cost = swept_cost;
                    result.best = std::move(swept);
                }
            }
            row.global_cost = iter_cost;
        } else {
            SweepResult swept = sweep_update(inst, partition, global, config.sweep_cap);
            iter_cost = swept.cost;
            row.global_cost = swept.cost;
            if (swept.cost < result.best_cost) {
                result.best_cost = swept.cost;
                result.best = swept.assignment;
            }
            partition = update_budgets(partition, swept.assignment);
        }
        result.trace.push_back(std::move(row));
        result.iterations_run = iter;
        if (iter > 1 && std::abs(iter_cost - prev_cost) <= 1e-12 * (1.0 + std::abs(iter_cost)))
            break;
        prev_cost = iter_cost;
    }
    result.wall_time_s = timer.seconds();
    return result;
}

} // namespace mapp
