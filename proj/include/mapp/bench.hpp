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

#include <json.hpp>

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mapp/anneal.hpp"
#include "mapp/common.hpp"
#include "mapp/exact.hpp"
#include "mapp/instance.hpp"
#include "mapp/metrics.hpp"
#include "mapp/qsim.hpp"
#include "mapp/qubo.hpp"
#include "mapp/split.hpp"

namespace mapp {

enum class Method {
    QaaBasic,
    QaaApp,
    Sa,
    CustomSa,
    Bb,
    Exact,
    QaaAppSplit,
    BbAppSplit,
    BbAppSplitPlain,
};

inline const std::vector<std::pair<Method, std::string>>& method_names() {
    static const std::vector<std::pair<Method, std::string>> names = {
        {Method::QaaBasic, "qaa-basic"},
        {Method::QaaApp, "qaa-app"},
        {Method::Sa, "sa"},
        {Method::CustomSa, "custom-sa"},
        {Method::Bb, "bb"},
        {Method::Exact, "exact"},
        {Method::QaaAppSplit, "qaa-app-split"},
        {Method::BbAppSplit, "bb-app-split"},
        {Method::BbAppSplitPlain, "bb-app-split-plain"},
    };
    return names;
}

inline std::string method_to_string(Method m) {
    for (const auto& [method, name] : method_names())
        if (method == m) return name;
    throw std::logic_error("method_to_string: unknown method");
}

inline Method method_from_string(const std::string& name) {
    for (const auto& [method, n] : method_names())
        if (n == name) return method;
    throw std::invalid_argument("unknown method: " + name);
}

enum class KRule { Half, FFrac };

/// Antenna-count rules used by the experiment regimes: half the sites, or
/// the subspace-maximizing fraction.
inline int k_from_rule(KRule rule, int n, int f) {
    if (rule == KRule::Half) return n / 2;
    return optimal_k(n, f);
}

struct SizePoint {
    int n = 0;
    int f = 0;
    int k = 0;
    int q() const { return n * (f + 1); }
};

struct MethodConfigs {
    QaaSchedule qaa_basic = default_basic_schedule();
    QaaSchedule qaa_app = default_app_schedule();
    AnnealConfig sa{500, 0, 0, 1000, 0, 1};
    AnnealConfig custom_sa{500, 0, 0, 100, 0, 1};
    int clusters = 3;
    int split_iterations = 10;
    int shots = 5000;
    double time_limit_s = 600.0;
    std::uint64_t brute_force_budget = 100000000ULL;
};

struct BenchmarkPlan {
    std::vector<SizePoint> points;
    int instances_per_point = 20;
    std::vector<Method> methods;
    std::uint64_t base_seed = 1;
    std::string reference = "auto"; // auto | exact | bb | none
    MethodConfigs configs;
    GeometryParams geometry;
    unsigned workers = 0; // 0 = default_worker_count()
};

struct ResultRow {
    SizePoint point;
    int point_index = 0;
    int instance_index = 0;
    std::uint64_t instance_seed = 0;
    Method method = Method::Exact;
    std::string status = "ok"; // or "skipped: <reason>" (never contains commas)
    Metrics metrics;
    std::optional<double> reference_cost;
};

namespace detail {

struct ReferenceSolution {
    std::optional<double> cost;
    std::vector<Assignment> optimal_set; // populated by the exhaustive reference only
};

inline ReferenceSolution compute_reference(const Instance& inst, const BenchmarkPlan& plan) {
    ReferenceSolution ref;
    const std::string& mode = plan.reference;
    if (mode == "none") return ref;
    bool use_exact;
    if (mode == "exact") {
        use_exact = true;
    } else if (mode == "bb") {
        use_exact = false;
    } else if (mode == "auto") {
        std::uint64_t space = 0;
        bool overflow = false;
        try {
            space = feasible_space_size(inst.n_sites, inst.n_freq, inst.n_antennas);
        } catch (const std::overflow_error&) {
            overflow = true;
        }
        use_exact = !overflow && space <= plan.configs.brute_force_budget;
    } else {
        throw std::invalid_argument("BenchmarkPlan: unknown reference mode " + mode);
    }
    if (use_exact) {
        SolveResult r = solve_brute_force(inst, plan.configs.brute_force_budget);
        ref.cost = r.best_cost;
        ref.optimal_set = std::move(r.optimal_set);
    } else {
        SolveResult r = solve_branch_and_bound(inst, plan.configs.time_limit_s);
        ref.cost = r.best_cost;
    }
    return ref;
}

inline void attach_delta_alpha(Metrics& m, const ReferenceSolution& ref) {
    if (!ref.cost || !m.best_cost || *ref.cost == 0.0) return;
    m.delta_alpha = delta_alpha(*m.best_cost, *ref.cost);
}

} // namespace detail

/// Optional side outputs of a method run, for export by the CLI.
struct RunArtifacts {
    std::optional<SampleCounts> counts;
    std::optional<StateVector> state;          // dense engine
    std::optional<FeasibleStateVector> fstate; // subspace engine
    std::optional<SplitResult> split;
    std::optional<Assignment> best;
};

/// Runs one method on one instance. `optimal_set` (when known) enables the
/// exact-success metric for the sampling methods.
inline Metrics run_method(const Instance& inst, Method method, const MethodConfigs& configs,
                          std::uint64_t seed, const std::vector<Assignment>& optimal_set,
                          RunArtifacts* artifacts = nullptr) {
    Stopwatch timer;
    Metrics m;
    switch (method) {
    case Method::Exact: {
        SolveResult r = solve_brute_force(inst, configs.brute_force_budget);
        m.best_cost = r.best_cost;
        m.feasible = true;
        m.optimal = r.optimal;
        if (artifacts) artifacts->best = r.best;
        break;
    }
    case Method::Bb: {
        SolveResult r = solve_branch_and_bound(inst, configs.time_limit_s);
        m.best_cost = r.best_cost;
        m.feasible = !r.best.empty();
        m.optimal = r.optimal;
        if (artifacts) artifacts->best = r.best;
        break;
    }
    case Method::Sa: {
        AnnealConfig cfg = configs.sa;
        cfg.seed = seed;
        QuboModel model = to_qubo(inst, inst.layout(), default_penalty(inst));
        SaResult r = sa_run(model, inst, cfg);
        if (r.best_feasible) {
            m.feasible = true;
            m.best_cost = cost(inst, *r.best_feasible);
            if (artifacts) artifacts->best = *r.best_feasible;
        }
        break;
    }
    case Method::CustomSa: {
        AnnealConfig cfg = configs.custom_sa;
        cfg.seed = seed;
        SolveResult r = custom_sa_run(inst, cfg);
        m.best_cost = r.best_cost;
        m.feasible = true;
        if (artifacts) artifacts->best = r.best;
        break;
    }
    case Method::QaaBasic: {
        StateVector sv = run_qaa_basic(inst, configs.qaa_basic);
        SampleCounts counts = sample_counts(sv, configs.shots, derive_seed(seed, 1));
        SampleMetrics sm = run_metrics(counts, inst, optimal_set);
        m.p_feasible = sm.p_feasible;
        m.p_success = sm.p_success;
        if (sm.best_feasible) {
            m.feasible = true;
            m.best_cost = sm.best_feasible_cost;
            if (artifacts) artifacts->best = *sm.best_feasible;
        }
        if (artifacts) {
            artifacts->counts = std::move(counts);
            artifacts->state = std::move(sv);
        }
        break;
    }
    case Method::QaaApp: {
        FeasibleStateVector fsv = run_qaa_app(inst, configs.qaa_app);
        SampleCounts counts = sample_counts(fsv, configs.shots, derive_seed(seed, 1));
        SampleMetrics sm = run_metrics(counts, inst, optimal_set);
        m.p_feasible = sm.p_feasible;
        m.p_success = sm.p_success;
        if (sm.best_feasible) {
            m.feasible = true;
            m.best_cost = sm.best_feasible_cost;
            if (artifacts) artifacts->best = *sm.best_feasible;
        }
        if (artifacts) {
            artifacts->counts = std::move(counts);
            artifacts->fstate = std::move(fsv);
        }
        break;
    }
    case Method::QaaAppSplit:
    case Method::BbAppSplit:
    case Method::BbAppSplitPlain: {
        SplitConfig cfg;
        cfg.num_clusters = configs.clusters;
        cfg.iterations = configs.split_iterations;
        cfg.seed = seed;
        cfg.shots = configs.shots;
        cfg.qaa = configs.qaa_app;
        cfg.anneal = configs.custom_sa;
        cfg.bb_time_limit_s = configs.time_limit_s;
        cfg.subsolver = method == Method::QaaAppSplit ? SubSolver::QaaApp
                                                      : SubSolver::BranchAndBound;
        cfg.plain = method == Method::BbAppSplitPlain;
        SplitResult r = split_solve(inst, cfg);
        m.best_cost = r.best_cost;
        m.feasible = true;
        if (artifacts) {
            artifacts->best = r.best;
            artifacts->split = std::move(r);
        }
        break;
    }
    }
    m.wall_time_s = timer.seconds();
    return m;
}

/// Executes the whole plan. Jobs are scheduled over a worker pool at the
/// instance level; rows come back in plan order with seeds derived from the
/// plan coordinates, so the result is independent of scheduling.
inline std::vector<ResultRow> run_benchmark(const BenchmarkPlan& plan) {
    if (plan.points.empty() || plan.methods.empty())
        throw std::invalid_argument("run_benchmark: empty plan");
    if (plan.instances_per_point < 1)
        throw std::invalid_argument("run_benchmark: instances_per_point must be >= 1");
    struct Job {
        int point_index;
        int instance_index;
    };
    std::vector<Job> jobs;
    for (int pi = 0; pi < static_cast<int>(plan.points.size()); ++pi)
        for (int ii = 0; ii < plan.instances_per_point; ++ii) jobs.push_back({pi, ii});

    const std::size_t methods_per_job = plan.methods.size();
    std::vector<ResultRow> rows(jobs.size() * methods_per_job);
    unsigned workers = plan.workers == 0 ? default_worker_count() : plan.workers;

    parallel_for(jobs.size(), workers, [&](std::size_t job_index) {
        const Job& job = jobs[job_index];
        const SizePoint& point = plan.points[job.point_index];
        const std::uint64_t inst_seed =
            derive_seed(plan.base_seed, 1 + job.point_index, job.instance_index);
        const Instance inst =
            generate_instance(point.n, point.f, point.k, inst_seed, plan.geometry);
        const detail::ReferenceSolution ref = detail::compute_reference(inst, plan);
        for (std::size_t mi = 0; mi < methods_per_job; ++mi) {
            ResultRow row;
            row.point = point;
            row.point_index = job.point_index;
            row.instance_index = job.instance_index;
            row.instance_seed = inst_seed;
            row.method = plan.methods[mi];
            row.reference_cost = ref.cost;
            try {
                row.metrics = run_method(inst, plan.methods[mi], plan.configs,
                                         derive_seed(inst_seed, 0xbe, mi), ref.optimal_set);
                detail::attach_delta_alpha(row.metrics, ref);
            } catch (const std::exception& e) {
                // Cap and budget overruns become skip rows; the batch lives on.
                std::string reason = e.what();
                for (char& ch : reason)
                    if (ch == ',' || ch == '\n') ch = ';';
                row.status = "skipped: " + reason;
            }
            rows[job_index * methods_per_job + mi] = std::move(row);
        }
    });
    return rows;
}

// --------------------------------------------------------------------------
// CSV emission. The results CSV is bytewise reproducible for a fixed plan
// and seeds; wall times are therefore reported separately.
// --------------------------------------------------------------------------

inline void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
    out << "n,f,k,q,point,instance,method,status,best_cost,ref_cost,delta_alpha,"
           "p_feasible,p_success,optimal\n";
    auto cell = [](const std::optional<double>& v) {
        return v ? format_double(*v) : std::string();
    };
    for (const ResultRow& r : rows) {
        out << r.point.n << ',' << r.point.f << ',' << r.point.k << ',' << r.point.q() << ','
            << r.point_index << ',' << r.instance_index << ',' << method_to_string(r.method)
            << ',' << r.status << ',' << cell(r.metrics.best_cost) << ','
            << cell(r.reference_cost) << ',' << cell(r.metrics.delta_alpha) << ','
            << cell(r.metrics.p_feasible) << ',' << cell(r.metrics.p_success) << ','
            << (r.metrics.optimal ? 1 : 0) << '\n';
    }
}

inline void write_timings_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
    out << "q,point,instance,method,wall_time_s\n";
    for (const ResultRow& r : rows)
        out << r.point.q() << ',' << r.point_index << ',' << r.instance_index << ','
            << method_to_string(r.method) << ',' << format_double(r.metrics.wall_time_s) << '\n';
}

/// Boxplot data per (problem size, method) group using the 1.5 IQR whisker
/// rule. Groups without values for the chosen metric are omitted.
inline void emit_boxplot_data(const std::vector<ResultRow>& rows, const std::string& metric,
                              std::ostream& out) {
    auto pick = [&](const ResultRow& r) -> std::optional<double> {
        if (metric == "p_feasible") return r.metrics.p_feasible;
        if (metric == "p_success") return r.metrics.p_success;
        if (metric == "delta_alpha") return r.metrics.delta_alpha;
        if (metric == "best_cost") return r.metrics.best_cost;
        throw std::invalid_argument("emit_boxplot_data: unknown metric " + metric);
    };
    std::vector<std::pair<int, Method>> group_order;
    std::map<std::pair<int, Method>, std::vector<double>> groups;
    for (const ResultRow& r : rows) {
        std::optional<double> v = pick(r);
        if (!v) continue;
        auto key = std::make_pair(r.point.q(), r.method);
        if (!groups.count(key)) group_order.push_back(key);
        groups[key].push_back(*v);
    }
    out << "size,method,count,median,q1,q3,whisker_lo,whisker_hi,outliers\n";
    for (const auto& key : group_order) {
        BoxStats b = box_stats(groups[key]);
        out << key.first << ',' << method_to_string(key.second) << ',' << b.count << ','
            << format_double(b.median) << ',' << format_double(b.q1) << ','
            << format_double(b.q3) << ',' << format_double(b.whisker_lo) << ','
            << format_double(b.whisker_hi) << ',';
        for (std::size_t i = 0; i < b.outliers.size(); ++i) {
            if (i) out << ';';
            out << format_double(b.outliers[i]);
        }
        out << '\n';
    }
}

/// Reads back a results CSV produced by write_results_csv.
inline std::vector<ResultRow> read_results_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_results_csv: empty file");
    std::vector<ResultRow> rows;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            std::size_t pos = s.find(',', start);
            cells.push_back(s.substr(start, pos - start));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        return cells;
    };
    auto opt_cell = [](const std::string& s) -> std::optional<double> {
        if (s.empty()) return std::nullopt;
        return std::stod(s);
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> c = split(line);
        if (c.size() != 14) throw std::runtime_error("read_results_csv: malformed row");
        ResultRow r;
        r.point.n = std::stoi(c[0]);
        r.point.f = std::stoi(c[1]);
        r.point.k = std::stoi(c[2]);
        r.point_index = std::stoi(c[4]);
        r.instance_index = std::stoi(c[5]);
        r.method = method_from_string(c[6]);
        r.status = c[7];
        r.metrics.best_cost = opt_cell(c[8]);
        r.reference_cost = opt_cell(c[9]);
        r.metrics.delta_alpha = opt_cell(c[10]);
        r.metrics.p_feasible = opt_cell(c[11]);
        r.metrics.p_success = opt_cell(c[12]);
        r.metrics.optimal = c[13] == "1";
        rows.push_back(std::move(r));
    }
    return rows;
}

// --------------------------------------------------------------------------
// Plan files
// --------------------------------------------------------------------------

inline BenchmarkPlan plan_from_json(const nlohmann::json& j) {
    BenchmarkPlan plan;
    KRule rule = KRule::FFrac;
    if (j.contains("k_rule")) {
        std::string r = j.at("k_rule").get<std::string>();
        if (r == "half")
            rule = KRule::Half;
        else if (r == "ffrac")
            rule = KRule::FFrac;
        else
            throw std::invalid_argument("plan: unknown k_rule " + r);
    }
    for (const auto& p : j.at("points")) {
        SizePoint point;
        point.n = p.at("n").get<int>();
        point.f = p.at("f").get<int>();
        point.k = p.contains("k") ? p.at("k").get<int>() : k_from_rule(rule, point.n, point.f);
        plan.points.push_back(point);
    }
    for (const auto& name : j.at("methods"))
        plan.methods.push_back(method_from_string(name.get<std::string>()));
    if (j.contains("instances_per_point"))
        plan.instances_per_point = j.at("instances_per_point").get<int>();
    if (j.contains("base_seed")) plan.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("reference")) plan.reference = j.at("reference").get<std::string>();
    if (j.contains("shots")) plan.configs.shots = j.at("shots").get<int>();
    if (j.contains("time_limit_s"))
        plan.configs.time_limit_s = j.at("time_limit_s").get<double>();
    if (j.contains("geometry")) {
        const auto& g = j.at("geometry");
        if (g.contains("width")) plan.geometry.width = g.at("width").get<double>();
        if (g.contains("height")) plan.geometry.height = g.at("height").get<double>();
        if (g.contains("r_min")) plan.geometry.r_min = g.at("r_min").get<double>();
        if (g.contains("r_max")) plan.geometry.r_max = g.at("r_max").get<double>();
    }
    auto schedule = [&](const char* key, QaaSchedule& s) {
        if (!j.contains(key)) return;
        const auto& q = j.at(key);
        if (q.contains("total_time")) s.total_time = q.at("total_time").get<double>();
        if (q.contains("layers")) s.layers = q.at("layers").get<int>();
        if (q.contains("mixer_steps")) s.mixer_steps = q.at("mixer_steps").get<int>();
        if (q.contains("beta")) s.beta = q.at("beta").get<double>();
        if (q.contains("lambda_scale")) s.lambda_scale = q.at("lambda_scale").get<double>();
    };
    schedule("qaa_basic", plan.configs.qaa_basic);
    schedule("qaa_app", plan.configs.qaa_app);
    auto anneal = [&](const char* key, AnnealConfig& a) {
        if (!j.contains(key)) return;
        const auto& s = j.at(key);
        if (s.contains("restarts")) a.restarts = s.at("restarts").get<int>();
        if (s.contains("sweeps")) a.sweeps = s.at("sweeps").get<int>();
        if (s.contains("t_initial")) a.t_initial = s.at("t_initial").get<double>();
        if (s.contains("t_final")) a.t_final = s.at("t_final").get<double>();
    };
    anneal("sa", plan.configs.sa);
    anneal("custom_sa", plan.configs.custom_sa);
    if (j.contains("split")) {
        const auto& s = j.at("split");
        if (s.contains("clusters")) plan.configs.clusters = s.at("clusters").get<int>();
        if (s.contains("iterations"))
            plan.configs.split_iterations = s.at("iterations").get<int>();
    }
    if (j.contains("workers")) plan.workers = j.at("workers").get<unsigned>();
    return plan;
}

} // namespace mapp
