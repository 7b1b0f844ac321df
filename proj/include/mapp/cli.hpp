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

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mapp/bench.hpp"
#include "mapp/io.hpp"

namespace mapp {

namespace detail {

inline nlohmann::json metrics_to_json(const Instance& inst, Method method, const Metrics& m,
                                      const std::optional<double>& ref_cost,
                                      const std::optional<Assignment>& best) {
    nlohmann::json j;
    j["method"] = method_to_string(method);
    j["n"] = inst.n_sites;
    j["f"] = inst.n_freq;
    j["k"] = inst.n_antennas;
    j["q"] = inst.n_qubits();
    j["feasible"] = m.feasible;
    j["optimal"] = m.optimal;
    if (m.best_cost) j["best_cost"] = *m.best_cost;
    if (best) j["best_assignment"] = *best;
    if (m.p_feasible) j["p_feasible"] = *m.p_feasible;
    if (m.p_success) j["p_success"] = *m.p_success;
    if (m.delta_alpha) j["delta_alpha"] = *m.delta_alpha;
    if (ref_cost) j["reference_cost"] = *ref_cost;
    j["wall_time_s"] = m.wall_time_s;
    return j;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << content;
}

inline void write_split_trace(const SplitResult& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    for (const SplitTraceRow& row : r.trace) {
        nlohmann::json j;
        j["iteration"] = row.iteration;
        j["budgets"] = row.budgets;
        j["subproblem_costs"] = row.subproblem_costs;
        j["global_cost"] = row.global_cost;
        out << j.dump() << "\n";
    }
}

} // namespace detail

/// Entry point shared by the binary and the in-process tests. `args` holds
/// the command line without the program name. Returns 0 on success, 2 for
/// invalid arguments, 1 for runtime failures.
inline int cli_main(std::vector<std::string> args) {
    CLI::App app{"mapp: solvers and benchmarks for multi-frequency antenna placement"};
    app.require_subcommand(1);

    // ---- generate ----
    auto* gen = app.add_subcommand("generate", "Generate a random planar instance");
    int gen_n = 0, gen_f = 3;
    std::optional<int> gen_k;
    std::string gen_k_rule = "ffrac";
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    GeometryParams geom;
    std::string gen_qubo_out;
    gen->add_option("--n", gen_n, "number of candidate sites")->required();
    gen->add_option("--f", gen_f, "number of frequencies");
    gen->add_option("--k", gen_k, "number of antennas (overrides --k-rule)");
    gen->add_option("--k-rule", gen_k_rule, "antenna-count rule: half | ffrac")
        ->check(CLI::IsMember({"half", "ffrac"}));
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output instance JSON path")->required();
    gen->add_option("--box-w", geom.width, "bounding-box width");
    gen->add_option("--box-h", geom.height, "bounding-box height");
    gen->add_option("--rmin", geom.r_min, "minimum coverage radius");
    gen->add_option("--rmax", geom.r_max, "maximum coverage radius");
    gen->add_option("--export-qubo", gen_qubo_out, "also write the penalty model as triplets");

    // ---- solve ----
    auto* solve = app.add_subcommand("solve", "Run one solver on one instance");
    std::string solve_instance, solve_method_name;
    MethodConfigs configs;
    std::uint64_t solve_seed = 0;
    std::string solve_reference = "auto";
    std::string solve_out, counts_out, dump_state_out, trace_out;
    std::optional<int> opt_layers, opt_mixer_steps, opt_restarts, opt_sweeps;
    std::optional<double> opt_total_time, opt_beta, opt_lambda_scale;
    solve->add_option("--instance", solve_instance, "instance JSON path")->required();
    solve->add_option("--method", solve_method_name,
                      "qaa-basic | qaa-app | sa | custom-sa | bb | exact | qaa-app-split | "
                      "bb-app-split | bb-app-split-plain")
        ->required();
    solve->add_option("--shots", configs.shots, "measurement shots for sampling methods");
    solve->add_option("--layers,-L", opt_layers, "adiabatic layers");
    solve->add_option("--mixer-steps,-M", opt_mixer_steps, "mixer Trotter steps");
    solve->add_option("--total-time,-T", opt_total_time, "total evolution time");
    solve->add_option("--beta", opt_beta, "mixer strength");
    solve->add_option("--lambda-scale", opt_lambda_scale, "penalty proportionality factor");
    solve->add_option("--clusters", configs.clusters, "subproblem count for split methods");
    solve->add_option("--iterations", configs.split_iterations, "split iterations");
    solve->add_option("--restarts", opt_restarts, "annealing restarts");
    solve->add_option("--sweeps", opt_sweeps, "annealing sweeps per restart");
    solve->add_option("--seed", solve_seed, "method seed");
    solve->add_option("--time-limit-s", configs.time_limit_s, "branch-and-bound time limit");
    solve->add_option("--reference", solve_reference, "auto | exact | bb | none")
        ->check(CLI::IsMember({"auto", "exact", "bb", "none"}));
    solve->add_option("--out", solve_out, "also write the metrics JSON here");
    solve->add_option("--counts-out", counts_out, "write sampled counts as JSON");
    solve->add_option("--dump-state", dump_state_out, "write the final state (binary)");
    solve->add_option("--trace", trace_out, "write the split iteration trace (JSON lines)");

    // ---- exact ----
    auto* exact_cmd = app.add_subcommand("exact", "Exact reference solve");
    std::string exact_instance, exact_out;
    double exact_time_limit = 600.0;
    std::uint64_t exact_budget = 100000000ULL;
    exact_cmd->add_option("--instance", exact_instance, "instance JSON path")->required();
    exact_cmd->add_option("--time-limit-s", exact_time_limit,
                          "time limit when falling back to branch and bound");
    exact_cmd->add_option("--budget", exact_budget, "feasible-space cap for exhaustive search");
    exact_cmd->add_option("--out", exact_out, "also write the result JSON here");

    // ---- benchmark ----
    auto* bench_cmd = app.add_subcommand("benchmark", "Run a benchmark plan");
    std::string plan_path, results_out, times_out, box_metric, box_out;
    bench_cmd->add_option("--plan", plan_path, "plan JSON path")->required();
    bench_cmd->add_option("--out", results_out, "results CSV path")->required();
    bench_cmd->add_option("--times-out", times_out, "per-run wall times CSV path");
    bench_cmd->add_option("--boxplot-metric", box_metric,
                          "also emit boxplot data for this metric");
    bench_cmd->add_option("--boxplot-out", box_out, "boxplot CSV path");

    // ---- boxplot ----
    auto* box_cmd = app.add_subcommand("boxplot", "Boxplot data from a results CSV");
    std::string box_results, box_metric2, box_out2;
    box_cmd->add_option("--results", box_results, "results CSV path")->required();
    box_cmd->add_option("--metric", box_metric2,
                        "p_feasible | p_success | delta_alpha | best_cost")
        ->required();
    box_cmd->add_option("--out", box_out2, "output CSV path")->required();

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help() << std::flush;
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help() << std::flush;
        return 2;
    }

    try {
        if (gen->parsed()) {
            int k = gen_k ? *gen_k
                          : k_from_rule(gen_k_rule == "half" ? KRule::Half : KRule::FFrac,
                                        gen_n, gen_f);
            Instance inst = generate_instance(gen_n, gen_f, k, gen_seed, geom);
            save_instance(inst, gen_out);
            if (!gen_qubo_out.empty()) {
                std::ofstream out(gen_qubo_out);
                if (!out) throw std::runtime_error("cannot open " + gen_qubo_out);
                write_qubo_triplets(to_qubo(inst, inst.layout(), default_penalty(inst)), out);
            }
            std::cout << "wrote " << gen_out << " (n=" << gen_n << " f=" << gen_f
                      << " k=" << k << ")\n";
            return 0;
        }

        if (solve->parsed()) {
            const Instance inst = load_instance(solve_instance);
            const Method method = method_from_string(solve_method_name);
            if (opt_layers) {
                configs.qaa_basic.layers = *opt_layers;
                configs.qaa_app.layers = *opt_layers;
            }
            if (opt_mixer_steps) configs.qaa_app.mixer_steps = *opt_mixer_steps;
            if (opt_total_time) {
                configs.qaa_basic.total_time = *opt_total_time;
                configs.qaa_app.total_time = *opt_total_time;
            }
            if (opt_beta) configs.qaa_app.beta = *opt_beta;
            if (opt_lambda_scale) configs.qaa_basic.lambda_scale = *opt_lambda_scale;
            if (opt_restarts) {
                configs.sa.restarts = *opt_restarts;
                configs.custom_sa.restarts = *opt_restarts;
            }
            if (opt_sweeps) {
                configs.sa.sweeps = *opt_sweeps;
                configs.custom_sa.sweeps = *opt_sweeps;
            }

            BenchmarkPlan ref_plan;
            ref_plan.reference = solve_reference;
            ref_plan.configs = configs;
            detail::ReferenceSolution ref = detail::compute_reference(inst, ref_plan);

            RunArtifacts artifacts;
            Metrics metrics =
                run_method(inst, method, configs, solve_seed, ref.optimal_set, &artifacts);
            detail::attach_delta_alpha(metrics, ref);

            if (!counts_out.empty()) {
                if (!artifacts.counts)
                    throw std::runtime_error("--counts-out requires a sampling method");
                detail::write_text_file(counts_out,
                                        counts_to_json(*artifacts.counts).dump(2) + "\n");
            }
            if (!dump_state_out.empty()) {
                if (artifacts.state)
                    write_state_dump(*artifacts.state, inst, dump_state_out);
                else if (artifacts.fstate)
                    write_state_dump(*artifacts.fstate, dump_state_out);
                else
                    throw std::runtime_error("--dump-state requires a quantum method");
            }
            if (!trace_out.empty()) {
                if (!artifacts.split)
                    throw std::runtime_error("--trace requires a split method");
                detail::write_split_trace(*artifacts.split, trace_out);
            }

            nlohmann::json j = detail::metrics_to_json(inst, method, metrics, ref.cost,
                                                       artifacts.best);
            std::cout << j.dump(2) << "\n";
            if (!solve_out.empty()) detail::write_text_file(solve_out, j.dump(2) + "\n");
            return 0;
        }

        if (exact_cmd->parsed()) {
            const Instance inst = load_instance(exact_instance);
            SolveResult result;
            bool within_budget = true;
            try {
                within_budget =
                    feasible_space_size(inst.n_sites, inst.n_freq, inst.n_antennas) <=
                    exact_budget;
            } catch (const std::overflow_error&) {
                within_budget = false;
            }
            if (within_budget)
                result = solve_brute_force(inst, exact_budget);
            else
                result = solve_branch_and_bound(inst, exact_time_limit);
            nlohmann::json j = solve_result_to_json(result);
            std::cout << j.dump(2) << "\n";
            if (!exact_out.empty()) detail::write_text_file(exact_out, j.dump(2) + "\n");
            return 0;
        }

        if (bench_cmd->parsed()) {
            std::ifstream in(plan_path);
            if (!in) throw std::runtime_error("cannot open " + plan_path);
            nlohmann::json pj;
            in >> pj;
            BenchmarkPlan plan = plan_from_json(pj);
            std::vector<ResultRow> rows = run_benchmark(plan);
            {
                std::ofstream out(results_out);
                if (!out) throw std::runtime_error("cannot open " + results_out);
                write_results_csv(rows, out);
            }
            if (!times_out.empty()) {
                std::ofstream out(times_out);
                if (!out) throw std::runtime_error("cannot open " + times_out);
                write_timings_csv(rows, out);
            }
            if (!box_metric.empty()) {
                if (box_out.empty())
                    throw std::runtime_error("--boxplot-metric requires --boxplot-out");
                std::ofstream out(box_out);
                if (!out) throw std::runtime_error("cannot open " + box_out);
                emit_boxplot_data(rows, box_metric, out);
            }
            std::cout << "wrote " << results_out << " (" << rows.size() << " rows)\n";
            return 0;
        }

        if (box_cmd->parsed()) {
            std::ifstream in(box_results);
            if (!in) throw std::runtime_error("cannot open " + box_results);
            std::vector<ResultRow> rows = read_results_csv(in);
            std::ofstream out(box_out2);
            if (!out) throw std::runtime_error("cannot open " + box_out2);
            emit_boxplot_data(rows, box_metric2, out);
            std::cout << "wrote " << box_out2 << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace mapp
