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

#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "mapp/cli.hpp"
#include "mapp/io.hpp"

using namespace mapp;
using Catch::Approx;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("mapp_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

} // namespace

TEST_CASE("instance json round trip", "[cli]") {
    TempDir dir;
    Instance inst = generate_instance(6, 3, 3, 17);
    save_instance(inst, dir.file("inst.json"));
    Instance back = load_instance(dir.file("inst.json"));
    CHECK(back.n_sites == inst.n_sites);
    CHECK(back.n_freq == inst.n_freq);
    CHECK(back.n_antennas == inst.n_antennas);
    CHECK(back.alpha == inst.alpha);
    CHECK(back.areas == inst.areas);
    REQUIRE(back.overlaps.size() == inst.overlaps.size());
    for (std::size_t i = 0; i < inst.overlaps.size(); ++i)
        CHECK(back.overlaps[i].entries.front().value ==
              inst.overlaps[i].entries.front().value);
    // Costs agree on random assignments.
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        Assignment a = test_oracles::random_feasible(inst, rng);
        CHECK(cost(back, a) == cost(inst, a));
    }
}

TEST_CASE("explicit areas and overlaps override geometry", "[cli]") {
    nlohmann::json j = nlohmann::json::parse(R"({
        "n_sites": 2, "n_freq": 2, "n_antennas": 1, "alpha": 0.1,
        "sites": [{"x": 0, "y": 0, "r": 1}, {"x": 0, "y": 0, "r": 1}],
        "areas": [1.0, 2.0],
        "overlaps": [{"v": 1, "u": 2, "value": 0.5}]
    })");
    Instance inst = instance_from_json(j);
    CHECK(inst.areas == std::vector<double>{1.0, 2.0});
    CHECK(cost(inst, {1, 1}) == Approx(-2.5));
    CHECK(cost(inst, {1, 2}) == Approx(-2.8));

    SECTION("derived quantities when optional fields are missing") {
        nlohmann::json bare = nlohmann::json::parse(R"({
            "n_sites": 2, "n_freq": 1, "n_antennas": 1,
            "sites": [{"x": 0, "y": 0, "r": 1}, {"x": 10, "y": 0, "r": 1}]
        })");
        Instance b = instance_from_json(bare);
        CHECK(b.areas[0] == Approx(std::numbers::pi));
        CHECK(b.overlaps.empty()); // discs are far apart
        CHECK(b.alpha == Approx(0.01 * std::numbers::pi));
    }
}

TEST_CASE("qubo triplet export", "[cli]") {
    Instance inst = test_oracles::make_instance(2, 1, 1, {1.0, 2.0}, {{0, 1, 0.5}}, 0.0);
    QuboModel model = to_qubo(inst, inst.layout(), 2.0);
    std::ostringstream out;
    write_qubo_triplets(model, out);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    CHECK(header.rfind("# Q 4 ", 0) == 0);
    // Rebuild a model from the triplets and compare on all bitstrings.
    QuboModel parsed;
    parsed.dimension = model.dimension;
    parsed.linear.assign(model.dimension, 0.0);
    {
        std::istringstream h(header.substr(4));
        int dim;
        h >> dim >> parsed.constant >> parsed.penalty;
    }
    int i, j;
    double w;
    while (in >> i >> j >> w) {
        if (i == j)
            parsed.linear[i] += w;
        else
            parsed.add_quadratic(i, j, w);
    }
    for (int x = 0; x < 16; ++x) {
        Bitstring bits(4);
        for (int b = 0; b < 4; ++b) bits[b] = (x >> b) & 1;
        CHECK(qubo_value(parsed, bits) == Approx(qubo_value(model, bits)).margin(1e-12));
    }
}

TEST_CASE("state dumps round trip", "[cli]") {
    TempDir dir;
    SECTION("dense engine") {
        Instance inst = generate_instance(2, 2, 1, 5);
        StateVector sv = run_qaa_basic(inst, QaaSchedule{3.0, 4, 1, 1.0, 2.0});
        write_state_dump(sv, inst, dir.file("state.bin"));
        auto [header, amp] = read_state_dump(dir.file("state.bin"));
        CHECK(header.engine == 0);
        CHECK(header.n_sites == 2);
        CHECK(header.dimension == sv.amp.size());
        CHECK(amp == sv.amp);
    }
    SECTION("subspace engine") {
        FeasibleStateVector fsv = prepare_feasible_superposition(FeasibleBasis(3, 2, 1));
        write_state_dump(fsv, dir.file("fstate.bin"));
        auto [header, amp] = read_state_dump(dir.file("fstate.bin"));
        CHECK(header.engine == 1);
        CHECK(header.n_antennas == 1);
        CHECK(amp == fsv.amp);
    }
}

TEST_CASE("cli generate and solve", "[cli]") {
    TempDir dir;
    std::string inst_path = dir.file("inst.json");

    SECTION("generate writes a loadable instance") {
        int rc = cli_main({"generate", "--n", "7", "--f", "3", "--k-rule", "half", "--seed",
                           "1", "--out", inst_path});
        REQUIRE(rc == 0);
        Instance inst = load_instance(inst_path);
        CHECK(inst.n_sites == 7);
        CHECK(inst.n_antennas == 3); // half rule
    }
    SECTION("generate with the subspace-maximizing rule") {
        int rc = cli_main({"generate", "--n", "8", "--f", "3", "--k-rule", "ffrac", "--seed",
                           "6", "--out", inst_path});
        REQUIRE(rc == 0);
        CHECK(load_instance(inst_path).n_antennas == 6); // floor(3/4 * 9)
    }
    SECTION("generate with explicit k and qubo export") {
        int rc = cli_main({"generate", "--n", "4", "--f", "2", "--k", "2", "--seed", "2",
                           "--out", inst_path, "--export-qubo", dir.file("q.txt")});
        REQUIRE(rc == 0);
        std::string q = slurp(dir.file("q.txt"));
        CHECK(q.rfind("# Q 12 ", 0) == 0);
    }
    SECTION("solve emits metrics json") {
        REQUIRE(cli_main({"generate", "--n", "5", "--f", "3", "--k", "2", "--seed", "3",
                          "--out", inst_path}) == 0);
        std::string out_path = dir.file("metrics.json");
        int rc = cli_main({"solve", "--instance", inst_path, "--method", "qaa-app", "--shots",
                           "500", "--seed", "2", "--out", out_path});
        REQUIRE(rc == 0);
        nlohmann::json j = nlohmann::json::parse(slurp(out_path));
        CHECK(j.at("method") == "qaa-app");
        CHECK(j.at("p_feasible") == 1.0);
        CHECK(j.at("feasible") == true);
        double p_success = j.at("p_success");
        double p_feasible = j.at("p_feasible");
        CHECK(p_success <= p_feasible);
        CHECK(j.contains("delta_alpha"));
    }
    SECTION("solve with counts, state dump and split trace") {
        REQUIRE(cli_main({"generate", "--n", "6", "--f", "2", "--k", "3", "--seed", "4",
                          "--out", inst_path}) == 0);
        REQUIRE(cli_main({"solve", "--instance", inst_path, "--method", "qaa-app", "--shots",
                          "200", "--seed", "1", "--counts-out", dir.file("counts.json"),
                          "--dump-state", dir.file("state.bin")}) == 0);
        nlohmann::json counts = nlohmann::json::parse(slurp(dir.file("counts.json")));
        std::uint64_t total = 0;
        for (auto& [key, c] : counts.items()) {
            CHECK(key.size() == 18);
            total += c.get<std::uint64_t>();
        }
        CHECK(total == 200);
        auto [header, amp] = read_state_dump(dir.file("state.bin"));
        CHECK(header.engine == 1);

        REQUIRE(cli_main({"solve", "--instance", inst_path, "--method", "bb-app-split",
                          "--clusters", "2", "--seed", "1", "--trace",
                          dir.file("trace.jsonl")}) == 0);
        std::istringstream trace(slurp(dir.file("trace.jsonl")));
        std::string line;
        int lines = 0;
        while (std::getline(trace, line)) {
            nlohmann::json row = nlohmann::json::parse(line);
            CHECK(row.contains("budgets"));
            CHECK(row.contains("global_cost"));
            ++lines;
        }
        CHECK(lines >= 1);
    }
    SECTION("exact subcommand") {
        REQUIRE(cli_main({"generate", "--n", "5", "--f", "2", "--k", "2", "--seed", "5",
                          "--out", inst_path}) == 0);
        std::string out_path = dir.file("exact.json");
        REQUIRE(cli_main({"exact", "--instance", inst_path, "--out", out_path}) == 0);
        nlohmann::json j = nlohmann::json::parse(slurp(out_path));
        CHECK(j.at("optimal") == true);
        CHECK(j.at("best_assignment").size() == 5);
    }
    SECTION("exit codes") {
        CHECK(cli_main({"solve", "--no-such-flag"}) == 2);
        CHECK(cli_main({"frobnicate"}) == 2);
        CHECK(cli_main({"solve", "--instance", dir.file("missing.json"), "--method",
                        "exact"}) == 1);
        CHECK(cli_main({"--help"}) == 0);
    }
}

TEST_CASE("cli benchmark and boxplot", "[cli]") {
    TempDir dir;
    std::string plan_path = dir.file("plan.json");
    {
        std::ofstream plan(plan_path);
        plan << R"({
            "points": [{"n": 4, "f": 2, "k": 2}],
            "instances_per_point": 3,
            "methods": ["exact", "qaa-app", "custom-sa"],
            "base_seed": 77,
            "shots": 400,
            "custom_sa": {"restarts": 10}
        })";
    }
    std::string csv_path = dir.file("results.csv");
    REQUIRE(cli_main({"benchmark", "--plan", plan_path, "--out", csv_path, "--times-out",
                      dir.file("times.csv")}) == 0);
    std::string csv = slurp(csv_path);
    CHECK(csv.find("qaa-app") != std::string::npos);

    SECTION("repeat runs are byte-identical") {
        std::string again = dir.file("again.csv");
        REQUIRE(cli_main({"benchmark", "--plan", plan_path, "--out", again}) == 0);
        CHECK(slurp(again) == csv);
    }
    SECTION("boxplot from the results") {
        std::string box_path = dir.file("box.csv");
        REQUIRE(cli_main({"boxplot", "--results", csv_path, "--metric", "p_success", "--out",
                          box_path}) == 0);
        std::string box = slurp(box_path);
        CHECK(box.find("size,method,count,median") == 0);
        CHECK(box.find("qaa-app") != std::string::npos);
    }
}
