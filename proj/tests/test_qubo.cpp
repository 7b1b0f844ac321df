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

#include <limits>

#include "helpers.hpp"
#include "mapp/exact.hpp"
#include "mapp/qsim.hpp"
#include "mapp/qubo.hpp"

using namespace mapp;

TEST_CASE("qubo_value evaluates the quadratic form", "[qubo]") {
    QuboModel m;
    m.dimension = 3;
    m.linear = {1.0, -2.0, 0.5};
    m.constant = 4.0;
    m.add_quadratic(0, 2, 3.0);

    CHECK(qubo_value(m, {0, 0, 0}) == 4.0);
    CHECK(qubo_value(m, {0, 1, 0}) == 2.0);
    CHECK(qubo_value(m, {1, 0, 1}) == Catch::Approx(4.0 + 1.0 + 0.5 + 3.0));
    CHECK_THROWS_AS(qubo_value(m, {0, 1}), std::invalid_argument);
}

TEST_CASE("penalty model agrees with the residual form", "[qubo]") {
    Instance inst = generate_instance(4, 3, 2, 5);
    const QubitLayout layout = inst.layout();
    const double lambda = 3.7;
    QuboModel model = to_qubo(inst, layout, lambda);
    CHECK(model.dimension == layout.n_qubits());

    SECTION("all-zero bitstring costs lambda * (N + k^2)") {
        Bitstring zeros(model.dimension, 0);
        CHECK(qubo_value(model, zeros) ==
              Catch::Approx(lambda * (inst.n_sites + inst.n_antennas * inst.n_antennas)));
    }
    SECTION("random bitstrings match the independent evaluator") {
        Rng rng(17);
        for (int trial = 0; trial < 1000; ++trial) {
            Bitstring bits(model.dimension);
            for (auto& b : bits) b = rng.coin();
            double direct = test_oracles::penalty_form_value(inst, lambda, bits);
            CHECK(qubo_value(model, bits) == Catch::Approx(direct).margin(1e-9));
        }
    }
    SECTION("feasible points recover the plain cost") {
        Rng rng(23);
        for (int trial = 0; trial < 200; ++trial) {
            Assignment a = test_oracles::random_feasible(inst, rng);
            double reference = cost(inst, a);
            double viaqubo = qubo_value(model, assignment_to_bits(layout, a));
            CHECK(viaqubo == Catch::Approx(reference).epsilon(1e-12).margin(1e-12));
        }
    }
    SECTION("infeasible points pay at least one penalty unit") {
        Rng rng(29);
        int checked = 0;
        while (checked < 200) {
            Bitstring bits(model.dimension);
            for (auto& b : bits) b = rng.coin();
            if (is_feasible_bits(inst, bits)) continue;
            ++checked;
            // Cost of an arbitrary bitstring is its residual-free polynomial.
            double poly = test_oracles::penalty_form_value(inst, 0.0, bits);
            CHECK(qubo_value(model, bits) >= poly + lambda - 1e-9);
        }
    }
    CHECK_THROWS_AS(to_qubo(inst, layout, 0.0), std::invalid_argument);
}

TEST_CASE("qubo minimum sits on a feasible point for the default penalty", "[qubo]") {
    // Exhaustive over all bitstrings on a small instance.
    Instance inst = test_oracles::make_instance(2, 2, 1, {1.0, 2.0}, {{0, 1, 0.5}}, 0.1);
    const QubitLayout layout = inst.layout();
    double max_coeff = 2.0;
    QuboModel model = to_qubo(inst, layout, 10.0 * max_coeff);

    double best_qubo = std::numeric_limits<double>::infinity();
    Bitstring best_bits;
    for (int x = 0; x < (1 << model.dimension); ++x) {
        Bitstring bits(model.dimension);
        for (int i = 0; i < model.dimension; ++i) bits[i] = (x >> i) & 1;
        double v = qubo_value(model, bits);
        if (v < best_qubo) {
            best_qubo = v;
            best_bits = bits;
        }
    }
    double best_cost = std::numeric_limits<double>::infinity();
    for (const Assignment& a : test_oracles::enumerate_feasible(2, 2, 1))
        best_cost = std::min(best_cost, cost(inst, a));
    CHECK(is_feasible_bits(inst, best_bits));
    CHECK(best_qubo == Catch::Approx(best_cost));
}

TEST_CASE("default penalty scales with the largest coefficient", "[qubo]") {
    Instance inst = test_oracles::make_instance(2, 1, 1, {1.0, 2.0}, {{0, 1, 0.5}}, 0.0);
    CHECK(default_penalty(inst) == Catch::Approx(4.0)); // c = 2, max coeff 2
    CHECK(default_penalty(inst, 3.0) == Catch::Approx(6.0));

    SECTION("homogeneous under rescaling") {
        Instance scaled = test_oracles::make_instance(2, 1, 1, {10.0, 20.0}, {{0, 1, 5.0}}, 0.0);
        CHECK(default_penalty(scaled) == Catch::Approx(10.0 * default_penalty(inst)));
    }
    SECTION("zero instance falls back to one") {
        Instance zero = test_oracles::make_instance(2, 1, 1, {0.0, 0.0}, {}, 0.0);
        CHECK(default_penalty(zero) == 1.0);
    }
    SECTION("default factor keeps the qubo optimum feasible on a small pool") {
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
            for (int n = 2; n <= 4; ++n) {
                Instance inst2 = generate_instance(n, 2, (n + 1) / 2, seed);
                QuboModel model = to_qubo(inst2, inst2.layout(), default_penalty(inst2));
                double best = std::numeric_limits<double>::infinity();
                Bitstring best_bits;
                for (int x = 0; x < (1 << model.dimension); ++x) {
                    Bitstring bits(model.dimension);
                    for (int i = 0; i < model.dimension; ++i) bits[i] = (x >> i) & 1;
                    double v = qubo_value(model, bits);
                    if (v < best) {
                        best = v;
                        best_bits = bits;
                    }
                }
                CHECK(is_feasible_bits(inst2, best_bits));
            }
        }
    }
}

TEST_CASE("max norm and normalization", "[qubo]") {
    QuboModel m;
    m.dimension = 2;
    m.linear = {-4.0, 2.0};
    m.constant = 1.0;
    CHECK(max_norm(m) == 4.0);

    QuboModel n1 = normalized(m);
    CHECK(max_norm(n1) == Catch::Approx(1.0));
    QuboModel n2 = normalized(n1);
    CHECK(n2.linear[0] == Catch::Approx(n1.linear[0]));
    CHECK(n2.constant == Catch::Approx(n1.constant));

    QuboModel zero;
    zero.dimension = 1;
    zero.linear = {0.0};
    CHECK_THROWS_AS(normalized(zero), std::invalid_argument);

    SECTION("bitstring ordering is unchanged") {
        Instance inst = test_oracles::make_instance(2, 2, 1, {1.0, 2.0}, {{0, 1, 0.5}}, 0.1);
        QuboModel model = to_qubo(inst, inst.layout(), default_penalty(inst));
        QuboModel norm = normalized(model);
        int argmin_a = 0, argmin_b = 0;
        double va = std::numeric_limits<double>::infinity();
        double vb = va;
        for (int x = 0; x < (1 << model.dimension); ++x) {
            Bitstring bits(model.dimension);
            for (int i = 0; i < model.dimension; ++i) bits[i] = (x >> i) & 1;
            double a = qubo_value(model, bits);
            double b = qubo_value(norm, bits);
            if (a < va) {
                va = a;
                argmin_a = x;
            }
            if (b < vb) {
                vb = b;
                argmin_b = x;
            }
        }
        CHECK(argmin_a == argmin_b);
    }
}

TEST_CASE("qubo value table matches pointwise evaluation", "[qubo]") {
    Instance inst = generate_instance(3, 2, 2, 31);
    QuboModel model = to_qubo(inst, inst.layout(), default_penalty(inst));
    std::vector<double> table = qubo_value_table(model);
    REQUIRE(table.size() == std::size_t{1} << model.dimension);
    for (std::size_t x = 0; x < table.size(); ++x) {
        Bitstring bits(model.dimension);
        for (int i = 0; i < model.dimension; ++i) bits[i] = (x >> i) & 1;
        CHECK(table[x] == Catch::Approx(qubo_value(model, bits)).margin(1e-9));
    }
}
