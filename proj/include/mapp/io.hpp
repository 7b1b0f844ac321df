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

#include <complex>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mapp/exact.hpp"
#include "mapp/instance.hpp"
#include "mapp/qsim.hpp"
#include "mapp/qubo.hpp"

namespace mapp {

// --------------------------------------------------------------------------
// Instance files. Site and overlap indices are 1-based on disk, 0-based in
// memory. Explicit "areas"/"overlaps" override the geometric computation;
// overlap entries are frequency-diagonal.
// --------------------------------------------------------------------------

inline nlohmann::json instance_to_json(const Instance& inst) {
    nlohmann::json j;
    j["n_sites"] = inst.n_sites;
    j["n_freq"] = inst.n_freq;
    j["n_antennas"] = inst.n_antennas;
    j["alpha"] = inst.alpha;
    nlohmann::json sites = nlohmann::json::array();
    for (int v = 0; v < inst.n_sites; ++v) {
        Site s = inst.sites.empty() ? Site{} : inst.sites[v];
        sites.push_back({{"x", s.x}, {"y", s.y}, {"r", s.r}});
    }
    j["sites"] = sites;
    j["areas"] = inst.areas;
    if (!inst.frequency_diagonal())
        throw std::runtime_error(
            "instance_to_json: the file schema stores frequency-diagonal overlaps only");
    nlohmann::json overlaps = nlohmann::json::array();
    for (const PairOverlap& po : inst.overlaps)
        overlaps.push_back(
            {{"v", po.v + 1}, {"u", po.u + 1}, {"value", po.entries.front().value}});
    j["overlaps"] = overlaps;
    return j;
}

inline Instance instance_from_json(const nlohmann::json& j) {
    Instance inst;
    inst.n_sites = j.at("n_sites").get<int>();
    inst.n_freq = j.at("n_freq").get<int>();
    inst.n_antennas = j.at("n_antennas").get<int>();
    if (!j.contains("sites"))
        throw std::runtime_error("instance_from_json: missing \"sites\"");
    for (const auto& s : j.at("sites"))
        inst.sites.push_back(
            {s.at("x").get<double>(), s.at("y").get<double>(), s.at("r").get<double>()});
    if (static_cast<int>(inst.sites.size()) != inst.n_sites)
        throw std::runtime_error("instance_from_json: sites count mismatch");
    if (j.contains("areas")) {
        inst.areas = j.at("areas").get<std::vector<double>>();
    } else {
        for (const Site& s : inst.sites) inst.areas.push_back(std::numbers::pi * s.r * s.r);
    }
    if (j.contains("overlaps")) {
        for (const auto& o : j.at("overlaps")) {
            PairOverlap po;
            po.v = o.at("v").get<int>() - 1;
            po.u = o.at("u").get<int>() - 1;
            if (po.v > po.u) std::swap(po.v, po.u);
            double w = o.at("value").get<double>();
            if (w == 0.0) continue;
            for (int p = 1; p <= inst.n_freq; ++p) po.entries.push_back({p, p, w});
            inst.overlaps.push_back(std::move(po));
        }
    } else {
        for (int v = 0; v < inst.n_sites; ++v)
            for (int u = v + 1; u < inst.n_sites; ++u) {
                double d = std::hypot(inst.sites[v].x - inst.sites[u].x,
                                      inst.sites[v].y - inst.sites[u].y);
                double w = disc_overlap_area(inst.sites[v].r, inst.sites[u].r, d);
                if (w <= 0.0) continue;
                PairOverlap po;
                po.v = v;
                po.u = u;
                for (int p = 1; p <= inst.n_freq; ++p) po.entries.push_back({p, p, w});
                inst.overlaps.push_back(std::move(po));
            }
    }
    if (j.contains("alpha")) {
        inst.alpha = j.at("alpha").get<double>();
    } else {
        double max_area = 0;
        for (double a : inst.areas) max_area = std::max(max_area, a);
        inst.alpha = 0.01 * max_area;
    }
    inst.finalize();
    return inst;
}

inline void save_instance(const Instance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_instance: cannot open " + path);
    out << instance_to_json(inst).dump(2) << "\n";
}

inline Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_instance: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return instance_from_json(j);
}

// --------------------------------------------------------------------------
// QUBO export: sparse triplets, diagonal entries carry the linear terms.
// --------------------------------------------------------------------------

inline void write_qubo_triplets(const QuboModel& m, std::ostream& out) {
    out << "# Q " << m.dimension << " " << format_double(m.constant) << " "
        << format_double(m.penalty) << "\n";
    for (int i = 0; i < m.dimension; ++i)
        if (m.linear[i] != 0.0)
            out << i << " " << i << " " << format_double(m.linear[i]) << "\n";
    for (const auto& [key, w] : m.quadratic)
        if (w != 0.0) out << key.first << " " << key.second << " " << format_double(w) << "\n";
}

// --------------------------------------------------------------------------
// Counts and solver results
// --------------------------------------------------------------------------

inline nlohmann::json counts_to_json(const SampleCounts& counts) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, c] : counts.counts) j[key] = c;
    return j;
}

inline nlohmann::json solve_result_to_json(const SolveResult& r) {
    nlohmann::json j;
    j["best_assignment"] = r.best;
    j["best_cost"] = r.best_cost;
    j["optimal"] = r.optimal;
    j["nodes"] = r.nodes;
    j["wall_time_s"] = r.wall_time_s;
    if (!r.optimal_set.empty()) j["optimal_count"] = r.optimal_set.size();
    return j;
}

// --------------------------------------------------------------------------
// Binary state dumps: 8-byte magic, engine tag, sizes, then little-endian
// complex doubles (host byte order; this toolkit targets little-endian).
// --------------------------------------------------------------------------

struct StateDumpHeader {
    char magic[8];
    std::uint8_t engine; // 0 dense, 1 feasible-subspace
    std::uint8_t pad[3] = {0, 0, 0};
    std::uint32_t n_sites = 0;
    std::uint32_t n_freq = 0;
    std::uint32_t n_antennas = 0;
    std::uint64_t dimension = 0;
};

inline constexpr char kStateDumpMagic[8] = {'M', 'A', 'P', 'P', 'S', 'V', '0', '1'};

namespace detail {

inline void write_state_payload(std::ostream& out, const StateDumpHeader& header,
                                const std::vector<std::complex<double>>& amp) {
    out.write(reinterpret_cast<const char*>(&header), sizeof(header));
    out.write(reinterpret_cast<const char*>(amp.data()),
              static_cast<std::streamsize>(amp.size() * sizeof(std::complex<double>)));
    if (!out) throw std::runtime_error("write_state_dump: write failed");
}

} // namespace detail

inline void write_state_dump(const StateVector& sv, const Instance& inst,
                             const std::string& path) {
    StateDumpHeader h{};
    std::memcpy(h.magic, kStateDumpMagic, 8);
    h.engine = 0;
    h.n_sites = inst.n_sites;
    h.n_freq = inst.n_freq;
    h.n_antennas = inst.n_antennas;
    h.dimension = sv.amp.size();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_state_dump: cannot open " + path);
    detail::write_state_payload(out, h, sv.amp);
}

inline void write_state_dump(const FeasibleStateVector& fsv, const std::string& path) {
    StateDumpHeader h{};
    std::memcpy(h.magic, kStateDumpMagic, 8);
    h.engine = 1;
    h.n_sites = fsv.basis.n_sites();
    h.n_freq = fsv.basis.n_freq();
    h.n_antennas = fsv.basis.n_antennas();
    h.dimension = fsv.amp.size();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_state_dump: cannot open " + path);
    detail::write_state_payload(out, h, fsv.amp);
}

inline std::pair<StateDumpHeader, std::vector<std::complex<double>>>
read_state_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_state_dump: cannot open " + path);
    StateDumpHeader h{};
    in.read(reinterpret_cast<char*>(&h), sizeof(h));
    if (!in || std::memcmp(h.magic, kStateDumpMagic, 8) != 0)
        throw std::runtime_error("read_state_dump: bad header");
    std::vector<std::complex<double>> amp(h.dimension);
    in.read(reinterpret_cast<char*>(amp.data()),
            static_cast<std::streamsize>(amp.size() * sizeof(std::complex<double>)));
    if (!in) throw std::runtime_error("read_state_dump: truncated payload");
    return {h, std::move(amp)};
}

} // namespace mapp
