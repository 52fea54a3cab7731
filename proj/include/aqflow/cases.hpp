#pragma once

// Built-in test cases (IEEE 9-bus and its renewable-augmented 13-bus
// extension) and JSON case-file ingestion.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "aqflow/grid.hpp"

namespace aqflow {

namespace detail {

inline Bus make_bus(int index, BusKind kind, double v_spec = 1.0, double delta_spec = 0.0) {
    Bus b;
    b.index = index;
    b.kind = kind;
    b.v_spec = v_spec;
    b.delta_spec = delta_spec;
    return b;
}

}  // namespace detail

// IEEE 9-bus test system: generators at buses 1 (slack), 2, 3; loads at
// buses 5, 7, 9; transformers appear as zero-resistance branches.
inline Network case9() {
    Network net;
    net.s_base = 100.0;
    net.v_base = 345.0;
    net.buses = {
        detail::make_bus(1, BusKind::Slack, 1.0, 0.0),
        detail::make_bus(2, BusKind::PV, 1.0),
        detail::make_bus(3, BusKind::PV, 1.0),
        detail::make_bus(4, BusKind::PQ),
        detail::make_bus(5, BusKind::PQ),
        detail::make_bus(6, BusKind::PQ),
        detail::make_bus(7, BusKind::PQ),
        detail::make_bus(8, BusKind::PQ),
        detail::make_bus(9, BusKind::PQ),
    };
    net.lines = {
        {1, 4, 0.0, 0.0576, 0.0},     {4, 5, 0.017, 0.092, 0.158},
        {5, 6, 0.039, 0.17, 0.358},   {3, 6, 0.0, 0.0586, 0.0},
        {6, 7, 0.0119, 0.1008, 0.209}, {7, 8, 0.0085, 0.072, 0.149},
        {8, 2, 0.0, 0.0625, 0.0},     {8, 9, 0.032, 0.161, 0.306},
        {9, 4, 0.01, 0.085, 0.176},
    };
    net.generators = {
        {1, 0.0, 10.0, 250.0, -300.0, 300.0, {150.0, 5.0, 0.11}},
        {2, 163.0, 10.0, 300.0, -300.0, 300.0, {600.0, 1.2, 0.085}},
        {3, 85.0, 10.0, 270.0, -300.0, 300.0, {335.0, 1.0, 0.1225}},
    };
    net.loads = {
        {5, 90.0, 30.0},
        {7, 100.0, 35.0},
        {9, 125.0, 50.0},
    };
    validate(net);
    return net;
}

// 9-bus system extended with a solar farm (bus 11) and a wind farm
// (bus 13), both scaled to 19.8 MW must-run, interconnected at bus 7
// through high-reactance branches that keep the short circuit ratio
// constant.
inline Network case9_res() {
    Network net = case9();
    net.buses.push_back(detail::make_bus(10, BusKind::PQ));
    net.buses.push_back(detail::make_bus(11, BusKind::PV, 1.0));
    net.buses.push_back(detail::make_bus(12, BusKind::PQ));
    net.buses.push_back(detail::make_bus(13, BusKind::PV, 1.0));
    net.lines.push_back({7, 10, 0.2379, 1.6189, 0.0});
    net.lines.push_back({10, 11, 0.01, 1.0, 0.0});
    net.lines.push_back({7, 12, 0.2583, 1.6552, 0.0});
    net.lines.push_back({12, 13, 0.01, 1.0, 0.0});
    net.generators.push_back({11, 19.8, 19.8, 19.8, -20.0, 20.0, {8.0, 0.3, 0.0005}});
    net.generators.push_back({13, 19.8, 19.8, 19.8, -20.0, 20.0, {10.0, 0.5, 0.001}});
    validate(net);
    return net;
}

// Parses a JSON case document (see the schema in the project README) and
// returns a fully validated Network.
inline Network load_case(const std::string& document) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        throw GridError(std::string("case document: invalid JSON: ") + e.what());
    }
    Network net;
    try {
        net.s_base = j.at("s_base_mva").get<double>();
        net.v_base = j.at("v_base_kv").get<double>();
        for (const auto& jb : j.at("buses")) {
            Bus b;
            b.index = jb.at("index").get<int>();
            const std::string kind = jb.at("kind").get<std::string>();
            if (kind == "slack")
                b.kind = BusKind::Slack;
            else if (kind == "pv")
                b.kind = BusKind::PV;
            else if (kind == "pq")
                b.kind = BusKind::PQ;
            else
                throw GridError("buses.kind: unknown kind '" + kind + "'");
            if (b.kind != BusKind::PQ) {
                if (!jb.contains("v_spec")) throw GridError("buses: PV/slack bus needs v_spec");
                b.v_spec = jb.at("v_spec").get<double>();
            } else if (jb.contains("v_spec")) {
                throw GridError("buses: PQ bus must not carry v_spec");
            }
            if (jb.contains("delta_spec")) b.delta_spec = jb.at("delta_spec").get<double>();
            if (jb.contains("v_min")) b.v_min = jb.at("v_min").get<double>();
            if (jb.contains("v_max")) b.v_max = jb.at("v_max").get<double>();
            if (jb.contains("delta_min")) b.delta_min = jb.at("delta_min").get<double>();
            if (jb.contains("delta_max")) b.delta_max = jb.at("delta_max").get<double>();
            net.buses.push_back(b);
        }
        for (const auto& jl : j.at("lines")) {
            Line l;
            l.from_bus = jl.at("from").get<int>();
            l.to_bus = jl.at("to").get<int>();
            l.r = jl.at("r").get<double>();
            l.x = jl.at("x").get<double>();
            l.b = jl.at("b").get<double>();
            net.lines.push_back(l);
        }
        for (const auto& jg : j.at("generators")) {
            Generator g;
            g.bus = jg.at("bus").get<int>();
            if (jg.contains("p_mw")) g.p_g_spec = jg.at("p_mw").get<double>();
            g.p_min = jg.at("p_min").get<double>();
            g.p_max = jg.at("p_max").get<double>();
            g.q_min = jg.at("q_min").get<double>();
            g.q_max = jg.at("q_max").get<double>();
            const auto& jc = jg.at("cost");
            if (!jc.is_array() || jc.size() != 3)
                throw GridError("generators.cost: expected [c0, c1, c2]");
            g.cost = {jc[0].get<double>(), jc[1].get<double>(), jc[2].get<double>()};
            if (g.cost.c2 < 0.0) throw GridError("generators.cost: c2 must be nonnegative");
            net.generators.push_back(g);
        }
        for (const auto& jl : j.at("loads")) {
            Load l;
            l.bus = jl.at("bus").get<int>();
            l.p_d = jl.at("p_mw").get<double>();
            l.q_d = jl.at("q_mvar").get<double>();
            net.loads.push_back(l);
        }
    } catch (const nlohmann::json::exception& e) {
        throw GridError(std::string("case document: ") + e.what());
    }
    // Aggregate duplicate load records per bus before validation.
    std::map<int, Load> agg;
    for (const Load& l : net.loads) {
        auto [it, fresh] = agg.try_emplace(l.bus, l);
        if (!fresh) {
            it->second.p_d += l.p_d;
            it->second.q_d += l.q_d;
        }
    }
    net.loads.clear();
    for (const auto& [bus, l] : agg) net.loads.push_back(l);
    validate(net);
    return net;
}

inline Network load_case_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GridError("cannot open case file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_case(ss.str());
}

// Resolves a built-in case name, or throws.
inline Network builtin_case(const std::string& name) {
    if (name == "case9") return case9();
    if (name == "case9_res" || name == "case13") return case9_res();
    throw GridError("unknown case name: " + name);
}

}  // namespace aqflow
