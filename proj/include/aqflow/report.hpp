#pragma once

// Report-file writers shared by the CLI and the test suite. All numbers
// print with %.9g through snprintf so output is locale-independent.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "aqflow/grid.hpp"
#include "aqflow/newton.hpp"

namespace aqflow {

// Per-bus operating point: bus,v_pu,delta_deg,p_mw,q_mvar. Injections
// are net bus injections (generation minus load) in MW/MVAR.
inline void write_solution_csv(std::ostream& out, const Network& net, const VoltageState& v) {
    const AdmittanceMatrix y = build_admittance(net);
    const Injection inj = injected_power(y, v);
    out << "bus,v_pu,delta_deg,p_mw,q_mvar\n";
    char buf[160];
    for (int i = 0; i < net.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g\n", i + 1, v.v_mag(i),
                      v.delta_deg(i), inj.p[static_cast<size_t>(i)] * net.s_base,
                      inj.q[static_cast<size_t>(i)] * net.s_base);
        out << buf;
    }
}

// Per-generator rows plus a total-cost row.
inline void write_dispatch_csv(std::ostream& out, const Network& net,
                               const std::vector<double>& p_mw, const std::vector<double>& q_mvar,
                               double total_cost) {
    out << "gen_bus,p_mw,q_mvar,cost\n";
    char buf[160];
    for (size_t k = 0; k < net.generators.size(); ++k) {
        const Generator& g = net.generators[k];
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", g.bus, p_mw[k], q_mvar[k],
                      g.cost.eval(p_mw[k]));
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "total,,,%.9g\n", total_cost);
    out << buf;
}

}  // namespace aqflow
