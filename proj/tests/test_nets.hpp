#pragma once

// Small fixture networks shared across test files.

#include "aqflow/grid.hpp"

namespace testnets {

// Slack feeding one PQ load over a mostly-reactive line.
inline aqflow::Network two_bus(double p_load_mw = 50.0, double q_load_mvar = 20.0) {
    aqflow::Network net;
    aqflow::Bus b1;
    b1.index = 1;
    b1.kind = aqflow::BusKind::Slack;
    aqflow::Bus b2;
    b2.index = 2;
    net.buses = {b1, b2};
    net.lines = {{1, 2, 0.02, 0.1, 0.0}};
    net.generators = {{1, 0.0, 0.0, 300.0, -200.0, 200.0, {0.0, 1.0, 0.0}}};
    net.loads = {{2, p_load_mw, q_load_mvar}};
    return net;
}

// Same two buses with no load: the flat start is already the solution.
inline aqflow::Network two_bus_no_load() { return two_bus(0.0, 0.0); }

}  // namespace testnets
