#pragma once

// Generator set-point conversion. Forward map: terminal (V, P, Q) to an
// exciter voltage reference and a droop power reference. Inverse map:
// what the grid simulator applies when a set-point frame arrives.
//
// With terminal phasor V* and apparent power S = (P + jQ)/s_base p.u.,
//   I = conj(S) / conj(V),  E_f = V + j x_d I,
//   v_ref = |E_f| / k_a + |V|,  p_ref = r_droop * P / s_base.
// |E_f| is rotation-invariant, so with V real:
//   |E_f| = sqrt((V + x_d Q / V)^2 + (x_d P / V)^2).

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "aqflow/grid.hpp"

namespace aqflow::hil {

struct GeneratorDynamicParams {
    double k_a = 200.0;     // exciter gain
    double x_d = 1.0;       // d-axis reactance, p.u.
    double r_droop = 0.05;  // governor droop

    void check() const {
        if (!(k_a > 0.0)) throw GridError("dyn.k_a: must be positive");
        if (!(x_d > 0.0)) throw GridError("dyn.x_d: must be positive");
        if (!(r_droop > 0.0)) throw GridError("dyn.r_droop: must be positive");
    }
};

inline double excitation_mag(double v_pu, double p_pu, double q_pu, double x_d) {
    if (v_pu <= 0.0) throw GridError("setpoints: zero terminal voltage");
    const double re = v_pu + x_d * q_pu / v_pu;
    const double im = x_d * p_pu / v_pu;
    return std::hypot(re, im);
}

inline double compute_v_ref(double v_pu, double p_pu, double q_pu,
                            const GeneratorDynamicParams& dyn) {
    return excitation_mag(v_pu, p_pu, q_pu, dyn.x_d) / dyn.k_a + v_pu;
}

inline double compute_p_ref(double p_mw, const GeneratorDynamicParams& dyn, double s_base) {
    return dyn.r_droop * p_mw / s_base;
}

inline double invert_p_ref(double p_ref, const GeneratorDynamicParams& dyn, double s_base) {
    return p_ref * s_base / dyn.r_droop;
}

// Recovers |V| from v_ref given the generator's (P, Q). v_ref(V) is
// strictly increasing on the physical voltage branch, so a bracketed
// bisection suffices; the bracket is widened from the nominal band first.
inline double invert_v_ref(double v_ref, double p_pu, double q_pu,
                           const GeneratorDynamicParams& dyn) {
    auto f = [&](double v) { return compute_v_ref(v, p_pu, q_pu, dyn) - v_ref; };
    double lo = 0.5, hi = 1.5;
    for (int i = 0; i < 40 && f(lo) > 0.0; ++i) lo *= 0.5;
    for (int i = 0; i < 40 && f(hi) < 0.0; ++i) hi *= 2.0;
    if (f(lo) > 0.0 || f(hi) < 0.0)
        throw GridError("setpoints: v_ref " + std::to_string(v_ref) + " not invertible");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) <= 0.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-15) break;
    }
    return 0.5 * (lo + hi);
}

struct SetpointFrameData {
    uint32_t tick = 0;
    std::vector<int> gen_bus;     // conventional generator buses, ascending
    std::vector<double> v_ref;    // aligned with gen_bus
    std::vector<double> p_ref;    // aligned with gen_bus, p.u.
    std::vector<int> res_bus;     // RES buses, ascending
    std::vector<double> res_v_ref;
};

struct MeasurementFrameData {
    uint32_t tick = 0;
    std::vector<int> load_bus;    // ascending
    std::vector<double> p_d;      // MW, aligned with load_bus
    std::vector<double> q_d;      // MVAR
    std::vector<int> res_bus;     // ascending
    std::vector<double> res_p;    // MW, aligned with res_bus
};

namespace layout {

// Must-run units model measurement-driven RES; everything else is
// dispatchable conventional plant.
inline std::vector<int> conventional_buses(const Network& net) {
    std::vector<int> v;
    for (const auto& g : net.generators)
        if (!g.must_run()) v.push_back(g.bus);
    std::sort(v.begin(), v.end());
    return v;
}

inline std::vector<int> res_buses(const Network& net) {
    std::vector<int> v;
    for (const auto& g : net.generators)
        if (g.must_run()) v.push_back(g.bus);
    std::sort(v.begin(), v.end());
    return v;
}

inline std::vector<int> load_buses(const Network& net) {
    std::vector<int> v;
    for (const auto& l : net.loads) v.push_back(l.bus);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace layout

}  // namespace aqflow::hil
