#pragma once

// Brute-force OPF oracle: enumerate non-slack dispatchable generation on a
// uniform MW grid, NR-solve every candidate, keep the cheapest feasible one.

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "aqflow/newton.hpp"

namespace aqflow {

struct OpfSolution {
    std::vector<double> dispatch;  // MW, aligned with net.generators
    PfSolution pf;
    double total_cost = 0.0;
    bool feasible = false;
};

inline double evaluate_cost(const std::vector<double>& dispatch_mw,
                            const std::vector<CostPoly>& costs) {
    if (dispatch_mw.size() != costs.size())
        throw GridError("evaluate_cost: dispatch and costs are misaligned");
    double total = 0.0;
    for (size_t k = 0; k < costs.size(); ++k) total += costs[k].eval(dispatch_mw[k]);
    return total;
}

// Checks every OPF bound on a solved power flow. Returns the violations as
// human-readable strings; empty means feasible.
inline std::vector<std::string> opf_violations(const Network& net, const PfSolution& pf,
                                               const std::vector<double>& dispatch_mw,
                                               double tol = 1e-9) {
    std::vector<std::string> bad;
    if (!pf.converged) {
        bad.push_back("power flow did not converge");
        return bad;
    }
    const int slack = net.slack_index();
    for (size_t k = 0; k < net.generators.size(); ++k) {
        const Generator& g = net.generators[k];
        const double p = (g.bus == slack) ? pf.p_slack : dispatch_mw[k];
        if (p < g.p_min - tol || p > g.p_max + tol)
            bad.push_back("P bound violated at generator bus " + std::to_string(g.bus) + " (" +
                          std::to_string(p) + " MW)");
        const double q = pf.q_gen[k];
        if (q < g.q_min - tol || q > g.q_max + tol)
            bad.push_back("Q bound violated at generator bus " + std::to_string(g.bus) + " (" +
                          std::to_string(q) + " MVAR)");
    }
    for (const Bus& b : net.buses) {
        const size_t i = static_cast<size_t>(b.index - 1);
        if (pf.v_mag[i] < b.v_min - tol || pf.v_mag[i] > b.v_max + tol)
            bad.push_back("V bound violated at bus " + std::to_string(b.index) + " (" +
                          std::to_string(pf.v_mag[i]) + " p.u.)");
        if (pf.delta[i] < b.delta_min - tol || pf.delta[i] > b.delta_max + tol)
            bad.push_back("angle bound violated at bus " + std::to_string(b.index) + " (" +
                          std::to_string(pf.delta[i]) + " deg)");
    }
    return bad;
}

class NoFeasibleDispatchError : public GridError {
public:
    NoFeasibleDispatchError() : GridError("brute_force_opf: no feasible candidate found") {}
};

// Enumerates each non-slack dispatchable generator over [p_min, p_max] at
// the given step; must-run units stay at their fixed output. The slack
// generator absorbs the imbalance and participates in cost through its
// NR-determined output. Ties break toward the lexicographically smallest
// dispatch.
inline OpfSolution brute_force_opf(const Network& net, double step_mw = 1.0) {
    if (step_mw <= 0.0) throw GridError("brute_force_opf: step must be positive");
    const int slack = net.slack_index();
    std::vector<size_t> free_gens;
    for (size_t k = 0; k < net.generators.size(); ++k) {
        const Generator& g = net.generators[k];
        if (g.bus != slack && !g.must_run()) free_gens.push_back(k);
    }
    if (free_gens.size() > 3)
        throw GridError("brute_force_opf: more than 3 free dispatch variables");

    std::vector<double> base(net.generators.size(), 0.0);
    size_t slack_gen = net.generators.size();
    for (size_t k = 0; k < net.generators.size(); ++k) {
        const Generator& g = net.generators[k];
        if (g.bus == slack)
            slack_gen = k;
        else
            base[k] = g.must_run() ? g.p_min : 0.0;
    }

    std::vector<CostPoly> costs;
    for (const Generator& g : net.generators) costs.push_back(g.cost);

    OpfSolution best;
    best.total_cost = std::numeric_limits<double>::infinity();

    std::vector<double> dispatch = base;
    auto try_candidate = [&]() {
        Network cand = net;
        for (size_t k = 0; k < cand.generators.size(); ++k)
            if (k != slack_gen) cand.generators[k].p_g_spec = dispatch[k];
        PfSolution pf;
        try {
            pf = nr_power_flow(cand);
        } catch (const SingularJacobianError&) {
            return;
        }
        if (!pf.converged) return;
        std::vector<double> full = dispatch;
        if (slack_gen < full.size()) full[slack_gen] = pf.p_slack;
        if (!opf_violations(cand, pf, full).empty()) return;
        const double cost = evaluate_cost(full, costs);
        if (cost < best.total_cost - 1e-12 ||
            (cost < best.total_cost + 1e-12 && best.feasible && full < best.dispatch)) {
            best.dispatch = full;
            best.pf = pf;
            best.total_cost = cost;
            best.feasible = true;
        }
    };

    // Nested enumeration over at most 3 free generators.
    std::vector<std::vector<double>> grids;
    for (size_t k : free_gens) {
        const Generator& g = net.generators[k];
        std::vector<double> grid;
        for (double p = g.p_min; p <= g.p_max + 1e-9; p += step_mw) grid.push_back(p);
        grids.push_back(grid);
    }
    std::vector<size_t> idx(free_gens.size(), 0);
    while (true) {
        for (size_t d = 0; d < free_gens.size(); ++d) dispatch[free_gens[d]] = grids[d][idx[d]];
        try_candidate();
        size_t d = 0;
        for (; d < idx.size(); ++d) {
            if (++idx[d] < grids[d].size()) break;
            idx[d] = 0;
        }
        if (d == idx.size()) break;
        if (idx.empty()) break;
    }
    if (!best.feasible) throw NoFeasibleDispatchError();
    return best;
}

}  // namespace aqflow
