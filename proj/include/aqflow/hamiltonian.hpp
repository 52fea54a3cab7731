#pragma once

// Problem Hamiltonian construction: voltage/dispatch substitution into the
// rectangular power-injection equations, the squared-mismatch objective,
// slack-bit penalty encoding of inequality bounds, and the squared fuel-cost
// term. Everything is emitted as a SquaredForm (weighted sum of squared
// quadratic residuals), which flattens to the degree-4 binary polynomial.

#include <cmath>
#include <limits>
#include <optional>

#include "aqflow/binary_poly.hpp"
#include "aqflow/grid.hpp"

namespace aqflow {

struct DiscretizationConfig {
    double delta_mu = 1e-2;    // p.u. voltage real-part step
    double delta_omega = 1e-3; // p.u. voltage imaginary-part step
    int pg_bits = 8;
    int qg_bits = 10;
    double pg_step = 0.0;      // MW per least bit; 0 => span [p_min, p_max]
    double qg_step = 0.0;      // MVAR per least bit; 0 => span [q_min, q_max]
    int slack_bits_per_constraint = 6;
    // Optional per-bus multiplier on both voltage steps (empty = uniform).
    // Buses behind weak ties need larger steps for the same injection
    // sensitivity; see step_scales().
    std::vector<double> step_scale;

    void check() const {
        if (delta_mu <= 0.0 || delta_omega <= 0.0)
            throw PolyError("discretization: steps must be positive");
        if (pg_bits < 1 || qg_bits < 1 || slack_bits_per_constraint < 1)
            throw PolyError("discretization: bit counts must be >= 1");
    }
};

struct PenaltyWeights {
    // lambda[0..3]: generator P/Q bound penalties, lambda[4..7]: voltage and
    // angle bound penalties, lambda[8]: squared fuel-cost weight.
    std::array<double, 9> lambda{100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 100.0, 1e-6};
    double lambda_quad = 0.0;  // 0 => chosen by quadratize()

    void check() const {
        for (double l : lambda)
            if (l < 0.0) throw PolyError("penalty weights must be nonnegative");
    }
};

// Affine voltage expressions per bus under the two-bit increment encoding:
// mu_i = mu_i^0 + (x_up - x_down) * delta_mu, omega likewise. The slack bus
// is held at its scheduled voltage and carries no variables.
struct VoltageExpressions {
    RegistryPtr registry;
    std::vector<LinExpr> mu, omega;  // 0-based over buses
};

inline VoltageExpressions substitute_voltage(const Network& net, const VoltageState& v0,
                                             const DiscretizationConfig& cfg,
                                             RegistryPtr reg = nullptr) {
    cfg.check();
    const int n = net.size();
    if (v0.size() != n) throw PolyError("substitute_voltage: state does not match network");
    if (!cfg.step_scale.empty() && static_cast<int>(cfg.step_scale.size()) != n)
        throw PolyError("substitute_voltage: step_scale does not match network");
    VoltageExpressions ve;
    ve.registry = reg ? std::move(reg) : std::make_shared<VarRegistry>();
    ve.mu.resize(static_cast<size_t>(n));
    ve.omega.resize(static_cast<size_t>(n));
    const int slack = net.slack_index() - 1;
    for (int i = 0; i < n; ++i) {
        LinExpr& m = ve.mu[static_cast<size_t>(i)];
        LinExpr& w = ve.omega[static_cast<size_t>(i)];
        m.c = v0.mu[static_cast<size_t>(i)];
        w.c = v0.omega[static_cast<size_t>(i)];
        if (i == slack) continue;
        const int32_t bus = i + 1;
        const double sc = cfg.step_scale.empty() ? 1.0 : cfg.step_scale[static_cast<size_t>(i)];
        m.add(ve.registry->intern({VarTag::MuUp, bus, 0}), sc * cfg.delta_mu);
        m.add(ve.registry->intern({VarTag::MuDown, bus, 0}), -sc * cfg.delta_mu);
        w.add(ve.registry->intern({VarTag::OmegaUp, bus, 0}), sc * cfg.delta_omega);
        w.add(ve.registry->intern({VarTag::OmegaDown, bus, 0}), -sc * cfg.delta_omega);
    }
    return ve;
}

// Rectangular-form injection expressions at bus i (0-based), quadratic in
// the substituted voltage variables.
inline QuadraticExpr p_injection_expr(const AdmittanceMatrix& y, const VoltageExpressions& ve,
                                      int i) {
    QuadraticExpr p;
    for (int j = 0; j < y.n; ++j) {
        const double g = y.G(i, j), b = y.B(i, j);
        if (g == 0.0 && b == 0.0) continue;
        const LinExpr& mi = ve.mu[static_cast<size_t>(i)];
        const LinExpr& mj = ve.mu[static_cast<size_t>(j)];
        const LinExpr& wi = ve.omega[static_cast<size_t>(i)];
        const LinExpr& wj = ve.omega[static_cast<size_t>(j)];
        p.add_product(mi, mj, g);
        p.add_product(wi, wj, g);
        p.add_product(wi, mj, b);
        p.add_product(mi, wj, -b);
    }
    return p;
}

inline QuadraticExpr q_injection_expr(const AdmittanceMatrix& y, const VoltageExpressions& ve,
                                      int i) {
    QuadraticExpr q;
    for (int j = 0; j < y.n; ++j) {
        const double g = y.G(i, j), b = y.B(i, j);
        if (g == 0.0 && b == 0.0) continue;
        const LinExpr& mi = ve.mu[static_cast<size_t>(i)];
        const LinExpr& mj = ve.mu[static_cast<size_t>(j)];
        const LinExpr& wi = ve.omega[static_cast<size_t>(i)];
        const LinExpr& wj = ve.omega[static_cast<size_t>(j)];
        q.add_product(wi, mj, g);
        q.add_product(mi, wj, -g);
        q.add_product(mi, mj, -b);
        q.add_product(wi, wj, -b);
    }
    return q;
}

// Scheduled net injection per bus as an expression (affine in dispatch bits
// for AQOPF, constant for AQPF). Buses without an entry carry no mismatch
// equation.
using ScheduleExprs = std::vector<std::optional<LinExpr>>;

// Per-bus step multipliers equalizing injection sensitivity: a bus whose
// admittance-row magnitude is small needs a proportionally larger voltage
// step for one bit to move its injection by the same amount. Scales are
// relative to the stiffest bus and capped to keep single moves physical.
inline std::vector<double> step_scales(const AdmittanceMatrix& y, double cap = 8.0) {
    std::vector<double> s(static_cast<size_t>(y.n), 0.0);
    double s_max = 0.0;
    for (int i = 0; i < y.n; ++i) {
        double row = 0.0;
        for (int j = 0; j < y.n; ++j)
            row = std::max(row, std::hypot(y.G(i, j), y.B(i, j)));
        s[static_cast<size_t>(i)] = std::max(row, 1e-9);
        s_max = std::max(s_max, s[static_cast<size_t>(i)]);
    }
    std::vector<double> sc(static_cast<size_t>(y.n), 1.0);
    for (int i = 0; i < y.n; ++i)
        sc[static_cast<size_t>(i)] = std::min(cap, s_max / s[static_cast<size_t>(i)]);
    return sc;
}

// H_obj = sum over scheduled buses of w_i [(P_i(x) - p_sched_i)^2 + (Q_i - q_sched_i)^2].
inline SquaredForm build_h_obj_form(const AdmittanceMatrix& y, const VoltageExpressions& ve,
                                    const ScheduleExprs& p_sched, const ScheduleExprs& q_sched,
                                    const std::vector<double>* bus_weights = nullptr) {
    SquaredForm h(ve.registry);
    for (int i = 0; i < y.n; ++i) {
        const double w = bus_weights ? (*bus_weights)[static_cast<size_t>(i)] : 1.0;
        if (p_sched[static_cast<size_t>(i)]) {
            QuadraticExpr r = p_injection_expr(y, ve, i);
            LinExpr neg = *p_sched[static_cast<size_t>(i)];
            neg *= -1.0;
            r += neg;
            h.add_square(w, std::move(r), "P" + std::to_string(i + 1));
        }
        if (q_sched[static_cast<size_t>(i)]) {
            QuadraticExpr r = q_injection_expr(y, ve, i);
            LinExpr neg = *q_sched[static_cast<size_t>(i)];
            neg *= -1.0;
            r += neg;
            h.add_square(w, std::move(r), "Q" + std::to_string(i + 1));
        }
    }
    return h;
}

// Scheduled values for the AQPF objective at a base point: P from fixed
// dispatch minus demand at every non-slack bus; Q from demand at PQ buses
// and from the currently recovered reactive injection at PV buses.
struct MismatchSchedule {
    std::vector<std::optional<double>> p, q;  // p.u., 0-based over buses
};

inline MismatchSchedule aqpf_schedule(const Network& net, const AdmittanceMatrix& y,
                                      const VoltageState& v0) {
    const int n = net.size();
    MismatchSchedule s;
    s.p.assign(static_cast<size_t>(n), std::nullopt);
    s.q.assign(static_cast<size_t>(n), std::nullopt);
    const std::vector<double> pd = net.load_p_pu();
    const std::vector<double> qd = net.load_q_pu();
    const std::vector<double> pg = net.gen_p_pu();
    const Injection inj = injected_power(y, v0);
    const int slack = net.slack_index() - 1;
    for (const Bus& b : net.buses) {
        const int i = b.index - 1;
        if (i == slack) continue;
        s.p[static_cast<size_t>(i)] = pg[static_cast<size_t>(i)] - pd[static_cast<size_t>(i)];
        if (b.kind == BusKind::PV) {
            // Q^G recovered from the present injection: the residual is zero
            // at the base point and only damps reactive excursions.
            s.q[static_cast<size_t>(i)] = inj.q[static_cast<size_t>(i)];
        } else {
            s.q[static_cast<size_t>(i)] = -qd[static_cast<size_t>(i)];
        }
    }
    return s;
}

inline ScheduleExprs to_exprs(const std::vector<std::optional<double>>& vals) {
    ScheduleExprs e(vals.size());
    for (size_t i = 0; i < vals.size(); ++i)
        if (vals[i]) {
            LinExpr l;
            l.c = *vals[i];
            e[i] = std::move(l);
        }
    return e;
}

// Direct numeric evaluation of the squared-mismatch objective at a voltage
// state (the convergence quantity of the solver loop).
inline double h_obj_numeric(const AdmittanceMatrix& y, const VoltageState& v,
                            const MismatchSchedule& sched,
                            const std::vector<double>* bus_weights = nullptr) {
    const Injection inj = injected_power(y, v);
    double h = 0.0;
    for (int i = 0; i < y.n; ++i) {
        const double w = bus_weights ? (*bus_weights)[static_cast<size_t>(i)] : 1.0;
        if (sched.p[static_cast<size_t>(i)]) {
            const double r = inj.p[static_cast<size_t>(i)] - *sched.p[static_cast<size_t>(i)];
            h += w * r * r;
        }
        if (sched.q[static_cast<size_t>(i)]) {
            const double r = inj.q[static_cast<size_t>(i)] - *sched.q[static_cast<size_t>(i)];
            h += w * r * r;
        }
    }
    return h;
}

// AQPF objective Hamiltonian (power mismatch only) as a binary polynomial.
inline BinaryPolynomial build_h_obj(const Network& net, const AdmittanceMatrix& y,
                                    const VoltageState& v0, const DiscretizationConfig& cfg) {
    const VoltageExpressions ve = substitute_voltage(net, v0, cfg);
    const MismatchSchedule sched = aqpf_schedule(net, y, v0);
    return build_h_obj_form(y, ve, to_exprs(sched.p), to_exprs(sched.q)).flatten();
}

// Setpoint-holding penalty for PV buses in AQPF mode: the residual
// mu^2 + omega^2 - v_spec^2 is quadratic, so voltage magnitude is held near
// its scheduled value without leaving the polynomial class.
inline SquaredForm build_pv_penalty_form(const Network& net, const VoltageExpressions& ve,
                                         const PenaltyWeights& weights) {
    SquaredForm h(ve.registry);
    for (const Bus& b : net.buses) {
        if (b.kind != BusKind::PV) continue;
        const int i = b.index - 1;
        QuadraticExpr r;
        r.add_product(ve.mu[static_cast<size_t>(i)], ve.mu[static_cast<size_t>(i)]);
        r.add_product(ve.omega[static_cast<size_t>(i)], ve.omega[static_cast<size_t>(i)]);
        r.c -= b.v_spec * b.v_spec;
        h.add_square(weights.lambda[4], std::move(r), "Vset" + std::to_string(b.index));
    }
    return h;
}

// ---------------------------------------------------------------------------
// Inequality penalties through binary-expanded slack variables.
// ---------------------------------------------------------------------------

// Builds the residual g + s for the constraint g(x) <= 0, where
// s = sigma * sum_k 2^k b_k is a nonnegative slack spanning [0, range]
// (range = |min g| over the reachable box). With sigma = 0 the resolution is
// derived from the available bit budget; an explicit sigma that does not
// cover the range reports the required bit count.
inline QuadraticExpr slack_penalty_residual(const RegistryPtr& reg, int constraint_id,
                                            const LinExpr& g, int bits, double sigma = 0.0) {
    double g_min = g.c;
    for (const auto& [v, w] : g.lin) g_min += std::min(0.0, w);
    const double range = std::max(0.0, -g_min);
    QuadraticExpr r;
    r += g;
    if (range <= 0.0) return r;  // constraint active everywhere; no slack useful
    const double levels = std::pow(2.0, bits) - 1.0;
    if (sigma <= 0.0) {
        sigma = range / levels;
    } else if (sigma * levels < range - 1e-12) {
        const int needed = static_cast<int>(std::ceil(std::log2(range / sigma + 1.0)));
        throw PolyError("slack encoding: range " + std::to_string(range) +
                        " not representable; need " + std::to_string(needed) + " bits");
    }
    for (int k = 0; k < bits; ++k) {
        const uint32_t b = reg->intern({VarTag::Slack, constraint_id, k});
        r.add_lin(b, sigma * std::pow(2.0, k));
    }
    return r;
}

// Voltage and angle box constraints for every bus carrying variables, using
// the small-angle surrogates V ~ mu and delta ~ omega / mu0. Generator P/Q
// bounds are representable natively by the dispatch bit encoding and need
// no penalty here.
inline SquaredForm build_h_const_form(const Network& net, const VoltageExpressions& ve,
                                      const VoltageState& v0, const DiscretizationConfig& cfg,
                                      const PenaltyWeights& weights, int* constraint_counter) {
    weights.check();
    SquaredForm h(ve.registry);
    const int slack = net.slack_index() - 1;
    auto add_bound = [&](const LinExpr& g, double lambda, const std::string& label) {
        if (lambda == 0.0) return;
        // g <= 0 over the whole reachable box: the penalty minimum is zero
        // everywhere, so the equation would only add search noise.
        double g_max = g.c;
        for (const auto& [vv, w] : g.lin) g_max += std::max(0.0, w);
        if (g_max <= 0.0) return;
        const int id = (*constraint_counter)++;
        h.add_square(lambda, slack_penalty_residual(ve.registry, id, g,
                                                    cfg.slack_bits_per_constraint),
                     label);
    };
    for (const Bus& b : net.buses) {
        const int i = b.index - 1;
        if (i == slack) continue;
        const LinExpr& mu = ve.mu[static_cast<size_t>(i)];
        const LinExpr& om = ve.omega[static_cast<size_t>(i)];
        // V_i <= v_max  and  v_min <= V_i, with V ~ mu.
        LinExpr gu = mu;
        gu.c -= b.v_max;
        add_bound(gu, weights.lambda[4], "Vmax" + std::to_string(b.index));
        LinExpr gl = mu;
        gl *= -1.0;
        gl.c += b.v_min;
        add_bound(gl, weights.lambda[5], "Vmin" + std::to_string(b.index));
        // delta bounds mapped to omega at the base-point magnitude.
        const double mu0 = std::max(v0.mu[static_cast<size_t>(i)], 0.5);
        LinExpr du = om;
        du.c -= std::tan(deg2rad(b.delta_max)) * mu0;
        add_bound(du, weights.lambda[6], "Dmax" + std::to_string(b.index));
        LinExpr dl = om;
        dl *= -1.0;
        dl.c += std::tan(deg2rad(b.delta_min)) * mu0;
        add_bound(dl, weights.lambda[7], "Dmin" + std::to_string(b.index));
    }
    return h;
}

inline BinaryPolynomial build_h_const(const Network& net, const VoltageState& v0,
                                      const DiscretizationConfig& cfg,
                                      const PenaltyWeights& weights) {
    VoltageExpressions ve = substitute_voltage(net, v0, cfg);
    int counter = 0;
    return build_h_const_form(net, ve, v0, cfg, weights, &counter).flatten();
}

// ---------------------------------------------------------------------------
// Dispatch encoding and the squared cost term.
// ---------------------------------------------------------------------------

// Active/reactive generator output expressions, per-unit, aligned with
// net.generators. P^G = p_min + step * sum 2^k b_k (unsigned expansion
// spanning [p_min, p_max]); must-run units are constants. Q^G likewise.
struct DispatchExpressions {
    RegistryPtr registry;
    std::vector<LinExpr> p_pu, q_pu;
    // False for the generator at the slack bus: its output is recovered from
    // power balance rather than carried as variables.
    std::vector<bool> encoded;
};

inline DispatchExpressions substitute_dispatch(const Network& net,
                                               const DiscretizationConfig& cfg,
                                               RegistryPtr reg) {
    cfg.check();
    DispatchExpressions de;
    de.registry = std::move(reg);
    auto encode = [&](VarTag tag, int bus, double lo, double hi, int bits,
                      double step_io) -> LinExpr {
        LinExpr e;
        e.c = lo / net.s_base;
        if (hi <= lo) return e;
        const double levels = std::pow(2.0, bits) - 1.0;
        const double step = (step_io > 0.0 ? step_io : (hi - lo) / levels) / net.s_base;
        for (int k = 0; k < bits; ++k)
            e.add(de.registry->intern({tag, bus, k}), step * std::pow(2.0, k));
        return e;
    };
    const int slack_bus = net.slack_index();
    for (const Generator& g : net.generators) {
        if (g.bus == slack_bus) {
            de.p_pu.emplace_back();
            de.q_pu.emplace_back();
            de.encoded.push_back(false);
            continue;
        }
        de.p_pu.push_back(encode(VarTag::PgBit, g.bus, g.p_min, g.p_max, cfg.pg_bits, cfg.pg_step));
        de.q_pu.push_back(encode(VarTag::QgBit, g.bus, g.q_min, g.q_max, cfg.qg_bits, cfg.qg_step));
        de.encoded.push_back(true);
    }
    return de;
}

// Affine surrogate for the slack generator's active output under the current
// base state: total demand plus the present network losses minus every other
// unit's output. Makes the slack unit's fuel cost and P limits visible to
// the optimizer without encoding it.
inline LinExpr slack_recovery_expr(const Network& net, const DispatchExpressions& de,
                                   double loss_pu) {
    LinExpr e;
    double demand = 0.0;
    for (const Load& l : net.loads) demand += l.p_d;
    e.c = demand / net.s_base + loss_pu;
    for (size_t k = 0; k < net.generators.size(); ++k) {
        if (!de.encoded[k]) continue;
        LinExpr neg = de.p_pu[k];
        neg *= -1.0;
        e += neg;
    }
    return e;
}

// Active-power limits of the recovered slack unit, penalized like any other
// inequality since they are not representable by a bit range.
inline SquaredForm build_slack_bound_form(const Network& net, const LinExpr& slack_p_pu,
                                          const RegistryPtr& reg,
                                          const DiscretizationConfig& cfg,
                                          const PenaltyWeights& weights,
                                          int* constraint_counter) {
    SquaredForm h(reg);
    const int slack_bus = net.slack_index();
    auto add_bound = [&](const LinExpr& g, double lambda, const std::string& label) {
        if (lambda == 0.0) return;
        double g_max = g.c;
        for (const auto& [vv, w] : g.lin) g_max += std::max(0.0, w);
        if (g_max <= 0.0) return;
        h.add_square(lambda,
                     slack_penalty_residual(reg, (*constraint_counter)++, g,
                                            cfg.slack_bits_per_constraint),
                     label);
    };
    for (const Generator& g : net.generators) {
        if (g.bus != slack_bus) continue;
        LinExpr up = slack_p_pu;
        up.c -= g.p_max / net.s_base;
        add_bound(up, weights.lambda[0], "PmaxSlack");
        LinExpr lo = slack_p_pu;
        lo *= -1.0;
        lo.c += g.p_min / net.s_base;
        add_bound(lo, weights.lambda[1], "PminSlack");
    }
    return h;
}

// H_cost = lambda_8 * sum_k f_k(P_k^G)^2, with f_k in currency over MW.
inline SquaredForm build_h_cost_form(const Network& net, const DispatchExpressions& de,
                                     const PenaltyWeights& weights,
                                     const LinExpr* slack_p_pu = nullptr) {
    SquaredForm h(de.registry);
    if (weights.lambda[8] == 0.0) return h;
    for (size_t k = 0; k < net.generators.size(); ++k) {
        const Generator& g = net.generators[k];
        if (!de.encoded[k] && !slack_p_pu) continue;
        LinExpr p_mw = de.encoded[k] ? de.p_pu[k] : *slack_p_pu;
        p_mw *= net.s_base;
        QuadraticExpr f;
        f.c = g.cost.c0;
        LinExpr lin = p_mw;
        lin *= g.cost.c1;
        f += lin;
        f.add_product(p_mw, p_mw, g.cost.c2);
        h.add_square(weights.lambda[8], std::move(f), "cost@" + std::to_string(g.bus));
    }
    return h;
}

inline BinaryPolynomial build_h_cost(const Network& net, const DiscretizationConfig& cfg,
                                     const PenaltyWeights& weights,
                                     RegistryPtr reg = nullptr) {
    if (!reg) reg = std::make_shared<VarRegistry>();
    const DispatchExpressions de = substitute_dispatch(net, cfg, reg);
    return build_h_cost_form(net, de, weights).flatten();
}

// Free-function evaluation mirroring the operation contract.
inline double evaluate(const BinaryPolynomial& poly, const std::vector<uint8_t>& bits) {
    return poly.evaluate(bits);
}

}  // namespace aqflow
