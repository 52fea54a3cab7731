#pragma once

// The iterative solve loop: anneal the problem Hamiltonian built around the
// current operating point, re-center on the best readout, and shrink the
// voltage steps when the mismatch objective stalls.

#include <limits>
#include <ostream>
#include <string>

#include "aqflow/anneal.hpp"
#include "aqflow/cases.hpp"
#include "aqflow/hamiltonian.hpp"
#include "aqflow/newton.hpp"
#include "aqflow/opf.hpp"
#include "aqflow/qubo.hpp"

namespace aqflow {

struct LoopError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SolveMode { Aqpf, Aqopf };

struct LoopConfig {
    SolveMode mode = SolveMode::Aqpf;
    std::string backend = "sa-hobo";  // sa-hobo | sa-qubo | exhaustive
    double epsilon = 1e-2;
    int it_max = 500;
    DiscretizationConfig disc;
    PenaltyWeights weights;
    AnnealParams anneal;
    // Step adaptation: halve both steps when the best objective over the
    // last window improved by less than the relative threshold.
    double shrink = 0.5;
    int stall_window = 5;
    double stall_rel_improvement = 0.01;
    double delta_mu_floor = 1e-5;
    double delta_omega_floor = 1e-6;
    // Seed the first annealer chain at the incumbent state each iteration.
    bool warm_start = false;
};

struct TracePoint {
    int iteration;
    double h_obj;
    double delta_mu;
    double delta_omega;
};

struct SolveResult {
    VoltageState state;
    bool converged = false;
    int iterations = 0;
    double h_obj = std::numeric_limits<double>::infinity();
    // Aligned with net.generators; slack entry recovered from the final
    // injection. Only populated in AQOPF mode.
    std::vector<double> p_gen_mw, q_gen_mvar;
    double total_cost = 0.0;
    std::vector<std::string> violations;
    std::vector<TracePoint> trace;
};

namespace loop_detail {

inline VoltageState flat_start(const Network& net) {
    VoltageState v = VoltageState::flat(net.size());
    for (const Bus& b : net.buses) {
        const size_t i = static_cast<size_t>(b.index - 1);
        if (b.kind != BusKind::PQ) v.mu[i] = b.v_spec;
        if (b.kind == BusKind::Slack) {
            v.mu[i] = b.v_spec * std::cos(deg2rad(b.delta_spec));
            v.omega[i] = b.v_spec * std::sin(deg2rad(b.delta_spec));
        }
    }
    return v;
}

inline void append(SquaredForm& into, SquaredForm&& more) {
    if (into.registry != more.registry)
        throw LoopError("cannot merge forms over different registries");
    for (auto& eq : more.equations) into.equations.push_back(std::move(eq));
}

inline ReadoutSet run_backend(const std::string& backend, const SquaredForm& form,
                              const AnnealParams& params, double lambda_quad) {
    if (backend == "sa-hobo") return solve(form, params);
    const BinaryPolynomial poly = form.flatten();
    if (backend == "sa-qubo") return solve(quadratize(poly, lambda_quad), params);
    if (backend == "exhaustive") return exhaustive_solve(poly);
    throw LoopError("unknown backend: " + backend);
}

inline VoltageState decode_voltage(const VoltageExpressions& ve,
                                   const std::vector<uint8_t>& bits) {
    const int n = static_cast<int>(ve.mu.size());
    VoltageState v = VoltageState::flat(n);
    for (int i = 0; i < n; ++i) {
        v.mu[static_cast<size_t>(i)] = ve.mu[static_cast<size_t>(i)].evaluate(bits);
        v.omega[static_cast<size_t>(i)] = ve.omega[static_cast<size_t>(i)].evaluate(bits);
    }
    return v;
}

}  // namespace loop_detail

inline SolveResult run_aqpf(const Network& net, const LoopConfig& cfg) {
    validate(net);
    cfg.disc.check();
    cfg.weights.check();
    const AdmittanceMatrix y = build_admittance(net);
    VoltageState v = loop_detail::flat_start(net);
    double dmu = cfg.disc.delta_mu, dom = cfg.disc.delta_omega;
    double h_cur = h_obj_numeric(y, v, aqpf_schedule(net, y, v));

    SolveResult res;
    double window_ref = h_cur;
    double window_best = std::numeric_limits<double>::infinity();
    int window_count = 0;
    for (int it = 1; it <= cfg.it_max; ++it) {
        DiscretizationConfig d = cfg.disc;
        d.delta_mu = dmu;
        d.delta_omega = dom;
        const VoltageExpressions ve = substitute_voltage(net, v, d);
        const MismatchSchedule sched = aqpf_schedule(net, y, v);
        SquaredForm h = build_h_obj_form(y, ve, to_exprs(sched.p), to_exprs(sched.q));
        loop_detail::append(h, build_pv_penalty_form(net, ve, cfg.weights));

        AnnealParams ap = cfg.anneal;
        ap.seed = cfg.anneal.seed + static_cast<uint64_t>(it) * 0x9e3779b97f4a7c15ULL;
        // All-zeros bits reproduce the current state exactly.
        if (cfg.warm_start) ap.init_bits.assign(ve.registry->size(), 0);
        const ReadoutSet rs = loop_detail::run_backend(cfg.backend, h, ap,
                                                       cfg.weights.lambda_quad);
        const VoltageState vc = loop_detail::decode_voltage(ve, best_sample(rs).bits);
        const double h_new = h_obj_numeric(y, vc, aqpf_schedule(net, y, vc));
        if (h_new <= h_cur) {
            v = vc;
            h_cur = h_new;
        }
        res.trace.push_back({it, h_cur, dmu, dom});
        res.iterations = it;
        if (h_cur <= cfg.epsilon) {
            res.converged = true;
            break;
        }
        window_best = std::min(window_best, h_cur);
        if (++window_count >= cfg.stall_window) {
            if (window_best > window_ref * (1.0 - cfg.stall_rel_improvement)) {
                dmu = std::max(cfg.delta_mu_floor, dmu * cfg.shrink);
                dom = std::max(cfg.delta_omega_floor, dom * cfg.shrink);
            }
            window_ref = window_best;
            window_best = std::numeric_limits<double>::infinity();
            window_count = 0;
        }
    }
    res.state = v;
    res.h_obj = h_cur;
    return res;
}

// Bound check of a final annealed state (voltage box, angle box, generator
// limits), tolerance sized to the discretization floor.
inline std::vector<std::string> aqopf_violations(const Network& net, const VoltageState& v,
                                                 const std::vector<double>& p_gen_mw,
                                                 const std::vector<double>& q_gen_mvar,
                                                 double tol = 1e-6) {
    std::vector<std::string> out;
    for (const Bus& b : net.buses) {
        const int i = b.index - 1;
        const double vm = v.v_mag(i);
        const double dd = v.delta_deg(i);
        if (vm > b.v_max + tol || vm < b.v_min - tol)
            out.push_back("bus " + std::to_string(b.index) + ": voltage out of bounds");
        if (dd > b.delta_max + tol || dd < b.delta_min - tol)
            out.push_back("bus " + std::to_string(b.index) + ": angle out of bounds");
    }
    for (size_t k = 0; k < net.generators.size(); ++k) {
        const Generator& g = net.generators[k];
        if (p_gen_mw[k] > g.p_max + tol || p_gen_mw[k] < g.p_min - tol)
            out.push_back("generator at bus " + std::to_string(g.bus) + ": P out of bounds");
        if (q_gen_mvar[k] > g.q_max + tol || q_gen_mvar[k] < g.q_min - tol)
            out.push_back("generator at bus " + std::to_string(g.bus) + ": Q out of bounds");
    }
    return out;
}

inline SolveResult run_aqopf(const Network& net, const LoopConfig& cfg) {
    validate(net);
    cfg.disc.check();
    cfg.weights.check();
    const AdmittanceMatrix y = build_admittance(net);
    const int n = net.size();
    const int slack = net.slack_index() - 1;
    const std::vector<double> pd = net.load_p_pu();
    const std::vector<double> qd = net.load_q_pu();

    VoltageState v = loop_detail::flat_start(net);
    // Current dispatch in p.u., aligned with net.generators; starts at the
    // lower limits (the all-zeros bit pattern).
    std::vector<double> pg(net.generators.size()), qg(net.generators.size());
    for (size_t k = 0; k < net.generators.size(); ++k) {
        pg[k] = net.generators[k].p_min / net.s_base;
        qg[k] = net.generators[k].q_min / net.s_base;
    }

    auto schedule_of = [&](const std::vector<double>& p, const std::vector<double>& q) {
        MismatchSchedule s;
        s.p.assign(static_cast<size_t>(n), std::nullopt);
        s.q.assign(static_cast<size_t>(n), std::nullopt);
        for (int i = 0; i < n; ++i) {
            if (i == slack) continue;
            s.p[static_cast<size_t>(i)] = -pd[static_cast<size_t>(i)];
            s.q[static_cast<size_t>(i)] = -qd[static_cast<size_t>(i)];
        }
        for (size_t k = 0; k < net.generators.size(); ++k) {
            const int i = net.generators[k].bus - 1;
            if (i == slack) continue;
            *s.p[static_cast<size_t>(i)] += p[k];
            *s.q[static_cast<size_t>(i)] += q[k];
        }
        return s;
    };
    double h_cur = h_obj_numeric(y, v, schedule_of(pg, qg));
    SolveResult res;
    double dmu = cfg.disc.delta_mu, dom = cfg.disc.delta_omega;
    // Step control compares the best objective of consecutive windows so an
    // oscillating iterate does not trigger spurious shrinks.
    double window_ref = h_cur;
    double window_best = std::numeric_limits<double>::infinity();
    int window_count = 0;
    const std::vector<double> scales = step_scales(y);
    for (int it = 1; it <= cfg.it_max; ++it) {
        DiscretizationConfig d = cfg.disc;
        d.delta_mu = dmu;
        d.delta_omega = dom;
        if (d.step_scale.empty()) d.step_scale = scales;
        const VoltageExpressions ve = substitute_voltage(net, v, d);
        const DispatchExpressions de = substitute_dispatch(net, d, ve.registry);

        ScheduleExprs p_sched(static_cast<size_t>(n)), q_sched(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            if (i == slack) continue;
            LinExpr lp, lq;
            lp.c = -pd[static_cast<size_t>(i)];
            lq.c = -qd[static_cast<size_t>(i)];
            p_sched[static_cast<size_t>(i)] = std::move(lp);
            q_sched[static_cast<size_t>(i)] = std::move(lq);
        }
        for (size_t k = 0; k < net.generators.size(); ++k) {
            const int i = net.generators[k].bus - 1;
            if (i == slack) continue;
            *p_sched[static_cast<size_t>(i)] += de.p_pu[k];
            *q_sched[static_cast<size_t>(i)] += de.q_pu[k];
        }

        SquaredForm h = build_h_obj_form(y, ve, p_sched, q_sched);
        int counter = 0;
        loop_detail::append(h, build_h_const_form(net, ve, v, d, cfg.weights, &counter));
        const LinExpr slack_p = slack_recovery_expr(net, de, line_losses_pu(net, v));
        loop_detail::append(
            h, build_slack_bound_form(net, slack_p, ve.registry, d, cfg.weights, &counter));
        loop_detail::append(h, build_h_cost_form(net, de, cfg.weights, &slack_p));

        AnnealParams ap = cfg.anneal;
        ap.seed = cfg.anneal.seed + static_cast<uint64_t>(it) * 0x9e3779b97f4a7c15ULL;
        if (cfg.warm_start) {
            // Warm start at the incumbent: zero voltage increments plus the
            // bit encoding of the current dispatch.
            ap.init_bits.assign(ve.registry->size(), 0);
            for (size_t k = 0; k < net.generators.size(); ++k) {
                if (!de.encoded[k]) continue;
                const Generator& g = net.generators[k];
                auto encode_bits = [&](VarTag tag, int bits_n, double lo,
                                       double hi, double step_io, double val_mw) {
                    if (hi <= lo) return;
                    const double lv = std::pow(2.0, bits_n) - 1.0;
                    const double step = step_io > 0.0 ? step_io : (hi - lo) / lv;
                    long code = std::lround((val_mw - lo) / step);
                    code = std::clamp(code, 0L, static_cast<long>(lv));
                    for (int b = 0; b < bits_n; ++b)
                        ap.init_bits[ve.registry->intern({tag, g.bus, b})] =
                            static_cast<uint8_t>((code >> b) & 1);
                };
                encode_bits(VarTag::PgBit, d.pg_bits, g.p_min, g.p_max, d.pg_step,
                            pg[k] * net.s_base);
                encode_bits(VarTag::QgBit, d.qg_bits, g.q_min, g.q_max, d.qg_step,
                            qg[k] * net.s_base);
            }
        }
        const ReadoutSet rs = loop_detail::run_backend(cfg.backend, h, ap,
                                                       cfg.weights.lambda_quad);
        const std::vector<uint8_t>& bits = best_sample(rs).bits;
        const VoltageState vc = loop_detail::decode_voltage(ve, bits);
        std::vector<double> pc(pg), qc(qg);
        for (size_t k = 0; k < net.generators.size(); ++k) {
            if (!de.encoded[k]) continue;
            pc[k] = de.p_pu[k].evaluate(bits);
            qc[k] = de.q_pu[k].evaluate(bits);
        }
        // Re-center on the annealed state unconditionally; the mismatch
        // objective may transiently rise while dispatch redistributes.
        v = vc;
        pg = std::move(pc);
        qg = std::move(qc);
        h_cur = h_obj_numeric(y, v, schedule_of(pg, qg));
        res.trace.push_back({it, h_cur, dmu, dom});
        res.iterations = it;
        if (h_cur <= cfg.epsilon) {
            res.converged = true;
            break;
        }
        window_best = std::min(window_best, h_cur);
        if (++window_count >= cfg.stall_window) {
            if (window_best > window_ref * (1.0 - cfg.stall_rel_improvement)) {
                dmu = std::max(cfg.delta_mu_floor, dmu * cfg.shrink);
                dom = std::max(cfg.delta_omega_floor, dom * cfg.shrink);
            }
            window_ref = window_best;
            window_best = std::numeric_limits<double>::infinity();
            window_count = 0;
        }
    }

    res.state = v;
    res.h_obj = h_cur;
    const Injection inj = injected_power(y, v);
    res.p_gen_mw.resize(net.generators.size());
    res.q_gen_mvar.resize(net.generators.size());
    std::vector<double> dispatch_mw(net.generators.size());
    for (size_t k = 0; k < net.generators.size(); ++k) {
        const Generator& g = net.generators[k];
        const size_t i = static_cast<size_t>(g.bus - 1);
        if (g.bus - 1 == slack) {
            res.p_gen_mw[k] = (inj.p[i] + pd[i]) * net.s_base;
            res.q_gen_mvar[k] = (inj.q[i] + qd[i]) * net.s_base;
        } else {
            res.p_gen_mw[k] = pg[k] * net.s_base;
            // Reactive output recovered from the network at the final state;
            // the encoded value only steered the search.
            res.q_gen_mvar[k] = (inj.q[i] + qd[i]) * net.s_base;
        }
        dispatch_mw[k] = res.p_gen_mw[k];
        res.total_cost += g.cost.eval(res.p_gen_mw[k]);
    }
    res.violations = aqopf_violations(net, v, res.p_gen_mw, res.q_gen_mvar);
    return res;
}

struct DeviationReport {
    double mean_dv = 0, std_dv = 0;        // p.u.
    double mean_ddelta = 0, std_ddelta = 0;  // degrees
    double mean_dp = 0, std_dp = 0;        // MW
    double mean_dq = 0, std_dq = 0;        // MVAR
};

inline DeviationReport compare(const Network& net, const VoltageState& approx,
                               const PfSolution& ref) {
    const AdmittanceMatrix y = build_admittance(net);
    const Injection ia = injected_power(y, approx);
    const int n = net.size();
    VoltageState vr = ref.voltage_state();
    const Injection ir = injected_power(y, vr);
    auto stats = [n](const std::vector<double>& d, double* mean, double* sd) {
        double m = 0;
        for (double x : d) m += x;
        m /= n;
        double s = 0;
        for (double x : d) s += (x - m) * (x - m);
        *mean = m;
        *sd = std::sqrt(s / n);
    };
    std::vector<double> dv, dd, dp, dq;
    for (int i = 0; i < n; ++i) {
        dv.push_back(std::fabs(approx.v_mag(i) - ref.v_mag[static_cast<size_t>(i)]));
        dd.push_back(std::fabs(approx.delta_deg(i) - ref.delta[static_cast<size_t>(i)]));
        dp.push_back(std::fabs(ia.p[static_cast<size_t>(i)] - ir.p[static_cast<size_t>(i)]) *
                     net.s_base);
        dq.push_back(std::fabs(ia.q[static_cast<size_t>(i)] - ir.q[static_cast<size_t>(i)]) *
                     net.s_base);
    }
    DeviationReport r;
    stats(dv, &r.mean_dv, &r.std_dv);
    stats(dd, &r.mean_ddelta, &r.std_ddelta);
    stats(dp, &r.mean_dp, &r.std_dp);
    stats(dq, &r.mean_dq, &r.std_dq);
    return r;
}

inline void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace) {
    out << "iteration,h_obj,delta_mu,delta_omega\n";
    char buf[128];
    for (const TracePoint& t : trace) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", t.iteration, t.h_obj, t.delta_mu,
                      t.delta_omega);
        out << buf;
    }
}

inline void write_deviation_csv(std::ostream& out, const DeviationReport& r) {
    out << "mean_dv_pu,std_dv_pu,mean_ddelta_deg,std_ddelta_deg,mean_dp_mw,std_dp_mw,"
           "mean_dq_mvar,std_dq_mvar\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.mean_dv,
                  r.std_dv, r.mean_ddelta, r.std_ddelta, r.mean_dp, r.std_dp, r.mean_dq,
                  r.std_dq);
    out << buf;
}

}  // namespace aqflow
