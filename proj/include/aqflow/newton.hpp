#pragma once

// Polar-coordinate Newton-Raphson power flow. PV buses hold |V| at their
// scheduled value with Q free (no reactive-limit switching; limits are checked
// post-hoc by the OPF layer).

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "aqflow/grid.hpp"

namespace aqflow {

struct PfSolution {
    std::vector<double> v_mag;    // p.u.
    std::vector<double> delta;    // degrees
    std::vector<double> p_inj;    // p.u.
    std::vector<double> q_inj;    // p.u.
    double p_slack = 0.0;         // MW
    std::vector<double> q_gen;    // MVAR, aligned with net.generators
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;    // p.u., at exit

    VoltageState voltage_state() const {
        VoltageState v;
        const size_t n = v_mag.size();
        v.mu.resize(n);
        v.omega.resize(n);
        for (size_t i = 0; i < n; ++i) {
            const double d = deg2rad(delta[i]);
            v.mu[i] = v_mag[i] * std::cos(d);
            v.omega[i] = v_mag[i] * std::sin(d);
        }
        return v;
    }
};

class SingularJacobianError : public GridError {
public:
    SingularJacobianError() : GridError("newton: singular Jacobian") {}
};

inline PfSolution nr_power_flow(const Network& net, double tol = 1e-8, int max_iter = 50) {
    validate(net);
    const int n = net.size();
    const AdmittanceMatrix y = build_admittance(net);
    const std::vector<double> pd = net.load_p_pu();
    const std::vector<double> qd = net.load_q_pu();
    const std::vector<double> pg = net.gen_p_pu();
    const int slack = net.slack_index() - 1;

    std::vector<double> vm(static_cast<size_t>(n), 1.0), va(static_cast<size_t>(n), 0.0);
    std::vector<int> pv, pq;  // 0-based bus ids
    for (const Bus& b : net.buses) {
        const int i = b.index - 1;
        if (b.kind == BusKind::Slack) {
            vm[static_cast<size_t>(i)] = b.v_spec;
            va[static_cast<size_t>(i)] = deg2rad(b.delta_spec);
        } else if (b.kind == BusKind::PV) {
            vm[static_cast<size_t>(i)] = b.v_spec;
            pv.push_back(i);
        } else {
            pq.push_back(i);
        }
    }
    // Unknowns: angles at all non-slack buses, magnitudes at PQ buses.
    std::vector<int> ang_bus;
    for (int i = 0; i < n; ++i)
        if (i != slack) ang_bus.push_back(i);
    const int na = static_cast<int>(ang_bus.size());
    const int nq = static_cast<int>(pq.size());
    const int m = na + nq;

    std::vector<double> p_sched(static_cast<size_t>(n)), q_sched(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        p_sched[static_cast<size_t>(i)] = pg[static_cast<size_t>(i)] - pd[static_cast<size_t>(i)];
        q_sched[static_cast<size_t>(i)] = -qd[static_cast<size_t>(i)];  // PQ buses only
    }

    auto injections = [&](std::vector<double>& p, std::vector<double>& q) {
        for (int i = 0; i < n; ++i) {
            double pi = 0.0, qi = 0.0;
            for (int j = 0; j < n; ++j) {
                const double th = va[static_cast<size_t>(i)] - va[static_cast<size_t>(j)];
                const double c = std::cos(th), s = std::sin(th);
                const double vv = vm[static_cast<size_t>(i)] * vm[static_cast<size_t>(j)];
                pi += vv * (y.G(i, j) * c + y.B(i, j) * s);
                qi += vv * (y.G(i, j) * s - y.B(i, j) * c);
            }
            p[static_cast<size_t>(i)] = pi;
            q[static_cast<size_t>(i)] = qi;
        }
    };

    PfSolution sol;
    std::vector<double> p(static_cast<size_t>(n)), q(static_cast<size_t>(n));
    int it = 0;
    double max_mis = 0.0;
    for (; it <= max_iter; ++it) {
        injections(p, q);
        Eigen::VectorXd f(m);
        for (int a = 0; a < na; ++a) {
            const int i = ang_bus[static_cast<size_t>(a)];
            f(a) = p_sched[static_cast<size_t>(i)] - p[static_cast<size_t>(i)];
        }
        for (int b = 0; b < nq; ++b) {
            const int i = pq[static_cast<size_t>(b)];
            f(na + b) = q_sched[static_cast<size_t>(i)] - q[static_cast<size_t>(i)];
        }
        max_mis = (m > 0) ? f.cwiseAbs().maxCoeff() : 0.0;
        if (max_mis < tol) {
            sol.converged = true;
            break;
        }
        if (it == max_iter) break;

        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, m);
        // dP/dtheta, dP/dV, dQ/dtheta, dQ/dV — standard polar NR blocks.
        for (int a = 0; a < na; ++a) {
            const int i = ang_bus[static_cast<size_t>(a)];
            const double vi = vm[static_cast<size_t>(i)];
            for (int b2 = 0; b2 < na; ++b2) {
                const int j = ang_bus[static_cast<size_t>(b2)];
                if (i == j) {
                    J(a, b2) = -q[static_cast<size_t>(i)] - y.B(i, i) * vi * vi;
                } else {
                    const double th = va[static_cast<size_t>(i)] - va[static_cast<size_t>(j)];
                    const double vv = vi * vm[static_cast<size_t>(j)];
                    J(a, b2) = vv * (y.G(i, j) * std::sin(th) - y.B(i, j) * std::cos(th));
                }
            }
            for (int b2 = 0; b2 < nq; ++b2) {
                const int j = pq[static_cast<size_t>(b2)];
                if (i == j) {
                    J(a, na + b2) = p[static_cast<size_t>(i)] / vi + y.G(i, i) * vi;
                } else {
                    const double th = va[static_cast<size_t>(i)] - va[static_cast<size_t>(j)];
                    J(a, na + b2) = vi * (y.G(i, j) * std::cos(th) + y.B(i, j) * std::sin(th));
                }
            }
        }
        for (int a = 0; a < nq; ++a) {
            const int i = pq[static_cast<size_t>(a)];
            const double vi = vm[static_cast<size_t>(i)];
            for (int b2 = 0; b2 < na; ++b2) {
                const int j = ang_bus[static_cast<size_t>(b2)];
                if (i == j) {
                    J(na + a, b2) = p[static_cast<size_t>(i)] - y.G(i, i) * vi * vi;
                } else {
                    const double th = va[static_cast<size_t>(i)] - va[static_cast<size_t>(j)];
                    const double vv = vi * vm[static_cast<size_t>(j)];
                    J(na + a, b2) = -vv * (y.G(i, j) * std::cos(th) + y.B(i, j) * std::sin(th));
                }
            }
            for (int b2 = 0; b2 < nq; ++b2) {
                const int j = pq[static_cast<size_t>(b2)];
                if (i == j) {
                    J(na + a, na + b2) = q[static_cast<size_t>(i)] / vi - y.B(i, i) * vi;
                } else {
                    const double th = va[static_cast<size_t>(i)] - va[static_cast<size_t>(j)];
                    J(na + a, na + b2) = vi * (y.G(i, j) * std::sin(th) - y.B(i, j) * std::cos(th));
                }
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!lu.isInvertible()) throw SingularJacobianError();
        const Eigen::VectorXd dx = lu.solve(f);
        for (int a = 0; a < na; ++a) va[static_cast<size_t>(ang_bus[static_cast<size_t>(a)])] += dx(a);
        for (int b2 = 0; b2 < nq; ++b2) vm[static_cast<size_t>(pq[static_cast<size_t>(b2)])] += dx(na + b2);
    }

    injections(p, q);
    sol.v_mag.assign(vm.begin(), vm.end());
    sol.delta.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) sol.delta[static_cast<size_t>(i)] = rad2deg(va[static_cast<size_t>(i)]);
    sol.p_inj = p;
    sol.q_inj = q;
    sol.iterations = it;
    sol.max_mismatch = max_mis;
    sol.p_slack = (p[static_cast<size_t>(slack)] + pd[static_cast<size_t>(slack)]) * net.s_base;
    // Reactive output per generator: bus injection plus local demand.
    sol.q_gen.clear();
    for (const Generator& g : net.generators) {
        const int i = g.bus - 1;
        sol.q_gen.push_back((q[static_cast<size_t>(i)] + qd[static_cast<size_t>(i)]) * net.s_base);
    }
    return sol;
}

}  // namespace aqflow
