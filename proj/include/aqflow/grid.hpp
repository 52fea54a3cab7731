#pragma once

// Network data model: buses, lines, generators, loads, bus admittance
// matrix assembly and rectangular-coordinate power injection evaluation.
// All internal computation is per-unit on s_base; MW/MVAR appear only at
// I/O boundaries.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace aqflow {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

class GridError : public std::runtime_error {
public:
    explicit GridError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class BusKind { Slack, PV, PQ };

struct Bus {
    int index = 0;  // 1-based
    BusKind kind = BusKind::PQ;
    double v_spec = 1.0;      // p.u., meaningful for PV/Slack
    double delta_spec = 0.0;  // degrees, meaningful for Slack
    double v_min = 0.9, v_max = 1.1;
    double delta_min = -45.0, delta_max = 45.0;  // degrees
};

struct Line {
    int from_bus = 0, to_bus = 0;
    double r = 0.0;  // p.u. series resistance
    double x = 0.0;  // p.u. series reactance
    double b = 0.0;  // p.u. total line charging susceptance
};

struct CostPoly {
    double c0 = 0.0;  // currency
    double c1 = 0.0;  // currency/MW
    double c2 = 0.0;  // currency/MW^2

    double eval(double p_mw) const { return c0 + p_mw * c1 + p_mw * p_mw * c2; }
};

struct Generator {
    int bus = 0;
    double p_g_spec = 0.0;  // MW; dispatch variable for OPF, fixed for PF
    double p_min = 0.0, p_max = 0.0;  // MW
    double q_min = 0.0, q_max = 0.0;  // MVAR
    CostPoly cost;

    bool must_run() const { return p_min == p_max; }
};

struct Load {
    int bus = 0;
    double p_d = 0.0;  // MW
    double q_d = 0.0;  // MVAR
};

struct Network {
    double s_base = 100.0;  // MVA
    double v_base = 345.0;  // kV
    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<Generator> generators;
    std::vector<Load> loads;

    int size() const { return static_cast<int>(buses.size()); }

    const Bus& bus(int index) const { return buses.at(static_cast<size_t>(index - 1)); }
    Bus& bus(int index) { return buses.at(static_cast<size_t>(index - 1)); }

    int slack_index() const {
        for (const auto& b : buses)
            if (b.kind == BusKind::Slack) return b.index;
        throw GridError("network has no slack bus");
    }

    // Aggregate load per bus, per-unit. Vector is 0-based over buses 1..N.
    std::vector<double> load_p_pu() const {
        std::vector<double> p(static_cast<size_t>(size()), 0.0);
        for (const auto& l : loads) p[static_cast<size_t>(l.bus - 1)] += l.p_d / s_base;
        return p;
    }
    std::vector<double> load_q_pu() const {
        std::vector<double> q(static_cast<size_t>(size()), 0.0);
        for (const auto& l : loads) q[static_cast<size_t>(l.bus - 1)] += l.q_d / s_base;
        return q;
    }
    // Scheduled generation per bus (sum of generator p_g_spec), per-unit.
    std::vector<double> gen_p_pu() const {
        std::vector<double> p(static_cast<size_t>(size()), 0.0);
        for (const auto& g : generators) p[static_cast<size_t>(g.bus - 1)] += g.p_g_spec / s_base;
        return p;
    }
    bool has_generator(int bus_index) const {
        return std::any_of(generators.begin(), generators.end(),
                           [&](const Generator& g) { return g.bus == bus_index; });
    }
};

// Validates all structural invariants; throws GridError with a field path.
inline void validate(const Network& net) {
    const int n = net.size();
    if (n == 0) throw GridError("buses: network is empty");
    int slack_count = 0;
    for (int i = 0; i < n; ++i) {
        const Bus& b = net.buses[static_cast<size_t>(i)];
        if (b.index != i + 1)
            throw GridError("buses[" + std::to_string(i) + "].index: expected contiguous 1.." +
                            std::to_string(n) + ", got " + std::to_string(b.index));
        if (b.kind == BusKind::Slack) ++slack_count;
        if (!(b.v_min < b.v_max))
            throw GridError("buses[" + std::to_string(i) + "]: v_min must be < v_max");
        if (!(b.delta_min < b.delta_max))
            throw GridError("buses[" + std::to_string(i) + "]: delta_min must be < delta_max");
    }
    if (slack_count == 0) throw GridError("buses: missing slack bus");
    if (slack_count > 1) throw GridError("buses: multiple slack buses");

    for (size_t i = 0; i < net.lines.size(); ++i) {
        const Line& l = net.lines[i];
        const std::string path = "lines[" + std::to_string(i) + "]";
        if (l.from_bus < 1 || l.from_bus > n || l.to_bus < 1 || l.to_bus > n)
            throw GridError(path + ": bus reference out of range");
        if (l.from_bus == l.to_bus) throw GridError(path + ": from_bus equals to_bus");
        if (l.r < 0.0) throw GridError(path + ".r: negative resistance");
        if (l.x == 0.0 && l.r == 0.0) throw GridError(path + ": zero-impedance line");
        if (l.x == 0.0) throw GridError(path + ".x: reactance must be nonzero");
        if (l.b < 0.0) throw GridError(path + ".b: negative charging susceptance");
    }
    for (size_t i = 0; i < net.generators.size(); ++i) {
        const Generator& g = net.generators[i];
        const std::string path = "generators[" + std::to_string(i) + "]";
        if (g.bus < 1 || g.bus > n) throw GridError(path + ".bus: out of range");
        if (g.p_min > g.p_max) throw GridError(path + ": p_min > p_max");
        if (g.q_min > g.q_max) throw GridError(path + ": q_min > q_max");
    }
    std::map<int, int> load_count;
    for (size_t i = 0; i < net.loads.size(); ++i) {
        const Load& l = net.loads[i];
        if (l.bus < 1 || l.bus > n)
            throw GridError("loads[" + std::to_string(i) + "].bus: out of range");
        if (++load_count[l.bus] > 1)
            throw GridError("loads[" + std::to_string(i) + "].bus: duplicate load record for bus " +
                            std::to_string(l.bus));
    }

    // Connectivity over the line graph.
    std::vector<char> seen(static_cast<size_t>(n), 0);
    std::vector<int> stack{1};
    seen[0] = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (const Line& l : net.lines) {
            int v = (l.from_bus == u) ? l.to_bus : (l.to_bus == u ? l.from_bus : 0);
            if (v != 0 && !seen[static_cast<size_t>(v - 1)]) {
                seen[static_cast<size_t>(v - 1)] = 1;
                stack.push_back(v);
            }
        }
    }
    for (int i = 0; i < n; ++i)
        if (!seen[static_cast<size_t>(i)])
            throw GridError("lines: graph is disconnected (bus " + std::to_string(i + 1) +
                            " unreachable)");
}

// Dense Y-bus split into conductance and susceptance parts. Row-major N*N.
struct AdmittanceMatrix {
    int n = 0;
    std::vector<double> g;  // conductance
    std::vector<double> b;  // susceptance

    double& gref(int i, int j) { return g[static_cast<size_t>(i * n + j)]; }
    double& bref(int i, int j) { return b[static_cast<size_t>(i * n + j)]; }
    double G(int i, int j) const { return g[static_cast<size_t>(i * n + j)]; }  // 0-based
    double B(int i, int j) const { return b[static_cast<size_t>(i * n + j)]; }
    std::complex<double> Y(int i, int j) const { return {G(i, j), B(i, j)}; }
};

// Standard pi-model assembly: series admittance y = 1/(r + jx) adds +y to
// both terminal diagonals and -y off-diagonal; shunt jb/2 to each diagonal.
inline AdmittanceMatrix build_admittance(const Network& net) {
    const int n = net.size();
    AdmittanceMatrix y;
    y.n = n;
    y.g.assign(static_cast<size_t>(n) * static_cast<size_t>(n), 0.0);
    y.b.assign(static_cast<size_t>(n) * static_cast<size_t>(n), 0.0);
    for (const Line& l : net.lines) {
        if (l.r == 0.0 && l.x == 0.0) throw GridError("zero-impedance line");
        const std::complex<double> ys = 1.0 / std::complex<double>(l.r, l.x);
        const int i = l.from_bus - 1, j = l.to_bus - 1;
        y.gref(i, i) += ys.real();
        y.bref(i, i) += ys.imag() + l.b / 2.0;
        y.gref(j, j) += ys.real();
        y.bref(j, j) += ys.imag() + l.b / 2.0;
        y.gref(i, j) -= ys.real();
        y.bref(i, j) -= ys.imag();
        y.gref(j, i) -= ys.real();
        y.bref(j, i) -= ys.imag();
    }
    return y;
}

// Bus voltage in rectangular coordinates: mu = Re V, omega = Im V.
struct VoltageState {
    std::vector<double> mu;
    std::vector<double> omega;

    int size() const { return static_cast<int>(mu.size()); }

    static VoltageState flat(int n) {
        VoltageState v;
        v.mu.assign(static_cast<size_t>(n), 1.0);
        v.omega.assign(static_cast<size_t>(n), 0.0);
        return v;
    }
    double v_mag(int i) const {
        return std::hypot(mu[static_cast<size_t>(i)], omega[static_cast<size_t>(i)]);
    }
    double delta_deg(int i) const {
        return rad2deg(std::atan2(omega[static_cast<size_t>(i)], mu[static_cast<size_t>(i)]));
    }
};

struct Injection {
    std::vector<double> p;  // per-unit
    std::vector<double> q;  // per-unit
};

// P_i = sum_j G_ij (mu_i mu_j + om_i om_j) + B_ij (om_i mu_j - mu_i om_j)
// Q_i = sum_j G_ij (om_i mu_j - mu_i om_j) - B_ij (mu_i mu_j + om_i om_j)
inline Injection injected_power(const AdmittanceMatrix& y, const VoltageState& v) {
    const int n = y.n;
    if (v.size() != n) throw GridError("injected_power: dimension mismatch");
    Injection inj;
    inj.p.assign(static_cast<size_t>(n), 0.0);
    inj.q.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const double mi = v.mu[static_cast<size_t>(i)], wi = v.omega[static_cast<size_t>(i)];
        double p = 0.0, q = 0.0;
        for (int j = 0; j < n; ++j) {
            const double mj = v.mu[static_cast<size_t>(j)], wj = v.omega[static_cast<size_t>(j)];
            const double gij = y.G(i, j), bij = y.B(i, j);
            const double re = mi * mj + wi * wj;
            const double im = wi * mj - mi * wj;
            p += gij * re + bij * im;
            q += gij * im - bij * re;
        }
        inj.p[static_cast<size_t>(i)] = p;
        inj.q[static_cast<size_t>(i)] = q;
    }
    return inj;
}

// Total series I^2 R losses over all lines, per-unit.
inline double line_losses_pu(const Network& net, const VoltageState& v) {
    double loss = 0.0;
    for (const Line& l : net.lines) {
        const std::complex<double> ys = 1.0 / std::complex<double>(l.r, l.x);
        const std::complex<double> vi(v.mu[static_cast<size_t>(l.from_bus - 1)],
                                      v.omega[static_cast<size_t>(l.from_bus - 1)]);
        const std::complex<double> vj(v.mu[static_cast<size_t>(l.to_bus - 1)],
                                      v.omega[static_cast<size_t>(l.to_bus - 1)]);
        const std::complex<double> iser = ys * (vi - vj);
        loss += l.r * std::norm(iser);
    }
    return loss;
}

}  // namespace aqflow
