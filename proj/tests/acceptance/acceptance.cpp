// Acceptance gate: one line per criterion, nonzero exit when any fails.
// Heavy solver runs use fixed seeds so the gate is reproducible.

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <random>
#include <sstream>
#include <thread>

#include "aqflow/cases.hpp"
#include "aqflow/hil/middleware.hpp"
#include "aqflow/hil/simulator.hpp"
#include "aqflow/loop.hpp"
#include "aqflow/newton.hpp"
#include "aqflow/opf.hpp"
#include "test_nets.hpp"

using namespace aqflow;

namespace {

int g_failures = 0;

void report(int id, bool ok, const std::string& detail) {
    std::printf("criterion %2d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double now_s() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// ---- criterion 1: reference power flow ----
void criterion_1() {
    const Network net = case9();
    const double t0 = now_s();
    const PfSolution sol = nr_power_flow(net, 1e-8);
    const double dt = now_s() - t0;
    double gen = sol.p_slack / net.s_base;
    for (const auto& g : net.generators)
        if (g.bus != net.slack_index()) gen += g.p_g_spec / net.s_base;
    double load = 0.0;
    for (const auto& l : net.loads) load += l.p_d / net.s_base;
    const double losses = line_losses_pu(net, sol.voltage_state());
    const double gap = std::fabs(gen - load - losses);
    const bool ok = sol.converged && sol.iterations <= 10 && gap < 1e-6 && dt < 0.1;
    report(1, ok,
           fmt("9-bus reference: %d iterations, balance gap %.2e p.u., %.3f s",
               sol.iterations, gap, dt));
}

// ---- criterion 2: annealed power flow accuracy, best of 3 seeds ----
void criterion_2() {
    const Network net = case9();
    const PfSolution ref = nr_power_flow(net, 1e-10);
    const double t0 = now_s();
    SolveResult best;
    best.h_obj = std::numeric_limits<double>::infinity();
    for (uint64_t seed = 1; seed <= 3; ++seed) {
        LoopConfig cfg;
        cfg.backend = "sa-hobo";
        cfg.epsilon = 1e-6;
        cfg.it_max = 500;
        cfg.disc.delta_mu = 1e-2;
        cfg.disc.delta_omega = 1e-2;
        cfg.anneal.readouts = 5000;
        cfg.anneal.sweeps_per_readout = 3;
        cfg.anneal.seed = seed;
        SolveResult r = run_aqpf(net, cfg);
        if (r.h_obj < best.h_obj) best = std::move(r);
    }
    const double dt = now_s() - t0;
    const DeviationReport d = compare(net, best.state, ref);
    const bool ok = best.converged && best.iterations <= 500 && d.mean_dv <= 5e-3 &&
                    d.mean_ddelta <= 5e-2 && d.mean_dp <= 1.0 && d.mean_dq <= 3.0 &&
                    dt < 600.0;
    report(2, ok,
           fmt("9-bus annealed PF: dV=%.2e p.u., ddelta=%.2e deg, dP=%.3f MW, dQ=%.3f "
               "MVAR, %d iterations, %.0f s for 3 seeds",
               d.mean_dv, d.mean_ddelta, d.mean_dp, d.mean_dq, best.iterations, dt));
}

// ---- criterion 3: quadratized backend reaches the loop threshold ----
void criterion_3() {
    LoopConfig cfg;
    cfg.backend = "sa-qubo";
    cfg.epsilon = 1e-2;
    cfg.it_max = 500;
    cfg.disc.delta_mu = 1e-2;
    cfg.disc.delta_omega = 1e-2;
    cfg.anneal.readouts = 100;
    cfg.anneal.sweeps_per_readout = 20;
    cfg.anneal.seed = 1;
    const SolveResult r = run_aqpf(case9(), cfg);
    report(3, r.converged && r.iterations <= 500,
           fmt("9-bus quadratized PF: h_obj=%.2e in %d iterations", r.h_obj, r.iterations));
}

// ---- criterion 4: dispatch optimization against the brute-force oracle ----
void criterion_4() {
    bool all_ok = true;
    std::string detail;
    struct Run {
        const char* name;
        Network net;
        double lambda_box;
        int it_max;
    };
    for (Run run : {Run{"case9", case9(), 1.0, 300}, Run{"case9_res", case9_res(), 10.0, 400}}) {
        const OpfSolution oracle = brute_force_opf(run.net, 1.0);
        LoopConfig cfg;
        cfg.mode = SolveMode::Aqopf;
        cfg.backend = "sa-hobo";
        cfg.epsilon = 1e-5;
        cfg.it_max = run.it_max;
        cfg.disc.delta_mu = 1e-2;
        cfg.disc.delta_omega = 1e-2;
        cfg.anneal.readouts = 300;
        cfg.anneal.sweeps_per_readout = 30;
        cfg.anneal.seed = 1;
        for (int i = 0; i < 8; ++i) cfg.weights.lambda[static_cast<size_t>(i)] = run.lambda_box;
        cfg.weights.lambda[8] = 1e-9;
        const SolveResult r = run_aqopf(run.net, cfg);
        const double rel = (r.total_cost - oracle.total_cost) / oracle.total_cost;
        bool res_ok = true;
        for (size_t k = 0; k < run.net.generators.size(); ++k)
            if (run.net.generators[k].must_run() && r.p_gen_mw[k] != 19.8) res_ok = false;
        const bool ok = r.violations.empty() && std::fabs(rel) <= 0.05 && res_ok;
        all_ok = all_ok && ok;
        detail += fmt("%s cost %.2f vs oracle %.2f (%+.1f%%), %zu violations; ", run.name,
                      r.total_cost, oracle.total_cost, 100.0 * rel, r.violations.size());
    }
    report(4, all_ok, detail);
}

// ---- criterion 5: quadratization is exact over all assignments ----
void criterion_5() {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> coeff(-3.0, 3.0);
    int checked = 0, bad = 0;
    while (checked < 200) {
        BinaryPolynomial p(std::make_shared<VarRegistry>());
        const int n = 4 + static_cast<int>(rng() % 6);  // 4..9 originals
        std::vector<uint32_t> xs;
        for (int i = 0; i < n; ++i)
            xs.push_back(p.registry()->intern({VarTag::MuUp, i, 0}));
        const int terms = 4 + static_cast<int>(rng() % 7);
        for (int t = 0; t < terms; ++t) {
            const int deg = 1 + static_cast<int>(rng() % 4);
            std::vector<uint32_t> vs;
            for (int d = 0; d < deg; ++d) vs.push_back(xs[rng() % xs.size()]);
            p.add_term(vs, coeff(rng));
        }
        const QuboProblem q = quadratize(p, 20.0 * std::max(1.0, p.max_abs_coefficient()));
        const int aux = static_cast<int>(q.size()) - n;
        if (aux > 8) continue;  // keep the exhaustive check tractable
        ++checked;
        bool poly_ok = true;
        std::vector<uint8_t> bits(q.size(), 0);
        for (uint32_t orig = 0; orig < (1u << n) && poly_ok; ++orig) {
            for (int i = 0; i < n; ++i) bits[static_cast<size_t>(i)] = (orig >> i) & 1;
            double best = std::numeric_limits<double>::infinity();
            for (uint32_t a = 0; a < (1u << aux); ++a) {
                for (int i = 0; i < aux; ++i)
                    bits[static_cast<size_t>(n + i)] = (a >> i) & 1;
                best = std::min(best, q.evaluate(bits));
            }
            std::vector<uint8_t> obits(bits.begin(), bits.begin() + n);
            obits.resize(p.registry()->size(), 0);
            if (std::fabs(best - p.evaluate(obits)) > 1e-9) poly_ok = false;
        }
        if (!poly_ok) ++bad;
    }
    report(5, bad == 0, fmt("%d random degree<=4 polynomials, %d mismatches", checked, bad));
}

// ---- criterion 6: symbolic objective equals numeric evaluation ----
void criterion_6() {
    int bad = 0;
    double worst = 0.0;
    for (const Network& net : {testnets::two_bus(), case9()}) {
        const AdmittanceMatrix y = build_admittance(net);
        const VoltageState v0 = VoltageState::flat(net.size());
        DiscretizationConfig cfg;
        cfg.delta_mu = 1e-2;
        cfg.delta_omega = 1e-2;
        const VoltageExpressions ve = substitute_voltage(net, v0, cfg);
        const MismatchSchedule sched = aqpf_schedule(net, y, v0);
        const SquaredForm h = build_h_obj_form(y, ve, to_exprs(sched.p), to_exprs(sched.q));
        std::mt19937_64 rng(29);
        for (int t = 0; t < 1000; ++t) {
            std::vector<uint8_t> bits(ve.registry->size());
            for (auto& b : bits) b = rng() & 1;
            const VoltageState v = loop_detail::decode_voltage(ve, bits);
            const double gap = std::fabs(h.evaluate(bits) - h_obj_numeric(y, v, sched));
            worst = std::max(worst, gap);
            if (gap > 1e-10) ++bad;
        }
    }
    report(6, bad == 0, fmt("2000 random states over two networks, worst gap %.2e", worst));
}

// ---- criterion 7: slack expansion of inequality penalties ----
void criterion_7() {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> weight(-3.0, 3.0);
    int bad = 0;
    for (int t = 0; t < 100; ++t) {
        auto reg = std::make_shared<VarRegistry>();
        LinExpr g;
        g.c = weight(rng) * 10.0;
        std::vector<uint32_t> vars;
        for (int i = 0; i < 3; ++i) {
            vars.push_back(reg->intern({VarTag::MuUp, i, 0}));
            g.add(vars.back(), weight(rng) * 10.0);
        }
        const int bits = 6;
        QuadraticExpr r;
        try {
            r = slack_penalty_residual(reg, 99, g, bits);
        } catch (const PolyError&) {
            ++bad;
            continue;
        }
        double g_min = g.c;
        for (const auto& [v, w] : g.lin) g_min += std::min(0.0, w);
        const double range = std::max(0.0, -g_min);
        const double sigma = range > 0.0 ? range / (std::pow(2.0, bits) - 1.0) : 0.0;
        const uint32_t n_slack = reg->size() - 3;
        for (uint32_t a = 0; a < 8; ++a) {
            std::vector<uint8_t> bvec(reg->size(), 0);
            for (int i = 0; i < 3; ++i) bvec[vars[static_cast<size_t>(i)]] = (a >> i) & 1;
            const double v = g.evaluate(bvec);
            double best = std::numeric_limits<double>::infinity();
            for (uint32_t s = 0; s < (1u << n_slack); ++s) {
                for (uint32_t i = 0; i < n_slack; ++i) bvec[3 + i] = (s >> i) & 1;
                const double res = r.evaluate(bvec);
                best = std::min(best, res * res);
            }
            if (v <= 0.0 && best > sigma * sigma / 4.0 + 1e-9) ++bad;
            if (v > sigma && best < (v - sigma / 2.0) * (v - sigma / 2.0) - 1e-9) ++bad;
        }
    }
    report(7, bad == 0, fmt("100 random bound configurations, %d violations of the bound", bad));
}

// ---- criterion 8: backend determinism and solution quality ----
void criterion_8() {
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    int hits = 0;
    bool deterministic = true;
    for (int trial = 0; trial < 100; ++trial) {
        QuboProblem q;
        q.registry = std::make_shared<VarRegistry>();
        for (int i = 0; i < 12; ++i) q.registry->intern({VarTag::MuUp, i, 0});
        for (int i = 0; i < 12; ++i)
            for (int j = i; j < 12; ++j)
                q.add(static_cast<uint32_t>(i), static_cast<uint32_t>(j), coeff(rng));
        AnnealParams ap;
        ap.readouts = 200;
        ap.sweeps_per_readout = 50;
        ap.seed = static_cast<uint64_t>(trial);
        const ReadoutSet a = solve(q, ap);
        if (trial < 10) {
            const ReadoutSet b = solve(q, ap);
            if (a.samples.size() != b.samples.size()) deterministic = false;
            for (size_t i = 0; deterministic && i < a.samples.size(); ++i)
                if (a.samples[i].bits != b.samples[i].bits ||
                    a.samples[i].energy != b.samples[i].energy)
                    deterministic = false;
        }
        const double exact = best_sample(exhaustive_solve(q)).energy;
        if (std::fabs(best_sample(a).energy - exact) < 1e-9) ++hits;
    }
    report(8, deterministic && hits >= 99,
           fmt("repeat runs bit-identical: %s; optimum found in %d/100 random 12-var problems",
               deterministic ? "yes" : "no", hits));
}

// ---- criterion 9: set-point round trip ----
void criterion_9() {
    hil::GeneratorDynamicParams dyn;
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> uv(0.9, 1.1), up(0.0, 2.5), uq(-1.0, 1.0);
    int bad = 0;
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const double v = uv(rng), p = up(rng), q = uq(rng);
        const double v_back = hil::invert_v_ref(hil::compute_v_ref(v, p, q, dyn), p, q, dyn);
        const double p_back =
            hil::invert_p_ref(hil::compute_p_ref(p * 100.0, dyn, 100.0), dyn, 100.0);
        const double gap = std::max(std::fabs(v_back - v), std::fabs(p_back - p * 100.0));
        worst = std::max(worst, gap);
        if (gap > 1e-9) ++bad;
    }
    report(9, bad == 0, fmt("100 random operating points, worst round-trip gap %.2e", worst));
}

// ---- criterion 10: closed loop over the loopback interface ----
void criterion_10() {
    const double t0 = now_s();
    const Network net = case9_res();
    bool constant_ok = false, ramp_ok = false;
    std::string detail;

    auto make_mc = [](uint16_t port, int ticks) {
        hil::MiddlewareConfig mc;
        mc.port = port;
        mc.ticks = ticks;
        mc.loop.mode = SolveMode::Aqopf;
        mc.loop.epsilon = 1e-3;
        mc.loop.it_max = 80;
        mc.loop.disc.delta_mu = 1e-2;
        mc.loop.disc.delta_omega = 1e-2;
        mc.loop.anneal.readouts = 150;
        mc.loop.anneal.sweeps_per_readout = 20;
        mc.loop.anneal.seed = 3;
        for (int i = 0; i < 8; ++i) mc.loop.weights.lambda[static_cast<size_t>(i)] = 10.0;
        mc.loop.weights.lambda[8] = 1e-9;
        return mc;
    };

    {  // constant profile: feasibility and stationarity
        hil::SimulatorConfig sc;
        sc.port = 0;
        hil::MockSimulator sim(net, {}, sc);
        std::thread server([&] { sim.serve_one(); });
        const auto logs = hil::run_middleware(net, make_mc(sim.port(), 10));
        server.join();
        bool feasible = logs.size() == 10;
        for (const auto& l : logs) feasible = feasible && l.feasible;
        double drift = 0.0;
        const auto& sl = sim.log();
        for (size_t t = 3; t < sl.size(); ++t)
            for (size_t i = 0; i < sl[t].v_mag.size(); ++i)
                drift = std::max(drift, std::fabs(sl[t].v_mag[i] - sl[t - 1].v_mag[i]));
        constant_ok = feasible && sl.size() >= 10 && drift < 1e-6;
        detail += fmt("constant: %zu/10 ticks feasible, drift %.1e p.u.; ", logs.size(), drift);
    }

    {  // halved RES at tick 2: conventional units must pick up the gap
        std::istringstream csv(
            "tick,bus,p_scale,q_scale,res_scale\n2,11,1,1,0.5\n2,13,1,1,0.5\n");
        hil::SimulatorConfig sc;
        sc.port = 0;
        hil::MockSimulator sim(net, hil::load_profiles(csv), sc);
        std::thread server([&] { sim.serve_one(); });
        const auto logs = hil::run_middleware(net, make_mc(sim.port(), 5));
        server.join();
        bool feasible = logs.size() == 5;
        for (const auto& l : logs) feasible = feasible && l.feasible;
        const auto& sl = sim.log();
        bool nr_ok = sl.size() >= 5;
        for (const auto& t : sl) nr_ok = nr_ok && t.pf_converged;
        const double pickup = sl.back().gen_p_mw - sl.front().gen_p_mw;
        ramp_ok = feasible && nr_ok && pickup > 15.0;
        detail += fmt("RES drop: conventional pickup %.1f MW, per-tick balance %s; ", pickup,
                      nr_ok ? "holds" : "broken");
    }

    const double dt = now_s() - t0;
    detail += fmt("%.0f s total", dt);
    report(10, constant_ok && ramp_ok && dt < 900.0, detail);
}

// ---- criterion 11: wire protocol round trip and malformed-frame handling ----
void criterion_11() {
    std::mt19937_64 rng(59);
    int bad = 0;
    for (int t = 0; t < 10000; ++t) {
        hil::Frame f;
        const int pick = static_cast<int>(rng() % 3);
        f.type = pick == 0   ? hil::FrameType::Measurement
                 : pick == 1 ? hil::FrameType::Setpoint
                             : hil::FrameType::Error;
        f.tick = static_cast<uint32_t>(rng());
        f.payload.resize(rng() % 64);
        for (auto& x : f.payload) {
            const uint32_t bits = static_cast<uint32_t>(rng());
            std::memcpy(&x, &bits, 4);
        }
        if (!(hil::decode_frame(hil::encode_frame(f)) == f)) ++bad;
    }

    bool error_reply_ok = false;
    {
        hil::SimulatorConfig sc;
        sc.port = 0;
        hil::MockSimulator sim(case9(), {}, sc);
        std::thread server([&] { sim.serve_one(); });
        hil::TcpStream peer = hil::TcpStream::connect("127.0.0.1", sim.port());
        hil::Frame fin;
        if (peer.read_frame(fin)) {
            std::vector<uint8_t> bytes =
                hil::encode_frame(hil::pack_measurement(hil::MeasurementFrameData{}));
            bytes[2] = 0x55;  // invalid type
            peer.write_all(bytes.data(), bytes.size());
            hil::Frame err, eof_probe;
            error_reply_ok = peer.read_frame(err) && err.type == hil::FrameType::Error &&
                             !peer.read_frame(eof_probe);
        }
        server.join();
    }
    report(11, bad == 0 && error_reply_ok,
           fmt("10000 random frames round-tripped, %d mismatches; malformed frame %s", bad,
               error_reply_ok ? "answered with the error frame and closed" : "mishandled"));
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
