#pragma once

// Control-side client of the grid simulator. Each tick it receives a
// measurement frame, rebuilds the working network from the measured
// loads and RES output, re-optimizes the dispatch, converts the result
// to exciter/droop set points, and replies. An infeasible or failed
// solve re-sends the previous set points and flags the tick.

#include <chrono>
#include <thread>

#include "aqflow/hil/frames.hpp"
#include "aqflow/hil/socket.hpp"
#include "aqflow/loop.hpp"
#include "aqflow/newton.hpp"

namespace aqflow::hil {

struct MiddlewareConfig {
    std::string host = "127.0.0.1";
    uint16_t port = 7350;
    int ticks = 10;
    int connect_attempts = 5;
    double connect_backoff_s = 0.5;  // doubles per attempt
    int solve_retries = 2;           // reseeded re-solves before falling back
    LoopConfig loop;
    GeneratorDynamicParams dyn;
};

struct MiddlewareTickLog {
    uint32_t tick = 0;
    double solve_s = 0.0;
    double cost = 0.0;
    double h_obj = 0.0;
    bool feasible = false;
    bool resent_previous = false;   // solve rejected, held last set points
    std::vector<double> p_gen_mw;   // aligned with net.generators
};

class MiddlewareError : public GridError {
public:
    explicit MiddlewareError(const std::string& msg) : GridError("middleware: " + msg) {}
};

namespace mw_detail {

inline TcpStream connect_with_retry(const MiddlewareConfig& cfg) {
    double backoff = cfg.connect_backoff_s;
    for (int attempt = 1;; ++attempt) {
        try {
            return TcpStream::connect(cfg.host, cfg.port);
        } catch (const SocketError&) {
            if (attempt >= cfg.connect_attempts) throw;
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            backoff *= 2.0;
        }
    }
}

inline Network rebuild_network(const Network& base, const MeasurementFrameData& m) {
    Network net = base;
    net.loads.clear();
    for (size_t i = 0; i < m.load_bus.size(); ++i)
        net.loads.push_back({m.load_bus[i], m.p_d[i], m.q_d[i]});
    for (size_t i = 0; i < m.res_bus.size(); ++i)
        for (auto& g : net.generators)
            if (g.bus == m.res_bus[i] && g.must_run()) {
                g.p_g_spec = m.res_p[i];
                g.p_min = m.res_p[i];
                g.p_max = m.res_p[i];
            }
    return net;
}

inline SetpointFrameData to_setpoints(const Network& net, const SolveResult& res,
                                      const GeneratorDynamicParams& dyn) {
    SetpointFrameData s;
    s.gen_bus = layout::conventional_buses(net);
    s.res_bus = layout::res_buses(net);
    for (int b : s.gen_bus) {
        for (size_t k = 0; k < net.generators.size(); ++k) {
            const Generator& g = net.generators[k];
            if (g.bus != b || g.must_run()) continue;
            const int i = b - 1;
            const double v = res.state.v_mag(i);
            s.v_ref.push_back(compute_v_ref(v, res.p_gen_mw[k] / net.s_base,
                                            res.q_gen_mvar[k] / net.s_base, dyn));
            s.p_ref.push_back(compute_p_ref(res.p_gen_mw[k], dyn, net.s_base));
            break;
        }
    }
    for (int b : s.res_bus) s.res_v_ref.push_back(res.state.v_mag(b - 1));
    return s;
}

}  // namespace mw_detail

inline std::vector<MiddlewareTickLog> run_middleware(const Network& base,
                                                     const MiddlewareConfig& cfg) {
    validate(base);
    cfg.dyn.check();
    TcpStream peer = mw_detail::connect_with_retry(cfg);

    // Fallback set points from the reference power flow on the base case,
    // used when a solve is rejected before any tick has succeeded.
    std::optional<SetpointFrameData> last;
    {
        const PfSolution pf = nr_power_flow(base);
        if (pf.converged) {
            SolveResult seed;
            seed.state = pf.voltage_state();
            seed.p_gen_mw.resize(base.generators.size());
            seed.q_gen_mvar.resize(base.generators.size());
            for (size_t k = 0; k < base.generators.size(); ++k) {
                const Generator& g = base.generators[k];
                seed.p_gen_mw[k] =
                    g.bus == base.slack_index() ? pf.p_slack : g.p_g_spec;
                seed.q_gen_mvar[k] = pf.q_gen[k];
            }
            last = mw_detail::to_setpoints(base, seed, cfg.dyn);
        }
    }

    std::vector<MiddlewareTickLog> logs;
    for (int t = 0; t < cfg.ticks; ++t) {
        Frame fin;
        if (!peer.read_frame(fin)) break;
        if (fin.type == FrameType::Error)
            throw MiddlewareError("simulator reported a protocol error");
        const MeasurementFrameData m = unpack_measurement(fin, base);
        const Network net = mw_detail::rebuild_network(base, m);

        MiddlewareTickLog log;
        log.tick = m.tick;
        const auto t0 = std::chrono::steady_clock::now();
        bool ok = false;
        SolveResult res;
        for (int attempt = 0; attempt <= cfg.solve_retries && !ok; ++attempt) {
            LoopConfig lc = cfg.loop;
            lc.anneal.seed += static_cast<uint64_t>(attempt) * 7919;
            try {
                res = run_aqopf(net, lc);
                ok = res.violations.empty();
            } catch (const GridError&) {
                ok = false;
            }
        }
        log.solve_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        SetpointFrameData s;
        if (ok) {
            log.feasible = true;
            log.cost = res.total_cost;
            log.h_obj = res.h_obj;
            log.p_gen_mw = res.p_gen_mw;
            s = mw_detail::to_setpoints(net, res, cfg.dyn);
            last = s;
        } else if (last) {
            log.resent_previous = true;
            s = *last;
        } else {
            throw MiddlewareError("first solve failed and no fallback set points exist");
        }
        s.tick = m.tick;
        peer.write_frame(pack_setpoints(s));
        logs.push_back(std::move(log));
    }
    return logs;
}

}  // namespace aqflow::hil
