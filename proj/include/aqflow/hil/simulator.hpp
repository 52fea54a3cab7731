#pragma once

// Quasi-steady-state grid simulator service. Each tick it scales loads
// and RES output by the active profile row, publishes a measurement
// frame, waits for the set-point reply, applies the set points through
// the inverse exciter/droop maps, and re-solves the power flow. The
// electromagnetic plant of a real-time simulator is deliberately
// replaced by an algebraic solve per tick.

#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "aqflow/hil/frames.hpp"
#include "aqflow/hil/socket.hpp"
#include "aqflow/newton.hpp"

namespace aqflow::hil {

struct ProfileRow {
    int tick = 0;
    int bus = 0;
    double p_scale = 1.0;
    double q_scale = 1.0;
    double res_scale = 1.0;
};

// CSV columns: tick,bus,p_scale,q_scale,res_scale. A row stays in force
// for its bus until a later row overrides it.
inline std::vector<ProfileRow> load_profiles(std::istream& in) {
    std::vector<ProfileRow> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.find("tick") != std::string::npos) continue;
        }
        std::istringstream ss(line);
        ProfileRow r;
        char comma;
        if (!(ss >> r.tick >> comma >> r.bus >> comma >> r.p_scale >> comma >> r.q_scale >>
              comma >> r.res_scale))
            throw GridError("profiles: malformed row '" + line + "'");
        rows.push_back(r);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ProfileRow& a, const ProfileRow& b) { return a.tick < b.tick; });
    return rows;
}

inline std::vector<ProfileRow> load_profiles_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GridError("profiles: cannot open " + path);
    return load_profiles(in);
}

struct SimTickLog {
    uint32_t tick = 0;
    bool pf_converged = false;
    std::vector<double> v_mag;      // p.u. per bus
    std::vector<double> delta_deg;  // per bus
    double slack_p_mw = 0.0;
    double gen_p_mw = 0.0;   // total conventional + slack generation
    double load_p_mw = 0.0;  // total load after scaling
};

struct SimulatorConfig {
    uint16_t port = 7350;
    GeneratorDynamicParams dyn;
};

class MockSimulator {
public:
    MockSimulator(Network net, std::vector<ProfileRow> profiles, SimulatorConfig cfg = {})
        : base_(std::move(net)), profiles_(std::move(profiles)), cfg_(cfg),
          listener_(cfg.port) {
        validate(base_);
        cfg_.dyn.check();
    }

    uint16_t port() const { return listener_.port(); }
    const std::vector<SimTickLog>& log() const { return log_; }

    // Serves one client session; returns when the peer disconnects.
    // A malformed frame is answered with an error frame before close.
    void serve_one() {
        try {
            session();
        } catch (const SocketError&) {
            // peer went away between frames; the session is over
        }
    }

private:
    void session() {
        TcpStream peer = listener_.accept();
        Network net = base_;
        PfSolution state = nr_power_flow(net);
        if (!state.converged) throw GridError("simulator: base case does not converge");

        std::map<int, ProfileRow> active;  // latest row per bus
        size_t next_row = 0;
        const std::vector<int> load_bus = layout::load_buses(net);
        const std::vector<int> res_bus = layout::res_buses(net);
        const std::vector<int> gen_bus = layout::conventional_buses(net);

        for (uint32_t tick = 0;; ++tick) {
            while (next_row < profiles_.size() &&
                   profiles_[next_row].tick <= static_cast<int>(tick)) {
                const ProfileRow& row = profiles_[next_row++];
                active[row.bus] = row;
            }
            apply_profile(net, active);

            MeasurementFrameData m;
            m.tick = tick;
            m.load_bus = load_bus;
            m.res_bus = res_bus;
            for (int b : load_bus) {
                double p = 0.0, q = 0.0;
                for (const auto& l : net.loads)
                    if (l.bus == b) {
                        p += l.p_d;
                        q += l.q_d;
                    }
                m.p_d.push_back(p);
                m.q_d.push_back(q);
            }
            for (int b : res_bus)
                for (const auto& g : net.generators)
                    if (g.bus == b && g.must_run()) m.res_p.push_back(g.p_g_spec);
            peer.write_frame(pack_measurement(m));

            Frame reply;
            try {
                if (!peer.read_frame(reply)) return;  // client done
                if (reply.type == FrameType::Error) return;
                apply_setpoints(net, state, unpack_setpoints(reply, net), gen_bus);
            } catch (const ProtocolError&) {
                Frame err;
                err.type = FrameType::Error;
                err.tick = tick;
                try {
                    peer.write_frame(err);
                } catch (const GridError&) {
                }
                return;
            }

            PfSolution next = nr_power_flow(net);
            if (next.converged)
                state = next;  // a diverging set point holds the previous state
            log_tick(net, state, tick);
        }
    }

    void apply_profile(Network& net, const std::map<int, ProfileRow>& active) const {
        net.loads = base_.loads;
        for (auto& l : net.loads) {
            auto it = active.find(l.bus);
            if (it == active.end()) continue;
            l.p_d *= it->second.p_scale;
            l.q_d *= it->second.q_scale;
        }
        for (size_t k = 0; k < net.generators.size(); ++k) {
            if (!base_.generators[k].must_run()) continue;
            auto it = active.find(net.generators[k].bus);
            const double scale = it == active.end() ? 1.0 : it->second.res_scale;
            const double p = base_.generators[k].p_g_spec * scale;
            net.generators[k].p_g_spec = p;
            net.generators[k].p_min = p;
            net.generators[k].p_max = p;
        }
    }

    void apply_setpoints(Network& net, const PfSolution& state, const SetpointFrameData& s,
                         const std::vector<int>& gen_bus) const {
        for (size_t i = 0; i < gen_bus.size(); ++i) {
            const int b = gen_bus[i];
            const double p_mw = invert_p_ref(s.p_ref[i], cfg_.dyn, net.s_base);
            double q_pu = 0.0;
            for (size_t k = 0; k < net.generators.size(); ++k)
                if (net.generators[k].bus == b && !net.generators[k].must_run())
                    q_pu = state.q_gen[k] / net.s_base;
            const double v = invert_v_ref(s.v_ref[i], p_mw / net.s_base, q_pu, cfg_.dyn);
            net.bus(b).v_spec = v;
            if (net.bus(b).kind != BusKind::Slack)
                for (auto& g : net.generators)
                    if (g.bus == b && !g.must_run()) g.p_g_spec = p_mw;
        }
        // RES voltage references pass through as bus targets.
        for (size_t i = 0; i < s.res_bus.size(); ++i)
            if (net.bus(s.res_bus[i]).kind == BusKind::PV)
                net.bus(s.res_bus[i]).v_spec = s.res_v_ref[i];
    }

    void log_tick(const Network& net, const PfSolution& state, uint32_t tick) {
        SimTickLog t;
        t.tick = tick;
        t.pf_converged = state.converged;
        t.v_mag = state.v_mag;
        t.delta_deg = state.delta;
        t.slack_p_mw = state.p_slack;
        for (const auto& g : net.generators)
            if (!g.must_run()) t.gen_p_mw += g.p_g_spec;
        t.gen_p_mw += state.p_slack;
        // p_g_spec on the slack generator is not applied, remove the
        // double count when the slack bus also hosts a dispatchable unit.
        for (const auto& g : net.generators)
            if (g.bus == net.slack_index() && !g.must_run()) t.gen_p_mw -= g.p_g_spec;
        for (const auto& l : net.loads) t.load_p_mw += l.p_d;
        log_.push_back(std::move(t));
    }

    Network base_;
    std::vector<ProfileRow> profiles_;
    SimulatorConfig cfg_;
    TcpListener listener_;
    std::vector<SimTickLog> log_;
};

}  // namespace aqflow::hil
