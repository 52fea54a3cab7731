#pragma once

// Packs the domain-level measurement / set-point records into wire
// frames and back. Payload order is fixed by the protocol: measurements
// carry (p_d, q_d) per load bus ascending then RES MW per RES bus
// ascending; set points carry (v_ref, p_ref) per conventional generator
// bus ascending then v_ref per RES bus ascending. Both sides derive the
// same layout from the shared network description.

#include "aqflow/hil/protocol.hpp"
#include "aqflow/hil/setpoints.hpp"

namespace aqflow::hil {

inline Frame pack_measurement(const MeasurementFrameData& m) {
    Frame f;
    f.type = FrameType::Measurement;
    f.tick = m.tick;
    for (size_t i = 0; i < m.load_bus.size(); ++i) {
        f.payload.push_back(static_cast<float>(m.p_d[i]));
        f.payload.push_back(static_cast<float>(m.q_d[i]));
    }
    for (double p : m.res_p) f.payload.push_back(static_cast<float>(p));
    return f;
}

inline MeasurementFrameData unpack_measurement(const Frame& f, const Network& net) {
    if (f.type != FrameType::Measurement) throw ProtocolError("expected measurement frame");
    MeasurementFrameData m;
    m.tick = f.tick;
    m.load_bus = layout::load_buses(net);
    m.res_bus = layout::res_buses(net);
    if (f.payload.size() != 2 * m.load_bus.size() + m.res_bus.size())
        throw ProtocolError("measurement payload size mismatch");
    size_t k = 0;
    for (size_t i = 0; i < m.load_bus.size(); ++i) {
        m.p_d.push_back(f.payload[k++]);
        m.q_d.push_back(f.payload[k++]);
    }
    for (size_t i = 0; i < m.res_bus.size(); ++i) m.res_p.push_back(f.payload[k++]);
    return m;
}

inline Frame pack_setpoints(const SetpointFrameData& s) {
    Frame f;
    f.type = FrameType::Setpoint;
    f.tick = s.tick;
    for (size_t i = 0; i < s.gen_bus.size(); ++i) {
        f.payload.push_back(static_cast<float>(s.v_ref[i]));
        f.payload.push_back(static_cast<float>(s.p_ref[i]));
    }
    for (double v : s.res_v_ref) f.payload.push_back(static_cast<float>(v));
    return f;
}

inline SetpointFrameData unpack_setpoints(const Frame& f, const Network& net) {
    if (f.type != FrameType::Setpoint) throw ProtocolError("expected setpoint frame");
    SetpointFrameData s;
    s.tick = f.tick;
    s.gen_bus = layout::conventional_buses(net);
    s.res_bus = layout::res_buses(net);
    if (f.payload.size() != 2 * s.gen_bus.size() + s.res_bus.size())
        throw ProtocolError("setpoint payload size mismatch");
    size_t k = 0;
    for (size_t i = 0; i < s.gen_bus.size(); ++i) {
        s.v_ref.push_back(f.payload[k++]);
        s.p_ref.push_back(f.payload[k++]);
    }
    for (size_t i = 0; i < s.res_bus.size(); ++i) s.res_v_ref.push_back(f.payload[k++]);
    return s;
}

}  // namespace aqflow::hil
