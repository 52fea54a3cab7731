#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "aqflow/cases.hpp"
#include "aqflow/hamiltonian.hpp"
#include "aqflow/loop.hpp"
#include "aqflow/newton.hpp"
#include "test_nets.hpp"

using namespace aqflow;

TEST_CASE("two-bit voltage increment encoding") {
    const Network net = testnets::two_bus();
    VoltageState v0 = VoltageState::flat(2);
    DiscretizationConfig cfg;
    cfg.delta_mu = 0.01;
    cfg.delta_omega = 0.001;
    const VoltageExpressions ve = substitute_voltage(net, v0, cfg);

    const uint32_t mu_up = ve.registry->intern({VarTag::MuUp, 2, 0});
    const uint32_t mu_dn = ve.registry->intern({VarTag::MuDown, 2, 0});
    const uint32_t om_up = ve.registry->intern({VarTag::OmegaUp, 2, 0});
    const uint32_t om_dn = ve.registry->intern({VarTag::OmegaDown, 2, 0});
    std::vector<uint8_t> bits(ve.registry->size(), 0);

    bits[mu_up] = 1;
    CHECK(ve.mu[1].evaluate(bits) == Catch::Approx(1.01));
    bits[mu_dn] = 1;  // both raised and lowered: value unchanged
    CHECK(ve.mu[1].evaluate(bits) == Catch::Approx(1.0));
    bits[mu_up] = bits[mu_dn] = 0;

    bits[om_dn] = 1;
    CHECK(ve.omega[1].evaluate(bits) == Catch::Approx(-0.001));
    bits[om_dn] = 0;
    bits[om_up] = 1;
    CHECK(ve.omega[1].evaluate(bits) == Catch::Approx(0.001));
}

TEST_CASE("slack bus voltage carries no variables") {
    const Network net = testnets::two_bus();
    const VoltageExpressions ve = substitute_voltage(net, VoltageState::flat(2), {});
    CHECK(ve.mu[0].lin.empty());
    CHECK(ve.omega[0].lin.empty());
    CHECK_FALSE(ve.mu[1].lin.empty());
}

TEST_CASE("objective vanishes at the reference solution") {
    const Network net = case9();
    const PfSolution sol = nr_power_flow(net, 1e-12);
    REQUIRE(sol.converged);
    const AdmittanceMatrix y = build_admittance(net);
    const BinaryPolynomial h = build_h_obj(net, y, sol.voltage_state(), {});
    CHECK(std::fabs(h.constant()) < 1e-12);
}

TEST_CASE("symbolic objective agrees with numeric evaluation at decoded states") {
    for (const Network& net : {testnets::two_bus(), case9()}) {
        const AdmittanceMatrix y = build_admittance(net);
        const VoltageState v0 = VoltageState::flat(net.size());
        DiscretizationConfig cfg;
        cfg.delta_mu = 1e-2;
        cfg.delta_omega = 1e-2;
        const VoltageExpressions ve = substitute_voltage(net, v0, cfg);
        const MismatchSchedule sched = aqpf_schedule(net, y, v0);
        const SquaredForm h = build_h_obj_form(y, ve, to_exprs(sched.p), to_exprs(sched.q));
        const BinaryPolynomial poly = h.flatten();

        std::mt19937_64 rng(17);
        for (int t = 0; t < 100; ++t) {
            std::vector<uint8_t> bits(ve.registry->size());
            for (auto& b : bits) b = rng() & 1;
            const VoltageState v = loop_detail::decode_voltage(ve, bits);
            const double numeric = h_obj_numeric(y, v, sched);
            CHECK(h.evaluate(bits) == Catch::Approx(numeric).margin(1e-10));
            CHECK(poly.evaluate(bits) == Catch::Approx(numeric).margin(1e-10));
        }
    }
}

namespace {

double min_over_slack(const QuadraticExpr& r, const RegistryPtr& reg) {
    const uint32_t n = reg->size();
    double best = std::numeric_limits<double>::infinity();
    for (uint32_t a = 0; a < (1u << n); ++a) {
        std::vector<uint8_t> bits(n);
        for (uint32_t i = 0; i < n; ++i) bits[i] = (a >> i) & 1;
        const double v = r.evaluate(bits);
        best = std::min(best, v * v);
    }
    return best;
}

}  // namespace

TEST_CASE("slack expansion absorbs satisfied constraints exactly") {
    // g = P - 250 at P = 200: satisfied by 50
    auto reg = std::make_shared<VarRegistry>();
    LinExpr g;
    g.c = -50.0;
    const QuadraticExpr r = slack_penalty_residual(reg, 0, g, 6);
    CHECK(min_over_slack(r, reg) == Catch::Approx(0.0).margin(1e-18));
}

TEST_CASE("violated constraints keep their full penalty") {
    auto reg = std::make_shared<VarRegistry>();
    LinExpr g;
    g.c = 10.0;
    const QuadraticExpr r = slack_penalty_residual(reg, 0, g, 6);
    // slack is nonnegative, so the minimum stays at g^2
    CHECK(min_over_slack(r, reg) == Catch::Approx(100.0));
}

TEST_CASE("insufficient explicit slack resolution is reported") {
    auto reg = std::make_shared<VarRegistry>();
    LinExpr g;
    g.c = -100.0;
    CHECK_THROWS_AS(slack_penalty_residual(reg, 0, g, 2, 1.0), PolyError);
}

TEST_CASE("cost term squares the fuel cost at the encoded dispatch") {
    Network net = testnets::two_bus();
    // dispatchable unit at the PQ bus with an exactly representable range
    net.generators.push_back({2, 0.0, 0.0, 255.0, -100.0, 100.0, {600.0, 1.2, 0.085}});
    DiscretizationConfig cfg;
    cfg.pg_bits = 8;
    cfg.pg_step = 1.0;
    PenaltyWeights w;
    w.lambda[8] = 1e-6;

    auto reg = std::make_shared<VarRegistry>();
    const DispatchExpressions de = substitute_dispatch(net, cfg, reg);
    const SquaredForm h = build_h_cost_form(net, de, w);
    const BinaryPolynomial poly = h.flatten();

    std::vector<uint8_t> bits(reg->size(), 0);
    for (int k = 0; k < 8; ++k)
        if ((163 >> k) & 1) bits[reg->intern({VarTag::PgBit, 2, k})] = 1;
    CHECK(poly.evaluate(bits) == Catch::Approx(1e-6 * 3053.965 * 3053.965).epsilon(1e-9));

    PenaltyWeights off;
    off.lambda[8] = 0.0;
    CHECK(build_h_cost_form(net, de, off).flatten().empty());
}

TEST_CASE("zero dispatch pays the constant cost terms") {
    Network net = testnets::two_bus();
    net.generators[0].cost = {150.0, 0.0, 0.0};  // slack unit, recovered not encoded
    net.generators.push_back({2, 0.0, 0.0, 200.0, -100.0, 100.0, {600.0, 0.0, 0.0}});
    PenaltyWeights w;
    w.lambda[8] = 1.0;
    auto reg = std::make_shared<VarRegistry>();
    const DispatchExpressions de = substitute_dispatch(net, {}, reg);
    LinExpr slack_p;  // slack output 0 in this scenario
    const SquaredForm h = build_h_cost_form(net, de, w, &slack_p);
    const std::vector<uint8_t> zeros(reg->size(), 0);
    CHECK(h.evaluate(zeros) == Catch::Approx(150.0 * 150.0 + 600.0 * 600.0));
}

TEST_CASE("never-violated box constraints are pruned") {
    Network net = case9();
    for (auto& b : net.buses) {
        b.v_min = 0.0;
        b.v_max = 10.0;
        b.delta_min = -90.0;
        b.delta_max = 90.0;
    }
    const VoltageExpressions ve =
        substitute_voltage(net, VoltageState::flat(net.size()), {});
    int counter = 0;
    const SquaredForm h = build_h_const_form(net, ve, VoltageState::flat(net.size()), {},
                                             PenaltyWeights{}, &counter);
    CHECK(h.equations.empty());
}
