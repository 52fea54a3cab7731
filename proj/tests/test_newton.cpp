#include <catch2/catch_amalgamated.hpp>

#include "aqflow/cases.hpp"
#include "aqflow/newton.hpp"
#include "test_nets.hpp"

using namespace aqflow;

TEST_CASE("no-load two-bus network solves to the slack voltage") {
    const PfSolution sol = nr_power_flow(testnets::two_bus_no_load());
    REQUIRE(sol.converged);
    CHECK(sol.v_mag[1] == Catch::Approx(1.0).margin(1e-10));
    CHECK(sol.delta[1] == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("9-bus reference solution") {
    const Network net = case9();
    const PfSolution sol = nr_power_flow(net, 1e-8);
    REQUIRE(sol.converged);
    CHECK(sol.iterations <= 6);

    // frozen golden values from this solver at tol 1e-8
    CHECK(sol.v_mag[8] == Catch::Approx(0.957621).margin(2e-6));
    CHECK(sol.delta[1] == Catch::Approx(9.66874).margin(1e-4));
    CHECK(sol.p_slack == Catch::Approx(71.9547).margin(1e-3));
    REQUIRE(sol.q_gen.size() == 3);
    CHECK(sol.q_gen[0] == Catch::Approx(24.069).margin(1e-2));
    CHECK(sol.q_gen[1] == Catch::Approx(14.4601).margin(1e-2));
    CHECK(sol.q_gen[2] == Catch::Approx(-3.649).margin(1e-2));
}

TEST_CASE("generation minus load equals series I^2 R losses") {
    const Network net = case9();
    const PfSolution sol = nr_power_flow(net, 1e-10);
    REQUIRE(sol.converged);
    double gen_pu = sol.p_slack / net.s_base;
    for (const auto& g : net.generators)
        if (g.bus != net.slack_index()) gen_pu += g.p_g_spec / net.s_base;
    double load_pu = 0.0;
    for (const auto& l : net.loads) load_pu += l.p_d / net.s_base;
    const double losses = line_losses_pu(net, sol.voltage_state());
    CHECK(gen_pu - load_pu == Catch::Approx(losses).margin(1e-6));
}

TEST_CASE("13-bus RES case solves with wide but bounded angles") {
    const Network net = case9_res();
    const PfSolution sol = nr_power_flow(net, 1e-8);
    REQUIRE(sol.converged);
    CHECK(sol.delta[10] == Catch::Approx(36.96).margin(0.05));
    CHECK(sol.delta[12] == Catch::Approx(37.40).margin(0.05));
    for (int i = 0; i < net.size(); ++i) {
        CHECK(sol.delta[static_cast<size_t>(i)] <= net.buses[static_cast<size_t>(i)].delta_max);
        CHECK(sol.delta[static_cast<size_t>(i)] >= net.buses[static_cast<size_t>(i)].delta_min);
    }
}

TEST_CASE("injections at the NR solution match the schedule") {
    const Network net = case9();
    const PfSolution sol = nr_power_flow(net, 1e-10);
    const AdmittanceMatrix y = build_admittance(net);
    const Injection inj = injected_power(y, sol.voltage_state());
    const std::vector<double> pd = net.load_p_pu();
    const std::vector<double> gp = net.gen_p_pu();
    for (int i = 0; i < net.size(); ++i) {
        const size_t k = static_cast<size_t>(i);
        if (i + 1 == net.slack_index()) continue;
        CHECK(inj.p[k] == Catch::Approx(gp[k] - pd[k]).margin(1e-8));
    }
}
