#include <catch2/catch_amalgamated.hpp>

#include "aqflow/cases.hpp"
#include "test_nets.hpp"

using namespace aqflow;

TEST_CASE("built-in 9-bus case has the expected shape") {
    const Network net = case9();
    CHECK(net.size() == 9);
    CHECK(net.generators.size() == 3);
    CHECK(net.loads.size() == 3);
    CHECK(net.lines.size() == 9);
    REQUIRE_NOTHROW(validate(net));
}

TEST_CASE("built-in 13-bus case has the expected shape") {
    const Network net = case9_res();
    CHECK(net.size() == 13);
    CHECK(net.generators.size() == 5);
    CHECK(net.lines.size() == 13);
    REQUIRE_NOTHROW(validate(net));
}

TEST_CASE("9-bus table data round-trips") {
    const Network net = case9();
    const Load* l9 = nullptr;
    for (const auto& l : net.loads)
        if (l.bus == 9) l9 = &l;
    REQUIRE(l9 != nullptr);
    CHECK(l9->p_d == 125.0);
    CHECK(l9->q_d == 50.0);
    for (const auto& g : net.generators)
        if (g.bus == 3) {
            CHECK(g.cost.c0 == 335.0);
            CHECK(g.cost.c1 == 1.0);
            CHECK(g.cost.c2 == 0.1225);
        }
}

TEST_CASE("13-bus RES units are must-run at 19.8 MW") {
    const Network net = case9_res();
    int res_count = 0;
    for (const auto& g : net.generators)
        if (g.bus == 11 || g.bus == 13) {
            ++res_count;
            CHECK(g.p_min == 19.8);
            CHECK(g.p_max == 19.8);
            CHECK(g.q_min == -20.0);
            CHECK(g.q_max == 20.0);
            CHECK(g.must_run());
        }
    CHECK(res_count == 2);
}

TEST_CASE("a second slack bus is rejected") {
    Network net = testnets::two_bus();
    net.buses[1].kind = BusKind::Slack;
    CHECK_THROWS_AS(validate(net), GridError);
}

TEST_CASE("unknown case name is rejected") {
    CHECK_THROWS_AS(builtin_case("case14"), GridError);
}

TEST_CASE("admittance of a purely resistive two-bus line") {
    Network net = testnets::two_bus();
    net.lines[0] = {1, 2, 1.0, 0.0, 0.0};
    const AdmittanceMatrix y = build_admittance(net);
    CHECK(y.G(0, 0) == Catch::Approx(1.0));
    CHECK(y.G(0, 1) == Catch::Approx(-1.0));
    CHECK(y.G(1, 0) == Catch::Approx(-1.0));
    CHECK(y.G(1, 1) == Catch::Approx(1.0));
    CHECK(y.B(0, 0) == Catch::Approx(0.0));
    CHECK(y.B(1, 1) == Catch::Approx(0.0));
}

TEST_CASE("9-bus transformer branch 1-4 contributes pure susceptance") {
    const AdmittanceMatrix y = build_admittance(case9());
    // series y = 1/(j 0.0576): off-diagonal +17.3611, diagonal -17.3611
    CHECK(y.B(0, 3) == Catch::Approx(17.3611).epsilon(1e-4));
    CHECK(y.B(3, 0) == Catch::Approx(17.3611).epsilon(1e-4));
    CHECK(y.G(0, 3) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("9-bus line 4-5 off-diagonal admittance") {
    const AdmittanceMatrix y = build_admittance(case9());
    // y = (r - jx)/(r^2 + x^2) with r=0.017, x=0.092
    CHECK(y.G(3, 4) == Catch::Approx(-1.9422).epsilon(1e-4));
    CHECK(y.B(3, 4) == Catch::Approx(10.5107).epsilon(1e-4));
}

TEST_CASE("flat-start injections reduce to row sums of Y") {
    const Network net = case9();
    const AdmittanceMatrix y = build_admittance(net);
    const VoltageState v = VoltageState::flat(net.size());
    const Injection inj = injected_power(y, v);
    for (int i = 0; i < net.size(); ++i) {
        double gsum = 0.0, bsum = 0.0;
        for (int j = 0; j < net.size(); ++j) {
            gsum += y.G(i, j);
            bsum += y.B(i, j);
        }
        CHECK(inj.p[static_cast<size_t>(i)] == Catch::Approx(gsum).margin(1e-12));
        CHECK(inj.q[static_cast<size_t>(i)] == Catch::Approx(-bsum).margin(1e-12));
    }
}

TEST_CASE("JSON case loader builds a network and rejects bad documents") {
    const std::string doc = R"({
      "s_base_mva": 100, "v_base_kv": 230,
      "buses": [
        {"index": 1, "kind": "slack", "v_spec": 1.0},
        {"index": 2, "kind": "pq"}
      ],
      "lines": [{"from": 1, "to": 2, "r": 0.02, "x": 0.1, "b": 0.0}],
      "generators": [{"bus": 1, "p_min": 0, "p_max": 300,
                      "q_min": -200, "q_max": 200, "cost": [0, 1, 0]}],
      "loads": [{"bus": 2, "p_mw": 50, "q_mvar": 20},
                {"bus": 2, "p_mw": 10, "q_mvar": 5}]
    })";
    const Network net = load_case(doc);
    CHECK(net.size() == 2);
    REQUIRE(net.loads.size() == 1);  // duplicate rows aggregate per bus
    CHECK(net.loads[0].p_d == 60.0);
    CHECK(net.loads[0].q_d == 25.0);

    CHECK_THROWS_AS(load_case("{not json"), GridError);
    CHECK_THROWS_AS(load_case("{}"), GridError);
}
