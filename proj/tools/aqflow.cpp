// Command-line front end: power flow (Newton-Raphson or annealed),
// optimal power flow (brute-force or annealed), and the closed-loop
// simulator/middleware pair. Every run writes a manifest with the full
// effective configuration before solving, so runs can be replayed.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "aqflow/cases.hpp"
#include "aqflow/hil/middleware.hpp"
#include "aqflow/hil/simulator.hpp"
#include "aqflow/loop.hpp"
#include "aqflow/newton.hpp"
#include "aqflow/opf.hpp"
#include "aqflow/report.hpp"

namespace {

constexpr const char* kToolVersion = "1.0.0";

struct CommonOpts {
    std::string case_name = "case9";
    std::string case_file;
    std::string out_dir = ".";
    std::string backend = "sa-hobo";
    uint64_t seed = 1;
    double epsilon = 1e-2;
    int it_max = 500;
    double delta_mu = 1e-2;
    double delta_omega = 1e-3;
    int readouts = 1000;
    int sweeps = 10;
    std::vector<double> lambda;  // overrides lambda0..lambda8 when set
};

void add_common_flags(CLI::App* cmd, CommonOpts* o) {
    cmd->add_option("--case", o->case_name, "Built-in case name (case9, case9_res)");
    cmd->add_option("--case-file", o->case_file, "JSON case file, overrides --case");
    cmd->add_option("--out-dir", o->out_dir, "Directory for report files");
    cmd->add_option("--backend", o->backend, "Annealer backend: sa-hobo, sa-qubo, exhaustive");
    cmd->add_option("--seed", o->seed, "Master RNG seed");
    cmd->add_option("--epsilon", o->epsilon, "Objective convergence threshold");
    cmd->add_option("--it-max", o->it_max, "Iteration cap for the solve loop");
    cmd->add_option("--delta-mu", o->delta_mu, "Initial real-part voltage step, p.u.");
    cmd->add_option("--delta-omega", o->delta_omega, "Initial imag-part voltage step, p.u.");
    cmd->add_option("--readouts", o->readouts, "Annealer readouts per iteration");
    cmd->add_option("--sweeps", o->sweeps, "Annealer sweeps per readout");
    for (int i = 0; i <= 8; ++i)
        cmd->add_option("--lambda" + std::to_string(i),
                        [o, i](const std::vector<std::string>& vals) {
                            if (o->lambda.empty()) o->lambda.assign(9, -1.0);
                            o->lambda[static_cast<size_t>(i)] = std::stod(vals.at(0));
                            return true;
                        },
                        "Penalty weight " + std::to_string(i));
}

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

aqflow::Network resolve_case(const CommonOpts& o) {
    if (!o.case_file.empty()) return aqflow::load_case_file(o.case_file);
    try {
        return aqflow::builtin_case(o.case_name);
    } catch (const aqflow::GridError& e) {
        throw UsageError(e.what());
    }
}

aqflow::LoopConfig to_loop_config(const CommonOpts& o, aqflow::SolveMode mode) {
    aqflow::LoopConfig cfg;
    cfg.mode = mode;
    cfg.backend = o.backend;
    cfg.epsilon = o.epsilon;
    cfg.it_max = o.it_max;
    cfg.disc.delta_mu = o.delta_mu;
    cfg.disc.delta_omega = o.delta_omega;
    cfg.anneal.seed = o.seed;
    cfg.anneal.readouts = o.readouts;
    cfg.anneal.sweeps_per_readout = o.sweeps;
    for (size_t i = 0; i < o.lambda.size(); ++i)
        if (o.lambda[i] >= 0.0) cfg.weights.lambda[i] = o.lambda[i];
    return cfg;
}

void write_manifest(const CommonOpts& o, const std::string& command,
                    const nlohmann::json& extra) {
    nlohmann::json m;
    m["tool_version"] = kToolVersion;
    m["command"] = command;
    m["case"] = o.case_file.empty() ? o.case_name : o.case_file;
    m["backend"] = o.backend;
    m["seed"] = o.seed;
    m["out_dir"] = o.out_dir;
    nlohmann::json cfg;
    cfg["epsilon"] = o.epsilon;
    cfg["it_max"] = o.it_max;
    cfg["delta_mu"] = o.delta_mu;
    cfg["delta_omega"] = o.delta_omega;
    cfg["readouts"] = o.readouts;
    cfg["sweeps"] = o.sweeps;
    if (!o.lambda.empty()) cfg["lambda"] = o.lambda;
    m["config"] = cfg;
    m.update(extra);
    std::filesystem::create_directories(o.out_dir);
    std::ofstream out(o.out_dir + "/manifest.json");
    out << m.dump(2) << "\n";
}

std::ofstream open_report(const CommonOpts& o, const std::string& name) {
    std::ofstream out(o.out_dir + "/" + name);
    if (!out) throw aqflow::GridError("cannot write " + o.out_dir + "/" + name);
    return out;
}

int cmd_pf(const CommonOpts& o, const std::string& method) {
    const aqflow::Network net = resolve_case(o);
    write_manifest(o, "pf", {{"method", method}});
    const aqflow::PfSolution ref = aqflow::nr_power_flow(net);
    if (method == "nr") {
        if (!ref.converged) {
            std::cerr << "pf: did not converge\n";
            return 1;
        }
        auto out = open_report(o, "solution.csv");
        aqflow::write_solution_csv(out, net, ref.voltage_state());
        std::cout << "pf nr: " << ref.iterations << " iterations, max mismatch "
                  << ref.max_mismatch << " p.u.\n";
        return 0;
    }
    const aqflow::SolveResult res = aqflow::run_aqpf(net, to_loop_config(o, aqflow::SolveMode::Aqpf));
    {
        auto out = open_report(o, "solution.csv");
        aqflow::write_solution_csv(out, net, res.state);
    }
    {
        auto out = open_report(o, "trace.csv");
        aqflow::write_trace_csv(out, res.trace);
    }
    {
        auto out = open_report(o, "deviation.csv");
        aqflow::write_deviation_csv(out, aqflow::compare(net, res.state, ref));
    }
    std::cout << "pf " << o.backend << ": " << res.iterations << " iterations, h_obj "
              << res.h_obj << (res.converged ? "" : " (not converged)") << "\n";
    return res.converged ? 0 : 1;
}

int cmd_opf(const CommonOpts& o, const std::string& method, double step_mw) {
    const aqflow::Network net = resolve_case(o);
    write_manifest(o, "opf", {{"method", method}, {"step_mw", step_mw}});
    if (method == "brute") {
        const aqflow::OpfSolution sol = aqflow::brute_force_opf(net, step_mw);
        {
            auto out = open_report(o, "dispatch.csv");
            aqflow::write_dispatch_csv(out, net, sol.dispatch, sol.pf.q_gen, sol.total_cost);
        }
        {
            auto out = open_report(o, "solution.csv");
            aqflow::write_solution_csv(out, net, sol.pf.voltage_state());
        }
        std::cout << "opf brute: cost " << sol.total_cost << "\n";
        return sol.feasible ? 0 : 1;
    }
    const aqflow::SolveResult res =
        aqflow::run_aqopf(net, to_loop_config(o, aqflow::SolveMode::Aqopf));
    {
        auto out = open_report(o, "dispatch.csv");
        aqflow::write_dispatch_csv(out, net, res.p_gen_mw, res.q_gen_mvar, res.total_cost);
    }
    {
        auto out = open_report(o, "solution.csv");
        aqflow::write_solution_csv(out, net, res.state);
    }
    {
        auto out = open_report(o, "trace.csv");
        aqflow::write_trace_csv(out, res.trace);
    }
    std::cout << "opf " << o.backend << ": cost " << res.total_cost << ", h_obj " << res.h_obj
              << ", " << res.violations.size() << " violations\n";
    for (const std::string& v : res.violations) std::cout << "  " << v << "\n";
    return res.violations.empty() ? 0 : 1;
}

int cmd_hil_serve(const CommonOpts& o, const std::string& profiles, uint16_t port) {
    const aqflow::Network net = resolve_case(o);
    write_manifest(o, "hil serve", {{"profiles", profiles}, {"port", port}});
    std::vector<aqflow::hil::ProfileRow> rows;
    if (!profiles.empty()) rows = aqflow::hil::load_profiles_file(profiles);
    aqflow::hil::SimulatorConfig sc;
    sc.port = port;
    aqflow::hil::MockSimulator sim(net, rows, sc);
    std::cout << "hil serve: listening on port " << sim.port() << "\n";
    sim.serve_one();
    auto out = open_report(o, "sim_log.csv");
    out << "tick,pf_converged,slack_p_mw,gen_p_mw,load_p_mw\n";
    char buf[160];
    for (const auto& t : sim.log()) {
        std::snprintf(buf, sizeof(buf), "%u,%d,%.9g,%.9g,%.9g\n", t.tick, t.pf_converged ? 1 : 0,
                      t.slack_p_mw, t.gen_p_mw, t.load_p_mw);
        out << buf;
    }
    std::cout << "hil serve: session ended after " << sim.log().size() << " ticks\n";
    return 0;
}

int cmd_hil_run(const CommonOpts& o, const std::string& endpoint, int ticks) {
    const aqflow::Network net = resolve_case(o);
    write_manifest(o, "hil run", {{"endpoint", endpoint}, {"ticks", ticks}});
    aqflow::hil::MiddlewareConfig mc;
    const size_t colon = endpoint.rfind(':');
    if (colon == std::string::npos) {
        std::cerr << "hil run: endpoint must be host:port\n";
        return 2;
    }
    mc.host = endpoint.substr(0, colon);
    mc.port = static_cast<uint16_t>(std::stoi(endpoint.substr(colon + 1)));
    mc.ticks = ticks;
    mc.loop = to_loop_config(o, aqflow::SolveMode::Aqopf);
    const auto logs = aqflow::hil::run_middleware(net, mc);
    auto out = open_report(o, "hil_log.csv");
    out << "tick,feasible,resent_previous,solve_s,cost,h_obj\n";
    char buf[160];
    for (const auto& l : logs) {
        std::snprintf(buf, sizeof(buf), "%u,%d,%d,%.9g,%.9g,%.9g\n", l.tick, l.feasible ? 1 : 0,
                      l.resent_previous ? 1 : 0, l.solve_s, l.cost, l.h_obj);
        out << buf;
    }
    std::cout << "hil run: " << logs.size() << " ticks completed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Annealed power flow laboratory"};
    app.require_subcommand(1);
    CommonOpts opts;

    std::string pf_method = "nr";
    CLI::App* pf = app.add_subcommand("pf", "Solve a power flow");
    add_common_flags(pf, &opts);
    pf->add_option("--method", pf_method, "nr or aqpf")
        ->check(CLI::IsMember({"nr", "aqpf"}));

    std::string opf_method = "brute";
    double step_mw = 1.0;
    CLI::App* opf = app.add_subcommand("opf", "Solve an optimal power flow");
    add_common_flags(opf, &opts);
    opf->add_option("--method", opf_method, "brute or aqopf")
        ->check(CLI::IsMember({"brute", "aqopf"}));
    opf->add_option("--step", step_mw, "Brute-force enumeration step, MW");

    CLI::App* hil = app.add_subcommand("hil", "Closed-loop simulation");
    hil->require_subcommand(1);
    std::string profiles;
    uint16_t port = 7350;
    CLI::App* serve = hil->add_subcommand("serve", "Run the grid simulator");
    add_common_flags(serve, &opts);
    serve->add_option("--profiles", profiles, "Profile CSV: tick,bus,p_scale,q_scale,res_scale");
    serve->add_option("--port", port, "Listen port");
    std::string endpoint = "127.0.0.1:7350";
    int ticks = 10;
    CLI::App* run = hil->add_subcommand("run", "Run the dispatch middleware");
    add_common_flags(run, &opts);
    run->add_option("--endpoint", endpoint, "Simulator host:port");
    run->add_option("--ticks", ticks, "Tick budget");

    CLI11_PARSE(app, argc, argv);

    try {
        if (pf->parsed()) return cmd_pf(opts, pf_method);
        if (opf->parsed()) return cmd_opf(opts, opf_method, step_mw);
        if (serve->parsed()) return cmd_hil_serve(opts, profiles, port);
        if (run->parsed()) return cmd_hil_run(opts, endpoint, ticks);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help();
        return 2;
    } catch (const aqflow::GridError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
