#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mocp/cli.hpp"

namespace {

// point options arrive as "1,1" or "1 1"; one vector per occurrence
std::vector<double> numbers_from(const std::string& s) {
    std::string t = s;
    for (char& c : t)
        if (c == ',') c = ' ';
    std::istringstream is(t);
    std::vector<double> out;
    double v;
    while (is >> v) out.push_back(v);
    if (!is.eof() || out.empty()) throw std::invalid_argument("bad point '" + s + "'");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    mocp::RunConfig cfg;
    std::vector<std::string> x0_raw, x_raw;

    CLI::App app{
        "moment relaxations, value-function bounds, and feedback synthesis for "
        "polynomial optimal control"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub, bool needs_problem) {
        if (needs_problem)
            sub->add_option("-p,--problem", cfg.problem_path, "problem file")
                ->required();
        sub->add_option("-o,--out", cfg.out_dir, "output directory (default .)");
        sub->add_option("--seed", cfg.seed,
                        "run seed; a fixed seed reproduces byte-identical files");
        sub->add_option("--ipm-tol", cfg.solver.tol_gap,
                        "interior-point relative duality-gap tolerance");
        sub->add_option("--ipm-iters", cfg.solver.max_iter, "interior-point iteration cap");
        sub->add_flag("--verbose-solver", cfg.solver.verbose, "print solver iterations");
        sub->add_option("--external-solver", cfg.external_solver,
                        "solve SDPs via '<cmd> <in.dat-s> <out.result>' instead of the "
                        "embedded solver");
    };
    auto add_order = [&](CLI::App* sub) {
        sub->add_option("-r,--order", cfg.order_r,
                        "relaxation order r (rounded up to even; 0 = minimal)");
        sub->add_option("--k", cfg.order_k, "trajectory-measure truncation k");
    };
    auto add_loop = [&](CLI::App* sub) {
        sub->add_option("--x0", x0_raw, "start state, comma separated; repeatable");
        sub->add_option("--dt", cfg.dt, "control step");
        sub->add_option("--t-max", cfg.t_max, "simulated time budget");
        sub->add_option("--radius", cfg.radius, "stop ball radius around the target");
        sub->add_option("--policy", cfg.policy, "feedback rule")
            ->check(CLI::IsMember({"auto", "bang_bang", "first_order", "grid_search"}));
    };

    CLI::App* bound = app.add_subcommand("bound", "lower bounds across relaxation orders");
    add_common(bound, true);
    add_order(bound);
    bound->add_option("--orders", cfg.orders, "orders r, e.g. --orders 4,6,8")
        ->delimiter(',');

    CLI::App* valuefn = app.add_subcommand(
        "valuefn", "recover the polynomial value-function under-approximation");
    add_common(valuefn, true);
    add_order(valuefn);
    valuefn->add_option("--grid", cfg.grid_points, "samples per axis on the initial region");

    CLI::App* synth =
        app.add_subcommand("synthesize", "receding-horizon almost-optimal feedback");
    add_common(synth, true);
    add_order(synth);
    add_loop(synth);
    synth->add_option("--rho", cfg.rho, "re-centered box half-width");
    synth->add_option("--max-steps", cfg.max_steps, "total control-step cap");

    CLI::App* sim = app.add_subcommand(
        "simulate", "closed-loop simulation under one global certificate, with gap report");
    add_common(sim, true);
    add_order(sim);
    add_loop(sim);
    sim->add_option("--tol-gap", cfg.tol_gap,
                    "fail when the relative optimality gap exceeds this");

    CLI::App* cert = app.add_subcommand(
        "certify", "upper-bound certificate for a given polynomial state feedback");
    add_common(cert, true);
    add_order(cert);
    cert->add_option("--feedback", cfg.feedback, "feedback polynomial, one per input")
        ->required();

    CLI::App* orc =
        app.add_subcommand("oracle", "closed-form optimal values for bundled problems");
    add_common(orc, true);
    orc->add_option("--x", x_raw, "query state, comma separated; repeatable")->required();

    CLI::App* sdpa = app.add_subcommand(
        "solve-sdpa", "solve an SDPA sparse problem file with the embedded solver");
    add_common(sdpa, false);
    sdpa->add_option("input", cfg.problem_path, "SDPA .dat-s file")->required();
    sdpa->add_option("output", cfg.sdpa_out, "solution file to write")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        cfg.command = app.get_subcommands().front()->get_name();
        for (const std::string& s : x0_raw) cfg.starts.push_back(numbers_from(s));
        for (const std::string& s : x_raw) cfg.eval_points.push_back(numbers_from(s));
        return mocp::run_command(cfg, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
