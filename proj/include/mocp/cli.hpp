#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mocp/sdp.hpp"

namespace mocp {

// One resolved command-line invocation. The command decides which fields are
// read; everything else keeps its default. All file outputs land in out_dir,
// with fixed numeric formatting so a fixed seed reproduces byte-identical
// files; wall-clock times only ever go to the stream, never into a file.
struct RunConfig {
    std::string command;        // bound, valuefn, synthesize, simulate, certify,
                                // oracle, solve-sdpa
    std::string problem_path;   // problem file; the .dat-s input for solve-sdpa
    std::string sdpa_out;       // solve-sdpa result path

    std::vector<int> orders;    // bound: one relaxation per entry
    int order_r = 0;            // 0 = minimal valid order for the problem
    int order_k = 0;            // 0 = derived from r

    std::string out_dir = ".";
    unsigned seed = 20240915;
    SolveOptions solver;
    std::string external_solver;  // run "<cmd> in.dat-s out.result" instead of
                                  // the embedded solver (single-solve commands)

    std::vector<std::vector<double>> starts;  // synthesize/simulate x0 list
    double rho = 0.05;          // synthesize box half-width
    double dt = 0.005;
    double t_max = 10.0;
    double radius = 0.01;       // target-ball stop radius
    long max_steps = 100000;
    std::string policy = "auto";  // auto, bang_bang, first_order, grid_search

    double tol_gap = -1.0;      // simulate: fail when a relative gap exceeds
                                // this; negative = report only
    int grid_points = 33;       // valuefn samples per axis

    std::vector<std::string> feedback;             // certify: one poly per input
    std::vector<std::vector<double>> eval_points;  // oracle query points
};

// Executes one command; human-readable progress goes to out, problems to err.
// Returns 0 on success, 1 when the command ran but the result fails its check
// (solver not optimal, gap above tol_gap, diverged run, unstable loop).
// Exceptions (bad files, bad configs) propagate to the caller.
int run_command(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace mocp
