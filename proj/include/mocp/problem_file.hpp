#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mocp/ocp.hpp"

namespace mocp {

// A problem read from a text file, plus the metadata the CLI needs: a display
// name and an optional oracle hook (e.g. the analytic double-integrator time).
struct LoadedProblem {
    OcpProblem problem;
    std::string name;
    std::string oracle;  // empty when the file names no analytic reference
};

struct ProblemFileError : std::runtime_error {
    ProblemFileError(const std::string& msg, int line)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line(line) {}
    int line;
};

// Section/key format documented in README.md: [space] declares the variable
// counts, [dynamics] one "xi' = poly" per state, [cost] running/terminal,
// [sets.initial|trajectory|final] one inequality per line ("expr >= 0" or
// "expr <= 0", normalized to >= 0), [horizon] free or fixed T, [final] free |
// singleton | constrained, [initial_measure] dirac / uniform_box /
// uniform_segment / unknown, [meta] name and oracle. '#' starts a comment.
LoadedProblem parse_problem_text(const std::string& text);
LoadedProblem load_problem(const std::string& path);

}  // namespace mocp
