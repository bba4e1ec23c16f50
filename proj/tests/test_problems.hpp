#pragma once

// Programmatic copies of the bundled benchmark problems, for unit tests that
// should not depend on file parsing.

#include <sstream>

#include "mocp/ocp.hpp"

namespace mocp::testing {

// Minimum-time double integrator: x1' = x2, x2' = u, |u| <= 1, x2 >= -1,
// steer to the origin. State box chosen generously; it only serves as the
// compact support the relaxation needs.
inline OcpProblem double_integrator(std::vector<double> x0 = {-0.5, -0.8}) {
    VarSpace sp(true, 2, 1);
    OcpProblem pb{.space = sp,
                  .f = {parse("x2", sp), parse("u1", sp)},
                  .h = Polynomial::constant(sp, 1.0),
                  .H = Polynomial(sp),
                  .C_I = {SetScope::state_only, {}},
                  .C_T = {SetScope::time_state_input,
                          {parse("x2 + 1", sp), parse("1 - u1", sp), parse("1 + u1", sp),
                           parse("36 - x1^2", sp), parse("36 - x2^2", sp)}},
                  .C_F = {SetScope::state_only, {}},
                  .horizon = Horizon::free_time(),
                  .initial = InitialMeasure::dirac(std::move(x0)),
                  .final_mode = FinalMode::singleton,
                  .x_T = {0.0, 0.0}};
    return pb;
}

// Double integrator with a state box that hugs the trajectories from x0 near
// (1,1): affine bounds keep the certificate tight along the whole descent,
// which is what closed-loop steering quality depends on.
inline OcpProblem double_integrator_steering(std::vector<double> x0 = {1.0, 1.0}) {
    OcpProblem pb = double_integrator(std::move(x0));
    const VarSpace& sp = pb.space;
    pb.C_T.constraints = {parse("x2 + 1", sp), parse("1 - u1", sp), parse("1 + u1", sp),
                          parse("x1 + 1/2", sp), parse("7/4 - x1", sp),
                          parse("5/4 - x2", sp)};
    return pb;
}

// Same dynamics and bounds, but over a fixed horizon (exercises the t-carrying
// test-function path).
inline OcpProblem double_integrator_fixed(double T, std::vector<double> x0 = {0.0, 0.0}) {
    OcpProblem pb = double_integrator(std::move(x0));
    pb.horizon = Horizon::fixed(T);
    pb.final_mode = FinalMode::free_final;
    pb.x_T = {};
    return pb;
}

// Cubic regulator: x1' = x2 - x1^3 + x1^2, x2' = u, running cost
// x1^2 + x2^2 + u^2/100, fixed horizon T, states in [-1,1]^2, free final state.
inline OcpProblem cubic_regulator(double T = 1.0, double u_max = 20.0) {
    VarSpace sp(true, 2, 1);
    OcpProblem pb{.space = sp,
                  .f = {parse("x2 - x1^3 + x1^2", sp), parse("u1", sp)},
                  .h = parse("x1^2 + x2^2 + u1^2/100", sp),
                  .H = Polynomial(sp),
                  .C_I = {SetScope::state_only, {}},
                  .C_T = {SetScope::time_state_input,
                          {parse("1 - x1^2", sp), parse("1 - x2^2", sp),
                           parse("(" + std::to_string(u_max) + " - u1)*(" +
                                     std::to_string(u_max) + " + u1)",
                                 sp)}},
                  .C_F = {SetScope::state_only, {}},
                  .horizon = Horizon::fixed(T),
                  .initial = InitialMeasure::dirac({0.0, 0.0}),
                  .final_mode = FinalMode::free_final,
                  .x_T = {}};
    return pb;
}

// Free-time variant of the cubic regulator: drive to the origin from anywhere
// in [-1,1]^2, uniform initial measure over that square. The state box leaves
// margin because closed-loop trajectories from the corners overshoot slightly.
inline OcpProblem cubic_regulator_free(double u_max = 20.0, double x_box = 1.2) {
    OcpProblem pb = cubic_regulator(1.0, u_max);
    auto num = [](double v) {
        std::ostringstream os;
        os << v;
        return os.str();
    };
    const VarSpace& sp = pb.space;
    pb.C_T.constraints[0] = parse(num(x_box * x_box) + " - x1^2", sp);
    pb.C_T.constraints[1] = parse(num(x_box * x_box) + " - x2^2", sp);
    pb.horizon = Horizon::free_time();
    pb.initial = InitialMeasure::uniform_box({-1.0, -1.0}, {1.0, 1.0});
    pb.final_mode = FinalMode::singleton;
    pb.x_T = {0.0, 0.0};
    return pb;
}

}  // namespace mocp::testing
