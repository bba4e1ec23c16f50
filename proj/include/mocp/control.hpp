#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "mocp/ocp.hpp"
#include "mocp/relax.hpp"

namespace mocp {

// Polynomial value-function candidate recovered from a relaxation dual, with
// its state gradient precomputed. phi lives over (t,x) for fixed-horizon
// problems and over (x) alone in free-time mode; evaluation is pure.
struct ValueFunction {
    Polynomial phi;
    Polynomial dphi_dt;              // zero when phi does not mention t
    std::vector<Polynomial> grad_x;  // d phi / d x_i, one per state
    int order = 0;                   // relaxation order r the certificate came from
    std::string initial_measure;     // provenance of the mu_I it was computed with

    explicit ValueFunction(Polynomial p, int order_r = 0, std::string provenance = "");

    double value(double t, const std::vector<double>& x) const;
    double time_derivative(double t, const std::vector<double>& x) const;
    std::vector<double> gradient(double t, const std::vector<double>& x) const;
};

// Package the certificate of a solved relaxation for control extraction.
ValueFunction value_function(const RelaxationSolution& sol, const OcpProblem& problem,
                             RelaxationOrder order);

// How a control is read off the value-function gradient at a point.
//   bang_bang:   u = -sign(grad_x phi . B) saturated to the admissible interval
//                (dynamics affine in u, cost independent of u); when the switching
//                function is within `deadband` of zero the previous control is
//                held (zero on the first step).
//   first_order: u = -(1/(2 c_u)) grad_x phi . B, the stationary point of the
//                pointwise HJB integrand when h carries c_u * u^2, clipped.
//   grid_search: argmin of the HJB integrand over a uniform grid on the
//                admissible box, ties resolved toward the smallest |u|.
// The closed-form rules act on one designated input; grid_search covers all.
struct FeedbackPolicy {
    enum class Kind { bang_bang, first_order, grid_search };

    Kind kind = Kind::grid_search;
    int input = 0;                   // designated input for the closed-form rules
    double c_u = 1.0;                // coefficient of u^2 in h (first_order only)
    int resolution = 101;            // grid points per input dimension
    double deadband = 1e-6;          // bang_bang switching-function threshold
    std::vector<double> u_lo, u_hi;  // input box U, one entry per input

    static FeedbackPolicy bang_bang(int input, std::vector<double> lo, std::vector<double> hi);
    static FeedbackPolicy first_order(double c_u, int input, std::vector<double> lo,
                                      std::vector<double> hi);
    static FeedbackPolicy grid_search(std::vector<double> lo, std::vector<double> hi,
                                      int resolution = 101);
};

// Per-input bounds implied by trajectory constraints that mention a single
// input variable (degree <= 2 in it). Entries stay infinite when no such
// constraint cuts the axis.
void input_box_from(const OcpProblem& problem, std::vector<double>& lo,
                    std::vector<double>& hi);

// Admissible interval for one input at (t,x): the policy box cut down by every
// near-active state constraint g >= 0 of C_T, which forces d g/dt >= 0 there.
// The cut assumes dynamics affine in the input. Throws when the interval is
// empty (no control keeps the state feasible).
std::pair<double, double> admissible_interval(const OcpProblem& problem,
                                              const FeedbackPolicy& policy, int input,
                                              double t, const std::vector<double>& x);

// Pointwise control choice: minimize dphi/dt + grad_x phi . f + h over the
// admissible inputs at (t,x), by the policy's rule. prev_u feeds the bang-bang
// deadband; empty means first step. Throws when the admissible set is empty.
std::vector<double> extract_control(const ValueFunction& vf, const OcpProblem& problem,
                                    double t, const std::vector<double>& x,
                                    const FeedbackPolicy& policy,
                                    const std::vector<double>& prev_u = {});

enum class StopReason { target_ball, horizon, left_box, diverged };

// A simulated closed-loop run. samples[k].u is the control applied from
// samples[k].t onward (zero-order hold); the final sample repeats the last
// applied control, or zeros when the run stopped before any step. cost is
// the running-cost integral plus the terminal cost at the last state.
struct Trajectory {
    std::vector<TrajectorySample> samples;
    std::vector<double> running_cost;  // integral of h through samples[k]
    StopReason reason = StopReason::horizon;
    double cost = 0.0;
    std::vector<std::string> notes;
};

// CSV export, header t,x1..xn,u1..um,running_cost, one row per sample.
std::string to_csv(const Trajectory& trajectory);

// Closed-loop control source: maps (t, x) to the input vector to hold over the
// next step. May carry state (the bang-bang deadband remembers its last u).
using Controller = std::function<std::vector<double>(double, const std::vector<double>&)>;

// Wire a value function and policy into a stateful controller.
Controller make_controller(const ValueFunction& vf, const OcpProblem& problem,
                           FeedbackPolicy policy);

struct SimOptions {
    double dt = 0.005;
    double t_max = 10.0;
    std::vector<double> stop_target;  // empty = never stop on proximity
    double stop_radius = 0.01;        // Euclidean ball around stop_target
    double explode_norm = 1e6;        // |x|_inf beyond this counts as divergence
};

// Classical RK4 on dx/dt = f(t,x,u) with u held constant within each step
// (evaluated at the step start). The running cost accumulates the trapezoid
// rule on h along the samples; termination reports the first reason hit:
// stop ball, state explosion, exit from the state-feasible set, or t_max.
Trajectory simulate(const OcpProblem& problem, const Controller& controller,
                    const std::vector<double>& x0, const SimOptions& options);

struct RecedingOptions {
    double rho = 0.05;         // half-width of the box around the current state
    double dt = 0.005;         // control step
    long max_steps = 100000;   // total step cap across all boxes
    std::vector<double> target;  // stop ball center; defaults to the problem's
                                 // singleton target when present, else origin
    double radius = 0.01;
    FeedbackPolicy policy;
    SolveOptions solver;
    unsigned seed = 20240915;  // Monte Carlo moment fallback
    int mc_samples = 100000;
};

// Receding-horizon synthesis: repeatedly re-center a box S on the current
// state, clip it against the state constraints, put the uniform probability
// measure on the clip as the initial measure of the relaxation, re-solve, and
// steer with the resulting value function until the state leaves S. The
// relaxation is assembled once; only initial-measure right-hand sides change
// between solves. An infeasible or unbounded relaxation ends the run with
// reason diverged; iteration-capped or numerically stalled solves keep the
// last iterate, which still carries a usable steering certificate.
Trajectory receding_horizon(const OcpProblem& problem, const std::vector<double>& x0,
                            RelaxationOrder order, const RecedingOptions& options);

// Relative spread 2(UB-LB)/(UB+LB) of a bound pair; throws unless UB+LB > 0.
double gap(double upper, double lower);

struct CertificateReport {
    BoundReport report;      // maximization relaxation outcome
    double bound = 0.0;      // certified upper bound on the closed-loop cost
    bool bounded = false;    // false when the relaxation came back unbounded
    std::vector<std::complex<double>> linearization;  // closed-loop eigenvalues
                                                      // at the target state
    std::vector<std::string> notes;
};

// Certify the closed loop x' = f(x, p(x)) under polynomial feedback p: bound
// sup over x0 in S of the total cost integral of h(x, p(x)) by a maximization
// relaxation with unknown initial measure supported on S, free terminal time
// and free terminal state. Finite bound + strictly stable linearization imply
// every trajectory from S reaches the target. The feedback must be a
// state-only polynomial per input and the problem free-time.
CertificateReport upper_bound_certificate(const OcpProblem& problem,
                                          const std::vector<Polynomial>& feedback,
                                          const SemialgebraicSet& S, RelaxationOrder order,
                                          const SolveOptions& options = {});

// Minimum time to steer the double integrator x1' = x2, x2' = u, |u| <= 1,
// x2 >= -1 to the origin; the closed-form piecewise expression. Throws for
// x2 < -1 where the expression is not valid.
double double_integrator_min_time(const std::vector<double>& x);

}  // namespace mocp
