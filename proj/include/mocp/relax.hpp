#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mocp/momentbasis.hpp"
#include "mocp/ocp.hpp"
#include "mocp/sdp.hpp"

namespace mocp {

// Truncation degrees of the relaxation: r for the initial/final measures and
// the value-function candidate, k for the trajectory measure. Both even,
// r >= max(2, deg H), k >= deg h, and k >= r - 1 + deg f rounded up to even
// so every Lie derivative of a test monomial fits in the trajectory basis.
struct RelaxationOrder {
    int r = 2;
    int k = 2;
};

// Minimal valid order for the problem.
RelaxationOrder default_order(const OcpProblem& problem);

// Minimal valid order with r pinned (r is rounded up to even first).
RelaxationOrder order_for(const OcpProblem& problem, int r);

// Empty when (r,k) satisfies every degree rule for this problem.
std::vector<std::string> order_errors(const OcpProblem& problem, RelaxationOrder order);

// Linear identities tying the three truncated moment vectors together, one row
// per test monomial: A_F z = A_I w + A_T y. Fixed horizon tests are t^a x^b
// with a+|b| <= r and the A_F entry carries T^a; free-horizon tests are x^b.
// Each A_T row holds the coefficients of the Lie derivative of its test
// monomial over the trajectory basis.
struct TrajectoryConstraintSystem {
    using Row = std::vector<std::pair<int, double>>;  // (basis index, coef)

    Basis test_basis;  // row labels
    Basis z_basis;     // final-state moments, degree <= r
    Basis w_basis;     // initial-state moments, degree <= r
    Basis y_basis;     // trajectory moments, degree <= k
    std::vector<Row> a_final, a_initial, a_traj;
};

TrajectoryConstraintSystem build_trajectory_constraints(const OcpProblem& problem,
                                                        RelaxationOrder order);

// Row-wise value of A_F z - A_I w - A_T y; zero for moments of any admissible
// trajectory ensemble.
Eigen::VectorXd trajectory_residuals(const TrajectoryConstraintSystem& system,
                                     const MomentVector& y, const MomentVector& z,
                                     const MomentVector& w);

// Placement of the free moment vectors inside the conic variable vector.
// offset -1 means the vector is pinned (known moments substituted).
struct VariableLayout {
    int y_offset = 0, y_size = 0;
    int z_offset = -1, z_size = 0;
    int w_offset = -1, w_size = 0;
    int total = 0;
};

enum class ObjectiveSense { minimize, maximize };

// The assembled conic form of the moment problem, plus enough bookkeeping to
// map a solver result back to moments and to the dual certificate. Immutable
// once built except for set_initial_moments, which only retargets equality
// right-hand sides.
struct RelaxationProblem {
    RelaxationOrder order;
    bool free_time = false;
    double sign = 1.0;  // -1 when the underlying objective is maximized
    TrajectoryConstraintSystem system;
    VariableLayout layout;
    std::vector<double> c_h;  // objective coefficients on y
    std::vector<double> c_H;  // objective coefficients on z
    std::optional<MomentVector> z_fixed, w_fixed;
    double objective_offset = 0.0;  // c_H'z when z is pinned
    ConicProgram program{0};
    int mass_row = -1;  // w mass pin, unknown-initial mode only
    std::vector<std::string> block_labels;  // per PSD block, in block order
    std::vector<std::string> warnings;      // dropped localizers etc.
};

// Trajectory rows occupy equality slots 0..test_basis.size()-1 in test-basis
// order; the mass row (if any) comes last. Localizers whose degree exceeds the
// order are dropped with a warning: the remaining constraints are still
// necessary conditions, so the relaxation stays a valid bound.
RelaxationProblem assemble(const OcpProblem& problem, RelaxationOrder order,
                           ObjectiveSense sense = ObjectiveSense::minimize);

// Swap in a new pinned initial measure (same basis) without reassembling;
// only equality right-hand sides change. Throws if w was free at assembly.
void set_initial_moments(RelaxationProblem& rp, const MomentVector& w);

// Polynomial dual certificate phi recovered from the equality multipliers,
// together with the Gram matrices of the accompanying positivity multipliers.
// For a minimization, phi satisfies (up to solver tolerance)
//   dphi/dt + grad_x phi . f + h >= 0 on C_T,   H - phi(T,.) >= 0 on C_F,
// so phi(0,.) under-estimates the value function. When the final state is
// pinned, phi is shifted by a constant so phi(T, x_T) = H(x_T).
struct DualCertificate {
    Basis phi_basis;        // test monomials, over (t,x) or (x)
    Eigen::VectorXd c_phi;  // phi = sum c_phi[i] * phi_basis.monomial(i)
    Polynomial phi;
    std::vector<std::string> block_labels;
    std::vector<Eigen::MatrixXd> gram;  // dual PSD blocks, same order
};

struct BoundReport {
    SolveStatus status = SolveStatus::numerical;
    double bound = 0.0;       // optimum of the relaxation, objective sense applied
    double dual_bound = 0.0;  // certificate-side value (= integral of phi(0,.) dmu_I)
    double gap_rel = 0.0;
    int iterations = 0;
    std::vector<std::string> warnings;
};

struct RelaxationSolution {
    BoundReport report;
    MomentVector y, z, w;
    DualCertificate certificate;
};

// Map a cone-level solution of rp.program back to moments, certificate, and
// bound. Useful when the program was solved elsewhere (e.g. via the SDPA
// bridge); solve_relaxation is this composed with the embedded solver.
RelaxationSolution relaxation_solution_from(const RelaxationProblem& rp,
                                            const OcpProblem& problem,
                                            const ConicSolution& sol);

// Solve an assembled relaxation and map the result back.
RelaxationSolution solve_relaxation(const RelaxationProblem& rp, const OcpProblem& problem,
                                    const SolveOptions& options = {});

// assemble + solve_relaxation; the one-call lower bound.
RelaxationSolution lower_bound(const OcpProblem& problem, RelaxationOrder order,
                               const SolveOptions& options = {});

// Sampling box for certificate checks; the grid is intersected with C_T / C_F
// membership before taking minima.
struct GridSpec {
    std::vector<double> state_lo, state_hi;
    std::vector<double> input_lo, input_hi;  // sized n_inputs, may be empty if none
    int points_state = 50;
    int points_input = 21;
    int points_time = 21;  // fixed horizon only
};

struct SubsolutionReport {
    double min_trajectory = std::numeric_limits<double>::infinity();
    double min_final = std::numeric_limits<double>::infinity();
    long trajectory_points = 0;
    long final_points = 0;
    double tol = 0.0;
    bool pass = false;
};

// Grid minimum of the two certificate inequalities; pass iff both >= -tol.
SubsolutionReport check_subsolution(const DualCertificate& cert, const OcpProblem& problem,
                                    const GridSpec& grid, double tol);

struct TrajectorySample {
    double t = 0.0;
    std::vector<double> x;
    std::vector<double> u;
};

struct EmpiricalMoments {
    MomentVector y, z, w;
};

// Quadrature moments of one sampled trajectory: y by composite Simpson (3/8
// rule absorbs an odd interval count), z and w as Dirac moments of the last
// and first states. Samples must be equally spaced in t, endpoint-inclusive,
// at least three of them.
EmpiricalMoments empirical_moments(const OcpProblem& problem,
                                   const std::vector<TrajectorySample>& samples,
                                   RelaxationOrder order);

}  // namespace mocp
