#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "mocp/relax.hpp"
#include "test_problems.hpp"

using namespace mocp;
using mocp::testing::cubic_regulator;
using mocp::testing::double_integrator;
using mocp::testing::double_integrator_fixed;

namespace {

// Classical RK4 with the input evaluated at the stage times, for building
// admissible sample paths without depending on the control module.  The
// sampled (x(t), u(t)) pair stays smooth in t, which Simpson quadrature of
// the trajectory moments needs for full accuracy.
std::vector<TrajectorySample> rk4_path(const OcpProblem& pb,
                                       const std::vector<double>& x0, double T, double dt,
                                       const std::function<std::vector<double>(double)>& input) {
    const int n = pb.n_states();
    const int steps = static_cast<int>(std::lround(T / dt));
    std::vector<TrajectorySample> out;
    out.reserve(steps + 1);
    std::vector<double> x = x0;
    auto deriv = [&](double t, const std::vector<double>& xs, const std::vector<double>& us) {
        std::vector<double> pt(pb.space.dim(), 0.0);
        pt[pb.space.time_index()] = t;
        for (int i = 0; i < n; ++i) pt[pb.space.state_index(i)] = xs[i];
        for (std::size_t j = 0; j < us.size(); ++j) pt[pb.space.input_index(j)] = us[j];
        std::vector<double> d(n);
        for (int i = 0; i < n; ++i) d[i] = pb.f[i].evaluate(pt);
        return d;
    };
    for (int s = 0; s <= steps; ++s) {
        const double t = s * dt;
        out.push_back({t, x, input(t)});
        if (s == steps) break;
        const std::vector<double> um = input(t + 0.5 * dt);
        auto k1 = deriv(t, x, input(t));
        std::vector<double> x2(n), x3(n), x4(n);
        for (int i = 0; i < n; ++i) x2[i] = x[i] + 0.5 * dt * k1[i];
        auto k2 = deriv(t + 0.5 * dt, x2, um);
        for (int i = 0; i < n; ++i) x3[i] = x[i] + 0.5 * dt * k2[i];
        auto k3 = deriv(t + 0.5 * dt, x3, um);
        for (int i = 0; i < n; ++i) x4[i] = x[i] + dt * k3[i];
        auto k4 = deriv(t + dt, x4, input(t + dt));
        for (int i = 0; i < n; ++i)
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

double min_eig(const Eigen::MatrixXd& A) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("order selection follows the degree rules") {
    OcpProblem di = double_integrator();
    RelaxationOrder d = default_order(di);
    CHECK(d.r == 2);
    CHECK(d.k == 2);

    OcpProblem cubic = cubic_regulator();
    RelaxationOrder c = order_for(cubic, 2);
    CHECK(c.r == 2);
    CHECK(c.k == 4);  // Lie derivatives pick up the cubic drift

    OcpProblem tall = double_integrator();
    tall.H = parse("x1^6", tall.space);
    CHECK(default_order(tall).r == 6);

    CHECK(order_errors(di, {6, 6}).empty());
    CHECK(!order_errors(di, {5, 6}).empty());   // odd r
    CHECK(!order_errors(di, {6, 4}).empty());   // k too small for the Lie terms
    CHECK(!order_errors(cubic, {4, 4}).empty());
    CHECK_THROWS_AS((void)build_trajectory_constraints(di, {5, 6}), std::invalid_argument);
}

TEST_CASE("free-time trajectory rows equate endpoint moments with Lie integrals") {
    OcpProblem di = double_integrator();
    TrajectoryConstraintSystem sys = build_trajectory_constraints(di, {2, 2});

    // test spaces drop t entirely in free-time mode
    CHECK(!sys.test_basis.space().has_time());
    CHECK(!sys.y_basis.space().has_time());
    CHECK(sys.test_basis.size() == 6);  // 1, x1, x2, x1^2, x1 x2, x2^2

    const int row_x1 = sys.test_basis.index({1, 0});
    REQUIRE(sys.a_final[row_x1].size() == 1);
    CHECK(sys.a_final[row_x1][0].first == sys.z_basis.index({1, 0}));
    CHECK(sys.a_final[row_x1][0].second == 1.0);
    REQUIRE(sys.a_initial[row_x1].size() == 1);
    CHECK(sys.a_initial[row_x1][0].first == sys.w_basis.index({1, 0}));
    // d(x1)/dt = x2, so the trajectory side is the single moment y_{x2}
    REQUIRE(sys.a_traj[row_x1].size() == 1);
    CHECK(sys.a_traj[row_x1][0].first == sys.y_basis.index({0, 1, 0}));
    CHECK(sys.a_traj[row_x1][0].second == 1.0);

    // d(x2)/dt = u
    const int row_x2 = sys.test_basis.index({0, 1});
    REQUIRE(sys.a_traj[row_x2].size() == 1);
    CHECK(sys.a_traj[row_x2][0].first == sys.y_basis.index({0, 0, 1}));

    // the constant test gives mass(mu_F) = mass(mu_I)
    const int row_1 = sys.test_basis.index({0, 0});
    CHECK(sys.a_traj[row_1].empty());
    CHECK(sys.a_final[row_1][0].second == 1.0);
}

TEST_CASE("fixed-horizon rows carry T powers and pin the trajectory mass") {
    OcpProblem di = double_integrator_fixed(1.5);
    TrajectoryConstraintSystem sys = build_trajectory_constraints(di, {2, 2});
    CHECK(sys.test_basis.space().has_time());

    // test monomial t: 1.5 * z_1 = 0 + y_1 (the mass of mu_T equals T)
    const int row_t = sys.test_basis.index({1, 0, 0});
    REQUIRE(sys.a_final[row_t].size() == 1);
    CHECK(sys.a_final[row_t][0].first == sys.z_basis.index({0, 0}));
    CHECK(sys.a_final[row_t][0].second == doctest::Approx(1.5));
    CHECK(sys.a_initial[row_t].empty());
    REQUIRE(sys.a_traj[row_t].size() == 1);
    CHECK(sys.a_traj[row_t][0].first == sys.y_basis.index({0, 0, 0, 0}));
    CHECK(sys.a_traj[row_t][0].second == 1.0);

    // test monomial t^2: T^2 on the final side, Lie = 2t on the trajectory side
    const int row_t2 = sys.test_basis.index({2, 0, 0});
    CHECK(sys.a_final[row_t2][0].second == doctest::Approx(2.25));
    REQUIRE(sys.a_traj[row_t2].size() == 1);
    CHECK(sys.a_traj[row_t2][0].first == sys.y_basis.index({1, 0, 0, 0}));
    CHECK(sys.a_traj[row_t2][0].second == 2.0);
}

TEST_CASE("quadrature moments of an analytic trajectory satisfy every row") {
    // double integrator under u = 1 from the origin: x(t) = (t^2/2, t)
    OcpProblem pb = double_integrator_fixed(1.0);
    const double dt = 1e-3;
    std::vector<TrajectorySample> path;
    for (int i = 0; i <= 1000; ++i) {
        const double t = i * dt;
        path.push_back({t, {0.5 * t * t, t}, {1.0}});
    }
    const RelaxationOrder order{4, 4};
    EmpiricalMoments em = empirical_moments(pb, path, order);
    CHECK(em.y.values[0] == doctest::Approx(1.0).epsilon(1e-9));  // mass = T
    CHECK(em.z.values[em.z.basis.index({1, 0})] == doctest::Approx(0.5));
    CHECK(em.w.values[0] == 1.0);

    TrajectoryConstraintSystem sys = build_trajectory_constraints(pb, order);
    Eigen::VectorXd res = trajectory_residuals(sys, em.y, em.z, em.w);
    CHECK(res.lpNorm<Eigen::Infinity>() <= 1e-6);

    // genuine-measure moments instantiate to PSD matrices
    Eigen::MatrixXd M = instantiate(
        moment_matrix_structure(enumerate_basis(sys.y_basis.space(), 2), sys.y_basis), em.y);
    CHECK(min_eig(M) >= -1e-8);
}

TEST_CASE("empirical moments: analytic integrals, equilibria, input checking") {
    OcpProblem di = double_integrator({0.0, 1.0});
    // x2 held at 1 by u = 0, so x1(t) = t on [0,1]
    std::vector<TrajectorySample> path;
    for (int i = 0; i <= 200; ++i) path.push_back({i / 200.0, {i / 200.0, 1.0}, {0.0}});
    EmpiricalMoments em = empirical_moments(di, path, {2, 2});
    CHECK(em.y.values[em.y.basis.index({1, 0, 0})] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(em.y.values[em.y.basis.index({0, 1, 0})] == doctest::Approx(1.0).epsilon(1e-10));

    // equilibrium: every row balances exactly
    std::vector<TrajectorySample> still;
    for (int i = 0; i <= 10; ++i) still.push_back({0.1 * i, {0.7, 0.0}, {0.0}});
    EmpiricalMoments eq = empirical_moments(di, still, {2, 2});
    TrajectoryConstraintSystem sys = build_trajectory_constraints(di, {2, 2});
    CHECK(trajectory_residuals(sys, eq.y, eq.z, eq.w).lpNorm<Eigen::Infinity>() <= 1e-12);

    std::vector<TrajectorySample> tiny = {still[0], still[1]};
    CHECK_THROWS_AS((void)empirical_moments(di, tiny, {2, 2}), std::invalid_argument);
}

TEST_CASE("assembly pins known measures and lays out blocks") {
    OcpProblem di = double_integrator();
    RelaxationProblem rp = assemble(di, {2, 2});

    // minimum time: the objective is exactly the trajectory mass
    REQUIRE(!rp.c_h.empty());
    CHECK(rp.c_h[0] == 1.0);
    for (std::size_t i = 1; i < rp.c_h.size(); ++i) CHECK(rp.c_h[i] == 0.0);

    // Dirac initial and singleton final are substituted, y is the only unknown
    CHECK(rp.w_fixed.has_value());
    CHECK(rp.z_fixed.has_value());
    CHECK(rp.layout.z_offset == -1);
    CHECK(rp.layout.w_offset == -1);
    CHECK(rp.layout.total == rp.system.y_basis.size());
    CHECK(rp.program.num_equalities() == rp.system.test_basis.size());
    CHECK(rp.z_fixed->values[0] == 1.0);
    CHECK(rp.z_fixed->values[1] == 0.0);

    // one moment matrix plus one localizer per trajectory constraint
    REQUIRE(rp.block_labels.size() == 6);
    CHECK(rp.block_labels[0] == "M(y)");
    CHECK(rp.block_labels[1].substr(0, 4) == "L(y,");

    OcpProblem bare = di;
    bare.C_T.constraints.clear();
    RelaxationProblem rb = assemble(bare, {2, 2});
    CHECK(rb.block_labels == std::vector<std::string>{"M(y)"});

    // an over-degree trajectory constraint is dropped, with a warning
    OcpProblem steep = di;
    steep.C_T.constraints.push_back(parse("1 - x1^4", di.space));
    RelaxationProblem rs = assemble(steep, {2, 2});
    CHECK(rs.block_labels.size() == 6);
    REQUIRE(rs.warnings.size() == 1);
    CHECK(rs.warnings[0].find("dropped localizer") != std::string::npos);
}

TEST_CASE("assembly of the unknown-initial-measure mode") {
    OcpProblem di = double_integrator();
    di.initial = InitialMeasure::unknown();
    di.C_I.constraints = {parse("(x1 + 0.6)*(-0.4 - x1)", di.space),
                          parse("(x2 + 0.9)*(-0.7 - x2)", di.space)};
    RelaxationProblem rp = assemble(di, {2, 2});
    CHECK(!rp.w_fixed.has_value());
    CHECK(rp.layout.w_offset == rp.system.y_basis.size());
    CHECK(rp.mass_row == rp.system.test_basis.size());
    CHECK(rp.program.num_equalities() == rp.system.test_basis.size() + 1);
    bool has_mw = false;
    for (const std::string& l : rp.block_labels) has_mw = has_mw || l == "M(w)";
    CHECK(has_mw);
}

TEST_CASE("lower bounds grow with the order and stay below the true time") {
    OcpProblem di = double_integrator();
    const double truth = 2.6111;
    double prev = -1.0;
    for (int r : {2, 4, 6}) {
        RelaxationSolution sol = lower_bound(di, order_for(di, r));
        CAPTURE(r);
        REQUIRE(sol.report.status == SolveStatus::optimal);
        CHECK(sol.report.bound >= prev - 1e-6);
        CHECK(sol.report.bound <= truth + 1e-3);
        prev = sol.report.bound;
        if (r == 2) {
            // phi = -x2 is optimal here: Lie(phi) + 1 = 1 - u >= 0 on C_T,
            // phi(0,0) = 0, so the bound is exactly |x2(0)|.
            CHECK(sol.report.bound == doctest::Approx(0.8).epsilon(1e-5));
        }
        if (r == 6) {
            CHECK(sol.report.bound == doctest::Approx(1.613219).epsilon(1e-3));
            CHECK(std::abs(sol.report.bound - sol.report.dual_bound) <= 1e-5);
            // Dirac initial measure: the certificate value at x0 is the bound
            CHECK(sol.certificate.phi.evaluate({-0.5, -0.8}) ==
                  doctest::Approx(sol.report.dual_bound).epsilon(1e-6));
            // trajectory mass approximates the optimal time from below
            CHECK(sol.y.values[0] == doctest::Approx(sol.report.bound).epsilon(1e-6));
        }
    }
}

TEST_CASE("the bound is invariant under affine state/input scaling") {
    OcpProblem di = double_integrator();
    auto [scaled, maps] = scale(di, {-2.0, -2.0}, {2.0, 2.0}, {-1.0}, {1.0}, 1.0);
    RelaxationSolution a = lower_bound(di, order_for(di, 6));
    RelaxationSolution b = lower_bound(scaled, order_for(scaled, 6));
    REQUIRE(a.report.status == SolveStatus::optimal);
    REQUIRE(b.report.status == SolveStatus::optimal);
    CHECK(a.report.bound == doctest::Approx(b.report.bound).epsilon(1e-4));

    // certificate composed with the scaling map agrees at the initial state
    const VarSpace& sp = b.certificate.phi.space();
    Polynomial back = b.certificate.phi;
    for (int s = 0; s < 2; ++s) {
        Polynomial repl = (Polynomial::variable(sp, sp.state_index(s)) -
                           Polynomial::constant(sp, maps.c[s])) /
                          maps.s[s];
        back = back.substitute(sp.state_index(s), repl);
    }
    CHECK(back.evaluate({-0.5, -0.8}) == doctest::Approx(a.report.bound).epsilon(1e-3));
}

TEST_CASE("certificates pass the subsolution check; scaled-up ones fail it") {
    OcpProblem di = double_integrator();
    RelaxationSolution sol = lower_bound(di, order_for(di, 6));
    REQUIRE(sol.report.status == SolveStatus::optimal);

    GridSpec grid;
    grid.state_lo = {-2.0, -2.0};
    grid.state_hi = {2.0, 2.0};
    grid.input_lo = {-1.0};
    grid.input_hi = {1.0};
    grid.points_state = 41;
    grid.points_input = 11;
    SubsolutionReport rep = check_subsolution(sol.certificate, di, grid, 1e-4);
    CHECK(rep.pass);
    CHECK(rep.trajectory_points > 0);
    CHECK(rep.min_final >= -1e-9);  // pinned final state, normalized exactly

    // the zero certificate is feasible for a minimum-time cost (integrand = 1)
    DualCertificate zero{sol.certificate.phi_basis,
                         Eigen::VectorXd::Zero(sol.certificate.c_phi.size()),
                         Polynomial(sol.certificate.phi.space()),
                         {},
                         {}};
    SubsolutionReport zrep = check_subsolution(zero, di, grid, 1e-9);
    CHECK(zrep.pass);
    CHECK(zrep.min_trajectory == doctest::Approx(1.0));

    // doubling an optimal certificate breaks the Lie inequality somewhere
    DualCertificate twice = sol.certificate;
    twice.c_phi *= 2.0;
    twice.phi = twice.phi * 2.0;
    SubsolutionReport trep = check_subsolution(twice, di, grid, 1e-4);
    CHECK(!trep.pass);
    CHECK(trep.min_trajectory < -0.1);
}

TEST_CASE("swapping the pinned initial measure only retargets the equalities") {
    OcpProblem di = double_integrator();
    RelaxationOrder order = order_for(di, 4);
    RelaxationProblem rp = assemble(di, order);
    RelaxationSolution base = solve_relaxation(rp, di);
    REQUIRE(base.report.status == SolveStatus::optimal);

    set_initial_moments(rp, dirac_moments({0.2, 0.3}, rp.system.w_basis));
    RelaxationSolution moved = solve_relaxation(rp, di);

    OcpProblem other = double_integrator({0.2, 0.3});
    RelaxationSolution fresh = lower_bound(other, order);
    REQUIRE(moved.report.status == SolveStatus::optimal);
    CHECK(moved.report.bound == doctest::Approx(fresh.report.bound).epsilon(1e-6));
    CHECK(moved.report.bound != doctest::Approx(base.report.bound).epsilon(1e-3));

    RelaxationProblem free_w = assemble([&] {
        OcpProblem u = di;
        u.initial = InitialMeasure::unknown();
        u.C_I.constraints = {parse("1 - x1^2", di.space)};
        return u;
    }(), order);
    CHECK_THROWS_AS(set_initial_moments(free_w, dirac_moments({0.0, 0.0}, free_w.system.w_basis)),
                    std::invalid_argument);
}

TEST_CASE("uniform initial measure: the dual value is the integral of phi") {
    OcpProblem di = double_integrator();
    di.initial = InitialMeasure::uniform_box({-1.0, -0.9}, {-0.5, -0.7});
    RelaxationSolution sol = lower_bound(di, order_for(di, 4));
    REQUIRE(sol.report.status == SolveStatus::optimal);

    // independent 2-D composite Simpson quadrature of phi over the box
    const Polynomial& phi = sol.certificate.phi;
    const int P = 160;  // even panel count
    const double lox = -1.0, hix = -0.5, loy = -0.9, hiy = -0.7;
    auto w1 = [&](int i, int pts) { return i == 0 || i == pts ? 1.0 : (i % 2 ? 4.0 : 2.0); };
    double acc = 0.0;
    for (int i = 0; i <= P; ++i)
        for (int j = 0; j <= P; ++j) {
            const double x = lox + (hix - lox) * i / P;
            const double y = loy + (hiy - loy) * j / P;
            acc += w1(i, P) * w1(j, P) * phi.evaluate({x, y});
        }
    acc *= (hix - lox) / (3.0 * P) * (hiy - loy) / (3.0 * P);
    const double mean = acc / ((hix - lox) * (hiy - loy));
    CHECK(mean == doctest::Approx(sol.report.dual_bound).epsilon(1e-6));
}

TEST_CASE("unknown initial measure lower-bounds the pointwise optimum over the set") {
    OcpProblem di = double_integrator();
    di.initial = InitialMeasure::unknown();
    di.C_I.constraints = {parse("(x1 + 0.6)*(-0.4 - x1)", di.space),
                          parse("(x2 + 0.9)*(-0.7 - x2)", di.space)};
    RelaxationOrder order = order_for(di, 4);
    // the optimal mu_I collapses onto a corner of C_I, a degenerate face where
    // the solver's attainable gap floors just above the default tolerance
    SolveOptions opts;
    opts.tol_gap = 5e-8;
    RelaxationSolution setwise = lower_bound(di, order, opts);
    REQUIRE(setwise.report.status == SolveStatus::optimal);

    double grid_min = 1e300;
    for (double x1 : {-0.6, -0.5, -0.4})
        for (double x2 : {-0.9, -0.8, -0.7}) {
            RelaxationSolution pt = lower_bound(double_integrator({x1, x2}), order);
            REQUIRE(pt.report.status == SolveStatus::optimal);
            grid_min = std::min(grid_min, pt.report.bound);
        }
    CHECK(setwise.report.bound <= grid_min + 1e-6);
    CHECK(setwise.report.bound >= grid_min - 0.05);
}

TEST_CASE("maximization mode certifies the decay integral of a stable system") {
    // dx/dt = -x on [-1,1]: the integral of x^2 along any solution is x0^2/2
    VarSpace sp(true, 1, 0);
    OcpProblem pb{.space = sp,
                  .f = {parse("-x1", sp)},
                  .h = parse("x1^2", sp),
                  .H = Polynomial(sp),
                  .C_I = {SetScope::state_only, {parse("1 - x1^2", sp)}},
                  .C_T = {SetScope::time_state_input, {parse("1 - x1^2", sp)}},
                  .C_F = {SetScope::state_only, {parse("1 - x1^2", sp)}},
                  .horizon = Horizon::free_time(),
                  .initial = InitialMeasure::unknown(),
                  .final_mode = FinalMode::free_final,
                  .x_T = {}};
    RelaxationProblem rp = assemble(pb, order_for(pb, 4), ObjectiveSense::maximize);
    RelaxationSolution sol = solve_relaxation(rp, pb);
    CAPTURE(to_string(sol.report.status));
    // the certified side must stay a genuine upper bound for the worst start
    CHECK(sol.report.dual_bound >= 0.5 - 1e-5);
    CHECK(sol.report.dual_bound <= 0.5 + 0.05);
}

TEST_CASE("random admissible trajectories satisfy the rows and PSD blocks") {
    std::mt19937 rng(7u);
    std::uniform_real_distribution<double> coef(-0.4, 0.4);
    std::uniform_real_distribution<double> start(-0.3, 0.3);

    for (int trial = 0; trial < 3; ++trial) {
        VarSpace sp(true, 2, 1);
        OcpProblem pb{.space = sp,
                      .f = {},
                      .h = Polynomial::constant(sp, 1.0),
                      .H = Polynomial(sp),
                      .C_I = {SetScope::state_only, {}},
                      .C_T = {SetScope::time_state_input, {parse("9 - x1^2 - x2^2", sp)}},
                      .C_F = {SetScope::state_only, {}},
                      .horizon = Horizon::fixed(1.0),
                      .initial = InitialMeasure::dirac({0.0, 0.0}),
                      .final_mode = FinalMode::free_final,
                      .x_T = {}};
        // random quadratic drift in (x, u), kept small so paths stay tame
        Basis fb = enumerate_basis(sp, 2);
        for (int i = 0; i < 2; ++i) {
            Polynomial fi(sp);
            for (int b = 0; b < fb.size(); ++b) {
                const Exponents& e = fb.monomial(b);
                if (e[sp.time_index()] > 0) continue;
                fi.add_term(e, coef(rng));
            }
            pb.f.push_back(fi);
        }

        for (int traj = 0; traj < 2; ++traj) {
            const double a0 = coef(rng), a1 = coef(rng);
            auto input = [&](double t) { return std::vector<double>{a0 + a1 * t}; };
            auto path = rk4_path(pb, {start(rng), start(rng)}, 1.0, 1e-3, input);
            double reach = 0.0;
            for (const auto& s : path)
                reach = std::max({reach, std::abs(s.x[0]), std::abs(s.x[1])});
            REQUIRE(reach < 2.9);  // inside the declared support

            const RelaxationOrder order{4, 6};
            EmpiricalMoments em = empirical_moments(pb, path, order);
            TrajectoryConstraintSystem sys = build_trajectory_constraints(pb, order);
            CHECK(trajectory_residuals(sys, em.y, em.z, em.w).lpNorm<Eigen::Infinity>() <= 1e-5);

            Eigen::MatrixXd My = instantiate(
                moment_matrix_structure(enumerate_basis(sys.y_basis.space(), 2), sys.y_basis),
                em.y);
            CHECK(min_eig(My) >= -1e-8);
            Polynomial ball = map_variables(
                pb.C_T.constraints[0], sys.y_basis.space(),
                {sys.y_basis.space().time_index(), sys.y_basis.space().state_index(0),
                 sys.y_basis.space().state_index(1), sys.y_basis.space().input_index(0)});
            Eigen::MatrixXd Ly = instantiate(localizing_matrix_structure(ball, sys.y_basis), em.y);
            CHECK(min_eig(Ly) >= -1e-8);
            Eigen::MatrixXd Mz = instantiate(
                moment_matrix_structure(enumerate_basis(sys.z_basis.space(), 2), sys.z_basis),
                em.z);
            CHECK(min_eig(Mz) >= -1e-8);
        }
    }
}
