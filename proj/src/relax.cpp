#include "mocp/relax.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mocp {

namespace {

int even_up(int d) { return d + (d % 2); }

// target_of_source map for map_variables; unmapped inputs become -1 so a
// polynomial that actually mentions them fails loudly inside map_variables.
std::vector<int> var_map(const VarSpace& src, const VarSpace& dst) {
    std::vector<int> map(src.dim(), -1);
    if (src.has_time() && dst.has_time()) map[src.time_index()] = dst.time_index();
    for (int i = 0; i < std::min(src.n_states(), dst.n_states()); ++i)
        map[src.state_index(i)] = dst.state_index(i);
    for (int j = 0; j < std::min(src.n_inputs(), dst.n_inputs()); ++j)
        map[src.input_index(j)] = dst.input_index(j);
    return map;
}

int dynamics_degree(const OcpProblem& problem) {
    int d = 0;
    for (const Polynomial& fi : problem.f) d = std::max(d, fi.degree());
    return d;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Right-hand side of trajectory row i once the pinned moment vectors are
// moved over: d_i = (A_I w)_i - (A_F z)_i restricted to the pinned parts.
double pinned_rhs(const TrajectoryConstraintSystem& sys,
                  const std::optional<MomentVector>& z_fixed,
                  const std::optional<MomentVector>& w_fixed, int row) {
    double d = 0.0;
    if (z_fixed)
        for (const auto& [zi, c] : sys.a_final[row]) d -= c * (*z_fixed)[zi];
    if (w_fixed)
        for (const auto& [wi, c] : sys.a_initial[row]) d += c * (*w_fixed)[wi];
    return d;
}

MomentVector pinned_initial_moments(const OcpProblem& problem, const Basis& w_basis) {
    const InitialMeasure& im = problem.initial;
    switch (im.kind) {
        case InitialMeasure::Kind::dirac:
            return dirac_moments(im.x0, w_basis);
        case InitialMeasure::Kind::uniform_box:
            return uniform_box_moments(im.lo, im.hi, w_basis);
        case InitialMeasure::Kind::uniform_segment:
            return uniform_segment_moments(im.p0, im.p1, w_basis);
        case InitialMeasure::Kind::explicit_moments: {
            const MomentVector& given = *im.moments;
            if (!(given.basis.space() == w_basis.space()))
                throw std::invalid_argument(
                    "assemble: explicit initial moments must be over the state variables");
            if (given.basis.max_degree() < w_basis.max_degree())
                throw std::invalid_argument(
                    "assemble: explicit initial moments truncated below the relaxation order");
            MomentVector w{w_basis, std::vector<double>(w_basis.size())};
            for (int i = 0; i < w_basis.size(); ++i)
                w.values[i] = given[given.basis.index(w_basis.monomial(i))];
            return w;
        }
        case InitialMeasure::Kind::unknown:
            break;
    }
    throw std::logic_error("pinned_initial_moments: unknown initial measure is not pinned");
}

struct GridAxes {
    std::vector<std::vector<double>> values;  // per dimension
};

std::vector<double> axis(double lo, double hi, int points) {
    if (points <= 1) return {0.5 * (lo + hi)};
    std::vector<double> v(points);
    for (int i = 0; i < points; ++i) v[i] = lo + (hi - lo) * i / (points - 1);
    return v;
}

}  // namespace

RelaxationOrder order_for(const OcpProblem& problem, int r) {
    r = even_up(std::max(2, r));
    r = std::max(r, even_up(problem.H.degree()));
    int k = std::max(even_up(problem.h.degree()), even_up(r - 1 + dynamics_degree(problem)));
    k = std::max(2, k);
    return {r, k};
}

RelaxationOrder default_order(const OcpProblem& problem) { return order_for(problem, 2); }

std::vector<std::string> order_errors(const OcpProblem& problem, RelaxationOrder order) {
    std::vector<std::string> errs;
    auto note = [&errs](const std::string& s) { errs.push_back(s); };
    std::ostringstream os;
    if (order.r < 2 || order.r % 2 != 0) note("r must be even and at least 2");
    if (order.k < 2 || order.k % 2 != 0) note("k must be even and at least 2");
    if (order.r < problem.H.degree()) note("r must cover deg(H)");
    if (order.k < problem.h.degree()) note("k must cover deg(h)");
    int need = even_up(order.r - 1 + dynamics_degree(problem));
    if (order.k < need) {
        os << "k must be at least " << need << " so Lie derivatives of degree-" << order.r
           << " tests fit";
        note(os.str());
    }
    return errs;
}

TrajectoryConstraintSystem build_trajectory_constraints(const OcpProblem& problem,
                                                        RelaxationOrder order) {
    auto errs = order_errors(problem, order);
    if (!errs.empty()) throw std::invalid_argument("build_trajectory_constraints: " + errs.front());

    const bool fixed_T = problem.horizon.is_fixed();
    const int n = problem.n_states();
    const int m = problem.n_inputs();
    const VarSpace test_space(fixed_T, n, 0);
    const VarSpace state_space(false, n, 0);
    const VarSpace y_space(fixed_T, n, m);

    TrajectoryConstraintSystem sys{enumerate_basis(test_space, order.r),
                                   enumerate_basis(state_space, order.r),
                                   enumerate_basis(state_space, order.r),
                                   enumerate_basis(y_space, order.k),
                                   {},
                                   {},
                                   {}};

    const std::vector<int> to_y = var_map(problem.space, y_space);
    std::vector<Polynomial> f_y;
    f_y.reserve(problem.f.size());
    for (const Polynomial& fi : problem.f) f_y.push_back(map_variables(fi, y_space, to_y));

    const double T = fixed_T ? problem.horizon.T : 1.0;
    for (int i = 0; i < sys.test_basis.size(); ++i) {
        const Exponents& e = sys.test_basis.monomial(i);
        const int alpha = fixed_T ? e[test_space.time_index()] : 0;

        Exponents beta(state_space.dim(), 0);
        for (int s = 0; s < n; ++s)
            beta[state_space.state_index(s)] = e[test_space.state_index(s)];

        // v(T, x(T)) side: T^alpha z_beta (0^0 = 1)
        sys.a_final.push_back({{sys.z_basis.index(beta), std::pow(T, alpha)}});
        // v(0, x(0)) side: nonzero only for alpha = 0
        if (alpha == 0)
            sys.a_initial.push_back({{sys.w_basis.index(beta), 1.0}});
        else
            sys.a_initial.push_back({});

        Exponents ey(y_space.dim(), 0);
        if (fixed_T) ey[y_space.time_index()] = alpha;
        for (int s = 0; s < n; ++s) ey[y_space.state_index(s)] = e[test_space.state_index(s)];
        const Polynomial lie = lie_derivative(Polynomial::monomial(y_space, ey, 1.0), f_y);

        TrajectoryConstraintSystem::Row row;
        row.reserve(lie.terms().size());
        for (const auto& [ex, c] : lie.terms()) {
            if (total_degree(ex) > order.k)
                throw std::invalid_argument(
                    "build_trajectory_constraints: Lie derivative degree exceeds k");
            row.emplace_back(sys.y_basis.index(ex), c);
        }
        sys.a_traj.push_back(std::move(row));
    }
    return sys;
}

Eigen::VectorXd trajectory_residuals(const TrajectoryConstraintSystem& system,
                                     const MomentVector& y, const MomentVector& z,
                                     const MomentVector& w) {
    if (y.basis.size() != system.y_basis.size() || z.basis.size() != system.z_basis.size() ||
        w.basis.size() != system.w_basis.size())
        throw std::invalid_argument("trajectory_residuals: moment vectors do not fit the system");
    const int rows = static_cast<int>(system.a_final.size());
    Eigen::VectorXd res(rows);
    for (int i = 0; i < rows; ++i) {
        double v = 0.0;
        for (const auto& [zi, c] : system.a_final[i]) v += c * z[zi];
        for (const auto& [wi, c] : system.a_initial[i]) v -= c * w[wi];
        for (const auto& [yi, c] : system.a_traj[i]) v -= c * y[yi];
        res(i) = v;
    }
    return res;
}

RelaxationProblem assemble(const OcpProblem& problem, RelaxationOrder order,
                           ObjectiveSense sense) {
    auto perrs = validate(problem);
    if (!perrs.empty()) throw std::invalid_argument("assemble: invalid problem: " + perrs.front());

    const bool fixed_T = problem.horizon.is_fixed();
    const int n = problem.n_states();
    const int m = problem.n_inputs();
    const VarSpace state_space(false, n, 0);
    const VarSpace y_space(fixed_T, n, m);

    TrajectoryConstraintSystem sys = build_trajectory_constraints(problem, order);

    std::optional<MomentVector> z_fixed, w_fixed;
    if (problem.final_mode == FinalMode::singleton)
        z_fixed = dirac_moments(problem.x_T, sys.z_basis);
    if (problem.initial.kind != InitialMeasure::Kind::unknown)
        w_fixed = pinned_initial_moments(problem, sys.w_basis);

    VariableLayout layout;
    layout.y_offset = 0;
    layout.y_size = sys.y_basis.size();
    int next = layout.y_size;
    if (!z_fixed) {
        layout.z_offset = next;
        layout.z_size = sys.z_basis.size();
        next += layout.z_size;
    }
    if (!w_fixed) {
        layout.w_offset = next;
        layout.w_size = sys.w_basis.size();
        next += layout.w_size;
    }
    layout.total = next;

    const Polynomial h_y = map_variables(problem.h, y_space, var_map(problem.space, y_space));
    std::vector<double> c_h(layout.y_size, 0.0);
    for (const auto& [e, c] : h_y.terms()) c_h[sys.y_basis.index(e)] = c;

    const Polynomial H_x =
        map_variables(problem.H, state_space, var_map(problem.space, state_space));
    std::vector<double> c_H(sys.z_basis.size(), 0.0);
    for (const auto& [e, c] : H_x.terms()) c_H[sys.z_basis.index(e)] = c;

    const double sign = sense == ObjectiveSense::maximize ? -1.0 : 1.0;
    double offset = 0.0;
    if (z_fixed) offset = dot(c_H, z_fixed->values);

    ConicProgram program(layout.total);
    for (int i = 0; i < layout.y_size; ++i)
        if (c_h[i] != 0.0) program.set_objective(layout.y_offset + i, sign * c_h[i]);
    if (!z_fixed)
        for (int i = 0; i < layout.z_size; ++i)
            if (c_H[i] != 0.0) program.set_objective(layout.z_offset + i, sign * c_H[i]);

    for (std::size_t i = 0; i < sys.a_final.size(); ++i) {
        std::vector<std::pair<int, double>> entries;
        if (!z_fixed)
            for (const auto& [zi, c] : sys.a_final[i])
                entries.emplace_back(layout.z_offset + zi, c);
        if (!w_fixed)
            for (const auto& [wi, c] : sys.a_initial[i])
                entries.emplace_back(layout.w_offset + wi, -c);
        for (const auto& [yi, c] : sys.a_traj[i]) entries.emplace_back(layout.y_offset + yi, -c);
        program.add_equality(entries, pinned_rhs(sys, z_fixed, w_fixed, static_cast<int>(i)));
    }

    int mass_row = -1;
    if (!w_fixed) {
        const int w0 = sys.w_basis.index(Exponents(state_space.dim(), 0));
        mass_row = program.add_equality({{layout.w_offset + w0, 1.0}}, 1.0);
    }

    std::vector<std::string> labels;
    std::vector<std::string> warnings;
    auto add_structure = [&program, &labels](const MatrixStructure& st, int offset,
                                             const std::string& label) {
        const int blk = program.add_block(st.size());
        for (int i = 0; i < st.size(); ++i)
            for (int j = i; j < st.size(); ++j)
                for (const auto& [idx, c] : st.entry(i, j))
                    program.add_block_entry(blk, offset + idx, i, j, c);
        labels.push_back(label);
    };
    auto add_measure_blocks = [&](const Basis& full, int offset, const std::string& tag,
                                  const VarSpace& gspace, const SemialgebraicSet& set) {
        add_structure(moment_matrix_structure(enumerate_basis(gspace, full.max_degree() / 2), full),
                      offset, "M(" + tag + ")");
        for (const Polynomial& g : set.constraints) {
            const Polynomial gm = map_variables(g, gspace, var_map(problem.space, gspace));
            const int d = even_up(gm.degree());
            if (d > full.max_degree()) {
                warnings.push_back("dropped localizer on " + tag + " for " + gm.to_string() +
                                   ": needs order >= " + std::to_string(d));
                continue;
            }
            add_structure(localizing_matrix_structure(gm, full), offset,
                          "L(" + tag + ", " + gm.to_string() + ")");
        }
    };

    add_measure_blocks(sys.y_basis, layout.y_offset, "y", y_space, problem.C_T);
    if (!z_fixed) add_measure_blocks(sys.z_basis, layout.z_offset, "z", state_space, problem.C_F);
    if (!w_fixed) add_measure_blocks(sys.w_basis, layout.w_offset, "w", state_space, problem.C_I);

    return RelaxationProblem{order,
                             !fixed_T,
                             sign,
                             std::move(sys),
                             layout,
                             std::move(c_h),
                             std::move(c_H),
                             std::move(z_fixed),
                             std::move(w_fixed),
                             offset,
                             std::move(program),
                             mass_row,
                             std::move(labels),
                             std::move(warnings)};
}

void set_initial_moments(RelaxationProblem& rp, const MomentVector& w) {
    if (!rp.w_fixed)
        throw std::invalid_argument(
            "set_initial_moments: the initial measure is a decision variable here");
    if (w.basis.size() != rp.system.w_basis.size() ||
        !(w.basis.space() == rp.system.w_basis.space()))
        throw std::invalid_argument("set_initial_moments: moment vector does not fit");
    rp.w_fixed = w;
    for (std::size_t i = 0; i < rp.system.a_final.size(); ++i)
        rp.program.set_equality_rhs(static_cast<int>(i),
                                    pinned_rhs(rp.system, rp.z_fixed, rp.w_fixed,
                                               static_cast<int>(i)));
}

RelaxationSolution relaxation_solution_from(const RelaxationProblem& rp,
                                            const OcpProblem& problem,
                                            const ConicSolution& sol) {
    const VariableLayout& L = rp.layout;

    MomentVector y{rp.system.y_basis, std::vector<double>(L.y_size, 0.0)};
    for (int i = 0; i < L.y_size; ++i) y.values[i] = sol.v(L.y_offset + i);
    MomentVector z = rp.z_fixed ? *rp.z_fixed
                                : MomentVector{rp.system.z_basis,
                                               std::vector<double>(rp.system.z_basis.size(), 0.0)};
    if (!rp.z_fixed)
        for (int i = 0; i < L.z_size; ++i) z.values[i] = sol.v(L.z_offset + i);
    MomentVector w = rp.w_fixed ? *rp.w_fixed
                                : MomentVector{rp.system.w_basis,
                                               std::vector<double>(rp.system.w_basis.size(), 0.0)};
    if (!rp.w_fixed)
        for (int i = 0; i < L.w_size; ++i) w.values[i] = sol.v(L.w_offset + i);

    const Basis& tb = rp.system.test_basis;
    Eigen::VectorXd c_phi(tb.size());
    for (int i = 0; i < tb.size(); ++i) c_phi(i) = rp.sign * sol.lambda(i);

    Polynomial phi(tb.space());
    for (int i = 0; i < tb.size(); ++i)
        if (c_phi(i) != 0.0) phi.add_term(tb.monomial(i), c_phi(i));

    // Pin the certificate's level at a pinned final state: constants have zero
    // Lie derivative, so the shift keeps the trajectory inequality intact while
    // making phi(T, x_T) = H(x_T) exact.
    if (rp.z_fixed && problem.final_mode == FinalMode::singleton) {
        std::vector<double> pt(tb.space().dim(), 0.0);
        if (tb.space().has_time()) pt[tb.space().time_index()] = problem.horizon.T;
        for (int s = 0; s < problem.n_states(); ++s)
            pt[tb.space().state_index(s)] = problem.x_T[s];
        std::vector<double> px(problem.space.dim(), 0.0);
        for (int s = 0; s < problem.n_states(); ++s)
            px[problem.space.state_index(s)] = problem.x_T[s];
        const double shift = problem.H.evaluate(px) - phi.evaluate(pt);
        if (shift != 0.0) {
            const Exponents zero(tb.space().dim(), 0);
            phi.add_term(zero, shift);
            c_phi(tb.index(zero)) += shift;
        }
    }

    DualCertificate cert{tb, std::move(c_phi), std::move(phi), rp.block_labels, sol.Z};

    BoundReport report;
    report.status = sol.status;
    report.bound = rp.sign * sol.primal_obj + rp.objective_offset;
    report.dual_bound = rp.sign * sol.dual_obj + rp.objective_offset;
    report.gap_rel = sol.gap_rel;
    report.iterations = sol.iterations;
    report.warnings = rp.warnings;

    return RelaxationSolution{report, std::move(y), std::move(z), std::move(w), std::move(cert)};
}

RelaxationSolution solve_relaxation(const RelaxationProblem& rp, const OcpProblem& problem,
                                    const SolveOptions& options) {
    return relaxation_solution_from(rp, problem, solve(rp.program, options));
}

RelaxationSolution lower_bound(const OcpProblem& problem, RelaxationOrder order,
                               const SolveOptions& options) {
    return solve_relaxation(assemble(problem, order), problem, options);
}

SubsolutionReport check_subsolution(const DualCertificate& cert, const OcpProblem& problem,
                                    const GridSpec& grid, double tol) {
    const int n = problem.n_states();
    const int m = problem.n_inputs();
    if (static_cast<int>(grid.state_lo.size()) != n ||
        static_cast<int>(grid.state_hi.size()) != n)
        throw std::invalid_argument("check_subsolution: state box must match n_states");
    if (m > 0 && (static_cast<int>(grid.input_lo.size()) != m ||
                  static_cast<int>(grid.input_hi.size()) != m))
        throw std::invalid_argument("check_subsolution: input box must match n_inputs");

    const VarSpace& ps = cert.phi.space();
    const bool fixed_T = problem.horizon.is_fixed();
    const double membership = 1e-9;

    Polynomial phi_t(ps);
    if (ps.has_time()) phi_t = cert.phi.partial_derivative(ps.time_index());
    std::vector<Polynomial> phi_x;
    phi_x.reserve(n);
    for (int s = 0; s < n; ++s) phi_x.push_back(cert.phi.partial_derivative(ps.state_index(s)));

    std::vector<std::vector<double>> axes;  // t? + states + inputs, in problem-space order
    if (fixed_T) axes.push_back(axis(0.0, problem.horizon.T, grid.points_time));
    for (int s = 0; s < n; ++s)
        axes.push_back(axis(grid.state_lo[s], grid.state_hi[s], grid.points_state));
    for (int j = 0; j < m; ++j)
        axes.push_back(axis(grid.input_lo[j], grid.input_hi[j], grid.points_input));

    SubsolutionReport rep;
    rep.tol = tol;

    std::vector<std::size_t> idx(axes.size(), 0);
    std::vector<double> pp(problem.space.dim(), 0.0);
    std::vector<double> pphi(ps.dim(), 0.0);
    bool done = axes.empty();
    while (!done) {
        {
            int a = 0;
            if (fixed_T) {
                pp[problem.space.time_index()] = axes[a][idx[a]];
                ++a;
            }
            for (int s = 0; s < n; ++s, ++a) pp[problem.space.state_index(s)] = axes[a][idx[a]];
            for (int j = 0; j < m; ++j, ++a) pp[problem.space.input_index(j)] = axes[a][idx[a]];
        }
        bool inside = true;
        for (const Polynomial& g : problem.C_T.constraints)
            if (g.evaluate(pp) < -membership) {
                inside = false;
                break;
            }
        if (inside) {
            pphi.assign(ps.dim(), 0.0);
            if (ps.has_time()) pphi[ps.time_index()] = pp[problem.space.time_index()];
            for (int s = 0; s < n; ++s)
                pphi[ps.state_index(s)] = pp[problem.space.state_index(s)];
            double v = phi_t.is_zero() ? 0.0 : phi_t.evaluate(pphi);
            for (int s = 0; s < n; ++s)
                v += phi_x[s].evaluate(pphi) * problem.f[s].evaluate(pp);
            v += problem.h.evaluate(pp);
            rep.min_trajectory = std::min(rep.min_trajectory, v);
            ++rep.trajectory_points;
        }
        std::size_t d = 0;
        for (; d < axes.size(); ++d) {
            if (++idx[d] < axes[d].size()) break;
            idx[d] = 0;
        }
        done = d == axes.size();
    }

    auto final_value = [&](const std::vector<double>& x) {
        std::vector<double> px(problem.space.dim(), 0.0);
        for (int s = 0; s < n; ++s) px[problem.space.state_index(s)] = x[s];
        pphi.assign(ps.dim(), 0.0);
        if (ps.has_time()) pphi[ps.time_index()] = problem.horizon.T;
        for (int s = 0; s < n; ++s) pphi[ps.state_index(s)] = x[s];
        return problem.H.evaluate(px) - cert.phi.evaluate(pphi);
    };

    if (problem.final_mode == FinalMode::singleton) {
        rep.min_final = final_value(problem.x_T);
        rep.final_points = 1;
    } else {
        std::vector<std::vector<double>> faxes;
        for (int s = 0; s < n; ++s)
            faxes.push_back(axis(grid.state_lo[s], grid.state_hi[s], grid.points_state));
        std::vector<std::size_t> fi(faxes.size(), 0);
        std::vector<double> x(n, 0.0);
        std::vector<double> px(problem.space.dim(), 0.0);
        bool fdone = false;
        while (!fdone) {
            for (int s = 0; s < n; ++s) x[s] = faxes[s][fi[s]];
            for (int s = 0; s < n; ++s) px[problem.space.state_index(s)] = x[s];
            if (problem.space.has_time() && fixed_T)
                px[problem.space.time_index()] = problem.horizon.T;
            bool inside = true;
            for (const Polynomial& g : problem.C_F.constraints)
                if (g.evaluate(px) < -membership) {
                    inside = false;
                    break;
                }
            if (inside) {
                rep.min_final = std::min(rep.min_final, final_value(x));
                ++rep.final_points;
            }
            std::size_t d = 0;
            for (; d < faxes.size(); ++d) {
                if (++fi[d] < faxes[d].size()) break;
                fi[d] = 0;
            }
            fdone = d == faxes.size();
        }
    }

    rep.pass = rep.min_trajectory >= -tol && rep.min_final >= -tol;
    return rep;
}

EmpiricalMoments empirical_moments(const OcpProblem& problem,
                                   const std::vector<TrajectorySample>& samples,
                                   RelaxationOrder order) {
    if (samples.size() < 3)
        throw std::invalid_argument("empirical_moments: need at least three samples");
    const int n = problem.n_states();
    const int m = problem.n_inputs();
    const std::size_t N = samples.size();
    for (const TrajectorySample& s : samples)
        if (static_cast<int>(s.x.size()) != n || static_cast<int>(s.u.size()) != m)
            throw std::invalid_argument("empirical_moments: sample dimension mismatch");

    const double t0 = samples.front().t;
    const double dt = (samples.back().t - t0) / static_cast<double>(N - 1);
    if (dt <= 0.0) throw std::invalid_argument("empirical_moments: time must increase");
    const double tscale = std::max(1.0, std::abs(samples.back().t));
    for (std::size_t i = 0; i < N; ++i)
        if (std::abs(samples[i].t - (t0 + dt * static_cast<double>(i))) > 1e-9 * tscale)
            throw std::invalid_argument("empirical_moments: samples must be equally spaced");

    const bool fixed_T = problem.horizon.is_fixed();
    const VarSpace state_space(false, n, 0);
    const VarSpace y_space(fixed_T, n, m);
    const Basis y_basis = enumerate_basis(y_space, order.k);
    const Basis x_basis = enumerate_basis(state_space, order.r);

    // Composite Simpson weights; a trailing 3/8 panel absorbs an odd interval
    // count without losing the O(dt^4) order.
    std::vector<double> wts(N, 0.0);
    const std::size_t intervals = N - 1;
    const std::size_t simpson_end = intervals % 2 == 0 ? intervals : intervals - 3;
    for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
        wts[i] += dt / 3.0;
        wts[i + 1] += 4.0 * dt / 3.0;
        wts[i + 2] += dt / 3.0;
    }
    if (intervals % 2 != 0) {
        const std::size_t s = intervals - 3;
        wts[s] += 3.0 * dt / 8.0;
        wts[s + 1] += 9.0 * dt / 8.0;
        wts[s + 2] += 9.0 * dt / 8.0;
        wts[s + 3] += 3.0 * dt / 8.0;
    }

    std::vector<std::vector<double>> pts(N, std::vector<double>(y_space.dim(), 0.0));
    for (std::size_t i = 0; i < N; ++i) {
        if (fixed_T) pts[i][y_space.time_index()] = samples[i].t;
        for (int s = 0; s < n; ++s) pts[i][y_space.state_index(s)] = samples[i].x[s];
        for (int j = 0; j < m; ++j) pts[i][y_space.input_index(j)] = samples[i].u[j];
    }

    MomentVector y{y_basis, std::vector<double>(y_basis.size(), 0.0)};
    for (int b = 0; b < y_basis.size(); ++b) {
        const Exponents& e = y_basis.monomial(b);
        double acc = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            if (wts[i] == 0.0) continue;
            double v = 1.0;
            for (int d = 0; d < y_space.dim(); ++d)
                if (e[d] != 0) v *= std::pow(pts[i][d], e[d]);
            acc += wts[i] * v;
        }
        y.values[b] = acc;
    }

    return EmpiricalMoments{std::move(y), dirac_moments(samples.back().x, x_basis),
                            dirac_moments(samples.front().x, x_basis)};
}

}  // namespace mocp
