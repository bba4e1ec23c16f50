#include "mocp/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "mocp/control.hpp"
#include "mocp/problem_file.hpp"
#include "mocp/relax.hpp"
#include "mocp/sdpa_io.hpp"

namespace mocp {

namespace {

namespace fs = std::filesystem;

// Fixed formatting for everything that lands in a file: %.12g keeps the full
// useful precision and never varies with locale or stream state.
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::target_ball: return "target_ball";
        case StopReason::horizon: return "horizon";
        case StopReason::left_box: return "left_box";
        case StopReason::diverged: return "diverged";
    }
    return "?";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path ensure_out_dir(const RunConfig& cfg) {
    fs::path dir = cfg.out_dir.empty() ? fs::path(".") : fs::path(cfg.out_dir);
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_csv(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
}

RelaxationOrder resolve_order(const OcpProblem& pb, const RunConfig& cfg) {
    RelaxationOrder o = cfg.order_r > 0 ? order_for(pb, cfg.order_r) : default_order(pb);
    if (cfg.order_k > 0) {
        o.k = cfg.order_k;
        const std::vector<std::string> errs = order_errors(pb, o);
        if (!errs.empty()) throw std::invalid_argument("order (--order, --k): " + errs.front());
    }
    return o;
}

// Solve an assembled relaxation with the embedded solver or round-trip it
// through an external one via SDPA files ("<cmd> <in.dat-s> <out.result>").
RelaxationSolution solve_via(const RelaxationProblem& rp, const OcpProblem& pb,
                             const RunConfig& cfg, const std::string& tag) {
    if (cfg.external_solver.empty()) return solve_relaxation(rp, pb, cfg.solver);
    const fs::path dir = ensure_out_dir(cfg);
    const fs::path in = dir / (tag + ".dat-s");
    const fs::path out = dir / (tag + ".result");
    export_sdpa_file(rp.program, in.string());
    const std::string cmd = cfg.external_solver + " " + in.string() + " " + out.string();
    if (std::system(cmd.c_str()) != 0)
        throw std::runtime_error("external solver failed: " + cmd);
    return relaxation_solution_from(rp, pb, import_solution_sdpa_file(out.string(), rp.program));
}

// Feedback rule for the problem: closed-form when the structure supports it
// (single input, dynamics affine in it, cost u-free or purely quadratic in
// it), a grid otherwise. Explicit names override the detection.
FeedbackPolicy pick_policy(const OcpProblem& pb, const RunConfig& cfg) {
    std::vector<double> lo, hi;
    input_box_from(pb, lo, hi);
    auto bounded = [&] {
        for (std::size_t j = 0; j < lo.size(); ++j)
            if (!std::isfinite(lo[j]) || !std::isfinite(hi[j]))
                throw std::invalid_argument(
                    "policy needs input bounds; add single-input constraints to the "
                    "trajectory set");
    };
    const VarSpace& sp = pb.space;
    auto quad_coef = [&](int j) {  // coefficient of u_j^2 in h
        Exponents a(sp.dim(), 0);
        a[sp.input_index(j)] = 2;
        return pb.h.coefficient(a);
    };
    if (cfg.policy == "bang_bang") {
        bounded();
        return FeedbackPolicy::bang_bang(0, lo, hi);
    }
    if (cfg.policy == "first_order") {
        const double c = quad_coef(0);
        if (c <= 0.0)
            throw std::invalid_argument("first_order needs a positive u^2 coefficient in h");
        return FeedbackPolicy::first_order(c, 0, lo, hi);
    }
    if (cfg.policy == "grid_search") {
        bounded();
        return FeedbackPolicy::grid_search(lo, hi);
    }
    if (cfg.policy != "auto")
        throw std::invalid_argument("unknown policy '" + cfg.policy + "'");

    if (pb.n_inputs() == 1) {
        const int u = sp.input_index(0);
        bool affine = true;
        for (const Polynomial& fi : pb.f) affine = affine && fi.degree_in(u) <= 1;
        const double c = quad_coef(0);
        if (affine && c > 0.0) {
            // quadratic penalty must be the only u-dependence for the
            // stationary-point rule to be exact
            Exponents a(sp.dim(), 0);
            a[u] = 2;
            const Polynomial rest = pb.h - Polynomial::monomial(sp, a, c);
            if (!rest.depends_on(u)) return FeedbackPolicy::first_order(c, 0, lo, hi);
        }
        if (affine && !pb.h.depends_on(u)) {
            bounded();
            return FeedbackPolicy::bang_bang(0, lo, hi);
        }
    }
    bounded();
    return FeedbackPolicy::grid_search(lo, hi);
}

// Starts for the closed-loop commands: explicit --x0 list, else the dirac
// point of the initial measure.
std::vector<std::vector<double>> pick_starts(const LoadedProblem& lp, const RunConfig& cfg) {
    if (!cfg.starts.empty()) {
        for (const auto& x : cfg.starts)
            if (static_cast<int>(x.size()) != lp.problem.n_states())
                throw std::invalid_argument("--x0 needs one value per state");
        return cfg.starts;
    }
    if (lp.problem.initial.kind == InitialMeasure::Kind::dirac) return {lp.problem.initial.x0};
    throw std::invalid_argument("give --x0 (the initial measure has no single start point)");
}

std::vector<double> stop_target(const OcpProblem& pb) {
    if (pb.final_mode == FinalMode::singleton) return pb.x_T;
    return {};
}

double distance_to(const std::vector<double>& x, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - (i < c.size() ? c[i] : 0.0);
        s += d * d;
    }
    return std::sqrt(s);
}

void write_trajectory(const fs::path& dir, std::size_t i, const Trajectory& traj) {
    std::ofstream f = open_csv(dir / ("trajectory_" + std::to_string(i) + ".csv"));
    f << to_csv(traj);
}

void print_run(std::ostream& out, const Trajectory& traj, const std::vector<double>& target) {
    double closest = std::numeric_limits<double>::infinity();
    for (const TrajectorySample& s : traj.samples)
        closest = std::min(closest, distance_to(s.x, target));
    const TrajectorySample& last = traj.samples.back();
    out << "  stop=" << to_string(traj.reason) << " t=" << fmt(last.t)
        << " cost=" << fmt(traj.cost) << " closest=" << fmt(closest) << " final=(";
    for (std::size_t i = 0; i < last.x.size(); ++i)
        out << (i ? "," : "") << fmt(last.x[i]);
    out << ")\n";
    for (const std::string& n : traj.notes) out << "  note: " << n << "\n";
}

int cmd_bound(const LoadedProblem& lp, const RunConfig& cfg, std::ostream& out) {
    const OcpProblem& pb = lp.problem;
    std::vector<int> rs = cfg.orders;
    if (rs.empty() && cfg.order_r > 0) rs.push_back(cfg.order_r);
    const fs::path dir = ensure_out_dir(cfg);
    std::ofstream csv = open_csv(dir / "bounds.csv");
    csv << "r,k,bound,status\n";
    out << "r,k,bound,status,seconds\n";
    bool all_optimal = true;
    for (int r : rs) {
        RelaxationOrder o = order_for(pb, r);
        if (rs.size() == 1 && cfg.order_k > 0) {
            o.k = cfg.order_k;
            const std::vector<std::string> errs = order_errors(pb, o);
            if (!errs.empty()) throw std::invalid_argument("--k: " + errs.front());
        }
        const auto t0 = std::chrono::steady_clock::now();
        const RelaxationProblem rp = assemble(pb, o);
        const RelaxationSolution sol =
            solve_via(rp, pb, cfg, "relaxation_r" + std::to_string(o.r));
        const double secs = seconds_since(t0);
        const std::string status = to_string(sol.report.status);
        csv << o.r << "," << o.k << "," << fmt(sol.report.bound) << "," << status << "\n";
        out << o.r << "," << o.k << "," << fmt(sol.report.bound) << "," << status << ","
            << fmt(secs) << "\n";
        all_optimal = all_optimal && sol.report.status == SolveStatus::optimal;
    }
    return all_optimal ? 0 : 1;
}

int cmd_valuefn(const LoadedProblem& lp, const RunConfig& cfg, std::ostream& out) {
    const OcpProblem& pb = lp.problem;
    const int n = pb.n_states();
    const InitialMeasure& mu = pb.initial;
    if (mu.kind == InitialMeasure::Kind::unknown)
        throw std::invalid_argument("value-function evaluation needs an initial measure");
    if (mu.kind == InitialMeasure::Kind::explicit_moments)
        throw std::invalid_argument(
            "explicit moments give no evaluation region; use dirac, uniform_box, or "
            "uniform_segment");

    const RelaxationOrder order = resolve_order(pb, cfg);
    const RelaxationProblem rp = assemble(pb, order);
    const RelaxationSolution sol = solve_via(rp, pb, cfg, "relaxation");
    const ValueFunction vf = value_function(sol, pb, order);

    out << "order r=" << order.r << " k=" << order.k << " status "
        << to_string(sol.report.status) << ", bound " << fmt(sol.report.bound) << "\n";
    out << "phi = " << vf.phi.to_string() << "\n";

    const fs::path dir = ensure_out_dir(cfg);
    {
        std::ofstream txt(dir / "value_function.txt");
        txt << vf.phi.to_string() << "\n";
    }

    // evaluation grid over the support of the initial measure
    std::vector<std::vector<double>> points;
    if (mu.kind == InitialMeasure::Kind::dirac) {
        points.push_back(mu.x0);
    } else if (mu.kind == InitialMeasure::Kind::uniform_segment) {
        const int g = std::max(2, cfg.grid_points);
        for (int i = 0; i < g; ++i) {
            const double s = static_cast<double>(i) / (g - 1);
            std::vector<double> x(n);
            for (int j = 0; j < n; ++j) x[j] = mu.p0[j] + s * (mu.p1[j] - mu.p0[j]);
            points.push_back(std::move(x));
        }
    } else {  // uniform_box: full raster, capped to a sane row count
        int g = std::max(2, cfg.grid_points);
        while (std::pow(static_cast<double>(g), n) > 200000.0 && g > 2) --g;
        std::vector<int> idx(n, 0);
        for (;;) {
            std::vector<double> x(n);
            for (int j = 0; j < n; ++j)
                x[j] = mu.lo[j] + (mu.hi[j] - mu.lo[j]) * idx[j] / (g - 1);
            points.push_back(std::move(x));
            int j = n - 1;
            while (j >= 0 && ++idx[j] == g) idx[j--] = 0;
            if (j < 0) break;
        }
    }

    const bool with_oracle = lp.oracle == "double_integrator_min_time";
    std::ofstream csv = open_csv(dir / "value_function.csv");
    for (int j = 0; j < n; ++j) csv << "x" << (j + 1) << ",";
    csv << "value" << (with_oracle ? ",oracle" : "") << "\n";
    for (const std::vector<double>& x : points) {
        for (int j = 0; j < n; ++j) csv << fmt(x[j]) << ",";
        csv << fmt(vf.value(0.0, x));
        if (with_oracle) {
            csv << ",";
            try {
                csv << fmt(double_integrator_min_time(x));
            } catch (const std::exception&) {
                csv << "nan";
            }
        }
        csv << "\n";
    }
    if (mu.kind == InitialMeasure::Kind::dirac)
        out << "phi(0, x0) = " << fmt(vf.value(0.0, mu.x0)) << "\n";
    out << "wrote " << (dir / "value_function.csv").string() << " (" << points.size()
        << " rows)\n";
    return sol.report.status == SolveStatus::optimal ? 0 : 1;
}

int cmd_synthesize(const LoadedProblem& lp, const RunConfig& cfg, std::ostream& out,
                   std::ostream& err) {
    const OcpProblem& pb = lp.problem;
    if (!cfg.external_solver.empty())
        err << "note: receding-horizon synthesis always uses the embedded solver\n";
    RecedingOptions opts;
    opts.rho = cfg.rho;
    opts.dt = cfg.dt;
    opts.max_steps = std::min(cfg.max_steps, std::lround(cfg.t_max / cfg.dt));
    opts.radius = cfg.radius;
    opts.policy = pick_policy(pb, cfg);
    opts.solver = cfg.solver;
    opts.seed = cfg.seed;
    const RelaxationOrder order = resolve_order(pb, cfg);
    const std::vector<std::vector<double>> starts = pick_starts(lp, cfg);
    const std::vector<double> target = stop_target(pb);
    const fs::path dir = ensure_out_dir(cfg);
    bool ok = true;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        out << "start " << i << " at (";
        for (std::size_t j = 0; j < starts[i].size(); ++j)
            out << (j ? "," : "") << fmt(starts[i][j]);
        out << "), order r=" << order.r << " k=" << order.k << "\n";
        const Trajectory traj = receding_horizon(pb, starts[i], order, opts);
        write_trajectory(dir, i, traj);
        print_run(out, traj, target);
        ok = ok && traj.reason != StopReason::diverged;
    }
    return ok ? 0 : 1;
}

int cmd_simulate(const LoadedProblem& lp, const RunConfig& cfg, std::ostream& out) {
    const OcpProblem& pb = lp.problem;
    const RelaxationOrder order = resolve_order(pb, cfg);
    const RelaxationProblem rp = assemble(pb, order);
    const RelaxationSolution sol = solve_via(rp, pb, cfg, "relaxation");
    out << "order r=" << order.r << " k=" << order.k << " status "
        << to_string(sol.report.status) << ", bound " << fmt(sol.report.bound) << "\n";
    const ValueFunction vf = value_function(sol, pb, order);
    const FeedbackPolicy policy = pick_policy(pb, cfg);

    SimOptions sopts;
    sopts.dt = cfg.dt;
    sopts.t_max = cfg.t_max;
    sopts.stop_target = stop_target(pb);
    sopts.stop_radius = cfg.radius;

    const std::vector<std::vector<double>> starts = pick_starts(lp, cfg);
    const fs::path dir = ensure_out_dir(cfg);
    std::ofstream gaps = open_csv(dir / "gap.csv");
    for (int j = 0; j < pb.n_states(); ++j) gaps << "x" << (j + 1) << ",";
    gaps << "upper,lower,gap\n";
    bool ok = true;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const Trajectory traj =
            simulate(pb, make_controller(vf, pb, policy), starts[i], sopts);
        write_trajectory(dir, i, traj);
        const double ub = traj.cost;
        const double lb = vf.value(0.0, starts[i]);
        double g = std::numeric_limits<double>::quiet_NaN();
        if (ub + lb > 0.0) g = gap(ub, lb);
        for (int j = 0; j < pb.n_states(); ++j) gaps << fmt(starts[i][j]) << ",";
        gaps << fmt(ub) << "," << fmt(lb) << "," << fmt(g) << "\n";
        out << "start " << i << ":";
        print_run(out, traj, sopts.stop_target);
        out << "  upper=" << fmt(ub) << " lower=" << fmt(lb) << " gap=" << fmt(g) << "\n";
        ok = ok && traj.reason != StopReason::diverged;
        if (cfg.tol_gap >= 0.0 && !(g <= cfg.tol_gap)) ok = false;
    }
    return ok ? 0 : 1;
}

int cmd_certify(const LoadedProblem& lp, const RunConfig& cfg, std::ostream& out) {
    const OcpProblem& pb = lp.problem;
    if (static_cast<int>(cfg.feedback.size()) != pb.n_inputs())
        throw std::invalid_argument("--feedback needs one expression per input");
    const VarSpace& sp = pb.space;
    std::vector<Polynomial> feedback;
    for (const std::string& expr : cfg.feedback) {
        Polynomial p = parse(expr, sp);
        if (sp.has_time() && p.depends_on(sp.time_index()))
            throw std::invalid_argument("feedback must not depend on t: " + expr);
        for (int j = 0; j < pb.n_inputs(); ++j)
            if (p.depends_on(sp.input_index(j)))
                throw std::invalid_argument("feedback must not depend on inputs: " + expr);
        feedback.push_back(std::move(p));
    }

    // initial region: the problem's initial set when given, else the support
    // of the initial measure as per-axis quadratics
    SemialgebraicSet S{SetScope::state_only, {}};
    if (!pb.C_I.constraints.empty()) {
        S = pb.C_I;
    } else {
        const InitialMeasure& mu = pb.initial;
        std::vector<double> lo, hi;
        if (mu.kind == InitialMeasure::Kind::dirac) {
            lo = hi = mu.x0;
        } else if (mu.kind == InitialMeasure::Kind::uniform_box) {
            lo = mu.lo;
            hi = mu.hi;
        } else if (mu.kind == InitialMeasure::Kind::uniform_segment) {
            lo.resize(mu.p0.size());
            hi.resize(mu.p0.size());
            for (std::size_t j = 0; j < mu.p0.size(); ++j) {
                lo[j] = std::min(mu.p0[j], mu.p1[j]);
                hi[j] = std::max(mu.p0[j], mu.p1[j]);
            }
        } else {
            throw std::invalid_argument(
                "certify needs an initial region: give [sets.initial] or a localized "
                "initial measure");
        }
        for (int j = 0; j < pb.n_states(); ++j) {
            const Polynomial xj = Polynomial::variable(sp, sp.state_index(j));
            S.constraints.push_back((xj - Polynomial::constant(sp, lo[j])) *
                                    (Polynomial::constant(sp, hi[j]) - xj));
        }
    }

    const RelaxationOrder order = resolve_order(pb, cfg);
    const CertificateReport rep = upper_bound_certificate(pb, feedback, S, order, cfg.solver);

    bool stable = !rep.linearization.empty();
    for (const std::complex<double>& ev : rep.linearization) stable = stable && ev.real() < 0.0;

    out << "status " << to_string(rep.report.status) << "\n";
    out << "upper bound on closed-loop cost from S: "
        << (rep.bounded ? fmt(rep.bound) : std::string("unbounded")) << "\n";
    out << "closed-loop eigenvalues at target:";
    for (const std::complex<double>& ev : rep.linearization)
        out << " " << fmt(ev.real()) << (ev.imag() < 0 ? "-" : "+") << fmt(std::abs(ev.imag()))
            << "i";
    out << "\n"
        << (stable ? "linearization stable" : "linearization not certified stable") << "\n";
    for (const std::string& n : rep.notes) out << "note: " << n << "\n";

    const fs::path dir = ensure_out_dir(cfg);
    std::ofstream csv = open_csv(dir / "certificate.csv");
    csv << "quantity,value\n";
    csv << "status," << to_string(rep.report.status) << "\n";
    csv << "bounded," << (rep.bounded ? 1 : 0) << "\n";
    csv << "bound," << fmt(rep.bound) << "\n";
    csv << "stable," << (stable ? 1 : 0) << "\n";
    for (std::size_t i = 0; i < rep.linearization.size(); ++i) {
        csv << "eig" << (i + 1) << "_re," << fmt(rep.linearization[i].real()) << "\n";
        csv << "eig" << (i + 1) << "_im," << fmt(rep.linearization[i].imag()) << "\n";
    }
    return rep.bounded && stable ? 0 : 1;
}

int cmd_oracle(const LoadedProblem& lp, const RunConfig& cfg, std::ostream& out) {
    if (lp.oracle != "double_integrator_min_time")
        throw std::invalid_argument("no oracle is declared for this problem");
    if (cfg.eval_points.empty()) throw std::invalid_argument("give at least one --x point");
    const int n = lp.problem.n_states();
    const fs::path dir = ensure_out_dir(cfg);
    std::ofstream csv = open_csv(dir / "oracle.csv");
    for (int j = 0; j < n; ++j) csv << "x" << (j + 1) << ",";
    csv << "value\n";
    for (const std::vector<double>& x : cfg.eval_points) {
        if (static_cast<int>(x.size()) != n)
            throw std::invalid_argument("--x needs one value per state");
        const double v = double_integrator_min_time(x);
        for (int j = 0; j < n; ++j) csv << fmt(x[j]) << ",";
        csv << fmt(v) << "\n";
        out << "T(";
        for (int j = 0; j < n; ++j) out << (j ? "," : "") << fmt(x[j]);
        out << ") = " << fmt(v) << "\n";
    }
    return 0;
}

int cmd_solve_sdpa(const RunConfig& cfg, std::ostream& out) {
    if (cfg.problem_path.empty() || cfg.sdpa_out.empty())
        throw std::invalid_argument("solve-sdpa needs input and output paths");
    const SdpaProblem sp = import_problem_sdpa_file(cfg.problem_path);
    const ConicSolution sol = solve(sp.program, cfg.solver);
    std::ofstream f(cfg.sdpa_out);
    if (!f) throw std::runtime_error("cannot write " + cfg.sdpa_out);
    write_solution_sdpa(sp, sol, f);
    out << "status " << to_string(sol.status) << ", objective " << fmt(sol.primal_obj) << "\n";
    return 0;
}

}  // namespace

int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.command == "solve-sdpa") return cmd_solve_sdpa(cfg, out);
    if (cfg.problem_path.empty()) throw std::invalid_argument("--problem is required");
    const LoadedProblem lp = load_problem(cfg.problem_path);
    if (cfg.command == "bound") return cmd_bound(lp, cfg, out);
    if (cfg.command == "valuefn") return cmd_valuefn(lp, cfg, out);
    if (cfg.command == "synthesize") return cmd_synthesize(lp, cfg, out, err);
    if (cfg.command == "simulate") return cmd_simulate(lp, cfg, out);
    if (cfg.command == "certify") return cmd_certify(lp, cfg, out);
    if (cfg.command == "oracle") return cmd_oracle(lp, cfg, out);
    throw std::invalid_argument("unknown command '" + cfg.command + "'");
}

}  // namespace mocp
