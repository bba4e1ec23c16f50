#include "mocp/control.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace mocp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A state constraint counts as active once its slack falls below this band;
// the induced rate cut then keeps a control step from crossing the boundary.
// The band must exceed dt * max|x'| for the step sizes used here.
constexpr double kActiveBand = 1e-2;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string point_str(const std::vector<double>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += fmt(v[i]);
    }
    return s + ")";
}

std::vector<double> full_point(const VarSpace& space, double t, const std::vector<double>& x,
                               const std::vector<double>& u) {
    std::vector<double> pt(space.dim(), 0.0);
    if (space.has_time()) pt[space.time_index()] = t;
    for (int i = 0; i < space.n_states(); ++i) pt[space.state_index(i)] = x[i];
    for (int j = 0; j < space.n_inputs() && j < static_cast<int>(u.size()); ++j)
        pt[space.input_index(j)] = u[j];
    return pt;
}

bool mentions_input(const Polynomial& g, const VarSpace& space) {
    for (int j = 0; j < space.n_inputs(); ++j)
        if (g.depends_on(space.input_index(j))) return true;
    return false;
}

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double vi : v) m = std::max(m, std::abs(vi));
    return m;
}

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

std::string describe(const InitialMeasure& im) {
    switch (im.kind) {
        case InitialMeasure::Kind::dirac:
            return "dirac" + point_str(im.x0);
        case InitialMeasure::Kind::uniform_box:
            return "uniform_box " + point_str(im.lo) + " - " + point_str(im.hi);
        case InitialMeasure::Kind::uniform_segment:
            return "uniform_segment " + point_str(im.p0) + " - " + point_str(im.p1);
        case InitialMeasure::Kind::explicit_moments:
            return "explicit_moments";
        case InitialMeasure::Kind::unknown:
            return "unknown";
    }
    return "";
}

// Dynamics, cost, and set-membership evaluation against one scratch point.
struct Stepper {
    const OcpProblem& p;
    std::vector<double> pt;

    explicit Stepper(const OcpProblem& problem) : p(problem), pt(problem.space.dim(), 0.0) {}

    void load(double t, const std::vector<double>& x, const std::vector<double>& u) {
        if (p.space.has_time()) pt[p.space.time_index()] = t;
        for (int i = 0; i < p.n_states(); ++i) pt[p.space.state_index(i)] = x[i];
        for (int j = 0; j < p.n_inputs(); ++j)
            pt[p.space.input_index(j)] = j < static_cast<int>(u.size()) ? u[j] : 0.0;
    }
    std::vector<double> f(double t, const std::vector<double>& x, const std::vector<double>& u) {
        load(t, x, u);
        std::vector<double> d(p.n_states());
        for (int i = 0; i < p.n_states(); ++i) d[i] = p.f[i].evaluate(pt);
        return d;
    }
    double h(double t, const std::vector<double>& x, const std::vector<double>& u) {
        load(t, x, u);
        return p.h.evaluate(pt);
    }
    double terminal(double t, const std::vector<double>& x) {
        load(t, x, {});
        return p.H.evaluate(pt);
    }
    std::vector<double> rk4(double t, const std::vector<double>& x, const std::vector<double>& u,
                            double dt) {
        const int n = p.n_states();
        const std::vector<double> k1 = f(t, x, u);
        std::vector<double> xs(n);
        for (int i = 0; i < n; ++i) xs[i] = x[i] + 0.5 * dt * k1[i];
        const std::vector<double> k2 = f(t + 0.5 * dt, xs, u);
        for (int i = 0; i < n; ++i) xs[i] = x[i] + 0.5 * dt * k2[i];
        const std::vector<double> k3 = f(t + 0.5 * dt, xs, u);
        for (int i = 0; i < n; ++i) xs[i] = x[i] + dt * k3[i];
        const std::vector<double> k4 = f(t + dt, xs, u);
        for (int i = 0; i < n; ++i)
            xs[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        return xs;
    }
    bool in_state_set(double t, const std::vector<double>& x, double tol) {
        load(t, x, {});
        for (const Polynomial& g : p.C_T.constraints) {
            if (mentions_input(g, p.space)) continue;
            if (g.evaluate(pt) < -tol) return false;
        }
        return true;
    }
};

}  // namespace

ValueFunction::ValueFunction(Polynomial p, int order_r, std::string provenance)
    : phi(std::move(p)),
      dphi_dt(phi.space()),
      order(order_r),
      initial_measure(std::move(provenance)) {
    const VarSpace& sp = phi.space();
    for (int j = 0; j < sp.n_inputs(); ++j)
        if (phi.depends_on(sp.input_index(j)))
            throw std::invalid_argument("ValueFunction: phi must not depend on inputs");
    if (sp.has_time()) dphi_dt = phi.partial_derivative(sp.time_index());
    grad_x.reserve(sp.n_states());
    for (int i = 0; i < sp.n_states(); ++i)
        grad_x.push_back(phi.partial_derivative(sp.state_index(i)));
}

double ValueFunction::value(double t, const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != phi.space().n_states())
        throw std::invalid_argument("ValueFunction: state size mismatch");
    return phi.evaluate(full_point(phi.space(), t, x, {}));
}

double ValueFunction::time_derivative(double t, const std::vector<double>& x) const {
    if (dphi_dt.is_zero()) return 0.0;
    return dphi_dt.evaluate(full_point(phi.space(), t, x, {}));
}

std::vector<double> ValueFunction::gradient(double t, const std::vector<double>& x) const {
    const std::vector<double> pt = full_point(phi.space(), t, x, {});
    std::vector<double> g(grad_x.size());
    for (std::size_t i = 0; i < grad_x.size(); ++i) g[i] = grad_x[i].evaluate(pt);
    return g;
}

ValueFunction value_function(const RelaxationSolution& sol, const OcpProblem& problem,
                             RelaxationOrder order) {
    return ValueFunction(sol.certificate.phi, order.r, describe(problem.initial));
}

FeedbackPolicy FeedbackPolicy::bang_bang(int input, std::vector<double> lo,
                                         std::vector<double> hi) {
    if (lo.size() != hi.size())
        throw std::invalid_argument("FeedbackPolicy: input box sides disagree");
    FeedbackPolicy p;
    p.kind = Kind::bang_bang;
    p.input = input;
    p.u_lo = std::move(lo);
    p.u_hi = std::move(hi);
    return p;
}

FeedbackPolicy FeedbackPolicy::first_order(double c_u, int input, std::vector<double> lo,
                                           std::vector<double> hi) {
    if (c_u <= 0.0)
        throw std::invalid_argument("FeedbackPolicy: first_order needs a positive u^2 weight");
    if (lo.size() != hi.size())
        throw std::invalid_argument("FeedbackPolicy: input box sides disagree");
    FeedbackPolicy p;
    p.kind = Kind::first_order;
    p.input = input;
    p.c_u = c_u;
    p.u_lo = std::move(lo);
    p.u_hi = std::move(hi);
    return p;
}

FeedbackPolicy FeedbackPolicy::grid_search(std::vector<double> lo, std::vector<double> hi,
                                           int resolution) {
    if (lo.size() != hi.size())
        throw std::invalid_argument("FeedbackPolicy: input box sides disagree");
    if (resolution < 2) throw std::invalid_argument("FeedbackPolicy: resolution must be >= 2");
    FeedbackPolicy p;
    p.kind = Kind::grid_search;
    p.resolution = resolution;
    p.u_lo = std::move(lo);
    p.u_hi = std::move(hi);
    return p;
}

void input_box_from(const OcpProblem& problem, std::vector<double>& lo, std::vector<double>& hi) {
    const VarSpace& sp = problem.space;
    const int m = sp.n_inputs();
    lo.assign(m, -kInf);
    hi.assign(m, kInf);
    for (const Polynomial& g : problem.C_T.constraints) {
        int only = -1;
        bool single = true;
        for (int v = 0; v < sp.dim() && single; ++v) {
            if (!g.depends_on(v)) continue;
            if (only == -1 && sp.is_input(v))
                only = v;
            else
                single = false;
        }
        if (!single || only < 0) continue;
        // univariate a u^2 + b u + c >= 0; an interval only when a <= 0
        double a = 0.0, b = 0.0, c = 0.0;
        bool quadratic = true;
        for (const auto& [e, coef] : g.terms()) {
            switch (e[only]) {
                case 0: c = coef; break;
                case 1: b = coef; break;
                case 2: a = coef; break;
                default: quadratic = false;
            }
        }
        if (!quadratic) continue;
        const int j = only - sp.input_index(0);
        if (std::abs(a) < 1e-15) {
            if (b > 1e-15)
                lo[j] = std::max(lo[j], -c / b);
            else if (b < -1e-15)
                hi[j] = std::min(hi[j], -c / b);
        } else if (a < 0.0) {
            const double disc = b * b - 4.0 * a * c;
            if (disc < 0.0) continue;  // empty slice; validate() reports that
            const double root = std::sqrt(disc);
            const double r1 = (-b + root) / (2.0 * a), r2 = (-b - root) / (2.0 * a);
            lo[j] = std::max(lo[j], std::min(r1, r2));
            hi[j] = std::min(hi[j], std::max(r1, r2));
        }
    }
}

std::pair<double, double> admissible_interval(const OcpProblem& problem,
                                              const FeedbackPolicy& policy, int input,
                                              double t, const std::vector<double>& x) {
    const VarSpace& sp = problem.space;
    double lo = policy.u_lo.empty() ? -kInf : policy.u_lo.at(input);
    double hi = policy.u_hi.empty() ? kInf : policy.u_hi.at(input);
    const std::vector<double> pt = full_point(sp, t, x, {});
    for (const Polynomial& g : problem.C_T.constraints) {
        if (mentions_input(g, sp)) continue;
        if (g.evaluate(pt) > kActiveBand) continue;
        // on (or near) the boundary g = 0 the state must not move outward:
        // require dg/dt = a + b u >= 0 along the dynamics
        const Polynomial rate = lie_derivative(g, problem.f);
        const Polynomial slope = rate.partial_derivative(sp.input_index(input));
        if (slope.degree_in(sp.input_index(input)) > 0) continue;  // not affine in u
        const double b = slope.evaluate(pt);
        const double a = rate.evaluate(pt);  // other inputs held at zero
        if (std::abs(b) < 1e-12) {
            if (a < -1e-9)
                throw std::runtime_error("empty admissible control set at x = " + point_str(x));
            continue;
        }
        if (b > 0.0)
            lo = std::max(lo, -a / b);
        else
            hi = std::min(hi, -a / b);
    }
    if (lo > hi + 1e-12)
        throw std::runtime_error("empty admissible control set at x = " + point_str(x));
    return {lo, std::max(lo, hi)};
}

std::vector<double> extract_control(const ValueFunction& vf, const OcpProblem& problem,
                                    double t, const std::vector<double>& x,
                                    const FeedbackPolicy& policy,
                                    const std::vector<double>& prev_u) {
    const VarSpace& sp = problem.space;
    const int n = problem.n_states(), m = problem.n_inputs();
    if (static_cast<int>(x.size()) != n)
        throw std::invalid_argument("extract_control: state size mismatch");
    if (m == 0) return {};
    if (!policy.u_lo.empty() && static_cast<int>(policy.u_lo.size()) != m)
        throw std::invalid_argument("extract_control: input box size mismatch");

    const std::vector<double> grad = vf.gradient(t, x);
    const std::vector<double> pt0 = full_point(sp, t, x, {});

    // grad_x phi . (column `j` of the input map); dynamics affine in u
    auto switching = [&](int j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            s += grad[i] * problem.f[i].partial_derivative(sp.input_index(j)).evaluate(pt0);
        return s;
    };

    std::vector<double> u(m, 0.0);

    if (policy.kind == FeedbackPolicy::Kind::grid_search) {
        if (policy.u_lo.empty())
            throw std::invalid_argument("extract_control: grid search needs an input box");
        for (int j = 0; j < m; ++j)
            if (!std::isfinite(policy.u_lo[j]) || !std::isfinite(policy.u_hi[j]))
                throw std::invalid_argument("extract_control: grid search needs a bounded box");

        std::vector<Polynomial> rate_cuts;
        std::vector<const Polynomial*> u_cuts;
        for (const Polynomial& g : problem.C_T.constraints) {
            if (mentions_input(g, sp))
                u_cuts.push_back(&g);
            else if (g.evaluate(pt0) <= kActiveBand)
                rate_cuts.push_back(lie_derivative(g, problem.f));
        }

        const double dphi = vf.time_derivative(t, x);
        const int R = policy.resolution;
        std::vector<int> idx(m, 0);
        std::vector<double> cand(m), pt = pt0;
        double best_q = kInf, best_norm = kInf;
        bool found = false;
        for (;;) {
            for (int j = 0; j < m; ++j) {
                cand[j] = policy.u_lo[j] +
                          (policy.u_hi[j] - policy.u_lo[j]) * idx[j] / static_cast<double>(R - 1);
                pt[sp.input_index(j)] = cand[j];
            }
            bool ok = true;
            for (const Polynomial* g : u_cuts)
                if (g->evaluate(pt) < -1e-12) {
                    ok = false;
                    break;
                }
            if (ok)
                for (const Polynomial& rate : rate_cuts)
                    if (rate.evaluate(pt) < -1e-12) {
                        ok = false;
                        break;
                    }
            if (ok) {
                double q = dphi + problem.h.evaluate(pt);
                for (int i = 0; i < n; ++i) q += grad[i] * problem.f[i].evaluate(pt);
                double nrm = 0.0;
                for (double cj : cand) nrm += cj * cj;
                const double tie = 1e-12 * (1.0 + std::abs(best_q));
                if (!found || q < best_q - tie) {
                    found = true;
                    best_q = q;
                    best_norm = nrm;
                    u = cand;
                } else if (q <= best_q + tie && nrm < best_norm) {
                    best_q = std::min(best_q, q);
                    best_norm = nrm;
                    u = cand;
                }
            }
            int d = 0;
            while (d < m && ++idx[d] == R) idx[d++] = 0;
            if (d == m) break;
        }
        if (!found)
            throw std::runtime_error("empty admissible control set at x = " + point_str(x));
        return u;
    }

    const int j = policy.input;
    if (j < 0 || j >= m) throw std::invalid_argument("extract_control: input index out of range");
    const auto [lo, hi] = admissible_interval(problem, policy, j, t, x);

    double val = 0.0;
    if (policy.kind == FeedbackPolicy::Kind::bang_bang) {
        const double s = switching(j);
        if (std::abs(s) < policy.deadband)
            val = prev_u.empty() ? 0.0 : prev_u.at(j);
        else
            val = s > 0.0 ? lo : hi;
        if (!std::isfinite(val))
            throw std::runtime_error("extract_control: bang-bang needs a bounded input box");
    } else {
        val = -switching(j) / (2.0 * policy.c_u);
    }
    u[j] = std::clamp(val, lo, hi);
    for (int o = 0; o < m; ++o) {
        if (o == j) continue;
        const auto [l2, h2] = admissible_interval(problem, policy, o, t, x);
        u[o] = std::clamp(0.0, l2, h2);
    }
    return u;
}

std::string to_csv(const Trajectory& trajectory) {
    std::ostringstream os;
    const int n = trajectory.samples.empty() ? 0 : static_cast<int>(trajectory.samples[0].x.size());
    const int m = trajectory.samples.empty() ? 0 : static_cast<int>(trajectory.samples[0].u.size());
    os << "t";
    for (int i = 1; i <= n; ++i) os << ",x" << i;
    for (int j = 1; j <= m; ++j) os << ",u" << j;
    os << ",running_cost\n";
    char buf[40];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        os << buf;
    };
    for (std::size_t k = 0; k < trajectory.samples.size(); ++k) {
        const TrajectorySample& s = trajectory.samples[k];
        put(s.t);
        for (double xi : s.x) {
            os << ',';
            put(xi);
        }
        for (double uj : s.u) {
            os << ',';
            put(uj);
        }
        os << ',';
        put(k < trajectory.running_cost.size() ? trajectory.running_cost[k] : 0.0);
        os << '\n';
    }
    return os.str();
}

Controller make_controller(const ValueFunction& vf, const OcpProblem& problem,
                           FeedbackPolicy policy) {
    auto prev = std::make_shared<std::vector<double>>();
    return [vf, problem, policy = std::move(policy), prev](double t,
                                                           const std::vector<double>& x) {
        *prev = extract_control(vf, problem, t, x, policy, *prev);
        return *prev;
    };
}

Trajectory simulate(const OcpProblem& problem, const Controller& controller,
                    const std::vector<double>& x0, const SimOptions& options) {
    if (options.dt <= 0.0) throw std::invalid_argument("simulate: dt must be positive");
    if (static_cast<int>(x0.size()) != problem.n_states())
        throw std::invalid_argument("simulate: initial state size mismatch");

    Stepper st(problem);
    Trajectory traj;
    const int m = problem.n_inputs();
    std::vector<double> x = x0, u_last;
    double t = 0.0, run = 0.0;

    for (;;) {
        if (!options.stop_target.empty() &&
            dist2(x, options.stop_target) <= options.stop_radius) {
            traj.reason = StopReason::target_ball;
            break;
        }
        if (!std::isfinite(inf_norm(x)) || inf_norm(x) > options.explode_norm) {
            traj.reason = StopReason::diverged;
            break;
        }
        if (!st.in_state_set(t, x, 1e-6)) {
            traj.reason = StopReason::left_box;
            break;
        }
        const double sdt = std::min(options.dt, options.t_max - t);
        if (sdt <= 1e-12) {
            traj.reason = StopReason::horizon;
            break;
        }
        std::vector<double> u = controller(t, x);
        if (static_cast<int>(u.size()) != m)
            throw std::invalid_argument("simulate: controller output size mismatch");
        traj.samples.push_back({t, x, u});
        traj.running_cost.push_back(run);
        const double h0 = st.h(t, x, u);
        std::vector<double> xn = st.rk4(t, x, u, sdt);
        run += 0.5 * sdt * (h0 + st.h(t + sdt, xn, u));
        t += sdt;
        x = std::move(xn);
        u_last = std::move(u);
    }
    traj.samples.push_back({t, x, u_last.empty() ? std::vector<double>(m, 0.0) : u_last});
    traj.running_cost.push_back(run);
    traj.cost = run + st.terminal(t, x);
    return traj;
}

namespace {

// Uniform probability moments over {x in box : g(x) >= 0 for all g}, by
// rejection sampling. Returns false when nothing was accepted.
bool monte_carlo_moments(const std::vector<double>& lo, const std::vector<double>& hi,
                         const std::vector<const Polynomial*>& gs, const VarSpace& space,
                         const Basis& basis, std::mt19937& rng, int samples, MomentVector& out) {
    const int n = static_cast<int>(lo.size());
    std::vector<std::uniform_real_distribution<double>> dist;
    dist.reserve(n);
    for (int i = 0; i < n; ++i) dist.emplace_back(lo[i], hi[i]);

    std::vector<double> vals(basis.size(), 0.0);
    std::vector<double> xs(n), pt(space.dim(), 0.0);
    long kept = 0;
    for (int s = 0; s < samples; ++s) {
        for (int i = 0; i < n; ++i) {
            xs[i] = dist[i](rng);
            pt[space.state_index(i)] = xs[i];
        }
        bool ok = true;
        for (const Polynomial* g : gs)
            if (g->evaluate(pt) < 0.0) {
                ok = false;
                break;
            }
        if (!ok) continue;
        ++kept;
        for (int i = 0; i < basis.size(); ++i) {
            const Exponents& e = basis.monomial(i);
            double v = 1.0;
            for (int d = 0; d < n; ++d)
                for (int rep = 0; rep < e[basis.space().state_index(d)]; ++rep) v *= xs[d];
            vals[i] += v;
        }
    }
    if (kept == 0) return false;
    for (double& v : vals) v /= static_cast<double>(kept);
    out = MomentVector{basis, std::move(vals)};
    return true;
}

}  // namespace

Trajectory receding_horizon(const OcpProblem& problem, const std::vector<double>& x0,
                            RelaxationOrder order, const RecedingOptions& options) {
    const int n = problem.n_states(), m = problem.n_inputs();
    if (static_cast<int>(x0.size()) != n)
        throw std::invalid_argument("receding_horizon: initial state size mismatch");
    if (options.rho <= 0.0) throw std::invalid_argument("receding_horizon: rho must be positive");
    if (options.dt <= 0.0) throw std::invalid_argument("receding_horizon: dt must be positive");

    std::vector<double> target = options.target;
    if (target.empty())
        target = problem.final_mode == FinalMode::singleton ? problem.x_T
                                                            : std::vector<double>(n, 0.0);

    // assembled once; re-centering the initial measure only swaps equality
    // right-hand sides
    OcpProblem local = problem;
    local.initial = InitialMeasure::dirac(x0);
    RelaxationProblem rp = assemble(local, order);

    std::vector<const Polynomial*> state_g;
    for (const Polynomial& g : problem.C_T.constraints)
        if (!mentions_input(g, problem.space)) state_g.push_back(&g);

    Stepper st(problem);
    Trajectory traj;
    std::vector<double> x = x0, u_prev;
    double t = 0.0, run = 0.0;
    long steps = 0;
    bool mc_noted = false;
    bool loose_noted = false;
    std::mt19937 rng(options.seed);

    auto finish = [&](StopReason why) {
        traj.reason = why;
        traj.samples.push_back({t, x, u_prev.empty() ? std::vector<double>(m, 0.0) : u_prev});
        traj.running_cost.push_back(run);
        traj.cost = run + st.terminal(t, x);
        return traj;
    };

    for (;;) {
        if (dist2(x, target) <= options.radius) return finish(StopReason::target_ball);
        if (!std::isfinite(inf_norm(x)) || inf_norm(x) > 1e6)
            return finish(StopReason::diverged);

        // box around the current state, clipped to the feasible states
        std::vector<double> lo(n), hi(n);
        for (int i = 0; i < n; ++i) {
            lo[i] = x[i] - options.rho;
            hi[i] = x[i] + options.rho;
        }
        bool exact = true;
        for (const Polynomial* gp : state_g) {
            const Polynomial& g = *gp;
            // single-state affine cuts clip the box exactly
            if (g.degree() <= 1) {
                int which = -1;
                double slope = 0.0;
                bool axis = true;
                for (const auto& [e, coef] : g.terms()) {
                    if (total_degree(e) == 0) continue;
                    int v = 0;
                    while (e[v] == 0) ++v;
                    if (which == -1 && problem.space.is_state(v)) {
                        which = v;
                        slope = coef;
                    } else {
                        axis = false;
                    }
                }
                if (axis && which >= 0) {
                    const int i = which - problem.space.state_index(0);
                    const double c = g.constant_term();
                    if (slope > 0.0)
                        lo[i] = std::max(lo[i], -c / slope);
                    else
                        hi[i] = std::min(hi[i], -c / slope);
                    continue;
                }
                if (axis && which == -1) continue;  // constant constraint
            }
            // anything else that bites the box sends us to rejection sampling
            for (unsigned corner = 0; corner < (1u << n) && exact; ++corner) {
                std::vector<double> xc(n);
                for (int i = 0; i < n; ++i) xc[i] = (corner >> i) & 1u ? hi[i] : lo[i];
                st.load(0.0, xc, {});
                if (g.evaluate(st.pt) < -1e-12) exact = false;
            }
        }
        for (int i = 0; i < n; ++i) {
            if (lo[i] > hi[i]) {
                traj.notes.push_back("feasible box around " + point_str(x) + " is empty");
                return finish(StopReason::diverged);
            }
            if (hi[i] - lo[i] < 1e-9) {  // degenerate slab; nudge to keep moments finite
                const double mid = 0.5 * (lo[i] + hi[i]);
                lo[i] = mid - 5e-10;
                hi[i] = mid + 5e-10;
            }
        }

        MomentVector w{rp.system.w_basis, std::vector<double>(rp.system.w_basis.size(), 0.0)};
        if (exact) {
            w = uniform_box_moments(lo, hi, rp.system.w_basis);
        } else {
            if (!mc_noted) {
                traj.notes.push_back("monte carlo moments: seed=" + std::to_string(options.seed) +
                                     " samples=" + std::to_string(options.mc_samples));
                mc_noted = true;
            }
            if (!monte_carlo_moments(lo, hi, state_g, problem.space, rp.system.w_basis, rng,
                                     options.mc_samples, w)) {
                traj.notes.push_back("no feasible samples in the box around " + point_str(x));
                return finish(StopReason::diverged);
            }
        }

        set_initial_moments(rp, w);
        const RelaxationSolution sol = solve_relaxation(rp, local, options.solver);
        if (sol.report.status == SolveStatus::infeasible ||
            sol.report.status == SolveStatus::unbounded) {
            traj.notes.push_back("relaxation " + to_string(sol.report.status) + " at t=" + fmt(t));
            return finish(StopReason::diverged);
        }
        // max_iter/numerical iterates still carry a usable steering certificate
        if (sol.report.status != SolveStatus::optimal && !loose_noted) {
            traj.notes.push_back("relaxation " + to_string(sol.report.status) + " at t=" + fmt(t) +
                                 "; steering with the last iterate");
            loose_noted = true;
        }
        const ValueFunction vf(sol.certificate.phi, order.r,
                               "uniform_box " + point_str(lo) + " - " + point_str(hi));

        // steer with this value function until the state leaves the box
        const std::vector<double> xbar = x;
        for (;;) {
            if (dist2(x, target) <= options.radius) return finish(StopReason::target_ball);
            bool inside = true;
            for (int i = 0; i < n; ++i)
                if (std::abs(x[i] - xbar[i]) > options.rho) inside = false;
            if (!inside) break;
            if (steps >= options.max_steps) {
                traj.notes.push_back("step cap reached");
                return finish(StopReason::horizon);
            }
            std::vector<double> u = extract_control(vf, problem, t, x, options.policy, u_prev);
            traj.samples.push_back({t, x, u});
            traj.running_cost.push_back(run);
            const double h0 = st.h(t, x, u);
            std::vector<double> xn = st.rk4(t, x, u, options.dt);
            run += 0.5 * options.dt * (h0 + st.h(t + options.dt, xn, u));
            t += options.dt;
            x = std::move(xn);
            u_prev = std::move(u);
            ++steps;
            if (!std::isfinite(inf_norm(x))) return finish(StopReason::diverged);
        }
    }
}

double gap(double upper, double lower) {
    if (upper + lower <= 0.0)
        throw std::domain_error("gap: UB + LB must be positive");
    return 2.0 * (upper - lower) / (upper + lower);
}

CertificateReport upper_bound_certificate(const OcpProblem& problem,
                                          const std::vector<Polynomial>& feedback,
                                          const SemialgebraicSet& S, RelaxationOrder order,
                                          const SolveOptions& options) {
    const VarSpace& sp = problem.space;
    const int n = problem.n_states(), m = problem.n_inputs();
    if (static_cast<int>(feedback.size()) != m)
        throw std::invalid_argument("upper_bound_certificate: one feedback polynomial per input");
    if (S.constraints.empty())
        throw std::invalid_argument(
            "upper_bound_certificate: the region needs at least one constraint");
    if (problem.horizon.is_fixed())
        throw std::invalid_argument("upper_bound_certificate: needs a free-time problem");
    for (const Polynomial& p : feedback) {
        if (!(p.space() == sp))
            throw std::invalid_argument(
                "upper_bound_certificate: feedback must live over the problem variables");
        if (p.depends_on(sp.time_index()) || mentions_input(p, sp))
            throw std::invalid_argument(
                "upper_bound_certificate: feedback must be a state-only polynomial");
    }

    // close the loop: u = p(x) in both the dynamics and the running cost
    std::vector<Polynomial> fcl = problem.f;
    Polynomial hcl = problem.h;
    for (int j = 0; j < m; ++j) {
        for (Polynomial& fi : fcl) fi = fi.substitute(sp.input_index(j), feedback[j]);
        hcl = hcl.substitute(sp.input_index(j), feedback[j]);
    }

    const VarSpace cls(true, n, 0);
    std::vector<int> to_cls(sp.dim(), -1);
    to_cls[sp.time_index()] = cls.time_index();
    for (int i = 0; i < n; ++i) to_cls[sp.state_index(i)] = cls.state_index(i);

    CertificateReport rep;

    SemialgebraicSet states{SetScope::time_state_input, {}};
    for (const Polynomial& g : problem.C_T.constraints) {
        if (mentions_input(g, sp)) {
            rep.notes.push_back("dropped input-dependent trajectory constraint " + g.to_string());
            continue;
        }
        states.constraints.push_back(map_variables(g, cls, to_cls));
    }
    SemialgebraicSet region{SetScope::state_only, {}};
    for (const Polynomial& g : S.constraints)
        region.constraints.push_back(map_variables(g, cls, to_cls));

    std::vector<Polynomial> f_cls;
    f_cls.reserve(n);
    for (const Polynomial& fi : fcl) f_cls.push_back(map_variables(fi, cls, to_cls));

    OcpProblem cert{.space = cls,
                    .f = f_cls,
                    .h = map_variables(hcl, cls, to_cls),
                    .H = Polynomial(cls),
                    .C_I = region,
                    .C_T = states,
                    .C_F = {SetScope::state_only, states.constraints},
                    .horizon = Horizon::free_time(),
                    .initial = InitialMeasure::unknown(),
                    .final_mode = FinalMode::free_final,
                    .x_T = {}};

    RelaxationOrder ord = order_for(cert, order.r);
    ord.k = std::max(ord.k, order.k);

    const RelaxationProblem rp = assemble(cert, ord, ObjectiveSense::maximize);
    const RelaxationSolution sol = solve_relaxation(rp, cert, options);
    rep.report = sol.report;
    rep.bounded = sol.report.status == SolveStatus::optimal;
    rep.bound = rep.bounded ? sol.report.dual_bound : kInf;
    if (sol.report.status == SolveStatus::unbounded)
        rep.notes.push_back("relaxation unbounded: no certificate at this order");
    else if (!rep.bounded)
        rep.notes.push_back("relaxation " + to_string(sol.report.status));

    // local behaviour at the target: eigenvalues of the closed-loop Jacobian
    std::vector<double> xstar =
        problem.final_mode == FinalMode::singleton ? problem.x_T : std::vector<double>(n, 0.0);
    const std::vector<double> pt = full_point(cls, 0.0, xstar, {});
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            A(i, j) = f_cls[i].partial_derivative(cls.state_index(j)).evaluate(pt);
    const Eigen::EigenSolver<Eigen::MatrixXd> eig(A);
    rep.linearization.reserve(n);
    for (int i = 0; i < n; ++i) rep.linearization.push_back(eig.eigenvalues()[i]);
    return rep;
}

double double_integrator_min_time(const std::vector<double>& x) {
    if (x.size() != 2) throw std::invalid_argument("double_integrator_min_time: need (x1, x2)");
    const double x1 = x[0], x2 = x[1];
    if (x2 < -1.0)
        throw std::domain_error("double_integrator_min_time: defined for x2 >= -1 only");
    const double half = 0.5 * x2 * x2;
    const double sgn = x2 > 0.0 ? 1.0 : (x2 < 0.0 ? -1.0 : 0.0);
    if (x1 >= 1.0 - half) return half + x1 + x2 + 1.0;
    if (x1 >= -half * sgn) return 2.0 * std::sqrt(half + x1) + x2;
    return 2.0 * std::sqrt(half - x1) - x2;
}

}  // namespace mocp
