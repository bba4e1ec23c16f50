#include "mocp/ocp.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mocp {

Horizon Horizon::fixed(double T) {
    if (!(T > 0.0)) throw std::invalid_argument("Horizon::fixed: T must be positive");
    Horizon h;
    h.mode = Mode::fixed;
    h.T = T;
    return h;
}

Horizon Horizon::free_time() {
    Horizon h;
    h.mode = Mode::free_time_invariant;
    return h;
}

InitialMeasure InitialMeasure::dirac(std::vector<double> x0) {
    InitialMeasure m;
    m.kind = Kind::dirac;
    m.x0 = std::move(x0);
    return m;
}

InitialMeasure InitialMeasure::uniform_box(std::vector<double> lo, std::vector<double> hi) {
    InitialMeasure m;
    m.kind = Kind::uniform_box;
    m.lo = std::move(lo);
    m.hi = std::move(hi);
    return m;
}

InitialMeasure InitialMeasure::uniform_segment(std::vector<double> p0, std::vector<double> p1) {
    InitialMeasure m;
    m.kind = Kind::uniform_segment;
    m.p0 = std::move(p0);
    m.p1 = std::move(p1);
    return m;
}

InitialMeasure InitialMeasure::explicit_moments(MomentVector mv) {
    InitialMeasure m;
    m.kind = Kind::explicit_moments;
    m.moments = std::move(mv);
    return m;
}

InitialMeasure InitialMeasure::unknown() {
    InitialMeasure m;
    m.kind = Kind::unknown;
    return m;
}

namespace {

bool is_state_only(const Polynomial& p, const VarSpace& sp) {
    if (sp.has_time() && p.depends_on(sp.time_index())) return false;
    for (int j = 0; j < sp.n_inputs(); ++j)
        if (p.depends_on(sp.input_index(j))) return false;
    return true;
}

void check_set(const OcpProblem& pb, const SemialgebraicSet& set, const std::string& name,
               std::vector<std::string>& out) {
    for (const Polynomial& p : set.constraints) {
        if (!(p.space() == pb.space)) {
            out.push_back(name + ": constraint over a different variable space");
            continue;
        }
        if (set.scope == SetScope::state_only && !is_state_only(p, pb.space))
            out.push_back(name + ": constraint '" + p.to_string() +
                          "' mentions time or input variables in a state-only set");
    }
}

}  // namespace

std::vector<std::string> validate(const OcpProblem& pb) {
    std::vector<std::string> out;
    const VarSpace& sp = pb.space;
    const int n = sp.n_states();

    if (!sp.has_time()) out.push_back("problem space must include the time variable");

    if (static_cast<int>(pb.f.size()) != n) {
        std::ostringstream msg;
        msg << "dynamics arity: expected " << n << " entries, got " << pb.f.size();
        out.push_back(msg.str());
    }
    for (const Polynomial& fi : pb.f)
        if (!(fi.space() == sp)) out.push_back("dynamics entry over a different variable space");
    if (!(pb.h.space() == sp)) out.push_back("running cost over a different variable space");
    if (!(pb.H.space() == sp)) out.push_back("terminal cost over a different variable space");

    if (!is_state_only(pb.H, sp))
        out.push_back("terminal cost mentions time or input variables");

    if (pb.C_I.scope != SetScope::state_only) out.push_back("C_I scope must be state-only");
    if (pb.C_F.scope != SetScope::state_only) out.push_back("C_F scope must be state-only");
    if (pb.C_T.scope != SetScope::time_state_input)
        out.push_back("C_T scope must be time-state-input");
    check_set(pb, pb.C_I, "C_I", out);
    check_set(pb, pb.C_T, "C_T", out);
    check_set(pb, pb.C_F, "C_F", out);

    if (pb.horizon.is_fixed()) {
        if (!(pb.horizon.T > 0.0)) out.push_back("fixed horizon requires T > 0");
    } else if (sp.has_time()) {
        auto mentions_t = [&](const Polynomial& p) { return p.depends_on(sp.time_index()); };
        for (const Polynomial& fi : pb.f)
            if (mentions_t(fi)) out.push_back("time-dependent dynamics in free-time mode");
        if (mentions_t(pb.h)) out.push_back("time-dependent running cost in free-time mode");
        for (const Polynomial& g : pb.C_T.constraints)
            if (mentions_t(g)) out.push_back("time-dependent C_T constraint in free-time mode");
    }

    switch (pb.final_mode) {
        case FinalMode::singleton: {
            if (static_cast<int>(pb.x_T.size()) != n) {
                out.push_back("singleton final state has wrong dimension");
                break;
            }
            std::vector<double> pt(sp.dim(), 0.0);
            for (int i = 0; i < n; ++i) pt[sp.state_index(i)] = pb.x_T[i];
            for (const Polynomial& g : pb.C_F.constraints) {
                if (!(g.space() == sp)) continue;
                if (g.evaluate(pt) < -1e-9)
                    out.push_back("singleton final state violates C_F constraint '" +
                                  g.to_string() + "'");
            }
            break;
        }
        case FinalMode::free_final:
        case FinalMode::constrained:
            if (!pb.x_T.empty())
                out.push_back("final target point given but final_mode is not singleton");
            break;
    }

    const InitialMeasure& im = pb.initial;
    auto check_dim = [&](const std::vector<double>& v, const std::string& what) {
        if (static_cast<int>(v.size()) != n)
            out.push_back("initial measure " + what + " has wrong dimension");
    };
    switch (im.kind) {
        case InitialMeasure::Kind::dirac:
            check_dim(im.x0, "point");
            break;
        case InitialMeasure::Kind::uniform_box:
            check_dim(im.lo, "box lower corner");
            check_dim(im.hi, "box upper corner");
            if (im.lo.size() == im.hi.size())
                for (std::size_t i = 0; i < im.lo.size(); ++i)
                    if (!(im.lo[i] < im.hi[i])) {
                        out.push_back("initial measure box is degenerate");
                        break;
                    }
            break;
        case InitialMeasure::Kind::uniform_segment:
            check_dim(im.p0, "segment start");
            check_dim(im.p1, "segment end");
            if (im.p0 == im.p1) out.push_back("initial measure segment endpoints coincide");
            break;
        case InitialMeasure::Kind::explicit_moments:
            if (!im.moments) {
                out.push_back("explicit initial moments missing");
            } else {
                const Basis& b = im.moments->basis;
                if (!(b.space() == VarSpace(false, n, 0)))
                    out.push_back("explicit initial moments not over the state space");
                if (im.moments->values.empty() ||
                    std::abs(im.moments->values[0] - 1.0) > 1e-9)
                    out.push_back("explicit initial moments must have mass 1");
            }
            break;
        case InitialMeasure::Kind::unknown:
            if (pb.C_I.constraints.empty())
                out.push_back("unknown initial measure requires a nonempty C_I description");
            break;
    }

    return out;
}

namespace {

// Does p, restricted to time/state/input var v, read as a one-sided bound?
struct BoundInfo {
    bool above = false, below = false;
};

BoundInfo univariate_bound(const Polynomial& p, int v) {
    BoundInfo b;
    int deg = 0;
    for (const auto& [e, c] : p.terms()) {
        int others = 0;
        for (std::size_t i = 0; i < e.size(); ++i)
            if (static_cast<int>(i) != v) others += e[i];
        if (others > 0) return b;  // not univariate in v
        deg = std::max(deg, e[v]);
    }
    if (deg == 0) return b;
    Exponents lead(p.space().dim(), 0);
    lead[v] = deg;
    const double L = p.coefficient(lead);
    if (deg % 2 == 0) {
        if (L < 0) b.above = b.below = true;  // a - v^2k style
    } else {
        if (L > 0) b.below = true;  // v - a >= 0
        if (L < 0) b.above = true;  // a - v >= 0
    }
    return b;
}

// Box/ball recognizer: every top-degree term is -b * w^(2k); such a constraint
// bounds each w appearing in its top-degree part in both directions.
std::set<int> ball_bounded_vars(const Polynomial& p) {
    std::set<int> vars;
    const int d = p.degree();
    if (d == 0 || d % 2 != 0) return vars;
    for (const auto& [e, c] : p.terms()) {
        if (total_degree(e) != d) continue;
        int nz = -1;
        for (std::size_t i = 0; i < e.size(); ++i) {
            if (e[i] == 0) continue;
            if (nz >= 0) return {};  // cross term at top degree
            nz = static_cast<int>(i);
        }
        if (nz < 0 || e[nz] % 2 != 0 || c >= 0) return {};
        vars.insert(nz);
    }
    return vars;
}

}  // namespace

std::vector<std::string> compactness_warnings(const OcpProblem& pb) {
    std::vector<std::string> out;
    const VarSpace& sp = pb.space;
    std::vector<int> watched;
    for (int i = 0; i < sp.n_states(); ++i) watched.push_back(sp.state_index(i));
    for (int j = 0; j < sp.n_inputs(); ++j) watched.push_back(sp.input_index(j));

    for (int v : watched) {
        BoundInfo info;
        for (const Polynomial& g : pb.C_T.constraints) {
            BoundInfo b = univariate_bound(g, v);
            info.above |= b.above;
            info.below |= b.below;
            if (ball_bounded_vars(g).count(v)) info.above = info.below = true;
        }
        if (!info.above || !info.below)
            out.push_back("C_T does not visibly bound " + sp.name(v) +
                          (info.above ? " from below" : info.below ? " from above" : "") +
                          "; moment relaxations assume compact support");
    }
    return out;
}

std::vector<double> ScaleMaps::to_scaled_state(const std::vector<double>& x) const {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) r[i] = (x[i] - c[i]) / s[i];
    return r;
}

std::vector<double> ScaleMaps::from_scaled_state(const std::vector<double>& xs) const {
    std::vector<double> r(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) r[i] = c[i] + s[i] * xs[i];
    return r;
}

std::vector<double> ScaleMaps::to_scaled_input(const std::vector<double>& u) const {
    std::vector<double> r(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) r[i] = (u[i] - cu[i]) / su[i];
    return r;
}

std::vector<double> ScaleMaps::from_scaled_input(const std::vector<double>& us) const {
    std::vector<double> r(us.size());
    for (std::size_t i = 0; i < us.size(); ++i) r[i] = cu[i] + su[i] * us[i];
    return r;
}

std::pair<OcpProblem, ScaleMaps> scale(const OcpProblem& pb,
                                       const std::vector<double>& state_lo,
                                       const std::vector<double>& state_hi,
                                       const std::vector<double>& input_lo,
                                       const std::vector<double>& input_hi,
                                       double time_scale) {
    const VarSpace& sp = pb.space;
    const int n = sp.n_states(), m = sp.n_inputs();
    if (static_cast<int>(state_lo.size()) != n || static_cast<int>(state_hi.size()) != n)
        throw std::invalid_argument("scale: state box dimension mismatch");
    if (static_cast<int>(input_lo.size()) != m || static_cast<int>(input_hi.size()) != m)
        throw std::invalid_argument("scale: input box dimension mismatch");
    if (!(time_scale > 0.0)) throw std::invalid_argument("scale: time scale must be positive");

    ScaleMaps maps;
    maps.time_scale = time_scale;
    for (int i = 0; i < n; ++i) {
        if (!(state_lo[i] < state_hi[i]))
            throw std::invalid_argument("scale: degenerate state box");
        maps.c.push_back((state_lo[i] + state_hi[i]) / 2.0);
        maps.s.push_back((state_hi[i] - state_lo[i]) / 2.0);
    }
    for (int j = 0; j < m; ++j) {
        if (!(input_lo[j] < input_hi[j]))
            throw std::invalid_argument("scale: degenerate input box");
        maps.cu.push_back((input_lo[j] + input_hi[j]) / 2.0);
        maps.su.push_back((input_hi[j] - input_lo[j]) / 2.0);
    }

    // x = c + s*xs, u = cu + su*us, t = time_scale*ts, applied variable by
    // variable (each replacement only involves its own variable).
    auto subst = [&](const Polynomial& p) {
        Polynomial r = p;
        if (sp.has_time())
            r = r.substitute(sp.time_index(),
                             Polynomial::variable(sp, sp.time_index()) * time_scale);
        for (int i = 0; i < n; ++i) {
            const int v = sp.state_index(i);
            r = r.substitute(v, Polynomial::variable(sp, v) * maps.s[i] +
                                    Polynomial::constant(sp, maps.c[i]));
        }
        for (int j = 0; j < m; ++j) {
            const int v = sp.input_index(j);
            r = r.substitute(v, Polynomial::variable(sp, v) * maps.su[j] +
                                    Polynomial::constant(sp, maps.cu[j]));
        }
        return r;
    };

    OcpProblem out = pb;
    for (int i = 0; i < n; ++i) out.f[i] = subst(pb.f[i]) * (time_scale / maps.s[i]);
    out.h = subst(pb.h) * time_scale;  // dt = time_scale * dts keeps the integral equal
    out.H = subst(pb.H);
    for (auto& g : out.C_I.constraints) g = subst(g);
    for (auto& g : out.C_T.constraints) g = subst(g);
    for (auto& g : out.C_F.constraints) g = subst(g);
    if (pb.horizon.is_fixed()) out.horizon = Horizon::fixed(pb.horizon.T / time_scale);
    if (pb.final_mode == FinalMode::singleton) out.x_T = maps.to_scaled_state(pb.x_T);

    switch (pb.initial.kind) {
        case InitialMeasure::Kind::dirac:
            out.initial = InitialMeasure::dirac(maps.to_scaled_state(pb.initial.x0));
            break;
        case InitialMeasure::Kind::uniform_box:
            out.initial = InitialMeasure::uniform_box(maps.to_scaled_state(pb.initial.lo),
                                                      maps.to_scaled_state(pb.initial.hi));
            break;
        case InitialMeasure::Kind::uniform_segment:
            out.initial = InitialMeasure::uniform_segment(maps.to_scaled_state(pb.initial.p0),
                                                          maps.to_scaled_state(pb.initial.p1));
            break;
        case InitialMeasure::Kind::explicit_moments: {
            // new moment of xs^alpha = old moment of prod ((x_i - c_i)/s_i)^alpha_i
            const MomentVector& old = *pb.initial.moments;
            const VarSpace& xs = old.basis.space();
            MomentVector neu{old.basis, {}};
            neu.values.reserve(old.basis.size());
            for (const auto& alpha : old.basis.monomials()) {
                Polynomial q = Polynomial::constant(xs, 1.0);
                for (int i = 0; i < n; ++i) {
                    Polynomial lin = (Polynomial::variable(xs, i) -
                                      Polynomial::constant(xs, maps.c[i])) /
                                     maps.s[i];
                    q = q * lin.pow(alpha[i]);
                }
                double v = 0.0;
                for (const auto& [e, coef] : q.terms()) v += coef * old[old.basis.index(e)];
                neu.values.push_back(v);
            }
            out.initial = InitialMeasure::explicit_moments(std::move(neu));
            break;
        }
        case InitialMeasure::Kind::unknown:
            break;  // C_I polynomials already substituted
    }

    return {std::move(out), std::move(maps)};
}

}  // namespace mocp
