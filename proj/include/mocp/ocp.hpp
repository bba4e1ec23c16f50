#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mocp/momentbasis.hpp"
#include "mocp/poly.hpp"

namespace mocp {

// Which problem variables a set's constraints may mention.
enum class SetScope { state_only, time_state_input };

// {v : p(v) >= 0 for all p in constraints}; empty list = whole space.
// Polynomials are expressed over the problem's full (t,x,u) space.
struct SemialgebraicSet {
    SetScope scope = SetScope::state_only;
    std::vector<Polynomial> constraints;
};

struct Horizon {
    enum class Mode { fixed, free_time_invariant };
    Mode mode = Mode::fixed;
    double T = 0.0;  // meaningful for fixed only

    static Horizon fixed(double T);
    static Horizon free_time();
    bool is_fixed() const { return mode == Mode::fixed; }
};

struct InitialMeasure {
    enum class Kind { dirac, uniform_box, uniform_segment, explicit_moments, unknown };
    Kind kind = Kind::dirac;
    std::vector<double> x0;      // dirac
    std::vector<double> lo, hi;  // uniform_box
    std::vector<double> p0, p1;  // uniform_segment
    std::optional<MomentVector> moments;  // explicit_moments, over an x-only basis

    static InitialMeasure dirac(std::vector<double> x0);
    static InitialMeasure uniform_box(std::vector<double> lo, std::vector<double> hi);
    static InitialMeasure uniform_segment(std::vector<double> p0, std::vector<double> p1);
    static InitialMeasure explicit_moments(MomentVector mv);
    static InitialMeasure unknown();
};

enum class FinalMode { free_final, singleton, constrained };

// min  integral of h(t,x,u) dt + H(x(T))   subject to  dx/dt = f(t,x,u),
// x(0) ~ initial measure on C_I, (t,x,u) in C_T along the way, x(T) in C_F.
struct OcpProblem {
    VarSpace space;  // (t, x1..xn, u1..um); time var present even in free-time mode
    std::vector<Polynomial> f;
    Polynomial h;
    Polynomial H;
    SemialgebraicSet C_I;  // state_only
    SemialgebraicSet C_T;  // time_state_input
    SemialgebraicSet C_F;  // state_only
    Horizon horizon;
    InitialMeasure initial;
    FinalMode final_mode = FinalMode::free_final;
    std::vector<double> x_T;  // singleton target, size n when final_mode == singleton

    int n_states() const { return space.n_states(); }
    int n_inputs() const { return space.n_inputs(); }
};

// Human-readable consistency findings; empty means the problem is well formed.
std::vector<std::string> validate(const OcpProblem& problem);

// Heuristic check that C_T visibly bounds every state/input (and the moment
// relaxations therefore stand on compact support). Advisory only; the CLI
// surfaces these, validate() does not.
std::vector<std::string> compactness_warnings(const OcpProblem& problem);

// Affine change of variables x = c + s*xs, u = cu + su*us, t = time_scale*ts
// taking the given boxes to [-1,1]^n. Values are preserved exactly.
struct ScaleMaps {
    std::vector<double> c, s;    // state offset/half-width
    std::vector<double> cu, su;  // input offset/half-width (empty if no inputs)
    double time_scale = 1.0;

    std::vector<double> to_scaled_state(const std::vector<double>& x) const;
    std::vector<double> from_scaled_state(const std::vector<double>& xs) const;
    std::vector<double> to_scaled_input(const std::vector<double>& u) const;
    std::vector<double> from_scaled_input(const std::vector<double>& us) const;
    double to_scaled_time(double t) const { return t / time_scale; }
    double from_scaled_time(double ts) const { return ts * time_scale; }
};

std::pair<OcpProblem, ScaleMaps> scale(const OcpProblem& problem,
                                       const std::vector<double>& state_lo,
                                       const std::vector<double>& state_hi,
                                       const std::vector<double>& input_lo,
                                       const std::vector<double>& input_hi,
                                       double time_scale);

}  // namespace mocp
