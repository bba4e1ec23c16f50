#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mocp {

// Variable layout shared by every module: t first (when present), then the
// states x1..xn, then the inputs u1..um. Indices are stable and contiguous.
class VarSpace {
public:
    VarSpace(bool has_time, int n_states, int n_inputs)
        : has_time_(has_time), n_states_(n_states), n_inputs_(n_inputs) {
        if (n_states_ < 1) throw std::invalid_argument("VarSpace: n_states must be >= 1");
        if (n_inputs_ < 0) throw std::invalid_argument("VarSpace: n_inputs must be >= 0");
    }

    bool has_time() const { return has_time_; }
    int n_states() const { return n_states_; }
    int n_inputs() const { return n_inputs_; }
    int dim() const { return (has_time_ ? 1 : 0) + n_states_ + n_inputs_; }

    int time_index() const { return has_time_ ? 0 : -1; }
    int state_index(int i) const { return (has_time_ ? 1 : 0) + i; }  // i in [0, n)
    int input_index(int j) const { return (has_time_ ? 1 : 0) + n_states_ + j; }

    bool is_state(int var) const {
        return var >= state_index(0) && var < state_index(0) + n_states_;
    }
    bool is_input(int var) const {
        return n_inputs_ > 0 && var >= input_index(0) && var < input_index(0) + n_inputs_;
    }

    std::string name(int var) const;

    bool operator==(const VarSpace& o) const = default;

private:
    bool has_time_;
    int n_states_;
    int n_inputs_;
};

// Exponent multi-index, fixed width = space.dim().
using Exponents = std::vector<int>;

int total_degree(const Exponents& e);

// Canonical term order: graded lexicographic. Lower total degree first;
// within a degree, earlier variables dominate (x1^2, x1*x2, x2^2).
struct GradedLexLess {
    bool operator()(const Exponents& a, const Exponents& b) const;
};

using TermMap = std::map<Exponents, double, GradedLexLess>;

// Sparse multivariate polynomial over a VarSpace. Immutable in spirit: all
// operations return new values; no zero coefficients are ever stored.
class Polynomial {
public:
    explicit Polynomial(VarSpace space) : space_(space) {}

    static Polynomial constant(const VarSpace& space, double c);
    static Polynomial variable(const VarSpace& space, int var);
    static Polynomial monomial(const VarSpace& space, const Exponents& alpha, double coef);

    const VarSpace& space() const { return space_; }
    const TermMap& terms() const { return terms_; }

    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const;
    // Max total degree over stored terms; 0 for the zero polynomial.
    int degree() const;
    int degree_in(int var) const;
    bool depends_on(int var) const { return degree_in(var) > 0; }

    double coefficient(const Exponents& alpha) const;
    double constant_term() const;

    Polynomial& add_term(const Exponents& alpha, double coef);

    Polynomial operator-() const;
    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial operator*(double c) const;
    Polynomial operator/(double c) const;
    Polynomial pow(int e) const;

    bool same_terms(const Polynomial& o, double tol = 0.0) const;

    // point ordered (t, x1..xn, u1..um), length = space().dim()
    double evaluate(const std::vector<double>& point) const;

    Polynomial partial_derivative(int var) const;

    // Replace one variable by a polynomial over the same space.
    Polynomial substitute(int var, const Polynomial& value) const;

    // Canonical print: graded-lex term order, so parse(to_string()) round-trips.
    std::string to_string() const;

private:
    VarSpace space_;
    TermMap terms_;
};

inline Polynomial operator*(double c, const Polynomial& p) { return p * c; }

// d(test)/dt along dx/dt = f: returns dtest/dt + sum_i (dtest/dxi) * f_i.
// test must not mention input variables; f has one entry per state.
Polynomial lie_derivative(const Polynomial& test, const std::vector<Polynomial>& f);

// Re-express p over `target`. target_of_source[v] gives the target variable
// for source variable v, or -1 when v must not occur in p (throws if it does).
Polynomial map_variables(const Polynomial& p, const VarSpace& target,
                         const std::vector<int>& target_of_source);

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"),
          position(pos) {}
    std::size_t position;
};

// Grammar:
//   expr   := ['+'|'-'] term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := base ('^' uint)?
//   base   := number | var | '(' expr ')'
//   var    := 't' | 'x' uint | 'u' uint
// Division only by (sub)expressions that evaluate to a nonzero constant.
Polynomial parse(const std::string& text, const VarSpace& space);

}  // namespace mocp
