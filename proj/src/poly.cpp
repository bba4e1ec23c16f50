#include "mocp/poly.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

namespace mocp {

namespace {
constexpr double kDropTol = 0.0;  // exact-zero removal only; arithmetic keeps tiny coeffs

void check_same_space(const VarSpace& a, const VarSpace& b) {
    if (!(a == b)) throw std::invalid_argument("Polynomial: mixed variable spaces");
}
}  // namespace

std::string VarSpace::name(int var) const {
    if (has_time_ && var == 0) return "t";
    if (is_state(var)) return "x" + std::to_string(var - state_index(0) + 1);
    if (is_input(var)) return "u" + std::to_string(var - input_index(0) + 1);
    throw std::out_of_range("VarSpace::name: bad variable index");
}

int total_degree(const Exponents& e) {
    return std::accumulate(e.begin(), e.end(), 0);
}

bool GradedLexLess::operator()(const Exponents& a, const Exponents& b) const {
    const int da = total_degree(a), db = total_degree(b);
    if (da != db) return da < db;
    // Same degree: a precedes b when a is lex-greater (more weight on early
    // variables), so x1^2 < x1*x2 < x2^2 in the ordering.
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

Polynomial Polynomial::constant(const VarSpace& space, double c) {
    Polynomial p(space);
    p.add_term(Exponents(space.dim(), 0), c);
    return p;
}

Polynomial Polynomial::variable(const VarSpace& space, int var) {
    if (var < 0 || var >= space.dim())
        throw std::out_of_range("Polynomial::variable: bad index");
    Exponents e(space.dim(), 0);
    e[var] = 1;
    return monomial(space, e, 1.0);
}

Polynomial Polynomial::monomial(const VarSpace& space, const Exponents& alpha, double coef) {
    if (static_cast<int>(alpha.size()) != space.dim())
        throw std::invalid_argument("Polynomial::monomial: exponent width mismatch");
    for (int e : alpha)
        if (e < 0) throw std::invalid_argument("Polynomial::monomial: negative exponent");
    Polynomial p(space);
    p.add_term(alpha, coef);
    return p;
}

bool Polynomial::is_constant() const {
    return terms_.empty() ||
           (terms_.size() == 1 && total_degree(terms_.begin()->first) == 0);
}

int Polynomial::degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, total_degree(e));
    return d;
}

int Polynomial::degree_in(int var) const {
    int d = 0;
    for (const auto& [e, c] : terms_) d = std::max(d, e[var]);
    return d;
}

double Polynomial::coefficient(const Exponents& alpha) const {
    auto it = terms_.find(alpha);
    return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::constant_term() const {
    return coefficient(Exponents(space_.dim(), 0));
}

Polynomial& Polynomial::add_term(const Exponents& alpha, double coef) {
    if (static_cast<int>(alpha.size()) != space_.dim())
        throw std::invalid_argument("Polynomial::add_term: exponent width mismatch");
    auto [it, inserted] = terms_.try_emplace(alpha, 0.0);
    it->second += coef;
    if (std::abs(it->second) <= kDropTol) terms_.erase(it);
    return *this;
}

Polynomial Polynomial::operator-() const {
    Polynomial r(space_);
    for (const auto& [e, c] : terms_) r.terms_.emplace(e, -c);
    return r;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
    check_same_space(space_, o.space_);
    Polynomial r = *this;
    for (const auto& [e, c] : o.terms_) r.add_term(e, c);
    return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
    check_same_space(space_, o.space_);
    Polynomial r = *this;
    for (const auto& [e, c] : o.terms_) r.add_term(e, -c);
    return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
    check_same_space(space_, o.space_);
    Polynomial r(space_);
    const int d = space_.dim();
    Exponents sum(d);
    for (const auto& [ea, ca] : terms_) {
        for (const auto& [eb, cb] : o.terms_) {
            for (int i = 0; i < d; ++i) sum[i] = ea[i] + eb[i];
            r.add_term(sum, ca * cb);
        }
    }
    return r;
}

Polynomial Polynomial::operator*(double c) const {
    Polynomial r(space_);
    if (c == 0.0) return r;
    for (const auto& [e, k] : terms_) r.terms_.emplace(e, k * c);
    return r;
}

Polynomial Polynomial::operator/(double c) const {
    if (c == 0.0) throw std::invalid_argument("Polynomial: division by zero");
    return *this * (1.0 / c);
}

Polynomial Polynomial::pow(int e) const {
    if (e < 0) throw std::invalid_argument("Polynomial::pow: negative exponent");
    Polynomial r = constant(space_, 1.0);
    for (int i = 0; i < e; ++i) r = r * (*this);
    return r;
}

bool Polynomial::same_terms(const Polynomial& o, double tol) const {
    Polynomial diff = *this - o;
    for (const auto& [e, c] : diff.terms_)
        if (std::abs(c) > tol) return false;
    return true;
}

double Polynomial::evaluate(const std::vector<double>& point) const {
    if (static_cast<int>(point.size()) != space_.dim())
        throw std::invalid_argument("Polynomial::evaluate: point width mismatch");
    double acc = 0.0;
    for (const auto& [e, c] : terms_) {
        double m = c;
        for (std::size_t i = 0; i < point.size(); ++i) {
            for (int k = 0; k < e[i]; ++k) m *= point[i];
        }
        acc += m;
    }
    return acc;
}

Polynomial Polynomial::partial_derivative(int var) const {
    if (var < 0 || var >= space_.dim())
        throw std::out_of_range("Polynomial::partial_derivative: bad index");
    Polynomial r(space_);
    for (const auto& [e, c] : terms_) {
        if (e[var] == 0) continue;
        Exponents d = e;
        d[var] -= 1;
        r.add_term(d, c * e[var]);
    }
    return r;
}

Polynomial Polynomial::substitute(int var, const Polynomial& value) const {
    if (var < 0 || var >= space_.dim())
        throw std::out_of_range("Polynomial::substitute: bad index");
    check_same_space(space_, value.space_);
    // Cache powers of the replacement; exponents in var are usually small.
    std::vector<Polynomial> powers = {constant(space_, 1.0)};
    Polynomial r(space_);
    for (const auto& [e, c] : terms_) {
        while (static_cast<int>(powers.size()) <= e[var])
            powers.push_back(powers.back() * value);
        Exponents rest = e;
        rest[var] = 0;
        r = r + monomial(space_, rest, c) * powers[e[var]];
    }
    return r;
}

std::string Polynomial::to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream out;
    bool first = true;
    for (const auto& [e, c] : terms_) {
        const double mag = std::abs(c);
        if (first) {
            if (c < 0) out << "-";
            first = false;
        } else {
            out << (c < 0 ? " - " : " + ");
        }
        const bool has_vars = total_degree(e) > 0;
        std::ostringstream coef;
        coef.precision(17);
        coef << mag;
        if (!has_vars || coef.str() != "1") {
            out << coef.str();
            if (has_vars) out << "*";
        }
        bool first_var = true;
        for (int i = 0; i < space_.dim(); ++i) {
            if (e[i] == 0) continue;
            if (!first_var) out << "*";
            first_var = false;
            out << space_.name(i);
            if (e[i] > 1) out << "^" << e[i];
        }
    }
    return out.str();
}

Polynomial lie_derivative(const Polynomial& test, const std::vector<Polynomial>& f) {
    const VarSpace& sp = test.space();
    if (static_cast<int>(f.size()) != sp.n_states())
        throw std::invalid_argument("lie_derivative: f must have one entry per state");
    for (int j = 0; j < sp.n_inputs(); ++j)
        if (test.depends_on(sp.input_index(j)))
            throw std::invalid_argument("lie_derivative: test function mentions an input variable");
    Polynomial r(sp);
    if (sp.has_time()) r = r + test.partial_derivative(sp.time_index());
    for (int i = 0; i < sp.n_states(); ++i) {
        check_same_space(sp, f[i].space());
        r = r + test.partial_derivative(sp.state_index(i)) * f[i];
    }
    return r;
}

Polynomial map_variables(const Polynomial& p, const VarSpace& target,
                         const std::vector<int>& target_of_source) {
    if (static_cast<int>(target_of_source.size()) != p.space().dim())
        throw std::invalid_argument("map_variables: map width != source dimension");
    Polynomial r(target);
    Exponents e(target.dim());
    for (const auto& [src, c] : p.terms()) {
        std::fill(e.begin(), e.end(), 0);
        for (std::size_t v = 0; v < src.size(); ++v) {
            if (src[v] == 0) continue;
            const int tv = target_of_source[v];
            if (tv < 0)
                throw std::invalid_argument("map_variables: polynomial mentions variable " +
                                            p.space().name(static_cast<int>(v)) +
                                            " outside the target space");
            if (tv >= target.dim())
                throw std::out_of_range("map_variables: target index out of range");
            e[tv] += src[v];
        }
        r.add_term(e, c);
    }
    return r;
}

namespace {

class Parser {
public:
    Parser(const std::string& text, const VarSpace& space) : text_(text), space_(space) {}

    Polynomial run() {
        Polynomial p = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return p;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    Polynomial parse_expr() {
        bool neg = false;
        skip_ws();
        if (eat('+')) {
        } else if (eat('-')) {
            neg = true;
        }
        Polynomial acc = parse_term();
        if (neg) acc = -acc;
        while (true) {
            if (eat('+')) acc = acc + parse_term();
            else if (eat('-')) acc = acc - parse_term();
            else break;
        }
        return acc;
    }

    Polynomial parse_term() {
        Polynomial acc = parse_factor();
        while (true) {
            if (eat('*')) {
                acc = acc * parse_factor();
            } else if (eat('/')) {
                skip_ws();
                const std::size_t at = pos_;
                Polynomial divisor = parse_factor();
                if (!divisor.is_constant())
                    throw ParseError("division only by numeric constants", at);
                const double c = divisor.constant_term();
                if (c == 0.0) throw ParseError("division by zero", at);
                acc = acc / c;
            } else {
                break;
            }
        }
        return acc;
    }

    Polynomial parse_factor() {
        Polynomial base = parse_base();
        if (eat('^')) {
            const std::size_t at = pos_;
            skip_ws();
            if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
                throw ParseError("expected nonnegative integer exponent", at);
            int e = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                e = e * 10 + (text_[pos_] - '0');
                if (e > 1000) throw ParseError("exponent too large", at);
                ++pos_;
            }
            return base.pow(e);
        }
        return base;
    }

    Polynomial parse_base() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            Polynomial inner = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (c == 't' || c == 'x' || c == 'u') return parse_var();
        fail("expected number, variable, or '('");
    }

    Polynomial parse_number() {
        const std::size_t start = pos_;
        std::size_t consumed = 0;
        double v = 0.0;
        try {
            v = std::stod(text_.substr(start), &consumed);
        } catch (const std::exception&) {
            fail("malformed number");
        }
        // std::stod accepts leading signs / exponents; restrict the consumed
        // span to digits, '.', and exponent syntax starting at a digit or dot.
        pos_ = start + consumed;
        return Polynomial::constant(space_, v);
    }

    Polynomial parse_var() {
        const std::size_t at = pos_;
        const char kind = text_[pos_++];
        if (kind == 't') {
            if (!space_.has_time()) throw ParseError("variable 't' not in scope", at);
            return Polynomial::variable(space_, space_.time_index());
        }
        if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
            throw ParseError("expected variable index", pos_);
        int idx = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            idx = idx * 10 + (text_[pos_] - '0');
            if (idx > 10000) throw ParseError("variable index too large", at);
            ++pos_;
        }
        if (kind == 'x') {
            if (idx < 1 || idx > space_.n_states())
                throw ParseError("state index out of range", at);
            return Polynomial::variable(space_, space_.state_index(idx - 1));
        }
        if (idx < 1 || idx > space_.n_inputs())
            throw ParseError("input index out of range", at);
        return Polynomial::variable(space_, space_.input_index(idx - 1));
    }

    const std::string& text_;
    const VarSpace& space_;
    std::size_t pos_ = 0;
};

}  // namespace

Polynomial parse(const std::string& text, const VarSpace& space) {
    return Parser(text, space).run();
}

}  // namespace mocp
