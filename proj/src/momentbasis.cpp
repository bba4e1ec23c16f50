#include "mocp/momentbasis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mocp {

Basis::Basis(VarSpace space, int max_degree, std::vector<Exponents> monomials)
    : space_(space), max_degree_(max_degree), monomials_(std::move(monomials)) {
    for (int i = 0; i < size(); ++i) index_.emplace(monomials_[i], i);
}

int Basis::index(const Exponents& alpha) const {
    auto it = index_.find(alpha);
    if (it == index_.end())
        throw std::out_of_range("Basis::index: monomial not in basis (degree too high?)");
    return it->second;
}

bool Basis::contains(const Exponents& alpha) const { return index_.count(alpha) > 0; }

namespace {

void enumerate_rec(int var, int remaining, Exponents& cur, std::vector<Exponents>& out) {
    if (var == static_cast<int>(cur.size())) {
        out.push_back(cur);
        return;
    }
    for (int e = 0; e <= remaining; ++e) {
        cur[var] = e;
        enumerate_rec(var + 1, remaining - e, cur, out);
    }
    cur[var] = 0;
}

}  // namespace

Basis enumerate_basis(const VarSpace& space, int max_degree) {
    if (max_degree < 0) throw std::invalid_argument("enumerate_basis: negative degree");
    std::vector<Exponents> mono;
    Exponents cur(space.dim(), 0);
    enumerate_rec(0, max_degree, cur, mono);
    std::sort(mono.begin(), mono.end(), GradedLexLess{});
    return Basis(space, max_degree, std::move(mono));
}

MomentVector dirac_moments(const std::vector<double>& x0, const Basis& basis) {
    if (static_cast<int>(x0.size()) != basis.space().dim())
        throw std::invalid_argument("dirac_moments: point dimension mismatch");
    MomentVector mv{basis, {}};
    mv.values.reserve(basis.size());
    for (const auto& alpha : basis.monomials()) {
        double v = 1.0;
        for (std::size_t i = 0; i < x0.size(); ++i)
            for (int k = 0; k < alpha[i]; ++k) v *= x0[i];
        mv.values.push_back(v);
    }
    return mv;
}

MomentVector uniform_box_moments(const std::vector<double>& lo,
                                 const std::vector<double>& hi, const Basis& basis) {
    const int d = basis.space().dim();
    if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d)
        throw std::invalid_argument("uniform_box_moments: bound dimension mismatch");
    for (int i = 0; i < d; ++i)
        if (!(lo[i] < hi[i]))
            throw std::invalid_argument(
                "uniform_box_moments: degenerate box (lo must be < hi; use the "
                "segment operation for flat directions)");
    MomentVector mv{basis, {}};
    mv.values.reserve(basis.size());
    for (const auto& alpha : basis.monomials()) {
        double v = 1.0;
        for (int i = 0; i < d; ++i) {
            const int a = alpha[i];
            v *= (std::pow(hi[i], a + 1) - std::pow(lo[i], a + 1)) /
                 ((a + 1) * (hi[i] - lo[i]));
        }
        mv.values.push_back(v);
    }
    return mv;
}

MomentVector uniform_segment_moments(const std::vector<double>& p0,
                                     const std::vector<double>& p1, const Basis& basis) {
    const int d = basis.space().dim();
    if (static_cast<int>(p0.size()) != d || static_cast<int>(p1.size()) != d)
        throw std::invalid_argument("uniform_segment_moments: endpoint dimension mismatch");
    if (p0 == p1)
        throw std::invalid_argument("uniform_segment_moments: endpoints coincide");
    MomentVector mv{basis, {}};
    mv.values.reserve(basis.size());
    // x(s) = p0 + s (p1-p0), s ~ U[0,1]. Each monomial expands to a 1-D
    // polynomial in s (repeated convolution), integrated exactly.
    for (const auto& alpha : basis.monomials()) {
        std::vector<double> coef = {1.0};  // polynomial in s
        for (int i = 0; i < d; ++i) {
            for (int k = 0; k < alpha[i]; ++k) {
                std::vector<double> next(coef.size() + 1, 0.0);
                for (std::size_t j = 0; j < coef.size(); ++j) {
                    next[j] += coef[j] * p0[i];
                    next[j + 1] += coef[j] * (p1[i] - p0[i]);
                }
                coef = std::move(next);
            }
        }
        double v = 0.0;
        for (std::size_t j = 0; j < coef.size(); ++j) v += coef[j] / (j + 1);
        mv.values.push_back(v);
    }
    return mv;
}

MatrixStructure::MatrixStructure(Basis row_basis, std::vector<Combo> upper)
    : row_basis_(std::move(row_basis)), upper_(std::move(upper)) {
    const int s = size();
    if (static_cast<int>(upper_.size()) != s * (s + 1) / 2)
        throw std::invalid_argument("MatrixStructure: upper-triangle size mismatch");
}

int MatrixStructure::packed(int i, int j) const {
    // row-major upper triangle, i <= j
    return i * size() - i * (i - 1) / 2 + (j - i);
}

const MatrixStructure::Combo& MatrixStructure::entry(int i, int j) const {
    if (i < 0 || j < 0 || i >= size() || j >= size())
        throw std::out_of_range("MatrixStructure::entry: index out of range");
    if (i > j) std::swap(i, j);
    return upper_[packed(i, j)];
}

MatrixStructure moment_matrix_structure(const Basis& basis_half, const Basis& full_basis) {
    if (!(basis_half.space() == full_basis.space()))
        throw std::invalid_argument("moment_matrix_structure: basis spaces differ");
    if (2 * basis_half.max_degree() > full_basis.max_degree())
        throw std::invalid_argument("moment_matrix_structure: degree overflow");
    const int s = basis_half.size();
    const int dim = basis_half.space().dim();
    std::vector<MatrixStructure::Combo> upper;
    upper.reserve(s * (s + 1) / 2);
    Exponents sum(dim);
    for (int i = 0; i < s; ++i) {
        for (int j = i; j < s; ++j) {
            for (int v = 0; v < dim; ++v)
                sum[v] = basis_half.monomial(i)[v] + basis_half.monomial(j)[v];
            upper.push_back({{full_basis.index(sum), 1.0}});
        }
    }
    return MatrixStructure(basis_half, std::move(upper));
}

MatrixStructure localizing_matrix_structure(const Polynomial& g, const Basis& full_basis) {
    if (!(g.space() == full_basis.space()))
        throw std::invalid_argument("localizing_matrix_structure: variable set mismatch");
    const int r = full_basis.max_degree();
    int d = g.degree();
    if (d % 2 != 0) d += 1;  // parity rule: odd-degree localizers round up
    if (r < d)
        throw std::invalid_argument(
            "localizing_matrix_structure: constraint degree exceeds relaxation order");
    Basis rows = enumerate_basis(full_basis.space(), (r - d) / 2);
    const int s = rows.size();
    const int dim = rows.space().dim();
    std::vector<MatrixStructure::Combo> upper;
    upper.reserve(s * (s + 1) / 2);
    Exponents sum(dim);
    for (int i = 0; i < s; ++i) {
        for (int j = i; j < s; ++j) {
            MatrixStructure::Combo combo;
            combo.reserve(g.terms().size());
            for (const auto& [gamma, c] : g.terms()) {
                for (int v = 0; v < dim; ++v)
                    sum[v] = rows.monomial(i)[v] + rows.monomial(j)[v] + gamma[v];
                combo.emplace_back(full_basis.index(sum), c);
            }
            upper.push_back(std::move(combo));
        }
    }
    return MatrixStructure(rows, std::move(upper));
}

Eigen::MatrixXd instantiate(const MatrixStructure& structure, const MomentVector& moments) {
    const int s = structure.size();
    Eigen::MatrixXd M(s, s);
    for (int i = 0; i < s; ++i) {
        for (int j = i; j < s; ++j) {
            double v = 0.0;
            for (const auto& [idx, c] : structure.entry(i, j)) {
                if (idx < 0 || idx >= static_cast<int>(moments.values.size()))
                    throw std::out_of_range("instantiate: moment index out of range");
                v += c * moments.values[idx];
            }
            M(i, j) = M(j, i) = v;
        }
    }
    return M;
}

}  // namespace mocp
