#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "mocp/poly.hpp"

namespace mocp {

// Monomial basis of all exponents with total degree <= max_degree over the
// variables of `space`, listed in graded-lex order (index 0 is the constant).
class Basis {
public:
    Basis(VarSpace space, int max_degree, std::vector<Exponents> monomials);

    const VarSpace& space() const { return space_; }
    int max_degree() const { return max_degree_; }
    int size() const { return static_cast<int>(monomials_.size()); }
    const std::vector<Exponents>& monomials() const { return monomials_; }
    const Exponents& monomial(int i) const { return monomials_.at(i); }

    // Position of an exponent in the basis; throws if absent (degree too high).
    int index(const Exponents& alpha) const;
    bool contains(const Exponents& alpha) const;

private:
    VarSpace space_;
    int max_degree_;
    std::vector<Exponents> monomials_;
    std::map<Exponents, int, GradedLexLess> index_;
};

Basis enumerate_basis(const VarSpace& space, int max_degree);

// Moment vector: values[i] = integral of basis.monomial(i) against a measure.
// For probability measures values[0] == 1.
struct MomentVector {
    Basis basis;
    std::vector<double> values;

    double operator[](int i) const { return values.at(i); }
};

MomentVector dirac_moments(const std::vector<double>& x0, const Basis& basis);
MomentVector uniform_box_moments(const std::vector<double>& lo,
                                 const std::vector<double>& hi, const Basis& basis);
MomentVector uniform_segment_moments(const std::vector<double>& p0,
                                     const std::vector<double>& p1, const Basis& basis);

// Symbolic shape of a moment or localizing matrix: every entry is a fixed
// linear combination of moments, so instantiation is a gather per entry.
class MatrixStructure {
public:
    using Combo = std::vector<std::pair<int, double>>;  // (moment index, coef)

    MatrixStructure(Basis row_basis, std::vector<Combo> upper);

    int size() const { return row_basis_.size(); }
    const Basis& row_basis() const { return row_basis_; }
    const Combo& entry(int i, int j) const;  // symmetric access

private:
    int packed(int i, int j) const;  // i <= j
    Basis row_basis_;
    std::vector<Combo> upper_;  // row-major upper triangle
};

// Rows/cols indexed by basis_half; entry (i,j) is the single moment alpha_i+alpha_j.
MatrixStructure moment_matrix_structure(const Basis& basis_half, const Basis& full_basis);

// Localizer for the constraint g >= 0. deg(g) is rounded up to even (d);
// rows have degree (r-d)/2. Throws if full_basis.max_degree < d.
MatrixStructure localizing_matrix_structure(const Polynomial& g, const Basis& full_basis);

Eigen::MatrixXd instantiate(const MatrixStructure& structure, const MomentVector& moments);

}  // namespace mocp
