#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "mocp/momentbasis.hpp"

using namespace mocp;

namespace {
const VarSpace X2(false, 2, 0);  // plain 2-state space, no time/inputs

double min_eigenvalue(const Eigen::MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    return es.eigenvalues().minCoeff();
}
}  // namespace

TEST_CASE("basis enumeration: size, order, inverse lookup") {
    Basis b = enumerate_basis(X2, 2);
    REQUIRE(b.size() == 6);
    CHECK(b.monomial(0) == Exponents{0, 0});
    CHECK(b.monomial(1) == Exponents{1, 0});
    CHECK(b.monomial(2) == Exponents{0, 1});
    CHECK(b.monomial(3) == Exponents{2, 0});
    CHECK(b.monomial(4) == Exponents{1, 1});
    CHECK(b.monomial(5) == Exponents{0, 2});
    CHECK(b.index({1, 1}) == 4);
    CHECK_THROWS_AS(b.index({3, 0}), std::out_of_range);

    CHECK(enumerate_basis(VarSpace(false, 3, 0), 0).size() == 1);
    CHECK(enumerate_basis(VarSpace(false, 3, 0), 9).size() == 220);  // C(12,3)
    CHECK(enumerate_basis(VarSpace(true, 2, 1), 3).size() == 35);    // C(7,4)
}

TEST_CASE("dirac moments are monomial evaluations") {
    Basis b = enumerate_basis(X2, 2);
    MomentVector mv = dirac_moments({-0.5, -0.8}, b);
    CHECK(mv[0] == doctest::Approx(1.0));
    CHECK(mv[1] == doctest::Approx(-0.5));
    CHECK(mv[2] == doctest::Approx(-0.8));
    CHECK(mv[3] == doctest::Approx(0.25));
    CHECK(mv[4] == doctest::Approx(0.4));
    CHECK(mv[5] == doctest::Approx(0.64));

    MomentVector zero = dirac_moments({0.0, 0.0}, b);
    CHECK(zero[0] == 1.0);
    for (int i = 1; i < b.size(); ++i) CHECK(zero[i] == 0.0);

    CHECK(dirac_moments({1, 2}, b)[b.index({1, 1})] == doctest::Approx(2.0));
    CHECK_THROWS_AS(dirac_moments({1.0}, b), std::invalid_argument);
}

TEST_CASE("uniform box moments") {
    Basis b = enumerate_basis(X2, 4);
    MomentVector mv = uniform_box_moments({-1, -1}, {1, 1}, b);
    CHECK(mv[b.index({2, 0})] == doctest::Approx(1.0 / 3.0));
    CHECK(mv[b.index({1, 0})] == doctest::Approx(0.0));
    CHECK(mv[b.index({1, 1})] == doctest::Approx(0.0));
    CHECK(mv[b.index({2, 2})] == doctest::Approx(1.0 / 9.0));
    CHECK(mv[0] == doctest::Approx(1.0));

    Basis b1 = enumerate_basis(VarSpace(false, 1, 0), 5);
    MomentVector u01 = uniform_box_moments({0}, {1}, b1);
    for (int k = 0; k <= 5; ++k)
        CHECK(u01[b1.index({k})] == doctest::Approx(1.0 / (k + 1)));

    CHECK_THROWS_AS(uniform_box_moments({0, 0}, {1, 0}, b), std::invalid_argument);
    CHECK_THROWS_AS(uniform_box_moments({0}, {1}, b), std::invalid_argument);
}

TEST_CASE("uniform segment moments") {
    Basis b = enumerate_basis(X2, 3);
    MomentVector mv = uniform_segment_moments({-1, -0.8}, {-0.5, -0.8}, b);
    CHECK(mv[b.index({0, 1})] == doctest::Approx(-0.8));
    CHECK(mv[b.index({1, 0})] == doctest::Approx(-0.75));
    CHECK(mv[0] == doctest::Approx(1.0));
    // x2 is constant along the segment, so the joint factorizes
    CHECK(mv[b.index({1, 1})] == doctest::Approx(-0.75 * -0.8));

    MomentVector unit = uniform_segment_moments({0, 0}, {1, 0}, b);
    CHECK(unit[b.index({2, 0})] == doctest::Approx(1.0 / 3.0));
    CHECK(unit[b.index({0, 1})] == doctest::Approx(0.0));

    // diagonal segment: E[x1 x2] = E[s^2] = 1/3
    MomentVector diag = uniform_segment_moments({0, 0}, {1, 1}, b);
    CHECK(diag[b.index({1, 1})] == doctest::Approx(1.0 / 3.0));

    CHECK_THROWS_AS(uniform_segment_moments({1, 1}, {1, 1}, b), std::invalid_argument);
}

TEST_CASE("segment moments agree with Monte Carlo") {
    Basis b = enumerate_basis(X2, 4);
    const std::vector<double> p0 = {-1, -0.8}, p1 = {0.3, 0.5};
    MomentVector exact = uniform_segment_moments(p0, p1, b);
    std::mt19937 rng(123);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> mc(b.size(), 0.0);
    const int N = 200000;
    for (int s = 0; s < N; ++s) {
        double a = u(rng);
        double x1 = p0[0] + a * (p1[0] - p0[0]);
        double x2 = p0[1] + a * (p1[1] - p0[1]);
        for (int i = 0; i < b.size(); ++i) {
            double m = 1.0;
            const auto& al = b.monomial(i);
            for (int k = 0; k < al[0]; ++k) m *= x1;
            for (int k = 0; k < al[1]; ++k) m *= x2;
            mc[i] += m;
        }
    }
    for (int i = 0; i < b.size(); ++i) {
        mc[i] /= N;
        if (std::abs(exact.values[i]) > 1e-3)
            CHECK(std::abs(mc[i] / exact.values[i] - 1.0) < 0.02);
    }
}

TEST_CASE("moment matrix structure and instantiation") {
    Basis full = enumerate_basis(X2, 2);
    Basis half = enumerate_basis(X2, 1);
    MatrixStructure ms = moment_matrix_structure(half, full);
    REQUIRE(ms.size() == 3);
    // entry (row x1, col x2) references the x1*x2 moment
    CHECK(ms.entry(1, 2).size() == 1);
    CHECK(ms.entry(1, 2)[0].first == full.index({1, 1}));
    CHECK(ms.entry(0, 0)[0].first == 0);  // mass

    Eigen::MatrixXd M = instantiate(ms, dirac_moments({1, 2}, full));
    Eigen::MatrixXd expect(3, 3);
    expect << 1, 1, 2, 1, 1, 2, 2, 2, 4;
    CHECK((M - expect).norm() == doctest::Approx(0.0));
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    lu.setThreshold(1e-10);
    CHECK(lu.rank() == 1);

    CHECK_THROWS_AS(moment_matrix_structure(full, full), std::invalid_argument);
}

TEST_CASE("localizing matrix structure, parity rule, and instantiation") {
    Basis full = enumerate_basis(X2, 2);

    // g = x2 + 1 has degree 1 -> d rounds to 2 -> 1x1 matrix at r=2
    Polynomial g = parse("x2 + 1", X2);
    MatrixStructure ls = localizing_matrix_structure(g, full);
    REQUIRE(ls.size() == 1);
    Eigen::MatrixXd L0 = instantiate(ls, dirac_moments({0, 0}, full));
    CHECK(L0(0, 0) == doctest::Approx(1.0));  // g(0) = 1

    // g = 1 - x1^2 with uniform moments on [-1,1]^2: [1 - 1/3] = [2/3]
    Polynomial g2 = parse("1 - x1^2", X2);
    Eigen::MatrixXd L2 =
        instantiate(localizing_matrix_structure(g2, full), uniform_box_moments({-1, -1}, {1, 1}, full));
    REQUIRE(L2.rows() == 1);
    CHECK(L2(0, 0) == doctest::Approx(2.0 / 3.0));

    // constant g = 1: localizer equals the moment matrix of matching degree
    Basis full4 = enumerate_basis(X2, 4);
    MatrixStructure ms = moment_matrix_structure(enumerate_basis(X2, 2), full4);
    MatrixStructure l1 = localizing_matrix_structure(Polynomial::constant(X2, 1.0), full4);
    REQUIRE(l1.size() == ms.size());
    MomentVector mv = uniform_box_moments({-1, -1}, {1, 1}, full4);
    CHECK((instantiate(l1, mv) - instantiate(ms, mv)).norm() == doctest::Approx(0.0));

    // degree overflow: r < d
    Polynomial cubic = parse("1 - x1^3", X2);  // d rounds to 4 > 2
    CHECK_THROWS_AS(localizing_matrix_structure(cubic, full), std::invalid_argument);
}

TEST_CASE("localizer at a point mass has sign of g at the point") {
    Basis full = enumerate_basis(X2, 4);
    Polynomial g = parse("1 - x1^2 - x2^2", X2);
    Eigen::MatrixXd Lin =
        instantiate(localizing_matrix_structure(g, full), dirac_moments({0.3, 0.2}, full));
    CHECK(min_eigenvalue(Lin) >= -1e-12);  // g > 0 at the point -> PSD (rank 1)
    Eigen::MatrixXd Lout =
        instantiate(localizing_matrix_structure(g, full), dirac_moments({2.0, 0.0}, full));
    CHECK(min_eigenvalue(Lout) < -1e-6);  // g < 0 at the point -> indefinite
}

TEST_CASE("moment matrices of sampled measures are PSD up to sampling error") {
    Basis full = enumerate_basis(X2, 4);
    Basis half = enumerate_basis(X2, 2);
    MatrixStructure ms = moment_matrix_structure(half, full);

    std::mt19937 rng(7);
    std::normal_distribution<double> gauss(0.0, 0.5);
    std::vector<double> vals(full.size(), 0.0);
    const int N = 50000;
    for (int s = 0; s < N; ++s) {
        double x1 = gauss(rng), x2 = gauss(rng);
        for (int i = 0; i < full.size(); ++i) {
            double m = 1.0;
            const auto& al = full.monomial(i);
            for (int k = 0; k < al[0]; ++k) m *= x1;
            for (int k = 0; k < al[1]; ++k) m *= x2;
            vals[i] += m;
        }
    }
    for (auto& v : vals) v /= N;
    MomentVector mv{full, vals};
    CHECK(min_eigenvalue(instantiate(ms, mv)) >= -1e-3);

    // exact uniform moments: strictly PSD
    CHECK(min_eigenvalue(instantiate(ms, uniform_box_moments({-1, -1}, {1, 1}, full))) > 0.0);

    // zero moment vector -> zero matrix
    MomentVector z{full, std::vector<double>(full.size(), 0.0)};
    CHECK(instantiate(ms, z).norm() == 0.0);
}
