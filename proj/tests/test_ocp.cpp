#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "mocp/ocp.hpp"
#include "test_problems.hpp"

using namespace mocp;

namespace {
bool mentions(const std::vector<std::string>& diags, const std::string& needle) {
    return std::any_of(diags.begin(), diags.end(), [&](const std::string& d) {
        return d.find(needle) != std::string::npos;
    });
}
}  // namespace

TEST_CASE("well-formed problems validate cleanly") {
    CHECK(validate(testing::double_integrator()).empty());
    CHECK(validate(testing::cubic_regulator()).empty());
}

TEST_CASE("validate flags arity, scope, and mode violations") {
    OcpProblem pb = testing::double_integrator();
    const VarSpace& sp = pb.space;

    SUBCASE("dynamics arity") {
        pb.f.pop_back();
        CHECK(mentions(validate(pb), "dynamics arity"));
    }
    SUBCASE("time-dependent data in free-time mode") {
        pb.h = parse("1 + t", sp);
        CHECK(mentions(validate(pb), "time-dependent running cost"));
        pb.h = Polynomial::constant(sp, 1.0);
        pb.f[0] = parse("x2 + t", sp);
        CHECK(mentions(validate(pb), "time-dependent dynamics"));
    }
    SUBCASE("state-only sets may not mention u or t") {
        pb.C_F.constraints.push_back(parse("1 - u1^2", sp));
        CHECK(mentions(validate(pb), "state-only"));
    }
    SUBCASE("terminal cost is a function of the final state only") {
        pb.H = parse("u1", sp);
        CHECK(mentions(validate(pb), "terminal cost"));
    }
    SUBCASE("singleton final state must satisfy C_F") {
        pb.C_F.constraints.push_back(parse("x1 - 1", sp));  // x1 >= 1 excludes origin
        CHECK(mentions(validate(pb), "violates C_F"));
    }
    SUBCASE("singleton dimension") {
        pb.x_T = {0.0};
        CHECK(mentions(validate(pb), "wrong dimension"));
    }
    SUBCASE("target point without singleton mode") {
        pb.final_mode = FinalMode::free_final;
        CHECK(mentions(validate(pb), "not singleton"));
    }
    SUBCASE("unknown initial measure needs C_I") {
        pb.initial = InitialMeasure::unknown();
        CHECK(mentions(validate(pb), "nonempty C_I"));
        pb.C_I.constraints.push_back(parse("1 - x1^2", sp));
        pb.C_I.constraints.push_back(parse("1 - x2^2", sp));
        CHECK(validate(pb).empty());
    }
    SUBCASE("explicit moments must be a probability over states") {
        Basis b = enumerate_basis(VarSpace(false, 2, 0), 2);
        MomentVector mv = dirac_moments({0.1, 0.2}, b);
        mv.values[0] = 2.0;
        pb.initial = InitialMeasure::explicit_moments(mv);
        CHECK(mentions(validate(pb), "mass 1"));
    }
    SUBCASE("degenerate initial box") {
        pb.initial = InitialMeasure::uniform_box({0, 0}, {1, 0});
        CHECK(mentions(validate(pb), "degenerate"));
    }
}

TEST_CASE("compactness warnings are advisory and variable-specific") {
    OcpProblem pb = testing::double_integrator();
    CHECK(compactness_warnings(pb).empty());  // boxes + |u|<=1 pairs cover all

    // cubic regulator: (20-u)(20+u) = 400 - u^2 recognized as two-sided
    CHECK(compactness_warnings(testing::cubic_regulator()).empty());

    // drop the u bounds: u1 becomes unbounded
    OcpProblem loose = testing::double_integrator();
    loose.C_T.constraints = {parse("x2 + 1", loose.space), parse("4 - x1^2", loose.space),
                             parse("4 - x2^2", loose.space)};
    auto warn = compactness_warnings(loose);
    REQUIRE(warn.size() == 1);
    CHECK(warn[0].find("u1") != std::string::npos);

    // x2 >= -1 alone bounds x2 below only
    OcpProblem onesided = testing::double_integrator();
    onesided.C_T.constraints = {parse("x2 + 1", onesided.space),
                                parse("4 - x1^2", onesided.space),
                                parse("1 - u1^2", onesided.space)};
    auto w2 = compactness_warnings(onesided);
    REQUIRE(w2.size() == 1);
    CHECK(w2[0].find("x2") != std::string::npos);
    CHECK(w2[0].find("from above") != std::string::npos);
}

TEST_CASE("scale with identity boxes is the identity") {
    OcpProblem pb = testing::double_integrator();
    auto [scaled, maps] = scale(pb, {-1, -1}, {1, 1}, {-1}, {1}, 1.0);
    for (std::size_t i = 0; i < pb.f.size(); ++i)
        CHECK(scaled.f[i].same_terms(pb.f[i], 1e-14));
    CHECK(scaled.h.same_terms(pb.h, 1e-14));
    for (std::size_t i = 0; i < pb.C_T.constraints.size(); ++i)
        CHECK(scaled.C_T.constraints[i].same_terms(pb.C_T.constraints[i], 1e-14));
    CHECK(maps.to_scaled_state({0.3, -0.7}) == std::vector<double>{0.3, -0.7});
}

TEST_CASE("scale substitutes boxes into dynamics with the chain-rule factor") {
    // x' = u with u in [-2,2], state box [-1,1]: xs' = 2*us
    VarSpace sp(true, 1, 1);
    OcpProblem pb{.space = sp,
                  .f = {parse("u1", sp)},
                  .h = Polynomial::constant(sp, 1.0),
                  .H = Polynomial(sp),
                  .C_I = {SetScope::state_only, {}},
                  .C_T = {SetScope::time_state_input, {parse("4 - u1^2", sp)}},
                  .C_F = {SetScope::state_only, {}},
                  .horizon = Horizon::fixed(1.0),
                  .initial = InitialMeasure::dirac({0.0}),
                  .final_mode = FinalMode::free_final,
                  .x_T = {}};
    auto [scaled, maps] = scale(pb, {-1}, {1}, {-2}, {2}, 1.0);
    CHECK(scaled.f[0].same_terms(parse("2*u1", sp), 1e-14));
    // input bound becomes 4 - 4*u^2 >= 0, i.e. the unit box
    CHECK(scaled.C_T.constraints[0].same_terms(parse("4 - 4*u1^2", sp), 1e-14));

    // time scaling: t := 2*ts halves the horizon and doubles h and f
    auto [tsc, tmaps] = scale(pb, {-1}, {1}, {-1}, {1}, 2.0);
    CHECK(tsc.horizon.T == doctest::Approx(0.5));
    CHECK(tsc.f[0].same_terms(parse("2*u1", sp), 1e-14));
    CHECK(tsc.h.same_terms(parse("2", sp), 1e-14));
}

TEST_CASE("scale round-trips through the inverse box") {
    OcpProblem pb = testing::cubic_regulator();
    const std::vector<double> lo = {-2, -3}, hi = {2, 1}, lou = {-20}, hiu = {20};
    const double ts = 4.0;
    auto [scaled, maps] = scale(pb, lo, hi, lou, hiu, ts);

    // inverse: c2 = -c/s, s2 = 1/s per component
    auto invert = [](const std::vector<double>& c, const std::vector<double>& s,
                     std::vector<double>& lo2, std::vector<double>& hi2) {
        for (std::size_t i = 0; i < c.size(); ++i) {
            lo2.push_back((-c[i] - 1.0) / s[i]);
            hi2.push_back((-c[i] + 1.0) / s[i]);
        }
    };
    std::vector<double> lo2, hi2, lou2, hiu2;
    invert(maps.c, maps.s, lo2, hi2);
    invert(maps.cu, maps.su, lou2, hiu2);
    auto [back, maps2] = scale(scaled, lo2, hi2, lou2, hiu2, 1.0 / ts);

    for (std::size_t i = 0; i < pb.f.size(); ++i)
        CHECK(back.f[i].same_terms(pb.f[i], 1e-12));
    CHECK(back.h.same_terms(pb.h, 1e-12));
    CHECK(back.H.same_terms(pb.H, 1e-12));
    for (std::size_t i = 0; i < pb.C_T.constraints.size(); ++i)
        CHECK(back.C_T.constraints[i].same_terms(pb.C_T.constraints[i], 1e-10));
    CHECK(back.horizon.T == doctest::Approx(pb.horizon.T));

    // point maps round-trip too
    std::vector<double> x = {0.4, -1.7};
    auto xs = maps.to_scaled_state(x);
    auto xb = maps.from_scaled_state(xs);
    CHECK(xb[0] == doctest::Approx(x[0]));
    CHECK(xb[1] == doctest::Approx(x[1]));
    CHECK(maps.from_scaled_time(maps.to_scaled_time(3.3)) == doctest::Approx(3.3));
}

TEST_CASE("scale transforms the initial measure consistently") {
    OcpProblem pb = testing::double_integrator({0.5, 0.5});
    auto [scaled, maps] = scale(pb, {-2, -2}, {2, 2}, {-1}, {1}, 1.0);
    REQUIRE(scaled.initial.kind == InitialMeasure::Kind::dirac);
    CHECK(scaled.initial.x0[0] == doctest::Approx(0.25));
    CHECK(scaled.initial.x0[1] == doctest::Approx(0.25));

    // explicit moments of a dirac transform like the dirac itself
    Basis b = enumerate_basis(VarSpace(false, 2, 0), 3);
    pb.initial = InitialMeasure::explicit_moments(dirac_moments({0.5, 0.5}, b));
    auto [scaled2, maps2] = scale(pb, {-2, -2}, {2, 2}, {-1}, {1}, 1.0);
    MomentVector expect = dirac_moments({0.25, 0.25}, b);
    REQUIRE(scaled2.initial.moments.has_value());
    for (int i = 0; i < b.size(); ++i)
        CHECK(scaled2.initial.moments->values[i] == doctest::Approx(expect.values[i]));

    // box initial measure: corners map through the affine change
    pb.initial = InitialMeasure::uniform_box({-1, 0}, {1, 2});
    auto [scaled3, maps3] = scale(pb, {-2, -2}, {2, 2}, {-1}, {1}, 1.0);
    CHECK(scaled3.initial.lo == std::vector<double>{-0.5, 0.0});
    CHECK(scaled3.initial.hi == std::vector<double>{0.5, 1.0});
}

TEST_CASE("scale rejects bad boxes") {
    OcpProblem pb = testing::double_integrator();
    CHECK_THROWS_AS(scale(pb, {-1, -1}, {1, -1}, {-1}, {1}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(scale(pb, {-1}, {1}, {-1}, {1}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(scale(pb, {-1, -1}, {1, 1}, {-1}, {1}, 0.0), std::invalid_argument);
}

TEST_CASE("map_variables restricts and extends across spaces") {
    VarSpace full(true, 2, 1);
    VarSpace xonly(false, 2, 0);
    Polynomial p = parse("x1^2 + 2*x2", full);
    // full -> state-only: t and u must not occur
    std::vector<int> drop_tu = {-1, 0, 1, -1};
    Polynomial q = map_variables(p, xonly, drop_tu);
    CHECK(q.same_terms(parse("x1^2 + 2*x2", xonly), 1e-15));
    CHECK_THROWS_AS(map_variables(parse("t + x1", full), xonly, drop_tu),
                    std::invalid_argument);
    // state-only -> full round trip
    std::vector<int> lift = {full.state_index(0), full.state_index(1)};
    CHECK(map_variables(q, full, lift).same_terms(p, 1e-15));
}
