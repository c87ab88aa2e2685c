#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "qsphere/serialization.hpp"

using namespace qsphere;
using Catch::Approx;

TEST_CASE("graded function round trip") {
    double q = 0.5;
    LatticeWindow win(-2, 3);
    GradedFunction f;
    f.set_even(LatticePoint(1, -1), cplx(1.5, -0.5));
    f.set_even(LatticePoint(-1, 2), cplx(0.0, 2.0));
    f.set_odd(LatticePoint(1, 1), cplx(-3.0, 0.25));

    json j = to_json(f, q, win);
    GradedFunctionFile back = graded_function_from_json(j);
    CHECK(back.q == q);
    CHECK(back.window.k_min == -2);
    CHECK(back.window.k_max == 3);
    CHECK(back.f.even_at(LatticePoint(1, -1)) == cplx(1.5, -0.5));
    CHECK(back.f.even_at(LatticePoint(-1, 2)) == cplx(0.0, 2.0));
    CHECK(back.f.odd_at(LatticePoint(1, 1)) == cplx(-3.0, 0.25));
}

TEST_CASE("loader rejects odd entries with |p| >= 1") {
    json j = {{"q", 0.5},
              {"window", {{"k_min", -1}, {"k_max", 2}}},
              {"even", json::array()},
              {"odd", json::array({{{"sign", 1}, {"k", 0}, {"re", 1.0}, {"im", 0.0}}})}};
    CHECK_THROWS_AS(graded_function_from_json(j), SchemaError);
}

TEST_CASE("loader rejects malformed lattice points") {
    json j = {{"q", 0.5},
              {"window", {{"k_min", 0}, {"k_max", 1}}},
              {"even", json::array({{{"sign", -1}, {"k", 0}, {"re", 1.0}, {"im", 0.0}}})},
              {"odd", json::array()}};
    CHECK_THROWS_AS(graded_function_from_json(j), SchemaError);
}

TEST_CASE("phase provider round trip") {
    PhaseProvider pp;
    pp.set_branch(1, SignPair::pm(), -1, {{0.1, 0.3}, {0.9, -0.2}});
    pp.set_branch(2, SignPair::mm(), +1, {{0.5, 1.0}});
    json j = to_json(pp);
    PhaseProvider back = phase_provider_from_json(j);
    CHECK(back.angle(1, SignPair::pm(), -1, 0.1) == Approx(0.3));
    CHECK(back.angle(1, SignPair::pm(), -1, 0.5) == Approx(0.05));
    CHECK(back.angle(2, SignPair::mm(), +1, 0.7) == Approx(1.0));
    CHECK(back.angle(1, SignPair::pp(), -1, 0.3) == 0.0); // pinned stays unit
}

TEST_CASE("spherical field round trip is exact") {
    SpectralGrid grid = SpectralGrid::gauss(5, 2);
    SphericalField f = SphericalField::zeros(grid);
    std::mt19937_64 rng(8);
    auto draw = [&] { return 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0; };
    for (auto &node : f.principal)
        for (auto &m : node)
            for (int e = 0; e < 4; ++e) m[e] = cplx(draw(), draw());
    for (auto &v : f.discrete) v = cplx(draw(), draw());

    Density d = Density::ones(grid);
    json j = to_json(f, &d);
    SphericalField back = spherical_field_from_json(j);
    REQUIRE(back.grid.same_shape(grid));
    for (size_t i = 0; i < f.principal.size(); ++i)
        for (int jj = 0; jj < 2; ++jj)
            for (int e = 0; e < 4; ++e) CHECK(back.principal[i][jj][e] == f.principal[i][jj][e]);
    for (size_t k = 0; k < f.discrete.size(); ++k) CHECK(back.discrete[k] == f.discrete[k]);
    Density dback = density_from_json(j.at("density"));
    CHECK(dback.matches(grid));
}

TEST_CASE("csv export shape") {
    SpectralGrid grid = SpectralGrid::gauss(3, 2);
    SphericalField f = SphericalField::zeros(grid);
    std::string csv = to_csv(f);
    size_t rows = std::count(csv.begin(), csv.end(), '\n');
    CHECK(rows == 1 + 3 * 2 * 4 + 2); // header + (x,j,entry) + discrete
}

TEST_CASE("coefficient set round trip") {
    CoefficientSet c{ProductVariant::III, LatticePoint(1, 0), LatticePoint(-1, 1), {}, "fitted"};
    c.values = {{LatticePoint(-1, 1), 0.25}, {LatticePoint(-1, 2), -0.5}};
    FitReport rep;
    rep.max_residual = 1e-6;
    json j = to_json(c, &rep);
    CoefficientSet back = coefficient_set_from_json(j);
    CHECK(back.variant == ProductVariant::III);
    CHECK(back.p1 == c.p1);
    CHECK(back.p2 == c.p2);
    CHECK(back.at(LatticePoint(-1, 2)) == Approx(-0.5));
    CHECK(back.provenance == "fitted");
}

TEST_CASE("a-provider file") {
    json j = {{"entries", json::array({{{"p", {{"sign", 1}, {"k", 2}}},
                                        {"x", {{"sign", 1}, {"k", 1}}},
                                        {"y", {{"sign", 1}, {"k", 1}}},
                                        {"a", 0.75}}})}};
    AProvider p = a_provider_from_json(j);
    CHECK(p.value(LatticePoint(1, 2), LatticePoint(1, 1), LatticePoint(1, 1), 0.5) == Approx(0.75));
    CHECK(p.value(LatticePoint(1, 3), LatticePoint(1, 1), LatticePoint(1, 1), 0.5) == 0.0);
    // support rule wins over stored entries
    json j2 = {{"entries", json::array({{{"p", {{"sign", -1}, {"k", 2}}},
                                         {"x", {{"sign", 1}, {"k", 1}}},
                                         {"y", {{"sign", 1}, {"k", 1}}},
                                         {"a", 0.75}}})}};
    AProvider p2 = a_provider_from_json(j2);
    CHECK(p2.value(LatticePoint(-1, 2), LatticePoint(1, 1), LatticePoint(1, 1), 0.5) == 0.0);
}

TEST_CASE("fit report serialization") {
    FitReport r;
    r.max_residual = 0.5;
    r.warnings.push_back("NegativePressure: 2 components clipped");
    r.detail("unknowns", 68.0);
    json j = to_json(r);
    CHECK(j.at("max_residual").get<double>() == 0.5);
    CHECK(j.at("warnings").size() == 1);
    CHECK(j.at("details").at(0).at("name").get<std::string>() == "unknowns");
}
