#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>

#include "qsphere/qseries.hpp"

using namespace qsphere;
using Catch::Approx;

namespace {

// brute-force infinite product at extended precision, the test-side oracle
std::complex<long double> poch_oracle(std::complex<long double> a, long double base,
                                      int factors = 200) {
    std::complex<long double> prod = 1.0L;
    for (int m = 0; m < factors; ++m) {
        prod *= (1.0L - a);
        a *= base;
    }
    return prod;
}

double rel_err(cplx got, std::complex<long double> want) {
    long double d = std::abs(std::complex<long double>(got.real(), got.imag()) - want);
    return static_cast<double>(d / std::max<long double>(std::abs(want), 1e-300L));
}

} // namespace

TEST_CASE("qpoch_finite basics") {
    CHECK(qpoch_finite(0.3, 0.5, 0) == cplx(1.0));
    CHECK(qpoch_finite(0.5, 0.5, 2).real() == Approx(0.375).epsilon(1e-15));
    CHECK(std::abs(qpoch_finite(1.0, 0.5, 3)) == 0.0);
    CHECK_THROWS_AS(qpoch_finite(0.1, 0.5, -1), DomainError);
}

TEST_CASE("qpoch_finite index shift identity") {
    std::mt19937_64 rng(7);
    auto draw = [&] { return (rng() >> 11) * 0x1.0p-53; };
    for (int it = 0; it < 50; ++it) {
        cplx a(2.0 * draw() - 1.0, 2.0 * draw() - 1.0);
        double base = 0.2 + 0.6 * draw();
        long n = static_cast<long>(draw() * 9), m = static_cast<long>(draw() * 9);
        cplx lhs = qpoch_finite(a, base, n + m);
        cplx rhs = qpoch_finite(a, base, n) * qpoch_finite(a * std::pow(base, double(n)), base, m);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("qpoch_infinite against the extended-precision oracle") {
    QBase qb(0.5);
    CHECK(qpoch_infinite(0.0, 0.5, qb) == cplx(1.0));
    // frozen via the oracle: (1/2;1/2)_inf
    cplx got = qpoch_infinite(0.5, 0.5, qb);
    CHECK(rel_err(got, poch_oracle(0.5L, 0.5L)) < 1e-13);
    // a complex argument
    cplx a(0.3, -0.4);
    CHECK(rel_err(qpoch_infinite(a, 0.6, qb),
                  poch_oracle(std::complex<long double>(0.3L, -0.4L), 0.6L)) < 1e-13);
}

TEST_CASE("qpoch_infinite truncation failure") {
    QBase tight(0.5, 1e-12, 3);
    CHECK_THROWS_AS(qpoch_infinite(0.9, 0.99, tight), TruncationFailure);
}

TEST_CASE("base splitting identity (a;q) = (a;q^2)(aq;q^2)") {
    QBase qb(0.4);
    std::mt19937_64 rng(11);
    auto draw = [&] { return (rng() >> 11) * 0x1.0p-53; };
    for (int it = 0; it < 60; ++it) {
        cplx a(1.6 * draw() - 0.8, 1.2 * draw() - 0.6);
        double q = 0.25 + 0.5 * draw();
        cplx lhs = qpoch_infinite(a, q, qb);
        cplx rhs = qpoch_infinite(a, q * q, qb) * qpoch_infinite(a * q, q * q, qb);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(rhs)));
    }
    // the spec's spot values
    cplx lhs = qpoch_infinite(0.3, 0.4, qb);
    cplx rhs = qpoch_infinite(0.3, 0.16, qb) * qpoch_infinite(0.12, 0.16, qb);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(rhs));
}

TEST_CASE("qpoch_ratio cancellation and markers") {
    QBase qb(0.5);
    double Q = 0.25;

    SECTION("identical factors cancel exactly at lambda = 1") {
        cplx lam = 1.0;
        auto r = qpoch_ratio({PochFactor(1.0 / lam, 2)}, {PochFactor(1.0 / lam, 2)}, qb);
        REQUIRE(r.is_finite());
        CHECK(r.value == cplx(1.0));
    }
    SECTION("numerator zero against nonzero denominator") {
        auto r = qpoch_ratio({PochFactor(cplx(1.0), 2)}, {PochFactor(cplx(-1.0), 2)}, qb);
        CHECK(r.is_zero());
        CHECK(r.value == cplx(0.0));
    }
    SECTION("divergent marker on denominator zero") {
        auto r = qpoch_ratio({PochFactor(cplx(0.3), 2)}, {PochFactor(cplx(1.0 / Q), 2)}, qb);
        CHECK(r.is_divergent());
    }
    SECTION("reduced ratio matches direct evaluation") {
        QBase qq(0.25);
        auto r = qpoch_ratio({PochFactor(0.2, 1), PochFactor(0.3, 1)}, {PochFactor(0.3, 1)}, qq);
        REQUIRE(r.is_finite());
        CHECK(std::abs(r.value - qpoch_infinite(0.2, 0.25, qq)) < 1e-14);
    }
    SECTION("duplicated factor equals deleted factor, bit for bit") {
        QBase qq(0.25);
        auto with = qpoch_ratio({PochFactor(0.37, 1), PochFactor(0.11, 1)},
                                {PochFactor(0.11, 1)}, qq);
        auto without = qpoch_ratio({PochFactor(0.37, 1)}, {}, qq);
        REQUIRE(with.is_finite());
        CHECK(with.value == without.value);
    }
}

TEST_CASE("phi_series basics") {
    QBase qb(0.5);
    SECTION("z = 0 gives 1") {
        CHECK(phi21_series(cplx(0.3, 0.1), 0.7, -0.2, 0.5, 0.0, qb) == cplx(1.0));
    }
    SECTION("terminating two-term series is exact") {
        double base = 0.5;
        cplx a = 1.0 / base; // base^{-1}: terminates at k = 1
        cplx b = 0.3, c = -0.4, z(0.8, 0.3);
        cplx expect = 1.0 + (1.0 - a) * (1.0 - b) / ((1.0 - c) * (1.0 - base)) * z;
        CHECK(std::abs(phi21_series(a, b, c, base, z, qb) - expect) < 1e-14);
    }
    SECTION("q-binomial theorem: 1phi0(a;-;q,z)(z;q)inf = (az;q)inf") {
        double q = 0.5;
        cplx a = 0.3, z = 0.4;
        cplx lhs = phi_series(HyperSeriesSpec{{a}, {}, q, z}, qb) * qpoch_infinite(z, q, qb);
        cplx rhs = qpoch_infinite(a * z, q, qb);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(rhs));
    }
    SECTION("nonconvergent without termination") {
        CHECK_THROWS_AS(phi21_series(0.3, 0.4, 0.5, 0.5, cplx(1.2), qb), Nonconvergent);
    }
    SECTION("lower parameter pole rejected") {
        HyperSeriesSpec bad{{cplx(0.2)}, {cplx(2.0)}, 0.5, cplx(0.1)}; // 2 = base^{-1}
        CHECK_THROWS_AS(phi_series(bad, qb), DomainError);
    }
    SECTION("0phi1-style extra factor convention (r <= s)") {
        // 1phi1(a; c; q, z) carries the (-1)^k q^C(k,2) factor; cross-check a
        // two-term terminating case by hand
        double base = 0.5;
        cplx a = 1.0 / base;
        cplx c = 0.3, z(0.7, -0.2);
        // k=1 term: (1-a)/( (1-base)(1-c) ) * z * (-1) base^0
        cplx expect = 1.0 - (1.0 - a) / ((1.0 - base) * (1.0 - c)) * z;
        cplx got = phi_series(HyperSeriesSpec{{a}, {c}, base, z}, qb);
        CHECK(std::abs(got - expect) < 1e-14);
    }
}

TEST_CASE("phi21_continued") {
    QBase qb(0.5);
    SECTION("z = 0") { CHECK(phi21_continued(0.3, 0.2, 0.1, 0.5, 0.0, qb) == cplx(1.0)); }
    SECTION("agrees with the series inside the disk, 100 seeded draws") {
        std::mt19937_64 rng(2024);
        auto draw = [&] { return (rng() >> 11) * 0x1.0p-53; };
        int done = 0;
        double worst = 0.0;
        while (done < 100) {
            cplx a(0.3 + 1.5 * draw(), 1.2 * draw() - 0.6);
            cplx b(0.3 + 0.9 * draw(), 1.2 * draw() - 0.6);
            cplx c(1.6 * draw() - 0.8, 0.8 * draw() - 0.4);
            double r = 0.3 + 0.65 * draw();
            cplx z = std::polar(r, 2.0 * M_PI * draw());
            if (std::abs(c * 0.5 / (a * b * z)) > 0.9) continue;
            cplx ab = a / b;
            if (std::abs(ab - 1.0) < 1e-2) continue;
            if (detail::pole_index(ab, 0.5, 1e-3) || detail::pole_index(1.0 / ab, 0.5, 1e-3))
                continue;
            if (detail::pole_index(c, 0.5, 1e-3)) continue;
            try {
                cplx s = phi21_series(a, b, c, 0.5, z, qb);
                cplx k = phi21_continued(a, b, c, 0.5, z, qb);
                worst = std::max(worst, std::abs(s - k) / std::max(1e-30, std::abs(s)));
                ++done;
            } catch (const ContinuationSingular &) {
            }
        }
        CHECK(worst < 1e-8);
    }
    SECTION("terminating case outside the disk equals the exact sum") {
        double base = 0.5;
        cplx a = std::pow(base, -2.0); // terminates after 3 terms
        cplx b(0.3, 0.2), c(-0.7, 0.1), z(3.0, 0.0);
        cplx exact = phi21_series(a, b, c, base, z, qb);
        cplx cont = phi21_continued(a, b, c, base, z, qb);
        CHECK(std::abs(exact - cont) <= 1e-10 * std::abs(exact));
    }
    SECTION("logarithmic case is reported") {
        double base = 0.5;
        cplx a(0.6, 0.0);
        cplx b = a; // a/b = 1
        CHECK_THROWS_AS(phi21_continued(a, b, cplx(0.3), base, cplx(1.7, 0.4), qb),
                        ContinuationSingular);
    }
}

TEST_CASE("regularized product (z;Q)inf 2phi1 through Heine") {
    QBase qb(0.5);
    double q = 0.5, Q = 0.25;
    SECTION("matches the direct product inside the disk") {
        cplx lam = std::polar(1.0, 0.9);
        cplx a = -q / lam, b = -lam * q, c = -Q;
        cplx z(0.55, 0.3);
        cplx direct = qpoch_infinite(z, Q, qb) * phi21_series(a, b, c, Q, z, qb);
        // push the same value through the |z|>=1 entry point by scaling: use
        // a z just outside and compare against the connection formula instead
        cplx z2(1.3, 0.4);
        cplx heine = phi21_poch_product(a, b, c, Q, z2, qb);
        cplx conn = qpoch_infinite(z2, Q, qb) * phi21_continued(a, b, c, Q, z2, qb);
        CHECK(std::abs(heine - conn) <= 1e-9 * std::abs(conn));
        CHECK(std::abs(phi21_poch_product(a, b, c, Q, z, qb) - direct) <= 1e-12 * std::abs(direct));
    }
    SECTION("lattice argument on the positive axis is finite") {
        cplx lam = std::polar(1.0, 1.2);
        cplx a = -q / lam, b = -lam * q, c = -Q;
        for (int k = 1; k <= 5; ++k) {
            cplx z = cplx(std::pow(q, 2.0 - 2.0 * k)); // z = Q^{1-k} >= 1
            cplx v = phi21_poch_product(a, b, c, Q, z, qb);
            CHECK(std::isfinite(v.real()));
            CHECK(std::isfinite(v.imag()));
        }
    }
}
