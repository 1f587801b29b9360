#include <doctest.h>

#include "frozen_values.hpp"
#include "oracles.hpp"
#include "semistab/mode_algebra.hpp"
#include "semistab/quadrature.hpp"
#include "semistab/spectral.hpp"
#include "semistab/validation.hpp"

using namespace semistab;

namespace {
double rel(cplx a, cplx b) { return std::abs(a - b) / std::abs(b); }
}

TEST_CASE("eval_rho closed form and limits") {
    CHECK(eval_rho(4.0, 1.0) == 0.0);
    CHECK(eval_rho(2.0, 1.0) == 0.0);
    CHECK(eval_rho(8.0, 1.0) == doctest::Approx(frozen::kRho8).epsilon(1e-14));
    const double tail = eval_rho(1e6, 1.0) * 16 * kPi * kPi * 1e6;
    CHECK(tail >= 0.999);
    CHECK(tail <= 1.0);
    CHECK_THROWS_AS(eval_rho(-1.0, 1.0), DomainError);
    CHECK_THROWS_AS(eval_rho(5.0, 0.0), DomainError);
}

TEST_CASE("rho density wrapper") {
    const auto s = rho_density(1.5);
    CHECK(s.threshold() == doctest::Approx(9.0));
    CHECK(s(9.0) == 0.0);
    CHECK(s(20.0) == doctest::Approx(oracle::rho(20.0, 1.5)).epsilon(1e-14));
}

TEST_CASE("cut domain membership") {
    CHECK(in_domain(cplx(3.9, 0.0), 1.0));
    CHECK(!in_domain(cplx(4.0, 0.0), 1.0));
    CHECK(!in_domain(cplx(100.0, 0.0), 1.0));
    CHECK(in_domain(cplx(100.0, 1e-9), 1.0));
    CHECK(in_domain(cplx(-1e9, 0.0), 1.0));
    CHECK(!in_domain(cplx(1.0, 0.0), 0.5));
}

TEST_CASE("stieltjes_J frozen values") {
    CHECK(rel(stieltjes_J(0.0, 1.0), frozen::kJ0) < 1e-12);
    CHECK(rel(stieltjes_J(-1.0, 1.0), frozen::kJm1) < 1e-12);
    CHECK(rel(stieltjes_J(-1e6, 1.0), frozen::kJm1e6) < 1e-10);
    CHECK(rel(stieltjes_J(4.0 - 1e-3, 1.0), frozen::kJnear) < 1e-10);
    CHECK(rel(stieltjes_J(cplx(2, 3), 1.0), cplx(frozen::kJ23re, frozen::kJ23im)) < 1e-12);
    CHECK(rel(stieltjes_J(cplx(-500, 800), 1.0), cplx(frozen::kJfarre, frozen::kJfarim)) < 1e-10);
    CHECK(rel(stieltjes_J(cplx(5, 1e-3), 1.0), cplx(frozen::kJ5re, frozen::kJ5im)) < 1e-10);
}

TEST_CASE("stieltjes_J elementary properties") {
    CHECK(stieltjes_J(-7.0, 1.0).imag() == 0.0);
    CHECK(stieltjes_J(3.5, 1.0).imag() == 0.0);
    CHECK(std::abs(stieltjes_J(-1e6, 1.0)) < 1e-5);
    CHECK_THROWS_AS(stieltjes_J(cplx(5.0, 0.0), 1.0), DomainError);
    CHECK_THROWS_AS(stieltjes_J(cplx(4.0, 0.0), 1.0), DomainError);
    // The extended variant returns the boundary value from above.
    const cplx b = stieltjes_J_ext(cplx(5.0, 0.0), 1.0);
    CHECK(b.imag() == doctest::Approx(kPi * eval_rho(5.0, 1.0)).epsilon(1e-12));
}

TEST_CASE("property: Im J > 0 in the upper half-plane") {
    oracle::Gen g(11);
    for (int i = 0; i < 300; ++i) {
        const double m = g.uniform(0.3, 2.0);
        const cplx z(g.uniform(-50, 50), g.log_uniform(1e-6, 100));
        CHECK(stieltjes_J(z, m).imag() > 0.0);
        CHECK(stieltjes_J(std::conj(z), m) == std::conj(stieltjes_J(z, m)));
    }
}

TEST_CASE("property: stieltjes_J agrees with the substitution oracle") {
    oracle::Gen g(12);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double m = g.uniform(0.5, 1.5);
        const cplx z = g.off_cut(1e3, m);
        worst = std::max(worst, rel(stieltjes_J(z, m), oracle::J(z, m)));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("stieltjes_J derivative") {
    for (cplx z : {cplx(-3, 0), cplx(1, 2), cplx(3.9, 0), cplx(10, -4)}) {
        const double h = 1e-5;
        const cplx fd = (stieltjes_J(z + h, 1.0) - stieltjes_J(z - h, 1.0)) / (2 * h);
        CHECK(rel(stieltjes_J_prime(z, 1.0), fd) < 1e-6);
    }
}

TEST_CASE("quadrature_J oracle") {
    const auto r = quadrature_J(-1.0, 1.0, 1e-10);
    CHECK(r.error <= 1e-10);
    CHECK(std::abs(r.value.imag()) < 1e-15);
    CHECK(std::abs(r.value - frozen::kJm1) < 1e-10);
    CHECK(std::abs(quadrature_J(-1e6, 1.0, 1e-12).value) < 1e-5);
    const auto s = quadrature_J(cplx(5.0, 1e-3), 1.0, 1e-12);
    CHECK(s.value.imag() == doctest::Approx(kPi * eval_rho(5.0, 1.0)).epsilon(2e-3));
    CHECK_THROWS_AS(quadrature_J(cplx(6.0, 0.0), 1.0, 1e-10), DomainError);
}

TEST_CASE("Sokhotski-Plemelj limit by extrapolation") {
    for (double x : {5.0, 10.0, 100.0}) {
        const double e2 = 1e-3, e3 = 1e-4;
        const double i2 = quadrature_J(cplx(x, e2), 1.0, 1e-13).value.imag();
        const double i3 = quadrature_J(cplx(x, e3), 1.0, 1e-13).value.imag();
        const double lim = i3 - (i2 - i3) * e3 / (e2 - e3);
        CHECK(lim == doctest::Approx(kPi * eval_rho(x, 1.0)).epsilon(1e-6));
    }
}

TEST_CASE("Sokhotski-Plemelj check detects a sign flip in rho") {
    CHECK(sokhotski_plemelj_residual(eval_rho, 1.0) < 1e-10);
    auto flipped = [](double M, double m) { return -eval_rho(M, m); };
    CHECK(sokhotski_plemelj_residual(flipped, 1.0) > 1.0);
}

TEST_CASE("integral of rho grows like log") {
    auto I = [](double L) {
        return quad::integrate([](double u) { return eval_rho(4.0 * std::exp(u), 1.0) * 4.0 * std::exp(u); },
                               0.0, std::log(L / 4.0), 1e-14)
            .value;
    };
    const double d = I(1e8) - I(1e6);
    CHECK(d == doctest::Approx(std::log(100.0) / (16 * kPi * kPi)).epsilon(1e-5));
}

TEST_CASE("F_of for rho") {
    const auto s = rho_density(1.0);
    CHECK(F_of(0.0, 2.0, s) == doctest::Approx(2.0 * frozen::kJ0).epsilon(1e-12));
    CHECK(F_of(10.0, 2.0, s) == doctest::Approx(frozen::kF10).epsilon(1e-12));
    CHECK(F_rho_closed(10.0, 2.0, 1.0) == doctest::Approx(frozen::kF10).epsilon(1e-12));
    for (double w2 : {0.0, 0.3, 5.0, 123.0, 1e4}) {
        const auto q = F_quadrature(w2, 2.0, s, 1e-13);
        CHECK(F_rho_closed(w2, 2.0, 1.0) == doctest::Approx(q.value).epsilon(1e-10));
    }
    CHECK_THROWS_AS(F_of(1.0, 0.0, s), DomainError);
    CHECK_THROWS_AS(F_of(1.0, 4.0, s), DomainError);
    CHECK_THROWS_AS(F_of(1.0, -1.0, s), DomainError);
}

TEST_CASE("F positive, increasing, logarithmic growth") {
    const auto s = rho_density(1.0);
    double prev = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double w2 = 1e4 * i / 200.0;
        const double f = F_of(w2, 2.0, s);
        CHECK(f > 0.0);
        if (i > 0) CHECK(f > prev);
        prev = f;
    }
    const double target = 1.0 / (16 * kPi * kPi);
    const double r8 = F_of(1e8, 2.0, s) / std::log(1e8), r14 = F_of(1e14, 2.0, s) / std::log(1e14);
    CHECK(r8 > 0.0);
    CHECK(std::abs(r14 - target) < std::abs(r8 - target));
    CHECK(r14 == doctest::Approx(target).epsilon(0.1));
}

TEST_CASE("Q_of elementary values") {
    CHECK(std::abs(Q_of(0.0, PrototypeCoefficients{0.3, 0.7, 0, 0, 0}, 1.0)) == 0.0);
    PhysicalParams p;
    const auto tt = tt_mode_coefficients(p, 0.5);
    CHECK(std::abs(Q_of(0.0, tt, 1.0)) == 0.0);
    const PrototypeCoefficients k{0.1, 0.2, 1.5, 0, 0};
    CHECK(Q_of(0.0, k, 1.0).real() == doctest::Approx(1.5));
}

TEST_CASE("property: F_char(gamma) = -Q(-gamma)") {
    oracle::Gen g(13);
    PhysicalParams p;
    p.xi = 1.0;
    std::vector<PrototypeCoefficients> sets{s_mode_coefficients(p, 1 / (64 * kPi * kPi), 0.3),
                                            tt_mode_coefficients(p, -0.7)};
    for (int i = 0; i < 20; ++i)
        sets.push_back({g.uniform(-3, 4), g.uniform(-3, 4), g.uniform(-5, 5), g.uniform(-5, 5), g.uniform(-5, 5)});
    for (const auto& k : sets)
        for (int j = 0; j < 50; ++j) {
            const cplx z = g.off_cut(100, 1.0);
            const cplx q = Q_of(-z, k, 1.0);
            CHECK(std::abs(characteristic_F(z, k, 1.0) + q) < 1e-12 * (1 + std::abs(q)));
        }
}

TEST_CASE("Stieltjes-Perron inversion of 1/F") {
    const auto s = rho_density(1.0);
    const double c = 2.0;
    const auto mu = perron_inverse_F(c, s);
    REQUIRE(mu.atoms.size() == 1);
    CHECK(mu.atoms[0].location == c);
    CHECK(mu.atoms[0].weight > 0.0);
    CHECK(mu.atoms[0].weight == doctest::Approx(1.0 / stieltjes_J(c, 1.0).real()).epsilon(1e-12));
    for (double w2 : {0.0, 0.5, 3.0, 20.0, 1e3, 1e5}) {
        const double rec = mu.atoms[0].weight / (c + w2) + measure_stieltjes(mu, w2, 1.0);
        CHECK(rec == doctest::Approx(1.0 / F_rho_closed(w2, c, 1.0)).epsilon(1e-4));
    }
    // phi(M) log^2 M stays bounded.
    double hi = 0.0;
    for (double M : {10.0, 1e3, 1e5, 1e8, 1e12}) hi = std::max(hi, std::abs(mu.continuous(M)) * std::pow(std::log(M), 2));
    CHECK(hi < 2 * 16 * kPi * kPi);
    const double mass = quad::integrate([&](double u) { return mu.continuous(4 * std::exp(u)) * 4 * std::exp(u); },
                                        1e-12, std::log(1e8 / 4), 1e-10, 1e-8)
                            .value;
    CHECK(std::isfinite(mass));
    CHECK_THROWS_AS(perron_inverse_F(4.5, s), DomainError);
}
