#include <doctest.h>

#include "frozen_values.hpp"
#include "oracles.hpp"
#include "semistab/cosmology.hpp"
#include "semistab/mode_algebra.hpp"

using namespace semistab;

namespace {

PhysicalParams unit_params(double xi = 1.0) {
    PhysicalParams p;
    p.xi = xi;
    return p;
}

// Random set with three real zeros in (-20, 4) built from the zeros themselves.
PrototypeCoefficients three_real(oracle::Gen& g, std::array<double, 3>* zs = nullptr) {
    for (;;) {
        std::array<double, 3> z{g.uniform(-20, 3.9), g.uniform(-20, 3.9), g.uniform(-20, 3.9)};
        std::sort(z.begin(), z.end());
        if (z[1] - z[0] < 0.2 || z[2] - z[1] < 0.2) continue;
        const double a = g.uniform(-2, 3.5);
        if (zs) *zs = z;
        return coefficients_with_zeros(a, g.uniform(-2, 3.5), 1.0, z);
    }
}

bool near_any(double x, const std::vector<double>& v, double tol) {
    for (double y : v)
        if (std::abs(x - y) <= tol * std::max(1.0, std::abs(y))) return true;
    return false;
}

}  // namespace

TEST_CASE("characteristic_F basics") {
    const auto tt = tt_mode_coefficients(unit_params(), 3.0);
    CHECK(std::abs(characteristic_F(0.0, tt, 1.0)) == 0.0);
    const PrototypeCoefficients k{0.3, -1.0, 2.0, -1.0, 0.5};
    for (double g : {-100.0, -1.0, 0.5, 3.99}) CHECK(characteristic_F(g, k, 1.0).imag() == 0.0);
    CHECK_THROWS_AS(characteristic_F(cplx(4.5, 0.0), k, 1.0), DomainError);
    // Direct evaluation against the oracle J.
    const cplx z(1.0, 2.0);
    const cplx ref = z * (k.a1 - z) * (k.a2 - z) * oracle::J(z, 1.0) - (k.b0 + k.b1 * z + k.b2 * z * z);
    CHECK(std::abs(characteristic_F(z, k, 1.0) - ref) < 1e-12 * std::abs(ref));
    const double h = 1e-6;
    const cplx fd = (characteristic_F(z + h, k, 1.0) - characteristic_F(z - h, k, 1.0)) / (2 * h);
    CHECK(std::abs(characteristic_F_prime(z, k, 1.0) - fd) < 1e-7 * std::abs(fd));
}

TEST_CASE("find_zeros: frozen real zeros") {
    const auto zs = find_zeros({-1, -1, -1, -10, 3}, 1.0);
    const auto re = zs.real_zeros();
    REQUIRE(re.size() == 2);
    CHECK(near_any(frozen::kFigZeroNeg, re, 1e-10));
    CHECK(near_any(frozen::kFigZeroPos, re, 1e-10));

    const auto st = find_zeros({0.4, 0.4, 1e-3, -0.0501215, 0.02}, 1.0);
    const auto r2 = st.real_zeros();
    REQUIRE(r2.size() == 3);
    for (double z : {frozen::kStableZero0, frozen::kStableZero1, frozen::kStableZero2})
        CHECK(near_any(z, r2, 1e-10));
}

TEST_CASE("find_zeros: TT set contains zero") {
    for (double b2 : {-0.7, 0.5, 10.0}) {
        const auto zs = find_zeros(tt_mode_coefficients(unit_params(), b2), 1.0);
        bool has0 = false;
        for (const auto& z : zs.zeros)
            if (std::abs(z.gamma) < 1e-12) {
                has0 = true;
                CHECK(z.residual <= 1e-12);
            }
        CHECK(has0);
    }
}

TEST_CASE("find_zeros: Planck-hierarchy S set has a zero near -b0/b1") {
    PhysicalParams p = unit_params();
    p.G = 1e-5;
    const auto k = s_mode_coefficients(p, fixed_linear_constants().alpha1_S, 0.0);
    const double est = -k.b0 / k.b1;
    const auto zs = find_zeros(k, 1.0);
    double best = INFINITY;
    for (double r : zs.real_zeros()) best = std::min(best, std::abs(r - est));
    CHECK(best < 1e-3 * std::abs(est));
}

TEST_CASE("property: winding count matches refined zeros") {
    oracle::Gen g(21);
    for (int i = 0; i < 25; ++i) {
        const PrototypeCoefficients k{g.uniform(-3, 3.5), g.uniform(-3, 3.5), g.uniform(-5, 5), g.uniform(-5, 5),
                                      g.uniform(-5, 5)};
        const auto zs = find_zeros(k, 1.0);
        int inside = 0;
        for (const auto& z : zs.zeros) {
            CHECK(z.residual <= 1e-10);
            if (std::abs(z.gamma) < 50.0) ++inside;
        }
        if (zs.all_found && !zs.absorbed_into_cut) CHECK(winding_cut_disk(k, 1.0, 50.0) == inside);
        CHECK((zs.box_consistent || zs.absorbed_into_cut));
        // Complex members come in conjugate pairs.
        for (const auto& z : zs.zeros) {
            if (z.cls != ZeroClass::complex_pair_member) continue;
            int mates = 0;
            for (const auto& w : zs.zeros)
                if (std::abs(w.gamma - std::conj(z.gamma)) < 1e-8 * (1 + std::abs(z.gamma))) ++mates;
            CHECK(mates == 1);
        }
    }
}

TEST_CASE("winding over rectangles") {
    const PrototypeCoefficients k{-1, -1, -1, -10, 3};
    CHECK(winding_rectangle(k, 1.0, -1.0, 3.9, -1.0, 1.0) == 2);
    CHECK(winding_rectangle(k, 1.0, -1.0, 1.0, -1.0, 1.0) == 1);
    CHECK(winding_rectangle(k, 1.0, 0.5, 1.0, -1.0, 1.0) == 0);
}

TEST_CASE("betas from gammas") {
    const auto b = betas_from_gammas(std::array<cplx, 3>{1.0, 2.0, 3.0});
    CHECK(b.beta0 == doctest::Approx(-6));
    CHECK(b.beta1 == doctest::Approx(11));
    CHECK(b.beta2 == doctest::Approx(-6));
    const std::array<cplx, 3> g{-2.0, cplx(1, 3), cplx(1, -3)};
    const auto c = betas_from_gammas(g);
    for (double M : {-3.0, 0.0, 1.7, 5.0, 40.0}) {
        const cplx prod = (M - g[0]) * (M - g[1]) * (M - g[2]);
        CHECK(std::abs(prod.imag()) < 1e-12);
        CHECK(c(M) == doctest::Approx(prod.real()).epsilon(1e-13));
    }
    CHECK_THROWS_AS(betas_from_gammas(std::array<cplx, 3>{-2.0, cplx(1, 3), cplx(1, 2)}), DomainError);
    ZeroSet two;
    two.count = 2;
    two.zeros = {Zero{-1.0}, Zero{2.0}};
    CHECK_THROWS_AS(betas_from_gammas(two), DomainError);
}

TEST_CASE("partial fractions") {
    const std::array<cplx, 3> g{-3.0, 0.5, 2.0};
    auto pf = partial_fractions(g, -3.0, 1.0);
    CHECK(std::abs(pf[0].A) < 1e-15);
    oracle::Gen gen(22);
    for (int i = 0; i < 20; ++i) {
        const std::array<cplx, 3> z{gen.uniform(-10, 3), cplx(gen.uniform(-5, 3), gen.uniform(0.1, 4)), 0.0};
        const std::array<cplx, 3> zz{z[0], z[1], std::conj(z[1])};
        const double a1 = gen.uniform(-3, 4), a2 = gen.uniform(-3, 4);
        pf = partial_fractions(zz, a1, a2);
        cplx sum = 0.0;
        for (const auto& t : pf) sum += t.A;
        CHECK(std::abs(sum - 1.0) < 1e-10);
        for (int j = 0; j < 5; ++j) {
            const double M = gen.uniform(4, 100);
            const cplx R = (M - a1) * (M - a2) / ((M - zz[0]) * (M - zz[1]) * (M - zz[2]));
            cplx acc = 0.0;
            for (const auto& t : pf) acc += t.A / (M - t.gamma);
            CHECK(std::abs(acc - R) < 1e-12 * (std::abs(R) + 1e-3));
        }
    }
    CHECK_THROWS_AS(partial_fractions({1.0, 1.0, 2.0}, 0, 0), DomainError);
}

TEST_CASE("property: constraint holds for three-real-zero sets") {
    oracle::Gen g(23);
    for (int i = 0; i < 8; ++i) {
        const auto k = three_real(g);
        const auto zs = find_zeros(k, 1.0);
        REQUIRE(zs.count == 3);
        const auto prof = auxiliary_profiles(k, betas_from_gammas(zs), 1.0);
        for (double r : prof.constraint_residuals) CHECK(r < 1e-6);
        // M b2 h2 stays bounded along the ray.
        double hi = 0.0;
        for (double M : {1e2, 1e4, 1e6, 1e8}) hi = std::max(hi, std::abs(k.b2 * prof.h_hat[2](M)) * M);
        CHECK(hi < 1.0);
    }
}

TEST_CASE("constraint is sensitive to perturbed betas") {
    oracle::Gen g(24);
    const auto k = three_real(g);
    auto b = betas_from_gammas(find_zeros(k, 1.0));
    b.beta0 *= 1.1;
    b.beta1 *= 1.1;
    b.beta2 *= 1.1;
    const auto prof = auxiliary_profiles(k, b, 1.0);
    CHECK(*std::max_element(prof.constraint_residuals.begin(), prof.constraint_residuals.end()) > 1e-2);
}

TEST_CASE("reduced construction without the first profile") {
    const auto k = coefficients_with_zeros(0.4, 0.4, 1.0, {-6.0, -1.0, 0.0});
    CHECK(std::abs(k.b0) < 1e-15);
    PrototypeCoefficients kk = k;
    kk.b0 = 0.0;
    const auto prof = auxiliary_profiles(kk, betas_from_gammas(std::array<cplx, 3>{-6.0, -1.0, 0.0}), 1.0);
    CHECK(!prof.present[0]);
    CHECK(std::isnan(prof.constraint_residuals[0]));
    CHECK(prof.constraint_residuals[1] < 1e-6);
    CHECK(prof.constraint_residuals[2] < 1e-6);
}

TEST_CASE("varsigma profile") {
    const std::array<cplx, 3> g{-5.0, -2.0, -0.5};
    const PrototypeCoefficients k{0.0, 0.0, 1, 1, 1};
    const auto s = varsigma_profile(k, g, 1.0);
    CHECK(s(4.0) == 0.0);
    for (double M = 4.01; M < 1e6; M *= 1.3) CHECK(s(M) > 0.0);
    const double lim = s(1e9) * 16 * kPi * kPi * 1e9;
    CHECK(lim == doctest::Approx(1.0).epsilon(1e-6));
    // Closed-form transform against quadrature.
    for (cplx z : {cplx(-1, 0), cplx(2, 1), cplx(-30, 5)}) {
        const auto q = stieltjes_g_quadrature(s, z, 1e-13);
        CHECK(std::abs(s.transform(z) - q.value) < 1e-9 * std::abs(q.value));
    }
    CHECK_THROWS_AS(varsigma_profile({5.0, 0.0, 1, 1, 1}, g, 1.0), DomainError);
    CHECK_THROWS_AS(varsigma_profile(k, {-5.0, -2.0, 6.0}, 1.0), DomainError);
}

TEST_CASE("convexity of A") {
    const double a1 = 0.4, a2 = -1.0;
    for (double gm : {-1e4, -100.0, -5.0, 0.0, 2.0, 3.9, 3.999}) {
        const auto pr = convexity_probe(a1, a2, 1.0, gm);
        CHECK(pr.A2 > 0.0);
        CHECK(pr.A == doctest::Approx(A_closed(a1, a2, 1.0, gm)).epsilon(1e-8));
        CHECK(pr.A1 == doctest::Approx(A_prime_closed(a1, a2, 1.0, gm)).epsilon(1e-7));
    }
    double prev = INFINITY;
    for (double gm : {-1e2, -1e4, -1e6, -1e8}) {
        const double d = A_prime_closed(a1, a2, 1.0, gm);
        CHECK(d < prev);
        prev = d;
    }
    // Logarithmic divergence: A' ~ -log|gamma| / (16 pi^2).
    const double slope = A_prime_closed(a1, a2, 1.0, -1e8) - A_prime_closed(a1, a2, 1.0, -1e4);
    CHECK(slope == doctest::Approx(-std::log(1e4) / (16 * kPi * kPi)).epsilon(0.05));
    prev = -INFINITY;
    for (double e : {1e-1, 1e-3, 1e-6, 1e-9}) {
        const double d = A_prime_closed(a1, a2, 1.0, 4.0 - e);
        CHECK(d > prev);
        prev = d;
    }
    CHECK(prev > 1.0);
    CHECK_THROWS_AS(convexity_probe(a1, a2, 1.0, 4.5), DomainError);
}

TEST_CASE("property: normal form split yields three real zeros") {
    oracle::Gen g(25);
    for (int i = 0; i < 10; ++i) {
        // Draw the tangent point, then the b2 that produces it.
        const double a1 = g.uniform(-2, 3.5), a2 = g.uniform(-2, 3.5), gt = g.uniform(-50, 3.99);
        const std::array<double, 3> bt{g.uniform(-2, 2), g.uniform(-2, 2), A_prime_closed(a1, a2, 1.0, gt)};
        const auto nf = normal_form_split(bt, a1, a2, 1.0, {1e-3, 1e-3});
        REQUIRE(nf.ok);
        CHECK(nf.gamma_tilde == doctest::Approx(gt).epsilon(1e-8));
        const auto re = nf.zeros.real_zeros();
        CHECK(re.size() == 3);
        for (double r : re) CHECK(r < 4.0);
        CHECK(nf.coeffs.b2 == bt[2]);
        double nearest = INFINITY;
        for (double r : re) nearest = std::min(nearest, std::abs(r));
        CHECK(nearest < 10 * nf.eps1 / std::abs(nf.q));
    }
    CHECK_THROWS_AS(normal_form_split({0, 0, 1}, 0.4, 0.4, 1.0, {0.0, 0.0}), DomainError);
    // Strongly negative b2 puts the tangent point out of reach; reported, not thrown.
    CHECK(!normal_form_split({0, 0, -2.5}, 0.4, 0.4, 1.0, {1e-3, 1e-3}).ok);
}

TEST_CASE("S-mode coefficient map") {
    const double a1S = fixed_linear_constants().alpha1_S;
    const auto k = s_mode_coefficients(unit_params(1.0), a1S, 0.25);
    CHECK(k.a1 == doctest::Approx(0.4));
    CHECK(k.a2 == doctest::Approx(0.4));
    CHECK(k.b0 == doctest::Approx(-0.96 * a1S).epsilon(1e-14));
    CHECK(k.b1 == doctest::Approx(-3.0 / (50 * kPi)).epsilon(1e-14));
    CHECK(k.b2 == 0.25);
    CHECK_THROWS_AS(s_mode_coefficients(unit_params(1.0 / 6.0), a1S, 0.0), DomainError);
    CHECK_THROWS_AS(s_mode_coefficients(unit_params(0.2), a1S, 0.0), DomainError);
    oracle::Gen g(26);
    for (int i = 0; i < 50; ++i) {
        PhysicalParams p = unit_params(g.uniform(0.26, 20));
        p.m = g.uniform(0.1, 3);
        p.G = g.log_uniform(1e-6, 10);
        const auto c = s_mode_coefficients(p, a1S, 0.0);
        CHECK(c.b0 < 0.0);
        CHECK(c.b1 < 0.0);
        CHECK(c.a1 < 4 * p.m * p.m);
    }
}

TEST_CASE("TT coefficient map") {
    for (double m : {0.3, 1.0, 2.5}) {
        PhysicalParams p = unit_params();
        p.m = m;
        const auto k = tt_mode_coefficients(p, 1.5);
        CHECK(k.b0 == 0.0);
        CHECK(k.a1 == doctest::Approx(4 * m * m));
        CHECK(k.a2 == doctest::Approx(4 * m * m));
        CHECK(k.b1 == doctest::Approx(60.0 / (8 * kPi)));
        CHECK(k.b2 == 1.5);
    }
}

TEST_CASE("zero-set contours") {
    const PrototypeCoefficients k{-1, -1, -1, -10, 3};
    ContourGrid grid;
    const auto zc = trace_zero_sets(k, 1.0, grid);
    CHECK(!zc.re_zero.empty());
    CHECK(!zc.im_zero.empty());
    // The real segment below threshold lies on the Im = 0 set.
    int on_axis = 0;
    for (const auto& l : zc.im_zero)
        for (cplx z : l.points)
            if (std::abs(z.imag()) < 1e-12 && z.real() < 4.0) ++on_axis;
    CHECK(on_axis > 10);
    const auto zs = find_zeros(k, 1.0);
    REQUIRE(zc.crossings.size() == 2);
    for (cplx c : zc.crossings) {
        double best = INFINITY;
        for (cplx z : zs.gammas()) best = std::min(best, std::abs(c - z));
        CHECK(best < 2 * zc.cell);
    }
}
