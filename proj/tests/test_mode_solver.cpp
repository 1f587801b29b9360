#include <doctest.h>

#include "oracles.hpp"
#include "semistab/mode_solver.hpp"

using namespace semistab;

namespace {

ModeGrid grid(double p, double T, double dt) {
    ModeGrid g;
    g.p = p;
    g.T = T;
    g.dt = dt;
    return g;
}

DysonConfig config(const PrototypeCoefficients& k) {
    DysonConfig c;
    c.coeffs = k;
    return c;
}

const PrototypeCoefficients kRoutes{0.4, 0.4, 1e-3, -0.0501215, 0.02};

double sup_before(const ModeSolution& s, double t) {
    double r = 0.0;
    for (int n = 0; n <= s.grid.steps() && s.grid.t(n) < t; ++n) r = std::max(r, std::abs(s.samples[n]));
    return r;
}

}  // namespace

TEST_CASE("mode grid and sources") {
    const auto g = ModeGrid::with_default_dt(3.0, 1.0, 0.0, 10.0);
    CHECK(g.dt == doctest::Approx(0.01 / std::sqrt(13.0)));
    CHECK(ModeGrid::with_default_dt(0.5, 1.0, 0.0, 10.0).dt == doctest::Approx(0.01 / std::sqrt(4.25)));
    CHECK_THROWS_AS(grid(0, 10, -0.1).validate(), DomainError);
    CHECK_THROWS_AS(grid(0, -1, 0.1).validate(), DomainError);
    const auto S = bump_source(grid(0, 10, 0.01), 1.0, 3.0, 2.0);
    CHECK(S.samples.front() == 0.0);
    CHECK(S.samples[200] == doctest::Approx(2.0));
    CHECK(S.samples[300] == 0.0);
    CHECK(bump(2.0, 1.0, 3.0) == doctest::Approx(oracle::bump(2.0, 1.0, 3.0)));
    ModeSource bad = S;
    bad.support_start = 2.5;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("retarded Green function against the Duhamel oracle") {
    const double dt = 0.01, T = 12.0;
    const auto g = grid(0, T, dt);
    const auto S = bump_source(g, 1.0, 4.0);
    for (double x : {2.25, 0.0, -0.36}) {
        const double p = 0.5, gamma = x - p * p;
        const auto u = retarded_green(gamma, p, dt, S.samples);
        double err = 0.0, ref = 0.0;
        for (int n = 0; n <= g.steps(); n += 50) {
            const double o = oracle::duhamel(x, g.t(n), [](double s) { return oracle::bump(s, 1.0, 4.0); }, 0.0, 256);
            err = std::max(err, std::abs(u[n] - o));
            ref = std::max(ref, std::abs(o));
        }
        CHECK(err / ref < 1e-4);
    }
}

TEST_CASE("retarded Green function converges at second order") {
    auto err = [](double dt) {
        const auto g = grid(0, 8, dt);
        const auto u = retarded_green(1.0, 0.0, dt, bump_source(g, 1.0, 4.0).samples);
        const double o = oracle::duhamel(1.0, 8.0, [](double s) { return oracle::bump(s, 1.0, 4.0); }, 0.0, 256);
        return std::abs(u.back() - o);
    };
    const double e1 = err(0.04), e2 = err(0.02);
    CHECK(e1 / e2 > 3.0);
    CHECK(e1 / e2 < 5.0);
}

TEST_CASE("Duhamel: zero in, zero out, complex agrees with real") {
    const std::vector<double> z(100, 0.0);
    for (double v : Duhamel(cplx(2.0, 0.0), 0.05).apply(z)) CHECK(v == 0.0);
    std::vector<double> f(200);
    for (int i = 0; i < 200; ++i) f[i] = oracle::bump(0.05 * i, 1, 3);
    std::vector<cplx> fc(f.begin(), f.end());
    const auto a = Duhamel(cplx(-0.7, 0.0), 0.05).apply(f);
    const auto b = Duhamel(cplx(-0.7, 0.0), 0.05).apply(fc);
    for (int i = 0; i < 200; ++i) CHECK(std::abs(a[i] - b[i].real()) < 1e-12 * (1 + std::abs(a[i])));
}

TEST_CASE("inverse kernel: K(0) = 0 and integrable start") {
    const auto s = rho_density(1.0);
    auto abs_int = [&](double dt) { return kernel_abs_integral(kernel_K(grid(0, 0.2, dt), 2.0, s), 0.1); };
    const auto tab = kernel_K(grid(0, 0.2, 0.01), 2.0, s);
    CHECK(tab.K[0] == 0.0);
    const double a = abs_int(0.01), b = abs_int(0.005);
    CHECK(std::isfinite(a));
    CHECK(std::abs(a - b) / b < 0.01);
}

TEST_CASE("forward map: zero in, zero out and round trip with the inverse") {
    const auto s = rho_density(1.0);
    const double dt = 0.005;
    const auto g = grid(0, 8, dt);
    const auto fwd = forward_kernel(g, s);
    const auto inv = kernel_K(g, 2.0, s);
    for (double v : apply_forward_G(std::vector<double>(g.steps() + 1, 0.0), fwd)) CHECK(v == 0.0);
    const auto phi = bump_source(g, 1.0, 4.0).samples;
    const auto Phi = apply_forward_G(phi, fwd);
    const auto back = invert_G(Phi, inv, g, 2.0);
    // Interior comparison; the stencil needs two points either side.
    std::vector<double> a(phi.begin(), phi.end() - 3), b(back.begin(), back.end() - 3);
    CHECK(relative_sup_diff(b, a) < 1e-5);
}

TEST_CASE("W_ret: zero in, zero out and linearity") {
    const auto g = grid(0, 10, 0.02);
    const auto tab = kernel_K(g, 2.0, rho_density(1.0));
    const std::vector<double> gam{0.5, 1.5, 3.0}, d{0.1, -0.2, 0.3};
    for (double v : W_ret_apply(std::vector<double>(g.steps() + 1, 0.0), gam, d, tab, g, 0.4)) CHECK(v == 0.0);
    const auto f1 = bump_source(g, 1, 3).samples, f2 = bump_source(g, 2, 6).samples;
    std::vector<double> f(f1.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = 2 * f1[i] - f2[i];
    const auto u = W_ret_apply(f, gam, d, tab, g, 0.4), u1 = W_ret_apply(f1, gam, d, tab, g, 0.4),
               u2 = W_ret_apply(f2, gam, d, tab, g, 0.4);
    double err = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) err = std::max(err, std::abs(u[i] - 2 * u1[i] + u2[i]));
    CHECK(err < 1e-12 * sup_norm(u));
}

TEST_CASE("dyson agrees with volterra and with pole plus cut") {
    const auto S = bump_source(grid(0, 30, 0.01), 1.0, 5.0);
    const auto cfg = config(kRoutes);
    const auto st = dyson_setup(S, cfg);
    const auto dy = dyson_solve(S, st, cfg);
    const auto vo = volterra_solve(S, st);
    const auto pc = polecut_solve(S, kRoutes, 1.0);
    CHECK(relative_sup_diff(dy.samples, vo.samples) < 1e-6);
    CHECK(relative_sup_diff(dy.samples, pc.samples) < 1e-3);
    CHECK(dy.report.envelope_respected);
    CHECK(dy.report.final_increment < 1e-12);
}

TEST_CASE("dyson with the exact reference stops after the first term") {
    const auto k = coefficients_with_zeros(0.4, 0.4, 1.0, {0.5, 1.5, 3.0});
    const auto S = bump_source(grid(0.5, 20, 0.01), 1.0, 3.0);
    auto cfg = config(k);
    cfg.reference = DysonConfig::Reference::self;
    const auto st = dyson_setup(S, cfg);
    const auto dy = dyson_solve(S, st, cfg);
    CHECK(dy.report.iterations <= 1);
    CHECK(relative_sup_diff(dy.samples, st.S_frak) < 1e-12);
    CHECK(relative_sup_diff(dy.samples, polecut_solve(S, k, 1.0).samples) < 1e-3);
}

TEST_CASE("dyson: causality, zero source and linearity") {
    const auto g = grid(0, 20, 0.02);
    const auto cfg = config(kRoutes);
    const auto late = bump_source(g, 6.0, 9.0);
    const auto u = dyson_solve(late, cfg);
    CHECK(sup_before(u, 6.0) == 0.0);
    CHECK(sup_norm(u.samples) > 0.0);

    ModeSource zero{g, std::vector<double>(g.steps() + 1, 0.0), 0.0};
    CHECK(sup_norm(dyson_solve(zero, cfg).samples) == 0.0);

    const auto a = bump_source(g, 1.0, 3.0), b = bump_source(g, 2.0, 7.0);
    ModeSource c{g, a.samples, 1.0};
    for (std::size_t i = 0; i < c.samples.size(); ++i) c.samples[i] = 3 * a.samples[i] - 0.5 * b.samples[i];
    const auto ua = dyson_solve(a, cfg), ub = dyson_solve(b, cfg), uc = dyson_solve(c, cfg);
    double err = 0.0;
    for (std::size_t i = 0; i < c.samples.size(); ++i)
        err = std::max(err, std::abs(uc.samples[i] - 3 * ua.samples[i] + 0.5 * ub.samples[i]));
    CHECK(err < 1e-10 * sup_norm(uc.samples));
}

TEST_CASE("dyson converges under grid refinement") {
    auto at = [](double dt) {
        const auto S = bump_source(grid(0, 10, dt), 1.0, 5.0);
        const auto u = dyson_solve(S, config(kRoutes));
        return u.samples[static_cast<int>(std::lround(10.0 / dt))];
    };
    const double a = at(0.04), b = at(0.02), c = at(0.01);
    CHECK(std::abs(a - b) / std::abs(b - c) > 3.0);
}

TEST_CASE("property: Gronwall envelope over random configurations") {
    oracle::Gen gen(21);
    int ran = 0;
    for (int i = 0; i < 6; ++i) {
        const double a1 = gen.uniform(0.2, 0.8), a2 = gen.uniform(0.2, 0.8);
        const double g1 = gen.uniform(0.05, 1.0), g2 = gen.uniform(1.2, 2.4), g3 = gen.uniform(2.6, 3.8);
        auto k = coefficients_with_zeros(a1, a2, 1.0, {g1, g2, g3});
        k.b1 *= 1 + gen.uniform(-0.02, 0.02);
        k.b2 *= 1 + gen.uniform(-0.02, 0.02);
        const auto S = bump_source(grid(gen.uniform(0, 2), 20, 0.02), 1.0, gen.uniform(2, 5));
        auto cfg = config(k);
        cfg.reference = DysonConfig::Reference::explicit_coeffs;
        cfg.reference_coeffs = coefficients_with_zeros(a1, a2, 1.0, {g1, g2, g3});
        const auto u = dyson_solve(S, cfg);
        CHECK(u.report.envelope_respected);
        CHECK(u.report.envelope_ratio <= 1.0);
        ++ran;
    }
    CHECK(ran == 6);
}

TEST_CASE("classification verdicts") {
    const auto st = classify_stability(coefficients_with_zeros(0.4, 0.4, 1.0, {0.5, 1.5, 3.0}), 1.0);
    CHECK(st.verdict == Verdict::stable_decaying);
    CHECK(st.rate == 0.0);

    const auto un = classify_stability(coefficients_with_zeros(0.4, 0.4, 1.0, {-0.25, 1.0, 3.0}), 1.0);
    CHECK(un.verdict == Verdict::unstable);
    CHECK(un.rate == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(un.L == doctest::Approx(0.25).epsilon(1e-8));

    PhysicalParams p;
    p.xi = 1.0;
    CHECK(classify_stability(tt_mode_coefficients(p, -0.7), 1.0).verdict == Verdict::marginal);
    const auto tt = classify_stability(tt_mode_coefficients(p, 50.0), 1.0);
    CHECK(tt.verdict == Verdict::unstable);
    CHECK(tt.L < 0.05);
    CHECK(tt.L > 0.0);
    CHECK(classify_stability(tt_mode_coefficients(p, 5.0), 1.0).L > tt.L);

    p.m = 0.5;
    CHECK(classify_stability(tt_mode_coefficients(p, -0.7), 0.5).verdict == Verdict::mixed_cut_absorbed);
}

TEST_CASE("pole plus cut refuses a zero at the threshold") {
    const auto S = bump_source(grid(0, 5, 0.01), 1.0, 3.0);
    const auto k = coefficients_with_zeros(0.4, 0.4, 1.0, {0.5, 1.5, 4.0 * (1 - 1e-8)});
    CHECK_THROWS_AS(polecut_solve(S, k, 1.0), DomainError);
}

TEST_CASE("asymptotic fit on synthetic signals") {
    std::vector<double> t, pw, ex, sn;
    for (int i = 0; i <= 8000; ++i) {
        const double x = 1.0 + 0.0125 * i;
        t.push_back(x);
        pw.push_back(std::cos(3 * x) * std::pow(x, -1.5));
        ex.push_back(std::sin(2 * x) * std::exp(0.3 * x));
        sn.push_back(std::sin(1.7 * x));
    }
    FitWindow w;
    w.t_lo = 20;
    w.t_hi = 100;
    w.width = 5;
    const auto a = asymptotic_fit(t, pw, w);
    CHECK(a.kind == AsymptoticFit::Kind::power);
    CHECK(a.power_exponent == doctest::Approx(-1.5).epsilon(0.03));
    const auto b = asymptotic_fit(t, ex, w);
    CHECK(b.kind == AsymptoticFit::Kind::exponential);
    CHECK(b.rate == doctest::Approx(0.3).epsilon(0.01));
    CHECK(std::abs(asymptotic_fit(t, sn, w).power_exponent) < 0.05);
    FitWindow bad = w;
    bad.t_lo = 200;
    bad.t_hi = 300;
    CHECK_THROWS(asymptotic_fit(t, pw, bad));
}

TEST_CASE("cut density is non-negative for stable coefficients") {
    const auto k = coefficients_with_zeros(0.4, 0.4, 1.0, {0.5, 1.5, 3.0});
    for (double M : {4.01, 5.0, 20.0, 1e3, 1e5}) CHECK(cut_density(M, k, 1.0) >= 0.0);
    CHECK(cut_density(3.0, k, 1.0) == 0.0);
}
