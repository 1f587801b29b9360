#include "semistab/validation.hpp"

#include <cmath>
#include <sstream>

#include "semistab/cosmology.hpp"
#include "semistab/kernel.hpp"
#include "semistab/mode_solver.hpp"
#include "semistab/tensor.hpp"

namespace semistab {

std::map<std::string, double> default_validation_tolerances() {
    return {
        {"stieltjes_oracle", 1e-8},      {"sokhotski_plemelj", 1e-10},
        {"F_closed_form", 1e-8},         {"characteristic_identity", 1e-12},
        {"tensor_reconstruction", 1e-10}, {"tensor_tt", 1e-10},
        {"projector_algebra", 1e-9},     {"de_donder", 1e-10},
        {"J1_identity", 1e-8},           {"dual_route_polecut", 1e-3},
        {"dual_route_volterra", 1e-6},   {"gronwall_envelope", 1.0},
        {"kernel_decay", 0.1},           {"mass_inversion", 0.03},
    };
}

double sokhotski_plemelj_residual(const std::function<double(double, double)>& rho, double m) {
    double worst = 0.0;
    for (double x : {1.0001, 1.01, 1.5, 3.0, 10.0, 100.0, 1e4}) {
        const double M = 4.0 * m * m * x;
        const double ref = kPi * rho(M, m);
        const double im = stieltjes_J_ext(cplx(M, 0.0), m).imag();
        worst = std::max(worst, std::abs(im - ref) / std::abs(kPi * eval_rho(M, m)));
    }
    return worst;
}

namespace {

Check make(const std::string& name, double value, double tol, bool pass, std::string detail = {}) {
    Check c;
    c.name = name;
    c.value = value;
    c.tolerance = tol;
    c.passed = pass;
    c.detail = std::move(detail);
    return c;
}

Check check_stieltjes(double tol) {
    const double m = 1.0;
    double worst = 0.0;
    const cplx pts[] = {{-1e4, 0.0}, {-10.0, 0.0}, {0.0, 0.0},  {3.999, 0.0},
                        {2.0, 1.0},  {100.0, 50.0}, {-300.0, -700.0}, {5.0, 1e-3}};
    for (const cplx z : pts) {
        const cplx a = stieltjes_J(z, m);
        const cplx b = quadrature_J(z, m, 1e-13).value;
        worst = std::max(worst, std::abs(a - b) / std::abs(b));
    }
    return make("stieltjes_oracle", worst, tol, worst < tol, "closed form vs quadrature");
}

Check check_F(double tol) {
    const double m = 1.0, c = 2.0;
    const auto rho = rho_density(m);
    double prev = -1.0, worst = 0.0;
    bool ok = true;
    for (int i = 0; i <= 100; ++i) {
        const double w2 = 1e4 * i / 100.0;
        const double f = F_rho_closed(w2, c, m);
        if (!(f > 0.0) || !(f > prev)) ok = false;
        prev = f;
        if (i % 10 == 0) {
            const double q = F_quadrature(w2, c, rho, 1e-12).value;
            worst = std::max(worst, std::abs(f - q) / std::abs(q));
        }
    }
    return make("F_closed_form", worst, tol, ok && worst < tol,
                ok ? "positive and increasing" : "positivity or monotonicity violated");
}

Check check_characteristic(double tol) {
    const double m = 1.0;
    const PrototypeCoefficients k{0.4, 0.7, 1e-3, -0.05, 0.02};
    double worst = 0.0;
    for (int i = 0; i < 40; ++i) {
        const cplx g(-20.0 + 0.6 * i, i % 3 == 0 ? 0.0 : 0.5 * (i % 7) - 1.5);
        const cplx Q = Q_of(-g, k, m);
        worst = std::max(worst, std::abs(characteristic_F(g, k, m) + Q) / (1.0 + std::abs(Q)));
    }
    return make("characteristic_identity", worst, tol, worst < tol);
}

std::vector<Check> check_tensor(const std::map<std::string, double>& tol) {
    using namespace tensor;
    std::vector<Check> out;
    const auto s = Space::periodic_box(4, 4, 2.0 * kPi, 0.0, 0.05, 128, 0.5);
    const auto h = random_tensor(s, 11, 1);
    const auto d = decompose(h);
    const double rec = relative_diff(h, d.hS + d.hV + d.hTT);
    out.push_back(make("tensor_reconstruction", rec, tol.at("tensor_reconstruction"),
                       rec < tol.at("tensor_reconstruction")));
    const double tt = std::max(sup_norm(trace(d.hTT)) / sup_norm(d.hTT),
                               divergence_residual(d.hTT));
    out.push_back(make("tensor_tt", tt, tol.at("tensor_tt"), tt < tol.at("tensor_tt"),
                       "trace and divergence of hTT"));
    const auto fix = de_donder_fix(h);
    const auto hb = trace_reverse(fix.h);
    const double dd = divergence_residual(hb);
    out.push_back(make("de_donder", dd, tol.at("de_donder"), dd < tol.at("de_donder")));
    const auto PS = apply_PS(hb), PT = apply_PTT(hb);
    const double alg = std::max({relative_diff(PS + PT, hb), relative_diff(apply_PS(PS), PS),
                                 relative_diff(apply_PTT(PT), PT),
                                 sup_norm(apply_PS(PT)) / sup_norm(hb)});
    out.push_back(make("projector_algebra", alg, tol.at("projector_algebra"),
                       alg < tol.at("projector_algebra")));
    const auto c = linearised_curvature(hb);
    const double j = relative_diff(c.J1, 6.0 * box(c.G1S));
    out.push_back(make("J1_identity", j, tol.at("J1_identity"), j < tol.at("J1_identity")));
    return out;
}

std::vector<Check> check_routes(const std::map<std::string, double>& tol) {
    std::vector<Check> out;
    const double m = 1.0;
    const PrototypeCoefficients k{0.4, 0.4, 1e-3, -0.0501215, 0.02};
    ModeGrid g;
    g.p = 0.0;
    g.t0 = 0.0;
    g.T = 50.0;
    g.dt = 0.01;
    const auto S = bump_source(g, 1.0, 5.0);
    DysonConfig cfg;
    cfg.coeffs = k;
    cfg.m = m;
    const auto st = dyson_setup(S, cfg);
    const auto dy = dyson_solve(S, st, cfg);
    const auto vo = volterra_solve(S, st);
    const auto pc = polecut_solve(S, k, m);
    const double dp = relative_sup_diff(dy.samples, pc.samples);
    const double dv = relative_sup_diff(dy.samples, vo.samples);
    out.push_back(make("dual_route_polecut", dp, tol.at("dual_route_polecut"),
                       dp < tol.at("dual_route_polecut"), "dyson vs pole+cut, t in [0, 50]"));
    out.push_back(make("dual_route_volterra", dv, tol.at("dual_route_volterra"),
                       dv < tol.at("dual_route_volterra"), "dyson vs volterra"));
    const auto& r = dy.report;
    auto c = make("gronwall_envelope", r.envelope_ratio, tol.at("gronwall_envelope"),
                  r.envelope_ratio <= tol.at("gronwall_envelope"),
                  "max |partial sum - first term| / envelope");
    c.extra["kappa"] = r.kappa;
    c.extra["iterations"] = r.iterations;
    out.push_back(c);
    return out;
}

Check check_kernel(double tol) {
    const double m = 1.0;
    const auto mu = perron_inverse_F(2.0 * m * m, rho_density(m));
    const auto k = SpectralKernel::inverse(mu, 0.0, m);
    const auto b = fit_kernel_bound(k, 1.0, 100.0, 2000);
    std::vector<double> ts, ys;
    for (int i = 0; i < 4000; ++i) ts.push_back(1.0 + 99.0 * i / 3999.0);
    const auto v = k.at(ts);
    for (const auto& x : v) ys.push_back(x.K_cont);
    FitWindow w;
    w.t_lo = 5.0;
    w.t_hi = 100.0;
    w.width = 5.0;
    w.envelope = FitWindow::Envelope::max;
    const auto fit = asymptotic_fit(ts, ys, w);
    auto c = make("kernel_decay", fit.power_exponent, tol, fit.power_exponent <= -1.0 + tol,
                  "envelope exponent of the continuous kernel part, |K| <= C/t");
    c.extra["C"] = b.C;
    c.extra["decay_exponent"] = fit.power_exponent;
    return c;
}

Check check_mass(double tol) {
    const double mass = invert_mass(CosmologyInputs{});
    const double rel = std::abs(mass / 7.8e-3 - 1.0);
    auto c = make("mass_inversion", rel, tol, rel < tol, "relative deviation from 7.8e-3 eV");
    c.extra["m_eV"] = mass;
    return c;
}

template <class F>
void guarded(std::vector<Check>& out, const std::string& name, F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        out.push_back(make(name, std::nan(""), 0.0, false, std::string("error: ") + e.what()));
    }
}

}  // namespace

std::vector<Check> run_validation(const std::map<std::string, double>& overrides) {
    auto tol = default_validation_tolerances();
    for (const auto& [k, v] : overrides) {
        if (!tol.count(k)) throw DomainError("validation: unknown tolerance key '" + k + "'");
        tol[k] = v;
    }
    std::vector<Check> out;
    guarded(out, "stieltjes_oracle", [&] { out.push_back(check_stieltjes(tol["stieltjes_oracle"])); });
    guarded(out, "sokhotski_plemelj", [&] {
        const double r = sokhotski_plemelj_residual(eval_rho, 1.0);
        out.push_back(make("sokhotski_plemelj", r, tol["sokhotski_plemelj"],
                           r < tol["sokhotski_plemelj"], "Im J(M + i0) = pi rho(M)"));
    });
    guarded(out, "F_closed_form", [&] { out.push_back(check_F(tol["F_closed_form"])); });
    guarded(out, "characteristic_identity",
            [&] { out.push_back(check_characteristic(tol["characteristic_identity"])); });
    guarded(out, "tensor", [&] {
        for (auto& c : check_tensor(tol)) out.push_back(std::move(c));
    });
    guarded(out, "dual_route", [&] {
        for (auto& c : check_routes(tol)) out.push_back(std::move(c));
    });
    guarded(out, "kernel_decay", [&] { out.push_back(check_kernel(tol["kernel_decay"])); });
    guarded(out, "mass_inversion", [&] { out.push_back(check_mass(tol["mass_inversion"])); });
    return out;
}

}  // namespace semistab
