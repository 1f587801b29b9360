#include "semistab/mode_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "semistab/parallel.hpp"
#include "semistab/quadrature.hpp"

namespace semistab {

double sup_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

double relative_sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DomainError("relative_sup_diff: size mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    const double s = sup_norm(b);
    return s > 0.0 ? d / s : d;
}

void ModeSource::validate() const {
    grid.validate();
    if (samples.size() != static_cast<std::size_t>(grid.steps() + 1))
        throw DomainError("source: sample count does not match the grid");
    for (std::size_t n = 0; n < samples.size(); ++n) {
        if (!std::isfinite(samples[n])) throw DomainError("source: non-finite sample");
        if (grid.t(static_cast<int>(n)) < support_start && samples[n] != 0.0)
            throw DomainError("source: nonzero before support_start");
    }
    if (samples[0] != 0.0) throw DomainError("source: must vanish at the first grid point");
}

double bump(double t, double start, double end, double amplitude) {
    const double x = (2.0 * t - start - end) / (end - start);
    if (std::abs(x) >= 1.0) return 0.0;
    return amplitude * std::exp(1.0 - 1.0 / (1.0 - x * x));
}

ModeSource bump_source(const ModeGrid& g, double start, double end, double amplitude) {
    g.validate();
    if (!(end > start)) throw DomainError("bump_source: empty support");
    ModeSource s;
    s.grid = g;
    s.support_start = start;
    s.samples.resize(g.steps() + 1);
    for (int n = 0; n <= g.steps(); ++n) s.samples[n] = bump(g.t(n), start, end, amplitude);
    s.validate();
    return s;
}

std::string to_string(Route r) {
    switch (r) {
        case Route::dyson: return "dyson";
        case Route::volterra: return "volterra";
        case Route::polecut: return "polecut";
    }
    return "?";
}

// ---- Duhamel ----

Duhamel::Duhamel(cplx x, double h) : x_(x), h_(h) {
    const cplx z = x * h * h;
    if (std::abs(z) < 0.5) {
        cplx c{}, s{}, p1{}, p2{};
        cplx pw = 1.0;
        double f2k = 1.0;  // (2k)!
        for (int k = 0; k < 20; ++k) {
            const double f2k1 = f2k * (2 * k + 1), f2k2 = f2k1 * (2 * k + 2);
            c += pw / f2k;
            s += pw / f2k1;
            p1 += pw / f2k2;
            p2 += pw / ((2 * k + 3) * f2k1);
            pw *= -z;
            f2k = f2k2;
        }
        C_ = c;
        S_ = h * s;
        P1_ = h * h * p1;
        P2_ = h * h * h * p2;
    } else {
        const cplx r = std::sqrt(x);
        C_ = std::cos(r * h);
        S_ = std::sin(r * h) / r;
        P1_ = (1.0 - C_) / x;
        P2_ = (S_ - h * C_) / x;
    }
}

namespace {

template <class T, class C>
std::vector<T> duhamel_run(const std::vector<T>& f, C cC, C cS, C cx, C cP1, C cP2, double h) {
    std::vector<T> u(f.size(), T{});
    T un{}, vn{};
    const C E = h * cS - cP1;
    for (std::size_t n = 0; n + 1 < f.size(); ++n) {
        const T df = (f[n + 1] - f[n]) / h;
        const T u1 = cC * un + cS * vn - (f[n + 1] * cP1 - df * cP2);
        const T v1 = -cx * cS * un + cC * vn - (f[n + 1] * cS - df * E);
        un = u1;
        vn = v1;
        u[n + 1] = un;
    }
    return u;
}

}  // namespace

std::vector<cplx> Duhamel::apply(const std::vector<cplx>& f) const {
    return duhamel_run<cplx, cplx>(f, C_, S_, x_, P1_, P2_, h_);
}

std::vector<double> Duhamel::apply(const std::vector<double>& f) const {
    if (x_.imag() != 0.0) throw DomainError("Duhamel: real input needs real x");
    return duhamel_run<double, double>(f, C_.real(), S_.real(), x_.real(), P1_.real(), P2_.real(),
                                       h_);
}

std::vector<cplx> retarded_green(cplx gamma, double p, double dt, const std::vector<cplx>& f) {
    return Duhamel(p * p + gamma, dt).apply(f);
}

std::vector<double> retarded_green(double gamma, double p, double dt, const std::vector<double>& f) {
    return Duhamel(cplx(p * p + gamma, 0.0), dt).apply(f);
}

// ---- forward / inverse maps ----

std::vector<double> apply_forward_G(const std::vector<double>& phi, const KernelTable& forward,
                                    bool corrected) {
    return convolve(forward, corrected ? interpolation_corrected(phi, forward.dt) : phi);
}

std::vector<double> apply_forward_G(const std::vector<double>& phi, const SpectralDensity& sigma,
                                    const ModeGrid& g, bool corrected) {
    return apply_forward_G(phi, forward_kernel(g, sigma), corrected);
}

std::vector<double> second_difference(const std::vector<double>& f, double dt, int order) {
    const int n = static_cast<int>(f.size());
    std::vector<double> d(n, 0.0);
    const double h2 = dt * dt;
    if (order == 2) {
        if (n < 4) throw DomainError("second_difference: grid too coarse");
        for (int i = 1; i + 1 < n; ++i) d[i] = (f[i - 1] - 2.0 * f[i] + f[i + 1]) / h2;
        d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
        d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
        return d;
    }
    if (order != 4) throw DomainError("second_difference: order must be 2 or 4");
    if (n < 6) throw DomainError("second_difference: grid too coarse");
    const double q = 12.0 * h2;
    for (int i = 2; i + 2 < n; ++i)
        d[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / q;
    auto edge0 = [&](auto at) {
        return (45.0 * at(0) - 154.0 * at(1) + 214.0 * at(2) - 156.0 * at(3) + 61.0 * at(4) -
                10.0 * at(5)) /
               q;
    };
    auto edge1 = [&](auto at) {
        return (10.0 * at(0) - 15.0 * at(1) - 4.0 * at(2) + 14.0 * at(3) - 6.0 * at(4) + at(5)) / q;
    };
    auto fwd = [&](int k) { return f[k]; };
    auto bwd = [&](int k) { return f[n - 1 - k]; };
    d[0] = edge0(fwd);
    d[1] = edge1(fwd);
    d[n - 1] = edge0(bwd);
    d[n - 2] = edge1(bwd);
    return d;
}

std::vector<double> interpolation_corrected(const std::vector<double>& f, double dt) {
    const auto d2 = second_difference(f, dt, 4);
    std::vector<double> out(f);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] -= dt * dt / 12.0 * d2[i];
    return out;
}

std::vector<double> invert_G(const std::vector<double>& Phi, const KernelTable& kernel,
                             const ModeGrid& g, double c, int stencil_order, bool corrected) {
    const auto d2 = second_difference(Phi, g.dt, stencil_order);
    std::vector<double> rhs(Phi.size());
    for (std::size_t i = 0; i < Phi.size(); ++i) rhs[i] = (c + g.p * g.p) * Phi[i] + d2[i];
    return convolve(kernel, corrected ? interpolation_corrected(rhs, g.dt) : rhs);
}

std::vector<double> W_ret_apply(const std::vector<double>& phi, const std::vector<double>& gammas,
                                const std::vector<double>& d, const KernelTable& kernel,
                                const ModeGrid& g, double direct) {
    if (gammas.size() != d.size()) throw DomainError("W_ret_apply: weight count mismatch");
    const auto y = convolve(kernel, phi);
    std::vector<double> out(phi.size(), 0.0);
    for (std::size_t i = 0; i < gammas.size(); ++i) {
        if (d[i] == 0.0) continue;
        const auto u = retarded_green(gammas[i], g.p, g.dt, y);
        for (std::size_t n = 0; n < out.size(); ++n) out[n] += d[i] * u[n];
    }
    if (direct != 0.0)
        for (std::size_t n = 0; n < out.size(); ++n) out[n] += direct * y[n];
    return out;
}

// ---- Dyson / Volterra ----

DysonSetup dyson_setup(const ModeSource& S, const DysonConfig& cfg) {
    S.validate();
    const double m = cfg.m;
    const double c = cfg.c.value_or(2.0 * m * m);
    DysonSetup st;
    const auto& bt = cfg.coeffs;
    ZeroSet zs;
    switch (cfg.reference) {
        case DysonConfig::Reference::normal_form: {
            auto nf = normal_form_split({bt.b0, bt.b1, bt.b2}, bt.a1, bt.a2, m, cfg.eps);
            if (!nf.ok) throw DomainError("dyson: normal-form split found no three-real-zero reference");
            st.reference = nf.coeffs;
            zs = nf.zeros;
            break;
        }
        case DysonConfig::Reference::self:
            st.reference = bt;
            zs = find_zeros(bt, m);
            break;
        case DysonConfig::Reference::explicit_coeffs:
            if (!cfg.reference_coeffs) throw DomainError("dyson: explicit reference missing");
            st.reference = *cfg.reference_coeffs;
            if (st.reference.a1 != bt.a1 || st.reference.a2 != bt.a2)
                throw DomainError("dyson: reference must share a1, a2");
            zs = find_zeros(st.reference, m);
            break;
    }
    st.gammas = zs.real_zeros();
    if (zs.count != 3 || st.gammas.size() != 3)
        throw DomainError("dyson: reference needs three real zeros of the local factor");
    std::sort(st.gammas.begin(), st.gammas.end());
    const double D0 = bt.b0 - st.reference.b0, D1 = bt.b1 - st.reference.b1,
                 D2 = bt.b2 - st.reference.b2;
    st.d.resize(3);
    st.e.resize(3);
    for (int i = 0; i < 3; ++i) {
        const double gi = st.gammas[i];
        double den = 1.0;
        for (int j = 0; j < 3; ++j)
            if (j != i) den *= st.gammas[j] - gi;
        st.e[i] = (c - gi) / den;
        st.d[i] = st.e[i] * (D0 + D1 * gi + D2 * gi * gi);
    }
    st.direct = -D2;
    std::array<cplx, 3> g3{st.gammas[0], st.gammas[1], st.gammas[2]};
    st.varsigma = varsigma_profile(st.reference, g3, m);
    st.kernel = kernel_K(S.grid, c, st.varsigma);
    st.S_frak = W_ret_apply(S.samples, st.gammas, st.e, st.kernel, S.grid);
    return st;
}

namespace {

std::vector<double> impulse_response(const DysonSetup& st, const ModeGrid& g, std::size_t n) {
    std::vector<double> delta(n, 0.0);
    if (n > 1) delta[1] = 1.0;
    return W_ret_apply(delta, st.gammas, st.d, st.kernel, g, st.direct);
}

double sigma_bound(double x, double T) {
    if (x > 0.0) {
        const double w = std::sqrt(x);
        return w * T >= 0.5 * kPi ? 1.0 / w : std::sin(w * T) / w;
    }
    if (x == 0.0) return T;
    const double w = std::sqrt(-x);
    return std::sinh(w * T) / w;
}

int first_nonzero(const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] != 0.0) return static_cast<int>(i);
    return static_cast<int>(v.size());
}

double leak(const std::vector<double>& phi, const ModeSource& S) {
    const double peak = sup_norm(phi);
    if (peak == 0.0) return 0.0;
    double l = 0.0;
    for (int n = 0; n <= S.grid.steps(); ++n)
        if (S.grid.t(n) < S.support_start) l = std::max(l, std::abs(phi[n]));
    return l / peak;
}

}  // namespace

ModeSolution dyson_solve(const ModeSource& S, const DysonConfig& cfg) {
    const auto st = dyson_setup(S, cfg);
    return dyson_solve(S, st, cfg);
}

ModeSolution dyson_solve(const ModeSource& S, const DysonSetup& st, const DysonConfig& cfg) {
    const auto& g = S.grid;
    const std::size_t n = S.samples.size();
    ModeSolution sol;
    sol.grid = g;
    sol.route = Route::dyson;
    auto& rep = sol.report;
    const double ssup = sup_norm(st.S_frak);

    // Grönwall rate: entrywise bound of the discrete operator and the continuous-form rate.
    const auto r = impulse_response(st, g, n);
    double rmax = 0.0;
    for (std::size_t j = 1; j < n; ++j) rmax = std::max(rmax, std::abs(r[j]));
    const double T = g.T - g.t0;
    double sig = std::abs(st.direct);
    for (std::size_t i = 0; i < st.gammas.size(); ++i)
        sig += std::abs(st.d[i]) * sigma_bound(g.p * g.p + st.gammas[i], T);
    rep.kappa_analytic = sig * kernel_abs_integral(st.kernel, T);
    rep.kappa = std::max(rep.kappa_analytic, rmax / g.dt);
    if (rep.kappa_analytic < rmax / g.dt) rep.notes.push_back("discrete rate exceeds analytic rate");
    const double kh = rep.kappa * g.dt;
    std::vector<double> logenv(n, -std::numeric_limits<double>::infinity());
    const bool finite_env = kh < 1.0;
    if (finite_env && ssup > 0.0) {
        const double a = -std::log1p(-kh);
        for (std::size_t k = 1; k < n; ++k) logenv[k] = std::log(std::expm1(a * k)) + std::log(ssup);
    } else if (!finite_env) {
        rep.notes.push_back("envelope rate times dt >= 1: envelope unbounded");
    }
    rep.log_envelope_max = finite_env ? logenv.back() : std::numeric_limits<double>::infinity();

    // Discrete majorant sum_k |R|^k |S|.
    std::vector<double> maj(n, 0.0);
    const double r1 = std::abs(r.size() > 1 ? r[1] : 0.0);
    if (r1 < 1.0) {
        for (std::size_t k = 1; k < n; ++k) {
            double s = r1 * std::abs(st.S_frak[k]);
            for (std::size_t j = 1; j < k; ++j)
                s += std::abs(r[k - j + 1]) * (maj[j] + std::abs(st.S_frak[j]));
            maj[k] = s / (1.0 - r1);
        }
    }

    std::vector<double> sum = st.S_frak, term = st.S_frak;
    auto check_envelope = [&] {
        for (std::size_t k = 1; k < n; ++k) {
            const double dev = std::abs(sum[k] - st.S_frak[k]);
            if (dev == 0.0) continue;
            if (finite_env) {
                const double ratio = std::exp(std::log(dev) - logenv[k]);
                rep.envelope_ratio = std::max(rep.envelope_ratio, ratio);
            }
            if (r1 < 1.0)
                rep.majorant_ratio =
                    std::max(rep.majorant_ratio, maj[k] > 0.0 ? dev / maj[k] : 1e300);
        }
    };
    if (ssup == 0.0) {
        sol.samples = sum;
        rep.causality_leak = 0.0;
        return sol;
    }
    int it = 0;
    for (; it < cfg.max_iter; ++it) {
        term = W_ret_apply(term, st.gammas, st.d, st.kernel, g, st.direct);
        const double inc = sup_norm(term) / ssup;
        const double sign = (it % 2 == 0) ? -1.0 : 1.0;
        for (std::size_t k = 0; k < n; ++k) sum[k] += sign * term[k];
        check_envelope();
        rep.final_increment = inc;
        if (!std::isfinite(inc) || inc > 1e200)
            throw ConvergenceError("dyson: partial sums overflow", inc);
        if (inc < cfg.tol) break;
    }
    rep.iterations = it + 1;
    if (rep.final_increment >= cfg.tol) {
        std::ostringstream os;
        os << "dyson: no convergence in " << cfg.max_iter << " iterations";
        throw ConvergenceError(os.str(), rep.final_increment);
    }
    rep.envelope_respected = rep.envelope_ratio <= 1.0;
    sol.samples = std::move(sum);
    rep.causality_leak = leak(sol.samples, S);
    return sol;
}

ModeSolution volterra_solve(const ModeSource& S, const DysonConfig& cfg) {
    return volterra_solve(S, dyson_setup(S, cfg));
}

ModeSolution volterra_solve(const ModeSource& S, const DysonSetup& st) {
    const auto& g = S.grid;
    const std::size_t n = S.samples.size();
    const auto r = impulse_response(st, g, n);
    std::vector<double> phi(n, 0.0);
    const double diag = 1.0 + (n > 1 ? r[1] : 0.0);
    if (std::abs(diag) < 1e-14) throw DomainError("volterra: singular diagonal");
    for (std::size_t k = 1; k < n; ++k) {
        double s = st.S_frak[k];
        for (std::size_t j = 1; j < k; ++j) s -= r[k - j + 1] * phi[j];
        phi[k] = s / diag;
    }
    ModeSolution sol;
    sol.grid = g;
    sol.route = Route::volterra;
    sol.samples = std::move(phi);
    sol.report.causality_leak = leak(sol.samples, S);
    return sol;
}

// ---- pole + cut ----

double cut_density(double M, const PrototypeCoefficients& k, double m) {
    if (M <= 4.0 * m * m) return 0.0;
    const cplx J = stieltjes_J_ext(cplx(M, 0.0), m);
    const cplx F = M * (k.a1 - M) * (k.a2 - M) * J - (k.b0 + k.b1 * M + k.b2 * M * M);
    return F.imag() / (kPi * std::norm(F));
}

namespace {

std::vector<double> cut_edges(double w0, double wmax, double dw_cap) {
    std::vector<double> e{w0};
    for (double d = 1e-12 * w0; d < 0.5 * w0 && d < 0.2; d *= 1.05) e.push_back(w0 + d);
    double w = e.back();
    while (w < wmax) {
        w = std::min(w + std::min(0.01 * w, dw_cap), wmax);
        e.push_back(w);
    }
    return e;
}

// int_0^h e^{-i w r} dr and int_0^h r e^{-i w r} dr.
void hat_moments(double w, double h, cplx& E0, cplx& E1) {
    const cplx a(0.0, -w);
    if (std::abs(w * h) < 0.5) {
        E0 = 0.0;
        E1 = 0.0;
        cplx pw = 1.0;
        double fact = 1.0;
        for (int k = 0; k < 20; ++k) {
            E0 += pw * std::pow(h, k + 1) / (fact * (k + 1));
            E1 += pw * std::pow(h, k + 2) / (fact * (k + 2));
            pw *= a;
            fact *= (k + 1);
        }
        return;
    }
    const cplx eh = std::exp(a * h);
    E0 = (eh - 1.0) / a;
    E1 = eh * (h / a - 1.0 / (a * a)) + 1.0 / (a * a);
}

}  // namespace

ModeSolution polecut_solve(const ModeSource& S, const PrototypeCoefficients& k, double m,
                           const PolecutOptions& opt) {
    S.validate();
    const auto& g = S.grid;
    const double p = g.p, h = g.dt, s4 = 4.0 * m * m;
    const int N = g.steps();
    ModeSolution sol;
    sol.grid = g;
    sol.route = Route::polecut;
    auto& rep = sol.report;

    const ZeroSet zs = opt.zeros ? *opt.zeros : find_zeros(k, m);
    if (!zs.all_found) rep.notes.push_back("zero search incomplete");
    for (const auto& z : zs.zeros) {
        if (std::abs(z.gamma.imag()) < 1e-12 && z.gamma.real() > s4 * (1.0 - opt.cut_clearance))
            throw DomainError("polecut: a zero sits within tolerance of the cut; use the Dyson route");
    }

    std::vector<cplx> acc(N + 1, cplx{});
    std::vector<cplx> fc(S.samples.begin(), S.samples.end());
    for (const auto& z : zs.zeros) {
        cplx Fp;
        if (z.gamma.imag() == 0.0) {
            const double eps = 1e-20 * std::max(1.0, std::abs(z.gamma.real()));
            Fp = characteristic_F(cplx(z.gamma.real(), eps), k, m).imag() / eps;
        } else {
            Fp = characteristic_F_prime(z.gamma, k, m);
        }
        const auto u = retarded_green(z.gamma, p, h, fc);
        for (int n = 0; n <= N; ++n) acc[n] -= u[n] / Fp;
    }

    // Cut: Im int 2 theta(w^2 - p^2) Shat(w; t) e^{i w t} dw with Shat the partial transform of the
    // piecewise-linear source, phase-centred on the support.
    const int nf = first_nonzero(S.samples);
    int nl = nf;
    for (int n = N; n >= 0; --n)
        if (S.samples[n] != 0.0) {
            nl = n;
            break;
        }
    std::vector<double> phi(N + 1, 0.0);
    if (nf <= N) {
        const double w0 = std::sqrt(s4 + p * p);
        const double Mmax = opt.M_max * m * m;
        const double wmax = std::sqrt(Mmax + p * p);
        const double span = std::max(h, (nl - nf + 2) * h);
        const double sc = 0.5 * (nf + nl) * h;
        const quad::FilonGrid grid(cut_edges(w0, wmax, std::min(0.05, 0.1 / span)));
        const auto w = grid.nodes();
        const std::size_t nn = w.size();
        std::vector<double> th(nn);
        parallel_for(static_cast<int>(nn), [&](int i) {
            th[i] = 2.0 * cut_density((w[i] - w0) * (w[i] + w0) + s4, k, m);
        });
        std::vector<cplx> E0(nn), E1(nn), Sh(nn, cplx{});
        for (std::size_t i = 0; i < nn; ++i) hat_moments(w[i], h, E0[i], E1[i]);
        std::vector<double> ar(nn), ai(nn);
        auto eval = [&](int n, const std::vector<double>& Ar, const std::vector<double>& Ai) {
            std::vector<cplx> I;
            grid.integrate_many({&Ar, &Ai}, n * h - sc, I);
            return I[0].imag() + I[1].real();
        };
        // Inside the support the amplitude changes every step.
        for (int n = 0; n < std::min(N, nl + 1); ++n) {
            const double fa = S.samples[n], fb = S.samples[n + 1];
            if (fa != 0.0 || fb != 0.0) {
                for (std::size_t i = 0; i < nn; ++i) {
                    const double ph = w[i] * (n * h - sc);
                    const cplx e(std::cos(ph), -std::sin(ph));
                    Sh[i] += e * (fa * E0[i] + (fb - fa) / h * E1[i]);
                }
            }
            if (n + 1 <= nl) {
                for (std::size_t i = 0; i < nn; ++i) {
                    ar[i] = th[i] * Sh[i].real();
                    ai[i] = th[i] * Sh[i].imag();
                }
                phi[n + 1] = eval(n + 1, ar, ai);
            }
        }
        for (std::size_t i = 0; i < nn; ++i) {
            ar[i] = th[i] * Sh[i].real();
            ai[i] = th[i] * Sh[i].imag();
        }
        const int first_after = nl + 1;
        if (first_after <= N) {
            constexpr int block = 16;
            const int cnt = N - first_after + 1;
            parallel_for((cnt + block - 1) / block, [&](int b) {
                const int lo = first_after + b * block, hi = std::min(N, lo + block - 1);
                for (int n = lo; n <= hi; ++n) phi[n] = eval(n, ar, ai);
            });
        }
        // Truncation: int_{Mmax}^inf |theta| dM / sqrt(M) times int |S|.
        double l1 = 0.0;
        for (double v : S.samples) l1 += std::abs(v) * h;
        const auto tail = quad::integrate(
            [&](double v) {
                const double M = Mmax * std::exp(v);
                return std::abs(cut_density(M, k, m)) * std::sqrt(M);
            },
            0.0, 30.0, 1e-30, 1e-6);
        rep.cut_truncation = tail.value * l1;
    }
    sol.samples.resize(N + 1);
    for (int n = 0; n <= N; ++n) sol.samples[n] = acc[n].real() + phi[n];
    for (int n = 0; n < nf && n <= N; ++n) sol.samples[n] = 0.0;
    rep.causality_leak = leak(sol.samples, S);
    return sol;
}

// ---- classification and fits ----

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::stable_decaying: return "stable_decaying";
        case Verdict::marginal: return "marginal";
        case Verdict::unstable: return "unstable";
        case Verdict::mixed_cut_absorbed: return "mixed_cut_absorbed";
    }
    return "?";
}

Classification classify_stability(const ZeroSet& zs, double m) {
    Classification c;
    c.zeros = zs;
    const double s4 = 4.0 * m * m;
    bool marginal = false;
    for (const auto& z : zs.zeros) {
        const double rate = std::sqrt(-z.gamma).real();
        if (rate > c.rate) {
            c.rate = rate;
            c.L = z.gamma.imag() == 0.0 ? -z.gamma.real() : rate * rate;
        }
        if (std::abs(z.gamma) <= 1e-12 * s4) marginal = true;
    }
    if (c.rate > 1e-7 * m)
        c.verdict = Verdict::unstable;
    else if (zs.absorbed_into_cut)
        c.verdict = Verdict::mixed_cut_absorbed;
    else if (marginal)
        c.verdict = Verdict::marginal;
    else
        c.verdict = Verdict::stable_decaying;
    return c;
}

Classification classify_stability(const PrototypeCoefficients& k, double m,
                                  std::optional<SearchBox> box) {
    return classify_stability(find_zeros(k, m, box), m);
}

std::string to_string(AsymptoticFit::Kind k) {
    return k == AsymptoticFit::Kind::power ? "power" : "exponential";
}

AsymptoticFit asymptotic_fit(const std::vector<double>& t, const std::vector<double>& y,
                             const FitWindow& w) {
    if (t.size() != y.size()) throw DomainError("asymptotic_fit: size mismatch");
    if (!(w.t_hi > w.t_lo) || !(w.t_lo > w.origin)) throw DomainError("asymptotic_fit: bad window");
    std::vector<double> xs, ls;
    if (w.width > 0.0) {
        const double step = w.step > 0.0 ? w.step : 0.25 * w.width;
        for (double a = w.t_lo; a + w.width <= w.t_hi + 1e-12; a += step) {
            double best = 0.0, sq = 0.0;
            int cnt = 0;
            for (std::size_t i = 0; i < t.size(); ++i)
                if (t[i] >= a && t[i] < a + w.width) {
                    best = std::max(best, std::abs(y[i]));
                    sq += y[i] * y[i];
                    ++cnt;
                }
            const double e = w.envelope == FitWindow::Envelope::max ? best
                                                                    : std::sqrt(sq / std::max(cnt, 1));
            if (e > 0.0) {
                xs.push_back(a + 0.5 * w.width);
                ls.push_back(std::log(e));
            }
        }
    } else {
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] >= w.t_lo && t[i] <= w.t_hi && y[i] != 0.0) {
                xs.push_back(t[i]);
                ls.push_back(std::log(std::abs(y[i])));
            }
    }
    if (xs.size() < 4) throw DomainError("asymptotic_fit: window too short");
    auto linfit = [&](const std::vector<double>& x, double& slope) {
        const double n = static_cast<double>(x.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sx += x[i];
            sy += ls[i];
            sxx += x[i] * x[i];
            sxy += x[i] * ls[i];
        }
        slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        const double icpt = (sy - slope * sx) / n;
        double r = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) r += std::pow(ls[i] - icpt - slope * x[i], 2);
        return std::sqrt(r / n);
    };
    std::vector<double> lx(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) lx[i] = std::log(xs[i] - w.origin);
    AsymptoticFit f;
    f.points = static_cast<int>(xs.size());
    f.power_residual = linfit(lx, f.power_exponent);
    f.exp_residual = linfit(xs, f.rate);
    f.kind = f.power_residual <= f.exp_residual ? AsymptoticFit::Kind::power
                                                : AsymptoticFit::Kind::exponential;
    f.fit_error = std::min(f.power_residual, f.exp_residual);
    return f;
}

PacketResult momentum_packet(const PrototypeCoefficients& k, double m, const PacketOptions& opt) {
    if (opt.modes < 1 || opt.sigma_p <= 0.0) throw DomainError("packet: bad options");
    const auto rule = quad::gauss_legendre(opt.modes, 0.0, opt.p_max_sigmas * opt.sigma_p);
    const int nm = static_cast<int>(rule.x.size());
    const auto zs = find_zeros(k, m);
    std::vector<std::vector<double>> sols(nm);
    ModeGrid g0;
    g0.t0 = 0.0;
    g0.T = opt.T;
    g0.dt = opt.dt;
    parallel_for(nm, [&](int j) {
        ModeGrid g = g0;
        g.p = rule.x[j];
        const auto S = bump_source(g, opt.source_start, opt.source_end);
        PolecutOptions po;
        po.zeros = zs;
        po.M_max = opt.M_max;
        sols[j] = polecut_solve(S, k, m, po).samples;
    });
    PacketResult r;
    r.modes = nm;
    const int N = g0.steps();
    for (int n = 0; n <= N; n += std::max(1, opt.stride)) {
        double s = 0.0;
        for (int j = 0; j < nm; ++j) {
            const double p = rule.x[j];
            s += rule.w[j] * p * p * std::exp(-p * p / (2.0 * opt.sigma_p * opt.sigma_p)) * sols[j][n];
        }
        r.t.push_back(g0.t(n));
        r.phi.push_back(s / (2.0 * kPi * kPi));
    }
    return r;
}

}  // namespace semistab
