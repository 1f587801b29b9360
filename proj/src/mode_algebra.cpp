#include "semistab/mode_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include "semistab/quadrature.hpp"

namespace semistab {

namespace {

// Same as characteristic_F but a real gamma on the cut gives the boundary value from above.
cplx F_ext(cplx g, const PrototypeCoefficients& k, double m) {
    return g * (k.a1 - g) * (k.a2 - g) * stieltjes_J_ext(g, m) - (k.b0 + g * (k.b1 + k.b2 * g));
}

// F_char(g) / g for b0 = 0.
cplx F_reduced(cplx g, const PrototypeCoefficients& k, double m) {
    return (k.a1 - g) * (k.a2 - g) * stieltjes_J_ext(g, m) - (k.b1 + k.b2 * g);
}

cplx F_reduced_prime(cplx g, const PrototypeCoefficients& k, double m) {
    const cplx J = stieltjes_J_ext(g, m);
    return (2.0 * g - k.a1 - k.a2) * J + (k.a1 - g) * (k.a2 - g) * stieltjes_J_prime(g, m) - k.b2;
}

double principal_arg_diff(cplx a, cplx b) { return std::arg(b / a); }

// Total change of arg f(s) for s in [s0, s1], with adaptive refinement.
template <class F>
double arg_change_segment(const F& f, double s0, cplx f0, double s1, cplx f1, int depth) {
    const double d = principal_arg_diff(f0, f1);
    const double sm = 0.5 * (s0 + s1);
    const cplx fm = f(sm);
    const double d1 = principal_arg_diff(f0, fm), d2 = principal_arg_diff(fm, f1);
    if ((std::abs(d) < 0.3 && std::abs(d1 + d2 - d) < 1e-6) || depth > 48) return d1 + d2;
    return arg_change_segment(f, s0, f0, sm, fm, depth + 1) +
           arg_change_segment(f, sm, fm, s1, f1, depth + 1);
}

template <class F>
double arg_change(const F& f, double s0, double s1, int pieces = 32) {
    double total = 0.0;
    double a = s0;
    cplx fa = f(a);
    for (int i = 1; i <= pieces; ++i) {
        const double b = s0 + (s1 - s0) * i / pieces;
        const cplx fb = f(b);
        total += arg_change_segment(f, a, fa, b, fb, 0);
        a = b;
        fa = fb;
    }
    return total;
}

bool distinct(cplx a, cplx b) {
    return std::abs(a - b) > 1e-6 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

std::optional<cplx> newton(const PrototypeCoefficients& k, double m, cplx z, bool reduced) {
    const double s = 4.0 * m * m;
    for (int it = 0; it < 80; ++it) {
        if (z.imag() == 0.0 && z.real() >= s) z.imag(1e-12 * s);
        const cplx f = reduced ? F_reduced(z, k, m) : F_ext(z, k, m);
        const cplx fp = reduced ? F_reduced_prime(z, k, m) : characteristic_F_prime(z, k, m);
        if (fp == 0.0) return std::nullopt;
        cplx step = f / fp;
        const double cap = 0.5 * (1.0 + std::abs(z));
        if (std::abs(step) > cap) step *= cap / std::abs(step);
        z -= step;
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return std::nullopt;
        if (std::abs(step) < 1e-15 * (1.0 + std::abs(z))) return z;
    }
    return std::nullopt;
}

struct ComplexSearch {
    const PrototypeCoefficients& k;
    double m;
    bool reduced;
    std::vector<cplx> found;

    void run(double x0, double x1, double y0, double y1, int n, int depth) {
        if (n <= 0) return;
        const cplx c(0.5 * (x0 + x1), 0.5 * (y0 + y1));
        const double diag = std::hypot(x1 - x0, y1 - y0);
        if (n == 1 || depth > 40) {
            for (cplx start : {c, cplx(x0 + 0.3 * (x1 - x0), y0 + 0.7 * (y1 - y0)),
                               cplx(x0 + 0.7 * (x1 - x0), y0 + 0.3 * (y1 - y0))}) {
                auto z = newton(k, m, start, reduced);
                const double sx = 1e-9 * (x1 - x0);
                const double sy = std::min(1e-9 * (y1 - y0), 0.5 * std::abs(y0));
                if (z && z->real() >= x0 - sx && z->real() <= x1 + sx &&
                    z->imag() >= y0 - sy && z->imag() <= y1 + sy) {
                    found.push_back(*z);
                    return;
                }
            }
            if (depth > 40 || diag < 1e-10 * (1.0 + std::abs(c))) return;
        }
        // Off-centre split keeps zeros away from the new edges in symmetric configurations.
        const double xm = x0 + 0.4937 * (x1 - x0), ym = y0 + 0.5113 * (y1 - y0);
        const std::array<std::array<double, 4>, 4> quads{{{x0, xm, y0, ym},
                                                          {xm, x1, y0, ym},
                                                          {x0, xm, ym, y1},
                                                          {xm, x1, ym, y1}}};
        for (const auto& q : quads) {
            const int nq = winding_rectangle(k, m, q[0], q[1], q[2], q[3]);
            run(q[0], q[1], q[2], q[3], nq, depth + 1);
        }
    }
};

std::vector<double> real_scan_points(double lo, double hi, double m) {
    const double s = 4.0 * m * m;
    std::vector<double> x;
    // Logarithmic spacing on the negative side, 40 points per decade.
    if (lo < 0.0) {
        const double top = std::log10(-lo);
        for (double e = top; e > -10.0; e -= 1.0 / 40.0) x.push_back(-std::pow(10.0, e));
    }
    const int n_lin = 800;
    const double a = std::max(lo, -s), b = std::min(hi, s);
    for (int i = 0; i <= n_lin; ++i) x.push_back(a + (b - a) * i / n_lin);
    for (double e = -10.0; e < std::log10(s); e += 1.0 / 40.0) {
        x.push_back(std::pow(10.0, e));
        x.push_back(s - std::pow(10.0, e));
    }
    x.push_back(lo);
    x.push_back(hi);
    std::erase_if(x, [&](double v) { return v < lo || v > hi; });
    std::sort(x.begin(), x.end());
    x.erase(std::unique(x.begin(), x.end()), x.end());
    return x;
}

}  // namespace

cplx characteristic_F(cplx g, const PrototypeCoefficients& k, double m) {
    if (!in_domain(g, m)) throw DomainError("characteristic_F: gamma on the cut [4m^2, inf)");
    return F_ext(g, k, m);
}

cplx characteristic_F_prime(cplx g, const PrototypeCoefficients& k, double m) {
    const cplx J = stieltjes_J_ext(g, m);
    const cplx Jp = stieltjes_J_prime(g, m);
    const cplx p = g * (k.a1 - g) * (k.a2 - g);
    const cplx dp = (k.a1 - g) * (k.a2 - g) - g * (k.a2 - g) - g * (k.a1 - g);
    return dp * J + p * Jp - (k.b1 + 2.0 * k.b2 * g);
}

double characteristic_scale(cplx g, const PrototypeCoefficients& k, double m) {
    const double lhs = std::abs(g * (k.a1 - g) * (k.a2 - g) * stieltjes_J_ext(g, m));
    return std::max({lhs, std::abs(k.b0), std::abs(k.b1 * g), std::abs(k.b2 * g * g)});
}

SearchBox SearchBox::defaults(double m) {
    SearchBox b;
    const double s = m * m;
    b.real_lo = -1e6 * s;
    b.real_hi = 4.0 * s * (1.0 - 1e-12);
    b.re_lo = -100.0 * s;
    b.re_hi = 100.0 * s;
    b.im_lo = 1e-6 * s;
    b.im_hi = 100.0 * s;
    return b;
}

std::vector<cplx> ZeroSet::gammas() const {
    std::vector<cplx> g;
    for (const auto& z : zeros) g.push_back(z.gamma);
    return g;
}

std::vector<double> ZeroSet::real_zeros() const {
    std::vector<double> r;
    for (const auto& z : zeros)
        if (z.cls != ZeroClass::complex_pair_member) r.push_back(z.gamma.real());
    return r;
}

int winding_rectangle(const PrototypeCoefficients& k, double m, double x0, double x1, double y0,
                      double y1) {
    auto F = [&](cplx z) { return F_ext(z, k, m); };
    double total = 0.0;
    total += arg_change([&](double s) { return F(cplx(s, y0)); }, x0, x1, 16);
    total += arg_change([&](double s) { return F(cplx(x1, s)); }, y0, y1, 16);
    total += arg_change([&](double s) { return F(cplx(s, y1)); }, x1, x0, 16);
    total += arg_change([&](double s) { return F(cplx(x0, s)); }, y1, y0, 16);
    return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

int winding_cut_disk(const PrototypeCoefficients& k, double m, double R) {
    const double s = 4.0 * m * m;
    if (!(R > s)) throw DomainError("winding_cut_disk: radius must exceed 4m^2");
    // Upper lip from the branch point out to R, then the upper half circle; the lower half
    // follows by conjugation symmetry.
    const double lip = arg_change(
        [&](double u) { return F_ext(cplx(s * std::exp(u), 0.0), k, m); }, 0.0, std::log(R / s),
        64);
    const double arc = arg_change(
        [&](double th) { return F_ext(std::polar(R, th), k, m); }, 0.0, kPi, 64);
    return static_cast<int>(std::lround((lip + arc) / kPi));
}

ZeroSet find_zeros(const PrototypeCoefficients& k, double m, std::optional<SearchBox> box_in) {
    if (!(m > 0.0)) throw DomainError("find_zeros: m must be positive");
    for (double v : {k.a1, k.a2, k.b0, k.b1, k.b2})
        if (!std::isfinite(v)) throw DomainError("find_zeros: non-finite coefficient");
    const SearchBox box = box_in.value_or(SearchBox::defaults(m));
    const double s = 4.0 * m * m;
    const bool reduced = (k.b0 == 0.0);

    ZeroSet zs;
    std::vector<cplx> cand;
    if (reduced) cand.push_back(0.0);

    auto f_real = [&](double x) {
        return reduced ? F_reduced(cplx(x, 0.0), k, m).real() : F_ext(cplx(x, 0.0), k, m).real();
    };
    const auto xs = real_scan_points(box.real_lo, std::min(box.real_hi, s * (1.0 - 1e-15)), m);
    double xa = xs.front(), fa = f_real(xa);
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const double xb = xs[i], fb = f_real(xb);
        if (fa == 0.0) {
            cand.push_back(xa);
        } else if (fa * fb < 0.0) {
            boost::uintmax_t it = 200;
            auto r = boost::math::tools::toms748_solve(f_real, xa, xb, fa, fb,
                                                       boost::math::tools::eps_tolerance<double>(52),
                                                       it);
            cand.push_back(0.5 * (r.first + r.second));
        }
        xa = xb;
        fa = fb;
    }
    if (fa == 0.0) cand.push_back(xa);

    ComplexSearch cs{k, m, reduced, {}};
    const int n_box = winding_rectangle(k, m, box.re_lo, box.re_hi, box.im_lo, box.im_hi);
    cs.run(box.re_lo, box.re_hi, box.im_lo, box.im_hi, n_box, 0);
    int n_box_found = 0;
    for (cplx z : cs.found) {
        bool dup = false;
        for (cplx w : cand)
            if (!distinct(z, w)) dup = true;
        if (dup) continue;
        cand.push_back(z);
        cand.push_back(std::conj(z));
        ++n_box_found;
    }
    zs.box_consistent = (n_box_found == n_box);

    std::vector<cplx> uniq;
    for (cplx z : cand) {
        if (std::none_of(uniq.begin(), uniq.end(), [&](cplx w) { return !distinct(z, w); }))
            uniq.push_back(z);
    }
    std::sort(uniq.begin(), uniq.end(), [](cplx a, cplx b) {
        return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
    });
    for (cplx z : uniq) {
        Zero e;
        e.gamma = z;
        e.residual = std::abs(F_ext(z, k, m));
        if (z.imag() != 0.0)
            e.cls = ZeroClass::complex_pair_member;
        else
            e.cls = z.real() < 0.0 ? ZeroClass::real_negative : ZeroClass::real_nonneg;
        zs.zeros.push_back(e);
    }
    zs.count = static_cast<int>(zs.zeros.size());

    const double R = std::abs(box.real_lo);
    if (R > s) {
        zs.winding_count = winding_cut_disk(k, m, R);
        // F(gamma) ~ -gamma^2 log(-gamma)/(16 pi^2) < 0 as gamma -> -inf.
        zs.far_zero_beyond = F_ext(cplx(box.real_lo, 0.0), k, m).real() > 0.0;
        const auto inside = std::count_if(zs.zeros.begin(), zs.zeros.end(),
                                          [&](const Zero& z) { return std::abs(z.gamma) < R; });
        zs.all_found = (inside == zs.winding_count);
    }
    zs.absorbed_into_cut = (zs.winding_count + (zs.far_zero_beyond ? 1 : 0)) < 3;
    return zs;
}

BetaCoefficients betas_from_gammas(const std::array<cplx, 3>& g) {
    const cplx b0 = -g[0] * g[1] * g[2];
    const cplx b1 = g[0] * g[1] + g[0] * g[2] + g[1] * g[2];
    const cplx b2 = -(g[0] + g[1] + g[2]);
    const double scale = 1.0 + std::abs(g[0]) + std::abs(g[1]) + std::abs(g[2]);
    for (cplx b : {b0, b1, b2})
        if (std::abs(b.imag()) > 1e-10 * scale * scale * scale)
            throw DomainError("betas_from_gammas: zeros are not closed under conjugation");
    return {b0.real(), b1.real(), b2.real()};
}

BetaCoefficients betas_from_gammas(const ZeroSet& zs) {
    if (zs.count != 3 || zs.zeros.size() != 3)
        throw DomainError("betas_from_gammas: exactly three zeros required (use the normal form)");
    return betas_from_gammas({zs.zeros[0].gamma, zs.zeros[1].gamma, zs.zeros[2].gamma});
}

std::vector<PartialFraction> partial_fractions(const std::array<cplx, 3>& g, double a1,
                                               double a2) {
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (!distinct(g[i], g[j])) throw DomainError("partial_fractions: near-degenerate zeros");
    std::vector<PartialFraction> out;
    for (int i = 0; i < 3; ++i) {
        cplx den = 1.0;
        for (int j = 0; j < 3; ++j)
            if (j != i) den *= g[i] - g[j];
        out.push_back({g[i], (g[i] - a1) * (g[i] - a2) / den});
    }
    return out;
}

AuxiliaryProfiles auxiliary_profiles(const PrototypeCoefficients& k, const BetaCoefficients& b,
                                     double m) {
    const double s = 4.0 * m * m;
    // P must stay positive on the ray; scan on a log grid and at the threshold.
    for (double u = 0.0; u <= 40.0; u += 0.01) {
        const double M = s * std::exp(u);
        if (!(b(M) > 0.0)) {
            std::ostringstream os;
            os << "auxiliary_profiles: P(M) = M^3 + beta2 M^2 + beta1 M + beta0 vanishes near M = "
               << M;
            throw DomainError(os.str());
        }
    }
    AuxiliaryProfiles p;
    p.m = m;
    auto rho_hat = [m, s](double M) { return M <= s ? 0.0 : std::sqrt(M - s) * eval_rho(M, m); };
    auto MR = [k, b](double M) { return M * (M - k.a1) * (M - k.a2) / b(M); };
    const double b0 = k.b0, b1 = k.b1, b2 = k.b2;
    p.present = {b0 != 0.0, b1 != 0.0, b2 != 0.0};
    p.h_hat[2] = [=](double M) { return b2 == 0.0 ? 0.0 : (MR(M) - 1.0) * rho_hat(M) / b2; };
    p.h_hat[1] = [=](double M) {
        if (b1 == 0.0) return 0.0;
        return (-(M * b.beta1 + b.beta0) / (M * M) * MR(M) + k.a1 * k.a2 / M) * rho_hat(M) / b1;
    };
    p.h_hat[0] = [=](double M) {
        return b0 == 0.0 ? 0.0 : -b.beta0 / M * MR(M) * rho_hat(M) / b0;
    };
    p.constraint_residuals = check_constraint(p);
    for (int j = 0; j < 3; ++j) {
        if (!p.present[j]) continue;
        // Decay check: |h_j| M / rho_hat stays bounded along the ray.
        double prev = 0.0;
        for (double u : {10.0, 20.0, 30.0}) {
            const double M = s * std::exp(u);
            const double r = std::abs(p.h_hat[j](M)) * M / rho_hat(M);
            if (u > 10.0 && r > 2.0 * prev + 1e-300 && r > 1.0)
                throw DomainError("auxiliary_profiles: profile violates the 1/M decay bound");
            prev = r;
        }
    }
    return p;
}

std::array<double, 3> check_constraint(const AuxiliaryProfiles& p, double tol) {
    std::array<double, 3> res{};
    const double s = 4.0 * p.m * p.m;
    for (int j = 0; j < 3; ++j) {
        if (!p.present[j]) {
            res[j] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        // M = 4m^2 + u^2 with u = x/(1 - x): dM/sqrt(M - 4m^2) = 2 du.
        auto f = [&](double x) {
            if (x >= 1.0) return 0.0;
            const double u = p.m * x / (1.0 - x);
            const double du = p.m / ((1.0 - x) * (1.0 - x));
            return 2.0 * p.h_hat[j](s + u * u) * du;
        };
        const auto r = quad::integrate(f, 0.0, 1.0, tol, 1e-12, {0.1, 0.3, 0.5, 0.7, 0.9, 0.99});
        res[j] = std::abs(r.value - 1.0);
    }
    return res;
}

SpectralDensity varsigma_profile(const PrototypeCoefficients& k, const std::array<cplx, 3>& g,
                                 double m) {
    const double s = 4.0 * m * m;
    if (k.a1 > s || k.a2 > s) throw DomainError("varsigma_profile: a1, a2 must not exceed 4m^2");
    for (cplx z : g)
        if (!in_domain(z, m)) throw DomainError("varsigma_profile: a zero lies on the cut");
    const auto pf = partial_fractions(g, k.a1, k.a2);
    auto MR = [pf](double M) {
        cplx acc = 1.0;
        for (const auto& t : pf) acc += t.gamma * t.A / (M - t.gamma);
        return acc.real();
    };
    double mr_max = 0.0;
    for (double u = 0.0; u <= 40.0; u += 0.005) {
        const double M = s * std::exp(u);
        const double v = MR(M);
        if (v < -1e-12) {
            std::ostringstream os;
            os << "varsigma_profile: M R(M) negative at M = " << M;
            throw DomainError(os.str());
        }
        mr_max = std::max(mr_max, v);
    }
    std::vector<cplx> Jg;
    for (const auto& t : pf) Jg.push_back(stieltjes_J_ext(t.gamma, m));
    SpectralDensity d;
    d.m = m;
    d.label = "varsigma";
    d.density = [MR, m](double M) { return MR(M) * eval_rho(M, m); };
    d.transform = [pf, Jg, m](cplx z) {
        const cplx Jz = stieltjes_J_ext(z, m);
        cplx acc = Jz;
        for (std::size_t i = 0; i < pf.size(); ++i) {
            const cplx gi = pf[i].gamma;
            const cplx dz = z - gi;
            const cplx ratio = std::abs(dz) < 1e-7 * (1.0 + std::abs(gi))
                                   ? stieltjes_J_prime(gi, m)
                                   : (Jz - Jg[i]) / dz;
            acc += gi * pf[i].A * ratio;
        }
        return acc;
    };
    return d;
}

double A_closed(double a1, double a2, double m, double g) {
    return (a1 - g) * (a2 - g) * stieltjes_J(cplx(g, 0.0), m).real();
}

double A_prime_closed(double a1, double a2, double m, double g) {
    const double J = stieltjes_J(cplx(g, 0.0), m).real();
    const double Jp = stieltjes_J_prime(cplx(g, 0.0), m).real();
    return (g - a1) * (g - a2) * Jp + (2.0 * g - a1 - a2) * J;
}

ConvexityProbe convexity_probe(double a1, double a2, double m, double g) {
    const double s = 4.0 * m * m;
    if (!(g < s) || !(a1 < s) || !(a2 < s))
        throw DomainError("convexity_probe: gamma, a1, a2 must lie below 4m^2");
    auto ray = [&](auto&& h) {
        auto f = [&](double v) {
            const double M = s * std::exp(v * v);
            return eval_rho(M, m) * h(M) * M * 2.0 * v;
        };
        const double d = std::sqrt(std::log1p((s - g) / s));
        std::vector<double> br{0.25 * d, 0.5 * d, d, 2.0 * d, 4.0 * d};
        return quad::integrate(f, 0.0, 6.0, 1e-15, 1e-12, br).value;
    };
    const double I1 = ray([&](double M) { return 1.0 / (M - g); });
    const double I2 = ray([&](double M) { return 1.0 / ((M - g) * (M - g)); });
    const double I3 = ray([&](double M) { return 2.0 * (M - a1) * (M - a2) / std::pow(M - g, 3); });
    // Tails beyond M = 4m^2 e^36 from rho ~ 1/(16 pi^2 M).
    const double Mt = s * std::exp(36.0);
    const double t1 = 1.0 / (16.0 * kPi * kPi * Mt);
    ConvexityProbe r;
    r.A = (a1 - g) * (a2 - g) * (I1 + t1);
    r.A1 = (g - a1) * (g - a2) * I2 + (2.0 * g - a1 - a2) * (I1 + t1);
    r.A2 = I3 + 2.0 / (16.0 * kPi * kPi * Mt);
    return r;
}

NormalFormResult normal_form_split(const std::array<double, 3>& bt, double a1, double a2,
                                   double m, std::array<double, 2> eps, int retries) {
    const double s = 4.0 * m * m;
    if (!(a1 < s && a2 < s)) throw DomainError("normal_form_split: a1, a2 must lie below 4m^2");
    if (!(eps[0] > 0.0 && eps[1] > 0.0))
        throw DomainError("normal_form_split: eps1, eps2 must be strictly positive");
    auto Ap = [&](double g) { return A_prime_closed(a1, a2, m, g) - bt[2]; };
    double hi = s * (1.0 - 1e-15);
    double lo = -s;
    while (Ap(lo) > 0.0) {
        lo *= 16.0;
        if (lo < -1e300) throw DomainError("normal_form_split: tangent point out of range");
    }
    if (Ap(hi) < 0.0) throw DomainError("normal_form_split: tangent point too close to 4m^2");
    boost::uintmax_t it = 300;
    auto br = boost::math::tools::bisect(Ap, lo, hi, boost::math::tools::eps_tolerance<double>(50),
                                         it);
    NormalFormResult out;
    out.gamma_tilde = 0.5 * (br.first + br.second);
    out.q = A_closed(a1, a2, m, out.gamma_tilde) - bt[2] * out.gamma_tilde;
    double e1 = eps[0], e2 = eps[1];
    for (int attempt = 1; attempt <= retries; ++attempt) {
        out.attempts = attempt;
        out.eps1 = e1;
        out.eps2 = e2;
        out.coeffs = {a1, a2, e1, out.q + e2, bt[2]};
        out.zeros = find_zeros(out.coeffs, m);
        const auto re = out.zeros.real_zeros();
        if (out.zeros.count == 3 && re.size() == 3) {
            out.ok = true;
            return out;
        }
        e1 *= 0.5;
        e2 *= 0.5;
    }
    return out;
}

PrototypeCoefficients coefficients_with_zeros(double a1, double a2, double m,
                                              const std::array<double, 3>& g) {
    Eigen::Matrix3d V;
    Eigen::Vector3d rhs;
    for (int i = 0; i < 3; ++i) {
        V(i, 0) = 1.0;
        V(i, 1) = g[i];
        V(i, 2) = g[i] * g[i];
        rhs(i) = g[i] * A_closed(a1, a2, m, g[i]);
    }
    const Eigen::Vector3d b = V.fullPivLu().solve(rhs);
    return {a1, a2, b(0), b(1), b(2)};
}

PrototypeCoefficients s_mode_coefficients(const PhysicalParams& p, double alpha1_S, double b2) {
    p.validate();
    const double d = 1.0 / 6.0 - p.xi;
    if (std::abs(d) < 1e-14) throw DomainError("s_mode_coefficients: xi = 1/6 is singular");
    const double a = 2.0 * p.m * p.m / (6.0 * p.xi - 1.0);
    if (!(a < 4.0 * p.m * p.m))
        throw DomainError("s_mode_coefficients: a = 2m^2/(6 xi - 1) must lie below 4m^2");
    const double den = 6.0 * d * d;
    const double m4 = std::pow(p.m, 4);
    return {a, a, -alpha1_S * 4.0 * m4 / den, -(2.0 / p.kappa()) / den, b2};
}

PrototypeCoefficients tt_mode_coefficients(const PhysicalParams& p, double b2) {
    p.validate();
    const double a = 4.0 * p.m * p.m;
    return {a, a, 0.0, 60.0 / p.kappa(), b2};
}

namespace {

struct Seg {
    long e0, e1;
    cplx p0, p1;
};

// Marching squares over a scalar field on an nx x ny grid. Edge ids: horizontal edges
// (i,j)-(i+1,j) -> 2*(j*nx+i), vertical (i,j)-(i,j+1) -> 2*(j*nx+i)+1.
std::vector<Polyline> march(const std::vector<double>& f, const std::vector<double>& xs,
                            const std::vector<double>& ys, const std::vector<char>& skip,
                            std::vector<std::vector<Seg>>* per_cell) {
    const int nx = static_cast<int>(xs.size()), ny = static_cast<int>(ys.size());
    auto at = [&](int i, int j) { return f[j * nx + i]; };
    auto interp = [&](int i0, int j0, int i1, int j1) {
        const double a = at(i0, j0), b = at(i1, j1);
        const double t = a / (a - b);
        return cplx(xs[i0] + t * (xs[i1] - xs[i0]), ys[j0] + t * (ys[j1] - ys[j0]));
    };
    std::vector<Seg> segs;
    if (per_cell) per_cell->assign(static_cast<std::size_t>((nx - 1) * (ny - 1)), {});
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            if (skip[j * (nx - 1) + i]) continue;
            const double v[4] = {at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)};
            bool ok = true;
            for (double x : v) ok = ok && std::isfinite(x);
            if (!ok) continue;
            int code = 0;
            for (int c = 0; c < 4; ++c)
                if (v[c] > 0.0) code |= 1 << c;
            if (code == 0 || code == 15) continue;
            // Edge 0 bottom, 1 right, 2 top, 3 left.
            const long eid[4] = {2L * (j * nx + i), 2L * (j * nx + i + 1) + 1,
                                 2L * ((j + 1) * nx + i), 2L * (j * nx + i) + 1};
            auto pt = [&](int e) {
                switch (e) {
                    case 0: return interp(i, j, i + 1, j);
                    case 1: return interp(i + 1, j, i + 1, j + 1);
                    case 2: return interp(i, j + 1, i + 1, j + 1);
                    default: return interp(i, j, i, j + 1);
                }
            };
            std::vector<int> crossing;
            for (int e = 0; e < 4; ++e) {
                const bool s0 = v[e] > 0.0, s1 = v[(e + 1) % 4] > 0.0;
                if (s0 != s1) crossing.push_back(e);
            }
            std::vector<std::pair<int, int>> pairs;
            if (crossing.size() == 2) {
                pairs.push_back({crossing[0], crossing[1]});
            } else if (crossing.size() == 4) {
                const double centre = 0.25 * (v[0] + v[1] + v[2] + v[3]);
                const bool c0 = v[0] > 0.0;
                if ((centre > 0.0) == c0) {
                    pairs.push_back({0, 1});
                    pairs.push_back({2, 3});
                } else {
                    pairs.push_back({3, 0});
                    pairs.push_back({1, 2});
                }
            }
            for (auto [a, b] : pairs) {
                Seg sg{eid[a], eid[b], pt(a), pt(b)};
                segs.push_back(sg);
                if (per_cell) (*per_cell)[j * (nx - 1) + i].push_back(sg);
            }
        }
    }
    // Chain segments sharing edge ids.
    std::multimap<long, std::size_t> by_edge;
    for (std::size_t s = 0; s < segs.size(); ++s) {
        by_edge.insert({segs[s].e0, s});
        by_edge.insert({segs[s].e1, s});
    }
    std::vector<char> used(segs.size(), 0);
    std::vector<Polyline> lines;
    auto next_of = [&](long edge, std::size_t from) -> long {
        auto range = by_edge.equal_range(edge);
        for (auto it = range.first; it != range.second; ++it)
            if (it->second != from && !used[it->second]) return static_cast<long>(it->second);
        return -1;
    };
    for (std::size_t s0 = 0; s0 < segs.size(); ++s0) {
        if (used[s0]) continue;
        used[s0] = 1;
        std::vector<cplx> fwd{segs[s0].p0, segs[s0].p1};
        std::vector<cplx> bwd;
        long edge = segs[s0].e1;
        std::size_t cur = s0;
        for (long nx_s; (nx_s = next_of(edge, cur)) >= 0;) {
            const auto& sg = segs[nx_s];
            used[nx_s] = 1;
            if (sg.e0 == edge) {
                fwd.push_back(sg.p1);
                edge = sg.e1;
            } else {
                fwd.push_back(sg.p0);
                edge = sg.e0;
            }
            cur = static_cast<std::size_t>(nx_s);
        }
        edge = segs[s0].e0;
        cur = s0;
        for (long nx_s; (nx_s = next_of(edge, cur)) >= 0;) {
            const auto& sg = segs[nx_s];
            used[nx_s] = 1;
            if (sg.e0 == edge) {
                bwd.push_back(sg.p1);
                edge = sg.e1;
            } else {
                bwd.push_back(sg.p0);
                edge = sg.e0;
            }
            cur = static_cast<std::size_t>(nx_s);
        }
        Polyline pl;
        pl.points.assign(bwd.rbegin(), bwd.rend());
        pl.points.insert(pl.points.end(), fwd.begin(), fwd.end());
        lines.push_back(std::move(pl));
    }
    return lines;
}

std::optional<cplx> intersect(cplx p, cplx p2, cplx q, cplx q2) {
    const cplx r = p2 - p, s = q2 - q;
    const double den = r.real() * s.imag() - r.imag() * s.real();
    if (den == 0.0) return std::nullopt;
    const cplx qp = q - p;
    const double t = (qp.real() * s.imag() - qp.imag() * s.real()) / den;
    const double u = (qp.real() * r.imag() - qp.imag() * r.real()) / den;
    if (t < -1e-12 || t > 1 + 1e-12 || u < -1e-12 || u > 1 + 1e-12) return std::nullopt;
    return p + t * r;
}

}  // namespace

ZeroContours trace_zero_sets(const PrototypeCoefficients& k, double m, const ContourGrid& g) {
    if (g.nx < 2 || g.ny < 2) throw DomainError("trace_zero_sets: grid needs at least 2x2 nodes");
    const double s = 4.0 * m * m;
    const double dx = (g.re_hi - g.re_lo) / (g.nx - 1), dy = (g.im_hi - g.im_lo) / (g.ny - 1);
    std::vector<double> xs(g.nx), ys(g.ny);
    for (int i = 0; i < g.nx; ++i) xs[i] = g.re_lo + i * dx;
    double shift = 0.0;
    for (int j = 0; j < g.ny; ++j)
        if (std::abs(g.im_lo + j * dy) < 1e-9 * dy) shift = 0.5 * dy;
    for (int j = 0; j < g.ny; ++j) ys[j] = g.im_lo + j * dy + shift;

    std::vector<double> re(g.nx * g.ny), im(g.nx * g.ny);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            cplx z(xs[i], ys[j]);
            const cplx v = in_domain(z, m) ? F_ext(z, k, m)
                                           : cplx(std::numeric_limits<double>::quiet_NaN(), 0.0);
            re[j * g.nx + i] = v.real();
            im[j * g.nx + i] = v.imag();
        }
    std::vector<char> none((g.nx - 1) * (g.ny - 1), 0), cut((g.nx - 1) * (g.ny - 1), 0);
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i)
            if (ys[j] < 0.0 && ys[j + 1] > 0.0 && xs[i + 1] > s) cut[j * (g.nx - 1) + i] = 1;

    ZeroContours out;
    out.cell = std::max(dx, dy);
    std::vector<std::vector<Seg>> cells_re, cells_im;
    out.re_zero = march(re, xs, ys, none, &cells_re);
    out.im_zero = march(im, xs, ys, cut, &cells_im);

    std::vector<cplx> hits;
    for (std::size_t c = 0; c < cells_re.size(); ++c) {
        if (cut[c]) continue;
        for (const auto& a : cells_re[c])
            for (const auto& b : cells_im[c])
                if (auto p = intersect(a.p0, a.p1, b.p0, b.p1)) hits.push_back(*p);
    }
    // Cluster hits closer than two cells.
    std::vector<std::pair<cplx, int>> clusters;
    for (cplx h : hits) {
        bool merged = false;
        for (auto& [c, n] : clusters) {
            if (std::abs(c / double(n) - h) < 2.0 * out.cell) {
                c += h;
                ++n;
                merged = true;
                break;
            }
        }
        if (!merged) clusters.push_back({h, 1});
    }
    for (const auto& [c, n] : clusters) out.crossings.push_back(c / double(n));
    std::sort(out.crossings.begin(), out.crossings.end(), [](cplx a, cplx b) {
        return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
    });
    return out;
}

}  // namespace semistab
