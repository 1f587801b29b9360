#include "semistab/spectral.hpp"

#include <cmath>
#include <limits>

#include "semistab/quadrature.hpp"

namespace semistab {

namespace {

constexpr double kInv16Pi2 = 1.0 / (16.0 * kPi * kPi);
constexpr int kSeriesTerms = 48;

// Taylor coefficients of J about z = 0: c_k = (4m^2)^{-k-1} B(k+1, 3/2) / (16 pi^2).
cplx J_series(cplx z, double m, int derivative) {
    const double s = 4.0 * m * m;
    double beta = 2.0 / 3.0;
    double scale = kInv16Pi2 / s;
    cplx acc = 0.0, zp = 1.0;
    for (int k = 0; k < kSeriesTerms; ++k) {
        const double ck = scale * beta;
        if (derivative == 0) {
            acc += ck * zp;
            zp *= z;
        } else if (k >= 1) {
            acc += double(k) * ck * zp;
            zp *= z;
        }
        beta *= (k + 1.0) / (k + 2.5);
        scale /= s;
    }
    return acc;
}

cplx J_closed(cplx z, double m) {
    const double s = 4.0 * m * m;
    const cplx sq = std::sqrt(z);
    const cplx A = std::asin(sq / (2.0 * m));
    return (1.0 / z - std::sqrt(s - z) * A / (z * sq)) / (8.0 * kPi * kPi);
}

cplx Jp_closed(cplx z, double m) {
    const double s = 4.0 * m * m;
    const cplx sq = std::sqrt(z);
    const cplx A = std::asin(sq / (2.0 * m));
    const cplx r = std::sqrt(s - z);
    return (-1.5 / (z * z) + A / (2.0 * r * z * sq) + 1.5 * r * A / (z * z * sq)) /
           (8.0 * kPi * kPi);
}

cplx on_cut_above(cplx z, double m) {
    if (z.imag() == 0.0 && z.real() >= 4.0 * m * m) return cplx(z.real(), +0.0);
    return z;
}

}  // namespace

void PhysicalParams::validate() const {
    if (!(m > 0.0)) throw DomainError("mass m must be positive");
    if (!(mu > 0.0)) throw DomainError("Hadamard scale mu must be positive");
    if (!(G > 0.0)) throw DomainError("Newton constant G must be positive");
}

double eval_rho(double M, double m) {
    if (!(m > 0.0)) throw DomainError("eval_rho: m must be positive");
    if (M < 0.0) throw DomainError("eval_rho: M must be non-negative");
    const double s = 4.0 * m * m;
    if (M <= s) return 0.0;
    return kInv16Pi2 * std::sqrt(1.0 - s / M) / M;
}

SpectralDensity rho_density(double m) {
    if (!(m > 0.0)) throw DomainError("rho_density: m must be positive");
    SpectralDensity d;
    d.m = m;
    d.density = [m](double M) { return eval_rho(M, m); };
    d.transform = [m](cplx z) { return stieltjes_J_ext(z, m); };
    d.label = "rho";
    return d;
}

bool in_domain(cplx z, double m) {
    return z.imag() != 0.0 || z.real() < 4.0 * m * m;
}

cplx stieltjes_J_ext(cplx z, double m) {
    if (!(m > 0.0)) throw DomainError("stieltjes_J: m must be positive");
    if (std::abs(z) < m * m) return J_series(z, m, 0);
    return J_closed(on_cut_above(z, m), m);
}

cplx stieltjes_J(cplx z, double m) {
    if (!in_domain(z, m)) throw DomainError("stieltjes_J: argument on the cut [4m^2, inf)");
    return stieltjes_J_ext(z, m);
}

cplx stieltjes_J_prime(cplx z, double m) {
    if (!in_domain(z, m)) throw DomainError("stieltjes_J_prime: argument on the cut");
    if (std::abs(z) < m * m) return J_series(z, m, 1);
    return Jp_closed(z, m);
}

namespace {

// int_{4m^2}^inf f(M) dM via M = 4m^2 exp(u), u = v^2, split near the features of 1/(M - z).
CQuadResult ray_integral(const std::function<cplx(double)>& f_of_M, double m, cplx z, double tol,
                         double tail_bound_coeff) {
    const double s = 4.0 * m * m;
    double umax = std::log(20.0 * std::max(tail_bound_coeff, 1e-300) / (s * tol));
    umax = std::max({umax, std::log(std::max(2.0 * std::abs(z) / s, 1.0)) + 4.0, 8.0});
    const double vmax = std::sqrt(umax);
    std::vector<double> br;
    const double d = std::abs(z - s) / s;
    for (double f : {0.25, 0.5, 1.0, 2.0, 4.0}) br.push_back(std::sqrt(std::log1p(d * f)));
    if (z.real() > s) {
        const double vs = std::sqrt(std::log(z.real() / s));
        const double w = std::abs(z.imag()) / z.real();
        for (double k : {1.0, 4.0, 16.0, 64.0, 256.0}) {
            const double dv = w * k / (2.0 * std::max(vs, 1e-3));
            br.push_back(vs - dv);
            br.push_back(vs + dv);
        }
        br.push_back(vs);
    }
    auto g = [&](double v) {
        const double u = v * v;
        const double M = s * std::exp(u);
        return f_of_M(M) * (M * 2.0 * v);
    };
    auto r = quad::integrate_complex(g, 0.0, vmax, 0.1 * tol, 1e-13, br);
    r.error += 2.0 * tail_bound_coeff * std::exp(-umax) / s;
    return r;
}

}  // namespace

CQuadResult quadrature_J(cplx z, double m, double tol) {
    if (!in_domain(z, m)) throw DomainError("quadrature_J: argument on the cut");
    if (!(tol > 0.0)) throw DomainError("quadrature_J: tol must be positive");
    auto r = ray_integral([&](double M) { return eval_rho(M, m) / (M - z); }, m, z, tol, kInv16Pi2);
    if (r.error > tol) throw ConvergenceError("quadrature_J: tolerance not reached", r.error);
    return r;
}

CQuadResult stieltjes_g_quadrature(const SpectralDensity& sd, cplx z, double tol) {
    if (!in_domain(z, sd.m)) throw DomainError("stieltjes_g: argument on the cut");
    return ray_integral([&](double M) { return sd(M) / (M - z); }, sd.m, z, tol, kInv16Pi2);
}

QuadResult principal_value_g(const SpectralDensity& sd, double M, double tol) {
    const double s = sd.threshold();
    if (!(M > s)) throw DomainError("principal_value_g: M must exceed the threshold");
    const double sM = sd(M);
    // Near part: the subtracted integrand is regular at M' = M.
    auto near = [&](double x) {
        if (x == M) return 0.0;
        return (sd(x) - sM) / (x - M);
    };
    std::vector<double> br{M, s + 0.5 * (M - s), s + 1e-3 * (M - s), s + 1e-6 * (M - s)};
    auto r1 = quad::integrate(near, s, 2.0 * M, 0.1 * tol, 1e-12, br);
    // Far part via x = 2M exp(u).
    auto far = [&](double u) {
        const double x = 2.0 * M * std::exp(u);
        return sd(x) * x / (x - M);
    };
    const double umax = std::max(8.0, std::log(20.0 * kInv16Pi2 / (2.0 * M * tol)));
    auto r2 = quad::integrate(far, 0.0, umax, 0.1 * tol, 1e-12);
    QuadResult out;
    out.value = r1.value + r2.value + sM * std::log(M / (M - s));
    out.error = r1.error + r2.error + 2.0 * kInv16Pi2 * std::exp(-umax) / (2.0 * M);
    return out;
}

cplx stieltjes_g(const SpectralDensity& sd, cplx z) {
    if (sd.transform) return sd.transform(on_cut_above(z, sd.m));
    if (!in_domain(z, sd.m)) return stieltjes_g_above(sd, z.real());
    return stieltjes_g_quadrature(sd, z, 1e-13).value;
}

cplx stieltjes_g_above(const SpectralDensity& sd, double M) {
    if (sd.transform) return sd.transform(cplx(M, +0.0));
    if (M <= sd.threshold()) return stieltjes_g_quadrature(sd, cplx(M, 0.0), 1e-13).value;
    return cplx(principal_value_g(sd, M, 1e-13).value, kPi * sd(M));
}

double F_rho_closed(double w2, double c, double m) {
    if (!(c > 0.0 && c < 4.0 * m * m)) throw DomainError("F_of: c must lie in (0, 4m^2)");
    if (w2 < 0.0) throw DomainError("F_rho_closed: w^2 must be non-negative");
    if (w2 < m * m) return (w2 + c) * J_series(cplx(-w2, 0.0), m, 0).real();
    const double w = std::sqrt(w2);
    const double x = w / (2.0 * m);
    const double br = (2.0 * m / (w2 * w)) * std::sqrt(4.0 + w2 / (m * m)) *
                          std::log(x + std::sqrt(1.0 + x * x)) -
                      2.0 / w2;
    return (w2 + c) * kInv16Pi2 * br;
}

double F_of(double w2, double c, const SpectralDensity& sd) {
    return F_of(cplx(w2, 0.0), c, sd).real();
}

cplx F_of(cplx w2, double c, const SpectralDensity& sd) {
    if (!(c > 0.0 && c < sd.threshold())) throw DomainError("F_of: c must lie in (0, 4m^2)");
    if (!in_domain(-w2, sd.m)) throw DomainError("F_of: -w^2 on the cut");
    if (sd.label == "rho" && w2.imag() == 0.0 && w2.real() >= 0.0)
        return F_rho_closed(w2.real(), c, sd.m);
    return (w2 + c) * stieltjes_g(sd, -w2);
}

QuadResult F_quadrature(double w2, double c, const SpectralDensity& sd, double tol) {
    if (!(c > 0.0 && c < sd.threshold())) throw DomainError("F_of: c must lie in (0, 4m^2)");
    const double scale = w2 + c;
    auto r = stieltjes_g_quadrature(sd, cplx(-w2, 0.0), tol / scale);
    return {scale * r.value.real(), scale * r.error};
}

cplx Q_of(cplx w2, const PrototypeCoefficients& k, double m) {
    if (!in_domain(-w2, m)) throw DomainError("Q_of: -w^2 on the cut");
    return w2 * (w2 + k.a1) * (w2 + k.a2) * stieltjes_J_ext(-w2, m) + k.b0 - k.b1 * w2 +
           k.b2 * w2 * w2;
}

double log_delta_of(const SpectralDensity& sd) {
    if (sd.label == "rho") return 2.0 * std::log(2.0) - 2.0;
    const double s = sd.threshold();
    auto f = [&](double v) {
        const double u = v * v;
        const double y = s * std::exp(u);
        return (16.0 * kPi * kPi * sd(y) - 1.0 / y) * y * 2.0 * v;
    };
    return quad::integrate(f, 0.0, 7.0, 1e-12, 1e-12, {0.5, 1.0, 2.0}).value;
}

SpectralMeasure perron_inverse_F(double c, const SpectralDensity& sd) {
    if (!(c > 0.0 && c < sd.threshold())) throw DomainError("perron: c must lie in (0, 4m^2)");
    SpectralMeasure mu;
    mu.threshold = sd.threshold();
    const double gc = stieltjes_g(sd, cplx(c, 0.0)).real();
    if (!(gc > 0.0)) throw DomainError("perron: g(c) must be positive");
    mu.atoms.push_back({c, 1.0 / gc});
    mu.continuous = [sd, c](double M) {
        if (M <= sd.threshold()) return 0.0;
        const double v = sd(M);
        const double re = stieltjes_g_above(sd, M).real();
        return v / ((M - c) * (re * re + kPi * kPi * v * v));
    };
    mu.log_delta = log_delta_of(sd);
    mu.has_log_tail = true;
    return mu;
}

double measure_stieltjes(const SpectralMeasure& mu, double x, double m, double tol) {
    const double s = 4.0 * m * m;
    const double umax = 40.0;
    auto f = [&](double v) {
        const double u = v * v;
        const double M = s * std::exp(u);
        return mu.continuous(M) * M / (M + x) * 2.0 * v;
    };
    std::vector<double> br{0.1, 0.5, 1.0, 2.0, 3.0, 4.0};
    if (x > s) br.push_back(std::sqrt(std::log(x / s)));
    auto r = quad::integrate(f, 0.0, std::sqrt(umax), tol, 1e-12, br);
    double tail = 0.0;
    if (mu.has_log_tail) {
        const double L = umax + mu.log_delta;
        tail = 16.0 * kPi * (0.5 * kPi - std::atan(L / kPi));
    }
    return r.value + tail;
}

}  // namespace semistab
