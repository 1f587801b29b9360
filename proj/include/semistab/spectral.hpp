#pragma once

#include <functional>
#include <string>
#include <vector>

#include "semistab/common.hpp"

namespace semistab {

struct PhysicalParams {
    double m = 1.0;
    double xi = 1.0;
    double G = 1.0;
    double mu = 1.0;

    double kappa() const { return 8.0 * kPi * G; }
    void validate() const;
};

// Positive density on [4m^2, inf). `transform`, when set, returns the Stieltjes transform
// g(z) = int density(M)/(M - z) dM in closed form; a real z on the ray [4m^2, inf) denotes
// the boundary value from the upper half-plane.
struct SpectralDensity {
    double m = 1.0;
    std::function<double(double)> density;
    std::function<cplx(cplx)> transform;
    std::string label;

    double threshold() const { return 4.0 * m * m; }
    double operator()(double M) const { return M <= threshold() ? 0.0 : density(M); }
};

double eval_rho(double M, double m);
SpectralDensity rho_density(double m);

// z is in the cut domain unless it lies on the real ray [4m^2, inf).
bool in_domain(cplx z, double m);

cplx stieltjes_J(cplx z, double m);
// Same as stieltjes_J but real arguments on the ray give the boundary value from above.
cplx stieltjes_J_ext(cplx z, double m);
cplx stieltjes_J_prime(cplx z, double m);
CQuadResult quadrature_J(cplx z, double m, double tol);

// Stieltjes transform of a general density: closed form when available, otherwise quadrature
// (with the principal-value subtraction for boundary values on the ray).
cplx stieltjes_g(const SpectralDensity& s, cplx z);
cplx stieltjes_g_above(const SpectralDensity& s, double M);
CQuadResult stieltjes_g_quadrature(const SpectralDensity& s, cplx z, double tol);
// Re g(M + i0) for M > 4m^2 by principal-value quadrature.
QuadResult principal_value_g(const SpectralDensity& s, double M, double tol);

// F(w^2) = (w^2 + c) * int s(M)/(w^2 + M) dM.
double F_of(double w2, double c, const SpectralDensity& s);
cplx F_of(cplx w2, double c, const SpectralDensity& s);
// Closed logarithmic form for s = rho.
double F_rho_closed(double w2, double c, double m);
QuadResult F_quadrature(double w2, double c, const SpectralDensity& s, double tol);

struct PrototypeCoefficients {
    double a1 = 0.0, a2 = 0.0, b0 = 0.0, b1 = 0.0, b2 = 0.0;
};

cplx Q_of(cplx w2, const PrototypeCoefficients& k, double m);

struct Atom {
    double location = 0.0;
    double weight = 0.0;
};

struct SpectralMeasure {
    std::vector<Atom> atoms;
    std::function<double(double)> continuous;
    double threshold = 4.0;
    // Leading large-M behaviour of the continuous part, 16 pi^2 / (log^2(M delta/4m^2) + pi^2),
    // used for analytic tails. Zero when not applicable.
    double log_delta = 0.0;
    bool has_log_tail = false;
};

// log(delta) = int_{4m^2}^inf (16 pi^2 s(y) - 1/y) dy.
double log_delta_of(const SpectralDensity& s);

// Stieltjes-Perron inversion of 1/F: atom (c, 1/g(c)) plus
// phi_con(M) = s(M) / ((M - c)(Re g(M)^2 + pi^2 s(M)^2)).
SpectralMeasure perron_inverse_F(double c, const SpectralDensity& s);

// int_{4m^2}^inf phi(M)/(M + x) dM for a measure with logarithmic tail, tail done analytically.
double measure_stieltjes(const SpectralMeasure& mu, double x, double m, double tol = 1e-11);

}  // namespace semistab
