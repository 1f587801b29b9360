#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "semistab/spectral.hpp"

namespace semistab {

// gamma (a1 - gamma)(a2 - gamma) J(gamma) - (b0 + b1 gamma + b2 gamma^2).
cplx characteristic_F(cplx gamma, const PrototypeCoefficients& k, double m);
cplx characteristic_F_prime(cplx gamma, const PrototypeCoefficients& k, double m);
// Size of the largest term in characteristic_F, used to scale residuals.
double characteristic_scale(cplx gamma, const PrototypeCoefficients& k, double m);

enum class ZeroClass { real_negative, real_nonneg, complex_pair_member };

struct Zero {
    cplx gamma;
    double residual = 0.0;
    ZeroClass cls = ZeroClass::real_nonneg;
};

struct SearchBox {
    double real_lo = -1e6;
    double real_hi = 4.0 - 1e-9;
    double re_lo = -100.0, re_hi = 100.0;
    double im_lo = 1e-6, im_hi = 100.0;

    static SearchBox defaults(double m);
};

struct ZeroSet {
    std::vector<Zero> zeros;
    int count = 0;
    bool absorbed_into_cut = false;
    // Argument-principle count inside |gamma| < |real_lo| (cut plane).
    int winding_count = 0;
    // A real zero lies below real_lo (sign of F at real_lo disagrees with its limit at -inf).
    bool far_zero_beyond = false;
    // Refined zeros inside the complex box match the winding count of that box.
    bool box_consistent = true;
    // Every zero counted by the argument principle inside |gamma| < |real_lo| was refined.
    bool all_found = true;

    std::vector<cplx> gammas() const;
    std::vector<double> real_zeros() const;
};

ZeroSet find_zeros(const PrototypeCoefficients& k, double m,
                   std::optional<SearchBox> box = std::nullopt);

// Winding number of gamma -> characteristic_F(gamma) along the boundary of the rectangle.
int winding_rectangle(const PrototypeCoefficients& k, double m, double x0, double x1, double y0,
                      double y1);
// Number of zeros in the cut plane with |gamma| < R.
int winding_cut_disk(const PrototypeCoefficients& k, double m, double R);

struct BetaCoefficients {
    double beta0 = 0.0, beta1 = 0.0, beta2 = 0.0;
    double operator()(double M) const { return ((M + beta2) * M + beta1) * M + beta0; }
};

BetaCoefficients betas_from_gammas(const ZeroSet& zs);
BetaCoefficients betas_from_gammas(const std::array<cplx, 3>& g);

struct PartialFraction {
    cplx gamma;
    cplx A;
};

// R(M) = (M - a1)(M - a2) / prod (M - gamma_i) = sum A_i / (M - gamma_i).
std::vector<PartialFraction> partial_fractions(const std::array<cplx, 3>& g, double a1, double a2);

struct AuxiliaryProfiles {
    // Fourier profiles as functions of M = p_z^2 + 4m^2; index j = 0, 1, 2.
    std::array<std::function<double(double)>, 3> h_hat;
    std::array<bool, 3> present{true, true, true};
    std::array<double, 3> constraint_residuals{};
    double m = 1.0;
};

AuxiliaryProfiles auxiliary_profiles(const PrototypeCoefficients& k, const BetaCoefficients& b,
                                     double m);
// |int h_j dM / sqrt(M - 4m^2) - 1|; NaN for absent profiles.
std::array<double, 3> check_constraint(const AuxiliaryProfiles& p, double tol = 1e-11);

// varsigma(M) = M R(M) rho(M), with its Stieltjes transform in closed form.
SpectralDensity varsigma_profile(const PrototypeCoefficients& k, const std::array<cplx, 3>& g,
                                 double m);

struct ConvexityProbe {
    double A = 0.0, A1 = 0.0, A2 = 0.0;
};

// A(gamma) = (a1 - gamma)(a2 - gamma) J(gamma) and two derivatives, by quadrature.
ConvexityProbe convexity_probe(double a1, double a2, double m, double gamma);
// Closed-form A and A' from J and J'.
double A_closed(double a1, double a2, double m, double gamma);
double A_prime_closed(double a1, double a2, double m, double gamma);

struct NormalFormResult {
    PrototypeCoefficients coeffs;
    double gamma_tilde = 0.0;
    double q = 0.0;
    double eps1 = 0.0, eps2 = 0.0;
    ZeroSet zeros;
    int attempts = 0;
    bool ok = false;
};

NormalFormResult normal_form_split(const std::array<double, 3>& b_tilde, double a1, double a2,
                                   double m, std::array<double, 2> eps, int retries = 30);

// Coefficients whose characteristic function vanishes at the three given real points.
PrototypeCoefficients coefficients_with_zeros(double a1, double a2, double m,
                                              const std::array<double, 3>& g);

PrototypeCoefficients s_mode_coefficients(const PhysicalParams& p, double alpha1_S, double b2);
PrototypeCoefficients tt_mode_coefficients(const PhysicalParams& p, double b2);

struct Polyline {
    std::vector<cplx> points;
};

struct ContourGrid {
    double re_lo = -2.0, re_hi = 8.0;
    double im_lo = -4.0, im_hi = 4.0;
    int nx = 401, ny = 321;
};

struct ZeroContours {
    std::vector<Polyline> re_zero;
    std::vector<Polyline> im_zero;
    // Cells where both Re F and Im F change sign, clustered to centres.
    std::vector<cplx> crossings;
    double cell = 0.0;
};

ZeroContours trace_zero_sets(const PrototypeCoefficients& k, double m, const ContourGrid& g);

}  // namespace semistab
