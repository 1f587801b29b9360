#pragma once

#include <functional>
#include <vector>

#include "semistab/quadrature.hpp"
#include "semistab/spectral.hpp"

namespace semistab {

struct ModeGrid {
    double p = 0.0;
    double t0 = 0.0;
    double T = 50.0;
    double dt = 0.01;

    int steps() const;
    double t(int n) const { return t0 + n * dt; }
    void validate() const;
    // dt = min(0.01 / max(1, p), 0.01 / sqrt(4m^2 + p^2)).
    static ModeGrid with_default_dt(double p, double m, double t0, double T);
};

// k(t) = -[sum_a w_a sin(W_a t)/W_a + int dens(M) sin(W_M t)/W_M dM],  W_M = sqrt(p^2 + M),
// together with K1 = int_0^t k and K2 = int_0^t K1.
class SpectralKernel {
public:
    struct Values {
        double K = 0.0, K1 = 0.0, K2 = 0.0;
        double K_cont = 0.0;
    };

    // Kernel of the inverse map from the Stieltjes-Perron measure of 1/F.
    static SpectralKernel inverse(const SpectralMeasure& mu, double p, double m);
    // Kernel of the forward map G_sigma.
    static SpectralKernel forward(const SpectralDensity& sigma, double p);

    Values at(double t) const;
    std::vector<Values> at(const std::vector<double>& ts) const;

    double p() const { return p_; }
    // int dens(M)/(M + p^2) dM, the t-linear rate of K2.
    double A1() const { return A1_; }
    double atom_weight_sum() const;

private:
    SpectralKernel() = default;
    void build(const std::function<double(double)>& dens, double threshold);

    double p_ = 0.0;
    std::vector<Atom> atoms_;
    quad::FilonGrid grid_;
    std::vector<double> a0_, a1_, a2_;
    double A1_ = 0.0;
    double omega_max_ = 0.0;
    double tail_a0_ = 0.0, tail_a0p_ = 0.0;
};

struct KernelTable {
    double p = 0.0;
    double c = 0.0;
    double dt = 0.0;
    // Samples at t_j = j dt, j = 0 .. steps + 1.
    std::vector<double> t, K, K1, K2, K_cont;
    SpectralMeasure measure;

    // Product-integration weights: (k * f)(t_n) = sum_k f_k w[n - k] for piecewise-linear f
    // with f_0 = 0; `first` holds the half-hat weight of f_0.
    std::vector<double> weights() const;
    std::vector<double> first_weights() const;
};

KernelTable kernel_K(const ModeGrid& g, double c, const SpectralDensity& sigma);
KernelTable forward_kernel(const ModeGrid& g, const SpectralDensity& sigma);
KernelTable tabulate(const SpectralKernel& k, const ModeGrid& g);

struct KernelBound {
    double p = 0.0;
    // max |K_cont(t)| t over the fit window.
    double C = 0.0;
    // max |K(t)| t including the discrete atom.
    double C_full = 0.0;
    double t_lo = 1.0, t_hi = 100.0;
};

KernelBound fit_kernel_bound(const SpectralKernel& k, double t_lo = 1.0, double t_hi = 100.0,
                             int samples = 4000);

// int_0^{t_end} |K| dt from a table: |K1(dt)| on the first step, trapezoid beyond.
double kernel_abs_integral(const KernelTable& tab, double t_end);

// (k * f)(t_n) with the table's product-integration weights.
std::vector<double> convolve(const KernelTable& tab, const std::vector<double>& f);

}  // namespace semistab
