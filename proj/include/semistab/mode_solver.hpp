#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "semistab/kernel.hpp"
#include "semistab/mode_algebra.hpp"

namespace semistab {

struct ModeSource {
    ModeGrid grid;
    std::vector<double> samples;
    double support_start = 0.0;

    void validate() const;
};

// Smooth bump A exp(1 - 1/(1 - x^2)) with x mapping [start, end] onto [-1, 1].
double bump(double t, double start, double end, double amplitude = 1.0);
ModeSource bump_source(const ModeGrid& g, double start, double end, double amplitude = 1.0);

enum class Route { dyson, volterra, polecut };
std::string to_string(Route r);

struct ResidualReport {
    int iterations = 0;
    // Last sup-norm increment relative to sup |S|.
    double final_increment = 0.0;
    // Grönwall envelope: rate used, the analytic rate, and max |partial - phi_0| / envelope.
    double kappa = 0.0;
    double kappa_analytic = 0.0;
    double log_envelope_max = 0.0;
    double envelope_ratio = 0.0;
    // Same ratio against the discrete majorant sum_k |R|^k |S|.
    double majorant_ratio = 0.0;
    bool envelope_respected = true;
    double cut_truncation = 0.0;
    double causality_leak = 0.0;
    std::vector<std::string> notes;
};

struct ModeSolution {
    ModeGrid grid;
    std::vector<double> samples;
    Route route = Route::dyson;
    ResidualReport report;
};

// u = -int_0^t sin(sqrt(x)(t - s))/sqrt(x) f(s) ds for piecewise-linear f on a uniform grid,
// i.e. u'' + x u = -f with zero data. Exact for the interpolant; x may be complex.
class Duhamel {
public:
    Duhamel(cplx x, double h);
    std::vector<cplx> apply(const std::vector<cplx>& f) const;
    std::vector<double> apply(const std::vector<double>& f) const;

private:
    cplx x_, C_, S_, P1_, P2_;
    double h_;
};

// G_ret^gamma per mode: (box - gamma) u = f with box -> -d_t^2 - p^2.
std::vector<cplx> retarded_green(cplx gamma, double p, double dt, const std::vector<cplx>& f);
std::vector<double> retarded_green(double gamma, double p, double dt, const std::vector<double>& f);

// With `corrected`, the input is replaced by f - dt^2/12 f'' before product integration, which
// removes the mean interpolation error of the piecewise-linear interpolant.
std::vector<double> apply_forward_G(const std::vector<double>& phi, const SpectralDensity& sigma,
                                    const ModeGrid& g, bool corrected = true);
std::vector<double> apply_forward_G(const std::vector<double>& phi, const KernelTable& forward,
                                    bool corrected = true);
// K * ((c + p^2) Phi + Phi'') with a centred stencil of the given order (2 or 4).
std::vector<double> invert_G(const std::vector<double>& Phi, const KernelTable& kernel,
                             const ModeGrid& g, double c, int stencil_order = 4,
                             bool corrected = true);
std::vector<double> second_difference(const std::vector<double>& f, double dt, int order);
std::vector<double> interpolation_corrected(const std::vector<double>& f, double dt);

// sum_i d_i G_ret^{gamma_i}(K * phi) + direct * (K * phi).
std::vector<double> W_ret_apply(const std::vector<double>& phi, const std::vector<double>& gammas,
                                const std::vector<double>& d, const KernelTable& kernel,
                                const ModeGrid& g, double direct = 0.0);

struct DysonConfig {
    PrototypeCoefficients coeffs;
    double m = 1.0;
    // Perron atom location; default 2 m^2.
    std::optional<double> c;
    enum class Reference { normal_form, self, explicit_coeffs };
    Reference reference = Reference::normal_form;
    std::optional<PrototypeCoefficients> reference_coeffs;
    std::array<double, 2> eps{1e-3, 1e-3};
    double tol = 1e-13;
    int max_iter = 2000;
};

// Quantities shared by the Dyson and Volterra routes.
struct DysonSetup {
    PrototypeCoefficients reference;
    std::vector<double> gammas;
    std::vector<double> d, e;
    double direct = 0.0;
    SpectralDensity varsigma;
    KernelTable kernel;
    std::vector<double> S_frak;
};

DysonSetup dyson_setup(const ModeSource& S, const DysonConfig& cfg);
ModeSolution dyson_solve(const ModeSource& S, const DysonConfig& cfg);
ModeSolution dyson_solve(const ModeSource& S, const DysonSetup& setup, const DysonConfig& cfg);
ModeSolution volterra_solve(const ModeSource& S, const DysonConfig& cfg);
ModeSolution volterra_solve(const ModeSource& S, const DysonSetup& setup);

// theta(M) = Im F(M + i0) / (pi |F(M + i0)|^2) on the cut.
double cut_density(double M, const PrototypeCoefficients& k, double m);

struct PolecutOptions {
    std::optional<ZeroSet> zeros;
    // Minimum distance of a zero from the threshold, relative to 4m^2.
    double cut_clearance = 1e-6;
    // Cut integral truncated at M_max (in units of m^2).
    double M_max = 1e5;
};

ModeSolution polecut_solve(const ModeSource& S, const PrototypeCoefficients& k, double m,
                           const PolecutOptions& opt = {});

enum class Verdict { stable_decaying, marginal, unstable, mixed_cut_absorbed };
std::string to_string(Verdict v);

struct Classification {
    Verdict verdict = Verdict::stable_decaying;
    // Growth rate Re sqrt(-gamma) maximised over the zero set (sqrt(L) for real gamma = -L).
    double rate = 0.0;
    double L = 0.0;
    ZeroSet zeros;
};

Classification classify_stability(const PrototypeCoefficients& k, double m,
                                  std::optional<SearchBox> box = std::nullopt);
Classification classify_stability(const ZeroSet& zs, double m);

struct AsymptoticFit {
    enum class Kind { power, exponential };
    Kind kind = Kind::power;
    double power_exponent = 0.0;
    double rate = 0.0;
    double power_residual = 0.0;
    double exp_residual = 0.0;
    double fit_error = 0.0;
    int points = 0;
};

std::string to_string(AsymptoticFit::Kind k);

struct FitWindow {
    double t_lo = 0.0, t_hi = 0.0;
    // Envelope window width; zero fits |y| pointwise.
    double width = 0.0;
    enum class Envelope { max, rms };
    Envelope envelope = Envelope::rms;
    // Windows advance by width / 4 unless set.
    double step = 0.0;
    // Power laws are fitted in t - origin.
    double origin = 0.0;
};

// Log-log (power) and log-linear (exponential) least squares on the envelope of |y|; the
// smaller residual wins.
AsymptoticFit asymptotic_fit(const std::vector<double>& t, const std::vector<double>& y,
                             const FitWindow& w);

struct PacketOptions {
    double sigma_p = 0.5;
    int modes = 64;
    double p_max_sigmas = 5.0;
    double dt = 0.05;
    double T = 60.0;
    double source_start = 1.0, source_end = 3.0;
    // Output sampling stride on the time grid.
    int stride = 1;
    double M_max = 1e4;
};

struct PacketResult {
    std::vector<double> t, phi;
    int modes = 0;
};

// phi(t, 0) = (1 / 2 pi^2) int p^2 exp(-p^2 / 2 sigma^2) phi_p(t) dp from per-mode polecut solves.
PacketResult momentum_packet(const PrototypeCoefficients& k, double m, const PacketOptions& opt);

double sup_norm(const std::vector<double>& v);
double relative_sup_diff(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace semistab
