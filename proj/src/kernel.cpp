#include "semistab/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "semistab/parallel.hpp"

namespace semistab {

int ModeGrid::steps() const { return static_cast<int>(std::llround((T - t0) / dt)); }

void ModeGrid::validate() const {
    if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("grid: p must be >= 0");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("grid: dt must be positive");
    if (!(T > t0) || !std::isfinite(T) || !std::isfinite(t0)) throw DomainError("grid: need T > t0");
    if (steps() < 2) throw DomainError("grid: fewer than two steps");
    if (std::abs((T - t0) / dt - steps()) > 1e-6) throw DomainError("grid: T - t0 not a multiple of dt");
}

ModeGrid ModeGrid::with_default_dt(double p, double m, double t0, double T) {
    ModeGrid g;
    g.p = p;
    g.t0 = t0;
    g.dt = std::min(0.01 / std::max(1.0, p), 0.01 / std::sqrt(4.0 * m * m + p * p));
    const double n = std::ceil((T - t0) / g.dt - 1e-9);
    g.dt = (T - t0) / n;
    g.T = T;
    return g;
}

namespace {

constexpr double kOmegaMax = 1e8;

std::vector<double> filon_edges(double w0, double wmax) {
    std::vector<double> e{w0};
    for (double d = 1e-12 * w0; d < 0.5 * w0; d *= 1.05) e.push_back(w0 + d);
    for (double w = 1.5 * w0; w < wmax; w *= 1.01) {
        if (w > e.back()) e.push_back(w);
    }
    if (wmax > e.back() * 1.001)
        e.push_back(wmax);
    else
        e.back() = wmax;
    return e;
}

}  // namespace

void SpectralKernel::build(const std::function<double(double)>& dens, double threshold) {
    const double w0 = std::sqrt(threshold + p_ * p_);
    omega_max_ = kOmegaMax * std::max(1.0, w0);
    grid_ = quad::FilonGrid(filon_edges(w0, omega_max_));
    const auto nodes = grid_.nodes();
    a0_.resize(nodes.size());
    a1_.resize(nodes.size());
    a2_.resize(nodes.size());
    auto amp = [&](double w) {
        const double M = (w - w0) * (w + w0) + threshold;
        return w <= w0 ? 0.0 : 2.0 * dens(M);
    };
    parallel_for(static_cast<int>(nodes.size()), [&](int i) {
        const double w = nodes[i];
        a0_[i] = amp(w);
        a1_[i] = a0_[i] / w;
        a2_[i] = a0_[i] / (w * w);
    });
    const double W = omega_max_, dw = 1e-4 * W;
    tail_a0_ = amp(W);
    tail_a0p_ = (amp(W + dw) - amp(W - dw)) / (2.0 * dw);
}

SpectralKernel SpectralKernel::inverse(const SpectralMeasure& mu, double p, double m) {
    SpectralKernel k;
    k.p_ = p;
    k.atoms_ = mu.atoms;
    k.build(mu.continuous, mu.threshold);
    k.A1_ = measure_stieltjes(mu, p * p, m);
    return k;
}

SpectralKernel SpectralKernel::forward(const SpectralDensity& sigma, double p) {
    SpectralKernel k;
    k.p_ = p;
    k.build([&sigma](double M) { return sigma(M); }, sigma.threshold());
    k.A1_ = stieltjes_g(sigma, cplx(-p * p, 0.0)).real();
    return k;
}

double SpectralKernel::atom_weight_sum() const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.weight;
    return s;
}

SpectralKernel::Values SpectralKernel::at(double t) const {
    Values v;
    if (t <= 0.0) return v;
    if (t * omega_max_ < 50.0) throw DomainError("kernel: t below the resolved range");
    std::vector<cplx> I;
    grid_.integrate_many({&a0_, &a1_, &a2_}, t, I);
    // int_W^inf a(w) e^{iwt} dw by two integrations by parts; a1, a2 follow from a0 = 2 dens.
    const double W = omega_max_;
    const cplx e(std::cos(W * t), std::sin(W * t));
    const double amp[3] = {tail_a0_, tail_a0_ / W, tail_a0_ / (W * W)};
    const double ampp[3] = {tail_a0p_, tail_a0p_ / W - tail_a0_ / (W * W),
                            tail_a0p_ / (W * W) - 2.0 * tail_a0_ / (W * W * W)};
    for (int j = 0; j < 3; ++j) I[j] += e * (cplx(0.0, amp[j] / t) - ampp[j] / (t * t));
    v.K_cont = -I[0].imag();
    const double K1c = -(A1_ - I[1].real());
    const double K2c = -(t * A1_ - I[2].imag());
    v.K = v.K_cont;
    v.K1 = K1c;
    v.K2 = K2c;
    for (const auto& a : atoms_) {
        const double w = std::sqrt(a.location + p_ * p_);
        const double s = std::sin(w * t), h = std::sin(0.5 * w * t);
        v.K -= a.weight * s / w;
        v.K1 -= a.weight * 2.0 * h * h / (w * w);
        v.K2 -= a.weight * (t - s / w) / (w * w);
    }
    return v;
}

std::vector<SpectralKernel::Values> SpectralKernel::at(const std::vector<double>& ts) const {
    std::vector<Values> out(ts.size());
    constexpr int block = 32;
    const int nb = static_cast<int>((ts.size() + block - 1) / block);
    parallel_for(nb, [&](int b) {
        const std::size_t hi = std::min(ts.size(), static_cast<std::size_t>(b + 1) * block);
        for (std::size_t i = static_cast<std::size_t>(b) * block; i < hi; ++i) out[i] = at(ts[i]);
    });
    return out;
}

KernelTable tabulate(const SpectralKernel& k, const ModeGrid& g) {
    g.validate();
    KernelTable tab;
    tab.p = k.p();
    tab.dt = g.dt;
    const int n = g.steps() + 2;
    tab.t.resize(n);
    for (int j = 0; j < n; ++j) tab.t[j] = j * g.dt;
    const auto vals = k.at(tab.t);
    tab.K.resize(n);
    tab.K1.resize(n);
    tab.K2.resize(n);
    tab.K_cont.resize(n);
    for (int j = 0; j < n; ++j) {
        tab.K[j] = vals[j].K;
        tab.K1[j] = vals[j].K1;
        tab.K2[j] = vals[j].K2;
        tab.K_cont[j] = vals[j].K_cont;
    }
    return tab;
}

KernelTable kernel_K(const ModeGrid& g, double c, const SpectralDensity& sigma) {
    auto mu = perron_inverse_F(c, sigma);
    const auto k = SpectralKernel::inverse(mu, g.p, sigma.m);
    auto tab = tabulate(k, g);
    tab.c = c;
    tab.measure = std::move(mu);
    return tab;
}

KernelTable forward_kernel(const ModeGrid& g, const SpectralDensity& sigma) {
    return tabulate(SpectralKernel::forward(sigma, g.p), g);
}

std::vector<double> KernelTable::weights() const {
    const std::size_t n = K2.size() - 1;
    std::vector<double> w(n);
    w[0] = K2[1] / dt;
    for (std::size_t j = 1; j < n; ++j) w[j] = (K2[j + 1] - 2.0 * K2[j] + K2[j - 1]) / dt;
    return w;
}

std::vector<double> KernelTable::first_weights() const {
    const std::size_t n = K2.size() - 1;
    std::vector<double> w(n, 0.0);
    for (std::size_t j = 1; j < n; ++j) w[j] = K1[j] - (K2[j] - K2[j - 1]) / dt;
    return w;
}

std::vector<double> convolve(const KernelTable& tab, const std::vector<double>& f) {
    const auto w = tab.weights();
    const auto w0 = tab.first_weights();
    if (f.size() > w.size()) throw DomainError("convolve: series longer than kernel table");
    const std::size_t n = f.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        double s = f[0] * w0[i];
        for (std::size_t k = 1; k <= i; ++k) s += w[i - k] * f[k];
        out[i] = s;
    }
    return out;
}

KernelBound fit_kernel_bound(const SpectralKernel& k, double t_lo, double t_hi, int samples) {
    std::vector<double> ts(samples);
    for (int i = 0; i < samples; ++i)
        ts[i] = t_lo * std::pow(t_hi / t_lo, static_cast<double>(i) / (samples - 1));
    const auto v = k.at(ts);
    KernelBound b;
    b.p = k.p();
    b.t_lo = t_lo;
    b.t_hi = t_hi;
    for (int i = 0; i < samples; ++i) {
        b.C = std::max(b.C, std::abs(v[i].K_cont) * ts[i]);
        b.C_full = std::max(b.C_full, std::abs(v[i].K) * ts[i]);
    }
    return b;
}

double kernel_abs_integral(const KernelTable& tab, double t_end) {
    const int J = static_cast<int>(std::llround(t_end / tab.dt));
    if (J < 2 || J >= static_cast<int>(tab.K.size())) throw DomainError("kernel table too short");
    double s = std::abs(tab.K1[1]);
    for (int j = 1; j < J; ++j) s += 0.5 * tab.dt * (std::abs(tab.K[j]) + std::abs(tab.K[j + 1]));
    return s;
}

}  // namespace semistab
