#include "semistab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <Eigen/Eigenvalues>

namespace semistab::quad {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
using GL15 = boost::math::quadrature::gauss<double, 15>;
constexpr int kMaxIntervals = 4000;

std::vector<double> segment_points(double a, double b, const std::vector<double>& breaks) {
    std::vector<double> pts{a};
    for (double x : breaks) {
        if (x > a && x < b) pts.push_back(x);
    }
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

struct Interval {
    double a, b, value, error, l1;
    bool operator<(const Interval& o) const { return error < o.error; }
};

// One GK31 panel with QUADPACK error scaling.
Interval gk_panel(const std::function<double(double)>& f, double a, double b) {
    const auto& xk = GK::abscissa();
    const auto& wk = GK::weights();
    const auto& wg = GL15::weights();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const double fc = f(c);
    double rk = fc * wk[0], rg = fc * wg[0], rabs = std::abs(rk);
    std::vector<double> fv(2 * xk.size());
    for (std::size_t k = 1; k < xk.size(); ++k) {
        const double f1 = f(c - h * xk[k]), f2 = f(c + h * xk[k]);
        fv[2 * k] = f1;
        fv[2 * k + 1] = f2;
        rk += wk[k] * (f1 + f2);
        rabs += wk[k] * (std::abs(f1) + std::abs(f2));
        if (k % 2 == 0) rg += wg[k / 2] * (f1 + f2);
    }
    const double mean = 0.5 * rk;
    double rasc = wk[0] * std::abs(fc - mean);
    for (std::size_t k = 1; k < xk.size(); ++k)
        rasc += wk[k] * (std::abs(fv[2 * k] - mean) + std::abs(fv[2 * k + 1] - mean));
    rasc *= std::abs(h);
    double err = std::abs((rk - rg) * h);
    if (rasc != 0.0 && err != 0.0) err = rasc * std::min(1.0, std::pow(200.0 * err / rasc, 1.5));
    const double rabs_h = rabs * std::abs(h);
    const double eps = std::numeric_limits<double>::epsilon();
    if (rabs_h > std::numeric_limits<double>::min() / (50.0 * eps))
        err = std::max(50.0 * eps * rabs_h, err);
    return {a, b, rk * h, err, rabs_h};
}

}  // namespace

namespace {

struct Adaptive {
    std::vector<Interval> intervals;
    double value = 0.0, error = 0.0, l1 = 0.0;
};

Adaptive run_adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol,
                      double rel_tol, const std::vector<double>& breaks) {
    const auto pts = segment_points(a, b, breaks);
    std::priority_queue<Interval> heap;
    double value = 0.0, error = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        auto iv = gk_panel(f, pts[i], pts[i + 1]);
        value += iv.value;
        error += iv.error;
        heap.push(iv);
    }
    int count = static_cast<int>(heap.size());
    const double eps = std::numeric_limits<double>::epsilon();
    while (error > std::max(abs_tol, rel_tol * std::abs(value)) && count < kMaxIntervals) {
        const Interval top = heap.top();
        const double mid = 0.5 * (top.a + top.b);
        if (!(mid > top.a && mid < top.b) || top.error <= 50.0 * eps * top.l1) break;
        heap.pop();
        const auto left = gk_panel(f, top.a, mid);
        const auto right = gk_panel(f, mid, top.b);
        value += left.value + right.value - top.value;
        error += left.error + right.error - top.error;
        heap.push(left);
        heap.push(right);
        ++count;
    }
    // Recompute sums to shed accumulated cancellation.
    Adaptive out;
    while (!heap.empty()) {
        const auto& iv = heap.top();
        out.value += iv.value;
        out.error += iv.error;
        out.l1 += iv.l1;
        out.intervals.push_back(iv);
        heap.pop();
    }
    return out;
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, double rel_tol, const std::vector<double>& breaks) {
    const auto r = run_adaptive(f, a, b, abs_tol, rel_tol, breaks);
    const double target = std::max(abs_tol, rel_tol * std::abs(r.value));
    if (!(r.error <= target) && r.error > 1e-13 * r.l1)
        throw ConvergenceError("adaptive quadrature missed tolerance", r.error);
    return {r.value, r.error};
}

std::vector<double> adaptive_partition(const std::function<double(double)>& f, double a, double b,
                                       double abs_tol, double rel_tol,
                                       const std::vector<double>& breaks) {
    const auto r = run_adaptive(f, a, b, abs_tol, rel_tol, breaks);
    std::vector<double> edges{a};
    for (const auto& iv : r.intervals) edges.push_back(iv.b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

CQuadResult integrate_complex(const std::function<cplx(double)>& f, double a, double b,
                              double abs_tol, double rel_tol, const std::vector<double>& breaks) {
    const auto re = integrate([&](double x) { return f(x).real(); }, a, b, abs_tol, rel_tol, breaks);
    const auto im = integrate([&](double x) { return f(x).imag(); }, a, b, abs_tol, rel_tol, breaks);
    return {cplx(re.value, im.value), std::hypot(re.error, im.error)};
}

Rule gauss_legendre_panels(double a, double b, int panels) {
    using G = boost::math::quadrature::gauss<double, 10>;
    const auto& abs = G::abscissa();
    const auto& wts = G::weights();
    Rule r;
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * h, half = 0.5 * h;
        for (std::size_t k = 0; k < abs.size(); ++k) {
            if (abs[k] == 0.0) {
                r.x.push_back(c);
                r.w.push_back(wts[k] * half);
                continue;
            }
            r.x.push_back(c - half * abs[k]);
            r.w.push_back(wts[k] * half);
            r.x.push_back(c + half * abs[k]);
            r.w.push_back(wts[k] * half);
        }
    }
    return r;
}

Rule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw DomainError("gauss_legendre: n must be positive");
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double beta = k / std::sqrt(4.0 * k * k - 1.0);
        T(k, k - 1) = beta;
        T(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    Rule r;
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (int k = 0; k < n; ++k) {
        const double v = es.eigenvectors()(0, k);
        r.x.push_back(c + h * es.eigenvalues()(k));
        r.w.push_back(2.0 * h * v * v);
    }
    return r;
}

Rule gauss_legendre_on(const std::vector<double>& edges) {
    Rule r;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const auto p = gauss_legendre_panels(edges[i], edges[i + 1], 1);
        r.x.insert(r.x.end(), p.x.begin(), p.x.end());
        r.w.insert(r.w.end(), p.w.begin(), p.w.end());
    }
    return r;
}

FilonGrid::FilonGrid(std::vector<double> panel_edges) : edges_(std::move(panel_edges)) {
    if (edges_.size() < 2) throw DomainError("Filon grid needs at least one panel");
}

std::vector<double> FilonGrid::nodes() const {
    std::vector<double> x;
    x.reserve(node_count());
    for (std::size_t p = 0; p + 1 < edges_.size(); ++p) {
        x.push_back(edges_[p]);
        x.push_back(0.5 * (edges_[p] + edges_[p + 1]));
    }
    x.push_back(edges_.back());
    return x;
}

namespace {

// Moments int_{-1}^{1} x^k e^{i th x} dx for k = 0, 1, 2.
inline void filon_moments(double th, cplx& m0, cplx& m1, cplx& m2) {
    const double a = std::abs(th);
    if (a < 0.1) {
        const double t2 = th * th;
        m0 = 2.0 * (1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0);
        m1 = cplx(0.0, 2.0 * th * (1.0 / 3.0 - t2 / 30.0 + t2 * t2 / 840.0 - t2 * t2 * t2 / 45360.0));
        m2 = 2.0 * (1.0 / 3.0 - t2 / 10.0 + t2 * t2 / 168.0 - t2 * t2 * t2 / 6480.0);
        return;
    }
    const double s = std::sin(th), c = std::cos(th);
    m0 = 2.0 * s / th;
    m1 = cplx(0.0, 2.0 * (s - th * c) / (th * th));
    m2 = 2.0 * ((th * th - 2.0) * s + 2.0 * th * c) / (th * th * th);
}

}  // namespace

void FilonGrid::integrate_many(const std::vector<const std::vector<double>*>& f, double t,
                               std::vector<cplx>& out) const {
    out.assign(f.size(), cplx{});
    const std::size_t np = edges_.size() - 1;
    for (std::size_t p = 0; p < np; ++p) {
        const double h = 0.5 * (edges_[p + 1] - edges_[p]);
        const double xm = edges_[p] + h;
        cplx m0, m1, m2;
        filon_moments(h * t, m0, m1, m2);
        const cplx ph = h * cplx(std::cos(xm * t), std::sin(xm * t));
        for (std::size_t j = 0; j < f.size(); ++j) {
            const auto& v = *f[j];
            const double fa = v[2 * p], fm = v[2 * p + 1], fb = v[2 * p + 2];
            const double c1 = 0.5 * (fb - fa), c2 = 0.5 * (fa - 2.0 * fm + fb);
            out[j] += ph * (fm * m0 + c1 * m1 + c2 * m2);
        }
    }
}

cplx FilonGrid::integrate(const std::vector<double>& f_nodes, double t) const {
    std::vector<cplx> out;
    integrate_many({&f_nodes}, t, out);
    return out[0];
}

}  // namespace semistab::quad
