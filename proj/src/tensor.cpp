#include "semistab/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "semistab/mode_solver.hpp"
#include "semistab/parallel.hpp"

namespace semistab::tensor {

using Series = std::vector<cplx>;

Causal Causal::identity(int n) {
    std::vector<double> c(n, 0.0);
    if (n > 0) c[0] = 1.0;
    return Causal(std::move(c));
}

Causal Causal::derivative(int n, double dt) {
    static constexpr double bdf4[5] = {25.0 / 12.0, -4.0, 3.0, -4.0 / 3.0, 0.25};
    std::vector<double> c(n, 0.0);
    for (int j = 0; j < std::min(n, 5); ++j) c[j] = bdf4[j] / dt;
    return Causal(std::move(c));
}

Causal Causal::operator*(const Causal& o) const {
    const int n = std::min(size(), o.size());
    std::vector<long double> r(n, 0.0L);
    for (int i = 0; i < n; ++i) {
        if (c_[i] == 0.0) continue;
        for (int j = 0; i + j < n; ++j) r[i + j] += static_cast<long double>(c_[i]) * o.c_[j];
    }
    return Causal(std::vector<double>(r.begin(), r.end()));
}

Causal Causal::operator+(const Causal& o) const {
    std::vector<double> r(c_);
    for (int i = 0; i < std::min(size(), o.size()); ++i) r[i] += o.c_[i];
    return Causal(std::move(r));
}

Causal Causal::operator-(const Causal& o) const { return *this + o * -1.0; }

Causal Causal::operator*(double s) const {
    std::vector<double> r(c_);
    for (double& x : r) x *= s;
    return Causal(std::move(r));
}

Causal Causal::inverse() const {
    const int n = size();
    if (n == 0 || c_[0] == 0.0) throw DomainError("causal operator not invertible");
    std::vector<long double> r(n, 0.0L);
    r[0] = 1.0L / c_[0];
    for (int i = 1; i < n; ++i) {
        long double s = 0.0L;
        for (int j = 1; j <= i; ++j) s += c_[j] * r[i - j];
        r[i] = -s / c_[0];
    }
    return Causal(std::vector<double>(r.begin(), r.end()));
}

Series Causal::apply(const Series& f) const {
    const int n = static_cast<int>(f.size());
    if (n > size()) throw DomainError("causal operator shorter than series");
    int band = size();
    while (band > 0 && c_[band - 1] == 0.0) --band;
    int first = 0;
    while (first < n && f[first] == cplx{}) ++first;
    Series out(n);
    for (int i = first; i < n; ++i) {
        long double re = 0.0L, im = 0.0L;
        for (int j = std::max(first, i - band + 1); j <= i; ++j) {
            re += static_cast<long double>(c_[i - j]) * f[j].real();
            im += static_cast<long double>(c_[i - j]) * f[j].imag();
        }
        out[i] = cplx(static_cast<double>(re), static_cast<double>(im));
    }
    return out;
}

std::vector<double> Space::k(int mode) const {
    std::vector<double> r(modes[mode].size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = 2.0 * kPi / ell * modes[mode][i];
    return r;
}

double Space::k2(int mode) const {
    double s = 0.0;
    for (double x : k(mode)) s += x * x;
    return s;
}

int Space::partner(int mode) const {
    std::vector<int> neg(modes[mode]);
    for (int& x : neg) x = -x;
    const auto it = std::find(modes.begin(), modes.end(), neg);
    return it == modes.end() ? -1 : static_cast<int>(it - modes.begin());
}

void Space::validate() const {
    if (n < 2) throw DomainError("tensor: dimension must be >= 2");
    if (!(ell > 0.0) || !(dt > 0.0)) throw DomainError("tensor: ell and dt must be positive");
    if (steps < 5) throw DomainError("tensor: grid too short for the difference stencil");
    if (support_start < t0 + 2.0 * dt - 1e-12 * dt)
        throw DomainError("tensor: support must start at least two steps after t0");
    if (modes.empty()) throw DomainError("tensor: no modes");
    for (const auto& m : modes)
        if (static_cast<int>(m.size()) != n - 1) throw DomainError("tensor: mode has wrong length");
}

Space Space::periodic_box(int n, int per_axis, double ell, double t0, double dt, int steps,
                          double support_start) {
    Space s;
    s.n = n;
    s.ell = ell;
    s.t0 = t0;
    s.dt = dt;
    s.steps = steps;
    s.support_start = support_start;
    const int d = n - 1, lo = -per_axis / 2;
    std::vector<int> idx(d, lo);
    while (true) {
        s.modes.push_back(idx);
        int i = d - 1;
        while (i >= 0 && ++idx[i] == lo + per_axis) idx[i--] = lo;
        if (i < 0) break;
    }
    s.validate();
    return s;
}

template <int Rank>
int Field<Rank>::comps() const {
    if constexpr (Rank == 0) return 1;
    else if constexpr (Rank == 1) return space.n;
    else return space.n * (space.n + 1) / 2;
}

template <int Rank>
Field<Rank> Field<Rank>::zeros(const Space& s) {
    Field f;
    f.space = s;
    f.data.assign(s.modes.size() * f.comps() * s.steps, cplx{});
    return f;
}

int sym_index(int n, int a, int b) {
    if (a > b) std::swap(a, b);
    return a * n - a * (a - 1) / 2 + (b - a);
}

namespace {

double eta(int a) { return a == 0 ? -1.0 : 1.0; }

void check_same(const Space& a, const Space& b) {
    if (a.n != b.n || a.steps != b.steps || a.modes != b.modes || a.dt != b.dt)
        throw DomainError("tensor: fields live on different spaces");
}

// Per-space operators: the causal derivative and, per distinct |k|^2, box, its inverse G and
// the product D G.
struct Ops {
    struct PerK {
        Causal box, G, DG;
    };
    Causal D;
    std::map<long, PerK> box_G;
    std::vector<long> key;
    const Space* s;

    explicit Ops(const Space& sp) : s(&sp) {
        D = Causal::derivative(sp.steps, sp.dt);
        const Causal D2 = D * D;
        key.resize(sp.modes.size());
        for (std::size_t m = 0; m < sp.modes.size(); ++m) {
            long q = 0;
            for (int x : sp.modes[m]) q += static_cast<long>(x) * x;
            key[m] = q;
            if (box_G.count(q)) continue;
            const Causal b = D2 * -1.0 - Causal::identity(sp.steps) * sp.k2(static_cast<int>(m));
            const Causal G = b.inverse();
            box_G.emplace(q, PerK{b, G, D * G});
        }
    }
    const Causal& box(int m) const { return box_G.at(key[m]).box; }
    const Causal& G(int m) const { return box_G.at(key[m]).G; }
    const Causal& DG(int m) const { return box_G.at(key[m]).DG; }
};

Series get(const ScalarField& f, int m) {
    const cplx* p = f.series(m, 0);
    return Series(p, p + f.stride());
}

void put(ScalarField& f, int m, const Series& v) { std::copy(v.begin(), v.end(), f.series(m, 0)); }

template <class Body>
ScalarField map_modes(const Space& s, Body body) {
    auto out = ScalarField::zeros(s);
    parallel_for(static_cast<int>(s.modes.size()), [&](int m) { put(out, m, body(m)); });
    return out;
}

// d_a f with spectral space derivatives; `raised` gives d^a.
ScalarField d(const Ops& ops, int a, const ScalarField& f, bool raised = false) {
    const Space& s = f.space;
    return map_modes(s, [&](int m) {
        auto v = get(f, m);
        if (a == 0) {
            v = ops.D.apply(v);
            if (raised)
                for (auto& x : v) x = -x;
        } else {
            const cplx ik(0.0, 2.0 * kPi / s.ell * s.modes[m][a - 1]);
            for (auto& x : v) x *= ik;
        }
        return v;
    });
}

// d_a G(f), with the time component applied as the single operator D G.
ScalarField d_G(const Ops& ops, int a, const ScalarField& f) {
    const Space& s = f.space;
    return map_modes(s, [&](int m) {
        if (a == 0) return ops.DG(m).apply(get(f, m));
        auto v = ops.G(m).apply(get(f, m));
        const cplx ik(0.0, 2.0 * kPi / s.ell * s.modes[m][a - 1]);
        for (auto& x : v) x *= ik;
        return v;
    });
}

ScalarField box_of(const Ops& ops, const ScalarField& f) {
    return map_modes(f.space, [&](int m) { return ops.box(m).apply(get(f, m)); });
}

ScalarField G_of(const Ops& ops, const ScalarField& f) {
    return map_modes(f.space, [&](int m) { return ops.G(m).apply(get(f, m)); });
}

ScalarField comp(const SymmetricTensorField& h, int a, int b) {
    auto f = ScalarField::zeros(h.space);
    const int c = sym_index(h.space.n, a, b);
    for (std::size_t m = 0; m < h.space.modes.size(); ++m) {
        const cplx* p = h.series(static_cast<int>(m), c);
        std::copy(p, p + h.stride(), f.series(static_cast<int>(m), 0));
    }
    return f;
}

ScalarField comp(const CovectorField& v, int a) {
    auto f = ScalarField::zeros(v.space);
    for (std::size_t m = 0; m < v.space.modes.size(); ++m) {
        const cplx* p = v.series(static_cast<int>(m), a);
        std::copy(p, p + v.stride(), f.series(static_cast<int>(m), 0));
    }
    return f;
}

void set(SymmetricTensorField& h, int a, int b, const ScalarField& f) {
    const int c = sym_index(h.space.n, a, b);
    for (std::size_t m = 0; m < h.space.modes.size(); ++m) {
        const cplx* p = f.series(static_cast<int>(m), 0);
        std::copy(p, p + h.stride(), h.series(static_cast<int>(m), c));
    }
}

void set(CovectorField& v, int a, const ScalarField& f) {
    for (std::size_t m = 0; m < v.space.modes.size(); ++m) {
        const cplx* p = f.series(static_cast<int>(m), 0);
        std::copy(p, p + v.stride(), v.series(static_cast<int>(m), a));
    }
}

ScalarField trace_impl(const SymmetricTensorField& h) {
    auto t = ScalarField::zeros(h.space);
    for (int a = 0; a < h.space.n; ++a) t = t + eta(a) * comp(h, a, a);
    return t;
}

CovectorField divergence_impl(const Ops& ops, const SymmetricTensorField& h) {
    auto out = CovectorField::zeros(h.space);
    for (int b = 0; b < h.space.n; ++b) {
        auto s = ScalarField::zeros(h.space);
        for (int a = 0; a < h.space.n; ++a) s = s + d(ops, a, comp(h, a, b), true);
        set(out, b, s);
    }
    return out;
}

ScalarField divergence_impl(const Ops& ops, const CovectorField& v) {
    auto s = ScalarField::zeros(v.space);
    for (int a = 0; a < v.space.n; ++a) s = s + d(ops, a, comp(v, a), true);
    return s;
}

SymmetricTensorField map_components(const Ops& ops, const SymmetricTensorField& h, bool use_box) {
    auto out = SymmetricTensorField::zeros(h.space);
    for (int a = 0; a < h.space.n; ++a)
        for (int b = a; b < h.space.n; ++b) {
            const auto c = comp(h, a, b);
            set(out, a, b, use_box ? box_of(ops, c) : G_of(ops, c));
        }
    return out;
}

// eta_ab s.
SymmetricTensorField eta_times(const ScalarField& s) {
    auto out = SymmetricTensorField::zeros(s.space);
    for (int a = 0; a < s.space.n; ++a) set(out, a, a, eta(a) * s);
    return out;
}

// d_a d_b G(f) using D^2 G = -1 - |k|^2 G, so no difference acts on G(f).
SymmetricTensorField hessian_G(const Ops& ops, const ScalarField& f) {
    const Space& s = f.space;
    auto out = SymmetricTensorField::zeros(s);
    const auto Gf = G_of(ops, f);
    const auto DGf = d_G(ops, 0, f);
    for (std::size_t m = 0; m < s.modes.size(); ++m) {
        const int mi = static_cast<int>(m);
        const auto k = s.k(mi);
        const double k2 = s.k2(mi);
        const cplx* g = Gf.series(mi, 0);
        const cplx* dg = DGf.series(mi, 0);
        const cplx* fv = f.series(mi, 0);
        for (int a = 0; a < s.n; ++a)
            for (int b = a; b < s.n; ++b) {
                cplx* o = out.series(mi, sym_index(s.n, a, b));
                for (int j = 0; j < s.steps; ++j) {
                    if (a == 0 && b == 0)
                        o[j] = -fv[j] - k2 * g[j];
                    else if (a == 0)
                        o[j] = cplx(0.0, k[b - 1]) * dg[j];
                    else
                        o[j] = -k[a - 1] * k[b - 1] * g[j];
                }
            }
    }
    return out;
}

CovectorField gradient_impl(const Ops& ops, const ScalarField& f) {
    auto out = CovectorField::zeros(f.space);
    for (int a = 0; a < f.space.n; ++a) set(out, a, d(ops, a, f));
    return out;
}

SymmetricTensorField sym_grad_impl(const Ops& ops, const CovectorField& X) {
    auto out = SymmetricTensorField::zeros(X.space);
    for (int a = 0; a < X.space.n; ++a)
        for (int b = a; b < X.space.n; ++b)
            set(out, a, b, d(ops, a, comp(X, b)) + d(ops, b, comp(X, a)));
    return out;
}

ScalarField tau_contract_impl(const Ops& ops, const SymmetricTensorField& h) {
    const auto div = divergence_impl(ops, h);
    return trace_impl(h) - G_of(ops, divergence_impl(ops, div));
}

SymmetricTensorField apply_tau_impl(const Ops& ops, const ScalarField& f) {
    return eta_times(f) - hessian_G(ops, f);
}

SymmetricTensorField tau_both_impl(const Ops& ops, const SymmetricTensorField& h) {
    const auto div = divergence_impl(ops, h);
    const auto ddh = divergence_impl(ops, div);
    std::vector<ScalarField> divs;
    for (int a = 0; a < h.space.n; ++a) divs.push_back(comp(div, a));
    auto out = h + hessian_G(ops, G_of(ops, ddh));
    for (int a = 0; a < h.space.n; ++a)
        for (int b = a; b < h.space.n; ++b)
            set(out, a, b, comp(out, a, b) - d_G(ops, a, divs[b]) - d_G(ops, b, divs[a]));
    return out;
}

void require_divergence_free(const Ops& ops, const SymmetricTensorField& h, double tol,
                             const char* who);

double divergence_residual_impl(const Ops& ops, const SymmetricTensorField& h) {
    double num = 0.0, scale = 0.0;
    for (int b = 0; b < h.space.n; ++b) {
        auto s = ScalarField::zeros(h.space);
        for (int a = 0; a < h.space.n; ++a) {
            const auto term = d(ops, a, comp(h, a, b), true);
            scale = std::max(scale, sup_norm(term));
            s = s + term;
        }
        num = std::max(num, sup_norm(s));
    }
    return scale > 0.0 ? num / scale : 0.0;
}

void require_divergence_free(const Ops& ops, const SymmetricTensorField& h, double tol,
                             const char* who) {
    const double r = divergence_residual_impl(ops, h);
    if (!(r <= tol)) {
        std::ostringstream os;
        os << who << ": input not divergence-free (residual " << r << ", tolerance " << tol << ")";
        throw DomainError(os.str());
    }
}

}  // namespace

template <int Rank>
Field<Rank> operator+(const Field<Rank>& a, const Field<Rank>& b) {
    check_same(a.space, b.space);
    Field<Rank> r = a;
    for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] += b.data[i];
    return r;
}

template <int Rank>
Field<Rank> operator-(const Field<Rank>& a, const Field<Rank>& b) {
    check_same(a.space, b.space);
    Field<Rank> r = a;
    for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] -= b.data[i];
    return r;
}

template <int Rank>
Field<Rank> operator*(double s, const Field<Rank>& a) {
    Field<Rank> r = a;
    for (auto& x : r.data) x *= s;
    return r;
}

template <int Rank>
double sup_norm(const Field<Rank>& f) {
    double s = 0.0;
    for (const auto& x : f.data) s = std::max(s, std::abs(x));
    return s;
}

template <int Rank>
double relative_diff(const Field<Rank>& a, const Field<Rank>& b) {
    const double s = std::max(sup_norm(a), sup_norm(b));
    return s > 0.0 ? sup_norm(a - b) / s : 0.0;
}

template <int Rank>
double past_leak(const Field<Rank>& f) {
    const double peak = sup_norm(f);
    if (peak == 0.0) return 0.0;
    double leak = 0.0;
    const auto& s = f.space;
    for (std::size_t m = 0; m < s.modes.size(); ++m)
        for (int c = 0; c < f.comps(); ++c) {
            const cplx* p = f.series(static_cast<int>(m), c);
            for (int j = 0; j < s.steps && s.t(j) < s.support_start - 1e-12 * s.dt; ++j)
                leak = std::max(leak, std::abs(p[j]));
        }
    return leak / peak;
}

template <int Rank>
double reality_defect(const Field<Rank>& f) {
    const double peak = sup_norm(f);
    if (peak == 0.0) return 0.0;
    double r = 0.0;
    const auto& s = f.space;
    for (std::size_t m = 0; m < s.modes.size(); ++m) {
        const int q = s.partner(static_cast<int>(m));
        if (q < 0) continue;
        for (int c = 0; c < f.comps(); ++c) {
            const cplx* a = f.series(static_cast<int>(m), c);
            const cplx* b = f.series(q, c);
            for (int j = 0; j < s.steps; ++j) r = std::max(r, std::abs(a[j] - std::conj(b[j])));
        }
    }
    return r / peak;
}

#define SEMISTAB_FIELD_OPS(R)                                                         \
    template struct Field<R>;                                                         \
    template Field<R> operator+(const Field<R>&, const Field<R>&);                    \
    template Field<R> operator-(const Field<R>&, const Field<R>&);                    \
    template Field<R> operator*(double, const Field<R>&);                             \
    template double sup_norm(const Field<R>&);                                        \
    template double relative_diff(const Field<R>&, const Field<R>&);                  \
    template double past_leak(const Field<R>&);                                       \
    template double reality_defect(const Field<R>&);
SEMISTAB_FIELD_OPS(0)
SEMISTAB_FIELD_OPS(1)
SEMISTAB_FIELD_OPS(2)
#undef SEMISTAB_FIELD_OPS

ScalarField retarded_scalar(const ScalarField& g) {
    g.space.validate();
    const Ops ops(g.space);
    return G_of(ops, g);
}

ScalarField box(const ScalarField& f) { return box_of(Ops(f.space), f); }

SymmetricTensorField box(const SymmetricTensorField& f) {
    return map_components(Ops(f.space), f, true);
}

ScalarField trace(const SymmetricTensorField& h) { return trace_impl(h); }

CovectorField divergence(const SymmetricTensorField& h) {
    return divergence_impl(Ops(h.space), h);
}

ScalarField divergence(const CovectorField& v) { return divergence_impl(Ops(v.space), v); }

double divergence_residual(const SymmetricTensorField& h) {
    return divergence_residual_impl(Ops(h.space), h);
}

SymmetricTensorField trace_reverse(const SymmetricTensorField& h) {
    return h - (2.0 / h.space.n) * eta_times(trace_impl(h));
}

SymmetricTensorField symmetrised_gradient(const CovectorField& X) {
    return sym_grad_impl(Ops(X.space), X);
}

CovectorField gradient(const ScalarField& f) { return gradient_impl(Ops(f.space), f); }

namespace {

// Also returns box w, evaluated as G of the source rather than by differencing w.
DecompositionResult decompose_impl(const Ops& ops, const SymmetricTensorField& h,
                                   ScalarField* box_w) {
    const int n = h.space.n;
    const double nn = n;
    const auto tr = trace_impl(h);
    const auto div = divergence_impl(ops, h);
    const auto ddh = divergence_impl(ops, div);
    DecompositionResult r;
    const auto src_w = (nn / (nn - 1.0)) * (ddh - (1.0 / nn) * box_of(ops, tr));
    const auto bw = G_of(ops, src_w);
    r.w = G_of(ops, bw);
    r.vT = CovectorField::zeros(h.space);
    std::vector<ScalarField> src;
    for (int b = 0; b < n; ++b) {
        src.push_back(comp(div, b) - (1.0 / nn) * d(ops, b, tr) -
                      ((nn - 1.0) / nn) * d_G(ops, b, src_w));
        set(r.vT, b, G_of(ops, src.back()));
    }
    r.hS = hessian_G(ops, bw) + (1.0 / nn) * eta_times(tr - bw);
    r.hV = SymmetricTensorField::zeros(h.space);
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) set(r.hV, a, b, d_G(ops, a, src[b]) + d_G(ops, b, src[a]));
    r.hTT = h - r.hS - r.hV;
    if (box_w) *box_w = bw;
    return r;
}

}  // namespace

DecompositionResult decompose(const SymmetricTensorField& h) {
    h.space.validate();
    return decompose_impl(Ops(h.space), h, nullptr);
}

GaugeFix de_donder_fix(const SymmetricTensorField& h) {
    const int n = h.space.n;
    if (n == 2) throw DomainError("de_donder_fix: undefined in two dimensions");
    h.space.validate();
    const Ops ops(h.space);
    const auto hbar = trace_reverse(h);
    const double nn = n;
    const auto div = divergence_impl(ops, hbar);
    const auto ddiv = (-1.0 / (2.0 - 4.0 / nn)) * divergence_impl(ops, div);
    GaugeFix g;
    g.X = CovectorField::zeros(h.space);
    std::vector<ScalarField> src;
    for (int b = 0; b < n; ++b) {
        src.push_back(-1.0 * (comp(div, b) + (1.0 - 4.0 / nn) * d_G(ops, b, ddiv)));
        set(g.X, b, G_of(ops, src.back()));
    }
    auto dX = SymmetricTensorField::zeros(h.space);
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) set(dX, a, b, d_G(ops, a, src[b]) + d_G(ops, b, src[a]));
    g.h = h + dX;
    return g;
}

CovectorField de_donder_generator_split(const SymmetricTensorField& h) {
    const int n = h.space.n;
    if (n == 2) throw DomainError("de_donder_generator_split: undefined in two dimensions");
    h.space.validate();
    const Ops ops(h.space);
    const auto hbar = trace_reverse(h);
    ScalarField box_w;
    const auto dec = decompose_impl(ops, hbar, &box_w);
    const double nn = n;
    const auto srcY = -1.0 * (((nn - 1.0) / (2.0 * (nn - 2.0))) * box_w +
                              (1.0 / (2.0 * (nn - 2.0))) * trace_impl(hbar));
    auto X = CovectorField::zeros(h.space);
    for (int a = 0; a < n; ++a) set(X, a, d_G(ops, a, srcY));
    return X - dec.vT;
}

SymmetricTensorField apply_tau(const ScalarField& f) { return apply_tau_impl(Ops(f.space), f); }

ScalarField tau_contract(const SymmetricTensorField& h) {
    return tau_contract_impl(Ops(h.space), h);
}

SymmetricTensorField tau_both(const SymmetricTensorField& h) {
    return tau_both_impl(Ops(h.space), h);
}

SymmetricTensorField apply_PS(const SymmetricTensorField& hbar, double div_tol) {
    const Ops ops(hbar.space);
    require_divergence_free(ops, hbar, div_tol, "apply_PS");
    return (1.0 / (hbar.space.n - 1.0)) * apply_tau_impl(ops, tau_contract_impl(ops, hbar));
}

SymmetricTensorField apply_PTT(const SymmetricTensorField& hbar, double div_tol) {
    const Ops ops(hbar.space);
    require_divergence_free(ops, hbar, div_tol, "apply_PTT");
    return tau_both_impl(ops, hbar) -
           (1.0 / (hbar.space.n - 1.0)) * apply_tau_impl(ops, tau_contract_impl(ops, hbar));
}

Curvature linearised_curvature(const SymmetricTensorField& hbar, double div_tol) {
    const Ops ops(hbar.space);
    require_divergence_free(ops, hbar, div_tol, "linearised_curvature");
    const auto hS = (1.0 / (hbar.space.n - 1.0)) *
                    apply_tau_impl(ops, tau_contract_impl(ops, hbar));
    const auto hTT = tau_both_impl(ops, hbar) - hS;
    Curvature c;
    c.G1 = -0.5 * map_components(ops, hbar, true);
    c.G1S = -0.5 * map_components(ops, hS, true);
    c.G1TT = -0.5 * map_components(ops, hTT, true);
    c.I1 = map_components(ops, map_components(ops, hTT, true), true);
    c.J1 = 6.0 * map_components(ops, c.G1S, true);
    return c;
}

namespace {

bool in_band(const std::vector<int>& idx, int band) {
    for (int x : idx)
        if (std::abs(x) > band) return false;
    return true;
}

// A few bump-windowed oscillations; the partner mode receives the complex conjugate.
template <int Rank>
Field<Rank> random_field(const Space& s, std::uint64_t seed, int band) {
    s.validate();
    auto f = Field<Rank>::zeros(s);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double t_end = s.t(s.steps - 1);
    const double start = s.support_start, span = t_end - start;
    for (std::size_t m = 0; m < s.modes.size(); ++m) {
        const int q = s.partner(static_cast<int>(m));
        if (!in_band(s.modes[m], band) || q < 0 || q < static_cast<int>(m)) continue;
        for (int c = 0; c < f.comps(); ++c) {
            const double a = u(rng), b = u(rng), om = 1.0 + u(rng), ph = kPi * u(rng);
            const double e = start + span * (0.45 + 0.25 * u(rng));
            cplx* p = f.series(static_cast<int>(m), c);
            cplx* pq = f.series(q, c);
            for (int j = 0; j < s.steps; ++j) {
                const double t = s.t(j);
                cplx v = bump(t, start, e) * cplx(a, b) * std::polar(1.0, om * t + ph);
                if (q == static_cast<int>(m)) v = v.real();
                p[j] = v;
                pq[j] = std::conj(v);
            }
        }
    }
    return f;
}

std::vector<double> unit(std::vector<double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    s = std::sqrt(s);
    for (double& x : v) x /= s;
    return v;
}

// Two orthonormal spatial vectors orthogonal to k (any two basis vectors when k = 0).
std::pair<std::vector<double>, std::vector<double>> transverse_pair(std::vector<double> k) {
    const std::size_t d = k.size();
    std::vector<std::vector<double>> basis;
    double k2 = 0.0;
    for (double x : k) k2 += x * x;
    if (k2 > 0.0) basis.push_back(unit(k));
    for (std::size_t i = 0; i < d && basis.size() < (k2 > 0.0 ? 3u : 2u); ++i) {
        std::vector<double> e(d, 0.0);
        e[i] = 1.0;
        for (const auto& b : basis) {
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += e[j] * b[j];
            for (std::size_t j = 0; j < d; ++j) e[j] -= dot * b[j];
        }
        double nrm = 0.0;
        for (double x : e) nrm += x * x;
        if (nrm > 1e-8) basis.push_back(unit(e));
    }
    const std::size_t off = k2 > 0.0 ? 1 : 0;
    return {basis[off], basis[off + 1]};
}

}  // namespace

SymmetricTensorField random_tensor(const Space& s, std::uint64_t seed, int band) {
    return random_field<2>(s, seed, band);
}

CovectorField random_covector(const Space& s, std::uint64_t seed, int band) {
    return random_field<1>(s, seed, band);
}

ScalarField random_scalar(const Space& s, std::uint64_t seed, int band) {
    return random_field<0>(s, seed, band);
}

CovectorField random_transverse(const Space& s, std::uint64_t seed, int band) {
    const Ops ops(s);
    const auto Z = random_covector(s, seed, band);
    const auto dz = divergence_impl(ops, Z);
    auto X = CovectorField::zeros(s);
    for (int a = 0; a < s.n; ++a) set(X, a, d_G(ops, a, dz));
    return Z - X;
}

SymmetricTensorField random_tt(const Space& s, std::uint64_t seed, int band) {
    if (s.n < 4) throw DomainError("random_tt: needs at least three spatial dimensions");
    const auto amp = random_field<1>(s, seed, band);
    auto h = SymmetricTensorField::zeros(s);
    const int n = s.n;
    for (std::size_t m = 0; m < s.modes.size(); ++m) {
        const int q = s.partner(static_cast<int>(m));
        if (q < 0 || q < static_cast<int>(m)) continue;
        const auto [e1, e2] = transverse_pair(s.k(static_cast<int>(m)));
        const cplx* f = amp.series(static_cast<int>(m), 0);
        const cplx* g = amp.series(static_cast<int>(m), 1);
        for (int i = 1; i < n; ++i)
            for (int j = i; j < n; ++j) {
                const double plus = e1[i - 1] * e1[j - 1] - e2[i - 1] * e2[j - 1];
                const double cross = e1[i - 1] * e2[j - 1] + e2[i - 1] * e1[j - 1];
                cplx* p = h.series(static_cast<int>(m), sym_index(n, i, j));
                cplx* pq = h.series(q, sym_index(n, i, j));
                for (int t = 0; t < s.steps; ++t) {
                    p[t] = plus * f[t] + cross * g[t];
                    pq[t] = std::conj(p[t]);
                }
            }
    }
    return h;
}

ParseError::ParseError(int line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

template <int Rank>
const char* kind_name() {
    if constexpr (Rank == 0) return "scalar";
    else if constexpr (Rank == 1) return "covector";
    else return "tensor";
}

struct LineReader {
    std::istream& is;
    int line = 0;

    std::istringstream next(const std::string& field) {
        std::string s;
        while (std::getline(is, s)) {
            ++line;
            if (!s.empty() && s[0] != '#') return std::istringstream(s);
        }
        throw ParseError(line + 1, "unexpected end of file, expected '" + field + "'");
    }

    // Reads "key values..." and checks the key.
    std::istringstream keyed(const std::string& key) {
        auto ss = next(key);
        std::string k;
        ss >> k;
        if (k != key) throw ParseError(line, "expected field '" + key + "', found '" + k + "'");
        return ss;
    }

    template <class T>
    T value(std::istringstream& ss, const std::string& field) {
        T v;
        if (!(ss >> v)) throw ParseError(line, "field '" + field + "': bad or missing value");
        return v;
    }

    void end(std::istringstream& ss, const std::string& field) {
        std::string rest;
        if (ss >> rest) throw ParseError(line, "field '" + field + "': trailing '" + rest + "'");
    }
};

}  // namespace

template <int Rank>
void write_field(std::ostream& os, const Field<Rank>& f) {
    const auto& s = f.space;
    const auto old = os.precision(17);
    os << "semistab-field 1\n";
    os << "kind " << kind_name<Rank>() << "\n";
    os << "n " << s.n << "\n";
    os << "ell " << s.ell << "\n";
    os << "time " << s.t0 << " " << s.dt << " " << s.steps << "\n";
    os << "support_start " << s.support_start << "\n";
    os << "modes " << s.modes.size() << "\n";
    for (const auto& m : s.modes) {
        os << "mode";
        for (int x : m) os << " " << x;
        os << "\n";
    }
    os << "data\n";
    for (std::size_t m = 0; m < s.modes.size(); ++m)
        for (int j = 0; j < s.steps; ++j) {
            os << m << " " << j;
            for (int c = 0; c < f.comps(); ++c) {
                const cplx v = f.series(static_cast<int>(m), c)[j];
                os << " " << v.real() << " " << v.imag();
            }
            os << "\n";
        }
    os.precision(old);
}

template <int Rank>
Field<Rank> read_field(std::istream& is) {
    LineReader r{is};
    {
        auto ss = r.keyed("semistab-field");
        if (r.value<int>(ss, "semistab-field") != 1)
            throw ParseError(r.line, "field 'semistab-field': unsupported version");
        r.end(ss, "semistab-field");
    }
    {
        auto ss = r.keyed("kind");
        const auto k = r.value<std::string>(ss, "kind");
        if (k != kind_name<Rank>())
            throw ParseError(r.line, "field 'kind': expected " + std::string(kind_name<Rank>()) +
                                         ", found " + k);
        r.end(ss, "kind");
    }
    Space s;
    {
        auto ss = r.keyed("n");
        s.n = r.value<int>(ss, "n");
        if (s.n < 2 || s.n > 16) throw ParseError(r.line, "field 'n': out of range");
        r.end(ss, "n");
    }
    {
        auto ss = r.keyed("ell");
        s.ell = r.value<double>(ss, "ell");
        if (!(s.ell > 0.0)) throw ParseError(r.line, "field 'ell': must be positive");
        r.end(ss, "ell");
    }
    {
        auto ss = r.keyed("time");
        s.t0 = r.value<double>(ss, "time");
        s.dt = r.value<double>(ss, "time");
        s.steps = r.value<int>(ss, "time");
        if (!(s.dt > 0.0) || s.steps < 5)
            throw ParseError(r.line, "field 'time': need dt > 0 and at least 5 steps");
        r.end(ss, "time");
    }
    {
        auto ss = r.keyed("support_start");
        s.support_start = r.value<double>(ss, "support_start");
        r.end(ss, "support_start");
    }
    int count = 0;
    {
        auto ss = r.keyed("modes");
        count = r.value<int>(ss, "modes");
        if (count < 1) throw ParseError(r.line, "field 'modes': must be positive");
        r.end(ss, "modes");
    }
    for (int i = 0; i < count; ++i) {
        auto ss = r.keyed("mode");
        std::vector<int> idx(s.n - 1);
        for (int& x : idx) x = r.value<int>(ss, "mode");
        r.end(ss, "mode");
        s.modes.push_back(std::move(idx));
    }
    {
        auto ss = r.keyed("data");
        r.end(ss, "data");
    }
    try {
        s.validate();
    } catch (const DomainError& e) {
        throw ParseError(r.line, std::string("header: ") + e.what());
    }
    auto f = Field<Rank>::zeros(s);
    for (int m = 0; m < count; ++m)
        for (int j = 0; j < s.steps; ++j) {
            auto ss = r.next("data");
            const int mm = r.value<int>(ss, "data");
            const int jj = r.value<int>(ss, "data");
            if (mm != m || jj != j)
                throw ParseError(r.line, "field 'data': expected mode " + std::to_string(m) +
                                             " time " + std::to_string(j));
            for (int c = 0; c < f.comps(); ++c) {
                const double re = r.value<double>(ss, "data");
                const double im = r.value<double>(ss, "data");
                f.series(m, c)[j] = cplx(re, im);
            }
            r.end(ss, "data");
        }
    return f;
}

template void write_field(std::ostream&, const Field<0>&);
template void write_field(std::ostream&, const Field<1>&);
template void write_field(std::ostream&, const Field<2>&);
template Field<0> read_field(std::istream&);
template Field<1> read_field(std::istream&);
template Field<2> read_field(std::istream&);

}  // namespace semistab::tensor
