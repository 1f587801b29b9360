#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "semistab/common.hpp"

namespace semistab::tensor {

// Causal lower-triangular Toeplitz operator on a uniform time series. These form a
// commutative algebra, so every operator built from them commutes with every other.
class Causal {
public:
    Causal() = default;
    explicit Causal(std::vector<double> coeffs) : c_(std::move(coeffs)) {}

    static Causal identity(int n);
    // Backward-difference derivative of order 4 assuming zero history before t0.
    static Causal derivative(int n, double dt);

    int size() const { return static_cast<int>(c_.size()); }
    const std::vector<double>& coeffs() const { return c_; }

    Causal operator*(const Causal& o) const;
    Causal operator+(const Causal& o) const;
    Causal operator-(const Causal& o) const;
    Causal operator*(double s) const;
    Causal inverse() const;

    std::vector<cplx> apply(const std::vector<cplx>& f) const;

private:
    std::vector<double> c_;
};

struct Space {
    int n = 4;
    double ell = 2.0 * kPi;
    double t0 = 0.0, dt = 0.05;
    int steps = 256;
    double support_start = 0.0;
    // Integer wave-vector indices, n - 1 per mode; k = (2 pi / ell) index.
    std::vector<std::vector<int>> modes;

    double t(int j) const { return t0 + j * dt; }
    std::vector<double> k(int mode) const;
    double k2(int mode) const;
    // Index of the mode with wave-vector -k, or -1.
    int partner(int mode) const;
    void validate() const;

    // All index vectors in {-N/2, ..., N/2 - 1}^(n-1), lexicographic.
    static Space periodic_box(int n, int per_axis, double ell, double t0, double dt, int steps,
                              double support_start);
};

// Components per mode: 1 (scalar), n (covector), n(n+1)/2 (symmetric tensor).
template <int Rank>
struct Field {
    Space space;
    // Layout [mode][component][time].
    std::vector<cplx> data;

    static Field zeros(const Space& s);

    int comps() const;
    std::size_t stride() const { return static_cast<std::size_t>(space.steps); }
    cplx* series(int mode, int comp) {
        return data.data() + (static_cast<std::size_t>(mode) * comps() + comp) * stride();
    }
    const cplx* series(int mode, int comp) const {
        return data.data() + (static_cast<std::size_t>(mode) * comps() + comp) * stride();
    }
};

using ScalarField = Field<0>;
using CovectorField = Field<1>;
using SymmetricTensorField = Field<2>;

// Packed index of (a, b) in a symmetric n x n array, row-major upper triangle.
int sym_index(int n, int a, int b);

template <int Rank>
Field<Rank> operator+(const Field<Rank>& a, const Field<Rank>& b);
template <int Rank>
Field<Rank> operator-(const Field<Rank>& a, const Field<Rank>& b);
template <int Rank>
Field<Rank> operator*(double s, const Field<Rank>& a);
template <int Rank>
double sup_norm(const Field<Rank>& f);
template <int Rank>
double relative_diff(const Field<Rank>& a, const Field<Rank>& b);

// max |f(t)| over t < support_start relative to max |f|.
template <int Rank>
double past_leak(const Field<Rank>& f);
// max |f(-k) - conj f(k)| relative to max |f| over modes whose partner is present.
template <int Rank>
double reality_defect(const Field<Rank>& f);

// box u = g per mode with box = -d_t^2 - |k|^2 discretised by the causal derivative.
ScalarField retarded_scalar(const ScalarField& g);
ScalarField box(const ScalarField& f);
SymmetricTensorField box(const SymmetricTensorField& f);

ScalarField trace(const SymmetricTensorField& h);
// d^a h_ab.
CovectorField divergence(const SymmetricTensorField& h);
ScalarField divergence(const CovectorField& v);
// sup |d^a h_ab| relative to the largest single term of the contraction.
double divergence_residual(const SymmetricTensorField& h);

// h - (2/n) eta h; at n = 4 the familiar h - eta h / 2.
SymmetricTensorField trace_reverse(const SymmetricTensorField& h);
// d_a X_b + d_b X_a.
SymmetricTensorField symmetrised_gradient(const CovectorField& X);
CovectorField gradient(const ScalarField& f);

struct DecompositionResult {
    ScalarField w;
    CovectorField vT;
    SymmetricTensorField hS, hV, hTT;
};

DecompositionResult decompose(const SymmetricTensorField& h);

struct GaugeFix {
    SymmetricTensorField h;
    CovectorField X;
};

// The unique past-compact X making the trace reversal of h + 2 d_(a X_b) divergence-free.
GaugeFix de_donder_fix(const SymmetricTensorField& h);
// The same generator assembled as X^T = -vbar^T, X = X^T + d Y from the decomposition of hbar.
CovectorField de_donder_generator_split(const SymmetricTensorField& h);

// eta_ab f - d_a d_b G(f).
SymmetricTensorField apply_tau(const ScalarField& f);
// tau^{cd} h_cd.
ScalarField tau_contract(const SymmetricTensorField& h);
// tau_a^c tau_b^d h_cd.
SymmetricTensorField tau_both(const SymmetricTensorField& h);

inline constexpr double kDivergenceTol = 1e-8;

SymmetricTensorField apply_PS(const SymmetricTensorField& hbar, double div_tol = kDivergenceTol);
SymmetricTensorField apply_PTT(const SymmetricTensorField& hbar, double div_tol = kDivergenceTol);

struct Curvature {
    SymmetricTensorField G1, G1S, G1TT, I1, J1;
};

Curvature linearised_curvature(const SymmetricTensorField& hbar,
                               double div_tol = kDivergenceTol);

// Smooth past-compact samples: a random combination of bump-windowed oscillations on modes
// with every |index| <= band, conjugate-symmetric so the position-space field is real.
SymmetricTensorField random_tensor(const Space& s, std::uint64_t seed, int band = 2);
CovectorField random_covector(const Space& s, std::uint64_t seed, int band = 2);
ScalarField random_scalar(const Space& s, std::uint64_t seed, int band = 2);
// Transverse part of a random covector.
CovectorField random_transverse(const Space& s, std::uint64_t seed, int band = 2);
// Spatial TT polarisations e1 e1 - e2 e2 and e1 e2 + e2 e1 with random smooth amplitudes.
SymmetricTensorField random_tt(const Space& s, std::uint64_t seed, int band = 2);

// Columnar text format: header lines, one "mode" line per wave-vector, then "data" and one
// line per (mode, time) with the packed components as re/im pairs.
template <int Rank>
void write_field(std::ostream& os, const Field<Rank>& f);
template <int Rank>
Field<Rank> read_field(std::istream& is);

// Raised by read_field; the message names the line and offending field.
class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& what);
    int line() const { return line_; }

private:
    int line_;
};

}  // namespace semistab::tensor
