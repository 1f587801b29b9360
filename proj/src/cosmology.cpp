#include "semistab/cosmology.hpp"

#include <cmath>
#include <sstream>

namespace semistab {

void CosmologyInputs::validate() const {
    if (!(Omega_Lambda > 0.0 && Omega_Lambda < 1.0))
        throw DomainError("cosmology: Omega_Lambda must lie in (0, 1)");
    if (!(Lambda > 0.0) || !std::isfinite(Lambda)) throw DomainError("cosmology: Lambda must be positive");
    if (!(M_P > 0.0) || !std::isfinite(M_P)) throw DomainError("cosmology: M_P must be positive");
}

BackgroundConstants background_constants(const PhysicalParams& p) {
    if (!(p.m > 0.0) || !(p.mu > 0.0)) throw DomainError("background_constants: need m, mu > 0");
    const double L = 2.0 * kEulerGamma + std::log(p.m * p.m / (2.0 * p.mu * p.mu));
    const double s = 1.0 / (64.0 * kPi * kPi);
    return {s * (-1.5 + L), -4.0 * s * (-1.0 + L), -s * (-2.5 + L)};
}

LinearConstants fixed_linear_constants() { return {1.0 / (64.0 * kPi * kPi), 0.0}; }

RenormalisationConstants renormalisation_constants(const PhysicalParams& p, double alpha3_S,
                                                   double alpha4_TT) {
    const auto b = background_constants(p);
    const auto l = fixed_linear_constants();
    RenormalisationConstants r;
    r.alpha1 = b.alpha1;
    r.d1 = b.d1;
    r.c1 = b.c1;
    r.alpha1_S = l.alpha1_S;
    r.alpha1_TT = l.alpha1_TT;
    r.alpha3_S = alpha3_S;
    r.alpha4_TT = alpha4_TT;
    return r;
}

RootEstimate unstable_root_estimate(const PhysicalParams& p,
                                    std::optional<PrototypeCoefficients> coeffs,
                                    double threshold) {
    if (!(p.m > 0.0) || !(p.G > 0.0)) throw DomainError("unstable_root_estimate: need m, G > 0");
    RootEstimate r;
    r.gamma_tilde = -16.0 * kPi * p.G * fixed_linear_constants().alpha1_S * std::pow(p.m, 4);
    if (!coeffs) return r;
    const auto& k = *coeffs;
    const double g = r.gamma_tilde;
    if (k.b1 == 0.0) throw DomainError("unstable_root_estimate: b1 = 0");
    r.b2_ratio = std::abs(k.b2 * g) / std::abs(k.b1);
    const cplx J = stieltjes_J(cplx(g, 0.0), p.m);
    r.J_ratio = std::abs(g * (k.a1 - g) * (k.a2 - g) * J) / std::abs(k.b1 * g);
    r.hierarchy_ok = *r.b2_ratio < threshold && *r.J_ratio < threshold;
    if (!r.hierarchy_ok) {
        std::ostringstream os;
        os << "hierarchy b1 >> b0, b2 not satisfied: |b2 g|/|b1| = " << *r.b2_ratio
           << ", |J term|/|b1 g| = " << *r.J_ratio << " (threshold " << threshold << ")";
        r.warning = os.str();
    }
    return r;
}

HubbleLambda hubble_and_lambda(const PhysicalParams& p, const CosmologyInputs& in) {
    in.validate();
    const double g = unstable_root_estimate(p).gamma_tilde;
    if (!(g < 0.0)) throw DomainError("hubble_and_lambda: gamma~ must be negative");
    HubbleLambda h;
    h.H = std::sqrt(-g);
    h.Lambda_pred = 3.0 * in.Omega_Lambda * h.H * h.H * (8.0 * kPi * p.G);
    return h;
}

double invert_mass(const CosmologyInputs& in) {
    in.validate();
    const double a = fixed_linear_constants().alpha1_S;
    return in.M_P * std::pow(in.Lambda / (6.0 * in.Omega_Lambda * a), 0.25);
}

PhysicalParams planck_params(double m_eV, const CosmologyInputs& in) {
    PhysicalParams p;
    p.m = m_eV;
    p.G = 1.0 / (8.0 * kPi * in.M_P * in.M_P);
    p.mu = m_eV;
    return p;
}

}  // namespace semistab
