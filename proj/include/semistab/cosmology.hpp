#pragma once

#include <optional>
#include <string>

#include "semistab/spectral.hpp"

namespace semistab {

struct RenormalisationConstants {
    double alpha1 = 0.0, d1 = 0.0, c1 = 0.0;
    double alpha1_S = 0.0, alpha1_TT = 0.0;
    double alpha2_S = 0.0, alpha2_TT = 0.0;
    double alpha3_S = 0.0, alpha4_TT = 0.0;
};

// Reduced Planck mass in eV (external constant).
inline constexpr double kReducedPlanckMassEV = 2.435e27;

struct CosmologyInputs {
    double Omega_Lambda = 0.685;
    // In units of M_P^2.
    double Lambda = 7.15e-121;
    double M_P = kReducedPlanckMassEV;

    void validate() const;
};

struct BackgroundConstants {
    double alpha1 = 0.0, d1 = 0.0, c1 = 0.0;
};

BackgroundConstants background_constants(const PhysicalParams& p);

struct LinearConstants {
    double alpha1_S = 0.0, alpha1_TT = 0.0;
};

LinearConstants fixed_linear_constants();

RenormalisationConstants renormalisation_constants(const PhysicalParams& p, double alpha3_S = 0.0,
                                                   double alpha4_TT = 0.0);

inline constexpr double kHierarchyThreshold = 1e-3;

struct RootEstimate {
    double gamma_tilde = 0.0;
    // |b2 gamma~| / |b1| and |gamma~ (a - gamma~)^2 J(gamma~)| / |b1 gamma~| when coefficients
    // are supplied.
    std::optional<double> b2_ratio, J_ratio;
    bool hierarchy_ok = true;
    std::string warning;
};

// gamma~ = -b0/b1 = -16 pi G alpha1_S m^4 with alpha1_S = 1/(64 pi^2).
RootEstimate unstable_root_estimate(const PhysicalParams& p,
                                    std::optional<PrototypeCoefficients> coeffs = std::nullopt,
                                    double threshold = kHierarchyThreshold);

struct HubbleLambda {
    double H = 0.0;
    // Lambda_pred / M_P^2 with M_P^2 = 1/(8 pi G).
    double Lambda_pred = 0.0;
};

HubbleLambda hubble_and_lambda(const PhysicalParams& p, const CosmologyInputs& in);

// m = M_P (Lambda / (6 Omega_Lambda alpha1_S))^(1/4), in eV.
double invert_mass(const CosmologyInputs& in);

// Parameters in eV units with G = 1/(8 pi M_P^2).
PhysicalParams planck_params(double m_eV, const CosmologyInputs& in);

}  // namespace semistab
