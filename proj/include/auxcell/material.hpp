#pragma once

#include <array>

#include "auxcell/types.hpp"

namespace auxcell {

// Regularized neo-Hookean phase. Plane strain throughout: the in-plane 2x2
// deformation gradient is completed with F33 = 1, and J, I1 use the 3D
// completion.
struct HyperelasticPhase {
  double E0 = 0.0;
  double nu0 = 0.0;
  double omega = 0.0;  // physical density (mass/volume)

  double kappa0() const { return E0 / (3.0 * (1.0 - 2.0 * nu0)); }
  double mu0() const { return E0 / (2.0 * (1.0 + nu0)); }
};

struct InterpolationParams {
  double p_e = 3.0;   // void/solid penalization
  double p = 3.0;     // material-1/material-2 penalization
  double p_nu = 3.0;  // Poisson's ratio relaxation power
  double p_L = 4.0;   // linear-energy stiffness penalization
  double eps_nu = 0.4;
  double eps_E = 1e-8;
  double beta = 120.0;
  double c = 0.08;
  double dc = 0.05;
};

// Volumetric/isochoric split of one phase evaluated at an in-plane F:
//   psi_vol = kappa/2 (J-1)^2,  psi_iso = mu/2 (I1bar - 3),
//   I1bar = J^(-2/3) (tr(F^T F) + 1).
// P* = d psi*/dF and A* = dP*/dF are the in-plane blocks.
struct EnergyParts {
  double psi_vol = 0.0, psi_iso = 0.0;
  Mat2 P_vol = Mat2::Zero(), P_iso = Mat2::Zero();
  Mat4 A_vol = Mat4::Zero(), A_iso = Mat4::Zero();
};

// Throws NonPhysicalState if det F <= 0.
EnergyParts neo_hookean_parts(double kappa, double mu, const Mat2& F);

inline EnergyParts neo_hookean_parts(const HyperelasticPhase& ph, const Mat2& F) {
  return neo_hookean_parts(ph.kappa0(), ph.mu0(), F);
}

// E-nu interpolation of one solid phase (relaxed incompressibility):
//   E(r)  = r^p_e E0
//   nu(r) = [eps_nu + (1-eps_nu)(1-(1-r)^p_nu)] nu0
//   zeta_k = kappa(r)/kappa0,  zeta_m = mu(r)/mu0.
struct ENuInterp {
  double E = 0.0, nu = 0.0;
  double zeta_k = 0.0, zeta_m = 0.0;
  double dzeta_k = 0.0, dzeta_m = 0.0;  // d/drho1
};

ENuInterp e_nu_interpolation(double rho1, const InterpolationParams& ip,
                             const HyperelasticPhase& phase);

// Linear-energy kinematics blend, computed in the overflow-safe logistic
// form 1/(1 + exp(beta (c - rho1))).
double gamma_interp(double rho1, double beta, double c);
double dgamma_interp(double rho1, double beta, double c);

// Plane-strain isotropic moduli (Voigt [e11, e22, 2e12]) of the linear
// energy term: E(r) = [eps_E + (1-eps_E) r^p_L] E0, nu = 0.2 fixed.
Eigen::Matrix3d linear_elastic_moduli(double rho1, const InterpolationParams& ip, double E0);
Eigen::Matrix3d dlinear_elastic_moduli(double rho1, const InterpolationParams& ip, double E0);

// Void phase plus up to two solid phases. Single-material problems keep
// rho2 = 1 everywhere so that phase 2 never contributes.
struct PhaseSet {
  HyperelasticPhase voidPhase{1e-6, 0.2, 0.0};
  HyperelasticPhase mat1{100.0, 0.49, 0.0};
  HyperelasticPhase mat2{100.0, 0.49, 0.0};
  bool twoMaterial = false;

  // Young's modulus that feeds the linear energy term (the softer solid).
  double linearE0() const {
    return twoMaterial ? std::min(mat1.E0, mat2.E0) : mat1.E0;
  }
};

// Three-phase interpolated state at a given F (the F-bar corrected gradient):
//   psi = (1 - rho1^p_e)(psi_v) + rho2^p [z1k psiv_1 + z1m psii_1]
//       + (1-rho2)^p [z2k psiv_2 + z2m psii_2]
// Raw per-phase parts are retained for the constitutive sensitivities.
struct InterpolatedPoint {
  double psi = 0.0;
  Mat2 P = Mat2::Zero();   // P^b
  Mat4 A = Mat4::Zero();   // dP^b/dF^b
  // d/drho at fixed F^b:
  Mat2 dP_drho1 = Mat2::Zero();
  Mat2 dP_drho2 = Mat2::Zero();
};

InterpolatedPoint interpolate_point(double rho1, double rho2, const InterpolationParams& ip,
                                    const PhaseSet& phases, const Mat2& F,
                                    bool needDerivatives = false);

}  // namespace auxcell
