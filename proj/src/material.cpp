#include "auxcell/material.hpp"

#include <cmath>

#include "auxcell/errors.hpp"

namespace auxcell {

namespace {
inline int idx(int i, int j) { return i + 2 * j; }  // column-major [11,21,12,22]
}

EnergyParts neo_hookean_parts(double kappa, double mu, const Mat2& F) {
  const double J = F.determinant();
  if (!(J > 0.0)) throw NonPhysicalState("det F <= 0 at quadrature point");

  const Mat2 Fi = F.inverse();
  const Mat2 Fit = Fi.transpose();
  const double I1 = F.squaredNorm() + 1.0;  // tr(F^T F) + F33^2, F33 = 1
  const double Jm23 = std::pow(J, -2.0 / 3.0);

  EnergyParts out;
  out.psi_vol = 0.5 * kappa * (J - 1.0) * (J - 1.0);
  out.psi_iso = 0.5 * mu * (Jm23 * I1 - 3.0);
  out.P_vol = kappa * (J - 1.0) * J * Fit;
  out.P_iso = mu * Jm23 * (F - (I1 / 3.0) * Fit);

  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          const double vol = kappa * J *
              ((2.0 * J - 1.0) * Fi(j, i) * Fi(l, k) - (J - 1.0) * Fi(j, k) * Fi(l, i));
          const double iso = mu * Jm23 *
              (-(2.0 / 3.0) * Fi(l, k) * (F(i, j) - (I1 / 3.0) * Fi(j, i)) +
               double(i == k && j == l) - (2.0 / 3.0) * F(k, l) * Fi(j, i) +
               (I1 / 3.0) * Fi(j, k) * Fi(l, i));
          out.A_vol(idx(i, j), idx(k, l)) = vol;
          out.A_iso(idx(i, j), idx(k, l)) = iso;
        }
  return out;
}

ENuInterp e_nu_interpolation(double rho1, const InterpolationParams& ip,
                             const HyperelasticPhase& phase) {
  ENuInterp r;
  r.E = std::pow(rho1, ip.p_e) * phase.E0;
  const double omr = 1.0 - rho1;
  r.nu = (ip.eps_nu + (1.0 - ip.eps_nu) * (1.0 - std::pow(omr, ip.p_nu))) * phase.nu0;

  const double kap = r.E / (3.0 * (1.0 - 2.0 * r.nu));
  const double mu = r.E / (2.0 * (1.0 + r.nu));
  r.zeta_k = kap / phase.kappa0();
  r.zeta_m = mu / phase.mu0();

  const double dE = ip.p_e * std::pow(rho1, ip.p_e - 1.0) * phase.E0;
  const double dnu = (1.0 - ip.eps_nu) * ip.p_nu * std::pow(omr, ip.p_nu - 1.0) * phase.nu0;
  const double dkap =
      dE / (3.0 * (1.0 - 2.0 * r.nu)) + r.E * 2.0 * dnu / (3.0 * std::pow(1.0 - 2.0 * r.nu, 2));
  const double dmu = dE / (2.0 * (1.0 + r.nu)) - r.E * dnu / (2.0 * std::pow(1.0 + r.nu, 2));
  r.dzeta_k = dkap / phase.kappa0();
  r.dzeta_m = dmu / phase.mu0();
  return r;
}

double gamma_interp(double rho1, double beta, double c) {
  return 1.0 / (1.0 + std::exp(beta * (c - rho1)));
}

double dgamma_interp(double rho1, double beta, double c) {
  const double g = gamma_interp(rho1, beta, c);
  return beta * g * (1.0 - g);
}

Eigen::Matrix3d linear_elastic_moduli(double rho1, const InterpolationParams& ip, double E0) {
  const double E = (ip.eps_E + (1.0 - ip.eps_E) * std::pow(rho1, ip.p_L)) * E0;
  const double nu = 0.2;
  const double f = E / ((1.0 + nu) * (1.0 - 2.0 * nu));
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
  C(0, 0) = C(1, 1) = f * (1.0 - nu);
  C(0, 1) = C(1, 0) = f * nu;
  C(2, 2) = f * (1.0 - 2.0 * nu) / 2.0;
  return C;
}

Eigen::Matrix3d dlinear_elastic_moduli(double rho1, const InterpolationParams& ip, double E0) {
  const double dE = (1.0 - ip.eps_E) * ip.p_L * std::pow(rho1, ip.p_L - 1.0) * E0;
  const double nu = 0.2;
  const double f = dE / ((1.0 + nu) * (1.0 - 2.0 * nu));
  Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
  C(0, 0) = C(1, 1) = f * (1.0 - nu);
  C(0, 1) = C(1, 0) = f * nu;
  C(2, 2) = f * (1.0 - 2.0 * nu) / 2.0;
  return C;
}

InterpolatedPoint interpolate_point(double rho1, double rho2, const InterpolationParams& ip,
                                    const PhaseSet& phases, const Mat2& F,
                                    bool needDerivatives) {
  const EnergyParts v = neo_hookean_parts(phases.voidPhase, F);
  const EnergyParts s1 = neo_hookean_parts(phases.mat1, F);
  const ENuInterp z1 = e_nu_interpolation(rho1, ip, phases.mat1);

  const double wv = 1.0 - std::pow(rho1, ip.p_e);
  const double w1 = std::pow(rho2, ip.p);
  const double w2 = std::pow(1.0 - rho2, ip.p);

  InterpolatedPoint out;
  out.psi = wv * (v.psi_vol + v.psi_iso) + w1 * (z1.zeta_k * s1.psi_vol + z1.zeta_m * s1.psi_iso);
  out.P = wv * (v.P_vol + v.P_iso) + w1 * (z1.zeta_k * s1.P_vol + z1.zeta_m * s1.P_iso);
  out.A = wv * (v.A_vol + v.A_iso) + w1 * (z1.zeta_k * s1.A_vol + z1.zeta_m * s1.A_iso);

  if (needDerivatives) {
    const double dwv = -ip.p_e * std::pow(rho1, ip.p_e - 1.0);
    out.dP_drho1 = dwv * (v.P_vol + v.P_iso) +
                   w1 * (z1.dzeta_k * s1.P_vol + z1.dzeta_m * s1.P_iso);
    out.dP_drho2 =
        ip.p * std::pow(rho2, ip.p - 1.0) * (z1.zeta_k * s1.P_vol + z1.zeta_m * s1.P_iso);
  }

  if (phases.twoMaterial) {
    const EnergyParts s2 = neo_hookean_parts(phases.mat2, F);
    const ENuInterp z2 = e_nu_interpolation(rho1, ip, phases.mat2);
    out.psi += w2 * (z2.zeta_k * s2.psi_vol + z2.zeta_m * s2.psi_iso);
    out.P += w2 * (z2.zeta_k * s2.P_vol + z2.zeta_m * s2.P_iso);
    out.A += w2 * (z2.zeta_k * s2.A_vol + z2.zeta_m * s2.A_iso);
    if (needDerivatives) {
      out.dP_drho1 += w2 * (z2.dzeta_k * s2.P_vol + z2.dzeta_m * s2.P_iso);
      out.dP_drho2 -= ip.p * std::pow(1.0 - rho2, ip.p - 1.0) *
                      (z2.zeta_k * s2.P_vol + z2.zeta_m * s2.P_iso);
    }
  }
  return out;
}

}  // namespace auxcell
