#pragma once

#include "auxcell/fea.hpp"
#include "auxcell/homogenize.hpp"

namespace auxcell {

struct AdjointGradients {
  VecX df0_drho1;
  VecX df0_drho2;  // zero-sized unless requested
};

// Path-dependent adjoint of f0 = sum_k (l1^k + nuT l2^k - nuT - 1)^2.
// Each step is independent: the bordered system (tangent Jacobian bordered
// by dR/dlambda1 and dH/duhat) is solved per stored state via one
// transpose solve plus a scalar Schur complement, and the element-local
// dR/drho columns accumulate the gradient.
AdjointGradients adjoint_path(const FeSystem& sys, const LoadPathRecord& record,
                              const VecX& rho1, const VecX& rho2, bool wantRho2);

struct StiffnessSensitivities {
  double f1 = 0.0, f2 = 0.0;
  Mat4 A0Q = Mat4::Zero();
  VecX df1_drho1, df2_drho1;
  VecX df1_drho2, df2_drho2;  // zero-sized unless requested
};

// Initial-stiffness constraints f1 = 1 - [A0^Q]_11/kbar, f2 = 1 -
// [A0^Q]_44/kbar and their direct (adjoint-style) density sensitivities,
// computed from Y = J0^-1 Lhat with d[A0]/drho^e = (1/V) YL^T dJ0 YR.
StiffnessSensitivities stiffness_sensitivities(const FeSystem& sys, const VecX& rho1,
                                               const VecX& rho2,
                                               const InterpolationParams& stiffnessParams,
                                               double theta, double kbar, bool wantRho2);

}  // namespace auxcell
