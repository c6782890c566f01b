#pragma once

#include "auxcell/material.hpp"
#include "auxcell/mesh.hpp"
#include "auxcell/types.hpp"

namespace auxcell {

using ElemVec = Eigen::Matrix<double, 8, 1>;
using ElemMat = Eigen::Matrix<double, 8, 8>;
using BMat = Eigen::Matrix<double, 4, 8>;    // [du1/dX1, du2/dX1, du1/dX2, du2/dX2]
using BLMat = Eigen::Matrix<double, 3, 8>;   // Voigt [e11, e22, 2e12]

// Precomputed shape-function data of one 4-node quad: gradient matrices at
// the 2x2 Gauss points and at the centroid (for the F-bar correction).
struct ElementKinematics {
  std::array<int, 4> nodes{};
  std::array<BMat, 4> B{};
  std::array<BLMat, 4> BL{};
  std::array<double, 4> w{};
  BMat B0 = BMat::Zero();
  double volume = 0.0;
};

ElementKinematics element_kinematics(const RveMesh& mesh, int e);

// All elements of a mesh, built once and shared read-only.
std::vector<ElementKinematics> build_kinematics(const RveMesh& mesh);

struct ElementOptions {
  bool tangent = true;
  // Linear-energy interpolation: F = I + gamma grad(u) plus the
  // (1-gamma^2) small-strain term. Off for the initial-stiffness Jacobian.
  bool linearInterp = true;
};

struct ElementResult {
  ElemVec f = ElemVec::Zero();
  ElemMat k = ElemMat::Zero();
};

// Internal force and exact consistent tangent of the F-bar element with
// linear-energy interpolation. Throws NonPhysicalState on det F <= 0.
ElementResult element_force(const ElementKinematics& kin, const ElemVec& ue,
                            double rho1, double rho2, const InterpolationParams& ip,
                            const PhaseSet& phases, const ElementOptions& opt);

// Columns of dF_int^e/drho1 and dF_int^e/drho2 at a frozen state.
struct ElementRhoDerivatives {
  ElemVec dF_drho1 = ElemVec::Zero();
  ElemVec dF_drho2 = ElemVec::Zero();
};

ElementRhoDerivatives element_dforce_drho(const ElementKinematics& kin, const ElemVec& ue,
                                          double rho1, double rho2,
                                          const InterpolationParams& ip,
                                          const PhaseSet& phases, bool wantRho2);

// d k0^e / drho1 of the initial-stiffness element matrix (u = 0, gamma = 1,
// no linear-energy term): interpolated moduli derivative only.
ElemMat element_dstiffness_drho1_initial(const ElementKinematics& kin, double rho1,
                                         double rho2, const InterpolationParams& ip,
                                         const PhaseSet& phases);
ElemMat element_dstiffness_drho2_initial(const ElementKinematics& kin, double rho1,
                                         double rho2, const InterpolationParams& ip,
                                         const PhaseSet& phases);

// Symmetric moduli form used by the Bloch/rank-one stability operator:
//   k = sum_s [gamma^2 B^T A^b B + (1-gamma^2) B_L^T C B_L] w_s
// evaluated at the element's F-bar state.
ElemMat element_stability_matrix(const ElementKinematics& kin, const ElemVec& ue,
                                 double rho1, double rho2, const InterpolationParams& ip,
                                 const PhaseSet& phases);

// Gram matrix of the displacement gradient, same quadrature as the
// stiffness: g = sum_s B^T B w_s.
ElemMat element_gradient_gram(const ElementKinematics& kin);

// integral over the element of the effective stress
// gamma P + (1-gamma^2) (C:eps) (the work conjugate of grad u).
Mat2 element_effective_stress_integral(const ElementKinematics& kin, const ElemVec& ue,
                                       double rho1, double rho2,
                                       const InterpolationParams& ip, const PhaseSet& phases);

// integral of the raw displacement gradient (deformation-average check).
Mat2 element_gradu_integral(const ElementKinematics& kin, const ElemVec& ue);

}  // namespace auxcell
