#include "auxcell/sensitivity.hpp"

#include <cmath>

#include "auxcell/errors.hpp"
#include "auxcell/parallel.hpp"

namespace auxcell {

namespace {

Vec4 loading_direction(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return Vec4(c * c, s * c, s * c, s * s);
}

ElemVec gather(const VecX& u, const ElementKinematics& kin) {
  ElemVec ue;
  for (int a = 0; a < 4; ++a) ue.segment<2>(2 * a) = u.segment<2>(2 * kin.nodes[a]);
  return ue;
}

}  // namespace

AdjointGradients adjoint_path(const FeSystem& sys, const LoadPathRecord& record,
                              const VecX& rho1, const VecX& rho2, bool wantRho2) {
  const int nel = sys.mesh().n_ele();
  const double V = sys.mesh().V;
  const double theta = record.loadCase.theta;
  const double nuT = record.loadCase.nuTarget;
  const InterpolationParams& ip = record.ipUsed;
  const Vec4 dir = loading_direction(theta);

  AdjointGradients out;
  out.df0_drho1 = VecX::Zero(nel);
  if (wantRho2) out.df0_drho2 = VecX::Zero(nel);

  // h = (dH/duhat)^T: only the mu block is populated, (1/V) L_M dir.
  VecX h = VecX::Zero(sys.size());
  h.tail(2 * sys.n_pairs()) = sys.LM() * dir / V;

  VecX g1 = VecX::Zero(nel), g2 = VecX::Zero(nel);
  for (const PathStep& step : record.steps) {
    if (step.sol.uhat.size() != sys.size())
      throw ConfigError("load path record does not match this system");

    const double dfdv = 2.0 * (step.lambda1 + nuT * step.lambda2 - nuT - 1.0);
    if (dfdv == 0.0) continue;

    SpMat J;
    sys.assemble(step.sol.uhat, step.Fbar, rho1, rho2, ip, true, nullptr, &J);
    FactoredJacobian fac;
    sys.factor(J, fac);

    const VecX w = fac.solve_transpose(h);
    const double schur = V * w.dot(h);
    if (schur == 0.0) throw SolveFailure("singular bordered adjoint system");
    const double eta = dfdv / schur;
    const VecX gammaAdj = -eta * w;

    const VecX u = step.sol.uhat.head(sys.N());
    par_for(nel, sys.threads(), [&](std::int64_t e) {
      const auto& kin = sys.kinematics()[e];
      const ElemVec ue = gather(u, kin);
      const auto d =
          element_dforce_drho(kin, ue, rho1[e], rho2[e], ip, sys.phases(), wantRho2);
      const ElemVec ga = gather(gammaAdj, kin);
      g1[e] = ga.dot(d.dF_drho1);
      if (wantRho2) g2[e] = ga.dot(d.dF_drho2);
    });
    out.df0_drho1 += g1;
    if (wantRho2) out.df0_drho2 += g2;
  }
  return out;
}

StiffnessSensitivities stiffness_sensitivities(const FeSystem& sys, const VecX& rho1,
                                               const VecX& rho2,
                                               const InterpolationParams& stiffnessParams,
                                               double theta, double kbar, bool wantRho2) {
  const int nel = sys.mesh().n_ele();
  const double V = sys.mesh().V;

  const SpMat J0 = sys.initial_jacobian(rho1, rho2, stiffnessParams);
  FactoredJacobian fac;
  sys.factor(J0, fac);

  const Mat4 A0 = sys.homogenized_moduli(fac);
  const Mat4 QM = rotation_matrix_4(theta);
  StiffnessSensitivities out;
  out.A0Q = QM.transpose() * A0 * QM;
  out.f1 = 1.0 - out.A0Q(0, 0) / kbar;
  out.f2 = 1.0 - out.A0Q(3, 3) / kbar;

  MatX YR(sys.size(), 4), YL(sys.size(), 4);
  for (int i = 0; i < 4; ++i) {
    const VecX col = sys.lhat_column(i);
    YR.col(i) = fac.solve(col);
    YL.col(i) = fac.solve_transpose(col);
  }

  out.df1_drho1 = VecX::Zero(nel);
  out.df2_drho1 = VecX::Zero(nel);
  if (wantRho2) {
    out.df1_drho2 = VecX::Zero(nel);
    out.df2_drho2 = VecX::Zero(nel);
  }

  par_for(nel, sys.threads(), [&](std::int64_t e) {
    const auto& kin = sys.kinematics()[e];
    Eigen::Matrix<double, 8, 4> YRe, YLe;
    for (int a = 0; a < 4; ++a)
      for (int d = 0; d < 2; ++d) {
        YRe.row(2 * a + d) = YR.row(2 * kin.nodes[a] + d);
        YLe.row(2 * a + d) = YL.row(2 * kin.nodes[a] + d);
      }
    {
      const ElemMat dk =
          element_dstiffness_drho1_initial(kin, rho1[e], rho2[e], stiffnessParams,
                                           sys.phases());
      const Mat4 dA0 = (YLe.transpose() * dk * YRe) / V;
      const Mat4 dA0Q = QM.transpose() * dA0 * QM;
      out.df1_drho1[e] = -dA0Q(0, 0) / kbar;
      out.df2_drho1[e] = -dA0Q(3, 3) / kbar;
    }
    if (wantRho2) {
      const ElemMat dk =
          element_dstiffness_drho2_initial(kin, rho1[e], rho2[e], stiffnessParams,
                                           sys.phases());
      const Mat4 dA0 = (YLe.transpose() * dk * YRe) / V;
      const Mat4 dA0Q = QM.transpose() * dA0 * QM;
      out.df1_drho2[e] = -dA0Q(0, 0) / kbar;
      out.df2_drho2[e] = -dA0Q(3, 3) / kbar;
    }
  });
  return out;
}

}  // namespace auxcell
