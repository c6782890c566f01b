#include "auxcell/element.hpp"

#include <cmath>

#include "auxcell/errors.hpp"

namespace auxcell {

namespace {

constexpr double kGaussAbscissa = 0.57735026918962576451;  // 1/sqrt(3)

struct ShapeDerivs {
  Eigen::Matrix<double, 4, 2> dNdX;
  double detJ;
};

ShapeDerivs shape_derivs(const std::array<Vec2, 4>& Xe, double xi, double eta) {
  static const double xs[4] = {-1, 1, 1, -1};
  static const double es[4] = {-1, -1, 1, 1};
  Eigen::Matrix<double, 4, 2> dNdXi;
  for (int a = 0; a < 4; ++a) {
    dNdXi(a, 0) = 0.25 * xs[a] * (1.0 + es[a] * eta);
    dNdXi(a, 1) = 0.25 * es[a] * (1.0 + xs[a] * xi);
  }
  Mat2 J = Mat2::Zero();
  for (int a = 0; a < 4; ++a) J += Xe[a] * dNdXi.row(a);
  ShapeDerivs out;
  out.detJ = J.determinant();
  out.dNdX = dNdXi * J.inverse();
  return out;
}

void fill_B(const Eigen::Matrix<double, 4, 2>& dNdX, BMat& B, BLMat& BL) {
  B.setZero();
  BL.setZero();
  for (int a = 0; a < 4; ++a) {
    const double dx = dNdX(a, 0), dy = dNdX(a, 1);
    B(0, 2 * a) = dx;
    B(1, 2 * a + 1) = dx;
    B(2, 2 * a) = dy;
    B(3, 2 * a + 1) = dy;
    BL(0, 2 * a) = dx;
    BL(1, 2 * a + 1) = dy;
    BL(2, 2 * a) = dy;
    BL(2, 2 * a + 1) = dx;
  }
}

// Per-Gauss-point deformation state shared by force, tangent and the
// density derivatives.
struct GaussState {
  Mat2 grad, F;
  double J;
  Eigen::RowVector<double, 8> ginv;  // vec4(F^-T)^T B
};

GaussState gauss_state(const BMat& B, const ElemVec& ue, double gamma) {
  GaussState s;
  s.grad = mat2(B * ue);
  s.F = Mat2::Identity() + gamma * s.grad;
  s.J = s.F.determinant();
  if (!(s.J > 0.0)) throw NonPhysicalState("det F <= 0 at quadrature point");
  s.ginv = vec4(s.F.inverse().transpose()).transpose() * B;
  return s;
}

}  // namespace

ElementKinematics element_kinematics(const RveMesh& mesh, int e) {
  ElementKinematics kin;
  kin.nodes = mesh.conn[e];
  std::array<Vec2, 4> Xe;
  for (int a = 0; a < 4; ++a) Xe[a] = mesh.X[kin.nodes[a]];

  static const double gp[4][2] = {{-kGaussAbscissa, -kGaussAbscissa},
                                  {kGaussAbscissa, -kGaussAbscissa},
                                  {kGaussAbscissa, kGaussAbscissa},
                                  {-kGaussAbscissa, kGaussAbscissa}};
  kin.volume = 0.0;
  for (int s = 0; s < 4; ++s) {
    const auto sd = shape_derivs(Xe, gp[s][0], gp[s][1]);
    if (sd.detJ <= 0.0) throw ConfigError("element with non-positive Jacobian");
    fill_B(sd.dNdX, kin.B[s], kin.BL[s]);
    kin.w[s] = sd.detJ;
    kin.volume += kin.w[s];
  }
  const auto sd0 = shape_derivs(Xe, 0.0, 0.0);
  BLMat unusedBL;
  fill_B(sd0.dNdX, kin.B0, unusedBL);
  return kin;
}

std::vector<ElementKinematics> build_kinematics(const RveMesh& mesh) {
  std::vector<ElementKinematics> kins(mesh.n_ele());
  for (int e = 0; e < mesh.n_ele(); ++e) kins[e] = element_kinematics(mesh, e);
  return kins;
}

ElementResult element_force(const ElementKinematics& kin, const ElemVec& ue,
                            double rho1, double rho2, const InterpolationParams& ip,
                            const PhaseSet& phases, const ElementOptions& opt) {
  const bool lin = opt.linearInterp;
  const double gamma = lin ? gamma_interp(rho1, ip.beta, ip.c) : 1.0;
  const double oneMg2 = 1.0 - gamma * gamma;

  const GaussState s0 = gauss_state(kin.B0, ue, gamma);
  const Eigen::RowVector<double, 8> g0 = vec4(s0.F.inverse().transpose()).transpose() * kin.B0;

  Eigen::Matrix3d C;
  if (lin) C = linear_elastic_moduli(rho1, ip, phases.linearE0());

  ElementResult out;
  for (int s = 0; s < 4; ++s) {
    const GaussState gs = gauss_state(kin.B[s], ue, gamma);
    const double r = s0.J / gs.J;
    const double sr = std::sqrt(r);
    const Mat2 Fb = sr * gs.F;
    const InterpolatedPoint pt = interpolate_point(rho1, rho2, ip, phases, Fb, false);
    const Mat2 P = pt.P / sr;
    out.f += kin.w[s] * gamma * (kin.B[s].transpose() * vec4(P));
    if (lin) {
      const Eigen::Vector3d eps = kin.BL[s] * ue;
      out.f += kin.w[s] * oneMg2 * (kin.BL[s].transpose() * (C * eps));
    }
    if (opt.tangent) {
      const Eigen::RowVector<double, 8> q = gamma * r * (g0 - gs.ginv);  // dr/du
      const Eigen::Matrix<double, 4, 8> dFb =
          (0.5 / sr) * (vec4(gs.F) * q) + (sr * gamma) * kin.B[s];
      const Eigen::Matrix<double, 4, 8> dP =
          (pt.A * dFb) / sr - (0.5 / (r * sr)) * (vec4(pt.P) * q);
      out.k += kin.w[s] * gamma * (kin.B[s].transpose() * dP);
      if (lin) out.k += kin.w[s] * oneMg2 * (kin.BL[s].transpose() * C * kin.BL[s]);
    }
  }
  return out;
}

ElementRhoDerivatives element_dforce_drho(const ElementKinematics& kin, const ElemVec& ue,
                                          double rho1, double rho2,
                                          const InterpolationParams& ip,
                                          const PhaseSet& phases, bool wantRho2) {
  const double gamma = gamma_interp(rho1, ip.beta, ip.c);
  const double dgamma = dgamma_interp(rho1, ip.beta, ip.c);
  const double oneMg2 = 1.0 - gamma * gamma;

  const GaussState s0 = gauss_state(kin.B0, ue, gamma);
  const double t0 = vec4(s0.F.inverse().transpose()).dot(vec4(s0.grad));  // F0^-T : grad0 u

  const Eigen::Matrix3d C = linear_elastic_moduli(rho1, ip, phases.linearE0());
  const Eigen::Matrix3d dC = dlinear_elastic_moduli(rho1, ip, phases.linearE0());

  ElementRhoDerivatives out;
  for (int s = 0; s < 4; ++s) {
    const GaussState gs = gauss_state(kin.B[s], ue, gamma);
    const double r = s0.J / gs.J;
    const double sr = std::sqrt(r);
    const Mat2 Fb = sr * gs.F;
    const InterpolatedPoint pt = interpolate_point(rho1, rho2, ip, phases, Fb, true);
    const Mat2 P = pt.P / sr;

    const double ts = vec4(gs.F.inverse().transpose()).dot(vec4(gs.grad));
    const double dr = dgamma * r * (t0 - ts);
    const Mat2 dFb = (0.5 / sr) * dr * gs.F + sr * dgamma * gs.grad;
    const Mat2 dP = -(0.5 / (r * sr)) * dr * pt.P +
                    (pt.dP_drho1 + mat2(pt.A * vec4(dFb))) / sr;
    out.dF_drho1 +=
        kin.w[s] * (kin.B[s].transpose() * (dgamma * vec4(P) + gamma * vec4(dP)));

    const Eigen::Vector3d eps = kin.BL[s] * ue;
    out.dF_drho1 += kin.w[s] * (kin.BL[s].transpose() *
                                (-2.0 * gamma * dgamma * (C * eps) + oneMg2 * (dC * eps)));

    if (wantRho2) {
      out.dF_drho2 +=
          kin.w[s] * gamma * (kin.B[s].transpose() * vec4(Mat2(pt.dP_drho2 / sr)));
    }
  }
  return out;
}

namespace {

ElemMat initial_stiffness_from_moduli(const ElementKinematics& kin, const Mat4& A) {
  // u = 0, gamma = 1, r = 1: the exact F-bar tangent keeps the rank-one
  // centroid coupling with dr/du = (g0 - gs).
  const Eigen::RowVector<double, 8> g0 =
      vec4(Mat2::Identity()).transpose() * kin.B0;
  ElemMat k = ElemMat::Zero();
  const Vec4 AI = A * vec4(Mat2::Identity());
  for (int s = 0; s < 4; ++s) {
    const Eigen::RowVector<double, 8> gs = vec4(Mat2::Identity()).transpose() * kin.B[s];
    const Eigen::RowVector<double, 8> q = g0 - gs;
    // dFb = 0.5 [I] q + B,  dP = A dFb  (P = 0 at the reference state)
    k += kin.w[s] * (kin.B[s].transpose() * (A * kin.B[s] + 0.5 * (AI * q)));
  }
  return k;
}

}  // namespace

ElemMat element_dstiffness_drho1_initial(const ElementKinematics& kin, double rho1,
                                         double rho2, const InterpolationParams& ip,
                                         const PhaseSet& phases) {
  const EnergyParts v = neo_hookean_parts(phases.voidPhase, Mat2::Identity());
  const EnergyParts s1 = neo_hookean_parts(phases.mat1, Mat2::Identity());
  const ENuInterp z1 = e_nu_interpolation(rho1, ip, phases.mat1);
  const double dwv = -ip.p_e * std::pow(rho1, ip.p_e - 1.0);
  const double w1 = std::pow(rho2, ip.p);
  Mat4 dA = dwv * (v.A_vol + v.A_iso) + w1 * (z1.dzeta_k * s1.A_vol + z1.dzeta_m * s1.A_iso);
  if (phases.twoMaterial) {
    const EnergyParts s2 = neo_hookean_parts(phases.mat2, Mat2::Identity());
    const ENuInterp z2 = e_nu_interpolation(rho1, ip, phases.mat2);
    dA += std::pow(1.0 - rho2, ip.p) * (z2.dzeta_k * s2.A_vol + z2.dzeta_m * s2.A_iso);
  }
  return initial_stiffness_from_moduli(kin, dA);
}

ElemMat element_dstiffness_drho2_initial(const ElementKinematics& kin, double rho1,
                                         double rho2, const InterpolationParams& ip,
                                         const PhaseSet& phases) {
  const EnergyParts s1 = neo_hookean_parts(phases.mat1, Mat2::Identity());
  const ENuInterp z1 = e_nu_interpolation(rho1, ip, phases.mat1);
  Mat4 dA = ip.p * std::pow(rho2, ip.p - 1.0) * (z1.zeta_k * s1.A_vol + z1.zeta_m * s1.A_iso);
  if (phases.twoMaterial) {
    const EnergyParts s2 = neo_hookean_parts(phases.mat2, Mat2::Identity());
    const ENuInterp z2 = e_nu_interpolation(rho1, ip, phases.mat2);
    dA -= ip.p * std::pow(1.0 - rho2, ip.p - 1.0) *
          (z2.zeta_k * s2.A_vol + z2.zeta_m * s2.A_iso);
  }
  return initial_stiffness_from_moduli(kin, dA);
}

ElemMat element_stability_matrix(const ElementKinematics& kin, const ElemVec& ue,
                                 double rho1, double rho2, const InterpolationParams& ip,
                                 const PhaseSet& phases) {
  const double gamma = gamma_interp(rho1, ip.beta, ip.c);
  const double g2 = gamma * gamma;
  const Eigen::Matrix3d C = linear_elastic_moduli(rho1, ip, phases.linearE0());

  const GaussState s0 = gauss_state(kin.B0, ue, gamma);
  ElemMat k = ElemMat::Zero();
  for (int s = 0; s < 4; ++s) {
    const GaussState gs = gauss_state(kin.B[s], ue, gamma);
    const double sr = std::sqrt(s0.J / gs.J);
    const InterpolatedPoint pt = interpolate_point(rho1, rho2, ip, phases, Mat2(sr * gs.F));
    k += kin.w[s] * (g2 * (kin.B[s].transpose() * pt.A * kin.B[s]) +
                     (1.0 - g2) * (kin.BL[s].transpose() * C * kin.BL[s]));
  }
  return 0.5 * (k + k.transpose());  // symmetrize roundoff
}

ElemMat element_gradient_gram(const ElementKinematics& kin) {
  ElemMat g = ElemMat::Zero();
  for (int s = 0; s < 4; ++s)
    g += kin.w[s] * (kin.B[s].transpose() * kin.B[s]);
  return g;
}

Mat2 element_effective_stress_integral(const ElementKinematics& kin, const ElemVec& ue,
                                       double rho1, double rho2,
                                       const InterpolationParams& ip,
                                       const PhaseSet& phases) {
  const double gamma = gamma_interp(rho1, ip.beta, ip.c);
  const double oneMg2 = 1.0 - gamma * gamma;
  const Eigen::Matrix3d C = linear_elastic_moduli(rho1, ip, phases.linearE0());
  const GaussState s0 = gauss_state(kin.B0, ue, gamma);

  Mat2 acc = Mat2::Zero();
  for (int s = 0; s < 4; ++s) {
    const GaussState gs = gauss_state(kin.B[s], ue, gamma);
    const double sr = std::sqrt(s0.J / gs.J);
    const InterpolatedPoint pt = interpolate_point(rho1, rho2, ip, phases, Mat2(sr * gs.F));
    acc += kin.w[s] * gamma * (pt.P / sr);
    const Eigen::Vector3d sig = C * (kin.BL[s] * ue);
    Mat2 sigT;
    sigT << sig[0], sig[2], sig[2], sig[1];
    acc += kin.w[s] * oneMg2 * sigT;
  }
  return acc;
}

Mat2 element_gradu_integral(const ElementKinematics& kin, const ElemVec& ue) {
  Mat2 acc = Mat2::Zero();
  for (int s = 0; s < 4; ++s) acc += kin.w[s] * mat2(kin.B[s] * ue);
  return acc;
}

}  // namespace auxcell
