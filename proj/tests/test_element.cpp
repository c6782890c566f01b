#include "auxcell/element.hpp"

#include <cmath>
#include <random>

#include "doctest.h"

using namespace auxcell;

namespace {

RveMesh single_element_mesh() {
  // one deliberately skewed (but convex, positively oriented) quad
  RveMesh m;
  m.X = {Vec2(0.0, 0.0), Vec2(1.1, 0.05), Vec2(1.2, 0.95), Vec2(-0.1, 1.0)};
  m.conn = {{0, 1, 2, 3}};
  m.v_e = {1.0};
  m.centroid = {Vec2(0.55, 0.5)};
  m.V = 1.0;
  return m;
}

ElemVec random_ue(std::mt19937& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  ElemVec v;
  for (int i = 0; i < 8; ++i) v[i] = u(rng);
  return v;
}

PhaseSet default_phases() {
  PhaseSet p;
  p.voidPhase = {1e-6, 0.2, 0.0};
  p.mat1 = {100.0, 0.49, 0.0};
  p.mat2 = {300.0, 0.49, 0.0};
  p.twoMaterial = true;
  return p;
}

}  // namespace

TEST_CASE("element force vanishes at rest") {
  auto mesh = single_element_mesh();
  auto kin = element_kinematics(mesh, 0);
  InterpolationParams ip;
  auto res = element_force(kin, ElemVec::Zero(), 1.0, 1.0, ip, default_phases(), {});
  CHECK(res.f.norm() == 0.0);
}

TEST_CASE("consistent tangent matches finite differences") {
  auto mesh = single_element_mesh();
  auto kin = element_kinematics(mesh, 0);
  InterpolationParams ip;
  auto phases = default_phases();
  std::mt19937 rng(21);
  const double h = 1e-7;

  for (auto [rho1, rho2] : {std::pair{1.0, 1.0}, {0.55, 0.4}, {0.12, 0.8}}) {
    const ElemVec ue = random_ue(rng, 0.05);
    ElementOptions opt;
    auto res = element_force(kin, ue, rho1, rho2, ip, phases, opt);
    opt.tangent = false;
    ElemMat kfd;
    for (int j = 0; j < 8; ++j) {
      ElemVec up = ue, um = ue;
      up[j] += h;
      um[j] -= h;
      const auto fp = element_force(kin, up, rho1, rho2, ip, phases, opt);
      const auto fm = element_force(kin, um, rho1, rho2, ip, phases, opt);
      kfd.col(j) = (fp.f - fm.f) / (2 * h);
    }
    CHECK((res.k - kfd).norm() <= 1e-5 * kfd.norm());
  }
}

TEST_CASE("F-bar keeps the centroid volume ratio at every Gauss point") {
  auto mesh = single_element_mesh();
  auto kin = element_kinematics(mesh, 0);
  std::mt19937 rng(9);
  const ElemVec ue = random_ue(rng, 0.08);
  const double gamma = 1.0;
  const Mat2 F0 = Mat2::Identity() + gamma * mat2(kin.B0 * ue);
  for (int s = 0; s < 4; ++s) {
    const Mat2 F = Mat2::Identity() + gamma * mat2(kin.B[s] * ue);
    const double r = F0.determinant() / F.determinant();
    const Mat2 Fb = std::sqrt(r) * F;
    CHECK(Fb.determinant() == doctest::Approx(F0.determinant()).epsilon(1e-13));
  }
}

TEST_CASE("near-void element is dominated by the linear term") {
  auto mesh = single_element_mesh();
  auto kin = element_kinematics(mesh, 0);
  InterpolationParams ip;
  auto phases = default_phases();
  std::mt19937 rng(2);
  const ElemVec ue = random_ue(rng, 0.05);

  ElementOptions opt;
  opt.tangent = false;
  auto full = element_force(kin, ue, 0.0, 1.0, ip, phases, opt);

  const double gamma = gamma_interp(0.0, ip.beta, ip.c);
  const auto C = linear_elastic_moduli(0.0, ip, phases.linearE0());
  ElemVec flin = ElemVec::Zero();
  for (int s = 0; s < 4; ++s)
    flin += kin.w[s] * (1.0 - gamma * gamma) *
            (kin.BL[s].transpose() * (C * (kin.BL[s] * ue)));

  // the nonlinear remainder carries the gamma factor on the (tiny) void model
  CHECK((full.f - flin).norm() <= 2.0 * gamma * 1e-6 * 10.0);
  CHECK(gamma == doctest::Approx(6.772414961977023e-05).epsilon(1e-12));
}

TEST_CASE("density derivatives of the element force match finite differences") {
  auto mesh = single_element_mesh();
  auto kin = element_kinematics(mesh, 0);
  InterpolationParams ip;
  ip.p_e = 2.4;
  ip.p = 3.0;
  auto phases = default_phases();
  std::mt19937 rng(31);
  const ElemVec ue = random_ue(rng, 0.05);
  const double h = 1e-7;
  ElementOptions opt;
  opt.tangent = false;

  for (auto [rho1, rho2] : {std::pair{0.6, 0.5}, {0.15, 0.9}, {0.95, 0.2}}) {
    auto d = element_dforce_drho(kin, ue, rho1, rho2, ip, phases, true);
    auto fp = element_force(kin, ue, rho1 + h, rho2, ip, phases, opt);
    auto fm = element_force(kin, ue, rho1 - h, rho2, ip, phases, opt);
    ElemVec fd1 = (fp.f - fm.f) / (2 * h);
    CHECK((d.dF_drho1 - fd1).norm() <= 1e-5 * std::max(1.0, fd1.norm()));

    auto gp = element_force(kin, ue, rho1, rho2 + h, ip, phases, opt);
    auto gm = element_force(kin, ue, rho1, rho2 - h, ip, phases, opt);
    ElemVec fd2 = (gp.f - gm.f) / (2 * h);
    CHECK((d.dF_drho2 - fd2).norm() <= 1e-5 * std::max(1.0, fd2.norm()));
  }
}

TEST_CASE("initial-stiffness density derivative matches finite differences") {
  auto mesh = single_element_mesh();
  auto kin = element_kinematics(mesh, 0);
  InterpolationParams ip;
  ip.p_e = 3.0;
  ip.p = 3.0;
  ip.p_nu = 1.0;
  auto phases = default_phases();
  const double h = 1e-6;
  ElementOptions opt;
  opt.linearInterp = false;

  for (auto [rho1, rho2] : {std::pair{0.5, 0.5}, {0.8, 0.3}}) {
    auto d1 = element_dstiffness_drho1_initial(kin, rho1, rho2, ip, phases);
    auto kp = element_force(kin, ElemVec::Zero(), rho1 + h, rho2, ip, phases, opt);
    auto km = element_force(kin, ElemVec::Zero(), rho1 - h, rho2, ip, phases, opt);
    CHECK((d1 - (kp.k - km.k) / (2 * h)).norm() <= 1e-5 * d1.norm());

    auto d2 = element_dstiffness_drho2_initial(kin, rho1, rho2, ip, phases);
    auto lp = element_force(kin, ElemVec::Zero(), rho1, rho2 + h, ip, phases, opt);
    auto lm = element_force(kin, ElemVec::Zero(), rho1, rho2 - h, ip, phases, opt);
    CHECK((d2 - (lp.k - lm.k) / (2 * h)).norm() <= 1e-5 * d2.norm());
  }
}

TEST_CASE("stability matrix is symmetric and the Gram matrix is PSD") {
  auto mesh = single_element_mesh();
  auto kin = element_kinematics(mesh, 0);
  InterpolationParams ip;
  auto phases = default_phases();
  std::mt19937 rng(12);
  const ElemVec ue = random_ue(rng, 0.05);

  auto ks = element_stability_matrix(kin, ue, 0.8, 0.6, ip, phases);
  CHECK((ks - ks.transpose()).norm() < 1e-12 * ks.norm());

  auto g = element_gradient_gram(kin);
  CHECK((g - g.transpose()).norm() < 1e-13 * g.norm());
  Eigen::SelfAdjointEigenSolver<ElemMat> es(g);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
}
