#include "auxcell/material.hpp"

#include <cmath>
#include <random>

#include "auxcell/errors.hpp"
#include "doctest.h"

using namespace auxcell;

namespace {

double psi_total(double kappa, double mu, const Mat2& F) {
  const auto p = neo_hookean_parts(kappa, mu, F);
  return p.psi_vol + p.psi_iso;
}

// Test-side evaluation of the isochoric energy on an explicit 3D diagonal
// completion, used for the volumetric-rescaling invariance check.
double psi_iso_3d(double mu, const Mat2& F2, double F33) {
  Eigen::Matrix3d F3 = Eigen::Matrix3d::Zero();
  F3.topLeftCorner<2, 2>() = F2;
  F3(2, 2) = F33;
  const double J = F3.determinant();
  const double I1 = (F3.transpose() * F3).trace();
  return 0.5 * mu * (std::pow(J, -2.0 / 3.0) * I1 - 3.0);
}

Mat2 random_F(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (;;) {
    Mat2 F;
    F << 1.0 + u(rng), u(rng), u(rng), 1.0 + u(rng);
    const double d = F.determinant();
    if (d > 0.5 && d < 2.0) return F;
  }
}

}  // namespace

TEST_CASE("neo-Hookean: reference state and frozen checks") {
  HyperelasticPhase ph{100.0, 0.49, 0.0};
  const auto p = neo_hookean_parts(ph, Mat2::Identity());
  CHECK(p.psi_vol == 0.0);
  CHECK(p.psi_iso == 0.0);
  CHECK(p.P_vol.norm() == 0.0);
  CHECK(p.P_iso.norm() == 0.0);

  Mat2 Fbad;
  Fbad << 1.0, 0.0, 0.0, -0.5;
  CHECK_THROWS_AS(neo_hookean_parts(ph, Fbad), NonPhysicalState);
}

TEST_CASE("stress matches finite difference of the energy") {
  HyperelasticPhase ph{100.0, 0.49, 0.0};
  const double kappa = ph.kappa0(), mu = ph.mu0();
  Mat2 F;
  F << 1.2, 0.0, 0.0, 1.0 / 1.2;
  const auto parts = neo_hookean_parts(ph, F);
  const Mat2 P = parts.P_vol + parts.P_iso;
  const double h = 1e-6;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Mat2 Fp = F, Fm = F;
      Fp(i, j) += h;
      Fm(i, j) -= h;
      const double fd = (psi_total(kappa, mu, Fp) - psi_total(kappa, mu, Fm)) / (2 * h);
      CHECK(P(i, j) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("tangent at identity equals the isotropic small-strain moduli") {
  HyperelasticPhase ph{100.0, 0.49, 0.0};
  const double kappa = ph.kappa0(), mu = ph.mu0();
  const auto p = neo_hookean_parts(ph, Mat2::Identity());
  const Mat4 A = p.A_vol + p.A_iso;
  const double lame = kappa - 2.0 * mu / 3.0;
  auto idx = [](int i, int j) { return i + 2 * j; };
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          const double expect = lame * (i == j) * (k == l) +
                                mu * ((i == k) * (j == l) + (i == l) * (j == k));
          CHECK(A(idx(i, j), idx(k, l)) == doctest::Approx(expect).epsilon(1e-12));
        }
}

TEST_CASE("stress-energy and tangent-stress consistency at 20 random states") {
  HyperelasticPhase ph{100.0, 0.49, 0.0};
  const double kappa = ph.kappa0(), mu = ph.mu0();
  std::mt19937 rng(11);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const Mat2 F = random_F(rng);
    const auto parts = neo_hookean_parts(ph, F);
    const Mat2 P = parts.P_vol + parts.P_iso;
    const Mat4 A = parts.A_vol + parts.A_iso;
    auto idx = [](int i, int j) { return i + 2 * j; };
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        Mat2 Fp = F, Fm = F;
        Fp(i, j) += h;
        Fm(i, j) -= h;
        const double fd = (psi_total(kappa, mu, Fp) - psi_total(kappa, mu, Fm)) / (2 * h);
        CHECK(std::abs(P(i, j) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));

        const auto pp = neo_hookean_parts(ph, Fp);
        const auto pm = neo_hookean_parts(ph, Fm);
        const Mat2 dP = ((pp.P_vol + pp.P_iso) - (pm.P_vol + pm.P_iso)) / (2 * h);
        for (int k = 0; k < 2; ++k)
          for (int l = 0; l < 2; ++l)
            CHECK(std::abs(A(idx(k, l), idx(i, j)) - dP(k, l)) <=
                  1e-4 * std::max(1.0, std::abs(dP(k, l))));
      }
  }
}

TEST_CASE("isochoric part is invariant to volumetric rescaling of the 3D completion") {
  HyperelasticPhase ph{100.0, 0.49, 0.0};
  const double mu = ph.mu0();
  std::mt19937 rng(4);
  const Mat2 F = random_F(rng);
  const auto parts = neo_hookean_parts(ph, F);
  CHECK(parts.psi_iso == doctest::Approx(psi_iso_3d(mu, F, 1.0)).epsilon(1e-13));
  for (double alpha : {0.8, 1.25}) {
    const double s = std::cbrt(alpha);
    CHECK(psi_iso_3d(mu, Mat2(s * F), s) ==
          doctest::Approx(parts.psi_iso).epsilon(1e-12));
  }
}

TEST_CASE("E-nu interpolation") {
  InterpolationParams ip;
  ip.p_e = 3.0;
  ip.p_nu = 3.0;
  HyperelasticPhase ph{100.0, 0.49, 0.0};

  auto full = e_nu_interpolation(1.0, ip, ph);
  CHECK(full.E == doctest::Approx(100.0).epsilon(1e-14));
  CHECK(full.nu == doctest::Approx(0.49).epsilon(1e-14));
  CHECK(full.zeta_k == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(full.zeta_m == doctest::Approx(1.0).epsilon(1e-13));

  auto empty = e_nu_interpolation(0.0, ip, ph);
  CHECK(empty.E == 0.0);
  CHECK(empty.nu == doctest::Approx(0.4 * 0.49).epsilon(1e-14));

  auto half = e_nu_interpolation(0.5, ip, ph);
  CHECK(half.E == doctest::Approx(12.5).epsilon(1e-14));
  CHECK(half.nu == doctest::Approx(0.45325).epsilon(1e-14));
  CHECK(half.zeta_k ==
        doctest::Approx((half.E / (3 * (1 - 2 * half.nu))) / ph.kappa0()).epsilon(1e-14));

  // zeta derivatives against central differences
  const double h = 1e-7;
  for (double r : {0.2, 0.5, 0.8}) {
    auto z = e_nu_interpolation(r, ip, ph);
    auto zp = e_nu_interpolation(r + h, ip, ph);
    auto zm = e_nu_interpolation(r - h, ip, ph);
    CHECK(z.dzeta_k == doctest::Approx((zp.zeta_k - zm.zeta_k) / (2 * h)).epsilon(1e-6));
    CHECK(z.dzeta_m == doctest::Approx((zp.zeta_m - zm.zeta_m) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("gamma blend") {
  const double beta = 120.0, c = 0.08;
  CHECK(gamma_interp(c, beta, c) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(gamma_interp(1.0, beta, c) - 1.0) < 1e-12);
  CHECK(gamma_interp(0.0, beta, c) ==
        doctest::Approx(6.772414961977023e-05).epsilon(1e-13));

  // strictly increasing until it saturates at 1 in double precision
  double prev = -1.0;
  for (double r = 0.0; r <= 1.0; r += 0.05) {
    const double g = gamma_interp(r, beta, c);
    if (prev < 1.0 - 1e-12)
      CHECK(g > prev);
    else
      CHECK(g >= prev);
    prev = g;
  }

  const double h = 1e-7;
  for (double r : {0.05, 0.08, 0.3}) {
    const double fd = (gamma_interp(r + h, beta, c) - gamma_interp(r - h, beta, c)) / (2 * h);
    CHECK(dgamma_interp(r, beta, c) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("linear-energy moduli") {
  InterpolationParams ip;
  ip.p_L = 4.0;
  const double E0 = 100.0;
  auto C1 = linear_elastic_moduli(1.0, ip, E0);
  const double nu = 0.2;
  CHECK(C1(0, 0) ==
        doctest::Approx(E0 * (1 - nu) / ((1 + nu) * (1 - 2 * nu))).epsilon(1e-12));
  auto C0 = linear_elastic_moduli(0.0, ip, E0);
  CHECK(C0(0, 0) == doctest::Approx(1e-8 * C1(0, 0) / 1.0).epsilon(1e-6));
  auto Ch = linear_elastic_moduli(0.5, ip, E0);
  const double Eh = 1e-8 + 0.0625 * (1 - 1e-8);
  CHECK(Ch(0, 0) == doctest::Approx(Eh * 100 * (1 - nu) / ((1 + nu) * (1 - 2 * nu))));

  const double h = 1e-7;
  auto dC = dlinear_elastic_moduli(0.5, ip, E0);
  auto Cp = linear_elastic_moduli(0.5 + h, ip, E0);
  auto Cm = linear_elastic_moduli(0.5 - h, ip, E0);
  CHECK(dC(0, 0) == doctest::Approx((Cp(0, 0) - Cm(0, 0)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("three-phase energy interpolation") {
  InterpolationParams ip;
  ip.p_e = 3.0;
  ip.p = 3.0;
  ip.p_nu = 3.0;
  PhaseSet phases;
  phases.voidPhase = {1e-6, 0.2, 0.0};
  phases.mat1 = {100.0, 0.49, 0.0};
  phases.mat2 = {300.0, 0.49, 0.0};
  phases.twoMaterial = true;

  std::mt19937 rng(5);
  const Mat2 F = random_F(rng);

  // rho1 = rho2 = 1: exactly the solid phase-1 energy
  auto solid = interpolate_point(1.0, 1.0, ip, phases, F);
  auto ref = neo_hookean_parts(phases.mat1, F);
  CHECK(solid.psi == doctest::Approx(ref.psi_vol + ref.psi_iso).epsilon(1e-12));
  CHECK((solid.P - (ref.P_vol + ref.P_iso)).norm() < 1e-12 * ref.P_vol.norm());

  // rho1 = 0: pure void model
  auto voidpt = interpolate_point(0.0, 0.7, ip, phases, F);
  auto vref = neo_hookean_parts(phases.voidPhase, F);
  CHECK(voidpt.psi == doctest::Approx(vref.psi_vol + vref.psi_iso).epsilon(1e-10));

  // mid-density value against an independent scalar evaluation
  {
    const double r1 = 0.5, r2 = 0.5;
    auto z1 = e_nu_interpolation(r1, ip, phases.mat1);
    auto z2 = e_nu_interpolation(r1, ip, phases.mat2);
    auto s1 = neo_hookean_parts(phases.mat1, F);
    auto s2 = neo_hookean_parts(phases.mat2, F);
    const double expected =
        (1 - std::pow(r1, 3.0)) * (vref.psi_vol + vref.psi_iso) +
        std::pow(r2, 3.0) * (z1.zeta_k * s1.psi_vol + z1.zeta_m * s1.psi_iso) +
        std::pow(1 - r2, 3.0) * (z2.zeta_k * s2.psi_vol + z2.zeta_m * s2.psi_iso);
    auto mid = interpolate_point(r1, r2, ip, phases, F);
    CHECK(mid.psi == doctest::Approx(expected).epsilon(1e-13));
  }

  // dP/drho at fixed F against finite differences
  const double h = 1e-7;
  for (double r1 : {0.3, 0.7})
    for (double r2 : {0.2, 0.9}) {
      auto pt = interpolate_point(r1, r2, ip, phases, F, true);
      auto p1 = interpolate_point(r1 + h, r2, ip, phases, F);
      auto m1 = interpolate_point(r1 - h, r2, ip, phases, F);
      CHECK((pt.dP_drho1 - (p1.P - m1.P) / (2 * h)).norm() <
            1e-5 * std::max(1.0, pt.dP_drho1.norm()));
      auto p2 = interpolate_point(r1, r2 + h, ip, phases, F);
      auto m2 = interpolate_point(r1, r2 - h, ip, phases, F);
      CHECK((pt.dP_drho2 - (p2.P - m2.P) / (2 * h)).norm() <
            1e-5 * std::max(1.0, pt.dP_drho2.norm()));
    }

  // monotone in rho1 at fixed F for rho2 in {0, 1}
  for (double r2 : {0.0, 1.0}) {
    double prev = -1.0;
    for (double r1 = 0.0; r1 <= 1.0001; r1 += 0.1) {
      auto pt = interpolate_point(std::min(r1, 1.0), r2, ip, phases, F);
      if (prev >= 0.0) CHECK(pt.psi >= prev - 1e-12);
      prev = pt.psi;
    }
  }
}
