#include "auxcell/stability.hpp"

#include <cmath>
#include <random>

#include "doctest.h"

using namespace auxcell;

namespace {

PhaseSet solid_phases() {
  PhaseSet p;
  p.voidPhase = {1e-6, 0.2, 0.0};
  p.mat1 = {100.0, 0.49, 0.0};
  return p;
}

// Independent dense oracle for the real periodic problem at k = 0: direct
// master-slave reduction built from the pair list, translations removed by
// an explicit nullspace basis.
double dense_periodic_smallest(const RveMesh& mesh, const SpMat& K, const SpMat& G) {
  const int nn = mesh.n_nodes();
  std::vector<int> masterOf(nn, -1);
  for (const auto& p : mesh.pairs) masterOf[p.pos] = p.neg;
  std::vector<int> col(nn, -1);
  int nIndep = 0;
  for (int i = 0; i < nn; ++i)
    if (masterOf[i] < 0) col[i] = 2 * nIndep++;
  MatX T = MatX::Zero(2 * nn, 2 * nIndep);
  for (int i = 0; i < nn; ++i) {
    const int m = masterOf[i] < 0 ? i : masterOf[i];
    T(2 * i, col[m]) = 1.0;
    T(2 * i + 1, col[m] + 1) = 1.0;
  }
  MatX Kr = T.transpose() * MatX(K) * T;
  MatX Gr = T.transpose() * MatX(G) * T;
  MatX Tt = MatX::Zero(2 * nIndep, 2);
  for (int i = 0; i < nIndep; ++i) {
    Tt(2 * i, 0) = 1.0;
    Tt(2 * i + 1, 1) = 1.0;
  }
  Eigen::HouseholderQR<MatX> qr(Tt);
  MatX Q = qr.householderQ() * MatX::Identity(2 * nIndep, 2 * nIndep);
  MatX Z = Q.rightCols(2 * nIndep - 2);
  Eigen::GeneralizedSelfAdjointEigenSolver<MatX> es(Z.transpose() * Kr * Z,
                                                    Z.transpose() * Gr * Z);
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("undeformed homogeneous cell is stable over the zone") {
  auto mesh = build_mesh(CellShape::Square, 6, 1.0);
  FeSystem sys(mesh, solid_phases(), 1);
  InterpolationParams ip;
  VecX rho1 = VecX::Ones(mesh.n_ele()), rho2 = VecX::Ones(mesh.n_ele());
  VecX uhat = VecX::Zero(sys.size());
  StabilityOperator op(sys, rho1, rho2, ip, uhat);

  BlochGrid grid;
  grid.base = 6;
  grid.refine = 3;
  auto res = bz_sweep(op, grid, 1);
  CHECK(res.minBeta > 0.0);
  CHECK(res.betaZero > 0.0);
  for (const auto& pt : res.points) CHECK(pt.ok);
}

TEST_CASE("k = 0 matches the dense real periodic oracle") {
  auto mesh = build_mesh(CellShape::Square, 6, 1.0);
  FeSystem sys(mesh, solid_phases(), 1);
  InterpolationParams ip;
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.4, 1.0);
  VecX rho1(mesh.n_ele());
  for (int e = 0; e < rho1.size(); ++e) rho1[e] = u(rng);
  VecX rho2 = VecX::Ones(mesh.n_ele());
  VecX uhat = VecX::Zero(sys.size());
  StabilityOperator op(sys, rho1, rho2, ip, uhat);

  const double b0 = op.bloch_beta(Vec2::Zero());
  const double ref = dense_periodic_smallest(mesh, op.K(), op.G());
  CHECK(b0 == doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("time-reversal symmetry: beta(k) = beta(-k mod 1)") {
  auto mesh = build_mesh(CellShape::Square, 5, 1.0);
  FeSystem sys(mesh, solid_phases(), 1);
  InterpolationParams ip;
  VecX rho1 = VecX::Ones(mesh.n_ele()), rho2 = VecX::Ones(mesh.n_ele());
  VecX uhat = VecX::Zero(sys.size());
  StabilityOperator op(sys, rho1, rho2, ip, uhat);

  for (Vec2 k : {Vec2(0.3, 0.1), Vec2(0.41, 0.77), Vec2(0.5, 0.25)}) {
    const double a = op.bloch_beta(k);
    const double b = op.bloch_beta(Vec2(std::fmod(1.0 - k.x(), 1.0), std::fmod(1.0 - k.y(), 1.0)));
    CHECK(a == doctest::Approx(b).epsilon(1e-10));
  }
}

TEST_CASE("shift-invert agrees with the dense eigensolver on the same pencil") {
  auto mesh = build_mesh(CellShape::Square, 8, 1.0);
  FeSystem sys(mesh, solid_phases(), 1);
  InterpolationParams ip;
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(0.3, 1.0);
  VecX rho1(mesh.n_ele());
  for (int e = 0; e < rho1.size(); ++e) rho1[e] = u(rng);
  VecX rho2 = VecX::Ones(mesh.n_ele());
  VecX uhat = VecX::Zero(sys.size());
  StabilityOperator op(sys, rho1, rho2, ip, uhat);

  using M = StabilityOperator::EigMethod;
  for (Vec2 k : {Vec2(0.37, 0.12), Vec2(0.05, 0.61), Vec2(0.5, 0.5)}) {
    const double fast = op.bloch_beta(k, M::ShiftInvert);
    const double dense = op.bloch_beta(k, M::Dense);
    CHECK(fast == doctest::Approx(dense).epsilon(1e-8));
  }
}

TEST_CASE("rank-one indicator oracles") {
  // identity-like moduli: the acoustic form is |m|^2 |M|^2 = 1
  auto r = rank_one_indicator(Mat4::Identity(), 180);
  CHECK(r.B == doctest::Approx(1.0).epsilon(1e-12));

  // isotropic plane-strain moduli at the reference state: B = mu
  HyperelasticPhase ph{100.0, 0.3, 0.0};
  const auto parts = neo_hookean_parts(ph, Mat2::Identity());
  const Mat4 A = parts.A_vol + parts.A_iso;
  auto riso = rank_one_indicator(A, 720);
  CHECK(riso.B == doctest::Approx(ph.mu0()).epsilon(1e-9));

  // brute force on a 10x finer grid cannot find anything lower
  auto rfine = rank_one_indicator(A, 7200);
  CHECK(riso.B <= rfine.B + 1e-6 * std::abs(rfine.B));
  CHECK(std::abs(riso.B - rfine.B) < 1e-6 * std::max(1.0, std::abs(rfine.B)));
}

TEST_CASE("rank-one invariance under a quarter-turn rotation") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  Mat4 A;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = u(rng);
  const Mat4 QM = rotation_matrix_4(std::numbers::pi / 2.0);
  const Mat4 Arot = QM.transpose() * A * QM;
  auto a = rank_one_indicator(A, 360);
  auto b = rank_one_indicator(Arot, 360);
  CHECK(a.B == doctest::Approx(b.B).epsilon(1e-10));
}

TEST_CASE("homogeneous cell in moderate tension stays elliptic") {
  auto mesh = build_mesh(CellShape::Square, 5, 1.0);
  FeSystem sys(mesh, solid_phases(), 1);
  InterpolationParams ip;
  VecX rho1 = VecX::Ones(mesh.n_ele()), rho2 = VecX::Ones(mesh.n_ele());
  SolverSettings st;

  MacroLoadCase lc;
  lc.lambda2Target = 1.2;
  lc.n = 4;
  BlochGrid grid;
  grid.base = 4;
  grid.refine = 2;
  auto rep = stability_scan(sys, rho1, rho2, ip, lc, grid, st, false);
  REQUIRE(!rep.truncated);
  REQUIRE(rep.checkpoints.size() == 4);
  for (const auto& cp : rep.checkpoints) {
    CHECK(cp.B > 0.0);
    CHECK(cp.betaZero > 0.0);
    CHECK(cp.betaNearZero > 0.0);
  }
  CHECK(rep.firstMacroLoss == -1);
}

TEST_CASE("threshold helper") {
  VecX rho(4);
  rho << 0.2, 0.6, 0.59, 1.0;
  VecX t = threshold_density(rho, 0.6);
  CHECK(t[0] == 0.0);
  CHECK(t[1] == 1.0);
  CHECK(t[2] == 0.0);
  CHECK(t[3] == 1.0);
}
