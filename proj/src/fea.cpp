#include "auxcell/fea.hpp"

#include <cmath>
#include <cstdio>

#include "auxcell/errors.hpp"
#include "auxcell/parallel.hpp"

namespace auxcell {

ConstraintReduction constraint_reduction(const RveMesh& mesh) {
  ConstraintReduction red;
  red.N = mesh.n_dofs();
  red.m = mesh.n_pairs();
  red.fixedDof = 2 * mesh.fixedNode;

  std::vector<int> masterOf(mesh.n_nodes(), -1);
  red.posDof.resize(2 * red.m);
  for (int q = 0; q < red.m; ++q) {
    masterOf[mesh.pairs[q].pos] = mesh.pairs[q].neg;
    red.posDof[2 * q] = 2 * mesh.pairs[q].pos;
    red.posDof[2 * q + 1] = 2 * mesh.pairs[q].pos + 1;
  }

  std::vector<int> col(red.N, -1);
  int nRed = 0;
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    if (masterOf[n] >= 0 || n == mesh.fixedNode) continue;
    col[2 * n] = nRed++;
    col[2 * n + 1] = nRed++;
  }
  std::vector<Triplet> trips;
  trips.reserve(red.N);
  for (int n = 0; n < mesh.n_nodes(); ++n) {
    if (n == mesh.fixedNode) continue;
    const int m = masterOf[n] < 0 ? n : masterOf[n];
    for (int d = 0; d < 2; ++d)
      if (col[2 * m + d] >= 0) trips.emplace_back(2 * n + d, col[2 * m + d], 1.0);
  }
  red.T.resize(red.N, nRed);
  red.T.setFromTriplets(trips.begin(), trips.end());
  return red;
}

namespace {
constexpr double kRefineTol = 1e-13;
constexpr int kRefineMax = 40;
}

void FactoredJacobian::factor_core(const SpMat& A) {
  A_ = A;
  A_.makeCompressed();

  // An unpivoted LDLT is only trustworthy for diagonally-anchored
  // (definite up to the mild non-symmetric remainder) operators; saddle
  // blocks with zero diagonals go straight to the pivoting LU.
  bool diagOk = true;
  for (int i = 0; i < A_.rows() && diagOk; ++i)
    if (A_.coeff(i, i) == 0.0) diagOk = false;

  useLdlt_ = false;
  lu_.reset();
  if (diagOk) {
    const SpMat sym = SpMat(0.5 * (A_ + SpMat(A_.transpose())));
    if (!ldlt_) ldlt_ = std::make_unique<Eigen::SimplicialLDLT<SpMat>>();
    if (analyzedSize_ != int(A_.rows())) {
      ldlt_->analyzePattern(sym);
      analyzedSize_ = int(A_.rows());
    }
    ldlt_->factorize(sym);
    if (ldlt_->info() == Eigen::Success) {
      // probe: the refinement rate is right-hand-side independent, with
      // headroom over the per-solve iteration cap
      VecX b(A_.rows());
      for (int i = 0; i < b.size(); ++i) b[i] = 1.0 + (i % 7) * 0.25;
      VecX x = ldlt_->solve(b);
      bool ok = false;
      for (int it = 0; it < kRefineMax / 2; ++it) {
        const VecX r = b - A_ * x;
        if (r.norm() <= kRefineTol * b.norm()) {
          ok = true;
          break;
        }
        x += ldlt_->solve(r);
      }
      if (ok) {
        useLdlt_ = true;
        return;
      }
    }
  }
  lu_ = std::make_unique<Eigen::SparseLU<SpMat>>();
  lu_->compute(A_);
  if (lu_->info() != Eigen::Success)
    throw SolveFailure("singular Jacobian (rank-deficient or disconnected design)");
}

VecX FactoredJacobian::core_solve(const VecX& b, bool transpose) const {
  if (!useLdlt_) {
    if (transpose) return lu_->adjoint().solve(b);
    return lu_->solve(b);
  }
  // LDLT of the symmetric part preconditions both A and A^T
  VecX x = ldlt_->solve(b);
  const double target = kRefineTol * std::max(b.norm(), 1e-300);
  for (int it = 0; it < kRefineMax; ++it) {
    const VecX r = transpose ? VecX(b - A_.transpose() * x) : VecX(b - A_ * x);
    if (r.norm() <= target) return x;
    x += ldlt_->solve(r);
  }
  throw SolveFailure("iterative refinement stalled on a factored system");
}

void FactoredJacobian::compute(const SpMat& A) {
  saddle_ = false;
  red_ = nullptr;
  factor_core(A);
}

void FactoredJacobian::compute_saddle(const SpMat& J, const ConstraintReduction& red) {
  saddle_ = true;
  red_ = &red;
  K_ = J.topLeftCorner(red.N, red.N);
  factor_core(SpMat(red.T.transpose() * K_ * red.T));
}

VecX FactoredJacobian::saddle_solve(const VecX& b, bool transpose) const {
  const ConstraintReduction& red = *red_;
  const int N = red.N;

  // particular solution satisfying the constraint rows
  VecX up = VecX::Zero(N);
  up[red.fixedDof] = -b[N];
  up[red.fixedDof + 1] = -b[N + 1];
  for (int j = 0; j < 2 * red.m; ++j) up[red.posDof[j]] = -b[N + 2 + j];

  const VecX bu = b.head(N);
  const VecX Kup = transpose ? VecX(K_.transpose() * up) : VecX(K_ * up);
  const VecX rhs = red.T.transpose() * (bu - Kup);
  const VecX ur = core_solve(rhs, transpose);
  const VecX u = red.T * ur + up;

  // multipliers from the internal-force rows of the dependent dofs
  const VecX g = (transpose ? VecX(K_.transpose() * u) : VecX(K_ * u)) - bu;
  VecX out(b.size());
  out.head(N) = u;
  out[N] = g[red.fixedDof];
  out[N + 1] = g[red.fixedDof + 1];
  for (int j = 0; j < 2 * red.m; ++j) out[N + 2 + j] = g[red.posDof[j]];
  return out;
}

VecX FactoredJacobian::solve(const VecX& rhs) const {
  return saddle_ ? saddle_solve(rhs, false) : core_solve(rhs, false);
}

VecX FactoredJacobian::solve_transpose(const VecX& rhs) const {
  return saddle_ ? saddle_solve(rhs, true) : core_solve(rhs, true);
}

FeSystem::FeSystem(const RveMesh& mesh, PhaseSet phases, int threads)
    : mesh_(&mesh), phases_(phases), threads_(threads) {
  kin_ = build_kinematics(mesh);
  red_ = constraint_reduction(mesh);
  constraint_matrices(mesh, M1_, M2_);
  LM_ = pair_translation_matrix(mesh);
  N_ = mesh.n_dofs();
  m_ = mesh.n_pairs();

  // Constraint blocks of the Jacobian, fixed for the life of the mesh.
  const int offL = N_, offM = N_ + 2;
  auto addBlock = [&](const SpMat& M, int rowOff) {
    for (int k = 0; k < M.outerSize(); ++k)
      for (SpMat::InnerIterator it(M, k); it; ++it) {
        constraintTriplets_.emplace_back(rowOff + int(it.row()), int(it.col()), -it.value());
        constraintTriplets_.emplace_back(int(it.col()), rowOff + int(it.row()), -it.value());
      }
  };
  addBlock(M1_, offL);
  addBlock(M2_, offM);
}

void FeSystem::assemble(const VecX& uhat, const Mat2& Fbar, const VecX& rho1,
                        const VecX& rho2, const InterpolationParams& ip, bool linearInterp,
                        VecX* R, SpMat* J) const {
  const int nel = mesh_->n_ele();
  const auto u = uhat.head(N_);
  const Vec2 lambda = uhat.segment<2>(N_);
  const auto mu = uhat.tail(2 * m_);

  std::vector<ElementResult> results(nel);
  std::vector<char> bad(nel, 0);
  ElementOptions opt{J != nullptr, linearInterp};
  par_for(nel, threads_, [&](std::int64_t e) {
    ElemVec ue;
    const auto& nodes = kin_[e].nodes;
    for (int a = 0; a < 4; ++a) ue.segment<2>(2 * a) = u.segment<2>(2 * nodes[a]);
    try {
      results[e] = element_force(kin_[e], ue, rho1[e], rho2[e], ip, phases_, opt);
    } catch (const NonPhysicalState&) {
      bad[e] = 1;
    }
  });
  for (int e = 0; e < nel; ++e)
    if (bad[e]) throw NonPhysicalState("det F <= 0 in element assembly");

  if (R) {
    R->setZero(size());
    for (int e = 0; e < nel; ++e) {
      const auto& nodes = kin_[e].nodes;
      for (int a = 0; a < 4; ++a)
        R->segment<2>(2 * nodes[a]) += results[e].f.segment<2>(2 * a);
    }
    R->head(N_) -= M1_.transpose() * lambda + M2_.transpose() * mu;
    R->segment<2>(N_) = -(M1_ * u);
    R->tail(2 * m_) = -(M2_ * u) + LM_ * (vec4(Fbar) - vec4(Mat2::Identity()));
  }

  if (J) {
    std::vector<Triplet> trips(64 * size_t(nel) + constraintTriplets_.size());
    par_for(nel, threads_, [&](std::int64_t e) {
      const auto& nodes = kin_[e].nodes;
      size_t slot = 64 * size_t(e);
      for (int a = 0; a < 4; ++a)
        for (int i = 0; i < 2; ++i)
          for (int b = 0; b < 4; ++b)
            for (int j = 0; j < 2; ++j)
              trips[slot++] = Triplet(2 * nodes[a] + i, 2 * nodes[b] + j,
                                      results[e].k(2 * a + i, 2 * b + j));
    });
    std::copy(constraintTriplets_.begin(), constraintTriplets_.end(),
              trips.begin() + 64 * size_t(nel));
    J->resize(size(), size());
    J->setFromTriplets(trips.begin(), trips.end());
  }
}

SpMat FeSystem::initial_jacobian(const VecX& rho1, const VecX& rho2,
                                 const InterpolationParams& stiffnessParams) const {
  SpMat J;
  VecX uhat = VecX::Zero(size());
  assemble(uhat, Mat2::Identity(), rho1, rho2, stiffnessParams, false, nullptr, &J);
  return J;
}

Mat2 FeSystem::homogenized_stress(const ConstrainedSolution& sol) const {
  const VecX mu = sol.uhat.tail(2 * m_);
  return mat2(Vec4(LM_.transpose() * mu) / mesh_->V);
}

VecX FeSystem::lhat_column(int i) const {
  VecX col = VecX::Zero(size());
  col.tail(2 * m_) = LM_.col(i);
  return col;
}

Mat4 FeSystem::homogenized_moduli(const FactoredJacobian& fac) const {
  Mat4 A;
  for (int i = 0; i < 4; ++i) {
    const VecX z = fac.solve(lhat_column(i));
    for (int j = 0; j < 4; ++j)
      A(j, i) = -(LM_.col(j).dot(z.tail(2 * m_))) / mesh_->V;
  }
  return A;
}

Mat2 FeSystem::average_effective_stress(const VecX& uhat, const VecX& rho1,
                                        const VecX& rho2,
                                        const InterpolationParams& ip) const {
  const auto u = uhat.head(N_);
  Mat2 acc = Mat2::Zero();
  for (int e = 0; e < mesh_->n_ele(); ++e) {
    ElemVec ue;
    for (int a = 0; a < 4; ++a) ue.segment<2>(2 * a) = u.segment<2>(2 * kin_[e].nodes[a]);
    acc += element_effective_stress_integral(kin_[e], ue, rho1[e], rho2[e], ip, phases_);
  }
  return acc / mesh_->V;
}

Mat2 FeSystem::average_deformation_gradient(const VecX& uhat) const {
  const auto u = uhat.head(N_);
  Mat2 acc = Mat2::Zero();
  for (int e = 0; e < mesh_->n_ele(); ++e) {
    ElemVec ue;
    for (int a = 0; a < 4; ++a) ue.segment<2>(2 * a) = u.segment<2>(2 * kin_[e].nodes[a]);
    acc += element_gradu_integral(kin_[e], ue);
  }
  return Mat2::Identity() + acc / mesh_->V;
}

NewtonReport newton_solve(const FeSystem& sys, const VecX& rho1, const VecX& rho2,
                          const InterpolationParams& ip, const Mat2& Fbar, VecX& uhat,
                          const SolverSettings& settings, NewtonWorkspace* ws) {
  NewtonReport rep;
  NewtonWorkspace local;
  if (!ws) ws = &local;

  VecX x = uhat;
  VecX R;
  try {
    sys.assemble(x, Fbar, rho1, rho2, ip, true, &R, nullptr);
  } catch (const NonPhysicalState&) {
    rep.nonPhysical = true;
    return rep;
  }

  double e0 = -1.0, ePrev = -1.0;
  int sinceRefresh = ws->valid ? 0 : 1000;
  for (int it = 0; it < settings.maxNewtonIters; ++it) {
    const bool refresh = settings.exactNewton || !ws->valid ||
                         (ePrev > 0.0 && rep.energyHistory.size() >= 2 &&
                          rep.energyHistory.back() >
                              0.25 * rep.energyHistory[rep.energyHistory.size() - 2]) ||
                         sinceRefresh >= 8;
    if (refresh) {
      SpMat J;
      try {
        sys.assemble(x, Fbar, rho1, rho2, ip, true, nullptr, &J);
      } catch (const NonPhysicalState&) {
        rep.nonPhysical = true;
        return rep;
      }
      try {
        sys.factor(J, ws->fac);
      } catch (const SolveFailure&) {
        ws->valid = false;
        return rep;  // singular tangent: treat as step failure
      }
      ws->valid = true;
      ++rep.factorizations;
      sinceRefresh = 0;
    }
    const VecX du = ws->fac.solve(-R);
    const double e = std::abs(du.dot(R));
    rep.energyHistory.push_back(e);
    if (e0 < 0.0) e0 = e;
    x += du;
    try {
      sys.assemble(x, Fbar, rho1, rho2, ip, true, &R, nullptr);
    } catch (const NonPhysicalState&) {
      rep.nonPhysical = true;
      return rep;
    }
    rep.iterations = it + 1;
    rep.residualEnergy = e;
    ++sinceRefresh;
    ePrev = e;
    if (e <= settings.energyTol * std::max(1.0, e0)) {
      // polish: a few more cheap chord steps push the endpoint well past
      // the criterion, matching the exact-Newton endpoint quality
      double ep = e;
      for (int extra = 0; extra < 4 && ep > 1e-5 * settings.energyTol * std::max(1.0, e0);
           ++extra) {
        const VecX dup = ws->fac.solve(-R);
        const double en = std::abs(dup.dot(R));
        if (en >= ep) break;
        const VecX xTrial = x + dup;
        try {
          sys.assemble(xTrial, Fbar, rho1, rho2, ip, true, &R, nullptr);
        } catch (const NonPhysicalState&) {
          break;  // keep the already-converged iterate
        }
        x = xTrial;
        ep = en;
        rep.residualEnergy = en;
        ++rep.iterations;
      }
      rep.converged = true;
      uhat = x;
      return rep;
    }
    if (e > 1e8 * std::max(1.0, e0)) return rep;  // diverging
  }
  return rep;
}

SolveResult solve_rve(const FeSystem& sys, const VecX& rho1, const VecX& rho2,
                      InterpolationParams ip, const Mat2& FbarTarget,
                      const SolverSettings& settings, const ConstrainedSolution* warmStart,
                      double rampScale, std::vector<RecordedSubstep>* trail,
                      NewtonWorkspace* ws) {
  NewtonWorkspace localWs;
  if (!ws) ws = &localWs;
  const Mat2 F0 = warmStart ? warmStart->Fbar : Mat2::Identity();
  const VecX x0 =
      warmStart ? warmStart->uhat : VecX(VecX::Zero(sys.size()));
  if (FbarTarget.determinant() <= 0.0)
    throw ConfigError("target macroscopic deformation gradient has det <= 0");

  // Ratios are fractions of the ramp; rampScale < 1 means this ramp is a
  // slice of a longer load path and the bounds apply to the full path.
  const double dtInit = std::min(1.0, settings.initialLoadRatio / rampScale);
  const double dtMax = std::min(1.0, settings.maxLoadRatio / rampScale);
  const double dtMin = settings.minLoadRatio / rampScale;

  SolveResult out;
  for (int escalation = 0; escalation <= settings.maxCUpdates; ++escalation) {
    VecX x = x0;
    double t = 0.0, dt = dtInit;
    bool failed = false;
    int accepted = 0;
    if (trail) trail->clear();
    ConstrainedSolution cur;
    while (t < 1.0 - 1e-14) {
      const double tTrial = std::min(1.0, t + dt);
      const Mat2 Ftrial = F0 + tTrial * (FbarTarget - F0);
      VecX xi = x;
      const NewtonReport rep = newton_solve(sys, rho1, rho2, ip, Ftrial, xi, settings, ws);
      out.newtonFactorizations += rep.factorizations;
      if (!settings.convergenceLogPath.empty()) {
        if (std::FILE* lf = std::fopen(settings.convergenceLogPath.c_str(), "a")) {
          std::fprintf(lf, "%.17g,%d,%.17g,%d\n", tTrial, rep.iterations,
                       rep.residualEnergy, rep.converged ? 1 : 0);
          std::fclose(lf);
        }
      }
      if (rep.converged) {
        x = xi;
        t = tTrial;
        ++accepted;
        if (trail) {
          cur.uhat = x;
          cur.Fbar = Ftrial;
          cur.residualEnergy = rep.residualEnergy;
          cur.newtonIters = rep.iterations;
          trail->push_back({t, cur});
        }
        dt = std::min(dtMax, 1.5 * dt);
      } else {
        ws->valid = false;  // stale tangent after a rejected trial
        dt *= 0.5;
        if (dt < dtMin) {
          failed = true;
          break;
        }
      }
    }
    if (!failed) {
      out.sol.uhat = x;
      out.sol.Fbar = FbarTarget;
      out.ipUsed = ip;
      out.acceptedSteps = accepted;
      // Backfill the substep trail on an even grid when adaptivity took
      // fewer than the required number of recorded states.
      if (trail && accepted < settings.minRecordedSteps && rampScale >= 1.0) {
        trail->clear();
        VecX xr = x0;
        for (int k = 1; k <= settings.minRecordedSteps; ++k) {
          const double tk = double(k) / settings.minRecordedSteps;
          const Mat2 Fk = F0 + tk * (FbarTarget - F0);
          NewtonReport rep = newton_solve(sys, rho1, rho2, ip, Fk, xr, settings, ws);
          out.newtonFactorizations += rep.factorizations;
          if (!rep.converged)
            throw SolveFailure("re-solve on the even recording grid failed");
          ConstrainedSolution s;
          s.uhat = xr;
          s.Fbar = Fk;
          s.residualEnergy = rep.residualEnergy;
          s.newtonIters = rep.iterations;
          trail->push_back({tk, s});
        }
        out.sol.uhat = xr;
      }
      return out;
    }
    ip.c += ip.dc;  // linear-energy cutoff update, then a full re-solve
    ws->valid = false;
  }
  throw SolveFailure("load stepping exhausted step cuts and c-updates");
}

}  // namespace auxcell
