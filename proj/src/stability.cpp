#include "auxcell/stability.hpp"

#include <cmath>
#include <map>
#include <random>

#include "auxcell/errors.hpp"
#include "auxcell/parallel.hpp"

namespace auxcell {

using Complex = std::complex<double>;
using MatXc = Eigen::MatrixXcd;
using VecXc = Eigen::VectorXcd;

std::vector<Vec2> BlochGrid::samples() const {
  std::vector<Vec2> out;
  std::map<std::pair<long long, long long>, bool> seen;
  auto push = [&](double k1, double k2) {
    const std::pair<long long, long long> key{std::llround(k1 * 4e9),
                                              std::llround(k2 * 4e9)};
    if (seen.emplace(key, true).second) out.emplace_back(k1, k2);
  };
  push(0.0, 0.0);
  for (int i = 0; i < base; ++i)
    for (int j = 0; j < base; ++j) push(double(i) / base, double(j) / base);
  auto box = [&](double lo1, double hi1, double lo2, double hi2) {
    for (int i = 0; i < refine; ++i)
      for (int j = 0; j < refine; ++j)
        push(lo1 + (hi1 - lo1) * (i + 0.5) / refine,
             lo2 + (hi2 - lo2) * (j + 0.5) / refine);
  };
  box(0.0, band, band, 1.0);
  box(band, 1.0, 0.0, band);
  box(0.0, band, 0.0, band);
  return out;
}

StabilityOperator::StabilityOperator(const FeSystem& sys, const VecX& rho1,
                                     const VecX& rho2, const InterpolationParams& ip,
                                     const VecX& uhat)
    : sys_(&sys) {
  const RveMesh& mesh = sys.mesh();
  const int nel = mesh.n_ele();
  const int N = sys.N();
  const auto u = uhat.head(N);

  std::vector<ElemMat> ks(nel), gs(nel);
  std::vector<char> bad(nel, 0);
  par_for(nel, sys.threads(), [&](std::int64_t e) {
    const auto& kin = sys.kinematics()[e];
    ElemVec ue;
    for (int a = 0; a < 4; ++a) ue.segment<2>(2 * a) = u.segment<2>(2 * kin.nodes[a]);
    try {
      ks[e] = element_stability_matrix(kin, ue, rho1[e], rho2[e], ip, sys.phases());
      gs[e] = element_gradient_gram(kin);
    } catch (const NonPhysicalState&) {
      bad[e] = 1;
    }
  });
  for (int e = 0; e < nel; ++e)
    if (bad[e]) throw NonPhysicalState("det F <= 0 while assembling the stability pencil");

  std::vector<Triplet> tk, tg;
  tk.reserve(64 * nel);
  tg.reserve(64 * nel);
  for (int e = 0; e < nel; ++e) {
    const auto& nodes = sys.kinematics()[e].nodes;
    for (int a = 0; a < 4; ++a)
      for (int i = 0; i < 2; ++i)
        for (int b = 0; b < 4; ++b)
          for (int j = 0; j < 2; ++j) {
            tk.emplace_back(2 * nodes[a] + i, 2 * nodes[b] + j, ks[e](2 * a + i, 2 * b + j));
            tg.emplace_back(2 * nodes[a] + i, 2 * nodes[b] + j, gs[e](2 * a + i, 2 * b + j));
          }
  }
  K_.resize(N, N);
  G_.resize(N, N);
  K_.setFromTriplets(tk.begin(), tk.end());
  G_.setFromTriplets(tg.begin(), tg.end());

  Mat2 A;
  A.col(0) = mesh.lattice.a1;
  A.col(1) = mesh.lattice.a2;
  const Mat2 Ainv = A.inverse();
  pairShift_.reserve(mesh.n_pairs());
  for (const auto& p : mesh.pairs) {
    const Vec2 c = Ainv * p.L;
    pairShift_.push_back({int(std::lround(c.x())), int(std::lround(c.y()))});
  }
}

namespace {

// Bloch reduction: dependent (positive-side) node dofs carry the phase
// factor exp(i k . L_q) of their master.
struct Reduction {
  SpMatC T;
  int nRed = 0;
  std::vector<int> indepNodes;
};

Reduction build_reduction(const RveMesh& mesh,
                          const std::vector<std::array<int, 2>>& shifts, const Vec2& k) {
  const int nn = mesh.n_nodes();
  std::vector<int> masterOf(nn, -1);
  std::vector<Complex> phase(nn, Complex(1.0, 0.0));
  for (size_t q = 0; q < mesh.pairs.size(); ++q) {
    const auto& p = mesh.pairs[q];
    masterOf[p.pos] = p.neg;
    const double arg = 2.0 * std::numbers::pi * (k.x() * shifts[q][0] + k.y() * shifts[q][1]);
    phase[p.pos] = Complex(std::cos(arg), std::sin(arg));
  }
  Reduction red;
  std::vector<int> col(nn, -1);
  for (int i = 0; i < nn; ++i)
    if (masterOf[i] < 0) {
      col[i] = 2 * int(red.indepNodes.size());
      red.indepNodes.push_back(i);
    }
  red.nRed = 2 * int(red.indepNodes.size());
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(2 * nn);
  for (int i = 0; i < nn; ++i) {
    const int m = masterOf[i] < 0 ? i : masterOf[i];
    const Complex ph = masterOf[i] < 0 ? Complex(1, 0) : phase[i];
    trips.emplace_back(2 * i, col[m], ph);
    trips.emplace_back(2 * i + 1, col[m] + 1, ph);
  }
  red.T.resize(2 * nn, red.nRed);
  red.T.setFromTriplets(trips.begin(), trips.end());
  return red;
}

double smallest_eig_dense(const MatXc& K, const MatXc& G) {
  Eigen::GeneralizedSelfAdjointEigenSolver<MatXc> es(K, G, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw SolveFailure("dense generalized eigensolve failed");
  return es.eigenvalues().minCoeff();
}

// Spectral-transform Lanczos for the eigenvalue of the Hermitian pencil
// (K, G) nearest the shift (G positive definite): the operator
// (K - sigma G)^-1 G is G-self-adjoint, so a real symmetric tridiagonal
// Rayleigh quotient accumulates in exact arithmetic. Full
// reorthogonalization in the G inner product; deterministic start vector.
// Targets the region around sigma = 0 where the stability indicator
// crosses; reported value is the minimum over the Ritz spectrum.
bool smallest_eig_shift_invert(const SpMatC& K, const SpMatC& G, double& out) {
  const int n = int(K.rows());
  const double kscale = K.coeffs().cwiseAbs().maxCoeff();

  Eigen::SparseLU<SpMatC> lu;
  double sigma = 0.0;
  for (int attempt = 0; attempt < 3; ++attempt) {
    SpMatC A = K;
    if (sigma != 0.0) A -= Complex(sigma, 0.0) * G;
    lu.compute(A);
    if (lu.info() == Eigen::Success) break;
    sigma = (attempt == 0) ? -1e-8 * kscale : sigma * 1e3;
    if (attempt == 2) return false;
  }

  const int mMax = std::min(n, 160);
  MatXc Q(n, mMax + 1);
  std::vector<double> alpha, beta;

  std::mt19937 rng(20240901);
  std::normal_distribution<double> nd;
  VecXc q(n);
  for (int i = 0; i < n; ++i) q[i] = Complex(nd(rng), nd(rng));
  VecXc Gq = G * q;
  q /= std::sqrt(std::real(q.dot(Gq)));
  Q.col(0) = q;

  auto evaluate = [&](int m, double& lambdaMin, double& errMin) {
    Eigen::SelfAdjointEigenSolver<MatX> es;
    MatX T = MatX::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      T(i, i) = alpha[i];
      if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    es.compute(T);
    lambdaMin = std::numeric_limits<double>::max();
    errMin = std::numeric_limits<double>::max();
    for (int i = 0; i < m; ++i) {
      const double th = es.eigenvalues()[i];
      if (std::abs(th) < 1e-300) continue;
      const double lam = sigma + 1.0 / th;
      const double resTheta = (m <= int(beta.size()) ? beta[m - 1] : 0.0) *
                              std::abs(es.eigenvectors()(m - 1, i));
      const double resLambda = resTheta / (th * th);
      if (lam < lambdaMin) {
        lambdaMin = lam;
        errMin = resLambda;
      }
    }
    return lambdaMin != std::numeric_limits<double>::max();
  };

  for (int j = 0; j < mMax; ++j) {
    VecXc w = lu.solve(VecXc(G * Q.col(j)));
    const double a = std::real(Q.col(j).dot(G * w));
    alpha.push_back(a);
    w -= a * Q.col(j);
    if (j > 0) w -= beta[j - 1] * Q.col(j - 1);
    // full reorthogonalization against the Krylov basis (G inner product)
    const VecXc Gw = G * w;
    const VecXc coeff = Q.leftCols(j + 1).adjoint() * Gw;
    w -= Q.leftCols(j + 1) * coeff;
    const double b = std::sqrt(std::max(0.0, std::real(w.dot(G * w))));
    beta.push_back(b);
    if (b < 1e-14) {  // invariant subspace captured
      double lam, err;
      if (evaluate(j + 1, lam, err)) {
        out = lam;
        return true;
      }
      return false;
    }
    Q.col(j + 1) = w / b;

    if (j >= 10 && (j % 5 == 0 || j == mMax - 1)) {
      double lam, err;
      if (evaluate(j + 1, lam, err) &&
          err <= 1e-9 * std::max(1.0, std::abs(lam))) {
        out = lam;
        return true;
      }
    }
  }
  return false;
}

}  // namespace

double StabilityOperator::bloch_beta(const Vec2& k, EigMethod method) const {
  const RveMesh& mesh = sys_->mesh();
  const bool atZero = k.norm() == 0.0;
  const Reduction red = build_reduction(mesh, pairShift_, k);

  SpMatC Kc = K_.cast<Complex>();
  SpMatC Gc = G_.cast<Complex>();
  SpMatC Kr = red.T.adjoint() * Kc * red.T;
  SpMatC Gr = red.T.adjoint() * Gc * red.T;

  // Hermiticity guard on the assembled pencil
  {
    const double asym = (SpMatC(Kr - SpMatC(Kr.adjoint()))).coeffs().cwiseAbs().sum();
    const double scale = Kr.coeffs().cwiseAbs().sum();
    if (asym > 1e-10 * scale)
      throw SolveFailure("Bloch pencil lost Hermiticity beyond tolerance");
    Kr = 0.5 * (Kr + SpMatC(Kr.adjoint()));
    Gr = 0.5 * (Gr + SpMatC(Gr.adjoint()));
  }

  if (atZero) {
    // real periodic problem: project out the two rigid translations
    const int nr = red.nRed;
    MatX Kd = MatX(Kr.real());
    MatX Gd = MatX(Gr.real());
    MatX Tt = MatX::Zero(nr, 2);
    for (int i = 0; i < nr / 2; ++i) {
      Tt(2 * i, 0) = 1.0;
      Tt(2 * i + 1, 1) = 1.0;
    }
    // orthonormal complement of the translations
    Eigen::HouseholderQR<MatX> qr(Tt);
    MatX Qfull = qr.householderQ() * MatX::Identity(nr, nr);
    MatX Z = Qfull.rightCols(nr - 2);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatX> es(
        Z.transpose() * Kd * Z, Z.transpose() * Gd * Z, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) throw SolveFailure("k = 0 eigensolve failed");
    return es.eigenvalues().minCoeff();
  }

  double beta = 0.0;
  const bool tryFast = method == EigMethod::ShiftInvert ||
                       (method == EigMethod::Auto && red.nRed > 150);
  if (tryFast && smallest_eig_shift_invert(Kr, Gr, beta)) return beta;
  if (red.nRed > 2000)
    throw SolveFailure("Bloch eigensolve did not converge and the dense fallback is too large");
  return smallest_eig_dense(MatXc(Kr), MatXc(Gr));
}

Mat4 StabilityOperator::macro_moduli() const {
  const RveMesh& mesh = sys_->mesh();
  SpMat M1, M2;
  constraint_matrices(mesh, M1, M2);
  const int N = sys_->N();
  const int m = mesh.n_pairs();
  const int size = N + 2 + 2 * m;

  std::vector<Triplet> trips;
  for (int c = 0; c < K_.outerSize(); ++c)
    for (SpMat::InnerIterator it(K_, c); it; ++it)
      trips.emplace_back(int(it.row()), int(it.col()), it.value());
  auto addBlock = [&](const SpMat& M, int rowOff) {
    for (int c = 0; c < M.outerSize(); ++c)
      for (SpMat::InnerIterator it(M, c); it; ++it) {
        trips.emplace_back(rowOff + int(it.row()), int(it.col()), -it.value());
        trips.emplace_back(int(it.col()), rowOff + int(it.row()), -it.value());
      }
  };
  addBlock(M1, N);
  addBlock(M2, N + 2);
  SpMat J(size, size);
  J.setFromTriplets(trips.begin(), trips.end());

  FactoredJacobian fac;
  sys_->factor(J, fac);
  Mat4 A;
  const MatX& LM = sys_->LM();
  for (int i = 0; i < 4; ++i) {
    const VecX z = fac.solve(sys_->lhat_column(i));
    for (int j = 0; j < 4; ++j) A(j, i) = -(LM.col(j).dot(z.tail(2 * m))) / mesh.V;
  }
  return A;
}

namespace {

// distance of a reciprocal-coordinate sample from the origin, wrapped
// into the first zone and measured in reciprocal length
double k_norm(const Vec2& k, const LatticeBasis& lat) {
  auto wrap = [](double v) {
    v -= std::floor(v);
    return v > 0.5 ? v - 1.0 : v;
  };
  const Vec2 kk = wrap(k.x()) * lat.b1 + wrap(k.y()) * lat.b2;
  return kk.norm();
}

}  // namespace

BlochResult bz_sweep(const StabilityOperator& op, const BlochGrid& grid, int threads) {
  const auto samples = grid.samples();
  BlochResult out;
  out.points.resize(samples.size());

  par_for(std::int64_t(samples.size()), threads, [&](std::int64_t i) {
    BlochPoint& pt = out.points[i];
    pt.k = samples[i];
    try {
      pt.beta = op.bloch_beta(pt.k);
      pt.ok = true;
    } catch (const std::exception&) {
      pt.ok = false;  // per-point failures recorded, sweep continues
    }
  });

  const LatticeBasis& lat = op.system().mesh().lattice;
  bool haveMin = false, haveNear = false;
  double nearDist = 0.0;
  for (const auto& pt : out.points) {
    if (!pt.ok) continue;
    if (pt.k.norm() == 0.0) {
      out.betaZero = pt.beta;
      continue;
    }
    if (!haveMin || pt.beta < out.minBeta) {
      out.minBeta = pt.beta;
      out.minK = pt.k;
      haveMin = true;
    }
    const double d = k_norm(pt.k, lat);
    if (!haveNear || d < nearDist) {
      nearDist = d;
      out.betaNearZero = pt.beta;
      out.nearZeroK = pt.k;
      haveNear = true;
    }
  }
  if (!haveMin) throw SolveFailure("every Bloch sample failed");
  return out;
}

RankOneResult rank_one_indicator(const Mat4& Abar, int angleSteps) {
  RankOneResult out;
  out.angleSteps = angleSteps;
  out.B_alpha.resize(angleSteps);
  auto idx = [](int i, int j) { return i + 2 * j; };
  bool first = true;
  for (int a = 0; a < angleSteps; ++a) {
    const double alpha = a * std::numbers::pi / angleSteps;
    const Vec2 M(std::cos(alpha), std::sin(alpha));
    Mat2 Q;
    for (int i = 0; i < 2; ++i)
      for (int kk = 0; kk < 2; ++kk) {
        double acc = 0.0;
        for (int j = 0; j < 2; ++j)
          for (int l = 0; l < 2; ++l) acc += Abar(idx(i, j), idx(kk, l)) * M[j] * M[l];
        Q(i, kk) = acc;
      }
    double bestA = 0.0, bestPhi = 0.0;
    bool firstPhi = true;
    for (int p = 0; p < angleSteps; ++p) {
      const double phi = p * std::numbers::pi / angleSteps;
      const Vec2 m(std::cos(phi), std::sin(phi));
      const double v = m.dot(Q * m);
      if (firstPhi || v < bestA) {
        bestA = v;
        bestPhi = phi;
        firstPhi = false;
      }
    }
    out.B_alpha[a] = bestA;
    if (first || bestA < out.B) {
      out.B = bestA;
      out.alphaMin = alpha;
      out.phiMin = bestPhi;
      first = false;
    }
  }
  return out;
}

VecX threshold_density(const VecX& rho, double threshold) {
  VecX out(rho.size());
  for (int i = 0; i < rho.size(); ++i) out[i] = rho[i] >= threshold ? 1.0 : 0.0;
  return out;
}

StabilityReport stability_scan(const FeSystem& sys, const VecX& rho1, const VecX& rho2,
                               const InterpolationParams& ip, const MacroLoadCase& loadCase,
                               const BlochGrid& grid, const SolverSettings& settings,
                               bool sweepEveryCheckpoint, int angleSteps) {
  StabilityReport report;
  const double tol = outer_tolerance(loadCase);
  const int n = loadCase.n;

  ConstrainedSolution state;
  state.uhat = VecX::Zero(sys.size());
  state.Fbar = Mat2::Identity();
  double lambda1 = 1.0;
  NewtonWorkspace ws;

  for (int kstep = 1; kstep <= n; ++kstep) {
    const double lambda2 = 1.0 + double(kstep) / n * (loadCase.lambda2Target - 1.0);
    bool accepted = false;
    Mat2 Fbar;
    try {
      double Hprev = 0.0;
      for (int oi = 0; oi < 30; ++oi) {
        Fbar = macro_F(lambda1, lambda2, loadCase.theta);
        SolveResult res =
            solve_rve(sys, rho1, rho2, ip, Fbar, settings, &state, 1.0 / n, nullptr, &ws);
        state = res.sol;
        const Mat2 Pbar = sys.homogenized_stress(state);
        const double H = rotated_axial_stress(Pbar, loadCase.theta);
        if (std::abs(H) <= tol) {
          accepted = true;
          break;
        }
        if (!ws.valid) {
          SpMat J;
          sys.assemble(state.uhat, Fbar, rho1, rho2, ip, true, nullptr, &J);
          sys.factor(J, ws.fac);
          ws.valid = true;
        }
        const Mat4 Abar = sys.homogenized_moduli(ws.fac);
        double dl = -H / outer_jacobian(Abar, loadCase.theta);
        if (oi > 0 && H * Hprev < 0.0) dl *= 0.5;
        Hprev = H;
        lambda1 += dl;
      }
    } catch (const std::exception&) {
      accepted = false;
    }
    if (!accepted) {
      report.truncated = true;
      break;
    }

    StabilityCheckpoint cp;
    cp.lambda2 = lambda2;
    cp.lambda1 = lambda1;

    StabilityOperator op(sys, rho1, rho2, ip, state.uhat);
    const auto r1 = rank_one_indicator(op.macro_moduli(), angleSteps);
    cp.B = r1.B;
    cp.phiMin = r1.phiMin;
    cp.alphaMin = r1.alphaMin;

    if (sweepEveryCheckpoint) {
      const BlochResult bz = bz_sweep(op, grid, sys.threads());
      cp.minBeta = bz.minBeta;
      cp.minK = bz.minK;
      cp.betaZero = bz.betaZero;
      cp.betaNearZero = bz.betaNearZero;
      cp.swept = true;
    } else {
      cp.betaZero = op.bloch_beta(Vec2::Zero());
      // probe the long-wavelength limit along a few directions
      const double kr = 0.5 * grid.band / grid.refine;
      double best = 0.0;
      bool first = true;
      for (int d = 0; d < 8; ++d) {
        const double ang = d * std::numbers::pi / 8.0;
        Vec2 kk(kr * std::cos(ang), kr * std::sin(ang));
        kk.x() -= std::floor(kk.x());
        kk.y() -= std::floor(kk.y());
        const double b = op.bloch_beta(kk);
        if (first || b < best) {
          best = b;
          first = false;
        }
      }
      cp.betaNearZero = best;
      cp.minBeta = std::min(best, cp.betaZero);
      cp.swept = false;
    }

    const int i = int(report.checkpoints.size());
    if (report.firstMacroLoss < 0 && cp.B <= 0.0) report.firstMacroLoss = i;
    if (report.firstMicroLoss < 0 && cp.swept && cp.minBeta <= 0.0)
      report.firstMicroLoss = i;
    if (report.firstLongWaveLoss < 0 && cp.betaNearZero <= 0.0)
      report.firstLongWaveLoss = i;
    report.checkpoints.push_back(cp);
  }
  return report;
}

}  // namespace auxcell
