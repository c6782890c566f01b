#include "auxcell/tile.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "auxcell/errors.hpp"
#include "auxcell/parallel.hpp"

namespace auxcell {

TiledModel build_tiling(const RveMesh& cell, const VecX& rho1, const VecX& rho2, int N) {
  if (cell.shape != CellShape::Square)
    throw ConfigError("the tile test supports square unit cells");
  if (N < 2 || N > 6) throw ConfigError("tile count must be in [2, 6]");

  const double tol = 1e-9 * cell.cellSize;
  TiledModel tm;
  std::map<std::pair<long long, long long>, int> index;
  auto addNode = [&](const Vec2& p) {
    const std::pair<long long, long long> key{std::llround(p.x() / tol),
                                              std::llround(p.y() / tol)};
    auto [it, inserted] = index.try_emplace(key, int(tm.X.size()));
    if (inserted) tm.X.push_back(p);
    return it->second;
  };

  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) {
      const Vec2 shift = double(i) * cell.lattice.a1 + double(j) * cell.lattice.a2;
      std::vector<int> map(cell.n_nodes());
      for (int n = 0; n < cell.n_nodes(); ++n) map[n] = addNode(cell.X[n] + shift);
      for (int e = 0; e < cell.n_ele(); ++e) {
        const auto& q = cell.conn[e];
        tm.conn.push_back({map[q[0]], map[q[1]], map[q[2]], map[q[3]]});
        tm.rho1.push_back(rho1[e]);
        tm.rho2.push_back(rho2[e]);
      }
    }
  tm.width = N * cell.lattice.a1.x();
  tm.height = N * cell.lattice.a2.y();
  return tm;
}

namespace {

struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
  int find(int i) {
    while (p[i] != i) i = p[i] = p[p[i]];
    return i;
  }
  void unite(int a, int b) { p[find(a)] = find(b); }
};

// solid elements must form one component touching both grip bands
void check_connectivity(const TiledModel& tm, double ymin, double ymax, double tol) {
  const int nel = int(tm.conn.size());
  std::map<std::pair<int, int>, int> edgeOwner;
  UnionFind uf(nel);
  for (int e = 0; e < nel; ++e) {
    if (tm.rho1[e] < 0.5) continue;
    for (int k = 0; k < 4; ++k) {
      int a = tm.conn[e][k], b = tm.conn[e][(k + 1) % 4];
      if (a > b) std::swap(a, b);
      auto [it, inserted] = edgeOwner.try_emplace({a, b}, e);
      if (!inserted) uf.unite(e, it->second);
    }
  }
  int topComp = -1, botComp = -1;
  std::map<int, int> comps;
  for (int e = 0; e < nel; ++e) {
    if (tm.rho1[e] < 0.5) continue;
    const int c = uf.find(e);
    ++comps[c];
    for (int k = 0; k < 4; ++k) {
      const double y = tm.X[tm.conn[e][k]].y();
      if (std::abs(y - ymax) < tol) topComp = topComp < 0 || topComp == c ? c : -2;
      if (std::abs(y - ymin) < tol) botComp = botComp < 0 || botComp == c ? c : -2;
    }
  }
  if (comps.empty()) throw ValidationFailure("thresholded design has no solid material");
  if (topComp < 0 || botComp < 0 || topComp != botComp)
    throw ValidationFailure(
        "thresholded design is disconnected between the loading grips");
}

struct DirichletProblem {
  const TiledModel& tm;
  const PhaseSet& phases;
  InterpolationParams ip;  // by value: the cutoff may escalate between ramps
  int threads;
  std::vector<ElementKinematics> kin;
  std::vector<int> freeIndex;   // dof -> compact index or -1
  std::vector<int> prescribed;  // dof list
  VecX prescribedUnit;          // value per prescribed dof at ramp t = 1
  int nFree = 0;

  VecX full(const VecX& uf, double t) const {
    VecX u = VecX::Zero(2 * tm.X.size());
    for (size_t d = 0; d < freeIndex.size(); ++d)
      if (freeIndex[d] >= 0) u[d] = uf[freeIndex[d]];
    for (size_t i = 0; i < prescribed.size(); ++i)
      u[prescribed[i]] = t * prescribedUnit[i];
    return u;
  }

  void assemble(const VecX& u, VecX* R, SpMat* K) const {
    const int nel = int(tm.conn.size());
    std::vector<ElementResult> results(nel);
    std::vector<char> bad(nel, 0);
    ElementOptions opt{K != nullptr, true};
    par_for(nel, threads, [&](std::int64_t e) {
      ElemVec ue;
      for (int a = 0; a < 4; ++a) ue.segment<2>(2 * a) = u.segment<2>(2 * tm.conn[e][a]);
      try {
        results[e] = element_force(kin[e], ue, tm.rho1[e], tm.rho2[e], ip, phases, opt);
      } catch (const NonPhysicalState&) {
        bad[e] = 1;
      }
    });
    for (int e = 0; e < nel; ++e)
      if (bad[e]) throw NonPhysicalState("det F <= 0 in the tiled analysis");

    if (R) {
      R->setZero(nFree);
      for (int e = 0; e < nel; ++e)
        for (int a = 0; a < 4; ++a)
          for (int d = 0; d < 2; ++d) {
            const int gi = freeIndex[2 * tm.conn[e][a] + d];
            if (gi >= 0) (*R)[gi] += results[e].f[2 * a + d];
          }
    }
    if (K) {
      std::vector<Triplet> trips;
      trips.reserve(64 * nel);
      for (int e = 0; e < nel; ++e)
        for (int a = 0; a < 4; ++a)
          for (int i = 0; i < 2; ++i) {
            const int gi = freeIndex[2 * tm.conn[e][a] + i];
            if (gi < 0) continue;
            for (int b = 0; b < 4; ++b)
              for (int j = 0; j < 2; ++j) {
                const int gj = freeIndex[2 * tm.conn[e][b] + j];
                if (gj >= 0)
                  trips.emplace_back(gi, gj, results[e].k(2 * a + i, 2 * b + j));
              }
          }
      K->resize(nFree, nFree);
      K->setFromTriplets(trips.begin(), trips.end());
    }
  }
};

bool dirichlet_newton(const DirichletProblem& pb, double t, VecX& uf,
                      const SolverSettings& st) {
  VecX R;
  SpMat K;
  VecX u = pb.full(uf, t);
  try {
    pb.assemble(u, &R, &K);
  } catch (const NonPhysicalState&) {
    return false;
  }
  double e0 = -1.0;
  for (int it = 0; it < st.maxNewtonIters; ++it) {
    FactoredJacobian fac;
    try {
      fac.compute(K);
    } catch (const SolveFailure&) {
      return false;
    }
    const VecX du = fac.solve(-R);
    const double e = std::abs(du.dot(R));
    if (e0 < 0.0) e0 = e;
    uf += du;
    u = pb.full(uf, t);
    try {
      pb.assemble(u, &R, &K);
    } catch (const NonPhysicalState&) {
      return false;
    }
    if (e <= st.energyTol * std::max(1.0, e0)) return true;
    if (e > 1e8 * std::max(1.0, e0)) return false;
  }
  return false;
}

// mean of one displacement component over the nodes of the segment
// {x = coord, lo <= y <= hi} (normalAxis = 0) or {y = coord, lo <= x <= hi}
// (normalAxis = 1)
double line_mean(const TiledModel& tm, const VecX& u, int normalAxis, double coord,
                 double lo, double hi, int comp, double tol) {
  double acc = 0.0;
  int count = 0;
  for (size_t i = 0; i < tm.X.size(); ++i) {
    const Vec2& p = tm.X[i];
    const double at = normalAxis == 0 ? p.x() : p.y();
    const double along = normalAxis == 0 ? p.y() : p.x();
    if (std::abs(at - coord) < tol && along > lo - tol && along < hi + tol) {
      acc += u[2 * i + comp];
      ++count;
    }
  }
  if (count == 0) throw SolveFailure("no nodes found on a measurement line");
  return acc / count;
}

}  // namespace

TileResult tile_test(const RveMesh& cell, const VecX& rho1, const VecX& rho2,
                     const PhaseSet& phases, const InterpolationParams& ip, int N,
                     double strain, const SolverSettings& settings, int threads,
                     const std::string& vtkPath) {
  if (strain == 0.0) throw ConfigError("tile test requires a nonzero strain");
  if (N % 2 != 0) throw ConfigError("tile count must be even for a central 2x2 block");

  TiledModel tm = build_tiling(cell, rho1, rho2, N);
  const double tol = 1e-7 * cell.cellSize;

  double ymin = 1e300, ymax = -1e300, xmin = 1e300;
  for (const auto& p : tm.X) {
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
    xmin = std::min(xmin, p.x());
  }
  check_connectivity(tm, ymin, ymax, tol);

  DirichletProblem pb{tm, phases, ip, threads, {}, {}, {}, {}, 0};
  pb.kin.resize(tm.conn.size());
  {
    RveMesh shim;  // element_kinematics only reads X and conn
    shim.X = tm.X;
    shim.conn = tm.conn;
    for (size_t e = 0; e < tm.conn.size(); ++e)
      pb.kin[e] = element_kinematics(shim, int(e));
  }

  // grips: u_y on the bottom and top node rows; one bottom node pinned in x
  const int ndof = 2 * int(tm.X.size());
  std::vector<char> isPrescribed(ndof, 0);
  std::vector<double> value(ndof, 0.0);
  int pinNode = -1;
  double pinDist = 1e300;
  const double H = ymax - ymin;
  for (size_t i = 0; i < tm.X.size(); ++i) {
    if (std::abs(tm.X[i].y() - ymin) < tol) {
      isPrescribed[2 * i + 1] = 1;
      value[2 * i + 1] = 0.0;
      const double d = std::abs(tm.X[i].x() - (xmin + 0.5 * tm.width));
      if (d < pinDist) {
        pinDist = d;
        pinNode = int(i);
      }
    } else if (std::abs(tm.X[i].y() - ymax) < tol) {
      isPrescribed[2 * i + 1] = 1;
      value[2 * i + 1] = strain * H;
    }
  }
  isPrescribed[2 * pinNode] = 1;
  value[2 * pinNode] = 0.0;

  pb.freeIndex.assign(ndof, -1);
  for (int d = 0; d < ndof; ++d) {
    if (isPrescribed[d]) {
      pb.prescribed.push_back(d);
    } else {
      pb.freeIndex[d] = pb.nFree++;
    }
  }
  pb.prescribedUnit.resize(pb.prescribed.size());
  for (size_t i = 0; i < pb.prescribed.size(); ++i)
    pb.prescribedUnit[i] = value[pb.prescribed[i]];

  // adaptive displacement ramp with cutoff escalation on persistent failure
  VecX uf;
  bool done = false;
  for (int esc = 0; esc <= settings.maxCUpdates && !done; ++esc) {
    uf = VecX::Zero(pb.nFree);
    double t = 0.0, dt = settings.initialLoadRatio;
    bool failed = false;
    while (t < 1.0 - 1e-14) {
      const double tTrial = std::min(1.0, t + dt);
      VecX trial = uf;
      if (dirichlet_newton(pb, tTrial, trial, settings)) {
        uf = trial;
        t = tTrial;
        dt = std::min(settings.maxLoadRatio, 1.5 * dt);
      } else {
        dt *= 0.5;
        if (dt < settings.minLoadRatio) {
          failed = true;
          break;
        }
      }
    }
    if (!failed) {
      done = true;
    } else {
      pb.ip.c += pb.ip.dc;
    }
  }
  if (!done) throw SolveFailure("tiled analysis failed to reach the target strain");

  const VecX u = pb.full(uf, 1.0);

  // central 2x2 block edge lines
  const double cx = xmin, cy = ymin;
  const double L = cell.cellSize;
  const double x0 = cx + (N / 2 - 1) * L, x1 = cx + (N / 2 + 1) * L;
  const double y0 = cy + (N / 2 - 1) * L, y1 = cy + (N / 2 + 1) * L;
  const double mtol = 1e-7 * L;

  const double uxL = line_mean(tm, u, 0, x0, y0, y1, 0, mtol);
  const double uxR = line_mean(tm, u, 0, x1, y0, y1, 0, mtol);
  const double uyB = line_mean(tm, u, 1, y0, x0, x1, 1, mtol);
  const double uyT = line_mean(tm, u, 1, y1, x0, x1, 1, mtol);

  TileResult out;
  out.N = N;
  out.appliedStrain = strain;
  out.epsTrans = (uxR - uxL) / (x1 - x0);
  out.epsLong = (uyT - uyB) / (y1 - y0);
  if (out.epsLong == 0.0) throw SolveFailure("central block saw no axial strain");
  out.nuTiled = -out.epsTrans / out.epsLong;

  // single-cell homogenization at the strain the central block sees
  {
    FeSystem sys(cell, phases, threads);
    MacroLoadCase lc;
    lc.lambda2Target = 1.0 + out.epsLong;
    lc.theta = 0.0;  // lambda2 drives the y axis with P11 = 0, as in the tiling
    lc.n = std::max(5, int(std::ceil(std::abs(out.epsLong) / 0.01)));
    SolverSettings st = settings;
    auto rec = uniaxial_drive(sys, rho1, rho2, pb.ip, lc, st);
    out.nuHomogenized = rec.steps.back().nu;
  }
  out.relDeviation =
      std::abs(out.nuTiled - out.nuHomogenized) / std::max(1e-12, std::abs(out.nuHomogenized));

  if (!vtkPath.empty()) {
    RveMesh shim;
    shim.X = tm.X;
    shim.conn = tm.conn;
    shim.v_e.assign(tm.conn.size(), 0.0);
    shim.centroid.assign(tm.conn.size(), Vec2::Zero());
    shim.V = tm.width * tm.height;
    VecX r1(tm.rho1.size());
    for (size_t e = 0; e < tm.rho1.size(); ++e) r1[e] = tm.rho1[e];
    write_vtk(vtkPath, shim, {{"rho1", r1}}, &u);
  }
  return out;
}

}  // namespace auxcell
