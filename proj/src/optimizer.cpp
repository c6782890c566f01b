#include "auxcell/optimizer.hpp"

#include <cmath>
#include <sstream>

#include "auxcell/errors.hpp"
#include "auxcell/mma.hpp"

namespace auxcell {

InterpolationParams continuation_main(int iteration) {
  InterpolationParams ip;
  const int ramps = iteration / 20;
  ip.p_e = std::min(3.0, 1.0 + 0.1 * ramps);
  ip.p = ip.p_e;
  ip.p_L = std::min(6.0, 4.0 + 0.1 * ramps);
  ip.p_nu = std::max(1.0, 3.0 - 0.1 * ramps);
  return ip;
}

InterpolationParams continuation_stiffness(int iteration) {
  InterpolationParams ip;
  if (iteration < 50) {
    ip.p_e = 3.0;
  } else {
    ip.p_e = std::min(5.0, 3.0 + 0.1 * ((iteration - 50) / 20 + 1));
  }
  ip.p = ip.p_e;
  ip.p_nu = 1.0;
  return ip;
}

double objective_f0(const LoadPathRecord& record) {
  const double nuT = record.loadCase.nuTarget;
  double f0 = 0.0;
  for (const auto& s : record.steps) {
    const double d = s.lambda1 + nuT * s.lambda2 - nuT - 1.0;
    f0 += d * d;
  }
  return f0;
}

double volume_fraction(const VecX& rho1, const RveMesh& mesh) {
  double acc = 0.0;
  for (int e = 0; e < mesh.n_ele(); ++e) acc += rho1[e] * mesh.v_e[e];
  return acc / mesh.V;
}

double mass_ratio(const VecX& rho1, const VecX& rho2, const RveMesh& mesh, double omega1,
                  double omega2, double Mstar) {
  double acc = 0.0;
  for (int e = 0; e < mesh.n_ele(); ++e)
    acc += (omega1 * rho1[e] * rho2[e] + omega2 * rho1[e] * (1.0 - rho2[e])) * mesh.v_e[e];
  return acc / Mstar;
}

double discreteness(const VecX& rho) {
  double acc = 0.0;
  for (int i = 0; i < rho.size(); ++i) acc += rho[i] * (1.0 - rho[i]);
  return acc / double(rho.size());
}

namespace {

// Fractional lattice coordinates in [0,1)^2 of a point.
Vec2 frac_coords(const Vec2& X, const LatticeBasis& lat) {
  const double twoPi = 2.0 * std::numbers::pi;
  double f1 = lat.b1.dot(X) / twoPi;
  double f2 = lat.b2.dot(X) / twoPi;
  f1 -= std::floor(f1);
  f2 -= std::floor(f2);
  return {f1, f2};
}

}  // namespace

VecX init_uniform(const RveMesh& mesh, double value) {
  return VecX::Constant(mesh.n_ele(), value);
}

VecX init_checkerboard(const RveMesh& mesh, int blocks, double lo, double hi) {
  if (blocks < 1) throw ConfigError("checkerboard needs at least one block");
  VecX x(mesh.n_ele());
  for (int e = 0; e < mesh.n_ele(); ++e) {
    const Vec2 f = frac_coords(mesh.centroid[e], mesh.lattice);
    const int i = std::min(blocks - 1, int(f.x() * blocks));
    const int j = std::min(blocks - 1, int(f.y() * blocks));
    x[e] = ((i + j) % 2 == 0) ? hi : lo;
  }
  return x;
}

VecX init_circles(const RveMesh& mesh, int nx, int ny, double radiusFrac, double inside,
                  double outside) {
  if (nx < 1 || ny < 1) throw ConfigError("circle grid must be at least 1x1");
  VecX x(mesh.n_ele());
  const LatticeBasis& lat = mesh.lattice;
  const double scale = std::min(lat.a1.norm() / nx, lat.a2.norm() / ny);
  for (int e = 0; e < mesh.n_ele(); ++e) {
    const Vec2 f = frac_coords(mesh.centroid[e], lat);
    bool in = false;
    for (int i = 0; i < nx && !in; ++i)
      for (int j = 0; j < ny && !in; ++j) {
        const Vec2 cFrac((i + 0.5) / nx, (j + 0.5) / ny);
        const Vec2 cXY = cFrac.x() * lat.a1 + cFrac.y() * lat.a2;
        const Vec2 pXY = f.x() * lat.a1 + f.y() * lat.a2;
        if (periodic_distance(pXY, cXY, lat) < radiusFrac * scale) in = true;
      }
    x[e] = in ? inside : outside;
  }
  return x;
}

VecX parse_initial_design(const RveMesh& mesh, const std::string& descriptor) {
  std::vector<std::string> parts;
  std::stringstream ss(descriptor);
  std::string tok;
  while (std::getline(ss, tok, ':')) parts.push_back(tok);
  if (parts.empty()) throw ConfigError("empty initial design descriptor");
  try {
    if (parts[0] == "uniform" && parts.size() == 2)
      return init_uniform(mesh, std::stod(parts[1]));
    if (parts[0] == "checkerboard" && parts.size() == 4)
      return init_checkerboard(mesh, std::stoi(parts[1]), std::stod(parts[2]),
                               std::stod(parts[3]));
    if (parts[0] == "circles" && parts.size() == 6)
      return init_circles(mesh, std::stoi(parts[1]), std::stoi(parts[2]),
                          std::stod(parts[3]), std::stod(parts[4]), std::stod(parts[5]));
  } catch (const std::invalid_argument&) {
    throw ConfigError("malformed initial design descriptor '" + descriptor + "'");
  }
  throw ConfigError("unknown initial design descriptor '" + descriptor + "'");
}

OptimizationResult run_optimization(
    const FeSystem& sys, const FilterMatrix& filter, const ProblemSpec& spec,
    VecX x1Init, VecX x2Init, const SolverSettings& settings,
    const std::function<void(const HistoryRow&)>& onIteration) {
  const RveMesh& mesh = sys.mesh();
  const int nel = mesh.n_ele();
  if (x1Init.size() != nel) throw ConfigError("initial design size mismatch");
  if (x1Init.minCoeff() < 0.0 || x1Init.maxCoeff() > 1.0)
    throw ConfigError("initial design out of [0,1]");
  const bool of2 = spec.formulation == Formulation::OF2;
  if (of2 && x2Init.size() != nel) throw ConfigError("initial design size mismatch (x2)");
  if (!of2) x2Init = VecX::Ones(nel);

  const double Mstar = spec.omegaStar * mesh.V;
  const double om1 = sys.phases().mat1.omega;
  const double om2 = sys.phases().mat2.omega;

  const int nVars = of2 ? 2 * nel : nel;
  MmaOptimizer mma(nVars, 3, VecX::Zero(nVars), VecX::Ones(nVars));

  OptimizationResult out;
  out.design.x1 = x1Init;
  out.design.x2 = x2Init;

  VecX x1 = std::move(x1Init), x2 = std::move(x2Init);
  int smallChangeStreak = 0;

  for (int iter = 0; iter < spec.maxIters; ++iter) {
    const InterpolationParams ipMain = continuation_main(iter);
    const InterpolationParams ipStiff = continuation_stiffness(iter);
    const VecX rho1 = filter.apply(x1);
    const VecX rho2 = of2 ? VecX(filter.apply(x2)) : VecX(VecX::Ones(nel));

    // initial-stiffness constraints and direct sensitivities
    auto stiff =
        stiffness_sensitivities(sys, rho1, rho2, ipStiff, spec.loadCase.theta, spec.kbar, of2);

    // forward drive and path-dependent adjoint
    auto record = uniaxial_drive(sys, rho1, rho2, ipMain, spec.loadCase, settings);
    out.feaCalls += record.feaPasses;
    const double f0 = objective_f0(record);
    auto grads = adjoint_path(sys, record, rho1, rho2, of2);

    // material usage measure and f3
    const double usage = of2 ? mass_ratio(rho1, rho2, mesh, om1, om2, Mstar)
                             : volume_fraction(rho1, mesh);
    const double f3 = of2 ? usage - 1.0 : usage - spec.V_T;
    VecX dUsage_drho1(nel), dUsage_drho2 = VecX::Zero(nel);
    for (int e = 0; e < nel; ++e) {
      if (of2) {
        dUsage_drho1[e] = (om1 * rho2[e] + om2 * (1.0 - rho2[e])) * mesh.v_e[e] / Mstar;
        dUsage_drho2[e] = (om1 - om2) * rho1[e] * mesh.v_e[e] / Mstar;
      } else {
        dUsage_drho1[e] = mesh.v_e[e] / mesh.V;
      }
    }

    const bool alphaOn = spec.alpha > 0.0 && iter > spec.alphaActivationIter;
    VecX dObj_drho1 = grads.df0_drho1;
    VecX dObj_drho2 = of2 ? grads.df0_drho2 : VecX();
    if (alphaOn) {
      dObj_drho1 += spec.alpha * dUsage_drho1;
      if (of2) dObj_drho2 += spec.alpha * dUsage_drho2;
    }

    // chain rule back to the raw fields and assemble the MMA data
    VecX x(nVars), dObj(nVars);
    VecX fval(3);
    MatX dfdx(3, nVars);
    x.head(nel) = x1;
    dObj.head(nel) = filter.chain(dObj_drho1);
    fval << stiff.f1, stiff.f2, f3;
    dfdx.row(0).head(nel) = filter.chain(stiff.df1_drho1).transpose();
    dfdx.row(1).head(nel) = filter.chain(stiff.df2_drho1).transpose();
    dfdx.row(2).head(nel) = filter.chain(dUsage_drho1).transpose();
    if (of2) {
      x.tail(nel) = x2;
      dObj.tail(nel) = filter.chain(dObj_drho2);
      dfdx.row(0).tail(nel) = filter.chain(stiff.df1_drho2).transpose();
      dfdx.row(1).tail(nel) = filter.chain(stiff.df2_drho2).transpose();
      dfdx.row(2).tail(nel) = filter.chain(dUsage_drho2).transpose();
    }

    const VecX xNext = mma.update(x, dObj, fval, dfdx);
    const double change = (xNext - x).lpNorm<Eigen::Infinity>();

    HistoryRow row;
    row.iter = iter;
    row.f0 = f0;
    row.VfOrMf = usage;
    row.f1 = stiff.f1;
    row.f2 = stiff.f2;
    row.f3 = f3;
    row.feaCalls = out.feaCalls;
    row.cValue = record.ipUsed.c;
    row.designChange = change;
    out.history.push_back(row);
    if (onIteration) onIteration(row);

    x1 = xNext.head(nel);
    if (of2) x2 = xNext.tail(nel);

    out.design.x1 = x1;
    out.design.x2 = x2;
    out.design.rho1 = filter.apply(x1);
    out.design.rho2 = of2 ? VecX(filter.apply(x2)) : VecX(VecX::Ones(nel));
    out.design.iteration = iter + 1;
    out.design.mainParams = ipMain;
    out.design.stiffParams = ipStiff;
    out.lastRecord = std::move(record);

    smallChangeStreak = change < spec.designChangeTol ? smallChangeStreak + 1 : 0;
    if (smallChangeStreak >= spec.designChangeWindow) {
      out.stoppedByDesignChange = true;
      break;
    }
  }
  return out;
}

}  // namespace auxcell
