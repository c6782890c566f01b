#pragma once

#include <functional>
#include <string>
#include <vector>

#include "auxcell/fea.hpp"
#include "auxcell/filter.hpp"
#include "auxcell/homogenize.hpp"
#include "auxcell/sensitivity.hpp"

namespace auxcell {

enum class Formulation { OF1, OF2 };

struct ProblemSpec {
  Formulation formulation = Formulation::OF1;
  MacroLoadCase loadCase;
  double kbar = 2.0;
  double V_T = 0.4;          // OF-1 volume-fraction cap
  double omegaStar = 500.0;  // OF-2 mass cap M* = omegaStar * V_D
  double alpha = 0.0;        // material-usage weight in the objective
  int alphaActivationIter = 200;
  int maxIters = 500;
  double designChangeTol = 1e-3;
  int designChangeWindow = 10;
};

// Continuation per the solver constants: p_e, p go 1 -> 3, p_L 4 -> 6 and
// p_nu 3 -> 1 with +-0.1 every 20 iterations; the separate initial-stiffness
// evaluation holds p_e = p = 3 for the first 50 iterations, then raises to 5
// by 0.1 every 20, with p_nu = 1 throughout.
InterpolationParams continuation_main(int iteration);
InterpolationParams continuation_stiffness(int iteration);

double objective_f0(const LoadPathRecord& record);
double volume_fraction(const VecX& rho1, const RveMesh& mesh);
double mass_ratio(const VecX& rho1, const VecX& rho2, const RveMesh& mesh, double omega1,
                  double omega2, double Mstar);
double discreteness(const VecX& rho);

// Parametric initial-design generators (lattice-periodic, geometry based).
VecX init_uniform(const RveMesh& mesh, double value);
VecX init_checkerboard(const RveMesh& mesh, int blocks, double lo, double hi);
VecX init_circles(const RveMesh& mesh, int nx, int ny, double radiusFrac, double inside,
                  double outside);
// "uniform:v", "checkerboard:n:lo:hi", "circles:nx:ny:r:in:out"
VecX parse_initial_design(const RveMesh& mesh, const std::string& descriptor);

struct HistoryRow {
  int iter = 0;
  double f0 = 0.0;
  double VfOrMf = 0.0;
  double f1 = 0.0, f2 = 0.0, f3 = 0.0;
  long feaCalls = 0;
  double cValue = 0.0;
  double designChange = 0.0;
};

struct DesignState {
  VecX x1, x2;      // raw fields
  VecX rho1, rho2;  // filtered fields
  int iteration = 0;
  InterpolationParams mainParams, stiffParams;
};

struct OptimizationResult {
  DesignState design;
  std::vector<HistoryRow> history;
  LoadPathRecord lastRecord;
  bool stoppedByDesignChange = false;
  long feaCalls = 0;
};

OptimizationResult run_optimization(
    const FeSystem& sys, const FilterMatrix& filter, const ProblemSpec& spec,
    VecX x1Init, VecX x2Init, const SolverSettings& settings,
    const std::function<void(const HistoryRow&)>& onIteration = {});

}  // namespace auxcell
