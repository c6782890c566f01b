#pragma once

#include "auxcell/types.hpp"

namespace auxcell {

// Subproblem snapshot for diagnostics and KKT verification.
struct MmaSubproblem {
  VecX low, upp, alfa, beta;
  VecX p0, q0;
  MatX P, Q;
  VecX b;
  VecX x, lam, xsi, eta;  // primal/dual solution of the subproblem
};

// Method of Moving Asymptotes (separable convex approximations with
// adaptive asymptotes; the subproblem is solved by a primal-dual interior
// Newton). Defaults: asymptote init 0.5 x range, adapt 1.2 / 0.7,
// move limit 0.5, constraint penalty c = 1000.
class MmaOptimizer {
 public:
  MmaOptimizer(int nVars, int nCons, VecX xmin, VecX xmax);

  // fval: constraint values f_i <= 0; dfdx: nCons x nVars gradients.
  VecX update(const VecX& x, const VecX& df0dx, const VecX& fval, const MatX& dfdx,
              MmaSubproblem* info = nullptr);

  void set_move_limit(double m) { move_ = m; }

 private:
  int n_, m_;
  VecX xmin_, xmax_;
  VecX xold1_, xold2_, low_, upp_;
  int iter_ = 0;
  double asyinit_ = 0.5, asyincr_ = 1.2, asydecr_ = 0.7;
  double move_ = 0.5, albefa_ = 0.1, raa0_ = 1e-5;
  double a0_ = 1.0;
  VecX a_, c_, d_;
};

}  // namespace auxcell
