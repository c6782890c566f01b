#pragma once

#include "auxcell/mesh.hpp"
#include "auxcell/types.hpp"

namespace auxcell {

// Shortest distance between two points under the lattice periodicity,
// searching integer shifts c_i in {-1,0,1} (sufficient for r_min below half
// the minimum lattice period).
double periodic_distance(const Vec2& Xi, const Vec2& Xj, const LatticeBasis& lattice);

// Row-stochastic density filter: rho = W x with
//   W_ij = w_ij v_j / sum_j w_ij v_j,  w_ij = max(r_min - d(X_i, X_j), 0).
struct FilterMatrix {
  SpMat W;
  double rmin = 0.0;

  VecX apply(const VecX& x) const { return W * x; }
  // Chain rule back to raw design variables: dg/dx = W^T dg/drho.
  VecX chain(const VecX& gradRho) const { return W.transpose() * gradRho; }
};

FilterMatrix build_filter(const RveMesh& mesh, double rmin, int threads = 0);

}  // namespace auxcell
