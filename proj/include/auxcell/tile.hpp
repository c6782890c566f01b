#pragma once

#include <string>

#include "auxcell/fea.hpp"
#include "auxcell/homogenize.hpp"

namespace auxcell {

struct TileResult {
  int N = 0;
  double appliedStrain = 0.0;
  double epsLong = 0.0, epsTrans = 0.0;  // central 2x2 block engineering strains
  double nuTiled = 0.0;
  double nuHomogenized = 0.0;
  double relDeviation = 0.0;
};

struct TiledModel {
  std::vector<Vec2> X;
  std::vector<std::array<int, 4>> conn;
  std::vector<double> rho1, rho2;
  double width = 0.0, height = 0.0;
};

// N x N arrangement of the unit cell (square cells), duplicate interface
// nodes welded. Densities are copied per tile.
TiledModel build_tiling(const RveMesh& cell, const VecX& rho1, const VecX& rho2, int N);

// Uniaxial tension of the tiled block: u_y prescribed on the top and bottom
// node rows (frictionless grips), one bottom node pinned in x. The Poisson
// ratio is the negative ratio of the engineering strains of the central 2x2
// cells, compared against the single-cell homogenization at the strain the
// central block actually sees. Throws ValidationFailure if the solid phase
// does not form one connected load path between the grips.
TileResult tile_test(const RveMesh& cell, const VecX& rho1, const VecX& rho2,
                     const PhaseSet& phases, const InterpolationParams& ip, int N,
                     double strain, const SolverSettings& settings, int threads,
                     const std::string& vtkPath = "");

}  // namespace auxcell
