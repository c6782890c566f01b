#pragma once

#include <array>
#include <string>
#include <vector>

#include "auxcell/types.hpp"

namespace auxcell {

// Primitive lattice vectors a1, a2 and reciprocal basis b1, b2 with
// a_i . b_j = 2*pi*delta_ij.
struct LatticeBasis {
  Vec2 a1, a2;
  Vec2 b1, b2;

  static LatticeBasis from_primitives(const Vec2& a1, const Vec2& a2);

  // Shortest nonzero lattice translation c1*a1 + c2*a2, c_i in {-1,0,1}.
  double min_period() const;
};

enum class CellShape { Square, Parallelogram, Hexagon };

CellShape parse_shape(const std::string& name);
std::string shape_name(CellShape s);

// One periodic node pair: X[pos] = X[neg] + L, L a nonzero integer
// combination of the lattice vectors.
struct PeriodicPair {
  int neg = -1;
  int pos = -1;
  Vec2 L = Vec2::Zero();
};

// Structured 4-node quad discretization of a periodic unit cell with the
// geometric centroid at the origin. All elements are parallelograms.
struct RveMesh {
  CellShape shape = CellShape::Square;
  int resolution = 0;
  double cellSize = 1.0;
  double angleDeg = 90.0;  // parallelogram angle

  std::vector<Vec2> X;                     // node coordinates
  std::vector<std::array<int, 4>> conn;    // CCW quad connectivity
  std::vector<double> v_e;                 // element volumes (unit thickness)
  std::vector<Vec2> centroid;              // element centroids
  double V = 0.0;                          // total domain volume
  LatticeBasis lattice;
  std::vector<PeriodicPair> pairs;
  int fixedNode = -1;

  int n_nodes() const { return static_cast<int>(X.size()); }
  int n_ele() const { return static_cast<int>(conn.size()); }
  int n_dofs() const { return 2 * n_nodes(); }
  int n_pairs() const { return static_cast<int>(pairs.size()); }
};

// resolution = elements per edge (per rhombus edge for the hexagon).
// cellSize = edge length (square/parallelogram/hexagon edge).
RveMesh build_mesh(CellShape shape, int resolution, double cellSize,
                   double angleDeg = 90.0);

// Constraint matrices of the Lagrange-multiplier system:
//   u_o = M1 u   (2 x N),   u+ - u- = M2 u   (2m x N).
void constraint_matrices(const RveMesh& mesh, SpMat& M1, SpMat& M2);

// Pair-translation matrix L_M (2m x 4): b = L_M ([Fbar] - [I]).
MatX pair_translation_matrix(const RveMesh& mesh);

// Legacy unstructured-grid text export. `pointData` displaces the points
// when `deformed` is given (same length as X). Each named field is
// per-cell data.
void write_vtk(const std::string& path, const RveMesh& mesh,
               const std::vector<std::pair<std::string, VecX>>& cellFields,
               const VecX* deformed = nullptr);

}  // namespace auxcell
