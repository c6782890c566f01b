#pragma once

#include <vector>

#include "auxcell/fea.hpp"
#include "auxcell/types.hpp"

namespace auxcell {

// Rotated uniaxial load case: lambda2 is driven at orientation theta while
// the rotated axial stress P11^Q is brought to zero by an outer Newton on
// lambda1.
struct MacroLoadCase {
  double lambda2Target = 1.2;
  double theta = 0.0;  // radians
  double nuTarget = -1.0;
  int n = 20;               // recorded steps along the path
  double stressScale = 1.0; // outer tolerance is 1e-9 * max(1, stressScale)
};

// Fbar = Q diag(l1, l2) Q^T (macroscopic rotation ignored); symmetric.
Mat2 macro_F(double lambda1, double lambda2, double theta);

// [Q_M] with [Fbar] = [Q_M][Fbar^Q] in column-major 4-vector form.
Mat4 rotation_matrix_4(double theta);

// P11^Q = P11 cos^2 + (P21 + P12) cos sin + P22 sin^2.
double rotated_axial_stress(const Mat2& P, double theta);

// Outer Jacobian dP11^Q/dlambda1: the full contraction of the homogenized
// tangent with the loading direction.
double outer_jacobian(const Mat4& Abar, double theta);

// nu = -(l1 - 1)/(l2 - 1); throws ConfigError at l2 = 1.
double poisson_ratio(double lambda1, double lambda2);

struct PathStep {
  double lambda1 = 1.0, lambda2 = 1.0;
  double nu = 0.0;
  Mat2 Fbar = Mat2::Identity();
  Mat2 Pbar = Mat2::Zero();
  Mat4 Abar = Mat4::Zero();
  ConstrainedSolution sol;
  int outerIters = 0;
};

struct LoadPathRecord {
  std::vector<PathStep> steps;
  MacroLoadCase loadCase;
  InterpolationParams ipUsed;  // c after any escalations; applies to all steps
  int feaPasses = 0;           // full-path analyses (restarts included)
  int newtonFactorizations = 0;
};

// Drives lambda2 over an even grid of n steps; at each step an outer Newton
// on lambda1 enforces |P11^Q| <= 1e-9 max(1, stressScale). All converged
// inner solutions are retained for the adjoint.
LoadPathRecord uniaxial_drive(const FeSystem& sys, const VecX& rho1, const VecX& rho2,
                              const InterpolationParams& ip, const MacroLoadCase& loadCase,
                              const SolverSettings& settings);

double outer_tolerance(const MacroLoadCase& loadCase);

}  // namespace auxcell
