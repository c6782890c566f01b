#pragma once

#include <Eigen/SparseLU>
#include <string>
#include <memory>
#include <optional>
#include <vector>

#include "auxcell/element.hpp"
#include "auxcell/material.hpp"
#include "auxcell/mesh.hpp"
#include "auxcell/types.hpp"

namespace auxcell {

struct SolverSettings {
  double energyTol = 1e-12;       // Newton energy-residual tolerance
  double initialLoadRatio = 0.05; // of the full ramp
  double maxLoadRatio = 0.05;
  double minLoadRatio = 0.001;
  int maxNewtonIters = 40;
  // Chord iterations reuse the factored tangent until the contraction
  // stalls; exact mode refactors every iteration (quadratic convergence).
  bool exactNewton = false;
  int maxCUpdates = 12;           // c <- c + dc escalations before giving up
  int minRecordedSteps = 20;
  std::string convergenceLogPath; // per-substep CSV (t, iterations, energy); empty = off
};

// Converged state of the constrained system at one macroscopic load.
struct ConstrainedSolution {
  VecX uhat;  // [u (N), lambda (2), mu (2m)]
  Mat2 Fbar = Mat2::Identity();
  double residualEnergy = 0.0;
  int newtonIters = 0;

  Eigen::VectorBlock<const VecX> u(int N) const { return uhat.head(N); }
  Vec2 lambda(int N) const { return uhat.segment<2>(N); }
  Eigen::VectorBlock<const VecX> mu(int N) const { return uhat.tail(uhat.size() - N - 2); }
};

struct HomogenizedState {
  Mat2 Pbar = Mat2::Zero();
  Mat4 Abar = Mat4::Zero();
  Mat2 Fbar = Mat2::Identity();
};

// Null-space basis of the fixed-node and pairing constraints: dependent
// (positive-side) node dofs mirror their masters, the fixed node is pinned.
// Lets the saddle system be solved through the smaller displacement block,
// with the multipliers recovered from the internal-force rows.
struct ConstraintReduction {
  SpMat T;                  // N x nRed
  std::vector<int> posDof;  // dof index per mu row (2m)
  int fixedDof = -1;        // first dof of the fixed node
  int N = 0, m = 0;
};

ConstraintReduction constraint_reduction(const RveMesh& mesh);

// Direct factorization with two modes. The general mode handles any square
// sparse system. The saddle mode eliminates the Lagrange-multiplier rows
// through a ConstraintReduction, leaving the (mildly non-symmetric)
// condensed stiffness. Either way the condensed operator is factored by a
// symmetric LDLT of its symmetric part with iterative refinement carrying
// the non-symmetric remainder; a probe at factorization time falls back to
// a full sparse LU when the refinement does not contract.
class FactoredJacobian {
 public:
  void compute(const SpMat& A);
  void compute_saddle(const SpMat& J, const ConstraintReduction& red);
  VecX solve(const VecX& rhs) const;
  VecX solve_transpose(const VecX& rhs) const;

 private:
  void factor_core(const SpMat& A);
  VecX core_solve(const VecX& b, bool transpose) const;

  SpMat A_;  // condensed operator (K_red in saddle mode)
  std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_;
  std::unique_ptr<Eigen::SparseLU<SpMat>> lu_;
  bool useLdlt_ = false;
  int analyzedSize_ = -1;

  bool saddle_ = false;
  const ConstraintReduction* red_ = nullptr;
  SpMat K_;

  VecX saddle_solve(const VecX& b, bool transpose) const;
};

// Mesh-bound finite element system: element kinematics, constraint matrices
// and the pair-translation matrix, shared read-only across solves.
class FeSystem {
 public:
  FeSystem(const RveMesh& mesh, PhaseSet phases, int threads = 0);

  const RveMesh& mesh() const { return *mesh_; }
  const PhaseSet& phases() const { return phases_; }
  const std::vector<ElementKinematics>& kinematics() const { return kin_; }
  const MatX& LM() const { return LM_; }
  int N() const { return N_; }
  int n_pairs() const { return m_; }
  int size() const { return N_ + 2 + 2 * m_; }
  int threads() const { return threads_; }

  // Residual of Eq-form R = [F_int - M1^T lam - M2^T mu; -M1 u; -M2 u + b]
  // and its exact Jacobian. Either output may be null.
  void assemble(const VecX& uhat, const Mat2& Fbar, const VecX& rho1, const VecX& rho2,
                const InterpolationParams& ip, bool linearInterp, VecX* R, SpMat* J) const;

  // Initial Jacobian at u = 0 without linear-energy interpolation (the
  // stiffness-constraint evaluation rules).
  SpMat initial_jacobian(const VecX& rho1, const VecX& rho2,
                         const InterpolationParams& stiffnessParams) const;

  const ConstraintReduction& reduction() const { return red_; }

  // Factor a saddle Jacobian of this system (fast reduced path).
  void factor(const SpMat& J, FactoredJacobian& fac) const {
    fac.compute_saddle(J, red_);
  }

  Mat2 homogenized_stress(const ConstrainedSolution& sol) const;

  // [Abar] = -(1/V) Lhat^T J^-1 Lhat with the Jacobian factored at the state.
  Mat4 homogenized_moduli(const FactoredJacobian& fac) const;

  // Right-hand side column Lhat(:,i) (zero except the mu block).
  VecX lhat_column(int i) const;

  // Volume integrals over the whole cell at a given state.
  Mat2 average_effective_stress(const VecX& uhat, const VecX& rho1, const VecX& rho2,
                                const InterpolationParams& ip) const;
  Mat2 average_deformation_gradient(const VecX& uhat) const;

 private:
  const RveMesh* mesh_;
  std::vector<ElementKinematics> kin_;
  ConstraintReduction red_;
  SpMat M1_, M2_;
  MatX LM_;
  std::vector<Triplet> constraintTriplets_;
  PhaseSet phases_;
  int threads_ = 0;
  int N_ = 0, m_ = 0;
};

struct NewtonReport {
  bool converged = false;
  int iterations = 0;
  int factorizations = 0;
  double residualEnergy = 0.0;
  bool nonPhysical = false;
  std::vector<double> energyHistory;  // |du^T R| per iteration
};

// Factored-tangent cache shared across warm-started solves. The chord
// iteration keeps using it until the contraction degrades.
struct NewtonWorkspace {
  FactoredJacobian fac;
  bool valid = false;
};

// Newton at fixed Fbar starting from uhat (updated in place on success only).
NewtonReport newton_solve(const FeSystem& sys, const VecX& rho1, const VecX& rho2,
                          const InterpolationParams& ip, const Mat2& Fbar, VecX& uhat,
                          const SolverSettings& settings, NewtonWorkspace* ws = nullptr);

struct RecordedSubstep {
  double t = 0.0;
  ConstrainedSolution sol;
};

struct SolveResult {
  ConstrainedSolution sol;
  InterpolationParams ipUsed;  // c may have been escalated
  int newtonFactorizations = 0;
  int acceptedSteps = 0;
};

// Adaptive incremental solve from a start state to FbarTarget. rampScale
// rescales the load-ratio bounds when the increment is a fraction of a
// longer load path (the mixed driver passes 1/n_steps).
SolveResult solve_rve(const FeSystem& sys, const VecX& rho1, const VecX& rho2,
                      InterpolationParams ip, const Mat2& FbarTarget,
                      const SolverSettings& settings,
                      const ConstrainedSolution* warmStart = nullptr,
                      double rampScale = 1.0,
                      std::vector<RecordedSubstep>* trail = nullptr,
                      NewtonWorkspace* ws = nullptr);

}  // namespace auxcell
