#pragma once

#include <complex>
#include <vector>

#include "auxcell/fea.hpp"
#include "auxcell/homogenize.hpp"

namespace auxcell {

using SpMatC = Eigen::SparseMatrix<std::complex<double>>;

// First-Brillouin-zone sampling: a uniform base grid over [0,1)^2 plus
// near-origin refinement bands that resolve long-wavelength modes.
struct BlochGrid {
  int base = 40;
  int refine = 20;
  double band = 0.025;
  // the refinement boxes are (0,band)x(band,1), (band,1)x(0,band), (0,band)^2

  std::vector<Vec2> samples() const;  // deterministic order, k = (0,0) first
};

struct BlochPoint {
  Vec2 k = Vec2::Zero();
  double beta = 0.0;
  bool ok = false;
};

struct BlochResult {
  std::vector<BlochPoint> points;
  double minBeta = 0.0;       // over nonzero samples
  Vec2 minK = Vec2::Zero();
  double betaZero = 0.0;      // k = 0, rigid translations deflated
  double betaNearZero = 0.0;  // smallest nonzero |k| sample
  Vec2 nearZeroK = Vec2::Zero();
};

// Tangent-stiffness / gradient-Gram pencil of a loaded state. K uses the
// symmetric moduli form of the element tangent (material tangent at the
// F-bar state, gamma-blended), G the matching quadrature of grad v : grad v.
class StabilityOperator {
 public:
  StabilityOperator(const FeSystem& sys, const VecX& rho1, const VecX& rho2,
                    const InterpolationParams& ip, const VecX& uhat);

  enum class EigMethod { Auto, Dense, ShiftInvert };

  // Smallest eigenvalue of the Bloch-constrained pencil at reciprocal
  // coordinates k in [0,1)^2. k = (0,0) deflates the two translations.
  double bloch_beta(const Vec2& k, EigMethod method = EigMethod::Auto) const;

  // Macro tangent consistent with this operator:
  // -(1/V) Lhat^T Jstab^-1 Lhat with Jstab = K bordered by the constraints.
  Mat4 macro_moduli() const;

  const SpMat& K() const { return K_; }
  const SpMat& G() const { return G_; }
  const FeSystem& system() const { return *sys_; }

 private:
  const FeSystem* sys_;
  SpMat K_, G_;
  std::vector<std::array<int, 2>> pairShift_;  // integer (c1, c2) per pair
};

BlochResult bz_sweep(const StabilityOperator& op, const BlochGrid& grid, int threads = 0);

struct RankOneResult {
  double B = 0.0;
  double phiMin = 0.0;    // minimizing m direction
  double alphaMin = 0.0;  // minimizing M direction
  VecX B_alpha;           // min over m for each alpha sample
  int angleSteps = 0;
};

// B = min over the angle product grid of (m x M) : Abar : (m x M),
// both angles sampled with step pi/angleSteps over [0, pi).
RankOneResult rank_one_indicator(const Mat4& Abar, int angleSteps = 720);

struct StabilityCheckpoint {
  double lambda2 = 1.0, lambda1 = 1.0;
  double B = 0.0;
  double phiMin = 0.0, alphaMin = 0.0;
  double minBeta = 0.0;
  Vec2 minK = Vec2::Zero();
  double betaZero = 0.0;
  double betaNearZero = 0.0;
  bool swept = false;
};

struct StabilityReport {
  std::vector<StabilityCheckpoint> checkpoints;
  int firstMacroLoss = -1;     // first B <= 0
  int firstMicroLoss = -1;     // first grid-min beta <= 0
  int firstLongWaveLoss = -1;  // first near-zero-k beta <= 0
  bool truncated = false;      // forward analysis failed before the last checkpoint
};

// Runs the mixed driver over the checkpoint grid and evaluates B (from the
// consistent macro moduli) and the Bloch indicators at each converged state.
StabilityReport stability_scan(const FeSystem& sys, const VecX& rho1, const VecX& rho2,
                               const InterpolationParams& ip, const MacroLoadCase& loadCase,
                               const BlochGrid& grid, const SolverSettings& settings,
                               bool sweepEveryCheckpoint = true, int angleSteps = 720);

// Plot-threshold binarization used before stability checks.
VecX threshold_density(const VecX& rho, double threshold = 0.6);

}  // namespace auxcell
