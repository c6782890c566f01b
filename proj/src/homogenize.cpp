#include "auxcell/homogenize.hpp"

#include <cmath>

#include "auxcell/errors.hpp"

namespace auxcell {

Mat2 macro_F(double lambda1, double lambda2, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat2 F;
  F(0, 0) = lambda1 * c * c + lambda2 * s * s;
  F(0, 1) = F(1, 0) = s * c * (lambda1 - lambda2);
  F(1, 1) = lambda1 * s * s + lambda2 * c * c;
  return F;
}

Mat4 rotation_matrix_4(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat4 Q;
  Q << c * c, -s * c, -s * c, s * s,
       s * c, c * c, -s * s, -s * c,
       s * c, -s * s, c * c, -s * c,
       s * s, s * c, s * c, c * c;
  return Q;
}

double rotated_axial_stress(const Mat2& P, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return P(0, 0) * c * c + (P(1, 0) + P(0, 1)) * c * s + P(1, 1) * s * s;
}

double outer_jacobian(const Mat4& Abar, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  const Vec4 dir(c * c, s * c, s * c, s * s);  // dFbar/dlambda1 = projector weights
  return dir.dot(Abar * dir);
}

double poisson_ratio(double lambda1, double lambda2) {
  if (lambda2 == 1.0)
    throw ConfigError("Poisson ratio undefined at lambda2 = 1");
  return -(lambda1 - 1.0) / (lambda2 - 1.0);
}

double outer_tolerance(const MacroLoadCase& loadCase) {
  return 1e-9 * std::max(1.0, loadCase.stressScale);
}

LoadPathRecord uniaxial_drive(const FeSystem& sys, const VecX& rho1, const VecX& rho2,
                              const InterpolationParams& ip, const MacroLoadCase& loadCase,
                              const SolverSettings& settings) {
  if (loadCase.lambda2Target <= 0.0) throw ConfigError("lambda2 target must be positive");
  if (loadCase.n < 1) throw ConfigError("load path needs at least one step");

  const double tol = outer_tolerance(loadCase);
  const int n = loadCase.n;
  const int maxOuter = 30;

  LoadPathRecord rec;
  rec.loadCase = loadCase;
  InterpolationParams ipCur = ip;

  for (int pass = 0;; ++pass) {
    rec.steps.clear();
    ++rec.feaPasses;
    bool restart = false;

    ConstrainedSolution state;
    state.uhat = VecX::Zero(sys.size());
    state.Fbar = Mat2::Identity();
    double lambda1 = 1.0;
    NewtonWorkspace ws;

    for (int k = 1; k <= n && !restart; ++k) {
      const double lambda2 = 1.0 + double(k) / n * (loadCase.lambda2Target - 1.0);
      PathStep step;
      bool accepted = false;
      double Hprev = 0.0;

      for (int oi = 0; oi < maxOuter; ++oi) {
        const Mat2 Fbar = macro_F(lambda1, lambda2, loadCase.theta);
        SolveResult res = solve_rve(sys, rho1, rho2, ipCur, Fbar, settings, &state,
                                    1.0 / n, nullptr, &ws);
        rec.newtonFactorizations += res.newtonFactorizations;
        if (res.ipUsed.c > ipCur.c) {
          ipCur = res.ipUsed;  // cutoff escalated: the whole path re-solves
          restart = true;
          break;
        }
        state = res.sol;

        const Mat2 Pbar = sys.homogenized_stress(state);
        const double H = rotated_axial_stress(Pbar, loadCase.theta);

        if (std::abs(H) <= tol) {
          // exact tangent at the accepted state: the recorded moduli feed
          // the adjoint border and the stability checks
          SpMat J;
          sys.assemble(state.uhat, Fbar, rho1, rho2, ipCur, true, nullptr, &J);
          sys.factor(J, ws.fac);
          ws.valid = true;
          ++rec.newtonFactorizations;
          step.lambda1 = lambda1;
          step.lambda2 = lambda2;
          step.nu = lambda2 == 1.0 ? std::numeric_limits<double>::quiet_NaN()
                                   : poisson_ratio(lambda1, lambda2);
          step.Fbar = Fbar;
          step.Pbar = Pbar;
          step.Abar = sys.homogenized_moduli(ws.fac);
          step.sol = state;
          step.outerIters = oi + 1;
          accepted = true;
          break;
        }

        // the chord workspace factor is at most one refresh behind the
        // state; accurate enough for the outer Newton direction
        if (!ws.valid) {
          SpMat J;
          sys.assemble(state.uhat, Fbar, rho1, rho2, ipCur, true, nullptr, &J);
          sys.factor(J, ws.fac);
          ws.valid = true;
          ++rec.newtonFactorizations;
        }
        const Mat4 Abar = sys.homogenized_moduli(ws.fac);
        const double JoT = outer_jacobian(Abar, loadCase.theta);
        if (!(std::abs(JoT) > 0.0))
          throw SolveFailure("outer Jacobian vanished in the mixed driver");
        double dl = -H / JoT;
        if (oi > 0 && H * Hprev < 0.0) dl *= 0.5;  // damp sign oscillation
        Hprev = H;
        lambda1 += dl;
        if (!(lambda1 > 0.0))
          throw SolveFailure("outer Newton left the admissible stretch range");
      }

      if (restart) break;
      if (!accepted)
        throw SolveFailure("outer Newton did not converge at step " + std::to_string(k));
      rec.steps.push_back(std::move(step));
    }

    if (!restart) break;
    if (pass > settings.maxCUpdates)
      throw SolveFailure("mixed driver exhausted cutoff updates");
  }

  rec.ipUsed = ipCur;
  return rec;
}

}  // namespace auxcell
