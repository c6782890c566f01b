// Timings of the OpenMP kernels against their serial reference paths:
// global assembly, filter construction and one Bloch point.
#include <chrono>
#include <cstdio>
#include <random>

#include "auxcell/fea.hpp"
#include "auxcell/filter.hpp"
#include "auxcell/parallel.hpp"
#include "auxcell/stability.hpp"

using namespace auxcell;
using Clock = std::chrono::high_resolution_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const int res = argc > 1 ? std::atoi(argv[1]) : 80;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 5;
  const int maxThreads = argc > 3 ? std::atoi(argv[3]) : 0;

  auto mesh = build_mesh(CellShape::Square, res, 1.0);
  PhaseSet phases;
  phases.mat1 = {100.0, 0.49, 0.0};
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  VecX rho1(mesh.n_ele());
  for (int e = 0; e < mesh.n_ele(); ++e) rho1[e] = u(rng);
  VecX rho2 = VecX::Ones(mesh.n_ele());
  InterpolationParams ip;

  std::printf("mesh %dx%d: %d elements, %d dofs\n", res, res, mesh.n_ele(), mesh.n_dofs());

  const int nthreads = resolve_threads(maxThreads);
  for (int threads : {1, nthreads}) {
    FeSystem sys(mesh, phases, threads);
    std::uniform_real_distribution<double> du(-0.01, 0.01);
    VecX uhat(sys.size());
    for (int i = 0; i < uhat.size(); ++i) uhat[i] = du(rng);
    Mat2 F;
    F << 1.02, 0.01, 0.0, 0.99;

    VecX R;
    SpMat J;
    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) sys.assemble(uhat, F, rho1, rho2, ip, true, &R, &J);
    const double tAsm = ms_since(t0) / reps;

    t0 = Clock::now();
    auto fm = build_filter(mesh, 0.0375 * mesh.cellSize * 4, threads);
    const double tFil = ms_since(t0);

    StabilityOperator op(sys, rho1, rho2, ip, VecX::Zero(sys.size()));
    t0 = Clock::now();
    const double beta = op.bloch_beta(Vec2(0.21, 0.37));
    const double tBloch = ms_since(t0);

    std::printf("threads=%d  assemble %.1f ms  filter %.1f ms  bloch point %.1f ms "
                "(beta=%.4g, filter nnz=%ld)\n",
                threads, tAsm, tFil, tBloch, beta, long(fm.W.nonZeros()));
    if (threads == nthreads && nthreads > 1) break;
  }
  return 0;
}
