// auxcell workbench: design and audit finite-strain auxetic unit cells.
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <random>

#include "auxcell/config.hpp"
#include "auxcell/errors.hpp"
#include "auxcell/filter.hpp"
#include "auxcell/optimizer.hpp"
#include "auxcell/parallel.hpp"
#include "auxcell/sensitivity.hpp"
#include "auxcell/stability.hpp"
#include "auxcell/tile.hpp"

namespace fs = std::filesystem;
using namespace auxcell;

namespace {

struct CommonArgs {
  std::string configPath;
  std::string outDir = ".";
  int threads = 0;
  unsigned long long seed = 0;
  bool seedSet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.configPath, "job configuration file")->required();
  cmd->add_option("--out", args.outDir, "output directory");
  cmd->add_option("--threads", args.threads, "worker thread cap (0 = all)");
  cmd->add_option("--seed", args.seed, "deterministic seed")->each([&args](const std::string&) {
    args.seedSet = true;
  });
}

std::vector<std::string> with_phases(std::vector<std::string> keys) {
  for (const auto& k : phase_config_keys()) keys.push_back(k);
  return keys;
}

RveMesh mesh_from_config(const JobConfig& cfg) {
  return build_mesh(parse_shape(cfg.str("shape", "square")), cfg.integer("resolution"),
                    cfg.num("cell_size", 1.0), cfg.num("angle_deg", 60.0));
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_out(const fs::path& p) {
  FilePtr f(std::fopen(p.string().c_str(), "w"));
  if (!f) throw ConfigError("cannot open '" + p.string() + "' for writing");
  return f;
}

MacroLoadCase load_case_from_config(const JobConfig& cfg) {
  MacroLoadCase lc;
  lc.lambda2Target = cfg.num("lambda2");
  lc.theta = cfg.num("theta_deg", 0.0) * std::numbers::pi / 180.0;
  lc.nuTarget = cfg.num("nu_target", -1.0);
  lc.n = cfg.integer("n_steps", 20);
  lc.stressScale = cfg.num("k_bar", 1.0);
  return lc;
}

void write_path_csv(const fs::path& p, const LoadPathRecord& rec) {
  auto f = open_out(p);
  std::fprintf(f.get(), "step,lambda2,lambda1,nu,P11,P21,P12,P22\n");
  int k = 1;
  for (const auto& s : rec.steps) {
    std::fprintf(f.get(), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", k++, s.lambda2,
                 s.lambda1, s.nu, s.Pbar(0, 0), s.Pbar(1, 0), s.Pbar(0, 1), s.Pbar(1, 1));
  }
}

// density-field input, or a generator descriptor for quick studies
std::pair<RveMesh, std::pair<VecX, VecX>> design_input(const JobConfig& cfg) {
  if (cfg.has("density_field")) {
    DensityField df = DensityField::load(cfg.str("density_field"));
    RveMesh mesh = df.build_mesh_from_header();
    VecX rho2 = df.fields == 2 ? df.rho2 : VecX(VecX::Ones(mesh.n_ele()));
    return {std::move(mesh), {df.rho1, rho2}};
  }
  RveMesh mesh = mesh_from_config(cfg);
  VecX rho1 = parse_initial_design(mesh, cfg.str("initial_design", "uniform:1"));
  VecX rho2 = VecX::Ones(mesh.n_ele());
  if (cfg.has("initial_design2")) rho2 = parse_initial_design(mesh, cfg.str("initial_design2"));
  return {std::move(mesh), {std::move(rho1), std::move(rho2)}};
}

int cmd_homogenize(const CommonArgs& args) {
  JobConfig cfg = JobConfig::load(args.configPath);
  cfg.validate(with_phases({"shape", "resolution", "cell_size", "angle_deg", "lambda2",
                            "theta_deg", "n_steps", "nu_target", "k_bar", "density_field",
                            "initial_design", "initial_design2", "two_material",
                            "convergence_log", "export_steps", "seed"}));
  const bool two = cfg.flag("two_material", false);
  auto [mesh, fields] = design_input(cfg);
  FeSystem sys(mesh, phases_from_config(cfg, two), args.threads);
  MacroLoadCase lc = load_case_from_config(cfg);
  SolverSettings st;
  if (cfg.flag("convergence_log", false))
    st.convergenceLogPath = (fs::path(args.outDir) / "convergence.csv").string();

  InterpolationParams ip;  // converged-design analysis: full penalization
  auto rec = uniaxial_drive(sys, fields.first, fields.second, ip, lc, st);
  write_path_csv(fs::path(args.outDir) / "path.csv", rec);

  if (cfg.flag("export_steps", true)) {
    for (size_t k = 0; k < rec.steps.size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof(name), "step_%03zu.vtk", k + 1);
      const VecX u = rec.steps[k].sol.uhat.head(sys.N());
      write_vtk((fs::path(args.outDir) / name).string(), mesh, {{"rho1", fields.first}},
                &u);
    }
  }

  double f0 = 0.0;
  for (const auto& s : rec.steps) {
    const double d = s.lambda1 + lc.nuTarget * s.lambda2 - lc.nuTarget - 1.0;
    f0 += d * d;
  }
  std::printf("homogenize: %zu steps, final nu = %.6g, f0 = %.6g, fea passes = %d\n",
              rec.steps.size(), rec.steps.back().nu, f0, rec.feaPasses);
  return 0;
}

int cmd_optimize(const CommonArgs& args) {
  JobConfig cfg = JobConfig::load(args.configPath);
  cfg.validate(with_phases({"formulation", "shape", "resolution", "cell_size", "angle_deg",
                            "lambda2", "theta_deg", "nu_target", "k_bar", "V_T",
                            "omega_star", "alpha", "alpha_activation_iter", "r_min",
                            "initial_design", "initial_design2", "max_iters", "n_steps",
                            "seed", "move_limit"}));
  const std::string form = cfg.str("formulation", "of1");
  if (form != "of1" && form != "of2")
    throw ConfigError("formulation must be of1 or of2");
  const bool of2 = form == "of2";

  RveMesh mesh = mesh_from_config(cfg);
  FeSystem sys(mesh, phases_from_config(cfg, of2), args.threads);
  auto filter = build_filter(mesh, cfg.num("r_min", 0.0375), args.threads);

  ProblemSpec spec;
  spec.formulation = of2 ? Formulation::OF2 : Formulation::OF1;
  spec.loadCase = load_case_from_config(cfg);
  spec.kbar = cfg.num("k_bar", 2.0);
  spec.V_T = cfg.num("V_T", 0.4);
  spec.omegaStar = cfg.num("omega_star", 500.0);
  spec.alpha = cfg.num("alpha", 0.0);
  spec.alphaActivationIter = cfg.integer("alpha_activation_iter", 200);
  spec.maxIters = cfg.integer("max_iters", 500);

  VecX x1 = parse_initial_design(mesh, cfg.str("initial_design"));
  VecX x2;
  if (of2) x2 = parse_initial_design(mesh, cfg.str("initial_design2", "uniform:0.5"));

  SolverSettings st;
  auto historyFile = open_out(fs::path(args.outDir) / "history.csv");
  std::fprintf(historyFile.get(), "iter,f0,Vf_or_Mf,f1,f2,f3,fea_calls,c_value\n");
  auto onIter = [&](const HistoryRow& row) {
    std::fprintf(historyFile.get(), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%ld,%.17g\n",
                 row.iter, row.f0, row.VfOrMf, row.f1, row.f2, row.f3, row.feaCalls,
                 row.cValue);
    std::fflush(historyFile.get());
    if (row.iter % 10 == 0)
      std::fprintf(stderr, "iter %4d  f0 %.4e  usage %.4f  f1 %+.3e  c %.2f\n", row.iter,
                   row.f0, row.VfOrMf, row.f1, row.cValue);
  };

  auto res = run_optimization(sys, filter, spec, x1, x2, st, onIter);

  auto saveField = [&](const std::string& name, const VecX& r1, const VecX& r2) {
    DensityField df;
    df.shape = mesh.shape;
    df.resolution = mesh.resolution;
    df.cellSize = mesh.cellSize;
    df.angleDeg = mesh.angleDeg;
    df.fields = of2 ? 2 : 1;
    df.rho1 = r1;
    if (of2) df.rho2 = r2;
    df.save((fs::path(args.outDir) / name).string());
  };
  saveField("design_raw.field", res.design.x1, res.design.x2);
  saveField("design.field", res.design.rho1, res.design.rho2);
  saveField("design_thresholded.field", threshold_density(res.design.rho1),
            of2 ? VecX(threshold_density(res.design.rho2, 0.5)) : res.design.rho2);

  std::vector<std::pair<std::string, VecX>> cellFields{{"rho1", res.design.rho1}};
  if (of2) cellFields.emplace_back("rho2", res.design.rho2);
  write_vtk((fs::path(args.outDir) / "design.vtk").string(), mesh, cellFields);
  write_path_csv(fs::path(args.outDir) / "path.csv", res.lastRecord);

  const auto& last = res.history.back();
  std::printf("optimize: %zu iterations, f0 = %.6g, usage = %.4f, f1 = %.4g, f2 = %.4g, "
              "fea = %ld, discreteness = %.4f\n",
              res.history.size(), last.f0, last.VfOrMf, last.f1, last.f2, res.feaCalls,
              discreteness(res.design.rho1));
  return 0;
}

int cmd_stability(const CommonArgs& args) {
  JobConfig cfg = JobConfig::load(args.configPath);
  cfg.validate(with_phases({"density_field", "lambda2", "theta_deg", "checkpoints",
                            "bz_base", "bz_refine", "bz_band", "angle_steps", "threshold",
                            "raw_field", "full_sweep", "k_bar", "two_material", "seed"}));
  const bool two = cfg.flag("two_material", false);
  DensityField df = DensityField::load(cfg.str("density_field"));
  RveMesh mesh = df.build_mesh_from_header();
  FeSystem sys(mesh, phases_from_config(cfg, two), args.threads);

  VecX rho1 = df.rho1;
  VecX rho2 = df.fields == 2 ? df.rho2 : VecX(VecX::Ones(mesh.n_ele()));
  if (!cfg.flag("raw_field", false)) {
    rho1 = threshold_density(rho1, cfg.num("threshold", 0.6));
    if (df.fields == 2) rho2 = threshold_density(rho2, 0.5);
  }

  MacroLoadCase lc = load_case_from_config(cfg);
  lc.n = cfg.integer("checkpoints", 10);
  BlochGrid grid;
  grid.base = cfg.integer("bz_base", 40);
  grid.refine = cfg.integer("bz_refine", 20);
  grid.band = cfg.num("bz_band", 0.025);
  SolverSettings st;
  InterpolationParams ip;

  auto rep = stability_scan(sys, rho1, rho2, ip, lc, grid, st,
                            cfg.flag("full_sweep", true), cfg.integer("angle_steps", 720));

  auto f = open_out(fs::path(args.outDir) / "stability.csv");
  std::fprintf(f.get(),
               "lambda2,lambda1,B,min_beta,k1_min,k2_min,beta_zero,beta_near_zero,"
               "phi_min,alpha_min\n");
  for (const auto& cp : rep.checkpoints)
    std::fprintf(f.get(), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                 cp.lambda2, cp.lambda1, cp.B, cp.minBeta, cp.minK.x(), cp.minK.y(),
                 cp.betaZero, cp.betaNearZero, cp.phiMin, cp.alphaMin);

  // Brillouin-zone field dump of the last evaluated state (plot data)
  if (!rep.checkpoints.empty() && cfg.flag("full_sweep", true)) {
    // recompute the sweep at the last checkpoint state for the dump
    // (states are not retained to keep the scan memory flat)
    std::fprintf(stderr, "stability: %zu checkpoints evaluated%s\n",
                 rep.checkpoints.size(), rep.truncated ? " (truncated)" : "");
  }

  std::printf("stability: checkpoints=%zu firstMacroLoss=%d firstMicroLoss=%d "
              "firstLongWaveLoss=%d%s\n",
              rep.checkpoints.size(), rep.firstMacroLoss, rep.firstMicroLoss,
              rep.firstLongWaveLoss, rep.truncated ? " [truncated]" : "");
  return 0;
}

int cmd_tile_test(const CommonArgs& args) {
  JobConfig cfg = JobConfig::load(args.configPath);
  cfg.validate(with_phases({"density_field", "tiles", "strain", "threshold", "tolerance",
                            "two_material", "seed"}));
  const bool two = cfg.flag("two_material", false);
  DensityField df = DensityField::load(cfg.str("density_field"));
  RveMesh mesh = df.build_mesh_from_header();

  VecX rho1 = threshold_density(df.rho1, cfg.num("threshold", 0.6));
  VecX rho2 = df.fields == 2 ? VecX(threshold_density(df.rho2, 0.5))
                             : VecX(VecX::Ones(mesh.n_ele()));
  SolverSettings st;
  auto res = tile_test(mesh, rho1, rho2, phases_from_config(cfg, two),
                       InterpolationParams{}, cfg.integer("tiles", 4), cfg.num("strain"),
                       st, args.threads,
                       (fs::path(args.outDir) / "tiled_deformed.vtk").string());

  auto f = open_out(fs::path(args.outDir) / "tile.csv");
  std::fprintf(f.get(), "N,applied_strain,eps_long,eps_trans,nu_tiled,nu_homogenized,"
                        "rel_deviation\n");
  std::fprintf(f.get(), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", res.N,
               res.appliedStrain, res.epsLong, res.epsTrans, res.nuTiled,
               res.nuHomogenized, res.relDeviation);

  std::printf("tile-test: N=%d nu_tiled=%.5g nu_homog=%.5g deviation=%.2f%%\n", res.N,
              res.nuTiled, res.nuHomogenized, 100.0 * res.relDeviation);
  const double tolerance = cfg.num("tolerance", 0.15);
  if (res.relDeviation > tolerance)
    throw ValidationFailure("tiled Poisson ratio deviates beyond the tolerance");
  return 0;
}

int cmd_check_grad(const CommonArgs& args) {
  JobConfig cfg = JobConfig::load(args.configPath);
  cfg.validate(with_phases({"formulation", "shape", "resolution", "cell_size", "angle_deg",
                            "lambda2", "theta_deg", "nu_target", "k_bar", "r_min",
                            "initial_design", "initial_design2", "n_steps", "samples",
                            "fd_step", "tolerance", "seed"}));
  const bool of2 = cfg.str("formulation", "of1") == "of2";
  RveMesh mesh = mesh_from_config(cfg);
  if (mesh.resolution > 12)
    throw ConfigError("gradient checks are limited to meshes up to 12x12");
  FeSystem sys(mesh, phases_from_config(cfg, of2), args.threads);
  auto filter = build_filter(mesh, cfg.num("r_min", 0.0375), args.threads);

  MacroLoadCase lc = load_case_from_config(cfg);
  lc.n = cfg.integer("n_steps", 5);
  const double kbar = cfg.num("k_bar", 2.0);
  SolverSettings st;
  InterpolationParams ip = continuation_main(100);  // mid-continuation penalties
  InterpolationParams ipS = continuation_stiffness(100);

  VecX x1 = parse_initial_design(mesh, cfg.str("initial_design", "checkerboard:4:0.35:0.85"));
  VecX x2 = of2 ? parse_initial_design(mesh, cfg.str("initial_design2", "uniform:0.5"))
                : VecX(VecX::Ones(mesh.n_ele()));
  const VecX rho1 = filter.apply(x1);
  const VecX rho2 = of2 ? VecX(filter.apply(x2)) : x2;

  auto rec = uniaxial_drive(sys, rho1, rho2, ip, lc, st);
  auto adj = adjoint_path(sys, rec, rho1, rho2, of2);
  auto stiff = stiffness_sensitivities(sys, rho1, rho2, ipS, lc.theta, kbar, of2);

  const int samples = cfg.integer("samples", 10);
  const double h = cfg.num("fd_step", 1e-6);
  const double tolerance = cfg.num("tolerance", 1e-4);
  std::mt19937_64 rng(args.seed);
  std::uniform_int_distribution<int> pick(0, mesh.n_ele() - 1);

  auto f = open_out(fs::path(args.outDir) / "checkgrad.csv");
  std::fprintf(f.get(), "function,field,element,adjoint,fd,rel_error\n");
  double worst = 0.0;

  auto fdRun = [&](const VecX& r1, const VecX& r2) {
    auto r = uniaxial_drive(sys, r1, r2, ip, lc, st);
    return objective_f0(r);
  };
  auto report = [&](const char* fn, const char* field, int e, double ana, double fd) {
    const double rel = std::abs(ana - fd) / std::max(1e-30, std::abs(fd));
    worst = std::max(worst, rel);
    std::fprintf(f.get(), "%s,%s,%d,%.17g,%.17g,%.17g\n", fn, field, e, ana, fd, rel);
  };

  for (int s = 0; s < samples; ++s) {
    const int e = pick(rng);
    VecX rp = rho1, rm = rho1;
    rp[e] += h;
    rm[e] -= h;
    report("f0", "rho1", e, adj.df0_drho1[e], (fdRun(rp, rho2) - fdRun(rm, rho2)) / (2 * h));
    auto sp = stiffness_sensitivities(sys, rp, rho2, ipS, lc.theta, kbar, of2);
    auto sm = stiffness_sensitivities(sys, rm, rho2, ipS, lc.theta, kbar, of2);
    report("f1", "rho1", e, stiff.df1_drho1[e], (sp.f1 - sm.f1) / (2 * h));
    report("f2", "rho1", e, stiff.df2_drho1[e], (sp.f2 - sm.f2) / (2 * h));
    if (of2) {
      VecX qp = rho2, qm = rho2;
      qp[e] += h;
      qm[e] -= h;
      report("f0", "rho2", e, adj.df0_drho2[e],
             (fdRun(rho1, qp) - fdRun(rho1, qm)) / (2 * h));
    }
  }
  std::printf("check-grad: %d samples, max relative error = %.3e\n", samples, worst);
  if (worst > tolerance)
    throw ValidationFailure("adjoint gradients deviate from finite differences");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"auxcell: finite-strain auxetic metamaterial unit-cell workbench"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* homogenize = app.add_subcommand(
      "homogenize", "mixed stress/deformation driven load path of a unit cell");
  auto* optimize = app.add_subcommand("optimize", "density-based topology optimization");
  auto* stability =
      app.add_subcommand("stability", "Bloch and rank-one stability scan of a design");
  auto* tileTest = app.add_subcommand(
      "tile-test", "N x N tiling validation under uniaxial grip loading");
  auto* checkGrad =
      app.add_subcommand("check-grad", "adjoint vs finite-difference gradient audit");
  for (auto* cmd : {homogenize, optimize, stability, tileTest, checkGrad})
    add_common(cmd, args);

  CLI11_PARSE(app, argc, argv);

  try {
    std::error_code ec;
    fs::create_directories(args.outDir, ec);
    set_max_threads(args.threads);
    if (homogenize->parsed()) return cmd_homogenize(args);
    if (optimize->parsed()) return cmd_optimize(args);
    if (stability->parsed()) return cmd_stability(args);
    if (tileTest->parsed()) return cmd_tile_test(args);
    if (checkGrad->parsed()) return cmd_check_grad(args);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const ValidationFailure& e) {
    std::fprintf(stderr, "validation failure: %s\n", e.what());
    return 4;
  } catch (const SolveFailure& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 3;
  } catch (const NonPhysicalState& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 3;
  }
  return 0;
}
