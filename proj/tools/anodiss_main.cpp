#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "anodiss.h"

namespace {

int finish(anodiss_ctx* ctx, int rc) {
  if (rc != ANODISS_OK) std::fprintf(stderr, "error: %s\n", anodiss_last_error(ctx));
  anodiss_ctx_destroy(ctx);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiscale advection-diffusion toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", anodiss_version());

  std::string regime = "desk", table, field, theta0 = "x-coordinate", starts = "grid:8";
  std::string out, q_list = "0", prefix, run_dir;
  double a0 = 0.1, delta = 0.3, eps = 0, alpha = 0.5, kappa = 1e-3, T = 1, nu = 1e-3;
  double dt = 1e-3, kappa_cap = 0;
  int q_max = 10, q = 0, res = 256, m_grid = 8;
  long long n_traj = 10000;
  unsigned long long seed = 1;
  bool no_check = false;

  CLI::App* params = app.add_subcommand("params", "build a parameter table");
  params->add_option("--regime", regime, "paper or desk");
  params->add_option("--a0", a0, "root pipe width");
  params->add_option("--delta", delta, "supercriticality exponent");
  params->add_option("--eps", eps, "scale separation exponent (<=0: regime default)");
  params->add_option("--qmax", q_max, "deepest level");
  params->add_flag("--no-check", no_check, "skip the two-sided bound verification");
  params->add_option("--out", out, "table CSV path")->required();

  CLI::App* feas = app.add_subcommand("feasibility", "exponent feasibility report");
  feas->add_option("--alpha", alpha, "regularity exponent")->required();
  feas->add_option("--eps", eps, "scale separation exponent")->required();
  feas->add_option("--delta", delta, "supercriticality exponent")->required();

  CLI::App* bf = app.add_subcommand("build-field", "sample and mollify a field level");
  bf->add_option("--table", table, "table CSV")->required();
  bf->add_option("--q", q, "level");
  bf->add_option("--res", res, "grid resolution");
  bf->add_option("--out", out, "field binary path")->required();

  CLI::App* tree = app.add_subcommand("tree", "pipe-tree geometry as JSON");
  tree->add_option("--table", table, "table CSV")->required();
  tree->add_option("--q", q, "level");
  tree->add_option("--out", out, "JSON path")->required();

  CLI::App* solve = app.add_subcommand("solve", "advection-diffusion run");
  solve->add_option("--field", field, "field binary")->required();
  solve->add_option("--theta0", theta0, "x-coordinate|cosx|cosy|sinx|stream");
  solve->add_option("--kappa", kappa, "diffusivity")->required();
  solve->add_option("--T", T, "final time");
  solve->add_option("--res", res, "resample resolution (0: keep)")->default_val(0);
  solve->add_option("--out", out, "run CSV path")->required();

  CLI::App* mc = app.add_subcommand("mc", "backward stochastic flow ensemble");
  mc->add_option("--field", field, "field binary")->required();
  mc->add_option("--table", table, "table CSV (for dset starts)");
  mc->add_option("--kappa", kappa, "diffusivity")->required();
  mc->add_option("--T", T, "final time");
  mc->add_option("--ntraj", n_traj, "trajectories per start");
  mc->add_option("--dt", dt, "time step");
  mc->add_option("--seed", seed, "RNG seed");
  mc->add_option("--starts", starts, "grid:m, dset:q or a CSV file");
  mc->add_option("--out", out, "endpoint CSV path")->required();

  CLI::App* fld = app.add_subcommand("fldiss", "fluctuation-dissipation check");
  fld->add_option("--field", field, "field binary")->required();
  fld->add_option("--theta0", theta0, "initial datum");
  fld->add_option("--kappa", kappa, "diffusivity")->required();
  fld->add_option("--T", T, "final time");
  fld->add_option("--ntraj", n_traj, "trajectories per start");
  fld->add_option("--dt", dt, "time step");
  fld->add_option("--seed", seed, "RNG seed");
  fld->add_option("--mgrid", m_grid, "start grid size");
  fld->add_option("--out", out, "optional JSON path");

  CLI::App* lad = app.add_subcommand("ladder", "dissipation ladder across levels");
  lad->add_option("--table", table, "table CSV")->required();
  lad->add_option("--q", q_list, "comma-separated diffusivity levels");
  lad->add_option("--theta0", theta0, "initial datum");
  lad->add_option("--T", T, "final time");
  lad->add_option("--res", res, "grid resolution");
  lad->add_option("--kappa-cap", kappa_cap, "cap on kappa_q (0: none)");
  lad->add_option("--out", out, "ladder CSV path")->required();

  CLI::App* ns = app.add_subcommand("ns3d", "steady 2.5-dimensional embedding");
  ns->add_option("--field", field, "field binary")->required();
  ns->add_option("--nu", nu, "viscosity")->required();
  ns->add_option("--theta0", theta0, "initial datum");
  ns->add_option("--T", T, "final time");
  ns->add_option("--out-prefix", prefix, "output prefix")->required();

  CLI::App* rep = app.add_subcommand("report", "render report.md from a run directory");
  rep->add_option("--dir", run_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  anodiss_ctx* ctx = anodiss_ctx_create();
  if (!ctx) {
    std::fprintf(stderr, "error: out of memory\n");
    return ANODISS_ERR_NUMERIC;
  }
  char json[1024];

  if (params->parsed())
    return finish(ctx, anodiss_params(ctx, regime.c_str(), a0, delta, eps, q_max, !no_check,
                                      out.c_str()));
  if (feas->parsed()) {
    int rc = anodiss_feasibility(ctx, alpha, eps, delta, json, sizeof json);
    if (rc == ANODISS_OK) std::printf("%s\n", json);
    return finish(ctx, rc);
  }
  if (bf->parsed())
    return finish(ctx, anodiss_build_field(ctx, table.c_str(), q, res, out.c_str()));
  if (tree->parsed()) return finish(ctx, anodiss_tree(ctx, table.c_str(), q, out.c_str()));
  if (solve->parsed())
    return finish(ctx, anodiss_solve(ctx, field.c_str(), theta0.c_str(), kappa, T, res,
                                     out.c_str()));
  if (mc->parsed())
    return finish(ctx, anodiss_mc(ctx, field.c_str(), table.c_str(), kappa, T, n_traj, dt, seed,
                                  starts.c_str(), out.c_str()));
  if (fld->parsed()) {
    int rc = anodiss_fldiss(ctx, field.c_str(), theta0.c_str(), kappa, T, n_traj, dt, seed,
                            m_grid, out.c_str(), json, sizeof json);
    if (rc == ANODISS_OK) std::printf("%s\n", json);
    return finish(ctx, rc);
  }
  if (lad->parsed())
    return finish(ctx, anodiss_ladder(ctx, table.c_str(), q_list.c_str(), theta0.c_str(), T, res,
                                      kappa_cap, out.c_str()));
  if (ns->parsed()) {
    double residual = 0;
    int rc = anodiss_ns3d(ctx, field.c_str(), nu, theta0.c_str(), T, prefix.c_str(), &residual);
    if (rc == ANODISS_OK) std::printf("residual %.17g\n", residual);
    return finish(ctx, rc);
  }
  return finish(ctx, anodiss_report(ctx, run_dir.c_str()));
}
