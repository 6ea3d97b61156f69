#pragma once
#include <string>
#include <vector>

#include "anodiss/gridfield.hpp"

namespace anodiss {

struct SolveConfig {
  double dt = 0;            // 0 picks min(0.4 h / ||u||_inf, 1e-3), rounded to divide T
  double tol_energy = 1e-6; // acceptable |e(T) + 2 D(T) - e(0)| / e(0)
  int save_stride = 0;      // 0 = auto (~1000 saved rows)
  bool save_snapshots = false;
  int snapshot_stride = 0;  // 0 = auto (~17 snapshots)
};

struct SolveResult {
  std::vector<double> t, energy, diss_rate, cum_diss, min_theta, max_theta;
  std::vector<double> snap_t;
  std::vector<GridScalar> snapshots;
  GridScalar theta_T;
  double dt_used = 0;
  int steps = 0;
  double energy_residual = 0;  // |e(T) + 2 D(T) - e(0)| / e(0)
};

// theta_t + u . grad theta = kappa laplacian theta, pseudo-spectral with the
// 2/3 dealiasing rule, exact diffusion via integrating factor, RK4 advection;
// dissipation is integrated alongside with the same stage weights.
// u is resampled to theta0's resolution and truncated at the dealias cutoff.
SolveResult solve_adv_diff(const GridField& u, const GridScalar& theta0, double kappa, double T,
                           const SolveConfig& cfg = {});

// kinds: cosx, cosy, sinx (sin(2 pi x) / 2 pi), x (sawtooth, spectrally
// smoothed at radius 4/res)
GridScalar theta_init(const std::string& kind, int res);

void write_run_csv(const SolveResult& r, const std::string& path);

struct LadderRow {
  int q = 0;      // index of the diffusivity kappa_q
  int level = 0;  // field level q + 2
  double kappa = 0, e0 = 0, DT = 0, ratio = 0;
};
// for each q in q_list: solve with the pair (u_{q+2}, kappa_q), kappa capped
// at kappa_cap when positive
std::vector<LadderRow> dissipation_ladder(const ParamTable& t, const std::vector<int>& q_list,
                                          const GridScalar& theta0, double T, int res,
                                          double kappa_cap = 0, const SolveConfig& cfg = {});

struct DerivBoundReport {
  double max_rate = 0;  // max_k ||theta_{k+1} - theta_k||_inf / dt
  double bound = 0;     // ||u||_L2 ||theta0||_C1 + ||theta0||_C2 (kappa <= 1)
  double margin = 0;
};
DerivBoundReport time_derivative_bound_check(const SolveResult& r, const GridField& u,
                                             const GridScalar& theta0);

struct StreamIcRow {
  double kappa = 0, e0 = 0, DT = 0, ratio = 0, budget = 0;  // budget = kappa T ||grad H||_2^2
};
std::vector<StreamIcRow> stream_ic_experiment(const GridField& u, const GridScalar& H,
                                              const std::vector<double>& kappa_list, double T,
                                              const SolveConfig& cfg = {});

struct StabilityReport {
  double lhs = 0;    // int |theta1 - theta2|^2 (T)
  double rhs = 0;    // (||theta0||_inf^2 / kappa) int_0^T int |u1 - u2|^2
};
StabilityReport velocity_stability_check(const GridField& u1, const GridField& u2,
                                         const GridScalar& theta0, double kappa, double T,
                                         const SolveConfig& cfg = {});

struct NSFields {
  GridScalar p;
  GridField f;           // forcing of the horizontal equations
  double residual_u = 0; // || u.grad u + grad p - nu lap u - f ||_2, spectral
  double residual_theta = 0;  // energy residual of the scalar solve
  double residual = 0;        // max of the two
};
// steady 2d velocity embedded as (u, theta): p solves lap p = -div div(u x u),
// f = leray(u . grad u) - nu lap u; the vertical equation is the scalar solve
NSFields ns3d_assemble(const GridField& u, double nu, const SolveResult& theta_result);

}  // namespace anodiss
