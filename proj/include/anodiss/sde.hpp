#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "anodiss/field.hpp"
#include "anodiss/gridfield.hpp"

namespace anodiss {

struct EnsembleSpec {
  long long n_traj = 1000;
  double dt = 1e-3;
  double T = 1.0;
  uint64_t seed = 0;
  bool store_paths = false;
};

struct StartStats {
  Vec2 start, mean;
  double cov_xx = 0, cov_xy = 0, cov_yy = 0;
  double var = 0;    // E |X - EX|^2 = cov_xx + cov_yy
  double var_x = 0;  // first component only
};

// endpoints live in R^2 (universal cover of the torus with the 1-periodic
// field), laid out start-major: endpoint of trajectory i from start s is
// endpoints[s * n_traj + i]
struct TrajectoryBatch {
  std::vector<Vec2> starts;
  long long n_traj = 0;
  double dt_used = 0;
  std::vector<Vec2> endpoints;
  std::vector<StartStats> stats;
  std::vector<std::vector<Vec2>> paths;  // per trajectory when store_paths
};

// Backward stochastic flow realized as the forward SDE
// dY = -u(Y) ds + sqrt(2 kappa) dW, Y(0) = start, Euler-Maruyama. Trajectory
// (seed, start, i) draws its noise from a counter-based stream, so results are
// independent of scheduling; statistics use fixed-block pairwise reduction.
TrajectoryBatch backward_flow_ensemble(const GridField& u, double kappa, const EnsembleSpec& spec,
                                       const std::vector<Vec2>& starts);

struct FkEstimate {
  Vec2 start;
  double mean = 0, se = 0;
};
// theta0 extended periodically to R^2
std::vector<FkEstimate> feynman_kac_estimate(const TrajectoryBatch& batch,
                                             const GridScalar& theta0);

struct FldissReport {
  double lhs = 0;     // MC endpoint variance of theta0, averaged over the start grid
  double rhs = 0;     // 2 x cumulative dissipation from the PDE solve
  double mc_se = 0;   // standard error of lhs
  double pde_tol = 0; // energy residual of the solve
  double rel_err = 0; // |lhs - rhs| / max(rhs, 1e-15)

  std::string to_json() const;  // one line
};
FldissReport fldiss_check(const GridField& u, const GridScalar& theta0, double kappa, double T,
                          const EnsembleSpec& spec, int m_grid);

struct VarianceReport {
  std::vector<StartStats> per_start;
  double min_var = 0, min_var_x = 0;
  double mean_var = 0;  // average over starts, stands in for the L^2(D) value
};
// starts stratified over the dissipative rectangles of f (one per rectangle,
// evenly strided down to cap when there are more)
VarianceReport endpoint_variance_on_D(const GridField& u, const AnalyticField& f, double kappa,
                                      const EnsembleSpec& spec, int cap = 64);

struct ClusterReport {
  std::vector<double> c2_grid;
  std::vector<double> min_near, min_far;  // min over starts of P[|X-x| <= c2], P[|X-x| >= 2 c2]
  double best = 0;                        // max over the grid of min(min_near, min_far)
  double p_omega = 0;                     // P[sup_t |W_t - W_T| <= K]
  bool deterministic = false;             // kappa = 0 degenerate limit
};
ClusterReport two_cluster_diagnostic(const GridField& u, const AnalyticField& f, double kappa,
                                     const EnsembleSpec& spec, double c2, double K, int cap = 16);

struct HitProfile {
  int level = 0;
  double frac_hit = 0;  // fraction of trajectories that reached the shell
  double q25 = 0, q50 = 0, q75 = 0;  // hitting-time quartiles among hits
};
// starts at the entry segments of level f.q - 1; per level 1 <= j <= q_max - 1,
// first time the reverse-time trajectory comes within A_j / 2 of a Gamma_j
// segment (a shell at level j needs table entries past it)
std::vector<HitProfile> stopping_time_profile(const GridField& u, const AnalyticField& f,
                                              double kappa, const EnsembleSpec& spec,
                                              int cap = 16);

void write_endpoints_csv(const TrajectoryBatch& batch, const std::string& path);

}  // namespace anodiss
