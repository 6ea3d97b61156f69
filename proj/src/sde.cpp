#include "anodiss/sde.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "anodiss/pde.hpp"
#include "anodiss/util.hpp"

namespace anodiss {

static const double kTwoPi = 6.28318530717958647692;

namespace {

// Philox4x32-10 counter-based generator; one block per (seed, trajectory, step)
inline void philox_block(uint64_t seed, uint64_t traj, uint64_t step, uint32_t out[4]) {
  uint32_t c[4] = {(uint32_t)step, (uint32_t)(step >> 32), (uint32_t)traj,
                   (uint32_t)(traj >> 32)};
  uint32_t k[2] = {(uint32_t)seed, (uint32_t)(seed >> 32)};
  for (int r = 0; r < 10; ++r) {
    uint64_t p0 = 0xD2511F53ull * c[0];
    uint64_t p1 = 0xCD9E8D57ull * c[2];
    uint32_t n0 = (uint32_t)(p1 >> 32) ^ c[1] ^ k[0];
    uint32_t n1 = (uint32_t)p1;
    uint32_t n2 = (uint32_t)(p0 >> 32) ^ c[3] ^ k[1];
    uint32_t n3 = (uint32_t)p0;
    c[0] = n0;
    c[1] = n1;
    c[2] = n2;
    c[3] = n3;
    k[0] += 0x9E3779B9u;
    k[1] += 0xBB67AE85u;
  }
  out[0] = c[0];
  out[1] = c[1];
  out[2] = c[2];
  out[3] = c[3];
}

// Box-Muller pair from one block
inline Vec2 gauss2(uint64_t seed, uint64_t traj, uint64_t step) {
  uint32_t b[4];
  philox_block(seed, traj, step, b);
  double u1 = ((double)b[0] + 1.0) * 0x1p-32;  // (0, 1]
  double u2 = ((double)b[1] + 0.5) * 0x1p-32;  // (0, 1)
  double r = std::sqrt(-2 * std::log(u1));
  return {r * std::cos(kTwoPi * u2), r * std::sin(kTwoPi * u2)};
}

// deterministic order-fixed reduction: sequential within 1024-blocks, then
// pairwise over blocks
double psum(const double* a, size_t n) {
  if (n <= 1024) {
    double s = 0;
    for (size_t i = 0; i < n; ++i) s += a[i];
    return s;
  }
  size_t nb = (n + 1023) / 1024;
  size_t half = (nb / 2) * 1024;
  return psum(a, half) + psum(a + half, n - half);
}

double psum(const std::vector<double>& a) { return psum(a.data(), a.size()); }

double grid_min_scale(const GridField& u) {
  double s = 1.0 / u.res;
  if (!u.ell_used.empty()) s = *std::min_element(u.ell_used.begin(), u.ell_used.end());
  return s;
}

void validate(const GridField& u, double kappa, const EnsembleSpec& spec) {
  if (spec.n_traj < 1) throw config_error("ensemble needs n_traj >= 1");
  if (!(spec.dt > 0) || !(spec.T > 0)) throw config_error("ensemble needs dt, T > 0");
  if (!(kappa >= 0)) throw config_error("ensemble needs kappa >= 0");
  double vmax = u.max_speed();
  if (vmax * spec.dt > grid_min_scale(u) / 4)
    throw config_error("dt too large: |u|_inf dt = " + fmt17(vmax * spec.dt) +
                       " exceeds a quarter of the field's minimum scale");
}

StartStats make_stats(Vec2 start, const Vec2* e, long long n) {
  StartStats s;
  s.start = start;
  std::vector<double> w((size_t)n);
  for (long long i = 0; i < n; ++i) w[(size_t)i] = e[i].x;
  s.mean.x = psum(w) / (double)n;
  for (long long i = 0; i < n; ++i) w[(size_t)i] = e[i].y;
  s.mean.y = psum(w) / (double)n;
  if (n > 1) {
    double nn = (double)(n - 1);
    for (long long i = 0; i < n; ++i) w[(size_t)i] = (e[i].x - s.mean.x) * (e[i].x - s.mean.x);
    s.cov_xx = psum(w) / nn;
    for (long long i = 0; i < n; ++i) w[(size_t)i] = (e[i].x - s.mean.x) * (e[i].y - s.mean.y);
    s.cov_xy = psum(w) / nn;
    for (long long i = 0; i < n; ++i) w[(size_t)i] = (e[i].y - s.mean.y) * (e[i].y - s.mean.y);
    s.cov_yy = psum(w) / nn;
  }
  s.var = s.cov_xx + s.cov_yy;
  s.var_x = s.cov_xx;
  return s;
}

// evenly strided subset of the dissipative-rectangle centers
std::vector<Vec2> d_set_starts(const AnalyticField& f, int cap) {
  std::vector<RectFrame> rects = dissipative_rects(f, f.q);
  if (rects.empty()) throw config_error("dissipative set is empty");
  std::vector<Vec2> starts;
  int m = std::min<int>(cap, (int)rects.size());
  for (int k = 0; k < m; ++k) {
    const RectFrame& r = rects[(size_t)k * rects.size() / m];
    starts.push_back(r.to_global({r.length / 2, 0}));
  }
  return starts;
}

double dist_seg(Vec2 p, Vec2 a, Vec2 b) {
  Vec2 d = b - a;
  double len2 = d.x * d.x + d.y * d.y;
  double t = len2 > 0 ? ((p.x - a.x) * d.x + (p.y - a.y) * d.y) / len2 : 0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * d));
}

Vec2 wrap01(Vec2 p) { return {p.x - std::floor(p.x), p.y - std::floor(p.y)}; }

}  // namespace

TrajectoryBatch backward_flow_ensemble(const GridField& u, double kappa, const EnsembleSpec& spec,
                                       const std::vector<Vec2>& starts) {
  validate(u, kappa, spec);
  if (starts.empty()) throw config_error("ensemble needs at least one start");
  long long steps = (long long)std::ceil(spec.T / spec.dt - 1e-9);
  double dt = spec.T / (double)steps;
  if (spec.store_paths && (double)spec.n_traj * starts.size() * (double)steps > 2e6)
    throw config_error("store_paths refused: path storage too large");
  TrajectoryBatch batch;
  batch.starts = starts;
  batch.n_traj = spec.n_traj;
  batch.dt_used = dt;
  batch.endpoints.resize(starts.size() * (size_t)spec.n_traj);
  double sig = std::sqrt(2 * kappa * dt);
  for (size_t s = 0; s < starts.size(); ++s)
    for (long long i = 0; i < spec.n_traj; ++i) {
      uint64_t traj = (uint64_t)s * spec.n_traj + (uint64_t)i;
      Vec2 y = starts[s];
      std::vector<Vec2> path;
      if (spec.store_paths) path.push_back(y);
      for (long long k = 0; k < steps; ++k) {
        Vec2 z = gauss2(spec.seed, traj, (uint64_t)k);
        Vec2 a = u.eval(y);
        y = {y.x - a.x * dt + sig * z.x, y.y - a.y * dt + sig * z.y};
        if (spec.store_paths) path.push_back(y);
      }
      batch.endpoints[s * (size_t)spec.n_traj + i] = y;
      if (spec.store_paths) batch.paths.push_back(std::move(path));
    }
  for (size_t s = 0; s < starts.size(); ++s)
    batch.stats.push_back(
        make_stats(starts[s], &batch.endpoints[s * (size_t)spec.n_traj], spec.n_traj));
  return batch;
}

std::vector<FkEstimate> feynman_kac_estimate(const TrajectoryBatch& batch,
                                             const GridScalar& theta0) {
  std::vector<FkEstimate> out;
  long long n = batch.n_traj;
  std::vector<double> w((size_t)n);
  for (size_t s = 0; s < batch.starts.size(); ++s) {
    const Vec2* e = &batch.endpoints[s * (size_t)n];
    for (long long i = 0; i < n; ++i) w[(size_t)i] = theta0.eval(e[i]);
    FkEstimate fk;
    fk.start = batch.starts[s];
    fk.mean = psum(w) / (double)n;
    if (n > 1) {
      for (long long i = 0; i < n; ++i) w[(size_t)i] = (w[(size_t)i] - fk.mean) * (w[(size_t)i] - fk.mean);
      fk.se = std::sqrt(psum(w) / (double)(n - 1) / (double)n);
    }
    out.push_back(fk);
  }
  return out;
}

std::string FldissReport::to_json() const {
  return "{\"lhs\": " + fmt17(lhs) + ", \"rhs\": " + fmt17(rhs) + ", \"mc_se\": " + fmt17(mc_se) +
         ", \"pde_tol\": " + fmt17(pde_tol) + ", \"rel_err\": " + fmt17(rel_err) + "}";
}

FldissReport fldiss_check(const GridField& u, const GridScalar& theta0, double kappa, double T,
                          const EnsembleSpec& spec, int m_grid) {
  if (m_grid < 1) throw config_error("fldiss needs a positive start grid");
  std::vector<Vec2> starts;
  for (int i = 0; i < m_grid; ++i)
    for (int j = 0; j < m_grid; ++j)
      starts.push_back({(j + 0.5) / m_grid, (i + 0.5) / m_grid});
  EnsembleSpec sp = spec;
  sp.T = T;
  TrajectoryBatch batch = backward_flow_ensemble(u, kappa, sp, starts);
  long long n = batch.n_traj;
  std::vector<double> w((size_t)n), vars(starts.size()), se2(starts.size());
  for (size_t s = 0; s < starts.size(); ++s) {
    const Vec2* e = &batch.endpoints[s * (size_t)n];
    for (long long i = 0; i < n; ++i) w[(size_t)i] = theta0.eval(e[i]);
    double mu = psum(w) / (double)n;
    for (long long i = 0; i < n; ++i) w[(size_t)i] -= mu;
    std::vector<double> w2((size_t)n), w4((size_t)n);
    for (long long i = 0; i < n; ++i) {
      w2[(size_t)i] = w[(size_t)i] * w[(size_t)i];
      w4[(size_t)i] = w2[(size_t)i] * w2[(size_t)i];
    }
    double s2 = n > 1 ? psum(w2) / (double)(n - 1) : 0;
    double m4 = psum(w4) / (double)n;
    vars[s] = s2;
    se2[s] = n > 1 ? std::max(0.0, m4 - s2 * s2) / (double)n : 0;  // var of the s^2 estimator
  }
  FldissReport rep;
  rep.lhs = psum(vars) / (double)starts.size();
  rep.mc_se = std::sqrt(psum(se2)) / (double)starts.size();
  SolveResult pde = solve_adv_diff(u, theta0, kappa, T);
  rep.rhs = 2 * pde.cum_diss.back();
  rep.pde_tol = pde.energy_residual;
  rep.rel_err = std::fabs(rep.lhs - rep.rhs) / std::max(rep.rhs, 1e-15);
  return rep;
}

VarianceReport endpoint_variance_on_D(const GridField& u, const AnalyticField& f, double kappa,
                                      const EnsembleSpec& spec, int cap) {
  TrajectoryBatch batch = backward_flow_ensemble(u, kappa, spec, d_set_starts(f, cap));
  VarianceReport rep;
  rep.per_start = batch.stats;
  rep.min_var = rep.per_start.front().var;
  rep.min_var_x = rep.per_start.front().var_x;
  double sum = 0;
  for (const StartStats& s : rep.per_start) {
    rep.min_var = std::min(rep.min_var, s.var);
    rep.min_var_x = std::min(rep.min_var_x, s.var_x);
    sum += s.var;
  }
  rep.mean_var = sum / (double)rep.per_start.size();
  return rep;
}

ClusterReport two_cluster_diagnostic(const GridField& u, const AnalyticField& f, double kappa,
                                     const EnsembleSpec& spec, double c2, double K, int cap) {
  validate(u, kappa, spec);
  if (!(c2 > 0) || !(K > 0)) throw config_error("two_cluster needs c2, K > 0");
  std::vector<Vec2> starts = d_set_starts(f, cap);
  long long steps = (long long)std::ceil(spec.T / spec.dt - 1e-9);
  double dt = spec.T / (double)steps;
  double sig = std::sqrt(2 * kappa * dt), sqdt = std::sqrt(dt);
  ClusterReport rep;
  for (int g = -2; g <= 2; ++g) rep.c2_grid.push_back(c2 * std::pow(2.0, g));
  rep.deterministic = kappa == 0;
  std::vector<std::vector<long long>> near(starts.size(), std::vector<long long>(5, 0)),
      far(starts.size(), std::vector<long long>(5, 0));
  long long omega_hits = 0;
  std::vector<Vec2> wpath((size_t)steps + 1);
  for (size_t s = 0; s < starts.size(); ++s)
    for (long long i = 0; i < spec.n_traj; ++i) {
      uint64_t traj = (uint64_t)s * spec.n_traj + (uint64_t)i;
      Vec2 y = starts[s], w{0, 0};
      wpath[0] = w;
      for (long long k = 0; k < steps; ++k) {
        Vec2 z = gauss2(spec.seed, traj, (uint64_t)k);
        Vec2 a = u.eval(y);
        y = {y.x - a.x * dt + sig * z.x, y.y - a.y * dt + sig * z.y};
        w = {w.x + sqdt * z.x, w.y + sqdt * z.y};
        wpath[(size_t)k + 1] = w;
      }
      double d = norm(y - starts[s]);
      for (size_t g = 0; g < 5; ++g) {
        if (d <= rep.c2_grid[g]) ++near[s][g];
        if (d >= 2 * rep.c2_grid[g]) ++far[s][g];
      }
      double sup = 0;
      for (const Vec2& p : wpath) sup = std::max(sup, norm(p - w));
      if (sup <= K) ++omega_hits;
    }
  rep.min_near.assign(5, 1.0);
  rep.min_far.assign(5, 1.0);
  for (size_t g = 0; g < 5; ++g)
    for (size_t s = 0; s < starts.size(); ++s) {
      rep.min_near[g] = std::min(rep.min_near[g], (double)near[s][g] / (double)spec.n_traj);
      rep.min_far[g] = std::min(rep.min_far[g], (double)far[s][g] / (double)spec.n_traj);
    }
  for (size_t g = 0; g < 5; ++g)
    rep.best = std::max(rep.best, std::min(rep.min_near[g], rep.min_far[g]));
  rep.p_omega = (double)omega_hits / ((double)spec.n_traj * (double)starts.size());
  return rep;
}

std::vector<HitProfile> stopping_time_profile(const GridField& u, const AnalyticField& f,
                                              double kappa, const EnsembleSpec& spec, int cap) {
  validate(u, kappa, spec);
  if (f.q < 1) throw config_error("stopping_time_profile needs a tree with q >= 1");
  SegmentSet entry = entry_segments(f, f.q - 1);
  if (entry.segs.empty()) throw config_error("entry segment set is empty");
  std::vector<Vec2> starts;
  int m = std::min<int>(cap, (int)entry.segs.size());
  for (int k = 0; k < m; ++k) {
    const auto& sg = entry.segs[(size_t)k * entry.segs.size() / m];
    starts.push_back(0.5 * (sg.first + sg.second));
  }
  // coarse bucket index over each shell's segments
  const int cells = 128;
  struct Shell {
    double tol;
    std::vector<std::pair<Vec2, Vec2>> segs;
    std::vector<std::vector<int>> idx;
  };
  std::vector<Shell> shells;
  // a shell at level j needs Abar(j+1), so the table must extend past it
  int j_max = std::min(f.q, f.table.q_max - 1);
  if (j_max < 1) throw config_error("stopping_time_profile needs a table with q_max >= 2");
  for (int j = 1; j <= j_max; ++j) {
    Shell sh;
    sh.tol = f.table.A(j) / 2;
    sh.segs = gamma_segments(f, j).segs;
    sh.idx.assign((size_t)cells * cells, {});
    for (int si = 0; si < (int)sh.segs.size(); ++si) {
      const auto& sg = sh.segs[(size_t)si];
      double x0 = std::min(sg.first.x, sg.second.x) - sh.tol;
      double x1 = std::max(sg.first.x, sg.second.x) + sh.tol;
      double y0 = std::min(sg.first.y, sg.second.y) - sh.tol;
      double y1 = std::max(sg.first.y, sg.second.y) + sh.tol;
      for (int ci = (int)std::floor(y0 * cells); ci <= (int)std::floor(y1 * cells); ++ci)
        for (int cj = (int)std::floor(x0 * cells); cj <= (int)std::floor(x1 * cells); ++cj)
          sh.idx[(size_t)((ci % cells + cells) % cells) * cells + ((cj % cells + cells) % cells)]
              .push_back(si);
    }
    shells.push_back(std::move(sh));
  }
  auto hit = [&](const Shell& sh, Vec2 p) {
    Vec2 q = wrap01(p);
    int ci = std::min((int)(q.y * cells), cells - 1), cj = std::min((int)(q.x * cells), cells - 1);
    for (int si : sh.idx[(size_t)ci * cells + cj])
      if (dist_seg(q, sh.segs[(size_t)si].first, sh.segs[(size_t)si].second) <= sh.tol)
        return true;
    return false;
  };
  long long steps = (long long)std::ceil(spec.T / spec.dt - 1e-9);
  double dt = spec.T / (double)steps;
  double sig = std::sqrt(2 * kappa * dt);
  std::vector<std::vector<double>> times(shells.size());
  long long total = 0;
  for (size_t s = 0; s < starts.size(); ++s)
    for (long long i = 0; i < spec.n_traj; ++i, ++total) {
      uint64_t traj = (uint64_t)s * spec.n_traj + (uint64_t)i;
      Vec2 y = starts[s];
      std::vector<char> done(shells.size(), 0);
      size_t remaining = shells.size();
      for (long long k = 0; k < steps && remaining; ++k) {
        Vec2 z = gauss2(spec.seed, traj, (uint64_t)k);
        Vec2 a = u.eval(y);
        y = {y.x - a.x * dt + sig * z.x, y.y - a.y * dt + sig * z.y};
        for (size_t j = 0; j < shells.size(); ++j)
          if (!done[j] && hit(shells[j], y)) {
            done[j] = 1;
            --remaining;
            times[j].push_back((double)(k + 1) * dt);
          }
      }
    }
  std::vector<HitProfile> out;
  for (size_t j = 0; j < shells.size(); ++j) {
    HitProfile hp;
    hp.level = (int)j + 1;
    hp.frac_hit = (double)times[j].size() / (double)total;
    if (!times[j].empty()) {
      std::sort(times[j].begin(), times[j].end());
      auto qtile = [&](double p) {
        size_t k = (size_t)(p * (times[j].size() - 1));
        return times[j][k];
      };
      hp.q25 = qtile(0.25);
      hp.q50 = qtile(0.50);
      hp.q75 = qtile(0.75);
    }
    out.push_back(hp);
  }
  return out;
}

void write_endpoints_csv(const TrajectoryBatch& batch, const std::string& path) {
  std::ofstream o(path);
  if (!o) throw config_error("cannot open " + path + " for writing");
  o << "start_x,start_y,end_x,end_y,seed_index\n";
  for (size_t s = 0; s < batch.starts.size(); ++s)
    for (long long i = 0; i < batch.n_traj; ++i) {
      const Vec2& e = batch.endpoints[s * (size_t)batch.n_traj + i];
      o << fmt17(batch.starts[s].x) << ',' << fmt17(batch.starts[s].y) << ',' << fmt17(e.x) << ','
        << fmt17(e.y) << ',' << (long long)(s * (size_t)batch.n_traj + i) << '\n';
    }
  if (!o) throw config_error("write failed: " + path);
}

}  // namespace anodiss
