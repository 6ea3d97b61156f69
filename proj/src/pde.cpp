#include "anodiss/pde.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "anodiss/spectral.hpp"
#include "anodiss/util.hpp"

namespace anodiss {

static const double kTwoPi = 6.28318530717958647692;

namespace {

// spectral workspace for one solve; modes with |k| > (n-1)/3 are zeroed so
// quadratic products are alias-free and advection is exactly skew-symmetric
struct Solver {
  int n, kc;
  Fft2 fft;
  std::vector<double> ux, uy;             // dealiased physical velocity
  std::vector<cplx> v;                    // current spectrum of theta
  std::vector<double> e_half, e_full;     // diffusion factors exp(-4 pi^2 kappa k^2 dt)
  std::vector<cplx> tx, ty, nl, s2, s3, s4;
  std::vector<double> px, py, pw;
  double kappa;

  Solver(const GridField& u, const GridScalar& theta0, double kap)
      : n(theta0.res), kc((n - 1) / 3), fft(n), kappa(kap) {
    GridField us = u.res == n ? u : resample(u, n);
    std::vector<cplx> cx, cy;
    fft.fwd(us.ux, cx);
    fft.fwd(us.uy, cy);
    mask(cx);
    mask(cy);
    fft.inv(cx, ux);
    fft.inv(cy, uy);
    fft.fwd(theta0.a, v);
    mask(v);
  }

  void mask(std::vector<cplx>& c) const {
    for (int iy = 0; iy < n; ++iy) {
      int ky = std::abs(kfold(n, iy));
      for (int ix = 0; ix < fft.nc(); ++ix)
        if (ix > kc || ky > kc) c[(size_t)iy * fft.nc() + ix] = cplx(0, 0);
    }
  }

  void factors(double dt) {
    e_half.assign(fft.cs(), 1.0);
    e_full.assign(fft.cs(), 1.0);
    for (int iy = 0; iy < n; ++iy) {
      int ky = kfold(n, iy);
      for (int ix = 0; ix < fft.nc(); ++ix) {
        double k2 = kTwoPi * kTwoPi * ((double)ix * ix + (double)ky * ky);
        size_t id = (size_t)iy * fft.nc() + ix;
        e_half[id] = std::exp(-kappa * k2 * dt / 2);
        e_full[id] = e_half[id] * e_half[id];
      }
    }
  }

  // N(theta) = -dealias(u . grad theta), zero mean
  void nonlinear(const std::vector<cplx>& c, std::vector<cplx>& out) {
    tx.resize(fft.cs());
    ty.resize(fft.cs());
    for (int iy = 0; iy < n; ++iy) {
      int ky = kfold(n, iy);
      for (int ix = 0; ix < fft.nc(); ++ix) {
        size_t id = (size_t)iy * fft.nc() + ix;
        tx[id] = cplx(0, kTwoPi * ix) * c[id];
        ty[id] = cplx(0, kTwoPi * ky) * c[id];
      }
    }
    fft.inv(tx, px);
    fft.inv(ty, py);
    pw.resize(px.size());
    for (size_t i = 0; i < pw.size(); ++i) pw[i] = -(ux[i] * px[i] + uy[i] * py[i]);
    fft.fwd(pw, out);
    mask(out);
    out[0] = cplx(0, 0);
  }

  // hermitian-weighted sums: the r2c half stores k and -k once except kx = 0, n/2
  double energy(const std::vector<cplx>& c) const {
    double s = 0, inv = 1.0 / ((double)n * n);
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < fft.nc(); ++ix) {
        double w = (ix == 0 || ix == n / 2) ? 1.0 : 2.0;
        s += w * std::norm(c[(size_t)iy * fft.nc() + ix]);
      }
    return s * inv * inv;
  }

  double diss(const std::vector<cplx>& c) const {
    double s = 0, inv = 1.0 / ((double)n * n);
    for (int iy = 0; iy < n; ++iy) {
      int ky = kfold(n, iy);
      for (int ix = 0; ix < fft.nc(); ++ix) {
        double w = (ix == 0 || ix == n / 2) ? 1.0 : 2.0;
        double k2 = kTwoPi * kTwoPi * ((double)ix * ix + (double)ky * ky);
        s += w * k2 * std::norm(c[(size_t)iy * fft.nc() + ix]);
      }
    }
    return kappa * s * inv * inv;
  }
};

double sup_phys(const std::vector<double>& a) {
  double m = 0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

// C^k norm as the max over derivative sup norms of order <= k
void ck_norms(const GridScalar& f, double& c1, double& c2) {
  Fft2 fft(f.res);
  int n = f.res;
  std::vector<cplx> c, d(fft.cs());
  fft.fwd(f.a, c);
  std::vector<double> p;
  auto dsup = [&](int ox, int oy) {
    for (int iy = 0; iy < n; ++iy) {
      int ky = kfold(n, iy);
      if (iy == n / 2) ky = 0;
      for (int ix = 0; ix < fft.nc(); ++ix) {
        int kx = ix == n / 2 ? 0 : ix;
        cplx m(1, 0);
        for (int r = 0; r < ox; ++r) m *= cplx(0, kTwoPi * kx);
        for (int r = 0; r < oy; ++r) m *= cplx(0, kTwoPi * ky);
        d[(size_t)iy * fft.nc() + ix] = m * c[(size_t)iy * fft.nc() + ix];
      }
    }
    fft.inv(d, p);
    return sup_phys(p);
  };
  double s0 = sup_phys(f.a);
  c1 = std::max({s0, dsup(1, 0), dsup(0, 1)});
  c2 = std::max({c1, dsup(2, 0), dsup(1, 1), dsup(0, 2)});
}

}  // namespace

SolveResult solve_adv_diff(const GridField& u, const GridScalar& theta0, double kappa, double T,
                           const SolveConfig& cfg) {
  if (!(kappa >= 0)) throw config_error("solve_adv_diff needs kappa >= 0");
  if (!(T > 0)) throw config_error("solve_adv_diff needs T > 0");
  int n = theta0.res;
  if (n < 8 || (n & 1)) throw config_error("solver resolution must be even, >= 8");
  Solver s(u, theta0, kappa);
  double vmax = 0;
  for (size_t i = 0; i < s.ux.size(); ++i)
    vmax = std::max(vmax, std::sqrt(s.ux[i] * s.ux[i] + s.uy[i] * s.uy[i]));
  double cfl = 0.5 / ((double)n * std::max(vmax, 1e-300));
  double dt = cfg.dt;
  if (dt > 0) {
    if (vmax > 0 && dt > cfl)
      throw config_error("CFL violation: dt " + fmt17(dt) + " exceeds " + fmt17(cfl));
  } else {
    dt = std::min(0.8 * cfl, 1e-3);
  }
  int steps = (int)std::ceil(T / dt - 1e-9);
  dt = T / steps;
  s.factors(dt);

  int stride = cfg.save_stride > 0 ? cfg.save_stride : std::max(1, steps / 1000);
  int snap_stride = cfg.snapshot_stride > 0 ? cfg.snapshot_stride : std::max(1, steps / 16);

  SolveResult r;
  r.dt_used = dt;
  r.steps = steps;
  double e0 = s.energy(s.v), e_prev = e0, D = 0;
  if (!(e0 > 0)) throw config_error("theta0 has zero energy after dealiasing");

  std::vector<double> phys;
  auto save = [&](int k) {
    r.t.push_back(k * dt);
    r.energy.push_back(s.energy(s.v));
    r.diss_rate.push_back(s.diss(s.v));
    r.cum_diss.push_back(D);
    s.fft.inv(s.v, phys);
    double lo = phys[0], hi = phys[0];
    for (double x : phys) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    r.min_theta.push_back(lo);
    r.max_theta.push_back(hi);
  };
  auto snap = [&](int k) {
    if (!cfg.save_snapshots) return;
    GridScalar g;
    g.res = n;
    s.fft.inv(s.v, g.a);
    r.snap_t.push_back(k * dt);
    r.snapshots.push_back(std::move(g));
  };
  save(0);
  snap(0);

  std::vector<cplx> k1, k2, k3, k4, y(s.fft.cs());
  for (int step = 1; step <= steps; ++step) {
    // integrating-factor RK4: E = exp(L dt/2) applied between stages
    s.nonlinear(s.v, k1);
    double g1 = s.diss(s.v);
    for (size_t i = 0; i < y.size(); ++i) y[i] = s.e_half[i] * (s.v[i] + (dt / 2) * k1[i]);
    s.nonlinear(y, k2);
    double g2 = s.diss(y);
    for (size_t i = 0; i < y.size(); ++i) y[i] = s.e_half[i] * s.v[i] + (dt / 2) * k2[i];
    s.nonlinear(y, k3);
    double g3 = s.diss(y);
    for (size_t i = 0; i < y.size(); ++i) y[i] = s.e_full[i] * s.v[i] + dt * s.e_half[i] * k3[i];
    s.nonlinear(y, k4);
    double g4 = s.diss(y);
    for (size_t i = 0; i < y.size(); ++i)
      s.v[i] = s.e_full[i] * s.v[i] +
               (dt / 6) * (s.e_full[i] * k1[i] + 2.0 * s.e_half[i] * (k2[i] + k3[i]) + k4[i]);
    // cumulative dissipation integrated with the same stage weights
    D += (dt / 6) * (g1 + 2 * g2 + 2 * g3 + g4);

    double e = s.energy(s.v);
    if (!std::isfinite(e))
      throw numeric_error("NaN blowup at t = " + fmt17(step * dt) + ", dt = " + fmt17(dt));
    if (kappa > 0 && e > e_prev * (1 + 1e-9) + 1e-300)
      throw numeric_error("energy increased at t = " + fmt17(step * dt));
    e_prev = e;
    if (step % stride == 0 || step == steps) save(step);
    if (cfg.save_snapshots && (step % snap_stride == 0 || step == steps)) snap(step);
  }
  r.theta_T.res = n;
  s.fft.inv(s.v, r.theta_T.a);
  r.energy_residual = std::fabs(r.energy.back() + 2 * D - e0) / e0;
  if (r.energy_residual > cfg.tol_energy)
    throw numeric_error("energy-equality residual " + fmt17(r.energy_residual) +
                        " exceeds tolerance");
  return r;
}

GridScalar theta_init(const std::string& kind, int res) {
  if (res < 8) throw config_error("theta_init needs res >= 8");
  GridScalar g;
  g.res = res;
  g.a.resize((size_t)res * res);
  if (kind == "cosx" || kind == "cosy" || kind == "sinx") {
    for (int i = 0; i < res; ++i)
      for (int j = 0; j < res; ++j) {
        double x = (double)j / res, y = (double)i / res;
        double v = kind == "cosx"   ? std::cos(kTwoPi * x)
                   : kind == "cosy" ? std::cos(kTwoPi * y)
                                    : std::sin(kTwoPi * x) / kTwoPi;
        g.a[(size_t)i * res + j] = v;
      }
    return g;
  }
  if (kind != "x") throw config_error("unknown theta0 kind: " + kind);
  // sawtooth theta(x, y) = x, spectrally smoothed at radius 4/res
  for (int i = 0; i < res; ++i)
    for (int j = 0; j < res; ++j) g.a[(size_t)i * res + j] = (double)j / res;
  Fft2 fft(res);
  std::vector<cplx> c;
  fft.fwd(g.a, c);
  std::vector<double> m = bump_symbol(res, 4.0 / res);
  for (int iy = 0; iy < res; ++iy) {
    double my = m[std::abs(kfold(res, iy))];
    for (int ix = 0; ix < fft.nc(); ++ix) c[(size_t)iy * fft.nc() + ix] *= my * m[ix];
  }
  fft.inv(c, g.a);
  return g;
}

void write_run_csv(const SolveResult& r, const std::string& path) {
  std::ofstream o(path);
  if (!o) throw config_error("cannot open " + path + " for writing");
  o << "t,energy,diss_rate,cum_diss,min_theta,max_theta\n";
  for (size_t k = 0; k < r.t.size(); ++k)
    o << fmt17(r.t[k]) << ',' << fmt17(r.energy[k]) << ',' << fmt17(r.diss_rate[k]) << ','
      << fmt17(r.cum_diss[k]) << ',' << fmt17(r.min_theta[k]) << ',' << fmt17(r.max_theta[k])
      << '\n';
  if (!o) throw config_error("write failed: " + path);
}

std::vector<LadderRow> dissipation_ladder(const ParamTable& t, const std::vector<int>& q_list,
                                          const GridScalar& theta0, double T, int res,
                                          double kappa_cap, const SolveConfig& cfg) {
  std::vector<LadderRow> out;
  for (int q : q_list) {
    if (q < 0 || q + 2 > t.q_max) throw config_error("ladder level q + 2 outside the table");
    LadderRow row;
    row.q = q;
    row.level = q + 2;
    row.kappa = t.kappa(q);
    if (kappa_cap > 0) row.kappa = std::min(row.kappa, kappa_cap);
    GridField u = build_uq(t, row.level, res);
    SolveResult r = solve_adv_diff(u, theta0, row.kappa, T, cfg);
    row.e0 = r.energy.front();
    row.DT = r.cum_diss.back();
    row.ratio = row.DT / row.e0;
    out.push_back(row);
  }
  return out;
}

DerivBoundReport time_derivative_bound_check(const SolveResult& r, const GridField& u,
                                             const GridScalar& theta0) {
  if (r.snapshots.size() < 2)
    throw config_error("time_derivative_bound_check needs saved snapshots");
  DerivBoundReport rep;
  for (size_t k = 0; k + 1 < r.snapshots.size(); ++k) {
    double dtk = r.snap_t[k + 1] - r.snap_t[k];
    double m = 0;
    const auto& a = r.snapshots[k].a;
    const auto& b = r.snapshots[k + 1].a;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(b[i] - a[i]));
    rep.max_rate = std::max(rep.max_rate, m / dtk);
  }
  double usq = 0;
  for (size_t i = 0; i < u.ux.size(); ++i) usq += u.ux[i] * u.ux[i] + u.uy[i] * u.uy[i];
  double ul2 = std::sqrt(usq / (double)u.ux.size());
  double c1, c2;
  ck_norms(theta0, c1, c2);
  rep.bound = ul2 * c1 + c2;
  rep.margin = rep.bound - rep.max_rate;
  return rep;
}

std::vector<StreamIcRow> stream_ic_experiment(const GridField& u, const GridScalar& H,
                                              const std::vector<double>& kappa_list, double T,
                                              const SolveConfig& cfg) {
  double gsq = H.grad_l2sq();
  std::vector<StreamIcRow> out;
  for (double kap : kappa_list) {
    if (!(kap > 0)) throw config_error("stream_ic_experiment needs kappa > 0");
    SolveResult r = solve_adv_diff(u, H, kap, T, cfg);
    StreamIcRow row;
    row.kappa = kap;
    row.e0 = r.energy.front();
    row.DT = r.cum_diss.back();
    row.ratio = row.DT / row.e0;
    row.budget = kap * T * gsq;
    out.push_back(row);
  }
  return out;
}

StabilityReport velocity_stability_check(const GridField& u1, const GridField& u2,
                                         const GridScalar& theta0, double kappa, double T,
                                         const SolveConfig& cfg) {
  if (u1.res != u2.res) throw config_error("stability check needs matching resolutions");
  if (!(kappa > 0)) throw config_error("stability check needs kappa > 0");
  SolveResult r1 = solve_adv_diff(u1, theta0, kappa, T, cfg);
  SolveResult r2 = solve_adv_diff(u2, theta0, kappa, T, cfg);
  StabilityReport rep;
  double s = 0;
  for (size_t i = 0; i < r1.theta_T.a.size(); ++i) {
    double d = r1.theta_T.a[i] - r2.theta_T.a[i];
    s += d * d;
  }
  rep.lhs = s / (double)r1.theta_T.a.size();
  double du = 0;
  for (size_t i = 0; i < u1.ux.size(); ++i) {
    double dx = u1.ux[i] - u2.ux[i], dy = u1.uy[i] - u2.uy[i];
    du += dx * dx + dy * dy;
  }
  du /= (double)u1.ux.size();  // autonomous fields: time integral is T * ||du||_2^2
  rep.rhs = sup_phys(theta0.a) * sup_phys(theta0.a) / kappa * T * du;
  return rep;
}

NSFields ns3d_assemble(const GridField& u, double nu, const SolveResult& theta_result) {
  int n = u.res;
  Fft2 fft(n);
  std::vector<cplx> cx, cy;
  fft.fwd(u.ux, cx);
  fft.fwd(u.uy, cy);
  // physical advection term (u . grad) u from spectral derivatives
  std::vector<cplx> d(fft.cs());
  std::vector<double> dxx, dxy, dyx, dyy;
  auto deriv = [&](const std::vector<cplx>& c, bool wrt_x, std::vector<double>& out) {
    for (int iy = 0; iy < n; ++iy) {
      int ky = kfold(n, iy);
      if (iy == n / 2) ky = 0;
      for (int ix = 0; ix < fft.nc(); ++ix) {
        int kx = ix == n / 2 ? 0 : ix;
        d[(size_t)iy * fft.nc() + ix] =
            cplx(0, kTwoPi * (wrt_x ? kx : ky)) * c[(size_t)iy * fft.nc() + ix];
      }
    }
    fft.inv(d, out);
  };
  deriv(cx, true, dxx);
  deriv(cx, false, dxy);
  deriv(cy, true, dyx);
  deriv(cy, false, dyy);
  std::vector<double> adv_x(u.ux.size()), adv_y(u.ux.size());
  for (size_t i = 0; i < adv_x.size(); ++i) {
    adv_x[i] = u.ux[i] * dxx[i] + u.uy[i] * dxy[i];
    adv_y[i] = u.ux[i] * dyx[i] + u.uy[i] * dyy[i];
  }
  std::vector<cplx> ax, ay;
  fft.fwd(adv_x, ax);
  fft.fwd(adv_y, ay);

  // split A = leray(A) + grad phi; p = -phi makes the horizontal residual
  // vanish. All spectral ops in this suite drop Nyquist modes, so A is
  // truncated the same way and the residual is measured in that space.
  std::vector<cplx> cp(fft.cs(), cplx(0, 0)), fx(fft.cs(), cplx(0, 0)), fy(fft.cs(), cplx(0, 0));
  std::vector<cplx> gpx(fft.cs(), cplx(0, 0)), gpy(fft.cs(), cplx(0, 0));
  std::vector<cplx> lpx(fft.cs(), cplx(0, 0)), lpy(fft.cs(), cplx(0, 0));
  for (int iy = 0; iy < n; ++iy) {
    int ky = kfold(n, iy);
    for (int ix = 0; ix < fft.nc(); ++ix) {
      size_t id = (size_t)iy * fft.nc() + ix;
      int kx = ix;
      if (ix == n / 2 || iy == n / 2) {
        ax[id] = ay[id] = cplx(0, 0);
        continue;
      }
      double k2 = kTwoPi * kTwoPi * ((double)kx * kx + (double)ky * ky);
      lpx[id] = -k2 * cx[id];
      lpy[id] = -k2 * cy[id];
      cplx phi(0, 0);
      if (kx != 0 || ky != 0) {
        // grad phi is the gradient part of A: (i 2 pi k) phi_hat = k (k . A) / |k|^2
        cplx kd = (double(kx) * ax[id] + double(ky) * ay[id]) /
                  ((double)kx * kx + (double)ky * ky);
        phi = kd / cplx(0, kTwoPi);
        cp[id] = -phi;
      }
      gpx[id] = cplx(0, kTwoPi * kx) * cp[id];
      gpy[id] = cplx(0, kTwoPi * ky) * cp[id];
      fx[id] = ax[id] - cplx(0, kTwoPi * kx) * phi - nu * lpx[id];  // leray(A) - nu lap u
      fy[id] = ay[id] - cplx(0, kTwoPi * ky) * phi - nu * lpy[id];
    }
  }
  NSFields out;
  out.p.res = n;
  fft.inv(cp, out.p.a);
  out.f.res = n;
  fft.inv(fx, out.f.ux);
  fft.inv(fy, out.f.uy);
  // residual of A + grad p - nu lap u - f, assembled through physical space
  std::vector<double> pax, pay, pgx, pgy, plx, ply;
  fft.inv(ax, pax);
  fft.inv(ay, pay);
  fft.inv(gpx, pgx);
  fft.inv(gpy, pgy);
  fft.inv(lpx, plx);
  fft.inv(lpy, ply);
  double s = 0;
  for (size_t i = 0; i < pax.size(); ++i) {
    double rx = pax[i] + pgx[i] - nu * plx[i] - out.f.ux[i];
    double ry = pay[i] + pgy[i] - nu * ply[i] - out.f.uy[i];
    s += rx * rx + ry * ry;
  }
  out.residual_u = std::sqrt(s / (double)pax.size());
  out.residual_theta = theta_result.energy_residual;
  out.residual = std::max(out.residual_u, out.residual_theta);
  return out;
}

}  // namespace anodiss
