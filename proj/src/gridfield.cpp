#include "anodiss/gridfield.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "anodiss/spectral.hpp"
#include "anodiss/util.hpp"

namespace anodiss {

static const double kTwoPi = 6.28318530717958647692;

Fft2::Fft2(int nn) : n(nn), rbuf_((size_t)nn * nn), cbuf_(cs()) {
  pf_ = fftw_plan_dft_r2c_2d(n, n, rbuf_.data(),
                             reinterpret_cast<fftw_complex*>(cbuf_.data()), FFTW_ESTIMATE);
  pb_ = fftw_plan_dft_c2r_2d(n, n, reinterpret_cast<fftw_complex*>(cbuf_.data()),
                             rbuf_.data(), FFTW_ESTIMATE);
  if (!pf_ || !pb_) throw numeric_error("fftw plan creation failed");
}

Fft2::~Fft2() {
  if (pf_) fftw_destroy_plan(pf_);
  if (pb_) fftw_destroy_plan(pb_);
}

void Fft2::fwd(const std::vector<double>& in, std::vector<cplx>& out) {
  std::copy(in.begin(), in.end(), rbuf_.begin());
  fftw_execute(pf_);
  out.assign(cbuf_.begin(), cbuf_.end());
}

void Fft2::inv(const std::vector<cplx>& in, std::vector<double>& out) {
  std::copy(in.begin(), in.end(), cbuf_.begin());
  fftw_execute(pb_);
  out.resize((size_t)n * n);
  double s = 1.0 / ((double)n * n);
  for (size_t i = 0; i < out.size(); ++i) out[i] = rbuf_[i] * s;
}

// bilinear interpolation with periodic wrap
static double interp(const std::vector<double>& a, int n, Vec2 p) {
  double fx = (p.x - std::floor(p.x)) * n;
  double fy = (p.y - std::floor(p.y)) * n;
  int j0 = (int)fx % n, i0 = (int)fy % n;
  int j1 = (j0 + 1) % n, i1 = (i0 + 1) % n;
  double tx = fx - std::floor(fx), ty = fy - std::floor(fy);
  return a[(size_t)i0 * n + j0] * (1 - tx) * (1 - ty) + a[(size_t)i0 * n + j1] * tx * (1 - ty) +
         a[(size_t)i1 * n + j0] * (1 - tx) * ty + a[(size_t)i1 * n + j1] * tx * ty;
}

Vec2 GridField::eval(Vec2 p) const { return {interp(ux, res, p), interp(uy, res, p)}; }

double GridField::max_speed() const {
  double m = 0;
  for (size_t i = 0; i < ux.size(); ++i)
    m = std::max(m, std::sqrt(ux[i] * ux[i] + uy[i] * uy[i]));
  return m;
}

Vec2 GridField::mean() const {
  Vec2 s{0, 0};
  for (size_t i = 0; i < ux.size(); ++i) {
    s.x += ux[i];
    s.y += uy[i];
  }
  double inv = 1.0 / (double)ux.size();
  return {s.x * inv, s.y * inv};
}

double GridField::divergence_linf() const {
  Fft2 f(res);
  std::vector<cplx> cx, cy;
  f.fwd(ux, cx);
  f.fwd(uy, cy);
  std::vector<cplx> d(f.cs());
  for (int iy = 0; iy < res; ++iy) {
    int ky = kfold(res, iy);
    if (iy == res / 2) ky = 0;  // drop Nyquist in derivatives
    for (int ix = 0; ix < f.nc(); ++ix) {
      int kx = ix == res / 2 ? 0 : ix;
      size_t id = (size_t)iy * f.nc() + ix;
      d[id] = cplx(0, kTwoPi) * (double(kx) * cx[id] + double(ky) * cy[id]);
    }
  }
  std::vector<double> dr;
  f.inv(d, dr);
  double m = 0;
  for (double v : dr) m = std::max(m, std::fabs(v));
  return m;
}

double GridScalar::eval(Vec2 p) const { return interp(a, res, p); }

double GridScalar::mean() const {
  double s = 0;
  for (double v : a) s += v;
  return s / (double)a.size();
}

double GridScalar::grad_l2sq() const {
  Fft2 f(res);
  std::vector<cplx> c;
  f.fwd(a, c);
  double s = 0, inv = 1.0 / ((double)res * res);
  for (int iy = 0; iy < res; ++iy) {
    int ky = kfold(res, iy);
    for (int ix = 0; ix < f.nc(); ++ix) {
      int kx = ix;
      double w = (ix == 0 || ix == res / 2) ? 1.0 : 2.0;  // hermitian half counts twice
      double k2 = kTwoPi * kTwoPi * (double(kx) * kx + double(ky) * ky);
      s += w * k2 * std::norm(c[(size_t)iy * f.nc() + ix]) * inv * inv;
    }
  }
  return s;
}

// 1-D spectral symbol of the normalized bump (1-(d/ell)^2)^3 sampled on the grid
std::vector<double> bump_symbol(int n, double ell) {
  std::vector<double> psi(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double d = std::min((double)i, (double)(n - i)) / n;
    if (d < ell) {
      double s = 1 - (d / ell) * (d / ell);
      psi[i] = s * s * s;
    }
  }
  std::vector<double> m(n / 2 + 1, 0.0);
  for (int k = 0; k <= n / 2; ++k) {
    double s = 0;
    for (int i = 0; i < n; ++i) s += psi[i] * std::cos(kTwoPi * k * i / n);
    m[k] = s;
  }
  double mass = m[0];
  if (mass <= 0) throw numeric_error("mollifier kernel has no mass on the grid");
  for (double& v : m) v /= mass;
  return m;
}

static void leray(int n, std::vector<cplx>& cx, std::vector<cplx>& cy) {
  int nc = n / 2 + 1;
  for (int iy = 0; iy < n; ++iy) {
    int ky = kfold(n, iy);
    for (int ix = 0; ix < nc; ++ix) {
      int kx = ix;
      size_t id = (size_t)iy * nc + ix;
      // Nyquist modes have no well-defined derivative sign; drop them
      if (ix == n / 2 || iy == n / 2) {
        cx[id] = cy[id] = cplx(0, 0);
        continue;
      }
      if (kx == 0 && ky == 0) continue;
      double k2 = (double)kx * kx + (double)ky * ky;
      cplx d = (double(kx) * cx[id] + double(ky) * cy[id]) / k2;
      cx[id] -= double(kx) * d;
      cy[id] -= double(ky) * d;
    }
  }
}

GridField sample_field(const AnalyticField& f, int res) {
  GridField g;
  g.res = res;
  g.q = f.q;
  g.table_hash = f.table.hash();
  g.ux.resize((size_t)res * res);
  g.uy.resize((size_t)res * res);
  for (int i = 0; i < res; ++i)
    for (int j = 0; j < res; ++j) {
      Vec2 u = f.eval({(double)j / res, (double)i / res});
      g.ux[(size_t)i * res + j] = u.x;
      g.uy[(size_t)i * res + j] = u.y;
    }
  return g;
}

GridField build_uq(const ParamTable& t, int q, int grid_res, bool project) {
  if (t.regime != Regime::Desk) throw config_error("build_uq requires a desk-regime table");
  if (q < 0 || q > t.q_max) throw config_error("build_uq: level outside the table");
  if (grid_res < 16 || (grid_res & 3)) throw config_error("grid_res must be >= 16, multiple of 4");
  if (4.0 / grid_res > t.A(0))
    throw numeric_error("grid resolution too coarse to resolve the root pipe width");
  int n = grid_res;
  GridField g;
  g.res = n;
  g.q = q;
  g.table_hash = t.hash();

  Fft2 fft(n);
  std::vector<cplx> acc_x(fft.cs(), cplx(0, 0)), acc_y(fft.cs(), cplx(0, 0));
  std::vector<double> prev_x, prev_y;
  std::vector<cplx> cx, cy;
  for (int j = 0; j <= q; ++j) {
    AnalyticField bj = build_bq(t, j);
    GridField cur = sample_field(bj, n);
    if (t.A(j) < 4.0 / n)
      g.warnings.push_back("level " + std::to_string(j) + " pipe width below grid resolution");
    std::vector<double> sx = cur.ux, sy = cur.uy;
    if (j > 0)
      for (size_t i = 0; i < sx.size(); ++i) {
        sx[i] -= prev_x[i];
        sy[i] -= prev_y[i];
      }
    double ell = t.ell(j);
    double floor = 4.0 / n;
    if (ell < floor) {
      g.warnings.push_back("mollification radius at level " + std::to_string(j) +
                           " floored at 4/res");
      ell = floor;
    }
    g.ell_used.push_back(ell);
    std::vector<double> m = bump_symbol(n, ell);
    fft.fwd(sx, cx);
    fft.fwd(sy, cy);
    for (int iy = 0; iy < n; ++iy) {
      double my = m[std::abs(kfold(n, iy))];
      for (int ix = 0; ix < fft.nc(); ++ix) {
        size_t id = (size_t)iy * fft.nc() + ix;
        double w = my * m[ix];
        acc_x[id] += w * cx[id];
        acc_y[id] += w * cy[id];
      }
    }
    if (j < q) {
      prev_x = std::move(cur.ux);
      prev_y = std::move(cur.uy);
    }
  }
  if (project) leray(n, acc_x, acc_y);
  fft.inv(acc_x, g.ux);
  fft.inv(acc_y, g.uy);
  return g;
}

GridScalar stream_function(const GridField& f, Vec2* mean_out) {
  Vec2 mu = f.mean();
  if (mean_out) *mean_out = mu;
  Fft2 fft(f.res);
  std::vector<cplx> cx, cy;
  fft.fwd(f.ux, cx);
  fft.fwd(f.uy, cy);
  std::vector<cplx> h(fft.cs(), cplx(0, 0));
  int n = f.res;
  for (int iy = 0; iy < n; ++iy) {
    int ky = kfold(n, iy);
    if (iy == n / 2) ky = 0;
    for (int ix = 0; ix < fft.nc(); ++ix) {
      int kx = ix == n / 2 ? 0 : ix;
      if (kx == 0 && ky == 0) continue;
      size_t id = (size_t)iy * fft.nc() + ix;
      cplx omega = cplx(0, kTwoPi) * (double(kx) * cy[id] - double(ky) * cx[id]);
      double k2 = kTwoPi * kTwoPi * (double(kx) * kx + double(ky) * ky);
      // convention u = (dH/dy, -dH/dx), so laplacian H = -curl u
      h[id] = omega / k2;
    }
  }
  GridScalar out;
  out.res = n;
  fft.inv(h, out.a);
  return out;
}

GridField perp_gradient(const GridScalar& h) {
  Fft2 fft(h.res);
  std::vector<cplx> c;
  fft.fwd(h.a, c);
  std::vector<cplx> gx(fft.cs()), gy(fft.cs());
  int n = h.res;
  for (int iy = 0; iy < n; ++iy) {
    int ky = kfold(n, iy);
    if (iy == n / 2) ky = 0;
    for (int ix = 0; ix < fft.nc(); ++ix) {
      int kx = ix == n / 2 ? 0 : ix;
      size_t id = (size_t)iy * fft.nc() + ix;
      gx[id] = cplx(0, kTwoPi * ky) * c[id];   //  dH/dy
      gy[id] = cplx(0, -kTwoPi * kx) * c[id];  // -dH/dx
    }
  }
  GridField out;
  out.res = n;
  fft.inv(gx, out.ux);
  fft.inv(gy, out.uy);
  return out;
}

double holder_norm(const GridField& f, double alpha) {
  if (!(alpha > 0) || alpha > 1) throw config_error("holder_norm needs alpha in (0,1]");
  int n = f.res;
  double best = f.max_speed();  // sup norm participates
  for (int lag = 1; lag <= n / 4; lag *= 2) {
    double h = (double)lag / n;
    double ha = std::pow(h, alpha);
    double m = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        size_t id = (size_t)i * n + j;
        size_t idx = (size_t)i * n + (j + lag) % n;
        size_t idy = (size_t)((i + lag) % n) * n + j;
        double dx1 = f.ux[idx] - f.ux[id], dy1 = f.uy[idx] - f.uy[id];
        double dx2 = f.ux[idy] - f.ux[id], dy2 = f.uy[idy] - f.uy[id];
        m = std::max(m, std::max(dx1 * dx1 + dy1 * dy1, dx2 * dx2 + dy2 * dy2));
      }
    best = std::max(best, std::sqrt(m) / ha);
  }
  return best;
}

// largest singular value of [[a,b],[c,d]]
static double opnorm2(double a, double b, double c, double d) {
  double p = std::hypot(a + d, b - c), q = std::hypot(a - d, b + c);
  return (p + q) / 2;
}

CurveIntegral curve_gradient_integral(const GridField& f, Vec2 start, double eps_ball,
                                      double t_end, double dt) {
  if (dt <= 0 || t_end <= 0) throw config_error("curve integral needs dt, t_end > 0");
  int n = f.res;
  Fft2 fft(n);
  std::vector<cplx> cx, cy;
  fft.fwd(f.ux, cx);
  fft.fwd(f.uy, cy);
  std::vector<double> gn((size_t)n * n, 0.0);
  {
    std::vector<cplx> d(fft.cs());
    std::vector<double> gxx, gxy, gyx, gyy;
    auto deriv = [&](const std::vector<cplx>& c, bool wrt_x, std::vector<double>& out) {
      for (int iy = 0; iy < n; ++iy) {
        int ky = kfold(n, iy);
        if (iy == n / 2) ky = 0;
        for (int ix = 0; ix < fft.nc(); ++ix) {
          int kx = ix == n / 2 ? 0 : ix;
          size_t id = (size_t)iy * fft.nc() + ix;
          d[id] = cplx(0, kTwoPi * (wrt_x ? kx : ky)) * c[id];
        }
      }
      fft.inv(d, out);
    };
    deriv(cx, true, gxx);
    deriv(cx, false, gxy);
    deriv(cy, true, gyx);
    deriv(cy, false, gyy);
    for (size_t i = 0; i < gn.size(); ++i) gn[i] = opnorm2(gxx[i], gxy[i], gyx[i], gyy[i]);
  }
  int rad = (int)std::ceil(eps_ball * n) + 1;
  auto ball_sup = [&](Vec2 p) {
    int jc = (int)std::floor(p.x * n), ic = (int)std::floor(p.y * n);
    double m = 0;
    for (int di = -rad; di <= rad; ++di)
      for (int dj = -rad; dj <= rad; ++dj) {
        int i = ((ic + di) % n + n) % n, j = ((jc + dj) % n + n) % n;
        m = std::max(m, gn[(size_t)i * n + j]);
      }
    return m;
  };
  CurveIntegral res;
  Vec2 g = start;
  double speed_floor = 1e-12 * std::max(1.0, f.max_speed());
  double tt = 0;
  while (tt < t_end) {
    double h = std::min(dt, t_end - tt);
    Vec2 k1 = f.eval(g);
    if (norm(k1) < speed_floor) {
      res.t_exit = tt;
      return res;
    }
    Vec2 k2 = f.eval(g + (h / 2) * k1);
    Vec2 k3 = f.eval(g + (h / 2) * k2);
    Vec2 k4 = f.eval(g + h * k3);
    res.integral += h * ball_sup(g + (h / 2) * k1);
    g = g + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    tt += h;
  }
  res.t_exit = tt;
  res.completed = true;
  return res;
}

GridField mollify(const GridField& f, double ell) {
  if (!(ell > 0) || ell >= 0.5) throw config_error("mollify needs ell in (0, 0.5)");
  Fft2 fft(f.res);
  std::vector<cplx> cx, cy;
  fft.fwd(f.ux, cx);
  fft.fwd(f.uy, cy);
  std::vector<double> m = bump_symbol(f.res, ell);
  for (int iy = 0; iy < f.res; ++iy) {
    double my = m[std::abs(kfold(f.res, iy))];
    for (int ix = 0; ix < fft.nc(); ++ix) {
      size_t id = (size_t)iy * fft.nc() + ix;
      cx[id] *= my * m[ix];
      cy[id] *= my * m[ix];
    }
  }
  GridField out = f;
  fft.inv(cx, out.ux);
  fft.inv(cy, out.uy);
  return out;
}

GridField resample(const GridField& f, int new_res) {
  if (new_res < 4) throw config_error("resample needs res >= 4");
  if (new_res == f.res) return f;
  Fft2 fin(f.res);
  std::vector<cplx> cx, cy;
  fin.fwd(f.ux, cx);
  fin.fwd(f.uy, cy);
  Fft2 fout(new_res);
  std::vector<cplx> ox(fout.cs(), cplx(0, 0)), oy(fout.cs(), cplx(0, 0));
  int km = std::min(f.res, new_res) / 2;  // strictly below Nyquist of both grids
  double scale = 1.0;                     // fwd is unnormalized, inv divides by n^2
  for (int iy = 0; iy < new_res; ++iy) {
    int ky = kfold(new_res, iy);
    if (std::abs(ky) >= km) continue;
    int siy = (ky + f.res) % f.res;
    for (int kx = 0; kx < km; ++kx) {
      size_t sid = (size_t)siy * fin.nc() + kx;
      size_t did = (size_t)iy * fout.nc() + kx;
      double r = scale * (double)new_res * new_res / ((double)f.res * f.res);
      ox[did] = cx[sid] * r;
      oy[did] = cy[sid] * r;
    }
  }
  GridField out;
  out.res = new_res;
  out.q = f.q;
  out.table_hash = f.table_hash;
  out.ell_used = f.ell_used;
  out.warnings = f.warnings;
  fout.inv(ox, out.ux);
  fout.inv(oy, out.uy);
  return out;
}

void write_field(const GridField& f, const std::string& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw config_error("cannot open " + path + " for writing");
  std::ostringstream h;
  h << "ANODISS-FIELD v1\n"
    << "res " << f.res << "\n"
    << "q " << f.q << "\n"
    << "table_hash " << std::hex << f.table_hash << std::dec << "\n";
  o << h.str();
  o.write(reinterpret_cast<const char*>(f.ux.data()), (std::streamsize)(f.ux.size() * 8));
  o.write(reinterpret_cast<const char*>(f.uy.data()), (std::streamsize)(f.uy.size() * 8));
  if (!o) throw config_error("write failed: " + path);
}

GridField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open " + path);
  std::string magic, ver, key;
  in >> magic >> ver;
  if (magic != "ANODISS-FIELD" || ver != "v1") throw config_error("bad field file magic: " + path);
  GridField f;
  in >> key >> f.res;
  if (key != "res" || f.res <= 0) throw config_error("bad field header: " + path);
  in >> key >> f.q;
  if (key != "q") throw config_error("bad field header: " + path);
  in >> key >> std::hex >> f.table_hash >> std::dec;
  if (key != "table_hash") throw config_error("bad field header: " + path);
  in.ignore(1);  // newline before the binary payload
  size_t m = (size_t)f.res * f.res;
  f.ux.resize(m);
  f.uy.resize(m);
  in.read(reinterpret_cast<char*>(f.ux.data()), (std::streamsize)(m * 8));
  in.read(reinterpret_cast<char*>(f.uy.data()), (std::streamsize)(m * 8));
  if (!in) throw config_error("truncated field file: " + path);
  return f;
}

void write_scalar(const GridScalar& g, const std::string& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw config_error("cannot open " + path + " for writing");
  o << "ANODISS-SCALAR v1\nres " << g.res << "\n";
  o.write(reinterpret_cast<const char*>(g.a.data()), (std::streamsize)(g.a.size() * 8));
  if (!o) throw config_error("write failed: " + path);
}

GridScalar read_scalar(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open " + path);
  std::string magic, ver, key;
  in >> magic >> ver;
  if (magic != "ANODISS-SCALAR" || ver != "v1")
    throw config_error("bad scalar file magic: " + path);
  GridScalar g;
  in >> key >> g.res;
  if (key != "res" || g.res <= 0) throw config_error("bad scalar header: " + path);
  in.ignore(1);
  g.a.resize((size_t)g.res * g.res);
  in.read(reinterpret_cast<char*>(g.a.data()), (std::streamsize)(g.a.size() * 8));
  if (!in) throw config_error("truncated scalar file: " + path);
  return g;
}

}  // namespace anodiss
