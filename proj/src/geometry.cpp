#include "anodiss/geometry.hpp"

#include <algorithm>
#include <limits>

namespace anodiss {

static const double kInf = std::numeric_limits<double>::infinity();

Vec2 AnalyticPatch::eval(Vec2 p) const {
  Vec2 l = to_canon(p);
  if (kind == Pipe) {
    if (l.x < 0 || l.x >= len || std::fabs(l.y) >= w / 2) return {0, 0};
    return vec_from_canon({v, 0});
  }
  if (l.x < 0 || l.y < 0) return {0, 0};
  double rho = std::sqrt(l.x * l.x / lambda + lambda * l.y * l.y);
  double rho1 = std::sqrt(lambda) * r, rho2 = 2 * rho1;
  if (rho < rho1 || rho >= rho2) return {0, 0};
  double a = v / std::sqrt(lambda);
  return vec_from_canon({a / rho * lambda * l.y, -a / rho * l.x / lambda});
}

// oriented overlap helpers
static double clip_interval(double lo, double hi, double a, double b) {
  return std::max(0.0, std::min(hi, b) - std::max(lo, a));
}

double AnalyticPatch::flux(Vec2 p1, Vec2 p2) const {
  Vec2 l1 = to_canon(p1), l2 = to_canon(p2);
  bool vertical = std::fabs(l1.x - l2.x) < std::fabs(l1.y - l2.y);
  double det = mirror ? -1.0 : 1.0;
  double f = 0;
  if (kind == Pipe) {
    if (vertical) {
      double c = l1.x;
      if (c >= 0 && c < len) {
        double lo = std::min(l1.y, l2.y), hi = std::max(l1.y, l2.y);
        double ov = clip_interval(lo, hi, -w / 2, w / 2);
        f = v * ov * (l2.y >= l1.y ? 1 : -1);
      }
    }
  } else {
    double rho1 = std::sqrt(lambda) * r, rho2 = 2 * rho1;
    double a = v / std::sqrt(lambda);
    if (vertical) {
      double c = l1.x;
      if (c >= 0 && c * c / lambda < rho2 * rho2) {
        auto rho_at = [&](double y) { return std::sqrt(c * c / lambda + lambda * y * y); };
        auto y_at = [&](double rho) {
          return std::sqrt(std::max(0.0, (rho * rho - c * c / lambda) / lambda));
        };
        double lo = std::max(std::min(l1.y, l2.y), y_at(rho1));
        double hi = std::min(std::max(l1.y, l2.y), y_at(rho2));
        if (hi > lo) f = a * (rho_at(hi) - rho_at(lo)) * (l2.y >= l1.y ? 1 : -1);
      }
    } else {
      double c = l1.y;
      if (c >= 0 && lambda * c * c < rho2 * rho2) {
        auto rho_at = [&](double x) { return std::sqrt(x * x / lambda + lambda * c * c); };
        auto x_at = [&](double rho) {
          return std::sqrt(std::max(0.0, (rho * rho - lambda * c * c) * lambda));
        };
        double lo = std::max(std::min(l1.x, l2.x), x_at(rho1));
        double hi = std::min(std::max(l1.x, l2.x), x_at(rho2));
        if (hi > lo) f = a * (rho_at(hi) - rho_at(lo)) * (l2.x >= l1.x ? 1 : -1);
      }
    }
  }
  return sign * det * f;
}

double AnalyticPatch::grad_sup_ball(Vec2 c, double eps) const {
  Vec2 l = to_canon(c);
  if (kind == Pipe) {
    if (l.x < -eps || l.x > len + eps) return 0;
    double d = std::fabs(std::fabs(l.y) - w / 2);
    return d < eps ? kInf : 0;
  }
  double s = std::sqrt(lambda);
  Vec2 ph{l.x / s, l.y * s};
  double et = std::max(s, 1 / s) * eps;
  double rho = norm(ph);
  double rho1 = s * r, rho2 = 2 * rho1;
  if (rho + et <= rho1 || rho - et >= rho2) return 0;
  if (l.x < -eps || l.y < -eps) return 0;
  double a = v / s;
  return a / std::max(rho1, rho - et);
}

void AnalyticPatch::bbox(Vec2& lo, Vec2& hi) const {
  Vec2 clo{0, kind == Pipe ? -w / 2 : 0};
  Vec2 chi{kind == Pipe ? len : 2 * lambda * r, kind == Pipe ? w / 2 : 2 * r};
  lo = {kInf, kInf};
  hi = {-kInf, -kInf};
  for (int i = 0; i < 4; ++i) {
    Vec2 cc{i & 1 ? chi.x : clo.x, i & 2 ? chi.y : clo.y};
    if (mirror) cc.y = -cc.y;
    Vec2 g = rotq(cc, 4 - rot) + t;
    lo = {std::min(lo.x, g.x), std::min(lo.y, g.y)};
    hi = {std::max(hi.x, g.x), std::max(hi.y, g.y)};
  }
}

AnalyticPatch AnalyticPatch::transformed(const RectFrame& f) const {
  AnalyticPatch p = *this;
  p.rot = ((rot - f.rot) % 4 + 4) % 4;
  p.t = f.to_global(t);
  return p;
}

AnalyticPatch AnalyticPatch::mirrored() const {
  AnalyticPatch p = *this;
  p.mirror = !mirror;
  p.rot = ((-rot) % 4 + 4) % 4;
  p.t = {t.x, -t.y};
  return p;
}

AnalyticPatch make_pipe(Vec2 start_center, int dir, double length, double width, double speed) {
  if (length <= 0 || width <= 0 || speed <= 0) throw geometry_error("bad pipe dimensions");
  AnalyticPatch p;
  p.kind = AnalyticPatch::Pipe;
  p.rot = ((4 - dir) % 4);
  p.t = start_center;
  p.len = length;
  p.w = width;
  p.v = speed;
  return p;
}

AnalyticPatch make_turn(Vec2 entry_a, Vec2 entry_b, int dir_in, int dir_out, double w_out,
                        double speed) {
  double w_in = norm(entry_b - entry_a);
  if (w_in <= 0 || w_out <= 0 || speed <= 0) throw geometry_error("bad turn dimensions");
  AnalyticPatch p;
  p.kind = AnalyticPatch::Turn;
  p.v = speed;
  p.r = w_in;
  p.lambda = w_out / w_in;
  double tol = 1e-12 * (w_in + w_out);
  Vec2 e1{0, p.r}, e2{0, 2 * p.r};
  for (int k = 0; k < 4; ++k) {
    for (int m = 0; m < 2; ++m) {
      p.rot = k;
      p.mirror = m;
      for (int swap = 0; swap < 2; ++swap) {
        Vec2 pa = swap ? entry_b : entry_a;
        Vec2 pb = swap ? entry_a : entry_b;
        // p = Q^T l + t
        Vec2 q1 = e1, q2 = e2;
        if (m) { q1.y = -q1.y; q2.y = -q2.y; }
        q1 = rotq(q1, 4 - k);
        q2 = rotq(q2, 4 - k);
        p.t = pa - q1;
        if (norm(pb - (q2 + p.t)) > tol) continue;
        Vec2 din = p.vec_from_canon({1, 0});
        Vec2 dout = p.vec_from_canon({0, -1});
        if (norm(din - unit_dir(dir_in)) > 1e-12 || norm(dout - unit_dir(dir_out)) > 1e-12)
          continue;
        return p;
      }
    }
  }
  throw geometry_error("no quarter-turn pose matches the requested entry/exit");
}

AnalyticPatch rotating_pipe(double r, double R, double lambda, double v) {
  if (!(r > 0) || !(R > r) || !(v > 0) || !(lambda >= 1))
    throw config_error("rotating_pipe requires 0 < r < R, v > 0, lambda >= 1");
  if (std::fabs(R - 2 * r) > 1e-12 * R)
    throw config_error("rotating_pipe requires R = 2r");
  AnalyticPatch p;
  p.kind = AnalyticPatch::Turn;
  p.v = v;
  p.r = r;
  p.lambda = lambda;
  return p;
}

Vec2 eval_patches(const std::vector<AnalyticPatch>& patches, Vec2 p) {
  Vec2 u{0, 0};
  for (const auto& pt : patches) u = u + pt.eval(p);
  return u;
}

CurveIntegral curve_gradient_integral(const std::vector<AnalyticPatch>& patches, Vec2 start,
                                      double eps_ball, double t_end, double dt) {
  if (dt <= 0 || t_end <= 0) throw config_error("curve integral needs dt, t_end > 0");
  CurveIntegral res;
  Vec2 g = start;
  auto rhs = [&](Vec2 p) { return eval_patches(patches, p); };
  auto gsup = [&](Vec2 p) {
    double m = 0;
    for (const auto& pt : patches) m = std::max(m, pt.grad_sup_ball(p, eps_ball));
    return m;
  };
  double tt = 0;
  while (tt < t_end) {
    double h = std::min(dt, t_end - tt);
    Vec2 k1 = rhs(g);
    if (norm(k1) < 1e-14) {
      res.t_exit = tt;
      return res;  // left the support
    }
    Vec2 k2 = rhs(g + (h / 2) * k1);
    Vec2 k3 = rhs(g + (h / 2) * k2);
    Vec2 k4 = rhs(g + h * k3);
    Vec2 gm = g + (h / 2) * k1;  // midpoint estimate for the integrand
    res.integral += h * gsup(gm);
    g = g + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
    tt += h;
  }
  res.t_exit = tt;
  res.completed = true;
  return res;
}

}  // namespace anodiss
