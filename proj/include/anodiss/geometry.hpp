#pragma once
#include <cmath>
#include <vector>

#include "anodiss/util.hpp"

namespace anodiss {

struct Vec2 {
  double x = 0, y = 0;
};
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double c, Vec2 a) { return {c * a.x, c * a.y}; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

// quarter-turn rotation of a vector, k times 90 degrees counterclockwise
inline Vec2 rotq(Vec2 v, int k) {
  switch (((k % 4) + 4) % 4) {
    case 1: return {-v.y, v.x};
    case 2: return {-v.x, -v.y};
    case 3: return {v.y, -v.x};
    default: return v;
  }
}
inline Vec2 unit_dir(int d) { return rotq({1, 0}, d); }  // 0:+x 1:+y 2:-x 3:-y

// Axis-aligned rectangle pose: local coords x in [0,length], y in [-width/2,width/2],
// local +x is the flow direction; rotation is an exact quarter-turn.
struct RectFrame {
  Vec2 anchor;
  int rot = 0;  // 0..3 quarter turns counterclockwise
  double length = 0, width = 0;

  Vec2 to_global(Vec2 local) const { return anchor + rotq(local, rot); }
  Vec2 to_local(Vec2 global) const { return rotq(global - anchor, 4 - rot); }
  bool contains(Vec2 global) const {
    Vec2 l = to_local(global);
    return l.x >= 0 && l.x < length && std::fabs(l.y) < width / 2;
  }
};

// One closed-form piece of a velocity field: a straight pipe or a quarter-turn
// through an elliptically scaled annulus shell.
//
// Canonical pipe: support [0,len) x (-w/2,w/2), u = (v, 0).
// Canonical turn: support quadrant x,y >= 0 with rho(x,y) = sqrt(x^2/l + l y^2)
// in [sqrt(l) r, 2 sqrt(l) r); u = (a/rho)(l y, -x/l) with a = v/sqrt(l).
// Entry trace (v,0) on {0} x [r,2r], exit trace (0,-v/l) on [l r, 2 l r] x {0}.
//
// Pose: local = Q (p - t) with Q = M^mirror Rot_rot, M = diag(1,-1);
// u(p) = sign * Q^T u_canon(local). Flux transforms with sign * det(Q).
struct AnalyticPatch {
  enum Kind { Pipe, Turn };
  Kind kind = Pipe;
  int rot = 0;
  bool mirror = false;
  double sign = 1;
  Vec2 t;
  double v = 0;                  // entry speed
  double len = 0, w = 0;         // pipe
  double r = 0, lambda = 1;      // turn (any lambda > 0)

  Vec2 to_canon(Vec2 p) const {
    Vec2 l = rotq(p - t, rot);
    if (mirror) l.y = -l.y;
    return l;
  }
  Vec2 vec_from_canon(Vec2 u) const {
    if (mirror) u.y = -u.y;
    return sign * rotq(u, 4 - rot);
  }

  Vec2 eval(Vec2 p) const;
  // integral of (u1 dy - u2 dx) along the axis-aligned segment p1 -> p2, exact
  double flux(Vec2 p1, Vec2 p2) const;
  // sup of |grad u| over the ball B_eps(c); pipes report inf at their side walls
  double grad_sup_ball(Vec2 c, double eps) const;
  double max_speed() const {
    return kind == Pipe ? v : v * std::max(1.0, 1.0 / lambda);
  }
  void bbox(Vec2& lo, Vec2& hi) const;

  // the same patch expressed in the global frame of f (patch given in f-local coords)
  AnalyticPatch transformed(const RectFrame& f) const;
  // reflection across the local axis y = 0
  AnalyticPatch mirrored() const;
};

// straight pipe starting at the center of its entry cross-section
AnalyticPatch make_pipe(Vec2 start_center, int dir, double length, double width, double speed);

// quarter turn with prescribed entry edge (endpoints in any order), flow
// directions and exit width; the pose is solved from the canonical form
AnalyticPatch make_turn(Vec2 entry_a, Vec2 entry_b, int dir_in, int dir_out, double w_out,
                        double speed);

// canonical rotating pipe; always R = 2r and lambda >= 1
AnalyticPatch rotating_pipe(double r, double R, double lambda, double v);

struct CurveIntegral {
  double integral = 0;
  double t_exit = 0;
  bool completed = false;  // reached t_end inside the support
};

// integrates d(gamma)/dt = u(gamma) with RK4 and accumulates
// int ||grad u||_{L^inf(B_eps(gamma(t)))} dt; stops when the curve leaves the support
CurveIntegral curve_gradient_integral(const std::vector<AnalyticPatch>& patches, Vec2 start,
                                      double eps_ball, double t_end, double dt);

Vec2 eval_patches(const std::vector<AnalyticPatch>& patches, Vec2 p);

}  // namespace anodiss
