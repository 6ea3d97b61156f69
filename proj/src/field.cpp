#include "anodiss/field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace anodiss {

static void append_segment_pipe(std::vector<AnalyticPatch>& out, Vec2 start_center, int dir,
                                double length, double width, double speed) {
  if (length > 1e-15) out.push_back(make_pipe(start_center, dir, length, width, speed));
}

static void check_pairwise_disjoint(const std::vector<AnalyticPatch>& patches, double scale) {
  size_t np = patches.size();
  std::vector<Vec2> lo(np), hi(np);
  for (size_t i = 0; i < np; ++i) patches[i].bbox(lo[i], hi[i]);
  double tol = 1e-12 * scale;
  for (size_t i = 0; i < np; ++i)
    for (size_t j = i + 1; j < np; ++j) {
      double ox = std::min(hi[i].x, hi[j].x) - std::max(lo[i].x, lo[j].x);
      double oy = std::min(hi[i].y, hi[j].y) - std::max(lo[i].y, lo[j].y);
      if (ox > tol && oy > tol)
        throw geometry_error("block patches overlap: patch " + std::to_string(i) + " and " +
                             std::to_string(j));
    }
}

double BlockField::flux(Vec2 a, Vec2 b) const {
  double f = 0;
  for (const auto& p : patches) f += p.flux(a, b);
  return f;
}

BlockField branching_block(double L, double A, double B, double Ap, double Bp, long long n,
                           double v, double Lp, bool carve) {
  if (n < 10) throw geometry_error("branching block requires n >= 10");
  if (!(A > 0 && B > 0 && Ap > 0 && Bp > 0 && v > 0 && Lp > 0))
    throw geometry_error("branching block requires positive parameters");
  if (std::fabs(L - (n * Ap + n * Bp + 2 * A)) > 1e-12 * L)
    throw geometry_error("branching block requires L = n A' + n B' + 2A");
  if (!(B > 3 * A)) throw geometry_error("branching block requires B > 3A");
  if (!(2 * Ap <= Bp)) throw geometry_error("branching block requires 2A' <= B'");

  BlockField blk;
  blk.L = L; blk.A = A; blk.B = B; blk.Ap = Ap; blk.Bp = Bp; blk.n = n; blk.v = v; blk.Lp = Lp;

  double Ah = A / (2 * n);           // lane width
  double vp = v * Ah / Ap;           // branch speed
  double P = Ap + Bp;                // cell pitch
  double x0 = A / 2;                 // first cell offset
  double Y0 = B / 2;                 // return-bundle base height
  double win_lo = (n + 1) * Ah, win_hi = Y0 - Ah;  // common straight window
  if (win_hi - win_lo < Lp)
    throw geometry_error("branching block: branches too short for requested sub-rectangles");
  double y0 = (win_lo + win_hi - Lp) / 2;
  blk.sub_y0 = y0;

  std::vector<AnalyticPatch> top;
  for (long long i = 1; i <= n; ++i) {
    long long k = n + 1 - i;  // lane that leaves at cell i
    double zeta = x0 + (i - 1) * P + Bp / 2;
    double lane_c = (k - 1) * Ah + Ah / 2;
    append_segment_pipe(top, {0, lane_c}, 0, zeta - Ap, Ah, v);
    top.push_back(make_turn({zeta - Ap, (k - 1) * Ah}, {zeta - Ap, k * Ah}, 0, 1, Ap, v));
    double ys = (k + 1) * Ah;             // branch start
    double Yi = Y0 + (n - i - 1) * Ah;    // branch end
    if (carve) {
      append_segment_pipe(top, {zeta + Ap / 2, ys}, 1, y0 - ys, Ap, vp);
      append_segment_pipe(top, {zeta + Ap / 2, y0 + Lp}, 1, Yi - (y0 + Lp), Ap, vp);
    } else {
      append_segment_pipe(top, {zeta + Ap / 2, ys}, 1, Yi - ys, Ap, vp);
    }
    top.push_back(make_turn({zeta, Yi}, {zeta + Ap, Yi}, 1, 0, Ah, vp));
    double ret_c = Y0 + (n - i) * Ah + Ah / 2;
    append_segment_pipe(top, {zeta + 2 * Ap, ret_c}, 0, (L - 1.5 * A) - (zeta + 2 * Ap), Ah, v);
  }
  top.push_back(make_turn({L - 1.5 * A, Y0}, {L - 1.5 * A, Y0 + A / 2}, 0, 3, A / 2, v));
  append_segment_pipe(top, {L - 0.75 * A, Y0 - A / 2}, 3, (Y0 - A / 2) - A, A / 2, v);
  top.push_back(make_turn({L - A, A}, {L - A / 2, A}, 3, 0, A / 2, v));

  blk.patches = top;
  for (const auto& p : top) blk.patches.push_back(p.mirrored());
  check_pairwise_disjoint(blk.patches, L);

  for (long long i = 1; i <= n; ++i) {
    double zeta = x0 + (i - 1) * P + Bp / 2;
    blk.subrects.push_back({{zeta + Ap / 2, y0}, 1, Lp, Ap + Bp});
  }
  for (long long i = 1; i <= n; ++i) {
    double zeta = x0 + (i - 1) * P + Bp / 2;
    blk.subrects.push_back({{zeta + Ap / 2, -y0}, 3, Lp, Ap + Bp});
  }
  return blk;
}

long long PipeTree::count_e(int level) const {
  long long c = 0;
  for (const auto& nd : levels[level]) c += nd.e_cum;
  return c;
}
long long PipeTree::count_m(int level) const {
  long long c = 0;
  for (const auto& nd : levels[level]) c += nd.m_local;
  return c;
}
long long PipeTree::count_g(int level) const {
  long long c = 0;
  for (const auto& nd : levels[level]) c += nd.in_g;
  return c;
}

Vec2 AnalyticField::eval(Vec2 p) const {
  p.x -= std::floor(p.x);
  p.y -= std::floor(p.y);
  Vec2 u{0, 0};
  if (idx_cells_ > 0) {
    int cx = std::min(idx_cells_ - 1, (int)(p.x * idx_cells_));
    int cy = std::min(idx_cells_ - 1, (int)(p.y * idx_cells_));
    for (int i : idx_[cy * idx_cells_ + cx]) u = u + patches[i].eval(p);
    return u;
  }
  return eval_patches(patches, p);
}

double AnalyticField::flux(Vec2 a, Vec2 b) const {
  double lox = std::min(a.x, b.x), hix = std::max(a.x, b.x);
  double loy = std::min(a.y, b.y), hiy = std::max(a.y, b.y);
  double f = 0;
  for (const auto& p : patches) {
    Vec2 plo, phi;
    p.bbox(plo, phi);
    if (phi.x < lox || plo.x > hix || phi.y < loy || plo.y > hiy) continue;
    f += p.flux(a, b);
  }
  return f;
}

double AnalyticField::grad_sup_ball(Vec2 c, double eps) const {
  double m = 0;
  for (const auto& p : patches) {
    Vec2 plo, phi;
    p.bbox(plo, phi);
    if (c.x < plo.x - eps || c.x > phi.x + eps || c.y < plo.y - eps || c.y > phi.y + eps)
      continue;
    m = std::max(m, p.grad_sup_ball(c, eps));
  }
  return m;
}

double AnalyticField::max_speed() const {
  double m = 0;
  for (const auto& p : patches) m = std::max(m, p.max_speed());
  return m;
}

void AnalyticField::build_index(int cells) {
  idx_cells_ = cells;
  idx_.assign((size_t)cells * cells, {});
  for (size_t i = 0; i < patches.size(); ++i) {
    Vec2 lo, hi;
    patches[i].bbox(lo, hi);
    int x0 = std::clamp((int)std::floor(lo.x * cells), 0, cells - 1);
    int x1 = std::clamp((int)std::floor(hi.x * cells), 0, cells - 1);
    int y0 = std::clamp((int)std::floor(lo.y * cells), 0, cells - 1);
    int y1 = std::clamp((int)std::floor(hi.y * cells), 0, cells - 1);
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) idx_[(size_t)y * cells + x].push_back((int)i);
  }
}

AnalyticField build_bq(const ParamTable& t, int q) {
  if (t.regime != Regime::Desk)
    throw config_error("analytic field construction requires the desk regime");
  if (q < 0 || q > t.q_max) throw config_error("level out of table range");
  for (int j = 1; j <= q; ++j)
    if (t.min_scale(j) < 1e-9) throw numeric_error("scales below 1e-9 at level " + std::to_string(j));

  AnalyticField f;
  f.table = t;
  f.q = q;
  f.tree.q = q;
  f.tree.levels.resize(q + 1);

  double L0 = t.L(0), A0 = t.A(0), v0 = t.v(0);
  double xL = (1 - L0) / 2, xR = (1 + L0) / 2;
  // the level-0 pipe wraps around the torus outside the root rectangle
  f.patches.push_back(make_pipe({0, 0.5}, 0, xL, A0, v0));
  f.patches.push_back(make_pipe({xR, 0.5}, 0, 1 - xR, A0, v0));

  TreeNode root;
  root.frame = {{xL, 0.5}, 0, L0, A0 + t.B(0)};
  root.level = 0;
  root.e_cum = true;
  root.m_local = true;
  f.tree.levels[0].push_back(root);

  if (q == 0) {
    f.patches.push_back(make_pipe({xL, 0.5}, 0, L0, A0, v0));
    f.build_index();
    return f;
  }

  for (int j = 0; j < q; ++j) {
    long long n = t.n(j + 1);
    bool carve = (j + 1 < q);
    BlockField blk = branching_block(t.L(j), t.A(j), t.B(j), t.A(j + 1), t.B(j + 1), n, t.v(j),
                                     t.L(j + 1), carve);
    long long m_cut = (n + 3) / 4;  // ceil(n/4) removed on each end of each row
    auto& parents = f.tree.levels[j];
    auto& kids = f.tree.levels[j + 1];
    kids.reserve(parents.size() * 2 * n);
    for (size_t pi = 0; pi < parents.size(); ++pi) {
      const TreeNode& par = parents[pi];
      for (const auto& p : blk.patches) f.patches.push_back(p.transformed(par.frame));
      for (long long i = 0; i < 2 * n; ++i) {
        TreeNode nd;
        const RectFrame& sr = blk.subrects[i];
        nd.frame = {par.frame.to_global(sr.anchor), (par.frame.rot + sr.rot) % 4, sr.length,
                    sr.width};
        nd.level = j + 1;
        nd.parent = (int)pi;
        nd.index_in_parent = (int)i + 1;
        long long cell = i % n + 1;
        nd.e_cum = par.e_cum && cell != 1 && cell != n;
        nd.m_local = cell > m_cut && cell <= n - m_cut;
        kids.push_back(nd);
      }
    }
  }

  // good rectangles: in E and M, with up to four ancestors in M
  for (int lq = 1; lq <= q; ++lq)
    for (auto& nd : f.tree.levels[lq]) {
      bool g = nd.e_cum && nd.m_local;
      int lvl = lq, pi = nd.parent;
      for (int step = 0; step < 4 && g && lvl - 1 >= 1; ++step) {
        const TreeNode& anc = f.tree.levels[lvl - 1][pi];
        g = g && anc.m_local;
        pi = anc.parent;
        --lvl;
      }
      nd.in_g = g;
    }

  f.build_index();
  return f;
}

std::vector<RectFrame> dissipative_rects(const AnalyticField& f, int level) {
  std::vector<RectFrame> out;
  double A = f.table.A(level), B = f.table.B(level), L = f.table.L(level);
  for (const auto& nd : f.tree.levels[level]) {
    if (!nd.in_g) continue;
    out.push_back({nd.frame.to_global({0, -A / 2 - 3 * B / 200}), nd.frame.rot, L / 3, B / 100});
  }
  return out;
}

SegmentSet entry_segments(const AnalyticField& f, int level) {
  SegmentSet s;
  double A = f.table.A(level);
  for (const auto& nd : f.tree.levels[level]) {
    if (!nd.e_cum) continue;
    s.segs.push_back({nd.frame.to_global({0, -A / 4}), nd.frame.to_global({0, A / 4})});
  }
  return s;
}

SegmentSet gamma_segments(const AnalyticField& f, int level) {
  SegmentSet s;
  double A = f.table.A(level), Ab = f.table.Abar(level + 1);
  for (const auto& nd : f.tree.levels[level]) {
    if (!nd.e_cum) continue;
    s.segs.push_back(
        {nd.frame.to_global({0, -A / 2 + Ab}), nd.frame.to_global({0, A / 2 - Ab})});
  }
  return s;
}

std::vector<RectFrame> shear_strips(const AnalyticField& f, int level) {
  std::vector<RectFrame> out;
  double A = f.table.A(level), L = f.table.L(level), ell = f.table.ell(level);
  for (const auto& nd : f.tree.levels[level]) {
    if (!nd.e_cum) continue;
    out.push_back({nd.frame.to_global({0, -A / 2}), nd.frame.rot, L, 2 * ell});
    out.push_back({nd.frame.to_global({0, A / 2}), nd.frame.rot, L, 2 * ell});
  }
  return out;
}

std::vector<RectFrame> support_rects(const AnalyticField& f, int level) {
  std::vector<RectFrame> out;
  if (level + 1 > f.tree.q) throw config_error("support rectangles need level+1 in the tree");
  double Lp = f.table.L(level + 1), Apn = f.table.A(level + 1), Bpn = f.table.B(level + 1);
  long long n = f.table.n(level + 1);
  double A = f.table.A(level), B = f.table.B(level);
  double P = Apn + Bpn, x0c = A / 2;
  BlockField blk = branching_block(f.table.L(level), A, B, Apn, Bpn, n, f.table.v(level), Lp);
  double y0 = blk.sub_y0;
  for (const auto& nd : f.tree.levels[level]) {
    for (int sgn : {1, -1}) {
      int rot = (nd.frame.rot + (sgn > 0 ? 1 : 3)) % 4;
      auto strip = [&](double cx, double width) {
        out.push_back({nd.frame.to_global({cx, (double)sgn * y0}), rot, Lp, width});
      };
      for (long long i = 1; i <= n; ++i) {
        double cx = x0c + (i - 1) * P + Bpn / 2 + Apn / 2;
        strip(cx, 2 * Apn);                 // central strip around each branch
        if (i < n) strip(cx + P / 2, Apn);  // merged side strip between branches
      }
      // two enlarged end strips per row
      strip(x0c + Bpn / 2 + Apn / 2 - P / 2, Apn);
      strip(x0c + (n - 1) * P + Bpn / 2 + Apn / 2 + P / 2, Apn);
    }
  }
  return out;
}

std::string tree_to_json(const AnalyticField& f) {
  std::ostringstream o;
  o << "[";
  bool first = true;
  for (const auto& lvl : f.tree.levels)
    for (const auto& nd : lvl) {
      if (!first) o << ",";
      first = false;
      o << "\n{\"level\":" << nd.level << ",\"anchor\":[" << fmt17(nd.frame.anchor.x) << ","
        << fmt17(nd.frame.anchor.y) << "],\"rotation\":" << nd.frame.rot * 90
        << ",\"length\":" << fmt17(nd.frame.length) << ",\"width\":" << fmt17(nd.frame.width)
        << ",\"in_E\":" << (nd.e_cum ? "true" : "false")
        << ",\"in_M\":" << (nd.m_local ? "true" : "false")
        << ",\"in_G\":" << (nd.in_g ? "true" : "false") << "}";
    }
  o << "\n]\n";
  return o.str();
}

}  // namespace anodiss
