#pragma once
#include <string>
#include <vector>

#include "anodiss/geometry.hpp"
#include "anodiss/params.hpp"

namespace anodiss {

// Branching-merging block on [0,L] x [-(A+B)/2, (A+B)/2]: one pipe of width A
// and speed v splits into 2n lanes of width Ahat = A/(2n), each lane turns off,
// widens to A' at speed v' = v Ahat/A', runs across the B/2 band, shrinks back
// and returns along the far side, where the bundle merges and exits at (L, 0)
// with the original width and speed.
struct BlockField {
  double L = 0, A = 0, B = 0, Ap = 0, Bp = 0, v = 0;
  long long n = 0;
  double Lp = 0;       // sub-rectangle length
  double sub_y0 = 0;   // branch-axis start of the sub-rectangle window
  std::vector<AnalyticPatch> patches;   // block-local coords
  std::vector<RectFrame> subrects;      // 2n, i=1..n top then bottom, translates in x

  Vec2 eval(Vec2 p) const { return eval_patches(patches, p); }
  double flux(Vec2 a, Vec2 b) const;
};

// carve = true omits the straight part of each branch inside the sub-rectangle
// window (used when a child block replaces it)
BlockField branching_block(double L, double A, double B, double Ap, double Bp, long long n,
                           double v, double Lp, bool carve = false);

struct TreeNode {
  RectFrame frame;  // global pose; length L_q, width A_q + B_q
  int level = 0;
  int parent = -1;           // index into the previous level
  int index_in_parent = 0;   // 1..2n: i=1..n top branches, n+1..2n bottom
  bool e_cum = false;   // member of E_q (chain through E_{q-1})
  bool m_local = false; // member of M_q(parent)
  bool in_g = false;    // member of G_q
};

struct PipeTree {
  int q = 0;
  std::vector<std::vector<TreeNode>> levels;  // 0..q

  long long count(int level) const { return (long long)levels[level].size(); }
  long long count_e(int level) const;
  long long count_m(int level) const;
  long long count_g(int level) const;
};

struct AnalyticField {
  ParamTable table;
  int q = 0;
  std::vector<AnalyticPatch> patches;  // global torus coords, all levels flattened
  PipeTree tree;

  Vec2 eval(Vec2 p) const;  // wraps coordinates mod 1
  double flux(Vec2 a, Vec2 b) const;  // axis-aligned segment inside [0,1]^2
  double grad_sup_ball(Vec2 c, double eps) const;
  double max_speed() const;

  void build_index(int cells = 256);

 private:
  int idx_cells_ = 0;
  std::vector<std::vector<int>> idx_;
};

AnalyticField build_bq(const ParamTable& t, int q);

// derived sets, in global coordinates
std::vector<RectFrame> dissipative_rects(const AnalyticField& f, int level);  // D_{q,R}, R in G_q
struct SegmentSet {
  std::vector<std::pair<Vec2, Vec2>> segs;
};
SegmentSet entry_segments(const AnalyticField& f, int level);   // C_{level,R}, R in E_level
SegmentSet gamma_segments(const AnalyticField& f, int level);   // Gamma_{level,R}
std::vector<RectFrame> shear_strips(const AnalyticField& f, int level);  // S_{level,R}
std::vector<RectFrame> support_rects(const AnalyticField& f, int level); // F_level(R), all R

std::string tree_to_json(const AnalyticField& f);

}  // namespace anodiss
