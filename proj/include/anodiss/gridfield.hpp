#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "anodiss/field.hpp"

namespace anodiss {

// Periodic grid-sampled velocity field on [0,1)^2. Node (i,j) sits at
// (x, y) = (j/res, i/res); components stored row-major, size res*res.
struct GridField {
  int res = 0;
  int q = -1;                // level when built by build_uq, -1 otherwise
  uint64_t table_hash = 0;
  std::vector<double> ux, uy;
  std::vector<double> ell_used;  // effective mollification radius per layer
  std::vector<std::string> warnings;

  Vec2 eval(Vec2 p) const;   // bilinear interpolation, coordinates wrapped
  double max_speed() const;
  Vec2 mean() const;
  double divergence_linf() const;  // spectral divergence sup on the grid
};

struct GridScalar {
  int res = 0;
  std::vector<double> a;

  double eval(Vec2 p) const;
  double mean() const;
  double grad_l2sq() const;  // integral of |grad|^2, spectral
};

// u_q = b_0 * phi_{l_0} + sum_{j=1..q} (b_j - b_{j-1}) * phi_{l_j}, each
// convolution spectral, the sum Leray-projected. Mollification radii are
// floored at 4/grid_res (recorded in ell_used, warned when floored); the
// build refuses grids that cannot resolve even the root pipe width.
// project = false skips the final projection and keeps the exact compact
// support of the mollified layers (the projection tail is global).
GridField build_uq(const ParamTable& t, int q, int grid_res, bool project = true);

GridField sample_field(const AnalyticField& f, int res);

// H with laplacian H = curl u, zero mean. The mean velocity has no stream
// function on the torus; it is subtracted and reported through mean_out.
GridScalar stream_function(const GridField& f, Vec2* mean_out = nullptr);

GridField perp_gradient(const GridScalar& h);  // (-dH/dy, dH/dx), spectral

// max over axis-aligned grid pairs at dyadic lags of |f(x)-f(y)|/|x-y|^alpha,
// combined with the sup norm.
double holder_norm(const GridField& f, double alpha);

// Integral of the local gradient sup along the curve gamma' = u(gamma); the
// ball sup uses the spectrally computed gradient maximized over nearby nodes.
CurveIntegral curve_gradient_integral(const GridField& f, Vec2 start, double eps_ball,
                                      double t_end, double dt);

GridField resample(const GridField& f, int new_res);  // spectral pad/truncate

// grid convolution with the normalized tensor bump of radius ell
GridField mollify(const GridField& f, double ell);

void write_field(const GridField& f, const std::string& path);
GridField read_field(const std::string& path);

// snapshot format, magic ANODISS-SCALAR v1
void write_scalar(const GridScalar& g, const std::string& path);
GridScalar read_scalar(const std::string& path);

}  // namespace anodiss
