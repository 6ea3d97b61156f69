#pragma once
#include <fftw3.h>

#include <complex>
#include <vector>

namespace anodiss {

using cplx = std::complex<double>;

// Thin wrapper around FFTW r2c/c2r transforms on an n x n periodic grid.
// Real layout: row-major, node (i,j) at (x,y) = (j/n, i/n). Spectral layout:
// n x (n/2+1), kx = column index, ky = folded row index.
struct Fft2 {
  int n = 0;

  explicit Fft2(int n);
  ~Fft2();
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  int nc() const { return n / 2 + 1; }
  size_t cs() const { return (size_t)n * nc(); }

  void fwd(const std::vector<double>& in, std::vector<cplx>& out);
  void inv(const std::vector<cplx>& in, std::vector<double>& out);  // scales by 1/n^2

 private:
  std::vector<double> rbuf_;
  std::vector<cplx> cbuf_;
  fftw_plan pf_ = nullptr, pb_ = nullptr;
};

inline int kfold(int n, int i) { return i <= n / 2 ? i : i - n; }

// 1-D spectral symbol of the normalized bump (1-(d/ell)^2)^3 sampled on the grid
std::vector<double> bump_symbol(int n, double ell);

}  // namespace anodiss
