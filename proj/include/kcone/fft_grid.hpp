#pragma once

#include "kcone/grid.hpp"

#include <fftw3.h>

namespace kcone {

// Spectral workhorse on the periodic grid: exact inversion of the five-point
// Laplacian and of its constant-coefficient shifts, plus sharp Fourier mode
// truncation. Plans use FFTW_ESTIMATE so repeated runs are bit-identical.
// Not thread-safe; one instance per solver.
class FourierGrid {
 public:
  explicit FourierGrid(int N);
  ~FourierGrid();
  FourierGrid(const FourierGrid&) = delete;
  FourierGrid& operator=(const FourierGrid&) = delete;

  int N() const { return n_; }

  // u with -(1/2) laplacian5(u) = rhs - mean(rhs) and mean(u) = 0.
  GridFunction solve_neg_half_laplacian(const GridFunction& rhs);

  // u with (-(1/2) laplacian5 + shift) u = rhs, shift > 0.
  GridFunction solve_shifted_neg_half_laplacian(const GridFunction& rhs, double shift);

  // Sharp truncation: keep Fourier modes with max(|k1|,|k2|) <= kcut (signed
  // frequencies in [-N/2, N/2]). Idempotent up to transform round-off.
  GridFunction truncate_modes(const GridFunction& u, int kcut);

  // Heat-kernel mollifier of spatial scale sigma with an exact flat top:
  // modes with k1^2 + k2^2 <= flat_k^2 pass unchanged, higher modes are
  // damped by exp(-2 pi^2 sigma^2 (|k|^2 - flat_k^2)). Unlike the sharp
  // truncation the kernel has no side lobes, so second differences of the
  // output stay set by sigma rather than by ringing.
  GridFunction mollify_modes(const GridFunction& u, double sigma, int flat_k);

 private:
  // multiplier(k) applied to every retained spectral bin; zero_mean drops the
  // constant mode
  template <typename Mult>
  GridFunction apply_symbol(const GridFunction& u, bool zero_mean, Mult mult);

  int n_;
  double* real_;
  fftw_complex* spec_;
  fftw_plan fwd_;
  fftw_plan bwd_;
};

}  // namespace kcone
