#include "kcone/fft_grid.hpp"

#include <cmath>

namespace kcone {

FourierGrid::FourierGrid(int N) : n_(N) {
  if (N < 2) throw ConfigError("FourierGrid: N must be >= 2");
  real_ = fftw_alloc_real(static_cast<size_t>(n_) * n_);
  spec_ = fftw_alloc_complex(static_cast<size_t>(n_) * (n_ / 2 + 1));
  if (!real_ || !spec_) throw Error("FourierGrid: allocation failed");
  fwd_ = fftw_plan_dft_r2c_2d(n_, n_, real_, spec_, FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft_c2r_2d(n_, n_, spec_, real_, FFTW_ESTIMATE);
  if (!fwd_ || !bwd_) throw Error("FourierGrid: plan creation failed");
}

FourierGrid::~FourierGrid() {
  fftw_destroy_plan(fwd_);
  fftw_destroy_plan(bwd_);
  fftw_free(real_);
  fftw_free(spec_);
}

template <typename Mult>
GridFunction FourierGrid::apply_symbol(const GridFunction& u, bool zero_mean, Mult mult) {
  if (u.N() != n_) throw ConfigError("FourierGrid: grid size mismatch");
  const size_t total = static_cast<size_t>(n_) * n_;
  for (size_t k = 0; k < total; ++k) real_[k] = u.data()[k];
  fftw_execute(fwd_);
  const int cols = n_ / 2 + 1;
  for (int i = 0; i < n_; ++i) {
    const int k1 = (i <= n_ / 2) ? i : i - n_;
    for (int j = 0; j < cols; ++j) {
      const size_t idx = static_cast<size_t>(i) * cols + j;
      double m = mult(k1, j);
      if (zero_mean && i == 0 && j == 0) m = 0.0;
      spec_[idx][0] *= m;
      spec_[idx][1] *= m;
    }
  }
  fftw_execute(bwd_);
  GridFunction r(n_);
  const double scale = 1.0 / static_cast<double>(total);
  for (size_t k = 0; k < total; ++k) r.data()[k] = real_[k] * scale;
  r.flag = u.flag;
  return r;
}

GridFunction FourierGrid::solve_neg_half_laplacian(const GridFunction& rhs) {
  const double two_n2 = 2.0 * static_cast<double>(n_) * n_;
  const double w = kPi / n_;
  return apply_symbol(rhs, true, [&](int k1, int k2) {
    if (k1 == 0 && k2 == 0) return 0.0;
    double s1 = std::sin(w * k1), s2 = std::sin(w * k2);
    return 1.0 / (two_n2 * (s1 * s1 + s2 * s2));
  });
}

GridFunction FourierGrid::solve_shifted_neg_half_laplacian(const GridFunction& rhs,
                                                           double shift) {
  if (!(shift > 0.0))
    throw ConfigError("FourierGrid: shift must be positive");
  const double two_n2 = 2.0 * static_cast<double>(n_) * n_;
  const double w = kPi / n_;
  return apply_symbol(rhs, false, [&](int k1, int k2) {
    double s1 = std::sin(w * k1), s2 = std::sin(w * k2);
    return 1.0 / (two_n2 * (s1 * s1 + s2 * s2) + shift);
  });
}

GridFunction FourierGrid::truncate_modes(const GridFunction& u, int kcut) {
  if (kcut < 0) throw ConfigError("FourierGrid: negative mode cutoff");
  return apply_symbol(u, false, [&](int k1, int k2) {
    return (std::abs(k1) <= kcut && std::abs(k2) <= kcut) ? 1.0 : 0.0;
  });
}

GridFunction FourierGrid::mollify_modes(const GridFunction& u, double sigma, int flat_k) {
  if (!(sigma > 0.0)) throw ConfigError("FourierGrid: mollifier scale must be positive");
  if (flat_k < 0) throw ConfigError("FourierGrid: negative flat top");
  const double a = 2.0 * kPi * kPi * sigma * sigma;
  const double q0 = static_cast<double>(flat_k) * flat_k;
  return apply_symbol(u, false, [&](int k1, int k2) {
    const double q = static_cast<double>(k1) * k1 + static_cast<double>(k2) * k2;
    return q <= q0 ? 1.0 : std::exp(-a * (q - q0));
  });
}

}  // namespace kcone
