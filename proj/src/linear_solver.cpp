#include "kcone/linear_solver.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "kcone/fft_grid.hpp"

namespace kcone {

namespace {

double default_tol(const GridFunction& h, double tol) {
  if (tol > 0.0) return tol;
  double s = h.sup_norm();
  return 1e-10 * (s > 0.0 ? s : 1.0);
}

double dot(const GridFunction& a, const GridFunction& b) {
  double s = 0.0;
  for (size_t k = 0; k < a.data().size(); ++k) s += a.data()[k] * b.data()[k];
  return s;
}

std::string history_tail(const std::vector<double>& hist) {
  std::string s;
  size_t from = hist.size() > 8 ? hist.size() - 8 : 0;
  for (size_t k = from; k < hist.size(); ++k) {
    char buf[40];
    std::snprintf(buf, sizeof buf, " %.3e", hist[k]);
    s += buf;
  }
  return s;
}

}  // namespace

LinearProblem::LinearProblem(SurfaceMetric m, GridFunction rhs, double shift)
    : metric(std::move(m)), c(shift), h(std::move(rhs)) {
  if (h.N() != metric.spec.N) throw ConfigError("LinearProblem: rhs grid mismatch");
  if (c < 0.0) throw ConfigError("LinearProblem: shift must be >= 0");
}

GridFunction solve_poisson(const LinearProblem& p) {
  if (p.c != 0.0) throw ConfigError("solve_poisson: problem has a nonzero shift");
  const SurfaceMetric& m = p.metric;
  const double area = m.total_area();
  const double sup_h = p.h.sup_norm();
  const double tol = default_tol(p.h, p.tol);

  double mean_h = 0.0;
  for (size_t k = 0; k < p.h.data().size(); ++k)
    mean_h += p.h.data()[k] * m.rho.data()[k];
  mean_h *= m.spec.cell_area() / area;

  if (sup_h == 0.0) return GridFunction(m.spec.N, 0.0);
  if (std::fabs(mean_h) * area > p.tol_compat * area * sup_h)
    throw NumericalError(
        "solve_poisson: cokernel obstruction, |mean_omega(h)| = " +
        std::to_string(std::fabs(mean_h)) + " exceeds the compatibility budget");

  // Delta u = h - mean is equivalent to -(1/2) lap5(u) = -rho (h - mean)
  GridFunction rhs = product(m.rho, p.h);
  for (size_t k = 0; k < rhs.data().size(); ++k)
    rhs.data()[k] = -(rhs.data()[k] - m.rho.data()[k] * mean_h);
  FourierGrid fft(m.spec.N);
  GridFunction u = fft.solve_neg_half_laplacian(rhs);

  // gauge: zero omega-mean
  u.add_scalar(-integrate(m, u) / area);

  GridFunction res = laplacian(m, u);
  res -= p.h;
  res.add_scalar(mean_h);
  double rnorm = res.sup_norm();
  if (rnorm >= tol)
    throw NumericalError("solve_poisson: residual " + std::to_string(rnorm) +
                         " did not reach tolerance " + std::to_string(tol));
  return u;
}

GridFunction solve_shifted(const LinearProblem& p) {
  if (!(p.c > 0.0)) throw ConfigError("solve_shifted: shift must be positive");
  const SurfaceMetric& m = p.metric;
  const int N = m.spec.N;
  const double tol = default_tol(p.h, p.tol);
  if (p.h.sup_norm() == 0.0) return GridFunction(N, 0.0);

  // (Delta - c) u = h  <=>  A u = b,  A = -ipdd + c rho, b = -rho h (SPD)
  GridFunction b = product(m.rho, p.h);
  b *= -1.0;
  auto apply_A = [&](const GridFunction& v) {
    GridFunction av = ipdd(v);
    av *= -1.0;
    for (size_t k = 0; k < av.data().size(); ++k)
      av.data()[k] += p.c * m.rho.data()[k] * v.data()[k];
    return av;
  };

  FourierGrid fft(N);
  const double rho_bar = m.rho.mean();
  auto precond = [&](const GridFunction& v) {
    return fft.solve_shifted_neg_half_laplacian(v, p.c * rho_bar);
  };

  const double rho_min = m.rho.min();
  const double stop_alg = tol * rho_min;  // sup|b - Au| below this certifies

  GridFunction u(N, 0.0);
  GridFunction r = b;
  GridFunction z = precond(r);
  GridFunction d = z;
  double rz = dot(r, z);
  std::vector<double> hist;

  for (int it = 0; it < p.max_iter; ++it) {
    double rsup = r.sup_norm();
    hist.push_back(rsup);
    if (rsup < stop_alg) break;
    GridFunction ad = apply_A(d);
    double da = dot(d, ad);
    if (!(da > 0.0))
      throw NumericalError("solve_shifted: operator lost definiteness" +
                           history_tail(hist));
    double alpha = rz / da;
    for (size_t k = 0; k < u.data().size(); ++k) {
      u.data()[k] += alpha * d.data()[k];
      r.data()[k] -= alpha * ad.data()[k];
    }
    z = precond(r);
    double rz_new = dot(r, z);
    double beta = rz_new / rz;
    rz = rz_new;
    for (size_t k = 0; k < d.data().size(); ++k)
      d.data()[k] = z.data()[k] + beta * d.data()[k];
  }

  GridFunction res = laplacian(m, u);
  for (size_t k = 0; k < res.data().size(); ++k)
    res.data()[k] -= p.c * u.data()[k] + p.h.data()[k];
  double rnorm = res.sup_norm();
  if (rnorm >= tol)
    throw NumericalError("solve_shifted: residual " + std::to_string(rnorm) +
                         " above tolerance " + std::to_string(tol) +
                         " after " + std::to_string(hist.size()) +
                         " iterations; history" + history_tail(hist));
  return u;
}

FredholmReport fredholm_diagnostics(const SurfaceMetric& m) {
  const int N = m.spec.N;
  const double area = m.total_area();

  auto omega_dot = [&](const GridFunction& a, const GridFunction& b) {
    double s = 0.0;
    for (size_t k = 0; k < a.data().size(); ++k)
      s += a.data()[k] * b.data()[k] * m.rho.data()[k];
    return s * m.spec.cell_area();
  };

  // deterministic start with low-mode overlap
  GridFunction v(N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double x = static_cast<double>(i) / N, y = static_cast<double>(j) / N;
      v.at(i, j) = std::sin(kTwoPi * x) + 0.3 * std::cos(kTwoPi * y) +
                   0.1 * std::sin(kTwoPi * (x + y));
    }

  FredholmReport rep;
  double lambda_prev = 0.0;
  GridFunction w(N, 0.0);
  for (int it = 0; it < 40; ++it) {
    v.add_scalar(-integrate(m, v) / area);
    v *= 1.0 / std::sqrt(omega_dot(v, v));
    LinearProblem lp(m, v, 0.0);
    w = solve_poisson(lp);
    GridFunction lw = laplacian(m, w);
    double lam = -omega_dot(lw, w) / omega_dot(w, w);
    rep.iterations = it + 1;
    // self-adjointness defect on the current pair
    GridFunction lv = laplacian(m, v);
    rep.selfadjoint_defect = std::fabs(omega_dot(lv, w) - omega_dot(v, lw));
    bool settled = it > 2 && std::fabs(lam - lambda_prev) < 1e-10 * std::fabs(lam);
    lambda_prev = lam;
    v = w;
    if (settled) break;
  }
  rep.lambda1 = lambda_prev;

  // constants are killed exactly by the stencil; the positive gap certifies
  // the kernel is one-dimensional, and self-adjointness transfers the count
  // to the cokernel
  GridFunction ones(N, 1.0);
  double kdefect = laplacian(m, ones).sup_norm();
  rep.kernel_dim = (kdefect == 0.0 || kdefect < 1e-14) && rep.lambda1 > 1e-8 ? 1 : 2;
  rep.cokernel_dim = rep.selfadjoint_defect < 1e-8 ? rep.kernel_dim : -1;
  return rep;
}

}  // namespace kcone
