#include "kcone/local_models.hpp"

#include <cmath>

namespace kcone {

namespace {

// z^beta with the branch cut along the ray at angle `cut`; the argument is
// taken in (cut - 2*pi, cut].
cxd pow_branch(cxd z, double beta, double cut) {
  double rho = std::abs(z);
  if (rho == 0.0) return cxd(0.0, 0.0);
  double phi = std::arg(z);
  while (phi > cut) phi -= kTwoPi;
  while (phi <= cut - kTwoPi) phi += kTwoPi;
  return std::polar(std::pow(rho, beta), beta * phi);
}

ComponentsResult finalize(FrameHermitian g) {
  ComponentsResult res{std::move(g), false, 0.0};
  res.min_eigenvalue = res.g.min_eigenvalue();
  res.positive_definite = res.min_eigenvalue > 0.0;
  return res;
}

}  // namespace

ScalarJet2 ScalarJet2::constant(int n, double v) {
  ScalarJet2 j;
  j.value = v;
  j.d.assign(n, cxd(0.0, 0.0));
  j.dd.assign(static_cast<size_t>(n) * n, cxd(0.0, 0.0));
  return j;
}

LocalData::LocalData(ConeParams cp, int dim, ModelPoint pt, ScalarJet2 f,
                     FrameHermitian om, double del)
    : params(cp), n(dim), point(std::move(pt)), F(std::move(f)),
      Omega(std::move(om)), delta(del) {
  if (n < 1) throw ConfigError("LocalData: dimension must be >= 1");
  if (point.dim() != n) throw ConfigError("LocalData: point dimension mismatch");
  if (Omega.n() != n) throw ConfigError("LocalData: Omega dimension mismatch");
  if (static_cast<int>(F.d.size()) != n ||
      static_cast<int>(F.dd.size()) != n * n)
    throw ConfigError("LocalData: jet of F has wrong dimensions");
  if (!(F.value > 0.0))
    throw ConfigError("LocalData: potential factor F must be positive");
  if (!(delta > 0.0)) throw ConfigError("LocalData: delta must be positive");
  if (!(Omega.min_eigenvalue() > 0.0))
    throw ConfigError("LocalData: background Omega must be positive definite");
}

ComponentsResult reference_components(const LocalData& ld) {
  const int n = ld.n;
  const double beta = ld.params.beta();
  ModelPoint pt = to_complex_chart(ld.point, ld.params);
  const cxd z1 = pt.z1;
  const double m = std::abs(z1);
  const double del = ld.delta;

  FrameHermitian g(n);
  if (m == 0.0) {
    // Continuous extension to the axis: only the potential's value survives in
    // the corner entry and the first row decouples.
    g.at(0, 0) = beta * beta * del * ld.F.value;
    for (int j = 1; j < n; ++j) {
      g.at(j, j) = ld.Omega.at(j, j);
      for (int k = 1; k < n; ++k) g.at(j, k) = ld.Omega.at(j, k);
    }
    return finalize(std::move(g));
  }

  const double m2m2b = std::pow(m, 2.0 - 2.0 * beta);
  const double m1mb = std::pow(m, 1.0 - beta);
  const double m1pb = std::pow(m, 1.0 + beta);
  const double mbm1 = std::pow(m, beta - 1.0);

  // corner entry in the adapted frame
  g.at(0, 0) = m2m2b * ld.Omega.at(0, 0) + m * m * del * ld.F.dzdzbar(0, 0) +
               beta * del * 2.0 * std::real(z1 * ld.F.dz(0)) +
               beta * beta * del * ld.F.value;

  // first row / column: each term carries a positive power of |z1|
  for (int j = 1; j < n; ++j) {
    cxd v = m1mb * ld.Omega.at(0, j) + m1pb * del * ld.F.dzdzbar(0, j) +
            beta * mbm1 * std::conj(z1) * del * std::conj(ld.F.dz(j));
    g.at(0, j) = v;
    g.at(j, 0) = std::conj(v);
  }

  // the block transverse to the cone direction
  const double m2b = std::pow(m, 2.0 * beta);
  for (int j = 1; j < n; ++j)
    for (int k = 1; k < n; ++k)
      g.at(j, k) = ld.Omega.at(j, k) + m2b * del * ld.F.dzdzbar(j, k);

  return finalize(std::move(g));
}

ComponentsResult sturm_pullback(const LocalData& ld, const SturmOptions& opts) {
  const int n = ld.n;
  const double beta = ld.params.beta();
  ModelPoint pt = to_complex_chart(ld.point, ld.params);
  const cxd z1 = pt.z1;
  const double m = std::abs(z1);
  const double del = ld.delta;

  if (m == 0.0) {
    // The pullback extends continuously to the axis with the same limit as the
    // componentwise route.
    FrameHermitian g(n);
    g.at(0, 0) = beta * beta * del * ld.F.value;
    for (int j = 1; j < n; ++j)
      for (int k = 1; k < n; ++k) g.at(j, k) = ld.Omega.at(j, k);
    return finalize(std::move(g));
  }

  const cxd w = pow_branch(z1, beta, opts.branch_cut_angle);
  const double w2 = std::norm(w);  // |z1|^{2 beta}, branch-free
  const cxd dw = beta * w / z1;    // d(z1^beta)/dz1 on the same branch

  // Ambient coefficients of Gamma = Omega + i ddbar (del*F*|z_{n+1}|^2) at
  // (z, w), indexed 0..n with n the added coordinate.
  auto gamma = [&](int a, int b) -> cxd {
    if (a < n && b < n)
      return ld.Omega.at(a, b) + w2 * del * ld.F.dzdzbar(a, b);
    if (a < n && b == n) return del * ld.F.dz(a) * w;
    if (a == n && b < n) return del * std::conj(ld.F.dz(b)) * std::conj(w);
    return cxd(del * ld.F.value, 0.0);
  };

  // Pull back through Phi(z) = (z, z1^beta): only dPhi_{n+1}/dz1 = dw is
  // nontrivial.
  FrameHermitian coord(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      cxd v = gamma(i, j);
      if (j == 0) v += gamma(i, n) * std::conj(dw);
      if (i == 0) v += gamma(n, j) * dw;
      if (i == 0 && j == 0) v += gamma(n, n) * std::norm(dw);
      coord.at(i, j) = v;
    }

  // adapted frame: scale the first row and column by |z1|^{1-beta}
  const double s = std::pow(m, 1.0 - beta);
  FrameHermitian g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double f = ((i == 0) ? s : 1.0) * ((j == 0) ? s : 1.0);
      g.at(i, j) = coord.at(i, j) * f;
    }
  return finalize(std::move(g));
}

double gaussian_curvature_model(double beta, double a, cxd z1) {
  if (!(beta > 0.0 && beta <= 1.0))
    throw ConfigError("gaussian_curvature_model: beta must lie in (0,1]");
  if (a == 0.0 || beta == 1.0) return 0.0;  // flat cone / flat plane
  double m = std::abs(z1);
  if (m == 0.0)
    throw NumericalError("gaussian_curvature_model: curvature of g_a is evaluated away from the axis");
  double lam = a + std::pow(m, 2.0 * beta - 2.0);
  if (!(lam > 0.0))
    throw NumericalError("gaussian_curvature_model: g_a degenerates at |z1| = " +
                         std::to_string(m) + " for a = " + std::to_string(a));
  double num = -2.0 * (beta - 1.0) * (beta - 1.0) * a *
               std::pow(m, 2.0 - 4.0 * beta);
  double den = 1.0 + a * std::pow(m, 2.0 - 2.0 * beta);
  return num / (den * den * den);
}

UnboundednessReport curvature_unboundedness_scan(double beta, double a,
                                                 int nsamples, double r_start) {
  if (!(beta > 0.0 && beta < 1.0))
    throw ConfigError("curvature_unboundedness_scan: beta must lie in (0,1)");
  if (nsamples < 3) throw ConfigError("curvature_unboundedness_scan: need >= 3 samples");

  UnboundednessReport rep;
  rep.beta = beta;
  rep.a = a;
  rep.exponent = 2.0 - 4.0 * beta;
  rep.divergence_claimed = (beta > 0.5 && a != 0.0);
  rep.direction = !rep.divergence_claimed ? "none" : (a > 0.0 ? "-inf" : "+inf");

  double r = r_start;
  for (int k = 0; k < nsamples; ++k, r *= 0.5) {
    CurvatureSample s;
    s.radius = r;
    s.K = gaussian_curvature_model(beta, a, cxd(r, 0.0));
    rep.samples.push_back(s);
  }

  if (!rep.divergence_claimed) {
    // exponent 2 - 4*beta >= 0: the scan must stay bounded
    double kmax = 0.0;
    for (const auto& s : rep.samples) kmax = std::max(kmax, std::fabs(s.K));
    rep.samples_consistent = std::isfinite(kmax);
    return rep;
  }
  // The r^{2-4 beta} growth only dominates once (1 + a r^{2-2 beta})^3 has
  // settled near 1, so monotonicity is asserted on the deep half of the scan
  // only; the sign is pinned everywhere.
  bool ok = true;
  size_t half = rep.samples.size() / 2;
  for (size_t k = 0; k < rep.samples.size(); ++k) {
    if (a > 0.0 && rep.samples[k].K >= 0.0) ok = false;
    if (a < 0.0 && rep.samples[k].K <= 0.0) ok = false;
    if (k > half &&
        std::fabs(rep.samples[k].K) <= std::fabs(rep.samples[k - 1].K))
      ok = false;
  }
  if (std::fabs(rep.samples.back().K) <= std::fabs(rep.samples.front().K))
    ok = false;
  rep.samples_consistent = ok;
  return rep;
}

FrameHermitian coordinate_change_components(const ConeParams& cp,
                                            const FrameHermitian& gt,
                                            double abs_z1) {
  if (gt.n() != 2)
    throw ConfigError("coordinate_change_components: only n = 2 is supported");
  if (!(abs_z1 >= 0.0))
    throw ConfigError("coordinate_change_components: |z1| must be nonnegative");
  double w = (abs_z1 == 0.0) ? 0.0 : std::pow(abs_z1, 1.0 - cp.beta());
  FrameHermitian g(2);
  g.at(0, 0) = gt.at(0, 0) + w * (gt.at(0, 1) + gt.at(1, 0)) + w * w * gt.at(1, 1);
  g.at(0, 1) = gt.at(0, 1) + w * gt.at(1, 1);
  g.at(1, 0) = std::conj(g.at(0, 1));
  g.at(1, 1) = gt.at(1, 1);
  return g;
}

}  // namespace kcone
