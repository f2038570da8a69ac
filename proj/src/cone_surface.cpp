#include "kcone/cone_surface.hpp"

#include <cmath>
#include <string>

namespace kcone {

double section_profile(const SurfaceSpec& spec, double r) {
  const double r0 = spec.r0;
  if (r <= r0) return r;
  if (r >= 2.0 * r0) return 1.0;
  // quintic Hermite on [r0, 2r0] with values (r0, 1), slopes (1, 0) and zero
  // curvature at both ends, so the profile is C^2 across the junctions; a C^1
  // glue leaves an s'' jump at r0 whose lattice flux error decays only like h
  // and biases every integral identity through the cone annulus. Strictly
  // monotone for r0 < 5/7: near t = 1 the derivative behaves like
  // (30 - 42 r0)(1-t)^2.
  double t = (r - r0) / r0;
  double ramp = ((6.0 * t - 15.0) * t + 10.0) * t * t * t;
  double tail = ((-9.0 * t + 23.0) * t - 16.0) * t * t * t + t + 1.0;
  return r0 * tail + ramp;
}

DivisorSection build_section_norm(const SurfaceSpec& spec) {
  if (spec.r0 * spec.N < 8.0)
    throw ConfigError("build_section_norm: glue under-resolved, r0*N = " +
                      std::to_string(spec.r0 * spec.N) + " < 8 cells");
  GridFunction s(spec.N);
  for (int i = 0; i < spec.N; ++i)
    for (int j = 0; j < spec.N; ++j)
      s.at(i, j) = section_profile(spec, spec.dist_p(i, j));
  return DivisorSection{spec, std::move(s)};
}

SurfaceMetric::SurfaceMetric(SurfaceSpec sp, GridFunction density)
    : spec(sp), rho(std::move(density)) {
  if (rho.N() != spec.N) throw ConfigError("SurfaceMetric: density grid mismatch");
  if (!rho.all_finite() || !(rho.min() > 0.0))
    throw NumericalError("SurfaceMetric: density must be positive everywhere");
}

double SurfaceMetric::total_area() const {
  double s = 0.0;
  for (double v : rho.data()) s += v;
  return s * spec.cell_area();
}

SurfaceMetric flat_metric(const SurfaceSpec& spec, double total_area) {
  if (!(total_area > 0.0)) throw ConfigError("flat_metric: area must be positive");
  return SurfaceMetric(spec, GridFunction(spec.N, total_area));
}

ReferenceData build_reference_metric(const SurfaceSpec& spec, double delta,
                                     double omega_area) {
  if (delta < 0.0) throw ConfigError("build_reference_metric: delta must be >= 0");
  DivisorSection sec = build_section_norm(spec);
  SurfaceMetric background = flat_metric(spec, omega_area);

  GridFunction s2b = sec.s;
  for (double& v : s2b.data()) v = std::pow(v, 2.0 * spec.beta);
  GridFunction rho = background.rho + delta * ipdd(s2b);

  double mn = rho.min();
  if (!(mn > 0.0))
    throw NumericalError(
        "build_reference_metric: density loses positivity (min " +
        std::to_string(mn) + ") at delta = " + std::to_string(delta) +
        "; decrease delta");
  rho.flag = ConeNodeFlag::Finite;
  return ReferenceData{spec, delta, omega_area, std::move(sec),
                       std::move(background), SurfaceMetric(spec, std::move(rho))};
}

GridFunction laplacian(const SurfaceMetric& m, const GridFunction& u) {
  return quotient(ipdd(u), m.rho);
}

double integrate(const SurfaceMetric& m, const GridFunction& u) {
  if (u.N() != m.spec.N) throw ConfigError("integrate: field grid mismatch");
  double s = 0.0;
  for (size_t k = 0; k < u.data().size(); ++k) s += u.data()[k] * m.rho.data()[k];
  return s * m.spec.cell_area();
}

GridFunction gauss_curvature(const SurfaceMetric& m, double exclusion_radius) {
  const SurfaceSpec& sp = m.spec;
  double excl = exclusion_radius < 0.0 ? 0.5 * sp.r0 : exclusion_radius;
  GridFunction lr = log_field(m.rho);
  GridFunction num = ipdd(lr);
  GridFunction K(sp.N);
  const int pi = sp.pi(), pj = sp.pj();
  for (int i = 0; i < sp.N; ++i)
    for (int j = 0; j < sp.N; ++j) {
      if ((i == pi && j == pj) || sp.dist_p(i, j) <= excl) continue;
      K.at(i, j) = -num.at(i, j) / m.rho.at(i, j);
    }
  K.flag = ConeNodeFlag::Excluded;
  return K;
}

GridFunction ipdd_log_section_smooth(const DivisorSection& sec) {
  const SurfaceSpec& sp = sec.spec;
  GridFunction logs2(sp.N);
  const int pi = sp.pi(), pj = sp.pj();
  for (int i = 0; i < sp.N; ++i)
    for (int j = 0; j < sp.N; ++j)
      logs2.at(i, j) = (i == pi && j == pj) ? 0.0 : 2.0 * std::log(sec.s.at(i, j));
  GridFunction full = ipdd(logs2);
  GridFunction out(sp.N);
  for (int i = 0; i < sp.N; ++i)
    for (int j = 0; j < sp.N; ++j)
      if (sp.dist_p(i, j) >= sp.r0) out.at(i, j) = full.at(i, j);
  return out;
}

GridFunction regular_log_density(const SurfaceMetric& m, const DivisorSection& sec) {
  const SurfaceSpec& sp = m.spec;
  if (sec.spec.N != sp.N) throw ConfigError("regular_log_density: section grid mismatch");
  GridFunction out(sp.N);
  const int pi = sp.pi(), pj = sp.pj();
  const double e = 2.0 - 2.0 * sp.beta;
  for (int i = 0; i < sp.N; ++i)
    for (int j = 0; j < sp.N; ++j) {
      if (i == pi && j == pj) continue;
      out.at(i, j) = std::log(m.rho.at(i, j)) + e * std::log(sec.s.at(i, j));
    }
  out.at(pi, pj) = 0.25 * (out.atp(pi + 1, pj) + out.atp(pi - 1, pj) +
                           out.atp(pi, pj + 1) + out.atp(pi, pj - 1));
  return out;
}

GridFunction model_cone_density(const DivisorSection& sec, double amplitude) {
  if (!(amplitude > 0.0)) throw ConfigError("model_cone_density: amplitude must be positive");
  const SurfaceSpec& sp = sec.spec;
  GridFunction rho(sp.N);
  const int pi = sp.pi(), pj = sp.pj();
  const double e = 2.0 * sp.beta - 2.0;
  for (int i = 0; i < sp.N; ++i)
    for (int j = 0; j < sp.N; ++j)
      rho.at(i, j) = (i == pi && j == pj)
                         ? amplitude * std::pow(sp.h(), e)
                         : amplitude * std::pow(sec.s.at(i, j), e);
  rho.flag = ConeNodeFlag::LogSingular;
  return rho;
}

}  // namespace kcone
