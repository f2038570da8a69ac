#pragma once

#include "kcone/grid.hpp"

namespace kcone {

// Norm of the divisor section on the testbed: equals the distance to p inside
// r0, equals 1 beyond 2r0, C^2 monotone quintic glue in between. Vanishes only
// at the cone node.
struct DivisorSection {
  SurfaceSpec spec;
  GridFunction s;
};

// Radial profile of the section norm.
double section_profile(const SurfaceSpec& spec, double r);

// Errors out when the glue is under-resolved (fewer than 8 cells across).
DivisorSection build_section_norm(const SurfaceSpec& spec);

// Metric on the testbed represented by its positive area density against
// dx dy. The cone structure lives in the density's r^{2 beta - 2} profile
// near p; the value stored at the node p itself follows the builder's
// convention and is kept finite.
struct SurfaceMetric {
  SurfaceSpec spec;
  GridFunction rho;

  SurfaceMetric(SurfaceSpec sp, GridFunction density);
  double total_area() const;
};

SurfaceMetric flat_metric(const SurfaceSpec& spec, double total_area);

// omega = Omega + delta * ipdd(s^{2 beta}) with Omega flat of area omega_area.
// The bundle keeps the ingredients the curvature potentials need later.
struct ReferenceData {
  SurfaceSpec spec;
  double delta = 0.0;
  double omega_area = 0.0;
  DivisorSection section;
  SurfaceMetric background;  // flat Omega
  SurfaceMetric metric;      // omega
};

// Positivity of the resulting density is checked; failure names delta.
ReferenceData build_reference_metric(const SurfaceSpec& spec, double delta,
                                     double omega_area);

// Delta u = ipdd(u) / rho (the negative-at-maxima convention).
GridFunction laplacian(const SurfaceMetric& m, const GridFunction& u);

// Cell-centered quadrature of u against the area density.
double integrate(const SurfaceMetric& m, const GridFunction& u);

// K = -ipdd(log rho)/rho at nodes farther than exclusion_radius from p
// (zero, flagged Excluded, inside). exclusion_radius < 0 means the default
// r0/2; pass 0 to keep every node except p itself.
GridFunction gauss_curvature(const SurfaceMetric& m, double exclusion_radius = -1.0);

// Smooth representative of ipdd(log s^2): the actual stencil value at nodes
// with dist >= r0 and exactly zero inside. The excised apex carries the
// remaining point mass 2*pi. Off the glue annulus the field decays like
// h^2/r^4; keeping the collar would leave an N-independent spurious mass.
GridFunction ipdd_log_section_smooth(const DivisorSection& sec);

// log(rho * s^{2-2 beta}): the density's log with the cone profile factored
// out. Finite off p; the node p takes the 4-neighbor average.
GridFunction regular_log_density(const SurfaceMetric& m, const DivisorSection& sec);

// amplitude * s^{2 beta - 2} with a finite placeholder at p, for test
// metrics that are exactly the model near the cone node.
GridFunction model_cone_density(const DivisorSection& sec, double amplitude);

}  // namespace kcone
