#pragma once

#include <vector>

#include "kcone/cone_geometry.hpp"

namespace kcone {

// Order-2 jet of a real scalar function of n complex variables:
// value, the holomorphic gradient dF/dz_i, and the mixed Hessian
// d2F/dz_i dzbar_j (Hermitian, row-major).
struct ScalarJet2 {
  double value = 1.0;
  std::vector<cxd> d;
  std::vector<cxd> dd;

  static ScalarJet2 constant(int n, double v);
  cxd dz(int i) const { return d.at(i); }
  cxd dzdzbar(int i, int j) const { return dd.at(static_cast<size_t>(i) * d.size() + j); }
};

// Everything needed to evaluate the singular reference metric
// Omega + i ddbar (delta * F * |z1|^{2 beta}) at one point: the jet of the
// positive factor F, the background coefficients Omega at the point, the
// point itself and the cone parameters.
struct LocalData {
  ConeParams params;
  int n = 2;
  ModelPoint point;     // complex chart
  ScalarJet2 F;         // must have F.value > 0
  FrameHermitian Omega; // positive definite background at the point
  double delta = 1.0;   // must be > 0

  LocalData(ConeParams cp, int dim, ModelPoint pt, ScalarJet2 f, FrameHermitian om,
            double del = 1.0);
};

struct ComponentsResult {
  FrameHermitian g;      // components in the adapted frame v1 = |z1|^{1-beta} d/dz1
  bool positive_definite = false;
  double min_eigenvalue = 0.0;  // non-PD input data is flagged here, not thrown
};

// Componentwise evaluation of the reference metric in the adapted frame.
ComponentsResult reference_components(const LocalData& ld);

// Same object produced by the embedding route: build
// Gamma = Omega + i ddbar (delta * F * |z_{n+1}|^2) on C^{n+1} and pull back
// through z -> (z, z1^beta). The branch of z1^beta drops out of the result.
struct SturmOptions {
  // Direction (angle of the cut ray) for the z1^beta branch; the default cut
  // is the negative real axis.
  double branch_cut_angle = kPi;
};

ComponentsResult sturm_pullback(const LocalData& ld, const SturmOptions& opts = {});

// Gauss curvature of the one-dimensional model family
// g_a = (a + |z1|^{2 beta - 2}) |dz1|^2.
double gaussian_curvature_model(double beta, double a, cxd z1);

struct CurvatureSample {
  double radius = 0.0;
  double K = 0.0;
};

struct UnboundednessReport {
  double beta = 0.5;
  double a = 0.0;
  double exponent = 0.0;          // 2 - 4*beta, the radial growth rate of K
  bool divergence_claimed = false;  // only for 1/2 < beta < 1 and a != 0
  std::string direction = "none";   // "-inf", "+inf", "none"
  std::vector<CurvatureSample> samples;
  bool samples_consistent = false;  // scan agrees with the claim
};

// Radial scan of K for g_a. For beta <= 1/2 no divergence is claimed and the
// report says so; for 1/2 < beta < 1 the claimed sign of the divergence is
// checked against the samples.
UnboundednessReport curvature_unboundedness_scan(double beta, double a,
                                                 int nsamples = 12,
                                                 double r_start = 0.5);

// Metric components across the cone-to-complex coordinate change, n = 2:
// given components gt in cone coordinates, returns the complex-coordinate
// components picking up powers of |z1|^{1-beta}.
FrameHermitian coordinate_change_components(const ConeParams& cp,
                                            const FrameHermitian& gt,
                                            double abs_z1);

}  // namespace kcone
