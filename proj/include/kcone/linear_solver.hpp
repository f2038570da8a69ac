#pragma once

#include "kcone/cone_surface.hpp"

namespace kcone {

// Discrete elliptic problem (Delta - c) u = h on the cone surface, with
// Delta u = ipdd(u)/rho. For c = 0 solvability carries the mean-value
// obstruction; for c > 0 the operator is invertible.
struct LinearProblem {
  SurfaceMetric metric;
  double c = 0.0;
  GridFunction h;
  double tol = 0.0;         // residual target; 0 picks 1e-10 * sup|h|
  double tol_compat = 1e-8; // obstruction threshold for c = 0
  int max_iter = 4000;

  LinearProblem(SurfaceMetric m, GridFunction rhs, double shift = 0.0);
};

// Mean-zero solution of Delta u = h - mean_omega(h), certified in the sup
// norm. Rejects h whose omega-mean exceeds tol_compat relative to
// area * sup|h|: that rejection is the cokernel obstruction.
GridFunction solve_poisson(const LinearProblem& p);

// Solution of (Delta - c) u = h for c > 0 by preconditioned conjugate
// gradients, certified in the sup norm. No obstruction.
GridFunction solve_shifted(const LinearProblem& p);

struct FredholmReport {
  int kernel_dim = 0;
  int cokernel_dim = 0;
  double lambda1 = 0.0;           // smallest nonzero |eigenvalue| of Delta
  double selfadjoint_defect = 0.0;
  int iterations = 0;
};

// Inverse iteration on the omega-mean-zero subspace: the constants span the
// kernel, self-adjointness makes the cokernel match, and lambda1 is the
// spectral gap certifying there is nothing else.
FredholmReport fredholm_diagnostics(const SurfaceMetric& m);

}  // namespace kcone
