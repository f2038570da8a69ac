#pragma once

#include <vector>

#include "kcone/linear_solver.hpp"

namespace kcone {

// Base metric and conserved volume for the Monge-Ampere functional
// H(phi) = log(density(omega_phi)/density(omega)).
struct MAContext {
  SurfaceMetric omega;
  double volume;

  explicit MAContext(SurfaceMetric m);
};

// H(phi) with omega_phi = omega + ipdd(phi). Throws when phi leaves the
// admissible set (density loses positivity).
GridFunction ma_functional(const MAContext& ctx, const GridFunction& phi);

// F = log(s^{2 beta - 2} * density(Omega) / density(omega)): the cancellation
// of the r^{2 beta - 2} profiles keeps it finite across the cone node (node p
// takes the neighbor-average convention).
GridFunction ricci_potential_F(const ReferenceData& rd);

struct SmoothingParams {
  double alpha_prime = 0.0;       // diagnostic Holder exponent, < 1/beta - 1
  double eps = 10.0;              // admissible size of the solved potential
  double mu = 3.0;                // window half-width for the target norm
  double mollifier_scale = 0.03;  // spatial scale of the smoothing kernel

  static SmoothingParams for_beta(double beta, double eps = 10.0, double mu = 3.0,
                                  double scale = 0.03);
  // Modes inside this radius pass through the mollifier unchanged, so fields
  // band-limited to flat_top() are fixed points of the smoothing.
  int flat_top() const;
};

// Split F = smooth_part + target_h: smooth_part is the heat-kernel
// mollification of F at scale mollifier_scale (exact on the low-mode flat
// top), target_h the tail, shifted by the constant that restores the
// exponential volume normalization integral(e^target_h dA_omega) = volume.
// The Gaussian symbol keeps second differences of smooth_part pinned to the
// kernel scale instead of to the grid, which is what makes the assembled
// curvature of the flattened metric stable under refinement.
struct SmoothSplit {
  GridFunction target_h;
  GridFunction smooth_part;
  double shift = 0.0;
  int flat_top = 0;
};

SmoothSplit smooth_approximation(const GridFunction& F, const SurfaceMetric& omega,
                                 const SmoothingParams& sp);

struct FlattenReport {
  GridFunction phi;
  std::vector<double> residuals;  // sup norm of H(phi) - target per iteration
  int iterations = 0;
  int backtracks = 0;
  double volume_defect = 0.0;     // |integral(e^H) - volume| / volume at the end
};

// Newton solve of H(phi) = target_h with mean-zero gauge. The target must
// carry the volume normalization; progress is globalized by residual
// backtracking (factor 1/2, at most 30 halvings per step).
FlattenReport flatten_ricci(const MAContext& ctx, const GridFunction& target_h,
                            const SmoothingParams& sp);

// The smooth representative of the Ricci density shared by omega and
// omega_phi once H(phi) = target_h:
// (1 - beta) * ipdd_log_section_smooth + ipdd(smooth_part). Dividing by the
// density of omega_phi gives a curvature field with no apex smear.
GridFunction assembled_ricci_density(const ReferenceData& rd, const SmoothSplit& split);

// Cone-coordinate Holder seminorm of a grid field on the punctured disk of
// euclidean radius rmax around p: samples become (dist^beta, angle) model
// points, so the exponent alpha is measured against the cone distance.
double cone_holder_seminorm(const SurfaceSpec& spec, const GridFunction& u,
                            double alpha, double rmax, std::size_t pair_cap = 200000);

}  // namespace kcone
