#pragma once

#include <string>
#include <vector>

#include "kcone/ricci_bound.hpp"

namespace kcone {

// Setup of the negative-curvature continuity run. The cohomology
// normalization omega_area = 2*pi*(1-beta) is mandatory; it is what makes
// the curvature -1 attainable on the testbed.
struct KEProblem {
  SurfaceSpec spec;
  double delta = 0.02;
  double omega_area = 0.0;
  std::vector<double> schedule;  // 0 = t_0 < ... < t_K = 1
  double newton_tol = 1e-11;
  int newton_max_iter = 40;
  double eps_smooth = 10.0;       // allowed sup of the tail f - f0
  double mollifier_scale = 0.03;  // Fourier cutoff = round(1/scale)
  double tol_mon = 1e-3;
  unsigned long seed = 20260823;  // recorded in artifacts; runs are deterministic

  static KEProblem defaults(double beta, int N);
  void validate() const;
};

std::vector<double> uniform_schedule(int increments);

struct ChernLuReport {
  double C2 = 0.0;  // lower bound constant of ipdd(f0) against omega
  double C3 = 0.0;  // sampled upper curvature bound of omega, with margin
  double A = 0.0;   // C2 + 2*C3 + 1
  double trace_max = 0.0;         // max interior value of tr_{omega_t} omega
  double residual_at_max = 0.0;   // trace-inequality slack at the maximizer
};

struct MonitorReport {
  double sup_u = 0.0;
  double c0_bound = 0.0;  // max{-inf f0, 0} + 10/N
  bool c0_ok = false;
  ChernLuReport chern_lu;
  double C_upper = 0.0;   // sup rho_t / rho_omega
  double C_lower = 0.0;   // sup rho_omega / rho_t
  double holder_proxy = 0.0;  // cone-coordinate seminorm of Delta_0 u near p
};

struct ContinuityState {
  double t = 0.0;
  GridFunction u;
  int newton_iters = 0;
  double residual = 0.0;  // sup |1 + Delta_0 u - e^{t f0 + u}|
  std::vector<double> residual_history;
  MonitorReport monitors;
};

// f with Ric(omega) = -omega + ipdd(f) off the apex collar, assembled from
// the solved background potential, the glue term and the density split.
// Requires the cohomology normalization; the identity's off-collar residual
// is the mean-projection constant of the potential solve.
GridFunction ricci_potential_f(const ReferenceData& rd);

struct InitialMetricResult {
  SurfaceMetric omega0;
  GridFunction f0;     // sharp Fourier truncation of f
  GridFunction phi;    // solves log(rho_phi/rho_omega) - phi = f - f0
  int newton_iters = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
  double tail_norm = 0.0;  // sup |f - f0|
};

InitialMetricResult initial_metric(const ReferenceData& rd, const GridFunction& f,
                                   const KEProblem& prob);

// Everything the path and its monitors read but never write.
struct PathContext {
  ReferenceData rd;
  SurfaceMetric omega0;
  GridFunction f0;
  GridFunction phi;
  double c0_cap = 0.0;  // max{-inf f0, 0}
  double C2 = 0.0;
  double C3 = 0.0;
  double A = 0.0;
};

PathContext make_path_context(ReferenceData rd, const InitialMetricResult& im);

MonitorReport compute_monitors(const PathContext& pc, const GridFunction& u);

// One corrector solve of 1 + Delta_0 u = e^{t f0 + u} at t = t_next, warm
// started from prev.u. Throws on Newton failure; the caller owns bisection.
ContinuityState continuity_step(const PathContext& pc, const ContinuityState& prev,
                                double t_next, const KEProblem& prob);

struct KEResult {
  KEProblem prob;
  ReferenceData rd;
  GridFunction f;
  InitialMetricResult init;
  std::vector<ContinuityState> path;  // accepted states, t ascending from 0
  GridFunction u_total;               // phi + u at t = 1
  SurfaceMetric omega_ke;             // omega + ipdd(u_total)
  double ke_residual = 0.0;           // log-form defect of the final equation
  int bisections = 0;
};

// Full pipeline. A nonempty checkpoint_dir makes every accepted state
// resumable; pass resume = true to continue from what the directory holds
// (stored residuals are re-verified bit-exactly first).
KEResult ke_solve(const KEProblem& prob, const std::string& checkpoint_dir = "",
                  bool resume = false);

// median |K(omega_ke) + 1| over nodes with dist_p > 4 r0
double ke_curvature_median_defect(const KEResult& res);

}  // namespace kcone
