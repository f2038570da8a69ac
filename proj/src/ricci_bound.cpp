#include "kcone/ricci_bound.hpp"

#include <cmath>
#include <string>

#include "kcone/cone_geometry.hpp"
#include "kcone/fft_grid.hpp"

namespace kcone {

MAContext::MAContext(SurfaceMetric m) : omega(std::move(m)), volume(omega.total_area()) {}

GridFunction ma_functional(const MAContext& ctx, const GridFunction& phi) {
  if (phi.N() != ctx.omega.spec.N) throw ConfigError("ma_functional: grid mismatch");
  GridFunction rho_phi = ctx.omega.rho + ipdd(phi);
  double mn = rho_phi.min();
  if (!(mn > 0.0))
    throw NumericalError("ma_functional: left admissible neighborhood, "
                         "perturbed density min = " + std::to_string(mn));
  GridFunction H = log_field(rho_phi);
  H -= log_field(ctx.omega.rho);
  return H;
}

GridFunction ricci_potential_F(const ReferenceData& rd) {
  // log(s^{2b-2} rho_Omega / rho_omega) = log(rho_Omega) - regular log
  // density of omega; the singular profiles cancel exactly
  GridFunction F = regular_log_density(rd.metric, rd.section);
  F *= -1.0;
  F.add_scalar(std::log(rd.omega_area));
  F.flag = ConeNodeFlag::Finite;
  return F;
}

SmoothingParams SmoothingParams::for_beta(double beta, double eps, double mu,
                                          double scale) {
  if (!(beta > 0.0 && beta < 1.0))
    throw ConfigError("SmoothingParams: beta must lie in (0,1)");
  SmoothingParams sp;
  sp.alpha_prime = 0.9 * (1.0 / beta - 1.0);
  sp.eps = eps;
  sp.mu = mu;
  sp.mollifier_scale = scale;
  if (!(sp.eps > 0.0 && sp.mu > 0.0 && sp.mollifier_scale > 0.0))
    throw ConfigError("SmoothingParams: eps, mu, mollifier_scale must be positive");
  return sp;
}

int SmoothingParams::flat_top() const {
  int k = static_cast<int>(std::lround(1.0 / (2.0 * kPi * mollifier_scale)));
  return k < 2 ? 2 : k;
}

SmoothSplit smooth_approximation(const GridFunction& F, const SurfaceMetric& omega,
                                 const SmoothingParams& sp) {
  if (F.N() != omega.spec.N) throw ConfigError("smooth_approximation: grid mismatch");
  FourierGrid fft(F.N());
  SmoothSplit out;
  out.flat_top = sp.flat_top();
  out.smooth_part = fft.mollify_modes(F, sp.mollifier_scale, out.flat_top);
  out.target_h = F - out.smooth_part;

  // window check before the shift, then restore the volume exactly
  double vol = omega.total_area();
  double ih = integrate(omega, exp_field(out.target_h));
  if (!(ih > std::exp(-sp.mu) * vol && ih < std::exp(sp.mu) * vol))
    throw NumericalError(
        "smooth_approximation: exp-volume of the tail left the window, "
        "decrease mollifier_scale");
  out.shift = std::log(vol / ih);
  out.target_h.add_scalar(out.shift);
  out.smooth_part.add_scalar(-out.shift);

  if (out.target_h.sup_norm() > sp.mu)
    throw NumericalError("smooth_approximation: tail norm " +
                         std::to_string(out.target_h.sup_norm()) +
                         " exceeds mu = " + std::to_string(sp.mu) +
                         ", decrease mollifier_scale");
  return out;
}

FlattenReport flatten_ricci(const MAContext& ctx, const GridFunction& target_h,
                            const SmoothingParams& sp) {
  const SurfaceMetric& m = ctx.omega;
  const double v = ctx.volume;
  double vol_h = integrate(m, exp_field(target_h));
  if (std::fabs(vol_h - v) > 1e-6 * v)
    throw ConfigError("flatten_ricci: target is not volume-normalized, "
                      "integral(e^h) = " + std::to_string(vol_h) +
                      " vs volume " + std::to_string(v));

  // the tolerance keeps ipdd(H(phi) - h) negligible when the fields are
  // compared after second differences (amplification ~ 2 N^2)
  const double tol = 1e-12;
  const int max_newton = 40;

  FlattenReport rep;
  rep.phi = GridFunction(m.spec.N, 0.0);

  GridFunction r = ma_functional(ctx, rep.phi) - target_h;
  double rnorm = r.sup_norm();
  rep.residuals.push_back(rnorm);

  for (int it = 0; it < max_newton && rnorm >= tol; ++it) {
    SurfaceMetric m_phi(m.spec, m.rho + ipdd(rep.phi));
    // project into the solvable range of Delta_{omega_phi}
    GridFunction rhs = r;
    rhs.add_scalar(-integrate(m_phi, rhs) / m_phi.total_area());
    rhs *= -1.0;
    LinearProblem lp(m_phi, rhs, 0.0);
    // floor keeps the certificate reachable once the residual nears round-off
    lp.tol = std::max(1e-10 * rhs.sup_norm(), 1e-13);
    GridFunction step = solve_poisson(lp);

    double lam = 1.0;
    int halvings = 0;
    for (; halvings <= 30; ++halvings) {
      GridFunction cand = rep.phi + lam * step;
      GridFunction rho_cand = m.rho + ipdd(cand);
      if (rho_cand.min() > 0.0) {
        GridFunction rc = log_field(rho_cand) - log_field(m.rho) - target_h;
        double rtry = rc.sup_norm();
        if (rtry < rnorm || rtry < tol) {
          rep.phi = std::move(cand);
          r = std::move(rc);
          rnorm = rtry;
          break;
        }
      }
      lam *= 0.5;
      ++rep.backtracks;
    }
    if (halvings > 30)
      throw NumericalError("flatten_ricci: Newton stalled at residual " +
                           std::to_string(rnorm) + " after " +
                           std::to_string(rep.iterations) + " iterations");
    rep.iterations = it + 1;
    rep.residuals.push_back(rnorm);
    // mean-zero gauge (does not move H(phi))
    rep.phi.add_scalar(-integrate(m, rep.phi) / v);
  }
  if (rnorm >= tol)
    throw NumericalError("flatten_ricci: Newton did not converge, residual " +
                         std::to_string(rnorm));

  double phi_size = rep.phi.sup_norm() + ipdd(rep.phi).sup_norm() / 1e2;
  if (phi_size > sp.eps)
    throw NumericalError("flatten_ricci: solved potential size " +
                         std::to_string(phi_size) + " exceeds eps = " +
                         std::to_string(sp.eps) + ", increase mollifier_scale");
  rep.volume_defect =
      std::fabs(integrate(m, exp_field(ma_functional(ctx, rep.phi))) - v) / v;
  return rep;
}

GridFunction assembled_ricci_density(const ReferenceData& rd, const SmoothSplit& split) {
  GridFunction out = ipdd_log_section_smooth(rd.section);
  out *= 1.0 - rd.spec.beta;
  out += ipdd(split.smooth_part);
  return out;
}

double cone_holder_seminorm(const SurfaceSpec& spec, const GridFunction& u,
                            double alpha, double rmax, std::size_t pair_cap) {
  if (u.N() != spec.N) throw ConfigError("cone_holder_seminorm: grid mismatch");
  ConeParams cp = ConeParams::for_seminorm(spec.beta, std::min(alpha, 1.0));
  std::vector<ModelPoint> pts;
  std::vector<double> vals;
  const int pi = spec.pi(), pj = spec.pj();
  for (int i = 0; i < spec.N; ++i)
    for (int j = 0; j < spec.N; ++j) {
      if (i == pi && j == pj) continue;
      double d = spec.dist_p(i, j);
      if (d > rmax) continue;
      double theta = std::atan2(spec.dy_p(j), spec.dx_p(i));
      if (theta < 0.0) theta += kTwoPi;
      pts.push_back(ModelPoint::cone_pt(std::pow(d, spec.beta), theta));
      vals.push_back(u.at(i, j));
    }
  if (pts.size() < 2) throw ConfigError("cone_holder_seminorm: rmax captures fewer than 2 nodes");
  SeminormOptions opts;
  opts.pair_cap = pair_cap;
  return holder_seminorm(cp, pts, vals, opts).value;
}

}  // namespace kcone
