#include "kcone/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kcone/cone_geometry.hpp"
#include "kcone/cone_surface.hpp"
#include "kcone/ke_continuity.hpp"
#include "kcone/linear_solver.hpp"
#include "kcone/local_models.hpp"
#include "kcone/report.hpp"
#include "kcone/ricci_bound.hpp"

namespace kcone {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& cfg,
                         std::initializer_list<const char*> allowed) {
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("unknown config key: " + it.key());
  }
}

double get_num(const json& cfg, const char* key, double dflt) {
  if (!cfg.contains(key)) return dflt;
  if (!cfg[key].is_number())
    throw ConfigError(std::string("config key ") + key + " must be a number");
  return cfg[key].get<double>();
}

int get_int(const json& cfg, const char* key, int dflt) {
  if (!cfg.contains(key)) return dflt;
  if (!cfg[key].is_number_integer())
    throw ConfigError(std::string("config key ") + key + " must be an integer");
  return cfg[key].get<int>();
}

bool get_bool(const json& cfg, const char* key, bool dflt) {
  if (!cfg.contains(key)) return dflt;
  if (!cfg[key].is_boolean())
    throw ConfigError(std::string("config key ") + key + " must be a boolean");
  return cfg[key].get<bool>();
}

std::string get_str(const json& cfg, const char* key, const std::string& dflt) {
  if (!cfg.contains(key)) return dflt;
  if (!cfg[key].is_string())
    throw ConfigError(std::string("config key ") + key + " must be a string");
  return cfg[key].get<std::string>();
}

std::string tag(const char* base, double beta) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s[beta=%.2f]", base, beta);
  return buf;
}

std::string tag(const char* base, double beta, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s[beta=%.2f,a=%+.2f]", base, beta, a);
  return buf;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  size_t n = x.size();
  for (size_t k = 0; k < n; ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------- verify-local

double model_factor(double beta, double a, double r) {
  return a + std::pow(r, 2.0 * beta - 2.0);
}

// Conformal-curvature probe by radial central differences with one
// Richardson step; shares nothing with the closed form it cross-checks.
double fd_model_curvature(double beta, double a, double r) {
  auto u = [&](double x) { return std::log(model_factor(beta, a, x)); };
  auto K_step = [&](double h) {
    double upp = (u(r + h) - 2.0 * u(r) + u(r - h)) / (h * h);
    double up = (u(r + h) - u(r - h)) / (2.0 * h);
    return -(upp + up / r) / (2.0 * model_factor(beta, a, r));
  };
  double h = 1e-3 * r;
  return (4.0 * K_step(0.5 * h) - K_step(h)) / 3.0;
}

LocalData random_local_data(std::mt19937& gen, double beta_fixed) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double beta = beta_fixed > 0.0 ? beta_fixed : 0.55 + 0.4 * U(gen);
  ConeParams cp = ConeParams::for_metric(beta, 0.9 * (1.0 / beta - 1.0));

  cxd z1 = std::polar(0.2 + U(gen), kTwoPi * U(gen) - kPi);
  cxd z2{0.6 * U(gen) - 0.3, 0.6 * U(gen) - 0.3};

  ScalarJet2 F = ScalarJet2::constant(2, 0.5 + 1.5 * U(gen));
  for (int i = 0; i < 2; ++i)
    F.d[i] = cxd{0.4 * U(gen) - 0.2, 0.4 * U(gen) - 0.2};
  F.dd[0] = cxd{0.4 * U(gen) - 0.2, 0.0};
  F.dd[3] = cxd{0.4 * U(gen) - 0.2, 0.0};
  cxd mixed{0.3 * U(gen) - 0.15, 0.3 * U(gen) - 0.15};
  F.dd[1] = mixed;
  F.dd[2] = std::conj(mixed);

  FrameHermitian Om(2);
  Om.at(0, 0) = 1.0 + 0.5 * U(gen);
  Om.at(1, 1) = 1.0 + 0.5 * U(gen);
  cxd off{0.3 * U(gen) - 0.15, 0.3 * U(gen) - 0.15};
  Om.at(0, 1) = off;
  Om.at(1, 0) = std::conj(off);

  double delta = 0.01 + 0.19 * U(gen);
  return LocalData(cp, 2, ModelPoint::complex_pt(z1, {z2}), F, Om, delta);
}

Report cmd_verify_local(const json& cfg, unsigned long seed) {
  reject_unknown_keys(cfg, {"command", "output_dir", "seed", "plots", "beta",
                            "a_values", "points", "sturm_points"});
  std::vector<double> betas = {0.6, 0.75, 0.9};
  if (cfg.contains("beta")) betas = {get_num(cfg, "beta", 0.75)};
  std::vector<double> a_values = {-0.5, 0.5};
  if (cfg.contains("a_values")) {
    if (!cfg["a_values"].is_array())
      throw ConfigError("config key a_values must be an array of numbers");
    a_values = cfg["a_values"].get<std::vector<double>>();
  }
  int points = get_int(cfg, "points", 100);
  int sturm_points = get_int(cfg, "sturm_points", 1000);
  if (points < 1 || sturm_points < 1)
    throw ConfigError("points and sturm_points must be positive");

  json eff{{"betas", betas},
           {"a_values", a_values},
           {"points", points},
           {"sturm_points", sturm_points},
           {"seed", seed}};
  Report rep("verify-local", eff);
  std::mt19937 gen(static_cast<std::mt19937::result_type>(seed));
  std::uniform_real_distribution<double> U(0.0, 1.0);

  for (double beta : betas)
    for (double a : a_values) {
      double worst = 0.0;
      for (int k = 0; k < points; ++k) {
        double r = 0.3 + 1.2 * U(gen);
        double closed = gaussian_curvature_model(beta, a, std::polar(r, kTwoPi * U(gen)));
        double probe = fd_model_curvature(beta, a, r);
        worst = std::max(worst, std::fabs(closed - probe) / std::fabs(probe));
      }
      rep.add_check(tag("curvature_oracle", beta, a), worst < 1e-4, worst, "< 1e-4");
    }

  double beta_fixed = cfg.contains("beta") ? betas[0] : -1.0;
  double sturm_worst = 0.0, branch_worst = 0.0;
  for (int k = 0; k < sturm_points; ++k) {
    LocalData ld = random_local_data(gen, beta_fixed);
    ComponentsResult direct = reference_components(ld);
    ComponentsResult pulled = sturm_pullback(ld);
    ComponentsResult cut1 = sturm_pullback(ld, SturmOptions{kPi / 3.0});
    ComponentsResult cut2 = sturm_pullback(ld, SturmOptions{2.5});
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        sturm_worst = std::max(sturm_worst,
                               std::abs(direct.g.at(i, j) - pulled.g.at(i, j)));
        branch_worst = std::max(branch_worst,
                                std::abs(cut1.g.at(i, j) - pulled.g.at(i, j)));
        branch_worst = std::max(branch_worst,
                                std::abs(cut2.g.at(i, j) - pulled.g.at(i, j)));
      }
  }
  rep.add_check("sturm_identity", sturm_worst < 1e-9, sturm_worst, "< 1e-9");
  rep.add_check("sturm_branch_independence", branch_worst < 1e-12, branch_worst,
                "< 1e-12");

  for (double beta : betas) {
    for (double a : a_values) {
      if (a == 0.0 || !(beta > 0.5)) continue;
      UnboundednessReport sc = curvature_unboundedness_scan(beta, a);
      const char* want = a > 0.0 ? "-inf" : "+inf";
      bool ok = sc.divergence_claimed && sc.samples_consistent && sc.direction == want;
      rep.add_check(tag("curvature_unbounded", beta, a), ok, ok ? 1.0 : 0.0, "= 1");
    }

    double target = 1.0 / beta - 1.0;
    std::vector<double> radii, vals;
    for (int k = 0; k < 12; ++k) {
      double rc = 0.5 * std::pow(2.0, -k);
      radii.push_back(rc);
      vals.push_back(std::pow(rc, target));
    }
    ExponentFit fit = holder_exponent_fit(radii, vals);
    rep.add_check(tag("cone_exponent", beta), std::fabs(fit.value - target) < 0.05,
                  fit.value, "1/beta - 1 +- 0.05");

    ConeParams cp = ConeParams::for_metric(beta, 0.9 * target > 1.0 ? 1.0 : 0.9 * target);
    FrameHermitian gt(2);
    gt.at(0, 0) = 1.3;
    gt.at(1, 1) = 0.9;
    gt.at(0, 1) = cxd{0.4, 0.2};
    gt.at(1, 0) = cxd{0.4, -0.2};
    std::vector<double> cradii, cvals;
    for (int k = 0; k < 12; ++k) {
      double rc = 0.5 * std::pow(2.0, -k);
      double m = std::pow(rc, 1.0 / beta);
      FrameHermitian g = coordinate_change_components(cp, gt, m);
      cradii.push_back(rc);
      cvals.push_back(std::abs(g.at(0, 1) - gt.at(0, 1)));
    }
    ExponentFit cfit = holder_exponent_fit(cradii, cvals);
    rep.add_check(tag("coordinate_change_exponent", beta),
                  std::fabs(cfit.value - target) < 0.05, cfit.value,
                  "1/beta - 1 +- 0.05");
  }
  return rep;
}

// ------------------------------------------------------------- verify-geometry

SurfaceSpec spec_from(const json& cfg, int default_n) {
  int N = get_int(cfg, "N", default_n);
  double beta = get_num(cfg, "beta", 0.5);
  double r0 = get_num(cfg, "r0", 0.15);
  return SurfaceSpec(N, beta, r0);
}

Report cmd_verify_geometry(const json& cfg, const std::string& outdir, bool plots) {
  reject_unknown_keys(cfg, {"command", "output_dir", "seed", "plots", "N", "beta",
                            "r0", "delta"});
  SurfaceSpec spec = spec_from(cfg, 128);
  double delta = get_num(cfg, "delta", 0.02);
  double v = kTwoPi * (1.0 - spec.beta);

  json eff{{"N", spec.N}, {"beta", spec.beta}, {"r0", spec.r0}, {"delta", delta}};
  Report rep("verify-geometry", eff);

  ReferenceData rd = build_reference_metric(spec, delta, v);
  const DivisorSection& sec = rd.section;

  double inner = 0.0, outer = 0.0;
  for (int i = 0; i < spec.N; ++i)
    for (int j = 0; j < spec.N; ++j) {
      double d = spec.dist_p(i, j);
      if (d <= spec.r0) inner = std::max(inner, std::fabs(sec.s.at(i, j) - d));
      if (d >= 2.0 * spec.r0) outer = std::max(outer, std::fabs(sec.s.at(i, j) - 1.0));
    }
  rep.add_check("section_inner_equals_distance", inner == 0.0, inner, "= 0");
  rep.add_check("section_outer_equals_one", outer == 0.0, outer, "= 0");

  double min_inc = 1.0;
  double prev = section_profile(spec, spec.r0);
  for (int k = 1; k <= 1000; ++k) {
    double r = spec.r0 + spec.r0 * k / 1000.0;
    double cur = section_profile(spec, r);
    min_inc = std::min(min_inc, cur - prev);
    prev = cur;
  }
  rep.add_check("section_glue_monotone", min_inc >= 0.0, min_inc, ">= 0");

  double area_err = std::fabs(rd.metric.total_area() - v);
  rep.add_check("reference_area_identity", area_err < 1e-8, area_err, "< 1e-8");

  GridFunction model = model_cone_density(sec, 1.0);
  std::vector<double> lx, ly;
  for (int i = 0; i < spec.N; ++i)
    for (int j = 0; j < spec.N; ++j) {
      double d = spec.dist_p(i, j);
      if (d >= 4.0 * spec.h() && d <= spec.r0) {
        lx.push_back(std::log(d));
        ly.push_back(std::log(model.at(i, j)));
      }
    }
  double slope = ls_slope(lx, ly);
  double slope_err = std::fabs(slope - (2.0 * spec.beta - 2.0));
  rep.add_check("model_density_log_slope", slope_err < 0.05, slope,
                "2 beta - 2 +- 0.05");

  GridFunction ones(spec.N, 1.0);
  double const_lap = laplacian(rd.metric, ones).sup_norm();
  rep.add_check("laplacian_kills_constants", const_lap == 0.0, const_lap, "= 0");

  GridFunction u(spec.N), w(spec.N);
  for (int i = 0; i < spec.N; ++i)
    for (int j = 0; j < spec.N; ++j) {
      double x = static_cast<double>(i) / spec.N, y = static_cast<double>(j) / spec.N;
      u.at(i, j) = std::sin(kTwoPi * x) + 0.3 * std::cos(kTwoPi * y);
      w.at(i, j) = std::cos(2.0 * kTwoPi * x) * std::sin(kTwoPi * y);
    }
  double mean_lap = std::fabs(integrate(rd.metric, laplacian(rd.metric, u)));
  rep.add_check("laplacian_integrates_to_zero", mean_lap < 1e-10, mean_lap, "< 1e-10");

  SurfaceMetric flat = flat_metric(spec, kPi);
  GridFunction eig(spec.N);
  for (int i = 0; i < spec.N; ++i)
    for (int j = 0; j < spec.N; ++j)
      eig.at(i, j) = std::sin(kTwoPi * static_cast<double>(i) / spec.N);
  GridFunction lap_eig = laplacian(flat, eig);
  double eig_defect = 0.0;
  for (int i = 0; i < spec.N; ++i)
    for (int j = 0; j < spec.N; ++j)
      eig_defect = std::max(eig_defect,
                            std::fabs(lap_eig.at(i, j) + 2.0 * kPi * eig.at(i, j)));
  double eig_tol = 40.0 / (static_cast<double>(spec.N) * spec.N);
  rep.add_check("flat_eigenfunction", eig_defect < eig_tol, eig_defect, "< 40/N^2");

  double sa = std::fabs(integrate(rd.metric, product(laplacian(rd.metric, u), w)) -
                        integrate(rd.metric, product(u, laplacian(rd.metric, w))));
  rep.add_check("laplacian_self_adjoint", sa < 1e-10, sa, "< 1e-10");

  // flux contour at r0/2 sits in the pure-cone zone; the glue's curvature
  // mass nets out by telescoping
  SurfaceMetric cone_m(spec, model);
  GridFunction K = gauss_curvature(cone_m);
  double gb = integrate(cone_m, K) + kTwoPi * (1.0 - spec.beta);
  double gb_tol = 5.0 / spec.N;
  rep.add_check("gauss_bonnet_model_cone", std::fabs(gb) < gb_tol, std::fabs(gb),
                "< 5/N");

  GridFunction pert = model;
  for (int i = 0; i < spec.N; ++i)
    for (int j = 0; j < spec.N; ++j)
      pert.at(i, j) *= std::exp(2.0 * 0.02 * std::sin(kTwoPi * static_cast<double>(i) / spec.N));
  SurfaceMetric pert_m(spec, pert);
  GridFunction Kp = gauss_curvature(pert_m);
  double gbp = integrate(pert_m, Kp) + kTwoPi * (1.0 - spec.beta);
  rep.add_check("gauss_bonnet_perturbed", std::fabs(gbp) < gb_tol, std::fabs(gbp),
                "< 5/N");

  write_grid(outdir + "/rho_omega", spec, rd.metric.rho);
  GridFunction back = read_grid(outdir + "/rho_omega");
  double rt = 0.0;
  for (size_t k = 0; k < back.data().size(); ++k)
    rt = std::max(rt, std::fabs(back.data()[k] - rd.metric.rho.data()[k]));
  rep.add_check("grid_roundtrip_exact", rt == 0.0, rt, "= 0");
  rep.add_artifact(outdir + "/rho_omega.csv");

  GridFunction Kom = gauss_curvature(rd.metric);
  write_grid(outdir + "/curvature_omega", spec, Kom);
  rep.add_artifact(outdir + "/curvature_omega.csv");

  if (plots) {
    PlotSeries s{"model density along x through p", {}};
    for (int i = spec.pi() + 1; i < spec.N; ++i)
      s.points.push_back({spec.dist_p(i, spec.pj()), model.at(i, spec.pj())});
    write_svg_lines(outdir + "/density_profile.svg", "cone density profile", {s},
                    true);
    rep.add_artifact(outdir + "/density_profile.svg");
  }
  return rep;
}

// ----------------------------------------------------------------- solve-linear

Report cmd_solve_linear(const json& cfg, unsigned long seed, const std::string& outdir) {
  reject_unknown_keys(cfg, {"command", "output_dir", "seed", "plots", "N", "beta",
                            "r0", "delta", "num_rhs"});
  SurfaceSpec spec = spec_from(cfg, 128);
  double delta = get_num(cfg, "delta", 0.02);
  int num_rhs = get_int(cfg, "num_rhs", 20);
  if (num_rhs < 1) throw ConfigError("num_rhs must be positive");

  json eff{{"N", spec.N},
           {"beta", spec.beta},
           {"r0", spec.r0},
           {"delta", delta},
           {"num_rhs", num_rhs},
           {"seed", seed}};
  Report rep("solve-linear", eff);

  ReferenceData rd = build_reference_metric(spec, delta, kTwoPi * (1.0 - spec.beta));
  const SurfaceMetric& m = rd.metric;
  double area = m.total_area();

  FredholmReport fr = fredholm_diagnostics(m);
  rep.add_check("kernel_dim", fr.kernel_dim == 1, fr.kernel_dim, "= 1");
  rep.add_check("cokernel_dim", fr.cokernel_dim == 1, fr.cokernel_dim, "= 1");
  rep.add_check("spectral_gap", fr.lambda1 > 1e-8, fr.lambda1, "> 1e-8");
  rep.add_check("selfadjoint_defect", fr.selfadjoint_defect < 1e-8,
                fr.selfadjoint_defect, "< 1e-8");

  std::mt19937 gen(static_cast<std::mt19937::result_type>(seed));
  std::normal_distribution<double> G(0.0, 1.0);
  double worst_res = 0.0;
  GridFunction kept_h(spec.N), kept_u(spec.N);
  for (int k = 0; k < num_rhs; ++k) {
    GridFunction h(spec.N);
    for (double& x : h.data()) x = G(gen);
    h.add_scalar(-integrate(m, h) / area);
    LinearProblem lp(m, h);
    GridFunction sol = solve_poisson(lp);
    GridFunction res = laplacian(m, sol) - h;
    res.add_scalar(integrate(m, h) / area);  // compare against the projected rhs
    worst_res = std::max(worst_res, res.sup_norm() / h.sup_norm());
    if (k == 0) {
      kept_h = h;
      kept_u = sol;
      GridFunction again = solve_poisson(lp);
      double dd = 0.0;
      for (size_t q = 0; q < again.data().size(); ++q)
        dd = std::max(dd, std::fabs(again.data()[q] - sol.data()[q]));
      rep.add_check("deterministic_resolve", dd == 0.0, dd, "= 0");
    }
  }
  rep.add_check("poisson_residual", worst_res < 1e-10, worst_res, "< 1e-10");

  bool rejected = false;
  try {
    GridFunction bad = kept_h;
    bad.add_scalar(0.5);
    LinearProblem lp(m, bad);
    solve_poisson(lp);
  } catch (const NumericalError& e) {
    rejected = std::string(e.what()).find("cokernel obstruction") != std::string::npos;
  }
  rep.add_check("obstruction_rejected", rejected, rejected ? 1.0 : 0.0, "= 1");

  LinearProblem sp(m, kept_h, 1.0);
  GridFunction su = solve_shifted(sp);
  double ratio = su.sup_norm() / kept_h.sup_norm();
  rep.add_check("shifted_max_principle", ratio <= 1.0 + 1e-8, ratio, "<= 1");

  write_grid(outdir + "/rhs_sample", spec, kept_h);
  write_grid(outdir + "/solution_sample", spec, kept_u);
  rep.add_artifact(outdir + "/rhs_sample.csv");
  rep.add_artifact(outdir + "/solution_sample.csv");
  return rep;
}

// ---------------------------------------------------------------- flatten-ricci

struct FlattenRun {
  FlattenReport report;
  double sup_assembled = 0.0;
  double sup_raw = 0.0;
};

FlattenRun run_flatten(const SurfaceSpec& spec, double delta, const SmoothingParams& sp,
                       const std::string& outdir, const std::string& suffix) {
  ReferenceData rd = build_reference_metric(spec, delta, kTwoPi * (1.0 - spec.beta));
  GridFunction F = ricci_potential_F(rd);
  SmoothSplit split = smooth_approximation(F, rd.metric, sp);
  MAContext ctx(rd.metric);
  FlattenRun out{flatten_ricci(ctx, split.target_h, sp), 0.0, 0.0};

  GridFunction rho_phi = rd.metric.rho + ipdd(out.report.phi);
  out.sup_assembled =
      quotient(assembled_ricci_density(rd, split), rho_phi).sup_norm();
  out.sup_raw = gauss_curvature(rd.metric, 0.0).sup_norm();

  write_grid(outdir + "/phi_" + suffix, spec, out.report.phi);
  write_grid(outdir + "/target_h_" + suffix, spec, split.target_h);
  write_grid(outdir + "/ricci_potential_" + suffix, spec, F);
  return out;
}

Report cmd_flatten_ricci(const json& cfg, const std::string& outdir, bool plots) {
  reject_unknown_keys(cfg, {"command", "output_dir", "seed", "plots", "N", "beta",
                            "r0", "delta", "eps", "mu", "mollifier_scale"});
  SurfaceSpec spec = spec_from(cfg, 128);
  double delta = get_num(cfg, "delta", 0.02);
  double eps = get_num(cfg, "eps", 10.0);
  double mu = get_num(cfg, "mu", 3.0);
  double scale = get_num(cfg, "mollifier_scale", 0.03);
  SmoothingParams sp = SmoothingParams::for_beta(spec.beta, eps, mu, scale);

  json eff{{"N", spec.N},     {"beta", spec.beta},
           {"r0", spec.r0},   {"delta", delta},
           {"eps", eps},      {"mu", mu},
           {"mollifier_scale", scale}};
  Report rep("flatten-ricci", eff);

  SurfaceSpec fine(2 * spec.N, spec.beta, spec.r0);
  std::string sa = std::to_string(spec.N), sb = std::to_string(fine.N);
  FlattenRun coarse = run_flatten(spec, delta, sp, outdir, sa);
  FlattenRun refined = run_flatten(fine, delta, sp, outdir, sb);

  rep.add_check("newton_iterations_" + sa, coarse.report.iterations <= 8,
                coarse.report.iterations, "<= 8");
  rep.add_check("newton_iterations_" + sb, refined.report.iterations <= 8,
                refined.report.iterations, "<= 8");
  rep.add_check("volume_conserved_" + sa, coarse.report.volume_defect < 1e-8,
                coarse.report.volume_defect, "< 1e-8");
  rep.add_check("volume_conserved_" + sb, refined.report.volume_defect < 1e-8,
                refined.report.volume_defect, "< 1e-8");

  double stability = std::fabs(refined.sup_assembled / coarse.sup_assembled - 1.0);
  rep.add_check("assembled_curvature_stable", stability < 0.10, stability, "< 0.10");
  double growth = refined.sup_raw / coarse.sup_raw - 1.0;
  rep.add_check("raw_curvature_grows", growth > 0.50, growth, "> 0.50");

  rep.set_extra("residual_history",
                json{{sa, coarse.report.residuals}, {sb, refined.report.residuals}});
  rep.set_extra("curvature_sup",
                json{{"assembled", {{sa, coarse.sup_assembled}, {sb, refined.sup_assembled}}},
                     {"raw", {{sa, coarse.sup_raw}, {sb, refined.sup_raw}}}});
  for (const std::string& s : {sa, sb}) {
    rep.add_artifact(outdir + "/phi_" + s + ".csv");
    rep.add_artifact(outdir + "/target_h_" + s + ".csv");
    rep.add_artifact(outdir + "/ricci_potential_" + s + ".csv");
  }

  if (plots) {
    PlotSeries h1{"N = " + sa, {}}, h2{"N = " + sb, {}};
    for (size_t k = 0; k < coarse.report.residuals.size(); ++k)
      h1.points.push_back({static_cast<double>(k), coarse.report.residuals[k]});
    for (size_t k = 0; k < refined.report.residuals.size(); ++k)
      h2.points.push_back({static_cast<double>(k), refined.report.residuals[k]});
    write_svg_lines(outdir + "/flatten_residuals.svg", "Newton residuals",
                    {h1, h2}, true);
    rep.add_artifact(outdir + "/flatten_residuals.svg");
  }
  return rep;
}

// -------------------------------------------------------------------- solve-ke

KEProblem problem_from(const json& cfg, SurfaceSpec spec, double delta) {
  KEProblem prob = KEProblem::defaults(spec.beta, spec.N);
  prob.spec = spec;
  prob.delta = delta;
  prob.newton_tol = get_num(cfg, "newton_tol", prob.newton_tol);
  prob.newton_max_iter = get_int(cfg, "newton_max_iter", prob.newton_max_iter);
  prob.eps_smooth = get_num(cfg, "eps", prob.eps_smooth);
  prob.mollifier_scale = get_num(cfg, "mollifier_scale", prob.mollifier_scale);
  prob.tol_mon = get_num(cfg, "tol_mon", prob.tol_mon);
  if (cfg.contains("schedule")) {
    if (cfg["schedule"].is_number_integer())
      prob.schedule = uniform_schedule(cfg["schedule"].get<int>());
    else if (cfg["schedule"].is_array())
      prob.schedule = cfg["schedule"].get<std::vector<double>>();
    else
      throw ConfigError("config key schedule must be an integer or an array");
  }
  prob.validate();
  return prob;
}

Report cmd_solve_ke(const json& cfg, const std::string& outdir, bool plots,
                    unsigned long seed) {
  reject_unknown_keys(cfg, {"command", "output_dir", "seed", "plots", "N", "beta",
                            "r0", "delta", "schedule", "newton_tol",
                            "newton_max_iter", "eps", "mollifier_scale", "tol_mon",
                            "lambda", "check_refinement", "alt_schedule", "resume"});
  double lambda = get_num(cfg, "lambda", -1.0);
  if (lambda != -1.0) throw ConfigError("only lambda = -1 is implemented");
  SurfaceSpec spec = spec_from(cfg, 256);
  double delta = get_num(cfg, "delta", 0.02);
  bool refine = get_bool(cfg, "check_refinement", false);
  bool resume = get_bool(cfg, "resume", false);

  KEProblem prob = problem_from(cfg, spec, delta);
  prob.seed = seed;

  json eff{{"N", spec.N},
           {"beta", spec.beta},
           {"r0", spec.r0},
           {"delta", delta},
           {"schedule", prob.schedule},
           {"newton_tol", prob.newton_tol},
           {"newton_max_iter", prob.newton_max_iter},
           {"eps", prob.eps_smooth},
           {"mollifier_scale", prob.mollifier_scale},
           {"tol_mon", prob.tol_mon},
           {"lambda", lambda},
           {"seed", seed}};
  Report rep("solve-ke", eff);

  KEResult res = ke_solve(prob, outdir + "/checkpoints", resume);

  int steps = static_cast<int>(res.path.size()) - 1;
  rep.add_check("path_steps", steps <= 20, steps, "<= 20");
  rep.add_check("final_residual", res.path.back().residual < 1e-8,
                res.path.back().residual, "< 1e-8");
  rep.add_check("ke_residual", res.ke_residual < 1e-8, res.ke_residual, "< 1e-8");

  double med = ke_curvature_median_defect(res);
  rep.add_check("curvature_median_defect", med < 0.02, med, "< 0.02");

  double v = kTwoPi * (1.0 - spec.beta);
  double area_rel = std::fabs(res.omega_ke.total_area() - v) / v;
  rep.add_check("gauss_bonnet_area", area_rel < 0.02, area_rel, "< 0.02");

  double c0_worst = -1e300, cl_worst = 1e300, eq_worst = 0.0;
  for (const ContinuityState& st : res.path) {
    c0_worst = std::max(c0_worst, st.monitors.sup_u - st.monitors.c0_bound);
    cl_worst = std::min(cl_worst, st.monitors.chern_lu.residual_at_max);
    eq_worst = std::max(eq_worst,
                        std::max(st.monitors.C_upper, st.monitors.C_lower));
  }
  rep.add_check("c0_monitor", c0_worst <= 0.0, c0_worst, "<= 0");
  rep.add_check("chern_lu_monitor", cl_worst >= -prob.tol_mon, cl_worst,
                ">= -tol_mon");
  rep.add_check("metric_equivalence", eq_worst < 50.0, eq_worst, "< 50");

  if (refine) {
    KEProblem prob2 = prob;
    prob2.spec = SurfaceSpec(2 * spec.N, spec.beta, spec.r0);
    KEResult res2 = ke_solve(prob2, outdir + "/checkpoints_fine", false);
    double med2 = ke_curvature_median_defect(res2);
    double ratio = med2 / med;
    rep.add_check("curvature_median_halving", ratio > 0.10 && ratio < 0.65, ratio,
                  "in (0.10, 0.65)");
    rep.set_extra("curvature_median_fine", json(med2));
  }

  if (cfg.contains("alt_schedule")) {
    if (!cfg["alt_schedule"].is_array() && !cfg["alt_schedule"].is_number_integer())
      throw ConfigError("config key alt_schedule must be an integer or an array");
    KEProblem prob3 = prob;
    if (cfg["alt_schedule"].is_number_integer())
      prob3.schedule = uniform_schedule(cfg["alt_schedule"].get<int>());
    else
      prob3.schedule = cfg["alt_schedule"].get<std::vector<double>>();
    prob3.validate();
    KEResult res3 = ke_solve(prob3, "", false);
    double dd = (res.u_total - res3.u_total).sup_norm();
    rep.add_check("schedule_independence", dd < 1e-6, dd, "< 1e-6");
  }

  write_grid(outdir + "/u_total", spec, res.u_total);
  write_grid(outdir + "/rho_ke", spec, res.omega_ke.rho);
  write_grid(outdir + "/ricci_potential_f", spec, res.f);
  rep.add_artifact(outdir + "/u_total.csv");
  rep.add_artifact(outdir + "/rho_ke.csv");
  rep.add_artifact(outdir + "/ricci_potential_f.csv");
  rep.add_artifact(outdir + "/checkpoints/manifest.json");

  json trace = json::array();
  for (const ContinuityState& st : res.path)
    trace.push_back({{"t", st.t},
                     {"newton_iters", st.newton_iters},
                     {"residual", st.residual},
                     {"sup_u", st.monitors.sup_u},
                     {"chern_lu", st.monitors.chern_lu.residual_at_max},
                     {"C_upper", st.monitors.C_upper},
                     {"C_lower", st.monitors.C_lower},
                     {"holder_proxy", st.monitors.holder_proxy}});
  rep.set_extra("path_trace", trace);
  rep.set_extra("bisections", json(res.bisections));

  if (plots) {
    PlotSeries msu{"sup u_t", {}}, mcl{"chern-lu slack", {}};
    for (const ContinuityState& st : res.path) {
      msu.points.push_back({st.t, st.monitors.sup_u});
      mcl.points.push_back({st.t, st.monitors.chern_lu.residual_at_max});
    }
    write_svg_lines(outdir + "/monitors.svg", "path monitors", {msu, mcl}, false);
    rep.add_artifact(outdir + "/monitors.svg");

    PlotSeries hist{"|log-form defect|", {}};
    const auto& rh = res.path.back().residual_history;
    for (size_t k = 0; k < rh.size(); ++k)
      hist.points.push_back({static_cast<double>(k), rh[k]});
    write_svg_lines(outdir + "/final_step_residuals.svg",
                    "Newton residuals at t = 1", {hist}, true);
    rep.add_artifact(outdir + "/final_step_residuals.svg");

    PlotSeries prof{"|K + 1| along x through p", {}};
    GridFunction K = gauss_curvature(res.omega_ke);
    for (int i = 0; i < spec.N; ++i) {
      double d = spec.dist_p(i, spec.pj());
      if (d > spec.r0)
        prof.points.push_back({d, std::fabs(K.at(i, spec.pj()) + 1.0)});
    }
    std::sort(prof.points.begin(), prof.points.end());
    write_svg_lines(outdir + "/curvature_profile.svg", "Einstein defect profile",
                    {prof}, true);
    rep.add_artifact(outdir + "/curvature_profile.svg");
  }
  return rep;
}

// --------------------------------------------------------------------- compare

Report cmd_compare(const json& cfg, const std::string& outdir) {
  reject_unknown_keys(cfg, {"command", "output_dir", "seed", "plots", "report_a",
                            "report_b"});
  if (!cfg.contains("report_a") || !cfg.contains("report_b"))
    throw ConfigError("compare needs report_a and report_b");
  std::string pa = get_str(cfg, "report_a", "");
  std::string pb = get_str(cfg, "report_b", "");
  Report a = Report::load(pa);
  Report b = Report::load(pb);

  json ja = a.to_json(), jb = b.to_json();
  if (ja.at("command") != jb.at("command"))
    throw ConfigError("compare: reports come from different commands");
  json prm_a = ja.at("params"), prm_b = jb.at("params");
  if (prm_a.contains("beta") && prm_b.contains("beta") &&
      prm_a["beta"] != prm_b["beta"])
    throw ConfigError("compare: mismatched beta");
  json ca = prm_a, cb = prm_b;
  ca.erase("N");
  cb.erase("N");
  if (ca != cb)
    throw ConfigError("compare: reports differ in more than N");

  Report rep("compare", json{{"report_a", pa}, {"report_b", pb}});
  json table = json::array();
  double ratio_dev = 0.0;
  bool any_common = false;
  for (const CheckLine& la : a.checks())
    for (const CheckLine& lb : b.checks())
      if (la.name == lb.name) {
        any_common = true;
        json row{{"name", la.name}, {"a", la.value}, {"b", lb.value}};
        if (la.value != 0.0) {
          double r = lb.value / la.value;
          row["ratio"] = r;
          ratio_dev = std::max(ratio_dev, std::fabs(r - 1.0));
        }
        table.push_back(row);
      }
  if (!any_common) throw ConfigError("compare: reports share no checks");
  rep.set_extra("ratios", table);

  int na = prm_a.contains("N") ? prm_a["N"].get<int>() : 0;
  int nb = prm_b.contains("N") ? prm_b["N"].get<int>() : 0;
  if (na == nb) {
    rep.add_check("ratios_unity", ratio_dev == 0.0, ratio_dev, "= 0");
  } else if (nb == 2 * na) {
    double ma = 0.0, mb = 0.0;
    bool have = false;
    for (const CheckLine& la : a.checks())
      if (la.name == "curvature_median_defect") {
        ma = la.value;
        have = true;
      }
    for (const CheckLine& lb : b.checks())
      if (lb.name == "curvature_median_defect") mb = lb.value;
    if (have && ma != 0.0) {
      double r = mb / ma;
      rep.add_check("curvature_median_ratio", r > 0.10 && r < 0.65, r,
                    "in (0.10, 0.65)");
    }
  }
  return rep;
}

}  // namespace

int run_config_file(const std::string& config_path,
                    const std::string& output_dir_override) {
  std::string outdir = "out";
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file " + config_path);
    json cfg;
    try {
      in >> cfg;
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
    if (!cfg.contains("command")) throw ConfigError("missing command");
    std::string command = get_str(cfg, "command", "");

    outdir = get_str(cfg, "output_dir", "out");
    if (!output_dir_override.empty()) outdir = output_dir_override;
    std::filesystem::create_directories(outdir);
    bool plots = get_bool(cfg, "plots", false);
    unsigned long seed =
        static_cast<unsigned long>(get_num(cfg, "seed", 20260823.0));

    Report rep = [&]() -> Report {
      if (command == "verify-local") return cmd_verify_local(cfg, seed);
      if (command == "verify-geometry") return cmd_verify_geometry(cfg, outdir, plots);
      if (command == "solve-linear") return cmd_solve_linear(cfg, seed, outdir);
      if (command == "flatten-ricci") return cmd_flatten_ricci(cfg, outdir, plots);
      if (command == "solve-ke") return cmd_solve_ke(cfg, outdir, plots, seed);
      if (command == "compare") return cmd_compare(cfg, outdir);
      throw ConfigError("unknown command: " + command);
    }();

    rep.write(outdir + "/report.json");
    rep.print(std::cout);
    std::cout << "report: " << outdir << "/report.json\n";
    return rep.all_passed() ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    std::ofstream trace(outdir + "/trace.txt");
    if (trace) trace << e.what() << '\n';
    return 4;
  }
}

}  // namespace kcone
