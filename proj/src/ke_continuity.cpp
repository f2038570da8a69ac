#include "kcone/ke_continuity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "kcone/fft_grid.hpp"

namespace kcone {

namespace {

constexpr int kSchemaVersion = 1;

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

// Rounding floor of a sup-norm log-density defect: ipdd of the iterate
// amplifies coordinate rounding by ~4 N^2 before the division by the
// comparison density, so no Newton step can be expected to land below this.
double defect_noise_floor(int N, double field_sup, double rho_min) {
  return 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(N) *
         N * (1.0 + field_sup) / rho_min;
}

void check_normalization(double omega_area, double beta) {
  if (std::fabs(omega_area - kTwoPi * (1.0 - beta)) > 1e-8)
    throw ConfigError("cohomology normalization violated: omega_area must be "
                      "2*pi*(1-beta)");
}

// log-form defect log(rho_u/rho_0) - t f0 - u of the path equation
GridFunction path_defect(const SurfaceMetric& omega0, const GridFunction& f0,
                         double t, const GridFunction& u,
                         const GridFunction& rho_u) {
  GridFunction T = log_field(rho_u) - log_field(omega0.rho) - u;
  GridFunction tf = f0;
  tf *= t;
  T -= tf;
  return T;
}

// the equation's own form: sup |1 + Delta_0 u - e^{t f0 + u}|
double cpath_residual(const SurfaceMetric& omega0, const GridFunction& f0,
                      double t, const GridFunction& u,
                      const GridFunction& rho_u) {
  double worst = 0.0;
  const auto& r0 = omega0.rho.data();
  const auto& ru = rho_u.data();
  const auto& uf = u.data();
  const auto& f0f = f0.data();
  for (size_t k = 0; k < ru.size(); ++k) {
    double lhs = ru[k] / r0[k];
    double rhs = std::exp(t * f0f[k] + uf[k]);
    worst = std::max(worst, std::fabs(lhs - rhs));
  }
  return worst;
}

nlohmann::json monitors_to_json(const MonitorReport& m) {
  return {{"sup_u", m.sup_u},
          {"c0_bound", m.c0_bound},
          {"c0_ok", m.c0_ok},
          {"C2", m.chern_lu.C2},
          {"C3", m.chern_lu.C3},
          {"A", m.chern_lu.A},
          {"trace_max", m.chern_lu.trace_max},
          {"residual_at_max", m.chern_lu.residual_at_max},
          {"C_upper", m.C_upper},
          {"C_lower", m.C_lower},
          {"holder_proxy", m.holder_proxy}};
}

MonitorReport monitors_from_json(const nlohmann::json& j) {
  MonitorReport m;
  m.sup_u = j.at("sup_u").get<double>();
  m.c0_bound = j.at("c0_bound").get<double>();
  m.c0_ok = j.at("c0_ok").get<bool>();
  m.chern_lu.C2 = j.at("C2").get<double>();
  m.chern_lu.C3 = j.at("C3").get<double>();
  m.chern_lu.A = j.at("A").get<double>();
  m.chern_lu.trace_max = j.at("trace_max").get<double>();
  m.chern_lu.residual_at_max = j.at("residual_at_max").get<double>();
  m.C_upper = j.at("C_upper").get<double>();
  m.C_lower = j.at("C_lower").get<double>();
  m.holder_proxy = j.at("holder_proxy").get<double>();
  return m;
}

nlohmann::json problem_to_json(const KEProblem& p) {
  return {{"N", p.spec.N},
          {"beta", p.spec.beta},
          {"p", {p.spec.px, p.spec.py}},
          {"r0", p.spec.r0},
          {"delta", p.delta},
          {"omega_area", p.omega_area},
          {"schedule", p.schedule},
          {"newton_tol", p.newton_tol},
          {"newton_max_iter", p.newton_max_iter},
          {"eps_smooth", p.eps_smooth},
          {"mollifier_scale", p.mollifier_scale},
          {"tol_mon", p.tol_mon},
          {"seed", p.seed}};
}

std::string step_base(int idx) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "u_%03d", idx);
  return buf;
}

}  // namespace

KEProblem KEProblem::defaults(double beta, int N) {
  KEProblem p;
  p.spec = SurfaceSpec(N, beta, 0.15);
  p.delta = 0.02;
  p.omega_area = kTwoPi * (1.0 - beta);
  p.schedule = uniform_schedule(11);
  return p;
}

void KEProblem::validate() const {
  check_normalization(omega_area, spec.beta);
  if (schedule.size() < 2 || schedule.front() != 0.0 || schedule.back() != 1.0)
    throw ConfigError("KEProblem: schedule must run from 0 to 1");
  for (size_t k = 1; k < schedule.size(); ++k)
    if (!(schedule[k] > schedule[k - 1]))
      throw ConfigError("KEProblem: schedule must be strictly increasing");
  if (!(newton_tol > 0.0) || newton_max_iter < 1)
    throw ConfigError("KEProblem: invalid Newton parameters");
  if (!(delta > 0.0)) throw ConfigError("KEProblem: delta must be positive");
  if (!(eps_smooth > 0.0 && mollifier_scale > 0.0 && tol_mon > 0.0))
    throw ConfigError("KEProblem: tolerances must be positive");
}

std::vector<double> uniform_schedule(int increments) {
  if (increments < 1) throw ConfigError("uniform_schedule: need >= 1 increment");
  std::vector<double> s(increments + 1);
  for (int k = 0; k <= increments; ++k)
    s[k] = static_cast<double>(k) / increments;
  s.back() = 1.0;
  return s;
}

GridFunction ricci_potential_f(const ReferenceData& rd) {
  check_normalization(rd.omega_area, rd.spec.beta);

  // background potential: ipdd(F_bg) = rho_Omega + (1-beta) * smooth part of
  // ipdd(log s^2), minus the mean the projection removes (the flat background
  // is Ricci-flat, so no curvature term appears)
  GridFunction rhs = ipdd_log_section_smooth(rd.section);
  rhs *= 1.0 - rd.spec.beta;
  rhs += rd.background.rho;
  GridFunction g = rhs;
  g *= 1.0 / rd.omega_area;  // divide by the constant background density
  LinearProblem lp(rd.background, g, 0.0);
  lp.tol_compat = 1.0;  // the projected constant is the reported residual, not an obstruction
  GridFunction f_bg = solve_poisson(lp);

  GridFunction s2b = rd.section.s;
  for (double& v : s2b.data()) v = std::pow(v, 2.0 * rd.spec.beta);

  GridFunction f = f_bg;
  f += rd.delta * s2b;
  GridFunction reg = regular_log_density(rd.metric, rd.section);
  reg.add_scalar(-std::log(rd.omega_area));
  f -= reg;
  f.flag = ConeNodeFlag::Finite;
  return f;
}

InitialMetricResult initial_metric(const ReferenceData& rd, const GridFunction& f,
                                   const KEProblem& prob) {
  const SurfaceSpec& sp = rd.spec;
  FourierGrid fft(sp.N);
  int kcut = static_cast<int>(std::lround(1.0 / prob.mollifier_scale));
  if (kcut < 1) kcut = 1;

  InitialMetricResult res{SurfaceMetric(sp, rd.metric.rho), GridFunction(), GridFunction(),
                          0, 0.0, {}, 0.0};
  res.f0 = fft.truncate_modes(f, kcut);
  GridFunction tail = f - res.f0;
  res.tail_norm = tail.sup_norm();
  if (res.tail_norm > prob.eps_smooth)
    throw NumericalError("initial_metric: smoothing shortfall, tail norm " +
                         std::to_string(res.tail_norm) + " exceeds " +
                         std::to_string(prob.eps_smooth) +
                         "; decrease mollifier_scale");

  // solve log(rho_phi/rho_omega) - phi = tail by Newton in phi
  GridFunction phi(sp.N, 0.0);
  GridFunction rho_phi = rd.metric.rho;
  GridFunction r = log_field(rho_phi) - log_field(rd.metric.rho) - phi - tail;
  double rnorm = r.sup_norm();
  res.residual_history.push_back(rnorm);

  const double rho_min = rd.metric.rho.min();
  for (int it = 0; it < prob.newton_max_iter && rnorm >= prob.newton_tol &&
                   rnorm > defect_noise_floor(sp.N, phi.sup_norm(), rho_min);
       ++it) {
    SurfaceMetric m_phi(sp, rho_phi);
    GridFunction rhs = r;
    rhs *= -1.0;
    LinearProblem lp(m_phi, rhs, 1.0);
    lp.tol = std::max(1e-10 * rhs.sup_norm(), 1e-13);
    GridFunction step = solve_shifted(lp);

    double lam = 1.0;
    bool moved = false;
    for (int halv = 0; halv <= 30; ++halv) {
      GridFunction cand = phi + lam * step;
      GridFunction rho_cand = rd.metric.rho + ipdd(cand);
      if (rho_cand.min() > 0.0) {
        GridFunction rc =
            log_field(rho_cand) - log_field(rd.metric.rho) - cand - tail;
        double rt = rc.sup_norm();
        if (rt < rnorm || rt < prob.newton_tol) {
          phi = std::move(cand);
          rho_phi = std::move(rho_cand);
          r = std::move(rc);
          rnorm = rt;
          moved = true;
          break;
        }
      }
      lam *= 0.5;
    }
    if (!moved) {
      if (rnorm < defect_noise_floor(sp.N, phi.sup_norm(), rho_min)) break;
      throw NumericalError("initial_metric: Newton stalled at residual " +
                           sci(rnorm));
    }
    res.newton_iters = it + 1;
    res.residual_history.push_back(rnorm);
  }
  if (rnorm >= prob.newton_tol &&
      rnorm >= defect_noise_floor(sp.N, phi.sup_norm(), rho_min))
    throw NumericalError("initial_metric: Newton did not reach tolerance, residual " +
                         sci(rnorm));

  res.phi = std::move(phi);
  res.residual = rnorm;
  res.omega0 = SurfaceMetric(sp, rho_phi);
  return res;
}

PathContext make_path_context(ReferenceData rd, const InitialMetricResult& im) {
  PathContext pc{std::move(rd), im.omega0, im.f0, im.phi, 0.0, 0.0, 0.0, 0.0};
  pc.c0_cap = std::max(-im.f0.min(), 0.0);

  GridFunction num = ipdd(im.f0);
  double c2 = 0.0;
  for (size_t k = 0; k < num.data().size(); ++k)
    c2 = std::max(c2, -num.data()[k] / pc.rd.metric.rho.data()[k]);
  pc.C2 = std::max(c2, 0.0);

  GridFunction K = gauss_curvature(pc.rd.metric);  // zero inside the r0/2 collar
  pc.C3 = 1.2 * std::max(K.max(), 0.0);
  pc.A = pc.C2 + 2.0 * pc.C3 + 1.0;
  return pc;
}

MonitorReport compute_monitors(const PathContext& pc, const GridFunction& u) {
  const SurfaceSpec& sp = pc.rd.spec;
  MonitorReport m;
  m.sup_u = u.max();
  m.c0_bound = pc.c0_cap + 10.0 / sp.N;
  m.c0_ok = m.sup_u <= m.c0_bound;

  GridFunction rho_t = pc.omega0.rho + ipdd(u);
  const auto& rw = pc.rd.metric.rho.data();
  const auto& rt = rho_t.data();

  double cu = 0.0, cl = 0.0;
  for (size_t k = 0; k < rt.size(); ++k) {
    cu = std::max(cu, rt[k] / rw[k]);
    cl = std::max(cl, rw[k] / rt[k]);
  }
  m.C_upper = cu;
  m.C_lower = cl;

  // trace field and barrier, maximized over the interior dist > 2h
  m.chern_lu.C2 = pc.C2;
  m.chern_lu.C3 = pc.C3;
  m.chern_lu.A = pc.A;
  GridFunction field(sp.N);
  GridFunction tau(sp.N);
  for (int i = 0; i < sp.N; ++i)
    for (int j = 0; j < sp.N; ++j) {
      double tr = pc.rd.metric.rho.at(i, j) / rho_t.at(i, j);
      tau.at(i, j) = tr;
      field.at(i, j) = tr - pc.A * (pc.phi.at(i, j) + u.at(i, j));
    }
  int bi = -1, bj = -1;
  double best = 0.0;
  const double hmin = 2.0 / sp.N;
  for (int i = 0; i < sp.N; ++i)
    for (int j = 0; j < sp.N; ++j) {
      if (sp.dist_p(i, j) <= hmin) continue;
      if (bi < 0 || field.at(i, j) > best) {
        best = field.at(i, j);
        bi = i;
        bj = j;
      }
    }
  GridFunction lap_field = ipdd(field);
  double lhs = lap_field.at(bi, bj) / rho_t.at(bi, bj);
  double rhs = -1.0 - pc.A * 1.0 + tau.at(bi, bj);
  m.chern_lu.trace_max = tau.at(bi, bj);
  m.chern_lu.residual_at_max = lhs - rhs;

  GridFunction lap0 = quotient(ipdd(u), pc.omega0.rho);
  double alpha = std::min(1.0, 1.0 / sp.beta - 1.0);
  m.holder_proxy = cone_holder_seminorm(sp, lap0, alpha, 3.0 * sp.r0, 100000);
  return m;
}

ContinuityState continuity_step(const PathContext& pc, const ContinuityState& prev,
                                double t_next, const KEProblem& prob) {
  const SurfaceSpec& sp = pc.rd.spec;
  ContinuityState st;
  st.t = t_next;
  st.u = prev.u;
  if (st.u.N() == 0) st.u = GridFunction(sp.N, 0.0);

  GridFunction rho_u = pc.omega0.rho + ipdd(st.u);
  if (!(rho_u.min() > 0.0))
    throw NumericalError("continuity_step: warm start is not admissible");

  GridFunction T = path_defect(pc.omega0, pc.f0, t_next, st.u, rho_u);
  double tnorm = T.sup_norm();
  st.residual = cpath_residual(pc.omega0, pc.f0, t_next, st.u, rho_u);
  st.residual_history.push_back(tnorm);

  const double rho_min = pc.omega0.rho.min();
  for (int it = 0; it < prob.newton_max_iter && st.residual >= prob.newton_tol &&
                   st.residual > defect_noise_floor(sp.N, st.u.sup_norm(), rho_min);
       ++it) {
    SurfaceMetric m_t(sp, rho_u);
    GridFunction rhs = T;
    rhs *= -1.0;
    LinearProblem lp(m_t, rhs, 1.0);
    lp.tol = std::max(1e-10 * rhs.sup_norm(), 1e-13);
    GridFunction step = solve_shifted(lp);

    double lam = 1.0;
    bool moved = false;
    for (int halv = 0; halv <= 30; ++halv) {
      GridFunction cand = st.u + lam * step;
      GridFunction rho_cand = pc.omega0.rho + ipdd(cand);
      if (rho_cand.min() > 0.0) {
        GridFunction Tc = path_defect(pc.omega0, pc.f0, t_next, cand, rho_cand);
        double tn = Tc.sup_norm();
        if (tn < tnorm || tn < 0.5 * prob.newton_tol) {
          st.u = std::move(cand);
          rho_u = std::move(rho_cand);
          T = std::move(Tc);
          tnorm = tn;
          moved = true;
          break;
        }
      }
      lam *= 0.5;
    }
    if (!moved) {
      if (st.residual < defect_noise_floor(sp.N, st.u.sup_norm(), rho_min)) break;
      throw NumericalError("continuity_step: Newton stalled at t = " +
                           std::to_string(t_next) + ", residual " + sci(tnorm));
    }
    st.newton_iters = it + 1;
    st.residual = cpath_residual(pc.omega0, pc.f0, t_next, st.u, rho_u);
    st.residual_history.push_back(tnorm);
  }
  if (st.residual >= prob.newton_tol &&
      st.residual >= defect_noise_floor(sp.N, st.u.sup_norm(), rho_min))
    throw NumericalError("continuity_step: no convergence at t = " +
                         std::to_string(t_next) + ", residual " +
                         sci(st.residual));
  st.monitors = compute_monitors(pc, st.u);
  return st;
}

namespace {

void write_checkpoint(const std::string& dir, const KEProblem& prob,
                      const GridFunction& f, const InitialMetricResult& init,
                      const std::vector<ContinuityState>& path) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_grid(dir + "/f", prob.spec, f);
  write_grid(dir + "/f0", prob.spec, init.f0);
  write_grid(dir + "/phi", prob.spec, init.phi);

  nlohmann::json man;
  man["schema_version"] = kSchemaVersion;
  man["problem"] = problem_to_json(prob);
  man["init"] = {{"newton_iters", init.newton_iters},
                 {"residual", init.residual},
                 {"residual_history", init.residual_history},
                 {"tail_norm", init.tail_norm}};
  man["steps"] = nlohmann::json::array();
  for (size_t k = 0; k < path.size(); ++k) {
    const ContinuityState& st = path[k];
    std::string base = step_base(static_cast<int>(k));
    write_grid(dir + "/" + base, prob.spec, st.u);
    man["steps"].push_back({{"t", st.t},
                            {"file", base},
                            {"newton_iters", st.newton_iters},
                            {"residual", st.residual},
                            {"residual_history", st.residual_history},
                            {"monitors", monitors_to_json(st.monitors)}});
  }
  std::ofstream out(dir + "/manifest.json");
  if (!out) throw Error("cannot write checkpoint manifest in " + dir);
  out << man.dump(2) << '\n';
}

}  // namespace

KEResult ke_solve(const KEProblem& prob, const std::string& checkpoint_dir,
                  bool resume) {
  prob.validate();
  ReferenceData rd = build_reference_metric(prob.spec, prob.delta, prob.omega_area);
  GridFunction f = ricci_potential_f(rd);

  InitialMetricResult init{SurfaceMetric(prob.spec, rd.metric.rho), GridFunction(),
                           GridFunction(), 0, 0.0, {}, 0.0};
  std::vector<ContinuityState> path;

  if (resume) {
    if (checkpoint_dir.empty())
      throw ConfigError("ke_solve: resume requested without a checkpoint directory");
    std::ifstream in(checkpoint_dir + "/manifest.json");
    if (!in) throw Error("ke_solve: no manifest in " + checkpoint_dir);
    nlohmann::json man;
    in >> man;
    if (man.at("schema_version").get<int>() != kSchemaVersion)
      throw ConfigError("ke_solve: checkpoint schema mismatch");
    if (man.at("problem") != problem_to_json(prob))
      throw ConfigError("ke_solve: checkpoint does not match the configuration");

    GridFunction f_stored = read_grid(checkpoint_dir + "/f");
    if (f_stored.data() != f.data())
      throw NumericalError("ke_solve: stored Ricci potential does not re-evaluate "
                           "bit-exactly");
    init.f0 = read_grid(checkpoint_dir + "/f0");
    init.phi = read_grid(checkpoint_dir + "/phi");
    init.newton_iters = man["init"].at("newton_iters").get<int>();
    init.residual = man["init"].at("residual").get<double>();
    init.residual_history =
        man["init"].at("residual_history").get<std::vector<double>>();
    init.tail_norm = man["init"].at("tail_norm").get<double>();
    init.omega0 = SurfaceMetric(prob.spec, rd.metric.rho + ipdd(init.phi));

    for (const auto& js : man.at("steps")) {
      ContinuityState st;
      st.t = js.at("t").get<double>();
      st.u = read_grid(checkpoint_dir + "/" + js.at("file").get<std::string>());
      st.newton_iters = js.at("newton_iters").get<int>();
      st.residual = js.at("residual").get<double>();
      st.residual_history = js.at("residual_history").get<std::vector<double>>();
      st.monitors = monitors_from_json(js.at("monitors"));
      GridFunction rho_u = init.omega0.rho + ipdd(st.u);
      double re = cpath_residual(init.omega0, init.f0, st.t, st.u, rho_u);
      if (re != st.residual)
        throw NumericalError("ke_solve: stored residual at t = " +
                             std::to_string(st.t) +
                             " does not re-evaluate bit-exactly");
      path.push_back(std::move(st));
    }
    if (path.empty()) resume = false;
  }

  if (!resume) {
    init = initial_metric(rd, f, prob);
  }
  PathContext pc = make_path_context(rd, init);

  if (path.empty()) {
    ContinuityState st0;
    st0.t = 0.0;
    st0.u = GridFunction(prob.spec.N, 0.0);
    st0.newton_iters = 0;
    st0.residual = 0.0;
    st0.residual_history = {0.0};
    st0.monitors = compute_monitors(pc, st0.u);
    path.push_back(std::move(st0));
    if (!checkpoint_dir.empty())
      write_checkpoint(checkpoint_dir, prob, f, init, path);
  }

  KEResult res{prob, std::move(rd), std::move(f), init, {}, GridFunction(),
               SurfaceMetric(prob.spec, pc.rd.metric.rho), 0.0, 0};

  // march the schedule, bisecting an increment at most 6 times on failure
  size_t next_idx = 0;
  while (next_idx < prob.schedule.size() && prob.schedule[next_idx] <= path.back().t)
    ++next_idx;
  while (next_idx < prob.schedule.size()) {
    double target = prob.schedule[next_idx];
    int depth = 0;
    for (;;) {
      try {
        ContinuityState st = continuity_step(pc, path.back(), target, prob);
        path.push_back(std::move(st));
        if (!checkpoint_dir.empty())
          write_checkpoint(checkpoint_dir, prob, res.f, init, path);
        if (target == prob.schedule[next_idx]) break;
        target = prob.schedule[next_idx];
      } catch (const NumericalError& e) {
        if (++depth > 6)
          throw NumericalError(std::string("ke_solve: increment kept failing "
                                           "after 6 bisections: ") + e.what());
        ++res.bisections;
        target = 0.5 * (path.back().t + target);
      }
    }
    ++next_idx;
  }

  res.path = std::move(path);
  res.init = std::move(init);
  res.u_total = res.init.phi + res.path.back().u;
  GridFunction rho_ke = res.rd.metric.rho + ipdd(res.u_total);
  res.omega_ke = SurfaceMetric(prob.spec, std::move(rho_ke));

  GridFunction defect = log_field(res.omega_ke.rho) - log_field(res.rd.metric.rho);
  defect -= res.f;
  defect -= res.u_total;
  res.ke_residual = defect.sup_norm();
  return res;
}

double ke_curvature_median_defect(const KEResult& res) {
  const SurfaceSpec& sp = res.prob.spec;
  GridFunction K = gauss_curvature(res.omega_ke, 4.0 * sp.r0);
  std::vector<double> vals;
  for (int i = 0; i < sp.N; ++i)
    for (int j = 0; j < sp.N; ++j)
      if (sp.dist_p(i, j) > 4.0 * sp.r0)
        vals.push_back(std::fabs(K.at(i, j) + 1.0));
  if (vals.empty())
    throw ConfigError("ke_curvature_median_defect: no nodes beyond 4*r0");
  size_t mid = vals.size() / 2;
  std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
  return vals[mid];
}

}  // namespace kcone
