#include "kcone/cone_geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>

namespace kcone {

namespace {

// Strict cone geometry needs beta in (0,1); beta = 1 is admitted so the
// degenerate (no cone) reductions can be exercised through the same entry
// points.
void check_beta(double beta) {
  if (!(beta > 0.0 && beta <= 1.0))
    throw ConfigError("cone angle parameter beta must lie in (0,1], got " +
                      std::to_string(beta));
}

double wrap_angle(double t) {
  t = std::fmod(t, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  return t;
}

}  // namespace

ConeParams::ConeParams(double beta, double alpha, bool seminorm_only)
    : beta_(beta), alpha_(alpha), seminorm_only_(seminorm_only) {}

ConeParams ConeParams::for_metric(double beta, double alpha) {
  check_beta(beta);
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ConfigError("Holder exponent alpha must lie in (0,1], got " +
                      std::to_string(alpha));
  double thr = 1.0 / beta - 1.0;
  if (alpha > thr + 1e-15)
    throw ConfigError("alpha = " + std::to_string(alpha) +
                      " exceeds the metric threshold 1/beta - 1 = " +
                      std::to_string(thr) + "; use for_seminorm for a pure measurement");
  return ConeParams(beta, alpha, false);
}

ConeParams ConeParams::for_seminorm(double beta, double alpha) {
  check_beta(beta);
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ConfigError("Holder exponent alpha must lie in (0,1], got " +
                      std::to_string(alpha));
  return ConeParams(beta, alpha, true);
}

ModelPoint ModelPoint::complex_pt(cxd z1, std::vector<cxd> zrest) {
  ModelPoint p;
  p.chart = Chart::Complex;
  p.z1 = z1;
  p.zrest = std::move(zrest);
  return p;
}

ModelPoint ModelPoint::cone_pt(double r, double theta, std::vector<cxd> zrest) {
  if (r < 0.0) throw ConfigError("cone chart radius must be nonnegative");
  ModelPoint p;
  p.chart = Chart::Cone;
  p.r = r;
  p.theta = (r == 0.0) ? 0.0 : wrap_angle(theta);
  p.zrest = std::move(zrest);
  return p;
}

ModelPoint to_cone_chart(const ModelPoint& p, const ConeParams& cp) {
  if (p.chart == Chart::Cone) return p;
  ModelPoint q;
  q.chart = Chart::Cone;
  double m = std::abs(p.z1);
  if (m == 0.0) {
    q.r = 0.0;
    q.theta = 0.0;  // canonical angle at the apex
  } else {
    q.r = std::pow(m, cp.beta());
    q.theta = wrap_angle(std::arg(p.z1));
  }
  q.zrest = p.zrest;
  return q;
}

ModelPoint to_complex_chart(const ModelPoint& p, const ConeParams& cp) {
  if (p.chart == Chart::Complex) return p;
  ModelPoint q;
  q.chart = Chart::Complex;
  double m = (p.r == 0.0) ? 0.0 : std::pow(p.r, 1.0 / cp.beta());
  q.z1 = std::polar(m, p.theta);
  q.zrest = p.zrest;
  return q;
}

FrameHermitian::FrameHermitian(int n) : n_(n) {
  if (n < 1) throw ConfigError("frame dimension must be at least 1");
  a_.assign(static_cast<size_t>(n) * n, cxd(0.0, 0.0));
}

double FrameHermitian::hermitian_defect() const {
  double d = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      d = std::max(d, std::abs(at(i, j) - std::conj(at(j, i))));
  return d;
}

double FrameHermitian::min_eigenvalue() const {
  Eigen::MatrixXcd m(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) m(i, j) = at(i, j);
  Eigen::MatrixXcd h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool FrameHermitian::positive_definite(double tol) const {
  return min_eigenvalue() > tol;
}

double FrameHermitian::first_axis_coupling() const {
  double d = 0.0;
  for (int j = 1; j < n_; ++j) {
    d = std::max(d, std::abs(at(0, j)));
    d = std::max(d, std::abs(at(j, 0)));
  }
  return d;
}

FrameHermitian model_metric(const ConeParams& cp, int n) {
  FrameHermitian g(n);
  g.at(0, 0) = cp.beta() * cp.beta();
  for (int j = 1; j < n; ++j) g.at(j, j) = 1.0;
  return g;
}

double cone_distance(const ConeParams& cp, const ModelPoint& a, const ModelPoint& b) {
  if (a.dim() != b.dim())
    throw ConfigError("cone_distance: points have different dimensions");
  ModelPoint pa = to_cone_chart(a, cp);
  ModelPoint pb = to_cone_chart(b, cp);

  double dth = std::fabs(pa.theta - pb.theta);
  if (dth > kPi) dth = kTwoPi - dth;  // circle distance in the angle coordinate
  double opening = cp.beta() * dth;   // developed angle between the radial rays

  double d2;
  if (opening <= kPi) {
    d2 = pa.r * pa.r + pb.r * pb.r - 2.0 * pa.r * pb.r * std::cos(opening);
    if (d2 < 0.0) d2 = 0.0;  // guard round-off at opening ~ 0
  } else {
    double s = pa.r + pb.r;  // geodesic passes through the apex
    d2 = s * s;
  }
  for (size_t j = 0; j < pa.zrest.size(); ++j) {
    double m = std::abs(pa.zrest[j] - pb.zrest[j]);
    d2 += m * m;
  }
  return std::sqrt(d2);
}

SeminormResult holder_seminorm(const ConeParams& cp,
                               const std::vector<ModelPoint>& points,
                               const std::vector<double>& values,
                               const SeminormOptions& opts) {
  if (points.size() != values.size())
    throw ConfigError("holder_seminorm: points/values size mismatch");
  const size_t m = points.size();
  if (m < 2) throw ConfigError("holder_seminorm: need at least 2 samples");

  const size_t total = m * (m - 1) / 2;
  const size_t stride = (opts.pair_cap > 0 && total > opts.pair_cap)
                            ? (total + opts.pair_cap - 1) / opts.pair_cap
                            : 1;

  SeminormResult res;
  size_t k = 0;
  const double alpha = cp.alpha();
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = i + 1; j < m; ++j, ++k) {
      if (k % stride != 0) continue;
      double d = cone_distance(cp, points[i], points[j]);
      double dv = std::fabs(values[i] - values[j]);
      if (d <= opts.duplicate_tol) {
        if (dv > 1e-12)
          throw ConfigError(
              "holder_seminorm: duplicate sample points with differing values "
              "(indices " + std::to_string(i) + ", " + std::to_string(j) + ")");
        continue;
      }
      double q = dv / std::pow(d, alpha);
      ++res.pairs_used;
      if (q > res.value) {
        res.value = q;
        res.arg_i = i;
        res.arg_j = j;
      }
    }
  }
  if (res.pairs_used == 0)
    throw ConfigError("holder_seminorm: no usable pairs after deduplication");
  return res;
}

ExponentFit holder_exponent_fit(const std::vector<double>& radii,
                                const std::vector<double>& values) {
  if (radii.size() != values.size())
    throw ConfigError("holder_exponent_fit: radii/values size mismatch");
  if (radii.size() < 5)
    throw ConfigError("holder_exponent_fit: need at least 5 radial samples");
  for (double r : radii)
    if (!(r > 0.0)) throw ConfigError("holder_exponent_fit: radii must be positive");
  for (size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] < radii[i - 1]))
      throw ConfigError("holder_exponent_fit: radii must decrease toward 0");

  std::vector<double> lx, ly;
  for (size_t i = 0; i < radii.size(); ++i) {
    if (values[i] == 0.0) continue;  // exact zeros carry no exponent information
    lx.push_back(std::log(radii[i]));
    ly.push_back(std::log(std::fabs(values[i])));
  }
  ExponentFit fit;
  if (lx.size() < 2) {
    fit.value = 1.0;
    fit.uncapped = 1.0;
    fit.capped = true;
    fit.constant_input = true;
    return fit;
  }
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= lx.size();
  my /= lx.size();
  double sxy = 0.0, sxx = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  fit.uncapped = sxy / sxx;
  fit.capped = fit.uncapped > 1.0;
  fit.value = std::min(fit.uncapped, 1.0);
  return fit;
}

namespace {

std::string basis_name(FormKind kind, int n, int idx) {
  auto leg = [&](int i, bool bar) {
    std::string s = (i == 0) ? std::string("eps") : "dz" + std::to_string(i + 1);
    if (bar && i == 0) s = "epsbar";
    if (bar && i != 0) s = "dzbar" + std::to_string(i + 1);
    return s;
  };
  if (kind == FormKind::OneZero) return leg(idx, false);
  int i = idx / n, j = idx % n;
  return leg(i, false) + "*" + leg(j, true);
}

}  // namespace

FormComponents decompose_form(const ConeParams& cp, const RawFormSamples& raw) {
  const int n = raw.n;
  if (n < 1) throw ConfigError("decompose_form: dimension must be >= 1");
  const size_t ncomp = (raw.kind == FormKind::OneZero)
                           ? static_cast<size_t>(n)
                           : static_cast<size_t>(n) * n;
  if (raw.points.size() != raw.coeffs.size() || raw.points.empty())
    throw ConfigError("decompose_form: empty or mismatched samples");
  for (const auto& c : raw.coeffs)
    if (c.size() != ncomp) throw ConfigError("decompose_form: bad coefficient count");

  const double beta = cp.beta();
  FormComponents out;
  out.kind = raw.kind;
  out.n = n;
  out.points = raw.points;
  out.comps.resize(raw.points.size());

  for (size_t k = 0; k < raw.points.size(); ++k) {
    ModelPoint zp = to_complex_chart(raw.points[k], cp);
    double m = std::abs(zp.z1);
    if (m == 0.0 && beta != 1.0)
      throw ConfigError("decompose_form: samples must avoid {z1 = 0}");
    // dz1 = (|z1|^{1-beta} / beta) * eps~, so coordinate coefficients pick up
    // one factor of |z1|^{1-beta}/beta per eps~ leg.
    double f = (beta == 1.0) ? 1.0 : std::pow(m, 1.0 - beta) / beta;
    std::vector<cxd> c(ncomp);
    if (raw.kind == FormKind::OneZero) {
      for (int i = 0; i < n; ++i)
        c[i] = raw.coeffs[k][i] * ((i == 0) ? f : 1.0);
    } else {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double fac = ((i == 0) ? f : 1.0) * ((j == 0) ? f : 1.0);
          c[static_cast<size_t>(i) * n + j] =
              raw.coeffs[k][static_cast<size_t>(i) * n + j] * fac;
        }
    }
    out.comps[k] = std::move(c);
  }

  // Axis-limit verdicts for the components that must extend by zero:
  // everything carrying at least one eps~ leg.
  std::vector<double> rc(raw.points.size());
  for (size_t k = 0; k < raw.points.size(); ++k)
    rc[k] = to_cone_chart(raw.points[k], cp).r;

  for (size_t idx = 0; idx < ncomp; ++idx) {
    bool required;
    if (raw.kind == FormKind::OneZero) {
      required = (idx == 0);
    } else {
      int i = static_cast<int>(idx) / n, j = static_cast<int>(idx) % n;
      required = (i == 0 || j == 0);
    }
    if (raw.kind == FormKind::OneOne && idx == 0) required = false;  // eps*epsbar stays
    VanishingCheck chk;
    chk.component = basis_name(raw.kind, n, static_cast<int>(idx));
    chk.required = required;
    if (!required) {
      out.checks.push_back(chk);
      continue;
    }
    // Fit the modulus decay along the radial samples, sorted outward-in.
    std::vector<size_t> order(raw.points.size());
    for (size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return rc[a] > rc[b]; });
    std::vector<double> rr, vv;
    double vmax = 0.0;
    for (size_t k : order) {
      if (k > 0 && rc[k] <= 0.0) continue;
      rr.push_back(rc[k]);
      vv.push_back(std::abs(out.comps[k][idx]));
      vmax = std::max(vmax, vv.back());
    }
    if (vmax < 1e-13) {
      chk.decay_exponent = 1.0;  // identically ~0: vanishes trivially
      chk.vanishes = true;
    } else if (rr.size() >= 5) {
      // strictly decreasing radii for the fit
      std::vector<double> fr, fv;
      for (size_t k = 0; k < rr.size(); ++k) {
        if (!fr.empty() && !(rr[k] < fr.back())) continue;
        fr.push_back(rr[k]);
        fv.push_back(vv[k]);
      }
      if (fr.size() >= 5) {
        ExponentFit f = holder_exponent_fit(fr, fv);
        chk.decay_exponent = f.uncapped;
        chk.vanishes = f.constant_input || f.uncapped > 0.01;
      } else {
        chk.decay_exponent = 0.0;
        chk.vanishes = false;
      }
    } else {
      // Too few radii for a fit: fall back to comparing innermost/outermost.
      chk.decay_exponent = 0.0;
      chk.vanishes = vv.back() < 0.1 * (vv.front() + 1e-300);
    }
    if (!chk.vanishes) out.holder_class_ok = false;
    out.checks.push_back(chk);
  }
  return out;
}

}  // namespace kcone
