#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "kcone/cone_geometry.hpp"

using namespace kcone;

namespace {

// Independent distance oracle: discrete path straightening. A path on the
// cone is a polyline in (r, theta) parameters; its length is the sum of
// midpoint-quadrature chords sqrt(dr^2 + beta^2 rbar^2 dtheta^2). Starting
// from the linear interpolation, monotone gradient descent with an adaptive
// step relaxes the interior nodes, and each level doubles the node count so
// the coarse solution seeds the fine one. Both angular homotopy classes are
// relaxed and the shorter one wins, so the wrap convention of the closed-form
// distance is exercised rather than assumed.

struct PolarPath {
  std::vector<double> r, th;
};

double path_length(double beta, const PolarPath& p) {
  double total = 0.0;
  for (size_t k = 0; k + 1 < p.r.size(); ++k) {
    double dr = p.r[k + 1] - p.r[k];
    double rb = 0.5 * (p.r[k + 1] + p.r[k]);
    double dt = p.th[k + 1] - p.th[k];
    total += std::sqrt(dr * dr + beta * beta * rb * rb * dt * dt);
  }
  return total;
}

void path_gradient(double beta, const PolarPath& p,
                   std::vector<double>& gr, std::vector<double>& gt) {
  size_t m = p.r.size();
  gr.assign(m, 0.0);
  gt.assign(m, 0.0);
  const double c2 = beta * beta;
  for (size_t k = 0; k + 1 < m; ++k) {
    double dr = p.r[k + 1] - p.r[k];
    double rb = 0.5 * (p.r[k + 1] + p.r[k]);
    double dt = p.th[k + 1] - p.th[k];
    double len = std::sqrt(dr * dr + c2 * rb * rb * dt * dt);
    if (len < 1e-300) continue;
    gr[k] += (-2.0 * dr + c2 * rb * dt * dt) / (2.0 * len);
    gr[k + 1] += (2.0 * dr + c2 * rb * dt * dt) / (2.0 * len);
    gt[k] += -c2 * rb * rb * dt / len;
    gt[k + 1] += c2 * rb * rb * dt / len;
  }
  gr[0] = gt[0] = gr[m - 1] = gt[m - 1] = 0.0;  // endpoints pinned
}

double relax(double beta, PolarPath& p, int iters) {
  double len = path_length(beta, p);
  double step = 0.05;
  std::vector<double> gr, gt;
  PolarPath trial = p;
  for (int it = 0; it < iters && step > 1e-15; ++it) {
    path_gradient(beta, p, gr, gt);
    for (size_t k = 0; k < p.r.size(); ++k) {
      trial.r[k] = std::max(0.0, p.r[k] - step * gr[k]);
      trial.th[k] = p.th[k] - step * gt[k];
    }
    double tl = path_length(beta, trial);
    if (tl <= len) {
      p = trial;
      len = tl;
      step *= 1.4;
    } else {
      step *= 0.5;
    }
  }
  return len;
}

PolarPath refine(const PolarPath& p) {
  PolarPath q;
  for (size_t k = 0; k + 1 < p.r.size(); ++k) {
    q.r.push_back(p.r[k]);
    q.th.push_back(p.th[k]);
    q.r.push_back(0.5 * (p.r[k] + p.r[k + 1]));
    q.th.push_back(0.5 * (p.th[k] + p.th[k + 1]));
  }
  q.r.push_back(p.r.back());
  q.th.push_back(p.th.back());
  return q;
}

double straightened_length(double beta, double r1, double t1,
                           double r2, double t2, double turn) {
  PolarPath p;
  const int m0 = 8;
  for (int k = 0; k <= m0; ++k) {
    double s = static_cast<double>(k) / m0;
    p.r.push_back(r1 + s * (r2 - r1));
    p.th.push_back(t1 + s * turn);
  }
  double len = relax(beta, p, 2000);
  while (p.r.size() < 513) {
    p = refine(p);
    len = relax(beta, p, 1500);
  }
  return len;
}

double oracle_distance(double beta, double r1, double t1, double r2, double t2) {
  // the apex carries no angular information; align it with the other endpoint
  if (r1 == 0.0) t1 = t2;
  if (r2 == 0.0) t2 = t1;
  double d = std::remainder(t2 - t1, kTwoPi);
  double other = (d > 0.0) ? d - kTwoPi : d + kTwoPi;
  return std::min(straightened_length(beta, r1, t1, r2, t2, d),
                  straightened_length(beta, r1, t1, r2, t2, other));
}

double euclid_between(const ModelPoint& a, const ModelPoint& b) {
  double ax = a.r * std::cos(a.theta), ay = a.r * std::sin(a.theta);
  double bx = b.r * std::cos(b.theta), by = b.r * std::sin(b.theta);
  double d2 = (ax - bx) * (ax - bx) + (ay - by) * (ay - by);
  for (size_t j = 0; j < a.zrest.size(); ++j) {
    double m = std::abs(a.zrest[j] - b.zrest[j]);
    d2 += m * m;
  }
  return std::sqrt(d2);
}

}  // namespace

TEST_CASE("parameter validation and the metric alpha threshold") {
  CHECK_THROWS_AS(ConeParams::for_metric(0.0, 0.5), ConfigError);
  CHECK_THROWS_AS(ConeParams::for_metric(1.2, 0.5), ConfigError);
  CHECK_THROWS_AS(ConeParams::for_metric(0.5, 0.0), ConfigError);
  CHECK_THROWS_AS(ConeParams::for_metric(0.5, 1.5), ConfigError);

  // alpha above 1/beta - 1 is a pure measurement, not a metric statement.
  CHECK_THROWS_AS(ConeParams::for_metric(0.75, 0.5), ConfigError);
  ConeParams loose = ConeParams::for_seminorm(0.75, 0.5);
  CHECK(loose.seminorm_only());
  CHECK(loose.alpha_threshold() == doctest::Approx(1.0 / 3.0));

  ConeParams ok = ConeParams::for_metric(0.5, 1.0);
  CHECK_FALSE(ok.seminorm_only());
  CHECK(ok.alpha_threshold() == doctest::Approx(1.0));

  // beta = 1 has threshold 0, so no admissible metric alpha exists.
  CHECK_THROWS_AS(ConeParams::for_metric(1.0, 0.5), ConfigError);
  CHECK_NOTHROW(ConeParams::for_seminorm(1.0, 1.0));
}

TEST_CASE("chart conversion fixed points and round trips") {
  ConeParams cp = ConeParams::for_metric(0.5, 1.0);

  ModelPoint a = to_cone_chart(ModelPoint::complex_pt(cxd(1.0, 0.0)), cp);
  CHECK(a.r == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(a.theta == doctest::Approx(0.0));

  // |z1|^beta with z1 = 4, beta = 1/2.
  ModelPoint b = to_cone_chart(ModelPoint::complex_pt(cxd(4.0, 0.0)), cp);
  CHECK(b.r == doctest::Approx(2.0).epsilon(1e-15));

  // apex: canonical angle 0 in the cone chart, z1 = 0 back in the complex one
  ModelPoint apex = to_cone_chart(ModelPoint::complex_pt(cxd(0.0, 0.0)), cp);
  CHECK(apex.r == 0.0);
  CHECK(apex.theta == 0.0);
  CHECK(std::abs(to_complex_chart(apex, cp).z1) == 0.0);
  CHECK(ModelPoint::cone_pt(0.0, 2.4).theta == 0.0);
  CHECK_THROWS_AS(ModelPoint::cone_pt(-0.1, 0.0), ConfigError);

  std::mt19937 rng(91217u);
  std::uniform_real_distribution<double> mag(1e-3, 2.0), ang(0.0, kTwoPi);
  double worst = 0.0;
  for (double beta : {0.4, 0.75, 1.0}) {
    ConeParams q = ConeParams::for_seminorm(beta, 1.0);
    for (int k = 0; k < 1000; ++k) {
      cxd z = std::polar(mag(rng), ang(rng));
      ModelPoint p = ModelPoint::complex_pt(z, {cxd(0.3, -0.2)});
      ModelPoint back = to_complex_chart(to_cone_chart(p, q), q);
      worst = std::max(worst, std::abs(back.z1 - z));

      ModelPoint c = ModelPoint::cone_pt(mag(rng), ang(rng));
      ModelPoint cback = to_cone_chart(to_complex_chart(c, q), q);
      worst = std::max(worst, std::fabs(cback.r - c.r));
      worst = std::max(worst, std::fabs(std::remainder(cback.theta - c.theta, kTwoPi)));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("model metric components in the adapted frame") {
  ConeParams half = ConeParams::for_metric(0.5, 1.0);
  FrameHermitian g = model_metric(half, 2);
  CHECK(g.at(0, 0) == cxd(0.25, 0.0));
  CHECK(g.at(1, 1) == cxd(1.0, 0.0));
  CHECK(g.at(0, 1) == cxd(0.0, 0.0));
  CHECK(g.hermitian_defect() == 0.0);
  CHECK(g.min_eigenvalue() == doctest::Approx(0.25));
  CHECK(g.positive_definite());
  CHECK(g.first_axis_coupling() == 0.0);

  FrameHermitian id3 = model_metric(ConeParams::for_seminorm(1.0, 1.0), 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(id3.at(i, j) == cxd(i == j ? 1.0 : 0.0, 0.0));

  FrameHermitian bad(2);
  bad.at(0, 0) = 1.0;
  bad.at(1, 1) = 1.0;
  bad.at(0, 1) = cxd(0.3, 0.1);
  bad.at(1, 0) = cxd(0.3, 0.1);  // not the conjugate
  CHECK(bad.hermitian_defect() == doctest::Approx(0.2));
  CHECK(bad.first_axis_coupling() == doctest::Approx(std::sqrt(0.09 + 0.01)));
}

TEST_CASE("cone distance closed form against the path straightening oracle") {
  // Hand values first: equal radii 1 at angular gap pi, beta = 1/2, develop to
  // a right angle, so the chord is sqrt(2); radial pairs subtract; the apex is
  // at radial distance r.
  ConeParams half = ConeParams::for_seminorm(0.5, 1.0);
  double d1 = cone_distance(half, ModelPoint::cone_pt(1.0, 0.0),
                            ModelPoint::cone_pt(1.0, kPi));
  CHECK(d1 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

  ConeParams b035 = ConeParams::for_seminorm(0.35, 1.0);
  CHECK(cone_distance(b035, ModelPoint::cone_pt(1.0, 2.2),
                      ModelPoint::cone_pt(3.0, 2.2)) ==
        doctest::Approx(2.0).epsilon(1e-14));

  ConeParams b075 = ConeParams::for_seminorm(0.75, 1.0);
  CHECK(cone_distance(b075, ModelPoint::cone_pt(1.2, 1.0),
                      ModelPoint::cone_pt(0.0, 0.0)) ==
        doctest::Approx(1.2).epsilon(1e-14));

  // Near-closed angular gap: the short way around wins, chord 2 r sin(opening/2).
  ConeParams b06 = ConeParams::for_seminorm(0.6, 1.0);
  double dwrap = cone_distance(b06, ModelPoint::cone_pt(0.9, 0.1),
                               ModelPoint::cone_pt(0.9, kTwoPi - 0.1));
  CHECK(dwrap == doctest::Approx(1.8 * std::sin(0.06)).epsilon(1e-13));

  struct Pair {
    double beta, r1, t1, r2, t2;
  };
  const Pair pairs[] = {
      {0.5, 1.0, 0.0, 1.0, kPi},
      {0.5, 1.0, 0.0, 0.7, kTwoPi * 87.0 / 240.0},
      {0.75, 1.2, kTwoPi * 51.0 / 240.0, 0.8, kTwoPi * 171.0 / 240.0},
      {0.75, 1.2, 1.0, 0.0, 0.0},
      {0.6, 0.9, 0.1, 0.9, kTwoPi - 0.1},
  };
  for (const Pair& q : pairs) {
    ConeParams cp = ConeParams::for_seminorm(q.beta, 1.0);
    double closed = cone_distance(cp, ModelPoint::cone_pt(q.r1, q.t1),
                                  ModelPoint::cone_pt(q.r2, q.t2));
    double free_form = oracle_distance(q.beta, q.r1, q.t1, q.r2, q.t2);
    CHECK(std::fabs(free_form - closed) < 1e-3 * closed);
  }

  // Transverse coordinates combine in quadrature.
  ModelPoint pa = ModelPoint::cone_pt(1.0, 0.0, {cxd(0.2, -0.1)});
  ModelPoint pb = ModelPoint::cone_pt(1.0, kPi, {cxd(-0.1, 0.3)});
  double flat = std::abs(pa.zrest[0] - pb.zrest[0]);
  CHECK(cone_distance(half, pa, pb) ==
        doctest::Approx(std::sqrt(2.0 + flat * flat)).epsilon(1e-14));

  CHECK_THROWS_AS(cone_distance(half, pa, ModelPoint::cone_pt(1.0, 0.0)),
                  ConfigError);
}

TEST_CASE("cone distance metric axioms and flat reduction") {
  std::mt19937 rng(40215u);
  std::uniform_real_distribution<double> mag(0.0, 1.5), ang(0.0, kTwoPi),
      re(-1.0, 1.0);
  auto rand_pt = [&]() {
    return ModelPoint::cone_pt(mag(rng), ang(rng), {cxd(re(rng), re(rng))});
  };

  for (double beta : {0.35, 0.8}) {
    ConeParams cp = ConeParams::for_seminorm(beta, 1.0);
    for (int k = 0; k < 200; ++k) {
      ModelPoint a = rand_pt(), b = rand_pt(), c = rand_pt();
      double ab = cone_distance(cp, a, b);
      double ba = cone_distance(cp, b, a);
      double ac = cone_distance(cp, a, c);
      double bc = cone_distance(cp, b, c);
      CHECK(std::fabs(ab - ba) < 1e-12);
      CHECK(ac <= ab + bc + 1e-12);
      CHECK(cone_distance(cp, a, a) == 0.0);

      // quasi-isometry: beta * euclid <= d_beta <= euclid
      double de = euclid_between(a, b);
      CHECK(ab <= de * (1.0 + 1e-12));
      CHECK(ab >= beta * de * (1.0 - 1e-12));
    }
  }

  ConeParams flat = ConeParams::for_seminorm(1.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    ModelPoint a = rand_pt(), b = rand_pt();
    CHECK(cone_distance(flat, a, b) ==
          doctest::Approx(euclid_between(a, b)).epsilon(1e-13));
  }
}

TEST_CASE("holder seminorm attains the subadditivity bound") {
  // u(x) = d(x0, x)^alpha: every ratio is at most 1 by alpha-subadditivity
  // of t -> t^alpha together with the triangle inequality, and the pair
  // (x0, y) attains exactly 1.
  ConeParams cp = ConeParams::for_seminorm(0.7, 0.6);
  std::mt19937 rng(77001u);
  std::uniform_real_distribution<double> mag(0.05, 1.4), ang(0.0, kTwoPi);

  std::vector<ModelPoint> pts;
  pts.push_back(ModelPoint::cone_pt(0.9, 5.8));
  for (int k = 0; k < 40; ++k) pts.push_back(ModelPoint::cone_pt(mag(rng), ang(rng)));
  std::vector<double> u;
  for (const ModelPoint& p : pts)
    u.push_back(std::pow(cone_distance(cp, pts[0], p), cp.alpha()));

  SeminormResult res = holder_seminorm(cp, pts, u);
  CHECK(res.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((res.arg_i == 0 || res.arg_j == 0));
  CHECK(res.pairs_used == pts.size() * (pts.size() - 1) / 2);

  // constants have zero seminorm
  std::vector<double> c(pts.size(), 3.25);
  CHECK(holder_seminorm(cp, pts, c).value == 0.0);

  // monotone in the sample set when the scan is uncapped
  std::vector<ModelPoint> sub(pts.begin(), pts.begin() + 20);
  std::vector<double> usub(u.begin(), u.begin() + 20);
  CHECK(holder_seminorm(cp, sub, usub).value <= res.value + 1e-15);
}

TEST_CASE("holder seminorm linear bound, pair cap, duplicates") {
  ConeParams cp = ConeParams::for_metric(0.5, 0.5);
  std::mt19937 rng(50923u);
  std::uniform_real_distribution<double> re(-1.0, 1.0);

  std::vector<ModelPoint> pts;
  std::vector<double> u;
  const double slope = 2.5;
  for (int k = 0; k < 60; ++k) {
    cxd z1(re(rng), re(rng)), z2(re(rng), re(rng));
    pts.push_back(ModelPoint::complex_pt(z1, {z2}));
    u.push_back(slope * z2.real());
  }
  double diam = 0.0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      diam = std::max(diam, cone_distance(cp, pts[i], pts[j]));

  SeminormResult res = holder_seminorm(cp, pts, u);
  CHECK(res.value <= slope * std::pow(diam, 1.0 - cp.alpha()) * (1.0 + 1e-9));
  CHECK(res.value > 0.0);

  SeminormOptions capped;
  capped.pair_cap = 400;
  SeminormResult rc1 = holder_seminorm(cp, pts, u, capped);
  SeminormResult rc2 = holder_seminorm(cp, pts, u, capped);
  CHECK(rc1.pairs_used <= 400);
  CHECK(rc1.value == rc2.value);  // deterministic stride subsampling
  CHECK(rc1.arg_i == rc2.arg_i);
  CHECK(rc1.value <= res.value + 1e-15);

  std::vector<ModelPoint> dup = {pts[0], pts[0]};
  CHECK_THROWS_AS(holder_seminorm(cp, dup, {0.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(holder_seminorm(cp, {pts[0]}, {0.0}), ConfigError);
  CHECK_THROWS_AS(holder_seminorm(cp, pts, {1.0, 2.0}), ConfigError);
}

TEST_CASE("exponent fit on power laws") {
  std::vector<double> radii, lin, quad, frac, zero;
  for (int k = 1; k <= 8; ++k) {
    double r = std::pow(0.5, k);
    radii.push_back(r);
    lin.push_back(r);
    quad.push_back(r * r);
    frac.push_back(std::pow(r, 1.0 / 0.75 - 1.0));  // exponent 1/3
    zero.push_back(0.0);
  }

  ExponentFit f1 = holder_exponent_fit(radii, lin);
  CHECK(f1.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(f1.capped);
  CHECK_FALSE(f1.constant_input);

  ExponentFit f2 = holder_exponent_fit(radii, quad);
  CHECK(f2.uncapped == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(f2.capped);
  CHECK(f2.value == 1.0);

  ExponentFit f3 = holder_exponent_fit(radii, frac);
  CHECK(f3.value == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(std::fabs(f3.value - 1.0 / 3.0) < 0.05);

  ExponentFit f4 = holder_exponent_fit(radii, zero);
  CHECK(f4.constant_input);
  CHECK(f4.value == 1.0);

  std::vector<double> inc = {0.1, 0.2, 0.3, 0.4, 0.5};
  CHECK_THROWS_AS(holder_exponent_fit(inc, inc), ConfigError);
  std::vector<double> few = {0.4, 0.2, 0.1};
  CHECK_THROWS_AS(holder_exponent_fit(few, few), ConfigError);
}

TEST_CASE("form decomposition of the model Kahler form") {
  ConeParams cp = ConeParams::for_seminorm(0.75, 1.0);
  const double beta = cp.beta();

  RawFormSamples raw;
  raw.kind = FormKind::OneOne;
  raw.n = 2;
  for (int k = 0; k < 8; ++k) {
    double rc = std::pow(0.6, k);  // cone radius
    ModelPoint p = ModelPoint::cone_pt(rc, 0.3, {cxd(0.1, 0.2)});
    double m = std::abs(to_complex_chart(p, cp).z1);
    raw.points.push_back(p);
    raw.coeffs.push_back({cxd(beta * beta * std::pow(m, 2.0 * beta - 2.0), 0.0),
                          cxd(0.0, 0.0), cxd(0.0, 0.0), cxd(1.0, 0.0)});
  }

  FormComponents fc = decompose_form(cp, raw);
  CHECK(fc.holder_class_ok);
  for (size_t k = 0; k < fc.comps.size(); ++k) {
    CHECK(std::abs(fc.comps[k][0] - cxd(1.0, 0.0)) < 1e-12);  // eps wedge epsbar
    CHECK(std::abs(fc.comps[k][1]) < 1e-15);
    CHECK(std::abs(fc.comps[k][2]) < 1e-15);
  }
  for (const VanishingCheck& chk : fc.checks) {
    if (chk.component == "eps*dzbar2" || chk.component == "dz2*epsbar") {
      CHECK(chk.required);
      CHECK(chk.vanishes);
    }
    if (chk.component == "eps*epsbar") CHECK_FALSE(chk.required);
  }
}

TEST_CASE("form decomposition vanishing rates and failure verdicts") {
  ConeParams cp = ConeParams::for_seminorm(0.75, 1.0);

  // i dz1 wedge dzbar2 has eps component modulus |z1|^{1-beta}/beta, which
  // decays like (cone radius)^{1/beta - 1}.
  RawFormSamples raw;
  raw.kind = FormKind::OneOne;
  raw.n = 2;
  for (int k = 0; k < 8; ++k) {
    raw.points.push_back(ModelPoint::cone_pt(std::pow(0.6, k), 1.2, {cxd(0, 0)}));
    raw.coeffs.push_back({cxd(0, 0), cxd(1.0, 0.0), cxd(0, 0), cxd(0, 0)});
  }
  FormComponents fc = decompose_form(cp, raw);
  CHECK(fc.holder_class_ok);
  bool saw = false;
  for (const VanishingCheck& chk : fc.checks)
    if (chk.component == "eps*dzbar2") {
      saw = true;
      CHECK(chk.vanishes);
      CHECK(chk.decay_exponent == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    }
  CHECK(saw);

  // A (1,0)-form proportional to the singular basis element itself has a
  // constant eps component: no decay, verdict failed but not thrown.
  RawFormSamples bad;
  bad.kind = FormKind::OneZero;
  bad.n = 2;
  for (int k = 0; k < 8; ++k) {
    ModelPoint p = ModelPoint::cone_pt(std::pow(0.6, k), 0.0, {cxd(0, 0)});
    double m = std::abs(to_complex_chart(p, cp).z1);
    bad.points.push_back(p);
    bad.coeffs.push_back({cxd(std::pow(m, cp.beta() - 1.0), 0.0), cxd(0, 0)});
  }
  FormComponents fb = decompose_form(cp, bad);
  CHECK_FALSE(fb.holder_class_ok);
  CHECK(fb.checks[0].component == "eps");
  CHECK_FALSE(fb.checks[0].vanishes);
  CHECK(std::fabs(fb.checks[0].decay_exponent) < 0.01);

  // beta = 1: the decomposition is the identity relabeling.
  ConeParams flat = ConeParams::for_seminorm(1.0, 1.0);
  FormComponents ff = decompose_form(flat, raw);
  for (size_t k = 0; k < ff.comps.size(); ++k)
    for (size_t i = 0; i < 4; ++i)
      CHECK(ff.comps[k][i] == raw.coeffs[k][i]);

  RawFormSamples apex = raw;
  apex.points[3] = ModelPoint::cone_pt(0.0, 0.0, {cxd(0, 0)});
  CHECK_THROWS_AS(decompose_form(cp, apex), ConfigError);

  RawFormSamples short_coeffs = raw;
  short_coeffs.coeffs[0].pop_back();
  CHECK_THROWS_AS(decompose_form(cp, short_coeffs), ConfigError);
}
