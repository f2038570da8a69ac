#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "kcone/cone_geometry.hpp"
#include "kcone/ricci_bound.hpp"

using namespace kcone;

namespace {

ReferenceData reference(int N, double delta = 0.02) {
  return build_reference_metric(SurfaceSpec(N, 0.5, 0.15), delta, kPi);
}

GridFunction low_mode_field(int N, double amp, int kx, int ky) {
  GridFunction u(N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      u.at(i, j) = amp * (std::sin(kTwoPi * kx * i / double(N)) +
                          0.5 * std::cos(kTwoPi * ky * j / double(N)));
  return u;
}

}  // namespace

TEST_CASE("the functional vanishes at zero and preserves the exponential volume") {
  ReferenceData rd = reference(128);
  MAContext ctx(rd.metric);
  CHECK(ctx.volume == doctest::Approx(kPi).epsilon(1e-10));

  CHECK(ma_functional(ctx, GridFunction(128, 0.0)).sup_norm() == 0.0);

  GridFunction phi = low_mode_field(128, 0.01, 1, 2);
  GridFunction H = ma_functional(ctx, phi);
  CHECK(std::fabs(integrate(rd.metric, exp_field(H)) - ctx.volume) < 1e-12 * ctx.volume);

  // derivative at zero is the base laplacian
  GridFunction psi = low_mode_field(128, 1.0, 1, 1);
  double t = 1e-5;
  GridFunction fd = ma_functional(ctx, t * psi) - ma_functional(ctx, (-t) * psi);
  fd *= 1.0 / (2 * t);
  fd -= laplacian(rd.metric, psi);
  CHECK(fd.sup_norm() < 1e-6);

  // a potential that drives the density negative is inadmissible
  GridFunction big = low_mode_field(128, 1.0, 1, 1);
  CHECK_THROWS_AS(ma_functional(ctx, big), NumericalError);
  try {
    ma_functional(ctx, big);
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("left admissible") != std::string::npos);
  }
  CHECK_THROWS_AS(ma_functional(ctx, GridFunction(64, 0.0)), ConfigError);
}

TEST_CASE("the ricci potential cancels the cone profile") {
  ReferenceData rd = reference(128);
  GridFunction F = ricci_potential_F(rd);
  CHECK(F.all_finite());
  CHECK(F.sup_norm() < 10.0);

  // with no glue correction the potential is the pure section logarithm
  ReferenceData rd0 = reference(128, 0.0);
  GridFunction F0 = ricci_potential_F(rd0);
  double worst = 0.0, far_worst = 0.0;
  for (int i = 0; i < 128; ++i)
    for (int j = 0; j < 128; ++j) {
      if (i == rd0.spec.pi() && j == rd0.spec.pj()) continue;
      worst = std::max(worst, std::fabs(F0.at(i, j) + std::log(rd0.section.s.at(i, j))));
      if (rd0.spec.dist_p(i, j) >= 2 * rd0.spec.r0)
        far_worst = std::max(far_worst, std::fabs(F0.at(i, j)));
    }
  CHECK(worst < 1e-12);
  CHECK(far_worst == 0.0);
}

TEST_CASE("the ricci potential stays bounded under refinement") {
  double sup512 = 0.0;
  for (int N : {512, 1024}) {
    GridFunction F = ricci_potential_F(reference(N));
    if (N == 512) {
      sup512 = F.sup_norm();
      CHECK(sup512 == doctest::Approx(5.3838555519).epsilon(1e-8));
    } else {
      CHECK(F.sup_norm() == doctest::Approx(5.6230707157).epsilon(1e-8));
      CHECK(std::fabs(F.sup_norm() / sup512 - 1.0) < 0.05);
    }
  }

  // cone-coordinate exponent fit of the collar variation caps at one
  for (int N : {256, 512}) {
    ReferenceData rd = reference(N, 0.03);
    GridFunction F = ricci_potential_F(rd);
    double Fp = F.at(rd.spec.pi(), rd.spec.pj());
    std::vector<double> radii, vals;
    for (int k = int(0.033 / rd.spec.h()); k >= 3; --k) {
      radii.push_back(std::pow(k * rd.spec.h(), rd.spec.beta));
      vals.push_back(std::fabs(F.at(rd.spec.pi() + k, rd.spec.pj()) - Fp));
    }
    ExponentFit fit = holder_exponent_fit(radii, vals);
    CHECK(fit.capped);
    CHECK(fit.value >= 0.9);
    CHECK(fit.value <= 1.0);
  }
}

TEST_CASE("smooth approximation fixes band limited fields and shrinks with the scale") {
  ReferenceData rd = reference(128);
  SmoothingParams sp = SmoothingParams::for_beta(0.5);
  CHECK(sp.alpha_prime == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(sp.flat_top() == 5);
  CHECK_THROWS_AS(SmoothingParams::for_beta(1.5), ConfigError);
  CHECK_THROWS_AS(SmoothingParams::for_beta(0.5, -1.0), ConfigError);

  // modes on the flat top pass through untouched
  GridFunction G = low_mode_field(128, 0.3, 1, 2);
  SmoothSplit fg = smooth_approximation(G, rd.metric, sp);
  CHECK(fg.target_h.sup_norm() < 1e-10);
  CHECK(std::fabs(fg.shift) < 1e-12);

  GridFunction F = ricci_potential_F(rd);
  double prev = 1e300;
  for (double scale : {0.06, 0.05, 0.04, 0.03, 0.02, 0.01}) {
    SmoothSplit split =
        smooth_approximation(F, rd.metric, SmoothingParams::for_beta(0.5, 10.0, 3.0, scale));
    CHECK(split.target_h.sup_norm() < prev);
    prev = split.target_h.sup_norm();
    // the shift restores the exponential volume exactly
    double vol = integrate(rd.metric, exp_field(split.target_h));
    CHECK(std::fabs(vol - rd.metric.total_area()) < 1e-10 * rd.metric.total_area());
    // the split is a decomposition of F
    GridFunction sum = split.target_h + split.smooth_part;
    sum -= F;
    CHECK(sum.sup_norm() < 1e-12);
  }
  CHECK(prev == doctest::Approx(0.214930).epsilon(1e-4));

  // a tail too large for the requested window names the remedy
  try {
    smooth_approximation(F, rd.metric, SmoothingParams::for_beta(0.5, 10.0, 0.5, 0.03));
    CHECK(false);
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("decrease mollifier_scale") != std::string::npos);
  }
  CHECK_THROWS_AS(smooth_approximation(GridFunction(64, 0.0), rd.metric, sp), ConfigError);
}

TEST_CASE("flatten ricci meets the newton budget with a quadratic tail") {
  ReferenceData rd = reference(128);
  GridFunction F = ricci_potential_F(rd);
  SmoothingParams sp = SmoothingParams::for_beta(0.5);
  SmoothSplit split = smooth_approximation(F, rd.metric, sp);
  MAContext ctx(rd.metric);

  FlattenReport rep = flatten_ricci(ctx, split.target_h, sp);
  CHECK(rep.iterations == 5);
  CHECK(rep.iterations <= 8);
  CHECK(rep.residuals.size() == 6);
  CHECK(rep.residuals.back() < 1e-8);
  CHECK(rep.residuals[2] / rep.residuals[1] < 0.3);
  CHECK(rep.residuals[3] / rep.residuals[2] < 0.05);
  CHECK(rep.residuals[4] / rep.residuals[3] < 0.05);
  CHECK(rep.volume_defect < 1e-8);
  CHECK(std::fabs(integrate(rd.metric, rep.phi)) < 1e-10);

  // the functional's jacobian is the perturbed-metric laplacian
  SurfaceMetric m_phi(rd.spec, rd.metric.rho + ipdd(rep.phi));
  double worst = 0.0;
  for (int s = 0; s < 5; ++s) {
    GridFunction psi = low_mode_field(128, 0.1, s + 1, s + 2);
    double t = 1e-5;
    GridFunction fd = ma_functional(ctx, rep.phi + t * psi) -
                      ma_functional(ctx, rep.phi + (-t) * psi);
    fd *= 1.0 / (2 * t);
    GridFunction lin = laplacian(m_phi, psi);
    GridFunction diff = fd - lin;
    worst = std::max(worst, diff.sup_norm() / lin.sup_norm());
  }
  CHECK(worst < 1e-4);

  // shifting F by a constant leaves the split target and the solved density alone
  GridFunction Fs = F;
  Fs.add_scalar(0.37);
  SmoothSplit split2 = smooth_approximation(Fs, rd.metric, sp);
  CHECK(split2.shift == doctest::Approx(split.shift).epsilon(1e-10));
  GridFunction dtarget = split2.target_h - split.target_h;
  CHECK(dtarget.sup_norm() < 1e-10);
  FlattenReport rep2 = flatten_ricci(ctx, split2.target_h, sp);
  GridFunction drho = ipdd(rep2.phi) - ipdd(rep.phi);
  CHECK(drho.sup_norm() < 1e-10);

  // trivial target solves in zero iterations
  FlattenReport zero = flatten_ricci(ctx, GridFunction(128, 0.0), sp);
  CHECK(zero.iterations == 0);
  CHECK(zero.phi.sup_norm() == 0.0);

  // guard rails: unnormalized targets and an over-tight eps budget
  GridFunction off = split.target_h;
  off.add_scalar(0.1);
  CHECK_THROWS_AS(flatten_ricci(ctx, off, sp), ConfigError);
  try {
    flatten_ricci(ctx, split.target_h, SmoothingParams::for_beta(0.5, 1e-6));
    CHECK(false);
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("increase mollifier_scale") != std::string::npos);
  }
}

TEST_CASE("assembled curvature is refinement stable while the raw metric blows up") {
  double sup_assembled[2], sup_raw[2];
  int idx = 0;
  for (int N : {128, 256}) {
    ReferenceData rd = reference(N);
    GridFunction F = ricci_potential_F(rd);
    SmoothingParams sp = SmoothingParams::for_beta(0.5);
    SmoothSplit split = smooth_approximation(F, rd.metric, sp);
    MAContext ctx(rd.metric);
    FlattenReport rep = flatten_ricci(ctx, split.target_h, sp);
    CHECK(rep.iterations <= 8);
    CHECK(rep.volume_defect < 1e-8);

    GridFunction rho_phi = rd.metric.rho + ipdd(rep.phi);
    sup_assembled[idx] = quotient(assembled_ricci_density(rd, split), rho_phi).sup_norm();
    sup_raw[idx] = gauss_curvature(rd.metric, 0.0).sup_norm();
    ++idx;
  }
  double stability = std::fabs(sup_assembled[1] / sup_assembled[0] - 1.0);
  double growth = sup_raw[1] / sup_raw[0] - 1.0;
  CHECK(stability < 0.10);
  CHECK(growth > 0.50);
  CHECK(stability == doctest::Approx(0.0139765266).epsilon(1e-6));
  CHECK(growth == doctest::Approx(3.1070207164).epsilon(1e-6));
}

TEST_CASE("cone holder seminorm measures radial growth exactly") {
  SurfaceSpec spec(128, 0.5, 0.15);

  // the cone radius itself is 1-Lipschitz for the cone distance, sharply
  GridFunction u(spec.N);
  for (int i = 0; i < spec.N; ++i)
    for (int j = 0; j < spec.N; ++j)
      u.at(i, j) = std::pow(spec.dist_p(i, j), spec.beta);
  double sn = cone_holder_seminorm(spec, u, 1.0, 0.3);
  CHECK(sn > 0.9);
  CHECK(sn <= 1.0 + 1e-9);

  CHECK(cone_holder_seminorm(spec, GridFunction(spec.N, 2.0), 1.0, 0.3) == 0.0);
  CHECK_THROWS_AS(cone_holder_seminorm(spec, GridFunction(64, 0.0), 1.0, 0.3), ConfigError);
  CHECK_THROWS_AS(cone_holder_seminorm(spec, u, 1.0, 1e-5), ConfigError);
}
