#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "kcone/common.hpp"

namespace kcone {

// Cone angle 2*pi*beta with 0 < beta < 1, together with the Holder exponent
// alpha used for seminorms. alpha <= 1/beta - 1 is required for statements
// about the metric; a looser alpha in (0,1] is allowed for pure seminorm
// measurement and is flagged as such.
class ConeParams {
 public:
  static ConeParams for_metric(double beta, double alpha);
  static ConeParams for_seminorm(double beta, double alpha);

  double beta() const { return beta_; }
  double alpha() const { return alpha_; }
  bool seminorm_only() const { return seminorm_only_; }

  // Largest alpha admissible for metric statements at this beta.
  double alpha_threshold() const { return 1.0 / beta_ - 1.0; }

 private:
  ConeParams(double beta, double alpha, bool seminorm_only);
  double beta_;
  double alpha_;
  bool seminorm_only_;
};

enum class Chart { Complex, Cone };

// A point near the cone axis in C^n. The first coordinate lives either in the
// complex chart (z1) or in the cone chart (r, theta) with r = |z1|^beta and
// theta = arg z1 in [0, 2*pi). The remaining n-1 coordinates are untouched by
// the chart change.
struct ModelPoint {
  Chart chart = Chart::Complex;
  cxd z1{0.0, 0.0};       // meaningful in the complex chart
  double r = 0.0;         // meaningful in the cone chart
  double theta = 0.0;     // meaningful in the cone chart
  std::vector<cxd> zrest; // n-1 further complex coordinates

  int dim() const { return 1 + static_cast<int>(zrest.size()); }

  static ModelPoint complex_pt(cxd z1, std::vector<cxd> zrest = {});
  static ModelPoint cone_pt(double r, double theta, std::vector<cxd> zrest = {});
};

// Chart change for the first coordinate. The apex maps to r = 0 with the
// canonical angle theta = 0; away from the apex the maps are inverse to each
// other to round-off.
ModelPoint to_cone_chart(const ModelPoint& p, const ConeParams& cp);
ModelPoint to_complex_chart(const ModelPoint& p, const ConeParams& cp);

// Hermitian n x n matrix of metric components in the adapted frame
// v1 = |z1|^{1-beta} d/dz1, vj = d/dzj.
class FrameHermitian {
 public:
  explicit FrameHermitian(int n);

  int n() const { return n_; }
  cxd& at(int i, int j) { return a_[static_cast<size_t>(i) * n_ + j]; }
  const cxd& at(int i, int j) const { return a_[static_cast<size_t>(i) * n_ + j]; }

  double hermitian_defect() const;       // max |a_ij - conj(a_ji)|
  double min_eigenvalue() const;         // of the Hermitian part
  bool positive_definite(double tol = 0.0) const;
  // max modulus of the first-row/column off-diagonal entries; these must
  // vanish on {z1 = 0} for an admissible cone metric.
  double first_axis_coupling() const;

 private:
  int n_;
  std::vector<cxd> a_;
};

// Components of the flat reference cone metric in the adapted frame:
// diag(beta^2, 1, ..., 1), independent of the point.
FrameHermitian model_metric(const ConeParams& cp, int n);

// Distance for the model cone metric: the 2-d cone factor through the
// developed law of cosines (or through the apex once the opening angle
// exceeds pi), combined Euclidean-ly with the remaining coordinates.
double cone_distance(const ConeParams& cp, const ModelPoint& a, const ModelPoint& b);

struct SeminormOptions {
  std::size_t pair_cap = 1000000;  // deterministic stride subsampling beyond this
  double duplicate_tol = 0.0;      // coincident points must agree to this
};

struct SeminormResult {
  double value = 0.0;
  std::size_t arg_i = 0;  // indices of the attaining pair
  std::size_t arg_j = 0;
  std::size_t pairs_used = 0;
};

// sup |u(x)-u(y)| / d_beta(x,y)^alpha over sampled pairs.
SeminormResult holder_seminorm(const ConeParams& cp,
                               const std::vector<ModelPoint>& points,
                               const std::vector<double>& values,
                               const SeminormOptions& opts = {});

struct ExponentFit {
  double value = 1.0;          // least-squares slope, capped at 1
  double uncapped = 1.0;       // raw slope
  bool capped = false;
  bool constant_input = false; // all differences vanished
};

// Least-squares decay exponent of log|v(r)-v(0)| against log r on radial
// samples (value entries are the differences v(r)-v(0)).
ExponentFit holder_exponent_fit(const std::vector<double>& radii,
                                const std::vector<double>& values);

enum class FormKind { OneZero, OneOne };

// Form coefficient samples in the coordinate basis along radial trajectories
// toward {z1 = 0}. For (1,0)-forms coeffs[k] has n entries (dz_i basis); for
// (1,1)-forms it has n*n entries row-major (i dz_i dzbar_j basis).
struct RawFormSamples {
  FormKind kind = FormKind::OneZero;
  int n = 1;
  std::vector<ModelPoint> points;
  std::vector<std::vector<cxd>> coeffs;
};

struct VanishingCheck {
  std::string component;     // e.g. "eps", "eps*dzbar2"
  bool required = false;     // must extend by zero to the axis
  double decay_exponent = 0; // fitted modulus decay in the cone radius
  bool vanishes = false;
};

// Samples rewritten in the singular basis built from eps~ = beta |z1|^{beta-1} dz1,
// with per-component axis-limit verdicts. A failed verdict means the sampled
// form is not in the Holder class; it is reported, not thrown.
struct FormComponents {
  FormKind kind = FormKind::OneZero;
  int n = 1;
  std::vector<ModelPoint> points;
  std::vector<std::vector<cxd>> comps;
  std::vector<VanishingCheck> checks;
  bool holder_class_ok = true;
};

FormComponents decompose_form(const ConeParams& cp, const RawFormSamples& raw);

}  // namespace kcone
