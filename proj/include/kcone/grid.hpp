#pragma once

#include <string>
#include <vector>

#include "kcone/common.hpp"

namespace kcone {

// Behavior class of a scalar field at the cone node.
enum class ConeNodeFlag { Finite, LogSingular, Excluded };

// Doubly periodic N x N grid over the unit square: nodes (i/N, j/N),
// spacing h = 1/N, with one marked cone node p (grid aligned) and the glue
// radius r0 of the section norm. Quadrature is cell-centered with uniform
// weight h^2.
struct SurfaceSpec {
  int N = 64;
  double beta = 0.5;
  double px = 0.5;
  double py = 0.5;
  double r0 = 0.15;

  SurfaceSpec() = default;
  SurfaceSpec(int n, double beta_, double r0_, double px_ = 0.5, double py_ = 0.5);

  double h() const { return 1.0 / N; }
  double cell_area() const { return 1.0 / (static_cast<double>(N) * N); }
  int node_count() const { return N * N; }

  int pi() const;  // x-index of the cone node
  int pj() const;  // y-index of the cone node

  // Shortest periodic displacement from p to node (i,j), components in
  // [-1/2, 1/2).
  double dx_p(int i) const;
  double dy_p(int j) const;
  double dist_p(int i, int j) const;

  bool same_grid(const SurfaceSpec& o) const;
};

// Scalar field on the periodic grid, value(i,j) at node (i/N, j/N), stored
// row-major in i.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(int n, double fill = 0.0);

  int N() const { return n_; }
  double& at(int i, int j) { return v_[static_cast<size_t>(i) * n_ + j]; }
  double at(int i, int j) const { return v_[static_cast<size_t>(i) * n_ + j]; }
  // periodic access for out-of-range indices
  double atp(int i, int j) const;

  std::vector<double>& data() { return v_; }
  const std::vector<double>& data() const { return v_; }

  ConeNodeFlag flag = ConeNodeFlag::Finite;

  GridFunction& operator+=(const GridFunction& o);
  GridFunction& operator-=(const GridFunction& o);
  GridFunction& operator*=(double s);
  GridFunction& add_scalar(double c);

  double sup_norm() const;
  double mean() const;  // plain node average
  double min() const;
  double max() const;
  bool all_finite() const;

 private:
  int n_ = 0;
  std::vector<double> v_;
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(double s, GridFunction a);

GridFunction exp_field(const GridFunction& u);
// log of a positive field; nonpositive entries raise NumericalError
GridFunction log_field(const GridFunction& u);
GridFunction product(const GridFunction& a, const GridFunction& b);
GridFunction quotient(const GridFunction& a, const GridFunction& b);

// Five-point discrete Laplacian (u_E + u_W + u_N + u_S - 4u)/h^2, h = 1/N.
GridFunction laplacian5(const GridFunction& u);

// Density (against dx dy) of i ddbar u: half the five-point Laplacian. This
// fixes the factor convention used throughout: with area density rho,
// Delta u = ipdd(u)/rho and the curvature density is -ipdd(log rho).
GridFunction ipdd(const GridFunction& u);

// CSV (row-major, one row per x-index, %.17g) with a JSON sidecar holding
// {N, beta, p, r0} and the node flag. Round-trips bit-exactly.
void write_grid_csv(const std::string& path, const GridFunction& u);
GridFunction read_grid_csv(const std::string& path);
void write_grid(const std::string& base, const SurfaceSpec& spec, const GridFunction& u);
GridFunction read_grid(const std::string& base, SurfaceSpec* spec_out = nullptr);

}  // namespace kcone
