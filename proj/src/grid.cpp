#include "kcone/grid.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace kcone {

namespace {

double wrap_half(double d) {
  // reduce a periodic displacement into [-1/2, 1/2)
  d -= std::floor(d + 0.5);
  return d;
}

int grid_index_of(double coord, int N, const char* what) {
  double scaled = coord * N;
  double rounded = std::round(scaled);
  if (std::fabs(scaled - rounded) > 1e-12 * N)
    throw ConfigError(std::string("SurfaceSpec: ") + what + " is not grid aligned");
  int k = static_cast<int>(rounded) % N;
  return k < 0 ? k + N : k;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* flag_name(ConeNodeFlag f) {
  switch (f) {
    case ConeNodeFlag::Finite: return "finite";
    case ConeNodeFlag::LogSingular: return "log-singular";
    case ConeNodeFlag::Excluded: return "excluded";
  }
  return "finite";
}

ConeNodeFlag flag_from_name(const std::string& s) {
  if (s == "finite") return ConeNodeFlag::Finite;
  if (s == "log-singular") return ConeNodeFlag::LogSingular;
  if (s == "excluded") return ConeNodeFlag::Excluded;
  throw ConfigError("unknown cone-node flag: " + s);
}

}  // namespace

SurfaceSpec::SurfaceSpec(int n, double beta_, double r0_, double px_, double py_)
    : N(n), beta(beta_), px(px_), py(py_), r0(r0_) {
  if (N < 32) throw ConfigError("SurfaceSpec: N must be >= 32");
  if (!(beta > 0.0 && beta < 1.0))
    throw ConfigError("SurfaceSpec: beta must lie in (0,1)");
  if (!(r0 > 0.0 && r0 < 0.25))
    throw ConfigError("SurfaceSpec: r0 must lie in (0, 1/4)");
  if (!(px > 0.0 && px < 1.0 && py > 0.0 && py < 1.0))
    throw ConfigError("SurfaceSpec: cone point must lie strictly inside the unit square");
  (void)pi();
  (void)pj();
}

int SurfaceSpec::pi() const { return grid_index_of(px, N, "px"); }
int SurfaceSpec::pj() const { return grid_index_of(py, N, "py"); }

double SurfaceSpec::dx_p(int i) const { return wrap_half(static_cast<double>(i) / N - px); }
double SurfaceSpec::dy_p(int j) const { return wrap_half(static_cast<double>(j) / N - py); }

double SurfaceSpec::dist_p(int i, int j) const {
  double dx = dx_p(i), dy = dy_p(j);
  return std::sqrt(dx * dx + dy * dy);
}

bool SurfaceSpec::same_grid(const SurfaceSpec& o) const {
  return N == o.N && beta == o.beta && px == o.px && py == o.py && r0 == o.r0;
}

GridFunction::GridFunction(int n, double fill)
    : n_(n), v_(static_cast<size_t>(n) * n, fill) {
  if (n < 1) throw ConfigError("GridFunction: N must be positive");
}

double GridFunction::atp(int i, int j) const {
  i %= n_;
  if (i < 0) i += n_;
  j %= n_;
  if (j < 0) j += n_;
  return at(i, j);
}

GridFunction& GridFunction::operator+=(const GridFunction& o) {
  if (n_ != o.n_) throw ConfigError("GridFunction: size mismatch");
  for (size_t k = 0; k < v_.size(); ++k) v_[k] += o.v_[k];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& o) {
  if (n_ != o.n_) throw ConfigError("GridFunction: size mismatch");
  for (size_t k = 0; k < v_.size(); ++k) v_[k] -= o.v_[k];
  return *this;
}

GridFunction& GridFunction::operator*=(double s) {
  for (double& x : v_) x *= s;
  return *this;
}

GridFunction& GridFunction::add_scalar(double c) {
  for (double& x : v_) x += c;
  return *this;
}

double GridFunction::sup_norm() const {
  double m = 0.0;
  for (double x : v_) m = std::max(m, std::fabs(x));
  return m;
}

double GridFunction::mean() const {
  double s = 0.0;
  for (double x : v_) s += x;
  return s / static_cast<double>(v_.size());
}

double GridFunction::min() const {
  double m = v_.empty() ? 0.0 : v_[0];
  for (double x : v_) m = std::min(m, x);
  return m;
}

double GridFunction::max() const {
  double m = v_.empty() ? 0.0 : v_[0];
  for (double x : v_) m = std::max(m, x);
  return m;
}

bool GridFunction::all_finite() const {
  for (double x : v_)
    if (!std::isfinite(x)) return false;
  return true;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(double s, GridFunction a) { return a *= s; }

GridFunction exp_field(const GridFunction& u) {
  GridFunction r = u;
  for (double& x : r.data()) x = std::exp(x);
  return r;
}

GridFunction log_field(const GridFunction& u) {
  GridFunction r = u;
  for (double& x : r.data()) {
    if (!(x > 0.0)) throw NumericalError("log_field: nonpositive entry");
    x = std::log(x);
  }
  return r;
}

GridFunction product(const GridFunction& a, const GridFunction& b) {
  if (a.N() != b.N()) throw ConfigError("product: size mismatch");
  GridFunction r = a;
  for (size_t k = 0; k < r.data().size(); ++k) r.data()[k] *= b.data()[k];
  return r;
}

GridFunction quotient(const GridFunction& a, const GridFunction& b) {
  if (a.N() != b.N()) throw ConfigError("quotient: size mismatch");
  GridFunction r = a;
  for (size_t k = 0; k < r.data().size(); ++k) {
    if (b.data()[k] == 0.0) throw NumericalError("quotient: division by zero");
    r.data()[k] /= b.data()[k];
  }
  return r;
}

GridFunction laplacian5(const GridFunction& u) {
  const int N = u.N();
  const double inv_h2 = static_cast<double>(N) * N;
  GridFunction r(N);
  for (int i = 0; i < N; ++i) {
    const int im = (i == 0) ? N - 1 : i - 1;
    const int ip = (i == N - 1) ? 0 : i + 1;
    for (int j = 0; j < N; ++j) {
      const int jm = (j == 0) ? N - 1 : j - 1;
      const int jp = (j == N - 1) ? 0 : j + 1;
      r.at(i, j) = (u.at(im, j) + u.at(ip, j) + u.at(i, jm) + u.at(i, jp) -
                    4.0 * u.at(i, j)) * inv_h2;
    }
  }
  r.flag = u.flag;
  return r;
}

GridFunction ipdd(const GridFunction& u) {
  GridFunction r = laplacian5(u);
  r *= 0.5;
  return r;
}

void write_grid_csv(const std::string& path, const GridFunction& u) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  const int N = u.N();
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      if (j) out << ',';
      out << fmt17(u.at(i, j));
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path);
}

GridFunction read_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open for reading: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    const char* s = line.c_str();
    char* end = nullptr;
    while (*s) {
      double v = std::strtod(s, &end);
      if (end == s) throw Error("malformed CSV value in " + path);
      row.push_back(v);
      s = end;
      if (*s == ',') ++s;
    }
    rows.push_back(std::move(row));
  }
  const size_t N = rows.size();
  if (N == 0) throw Error("empty CSV: " + path);
  GridFunction u(static_cast<int>(N));
  for (size_t i = 0; i < N; ++i) {
    if (rows[i].size() != N)
      throw Error("CSV is not square in " + path);
    for (size_t j = 0; j < N; ++j) u.at(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  }
  return u;
}

void write_grid(const std::string& base, const SurfaceSpec& spec, const GridFunction& u) {
  if (u.N() != spec.N) throw ConfigError("write_grid: field does not match the grid");
  write_grid_csv(base + ".csv", u);
  nlohmann::json j;
  j["N"] = spec.N;
  j["beta"] = spec.beta;
  j["p"] = {spec.px, spec.py};
  j["r0"] = spec.r0;
  j["flag"] = flag_name(u.flag);
  std::ofstream out(base + ".json");
  if (!out) throw Error("cannot open for writing: " + base + ".json");
  out << j.dump(2) << '\n';
}

GridFunction read_grid(const std::string& base, SurfaceSpec* spec_out) {
  std::ifstream in(base + ".json");
  if (!in) throw Error("cannot open for reading: " + base + ".json");
  nlohmann::json j;
  in >> j;
  GridFunction u = read_grid_csv(base + ".csv");
  if (j.at("N").get<int>() != u.N())
    throw Error("grid header/CSV size mismatch at " + base);
  u.flag = flag_from_name(j.value("flag", std::string("finite")));
  if (spec_out) {
    *spec_out = SurfaceSpec(j.at("N").get<int>(), j.at("beta").get<double>(),
                            j.at("r0").get<double>(), j.at("p")[0].get<double>(),
                            j.at("p")[1].get<double>());
  }
  return u;
}

}  // namespace kcone
