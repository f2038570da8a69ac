#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace kcone {

// One measured pass/fail line of a run report.
struct CheckLine {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string expected;  // human-readable bound, e.g. "< 1e-4"
};

// Machine-readable run summary: every check carries its measured value, so
// refinement comparisons can be computed from two report files alone.
class Report {
 public:
  Report(std::string command, nlohmann::json params);

  void add_check(const std::string& name, bool pass, double value,
                 const std::string& expected);
  void add_artifact(const std::string& path);
  // command-specific payload merged into the top level (tables, histories)
  void set_extra(const std::string& key, nlohmann::json value);

  bool all_passed() const;
  const std::vector<CheckLine>& checks() const { return checks_; }

  nlohmann::json to_json() const;
  void write(const std::string& path) const;
  void print(std::ostream& os) const;

  static Report load(const std::string& path);

 private:
  std::string command_;
  nlohmann::json params_;
  std::vector<CheckLine> checks_;
  std::vector<std::string> artifacts_;
  nlohmann::json extras_ = nlohmann::json::object();
};

struct PlotSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Self-contained SVG line plot. log_y plots log10 of |y| clamped away from
// zero; series order fixes the color assignment, so output is deterministic.
void write_svg_lines(const std::string& path, const std::string& title,
                     const std::vector<PlotSeries>& series, bool log_y = false);

}  // namespace kcone
