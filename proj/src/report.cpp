#include "kcone/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "kcone/common.hpp"

namespace kcone {

namespace {

std::string fmt_val(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Report::Report(std::string command, nlohmann::json params)
    : command_(std::move(command)), params_(std::move(params)) {}

void Report::add_check(const std::string& name, bool pass, double value,
                       const std::string& expected) {
  checks_.push_back({name, pass, value, expected});
}

void Report::add_artifact(const std::string& path) { artifacts_.push_back(path); }

void Report::set_extra(const std::string& key, nlohmann::json value) {
  extras_[key] = std::move(value);
}

bool Report::all_passed() const {
  return std::all_of(checks_.begin(), checks_.end(),
                     [](const CheckLine& c) { return c.pass; });
}

nlohmann::json Report::to_json() const {
  nlohmann::json j = extras_;
  j["schema_version"] = 1;
  j["command"] = command_;
  j["params"] = params_;
  j["checks"] = nlohmann::json::array();
  for (const CheckLine& c : checks_)
    j["checks"].push_back({{"name", c.name},
                           {"pass", c.pass},
                           {"value", c.value},
                           {"expected", c.expected}});
  j["artifacts"] = artifacts_;
  return j;
}

void Report::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write report " + path);
  out << to_json().dump(2) << '\n';
}

void Report::print(std::ostream& os) const {
  for (const CheckLine& c : checks_)
    os << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << fmt_val(c.value)
       << " (expected " << c.expected << ")\n";
}

Report Report::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read report " + path);
  nlohmann::json j;
  in >> j;
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
    throw ConfigError("report " + path + ": unsupported schema_version");
  Report r(j.at("command").get<std::string>(), j.at("params"));
  for (const auto& c : j.at("checks"))
    r.add_check(c.at("name").get<std::string>(), c.at("pass").get<bool>(),
                c.at("value").get<double>(), c.at("expected").get<std::string>());
  if (j.contains("artifacts"))
    for (const auto& a : j["artifacts"]) r.add_artifact(a.get<std::string>());
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "schema_version" || k == "command" || k == "params" ||
        k == "checks" || k == "artifacts")
      continue;
    r.set_extra(k, it.value());
  }
  return r;
}

void write_svg_lines(const std::string& path, const std::string& title,
                     const std::vector<PlotSeries>& series, bool log_y) {
  constexpr double W = 720.0, H = 420.0, ML = 70.0, MR = 20.0, MT = 40.0, MB = 40.0;
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b"};

  auto ty = [log_y](double y) {
    if (!log_y) return y;
    return std::log10(std::max(std::fabs(y), 1e-16));
  };

  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (const PlotSeries& s : series)
    for (auto [x, y] : s.points) {
      double yy = ty(y);
      if (!any) {
        x0 = x1 = x;
        y0 = y1 = yy;
        any = true;
      }
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, yy);
      y1 = std::max(y1, yy);
    }
  if (x1 - x0 < 1e-300) x1 = x0 + 1.0;
  if (y1 - y0 < 1e-300) y1 = y0 + 1.0;

  auto px = [&](double x) { return ML + (x - x0) / (x1 - x0) * (W - ML - MR); };
  auto py = [&](double y) { return H - MB - (ty(y) - y0) / (y1 - y0) * (H - MT - MB); };

  std::ofstream out(path);
  if (!out) throw Error("cannot write plot " + path);
  char buf[160];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"monospace\" font-size=\"14\">"
      << title << (log_y ? " (log10 y)" : "") << "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\"/>\n",
                ML, H - MB, W - MR, H - MB);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\"/>\n",
                ML, MT, ML, H - MB);
  out << buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.1f\" y=\"%.1f\" font-family=\"monospace\" "
                "font-size=\"11\">[%.3g, %.3g] x [%.3g, %.3g]</text>\n",
                ML, H - MB + 16.0, x0, x1, y0, y1);
  out << buf;

  for (size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (auto [x, y] : series[k].points) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(x), py(y));
      out << buf;
    }
    out << "\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\" "
                  "font-family=\"monospace\" font-size=\"11\">%s</text>\n",
                  W - MR - 180.0, MT + 14.0 * (k + 1), color,
                  series[k].name.c_str());
    out << buf;
  }
  out << "</svg>\n";
}

}  // namespace kcone
