#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sblab/core/errors.hpp"
#include "sblab/core/statistics.hpp"
#include "sblab/geometry/config_io.hpp"

namespace sblab {

/// Tabular output; cells are JSON scalars (number, string or null).
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::json>> rows;

  void add(std::vector<nlohmann::json> row) {
    if (row.size() != columns.size()) throw DomainError("table " + name + ": row width mismatch");
    rows.push_back(std::move(row));
  }
  std::size_t column(const std::string& c) const {
    const auto it = std::find(columns.begin(), columns.end(), c);
    if (it == columns.end()) throw DomainError("table " + name + ": no column " + c);
    return static_cast<std::size_t>(it - columns.begin());
  }
  double number(std::size_t row, const std::string& c) const {
    const auto& v = rows.at(row).at(column(c));
    return v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN();
  }
};

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  std::vector<double> lower, upper;  // optional error bars
};

struct PlotLine {
  std::string label;
  double slope = 0.0;
  double intercept = 0.0;  // in log-log coordinates (natural log)
};

struct Plot {
  std::string name;
  std::string title, xlabel, ylabel;
  std::vector<PlotSeries> series;
  std::vector<PlotLine> lines;
  std::string annotation;
};

struct StudyReport {
  std::string study;
  nlohmann::json config;
  std::vector<Table> tables;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<Plot> plots;
  std::size_t failures = 0;  // replicas lost to saturation or non-convergence
  double seconds = 0.0;      // wall time; written apart from the report

  const Table& table(const std::string& name) const {
    for (const auto& t : tables)
      if (t.name == name) return t;
    throw DomainError("report: no table " + name);
  }
};

/// Shortest round-trip formatting is not portable across libraries; %.17g is.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string csv_cell(const nlohmann::json& v) {
  if (v.is_null()) return "";
  if (v.is_number_integer()) return v.dump();
  if (v.is_number()) return format_double(v.get<double>());
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  return v.dump();
}

inline std::string table_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << t.columns[k];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << csv_cell(r[k]);
    os << '\n';
  }
  return os.str();
}

namespace detail {

/// Non-finite doubles become strings so the JSON stays valid.
inline nlohmann::json sanitize(const nlohmann::json& v) {
  if (v.is_number_float()) {
    const double x = v.get<double>();
    return std::isfinite(x) ? v : nlohmann::json(format_double(x));
  }
  if (v.is_array() || v.is_object()) {
    nlohmann::json out = v;
    for (auto it = out.begin(); it != out.end(); ++it) *it = sanitize(*it);
    return out;
  }
  return v;
}

inline nlohmann::json doubles(const std::vector<double>& xs) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : xs) a.push_back(x);
  return a;
}

}  // namespace detail

inline nlohmann::json report_to_json(const StudyReport& r) {
  nlohmann::json j;
  j["study"] = r.study;
  j["config"] = r.config;
  j["failures"] = r.failures;
  j["summary"] = r.summary;
  j["tables"] = nlohmann::json::array();
  for (const auto& t : r.tables) j["tables"].push_back({{"name", t.name}, {"columns", t.columns}, {"rows", t.rows}});
  j["plots"] = nlohmann::json::array();
  for (const auto& p : r.plots) {
    nlohmann::json jp{{"name", p.name}, {"title", p.title}, {"xlabel", p.xlabel}, {"ylabel", p.ylabel},
                      {"annotation", p.annotation}};
    jp["series"] = nlohmann::json::array();
    for (const auto& s : p.series)
      jp["series"].push_back({{"label", s.label},
                              {"x", detail::doubles(s.x)},
                              {"y", detail::doubles(s.y)},
                              {"lower", detail::doubles(s.lower)},
                              {"upper", detail::doubles(s.upper)}});
    jp["lines"] = nlohmann::json::array();
    for (const auto& l : p.lines) jp["lines"].push_back({{"label", l.label}, {"slope", l.slope}, {"intercept", l.intercept}});
    j["plots"].push_back(jp);
  }
  return detail::sanitize(j);
}

inline StudyReport report_from_json(const nlohmann::json& j) {
  auto num = [](const nlohmann::json& v) {
    if (v.is_string()) return std::stod(v.get<std::string>());
    return v.get<double>();
  };
  auto nums = [&](const nlohmann::json& a) {
    std::vector<double> out;
    for (const auto& v : a) out.push_back(num(v));
    return out;
  };
  StudyReport r;
  try {
    r.study = j.at("study").get<std::string>();
    r.config = j.at("config");
    r.failures = j.value("failures", std::size_t{0});
    r.summary = j.at("summary");
    for (const auto& jt : j.at("tables")) {
      Table t;
      t.name = jt.at("name").get<std::string>();
      t.columns = jt.at("columns").get<std::vector<std::string>>();
      for (const auto& row : jt.at("rows")) t.rows.push_back(row.get<std::vector<nlohmann::json>>());
      r.tables.push_back(std::move(t));
    }
    for (const auto& jp : j.at("plots")) {
      Plot p;
      p.name = jp.at("name").get<std::string>();
      p.title = jp.value("title", "");
      p.xlabel = jp.value("xlabel", "");
      p.ylabel = jp.value("ylabel", "");
      p.annotation = jp.value("annotation", "");
      for (const auto& js : jp.at("series"))
        p.series.push_back({js.at("label").get<std::string>(), nums(js.at("x")), nums(js.at("y")),
                            nums(js.value("lower", nlohmann::json::array())),
                            nums(js.value("upper", nlohmann::json::array()))});
      for (const auto& jl : jp.at("lines"))
        p.lines.push_back({jl.at("label").get<std::string>(), num(jl.at("slope")), num(jl.at("intercept"))});
      r.plots.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("report JSON: ") + e.what());
  }
  return r;
}

/// Log-log SVG: markers with optional error bars, fitted lines, annotation.
/// Non-positive values are dropped. Output depends only on the plot data.
inline std::string plot_svg(const Plot& p) {
  const double W = 640, H = 440, ml = 80, mr = 30, mt = 40, mb = 60;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto grow = [](double v, double& lo, double& hi) {
    if (v > 0.0 && std::isfinite(v)) {
      lo = std::min(lo, std::log10(v));
      hi = std::max(hi, std::log10(v));
    }
  };
  for (const auto& s : p.series) {
    for (double v : s.x) grow(v, x0, x1);
    for (double v : s.y) grow(v, y0, y1);
    for (double v : s.lower) grow(v, y0, y1);
    for (double v : s.upper) grow(v, y0, y1);
  }
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << p.title << "</text>\n";
  if (!(x1 >= x0) || !(y1 >= y0)) {
    os << "<text x=\"" << W / 2 << "\" y=\"" << H / 2 << "\" text-anchor=\"middle\">no positive data</text>\n</svg>\n";
    return os.str();
  }
  for (const auto& l : p.lines) {
    // keep fitted lines inside the data range
    for (double xv : {x0, x1}) grow(std::exp(l.intercept + l.slope * xv * std::log(10.0)), y0, y1);
  }
  if (x1 - x0 < 1e-9) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-9) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto X = [&](double v) { return ml + (std::log10(v) - x0) / (x1 - x0) * (W - ml - mr); };
  auto Y = [&](double v) { return H - mb - (std::log10(v) - y0) / (y1 - y0) * (H - mt - mb); };
  auto f = [](double v) { return format_double(std::round(v * 100.0) / 100.0); };
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int d = static_cast<int>(std::ceil(x0 - 1e-9)); d <= static_cast<int>(std::floor(x1 + 1e-9)); ++d) {
    const double px = X(std::pow(10.0, d));
    os << "<line x1=\"" << f(px) << "\" y1=\"" << H - mb << "\" x2=\"" << f(px) << "\" y2=\"" << H - mb + 5 << "\" stroke=\"black\"/>";
    os << "<text x=\"" << f(px) << "\" y=\"" << H - mb + 18 << "\" text-anchor=\"middle\">1e" << d << "</text>\n";
  }
  for (int d = static_cast<int>(std::ceil(y0 - 1e-9)); d <= static_cast<int>(std::floor(y1 + 1e-9)); ++d) {
    const double py = Y(std::pow(10.0, d));
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << f(py) << "\" x2=\"" << ml << "\" y2=\"" << f(py) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << f(py + 4) << "\" text-anchor=\"end\">1e" << d << "</text>\n";
  }
  os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << p.xlabel << "</text>\n";
  os << "<text x=\"18\" y=\"" << (mt + H - mb) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << (mt + H - mb) / 2 << ")\">" << p.ylabel << "</text>\n";
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  int legend = 0;
  for (std::size_t si = 0; si < p.series.size(); ++si) {
    const auto& s = p.series[si];
    const char* c = colours[si % 5];
    for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
      if (!(s.x[k] > 0.0) || !(s.y[k] > 0.0)) continue;
      if (k < s.lower.size() && k < s.upper.size() && s.lower[k] > 0.0 && s.upper[k] > 0.0)
        os << "<line x1=\"" << f(X(s.x[k])) << "\" y1=\"" << f(Y(s.lower[k])) << "\" x2=\"" << f(X(s.x[k])) << "\" y2=\""
           << f(Y(s.upper[k])) << "\" stroke=\"" << c << "\"/>";
      os << "<circle cx=\"" << f(X(s.x[k])) << "\" cy=\"" << f(Y(s.y[k])) << "\" r=\"4\" fill=\"" << c << "\"/>\n";
    }
    os << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 16 + 16 * legend++ << "\" fill=\"" << c << "\">" << s.label << "</text>\n";
  }
  for (std::size_t li = 0; li < p.lines.size(); ++li) {
    const auto& l = p.lines[li];
    const double ln10 = std::log(10.0);
    const double ya = std::exp(l.intercept + l.slope * x0 * ln10), yb = std::exp(l.intercept + l.slope * x1 * ln10);
    os << "<line x1=\"" << f(X(std::pow(10.0, x0))) << "\" y1=\"" << f(Y(ya)) << "\" x2=\"" << f(X(std::pow(10.0, x1)))
       << "\" y2=\"" << f(Y(yb)) << "\" stroke=\"" << (li ? "#777777" : "black") << "\" stroke-dasharray=\"6 4\"/>\n";
    os << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 16 + 16 * legend++ << "\">" << l.label << "</text>\n";
  }
  if (!p.annotation.empty())
    os << "<text x=\"" << W - mr - 10 << "\" y=\"" << H - mb - 12 << "\" text-anchor=\"end\">" << p.annotation << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

/// Writes report.json, one CSV per table, one SVG per plot, and timing.json.
/// Everything except timing.json is a pure function of the report content.
inline std::vector<std::string> emit_report(const StudyReport& r, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir);
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& text) {
    const std::string path = (fs::path(dir) / name).string();
    write_text_file(path, text);
    written.push_back(path);
  };
  put("report.json", report_to_json(r).dump(2) + "\n");
  for (const auto& t : r.tables) put(t.name + ".csv", table_csv(t));
  for (const auto& p : r.plots) put(p.name + ".svg", plot_svg(p));
  put("timing.json", nlohmann::json{{"seconds", r.seconds}}.dump(2) + "\n");
  return written;
}

/// Least-squares fit of log y against log x over the positive pairs.
inline std::optional<LinearFit> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < x.size() && k < y.size(); ++k)
    if (x[k] > 0.0 && y[k] > 0.0 && std::isfinite(y[k])) {
      lx.push_back(std::log(x[k]));
      ly.push_back(std::log(y[k]));
    }
  if (lx.size() < 2 || lx.front() == lx.back()) return std::nullopt;
  return least_squares(lx, ly);
}

}  // namespace sblab
