#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairaudit/errors.hpp"
#include "fairaudit/harness.hpp"

namespace fairaudit {

enum class CellMetric : unsigned char { DP, CDD };

enum class CellCategory : unsigned char { Blue, Green, Red, Uncategorized };

inline const char* to_string(CellMetric m) { return m == CellMetric::DP ? "DP" : "CDD"; }

inline const char* to_string(CellCategory c) {
  switch (c) {
    case CellCategory::Blue: return "Blue";
    case CellCategory::Green: return "Green";
    case CellCategory::Red: return "Red";
    default: return "Uncategorized";
  }
}

// One table cell: the ground-truth test value of a metric next to the
// prediction values of the unconstrained model and the model at the selected
// constraint level.
struct CellTriple {
  std::string dataset;
  std::string protected_attr;
  CellMetric metric = CellMetric::DP;
  double test_value = 0.0;
  double tau0_value = 0.0;
  double taubest_value = 0.0;
};

// Categorizes a cell, in precedence order:
//   Red    — constrained training reduced the metric more than 0.2 below the
//            test-set value;
//   Blue   — the test-set value was already high (>= 0.75) and neither model
//            fell more than 0.15 below it;
//   Green  — the constrained model maintained or improved on the unconstrained
//            model or on the test-set value;
//   otherwise Uncategorized.
inline CellCategory classify_cell(const CellTriple& c) {
  if (c.test_value - c.taubest_value > 0.2) return CellCategory::Red;
  if (c.test_value >= 0.75 && c.test_value - c.tau0_value <= 0.15 &&
      c.test_value - c.taubest_value <= 0.15)
    return CellCategory::Blue;
  if (c.taubest_value >= c.tau0_value || c.taubest_value >= c.test_value)
    return CellCategory::Green;
  return CellCategory::Uncategorized;
}

struct TableDocument {
  std::string csv;
  nlohmann::json json;
};

// Renders categorized cells as CSV and JSON. Rows are grouped the way the
// summary table is read: metric blocks first, then protected attribute, then
// dataset.
inline TableDocument emit_table(const std::vector<CellTriple>& cells) {
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const CellTriple& c : cells) {
    auto key = std::make_tuple(c.dataset, std::string(to_string(c.metric)), c.protected_attr);
    if (!seen.insert(key).second)
      throw DuplicateCellError("emit_table: duplicate cell for dataset '" + c.dataset +
                               "', metric " + to_string(c.metric) + ", protected '" +
                               c.protected_attr + "'");
  }

  std::vector<const CellTriple*> ordered;
  for (const CellTriple& c : cells) ordered.push_back(&c);
  std::stable_sort(ordered.begin(), ordered.end(), [](const CellTriple* a, const CellTriple* b) {
    if (a->metric != b->metric) return a->metric == CellMetric::DP;
    if (a->protected_attr != b->protected_attr) return a->protected_attr < b->protected_attr;
    return a->dataset < b->dataset;
  });

  TableDocument doc;
  doc.csv = "dataset,protected,metric,test,tau0,taubest,category\n";
  doc.json = nlohmann::json::array();
  char buf[384];
  for (const CellTriple* c : ordered) {
    const CellCategory cat = classify_cell(*c);
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.17g,%.17g,%.17g,%s\n", c->dataset.c_str(),
                  c->protected_attr.c_str(), to_string(c->metric), c->test_value, c->tau0_value,
                  c->taubest_value, to_string(cat));
    doc.csv += buf;
    doc.json.push_back({{"dataset", c->dataset},
                        {"protected", c->protected_attr},
                        {"metric", to_string(c->metric)},
                        {"test", c->test_value},
                        {"tau0", c->tau0_value},
                        {"taubest", c->taubest_value},
                        {"category", to_string(cat)}});
  }
  return doc;
}

// Rebuilds cells from the JSON rendering (categories are re-derived).
inline std::vector<CellTriple> table_from_json(const nlohmann::json& j) {
  std::vector<CellTriple> cells;
  if (!j.is_array()) throw SchemaError("table_from_json: expected a JSON array");
  for (const auto& e : j) {
    CellTriple c;
    c.dataset = e.at("dataset").get<std::string>();
    c.protected_attr = e.at("protected").get<std::string>();
    const std::string metric = e.at("metric").get<std::string>();
    if (metric == "DP")
      c.metric = CellMetric::DP;
    else if (metric == "CDD")
      c.metric = CellMetric::CDD;
    else
      throw SchemaError("table_from_json: unknown metric '" + metric + "'");
    c.test_value = e.at("test").get<double>();
    c.tau0_value = e.at("tau0").get<double>();
    c.taubest_value = e.at("taubest").get<double>();
    cells.push_back(std::move(c));
  }
  return cells;
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace detail

// Renders a sweep as a standalone 800x500 SVG: tau on [0,1] against metric
// values on [0,1], one mean polyline per series (DP, weighted CDD, accuracy)
// over a shaded +/-1 stddev band, with legend and title.
inline std::string render_plot_svg(const SweepResult& s) {
  if (s.taus.empty() || s.per_tau.empty())
    throw DegenerateError("render_plot_svg: sweep has no tau points");

  constexpr double x0 = 70.0, x1 = 620.0, y0 = 440.0, y1 = 40.0;
  auto px = [&](double tau) { return x0 + tau * (x1 - x0); };
  auto py = [&](double v) { return y0 + v * (y1 - y0); };
  auto clamp01 = [](double v) { return std::min(1.0, std::max(0.0, v)); };

  struct Series {
    const char* label;
    const char* color;
    std::vector<std::pair<double, double>> pts;  // (tau, mean)
    std::vector<std::tuple<double, double, double>> band;  // (tau, lo, hi)
  };
  Series series[3] = {{"DP", "#1f77b4", {}, {}},
                      {"CDD", "#d62728", {}, {}},
                      {"Accuracy", "#2ca02c", {}, {}}};
  for (const TauAggregate& a : s.per_tau) {
    const MeanStd* stats[3] = {&a.dp, &a.cdd_weighted, &a.accuracy};
    for (int k = 0; k < 3; ++k) {
      if (std::isnan(stats[k]->mean)) continue;
      series[k].pts.emplace_back(a.tau, clamp01(stats[k]->mean));
      series[k].band.emplace_back(a.tau, clamp01(stats[k]->mean - stats[k]->stddev),
                                  clamp01(stats[k]->mean + stats[k]->stddev));
    }
  }

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
         "viewBox=\"0 0 800 500\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" fill=\"white\"/>\n";
  const std::string title =
      detail::xml_escape(s.dataset_id + " & " + s.protected_attribute);
  svg += "<text x=\"345\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
         "text-anchor=\"middle\">" + title + "</text>\n";

  // axes
  svg += "<line x1=\"" + detail::fmt2(x0) + "\" y1=\"" + detail::fmt2(y0) + "\" x2=\"" +
         detail::fmt2(x1) + "\" y2=\"" + detail::fmt2(y0) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + detail::fmt2(x0) + "\" y1=\"" + detail::fmt2(y0) + "\" x2=\"" +
         detail::fmt2(x0) + "\" y2=\"" + detail::fmt2(y1) + "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double v = 0.2 * k;
    svg += "<line x1=\"" + detail::fmt2(px(v)) + "\" y1=\"" + detail::fmt2(y0) + "\" x2=\"" +
           detail::fmt2(px(v)) + "\" y2=\"" + detail::fmt2(y0 + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + detail::fmt2(px(v)) + "\" y=\"" + detail::fmt2(y0 + 20) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
           detail::fmt2(v).substr(0, 3) + "</text>\n";
    svg += "<line x1=\"" + detail::fmt2(x0 - 5) + "\" y1=\"" + detail::fmt2(py(v)) +
           "\" x2=\"" + detail::fmt2(x0) + "\" y2=\"" + detail::fmt2(py(v)) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + detail::fmt2(x0 - 10) + "\" y=\"" + detail::fmt2(py(v) + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" +
           detail::fmt2(v).substr(0, 3) + "</text>\n";
  }
  svg += "<text x=\"345\" y=\"480\" font-family=\"sans-serif\" font-size=\"12\" "
         "text-anchor=\"middle\">τ</text>\n";

  // +/-1 stddev bands under the mean lines
  for (const Series& se : series) {
    if (se.band.size() < 2) continue;
    std::string pts;
    for (const auto& [t, lo, hi] : se.band) {
      (void)lo;
      pts += detail::fmt2(px(t)) + "," + detail::fmt2(py(hi)) + " ";
    }
    for (auto it = se.band.rbegin(); it != se.band.rend(); ++it) {
      pts += detail::fmt2(px(std::get<0>(*it))) + "," + detail::fmt2(py(std::get<1>(*it))) + " ";
    }
    if (!pts.empty()) pts.pop_back();
    svg += "<polygon points=\"" + pts + "\" fill=\"" + se.color +
           "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
  }

  // exactly one polyline per series
  for (const Series& se : series) {
    std::string pts;
    for (const auto& [t, v] : se.pts)
      pts += detail::fmt2(px(t)) + "," + detail::fmt2(py(v)) + " ";
    if (!pts.empty()) pts.pop_back();
    svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + se.color +
           "\" stroke-width=\"2\"/>\n";
  }

  // legend
  double ly = 60.0;
  for (const Series& se : series) {
    svg += "<rect x=\"640\" y=\"" + detail::fmt2(ly - 10) +
           "\" width=\"14\" height=\"14\" fill=\"" + std::string(se.color) + "\"/>\n";
    svg += "<text x=\"660\" y=\"" + detail::fmt2(ly + 2) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + se.label + "</text>\n";
    ly += 24.0;
  }
  svg += "</svg>\n";
  return svg;
}

// Writes the SVG chart for a sweep to `path`.
inline void emit_plot(const SweepResult& s, const std::string& path) {
  const std::string svg = render_plot_svg(s);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("emit_plot: cannot open " + path);
  out << svg;
  if (!out) throw IOError("emit_plot: failed writing " + path);
}

}  // namespace fairaudit
