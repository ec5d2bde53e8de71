#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairaudit/errors.hpp"

namespace fairaudit {

struct ContingencyTable {
  std::vector<std::vector<std::size_t>> counts;  // r x c
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;

  std::size_t n_rows() const { return counts.size(); }
  std::size_t n_cols() const { return counts.empty() ? 0 : counts[0].size(); }
};

struct ChiSquareResult {
  double x2 = 0.0;
  std::size_t dof = 0;
  double p = 1.0;
  double cramers_v = 0.0;
  std::size_t n = 0;
};

namespace detail {

// Regularized lower incomplete gamma P(a,x) by series expansion (x < a+1).
inline double gamma_p_series(double a, double x) {
  constexpr double eps = 1e-15;
  constexpr int max_iter = 1000;
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < max_iter; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * eps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a,x) by modified Lentz continued
// fraction (x >= a+1).
inline double gamma_q_cont_fraction(double a, double x) {
  constexpr double eps = 1e-15;
  constexpr double fpmin = 1e-300;
  constexpr int max_iter = 1000;
  double b = x + 1.0 - a;
  double c = 1.0 / fpmin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= max_iter; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

// Upper-tail probability of the chi-square distribution with k degrees of
// freedom, evaluated at x.
inline double chi2_sf(double x, std::size_t k) {
  if (x <= 0.0) return 1.0;
  const double a = static_cast<double>(k) / 2.0;
  const double t = x / 2.0;
  if (t < a + 1.0) return 1.0 - detail::gamma_p_series(a, t);
  return detail::gamma_q_cont_fraction(a, t);
}

// Cross-tabulates two categorical vectors; labels are sorted lexicographically.
inline ContingencyTable contingency_table(const std::vector<std::string>& a,
                                          const std::vector<std::string>& b) {
  if (a.size() != b.size())
    throw LengthMismatchError("contingency_table: vectors differ in length");
  std::map<std::string, std::size_t> rows, cols;
  for (const std::string& v : a) rows.emplace(v, 0);
  for (const std::string& v : b) cols.emplace(v, 0);
  if (rows.size() < 2) throw DegenerateError("contingency_table: first vector is single-valued");
  if (cols.size() < 2) throw DegenerateError("contingency_table: second vector is single-valued");

  ContingencyTable t;
  std::size_t i = 0;
  for (auto& [label, idx] : rows) {
    idx = i++;
    t.row_labels.push_back(label);
  }
  std::size_t j = 0;
  for (auto& [label, idx] : cols) {
    idx = j++;
    t.col_labels.push_back(label);
  }
  t.counts.assign(rows.size(), std::vector<std::size_t>(cols.size(), 0));
  for (std::size_t k = 0; k < a.size(); ++k) t.counts[rows[a[k]]][cols[b[k]]] += 1;
  return t;
}

// Pearson chi-square test of independence with Cramér's V.
inline ChiSquareResult chi_square(const ContingencyTable& t) {
  const std::size_t r = t.n_rows(), c = t.n_cols();
  if (r < 2 || c < 2) throw DegenerateError("chi_square: table must be at least 2x2");
  std::vector<double> row_sum(r, 0.0), col_sum(c, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double o = static_cast<double>(t.counts[i][j]);
      row_sum[i] += o;
      col_sum[j] += o;
      total += o;
    }
  for (double s : row_sum)
    if (s == 0.0) throw ZeroMarginError("chi_square: a row sums to zero");
  for (double s : col_sum)
    if (s == 0.0) throw ZeroMarginError("chi_square: a column sums to zero");

  double x2 = 0.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double expected = row_sum[i] * col_sum[j] / total;
      const double diff = static_cast<double>(t.counts[i][j]) - expected;
      x2 += diff * diff / expected;
    }

  ChiSquareResult res;
  res.x2 = x2;
  res.dof = (r - 1) * (c - 1);
  res.p = chi2_sf(x2, res.dof);
  res.n = static_cast<std::size_t>(total);
  const double denom = total * static_cast<double>(std::min(r - 1, c - 1));
  res.cramers_v = std::clamp(std::sqrt(x2 / denom), 0.0, 1.0);
  return res;
}

// sqrt(x2 / (n * min(r-1, c-1))), clamped to [0,1].
inline double cramers_v(const ContingencyTable& t) { return chi_square(t).cramers_v; }

// One-line rendering in the conventional notation.
inline std::string format_chi_square(const ChiSquareResult& r) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "X²(%zu, N=%zu)=%.2f, p=%.4f, V=%.2f", r.dof, r.n, r.x2,
                r.p, r.cramers_v);
  return buf;
}

inline nlohmann::json chi_square_to_json(const ChiSquareResult& r) {
  return {{"x2", r.x2}, {"dof", r.dof}, {"p", r.p}, {"cramers_v", r.cramers_v}, {"n", r.n}};
}

}  // namespace fairaudit
