#pragma once

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairaudit/csv.hpp"
#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"

namespace fairaudit {

// Half-open numeric bin [lo, hi); an absent bound is unbounded.
struct Bin {
  std::string label;
  std::optional<double> lo;
  std::optional<double> hi;
};

// Explicit stratum mapping: every raw value in `raw` maps to `label`.
struct ValueSet {
  std::string label;
  std::vector<std::string> raw;
};

struct RowFilter {
  std::string column;
  std::vector<std::string> allowed;
};

enum class MissingPolicy : unsigned char { DropRow, OwnCategory };

enum class FeatureKind : unsigned char { Numeric, Categorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind;
};

// Declarative preparation of a raw table into a Dataset.
struct Recipe {
  std::string dataset_id;  // defaults to "dataset" when absent from JSON
  std::string label_column;
  std::vector<std::string> favorable_values;
  std::string protected_column;
  std::vector<std::string> privileged_values;
  std::vector<std::string> unprivileged_values;
  std::string explanatory_column;
  std::vector<Bin> bins;          // numeric discretization, or
  std::vector<ValueSet> values;   // explicit value sets; both empty = identity
  std::vector<FeatureSpec> feature_columns;
  std::vector<RowFilter> row_filters;
  MissingPolicy missing_policy = MissingPolicy::DropRow;
  std::optional<std::size_t> expected_rows;
};

namespace detail {

inline bool is_missing(const std::string& cell) { return cell.empty() || cell == "?"; }

inline bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

// Returns the label of the unique bin containing `value`.
inline std::string discretize(double value, const std::vector<Bin>& bins) {
  for (const Bin& b : bins) {
    const double lo = b.lo.value_or(-std::numeric_limits<double>::infinity());
    const double hi = b.hi.value_or(std::numeric_limits<double>::infinity());
    if (value >= lo && value < hi) return b.label;
  }
  throw BinError("discretize: value " + std::to_string(value) + " falls in no declared bin");
}

namespace detail {

inline void validate_recipe(const Recipe& r) {
  if (r.label_column.empty()) throw SchemaError("recipe: label_column is required");
  if (r.favorable_values.empty()) throw SchemaError("recipe: favorable_values must be non-empty");
  if (r.protected_column.empty()) throw SchemaError("recipe: protected_column is required");
  if (r.privileged_values.empty() || r.unprivileged_values.empty())
    throw SchemaError("recipe: privileged_values and unprivileged_values must be non-empty");
  for (const std::string& v : r.privileged_values)
    if (contains(r.unprivileged_values, v))
      throw SchemaError("recipe: value '" + v + "' is both privileged and unprivileged");
  if (r.explanatory_column.empty()) throw SchemaError("recipe: explanatory_column is required");
  if (!r.bins.empty() && !r.values.empty())
    throw SchemaError("recipe: declare bins or values for the explanatory column, not both");
  for (std::size_t i = 0; i < r.bins.size(); ++i) {
    if (!r.bins[i].lo && i != 0)
      throw SchemaError("recipe: only the first bin may be unbounded below");
    if (!r.bins[i].hi && i + 1 != r.bins.size())
      throw SchemaError("recipe: only the last bin may be unbounded above");
    if (i + 1 < r.bins.size()) {
      if (!r.bins[i].hi || !r.bins[i + 1].lo)
        throw SchemaError("recipe: interior bin bounds must be present");
      if (*r.bins[i].hi > *r.bins[i + 1].lo)
        throw SchemaError("recipe: bins overlap at '" + r.bins[i].label + "'");
    }
  }
  if (r.feature_columns.empty()) throw SchemaError("recipe: feature_columns must be non-empty");
}

}  // namespace detail

// Parses a Recipe from its JSON document form.
inline Recipe recipe_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("recipe: document must be a JSON object");
  Recipe r;
  try {
    r.dataset_id = j.value("dataset_id", std::string("dataset"));
    r.label_column = j.value("label_column", std::string());
    if (j.contains("favorable_values"))
      r.favorable_values = j.at("favorable_values").get<std::vector<std::string>>();
    r.protected_column = j.value("protected_column", std::string());
    if (j.contains("privileged_values"))
      r.privileged_values = j.at("privileged_values").get<std::vector<std::string>>();
    if (j.contains("unprivileged_values"))
      r.unprivileged_values = j.at("unprivileged_values").get<std::vector<std::string>>();
    r.explanatory_column = j.value("explanatory_column", std::string());
    if (j.contains("bins")) {
      for (const auto& jb : j.at("bins")) {
        Bin b;
        b.label = jb.at("label").get<std::string>();
        if (jb.contains("lo") && !jb.at("lo").is_null()) b.lo = jb.at("lo").get<double>();
        if (jb.contains("hi") && !jb.at("hi").is_null()) b.hi = jb.at("hi").get<double>();
        r.bins.push_back(std::move(b));
      }
    }
    if (j.contains("values")) {
      for (const auto& jv : j.at("values")) {
        ValueSet v;
        v.label = jv.at("label").get<std::string>();
        v.raw = jv.at("raw").get<std::vector<std::string>>();
        r.values.push_back(std::move(v));
      }
    }
    if (j.contains("feature_columns")) {
      for (const auto& jf : j.at("feature_columns")) {
        FeatureSpec f;
        f.name = jf.at("name").get<std::string>();
        const std::string kind = jf.at("kind").get<std::string>();
        if (kind == "numeric")
          f.kind = FeatureKind::Numeric;
        else if (kind == "categorical")
          f.kind = FeatureKind::Categorical;
        else
          throw SchemaError("recipe: unknown feature kind '" + kind + "' for column '" +
                            f.name + "'");
        r.feature_columns.push_back(std::move(f));
      }
    }
    if (j.contains("row_filters")) {
      for (const auto& jf : j.at("row_filters")) {
        RowFilter f;
        f.column = jf.at("column").get<std::string>();
        f.allowed = jf.at("allowed").get<std::vector<std::string>>();
        r.row_filters.push_back(std::move(f));
      }
    }
    const std::string policy = j.value("missing_policy", std::string("drop_row"));
    if (policy == "drop_row")
      r.missing_policy = MissingPolicy::DropRow;
    else if (policy == "own_category")
      r.missing_policy = MissingPolicy::OwnCategory;
    else
      throw SchemaError("recipe: unknown missing_policy '" + policy + "'");
    if (j.contains("expected_rows") && !j.at("expected_rows").is_null())
      r.expected_rows = j.at("expected_rows").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("recipe: malformed document: ") + e.what());
  }
  detail::validate_recipe(r);
  return r;
}

inline Recipe load_recipe(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open recipe: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("recipe: invalid JSON in " + path + ": " + e.what());
  }
  return recipe_from_json(j);
}

namespace detail {

inline long require_column(const RawTable& raw, const std::string& name) {
  const long idx = raw.column_index(name);
  if (idx < 0) throw SchemaError("missing column: " + name);
  return idx;
}

// Maps an explanatory cell to its stratum label, or nullopt when the cell is
// unmappable (caller applies the missing policy).
inline std::optional<std::string> map_stratum(const std::string& cell, const Recipe& r) {
  if (!r.bins.empty()) {
    const auto v = parse_double(cell);
    if (!v) return std::nullopt;
    return discretize(*v, r.bins);  // BinError propagates: bins declare coverage
  }
  if (!r.values.empty()) {
    for (const ValueSet& vs : r.values)
      if (contains(vs.raw, cell)) return vs.label;
    return std::nullopt;
  }
  if (is_missing(cell)) return std::nullopt;
  return cell;  // identity mapping: each raw value is its own stratum
}

}  // namespace detail

// Removes rows that the recipe cannot keep: rows failing a row_filter, and —
// under drop_row — rows whose label/protected/explanatory/numeric-feature
// cells are missing or unmappable. Idempotent.
inline RawTable filter_rows(const RawTable& raw, const Recipe& r) {
  using detail::is_missing;
  const long label_idx = detail::require_column(raw, r.label_column);
  const long prot_idx = detail::require_column(raw, r.protected_column);
  const long expl_idx = detail::require_column(raw, r.explanatory_column);
  std::vector<std::pair<long, FeatureKind>> feat_idx;
  for (const FeatureSpec& f : r.feature_columns)
    feat_idx.emplace_back(detail::require_column(raw, f.name), f.kind);
  std::vector<std::pair<long, const RowFilter*>> filt_idx;
  for (const RowFilter& f : r.row_filters)
    filt_idx.emplace_back(detail::require_column(raw, f.column), &f);

  const bool drop = r.missing_policy == MissingPolicy::DropRow;
  RawTable out;
  out.column_names = raw.column_names;
  for (const auto& row : raw.rows) {
    bool keep = true;
    for (const auto& [idx, f] : filt_idx)
      if (!detail::contains(f->allowed, row[idx])) {
        keep = false;
        break;
      }
    if (keep && drop) {
      const std::string& prot = row[prot_idx];
      if (is_missing(row[label_idx]) || is_missing(prot) ||
          (!detail::contains(r.privileged_values, prot) &&
           !detail::contains(r.unprivileged_values, prot)) ||
          !detail::map_stratum(row[expl_idx], r).has_value()) {
        keep = false;
      } else {
        for (const auto& [idx, kind] : feat_idx) {
          const std::string& cell = row[idx];
          if (is_missing(cell) ||
              (kind == FeatureKind::Numeric && !detail::parse_double(cell).has_value())) {
            keep = false;
            break;
          }
        }
      }
    }
    if (keep) out.rows.push_back(row);
  }
  return out;
}

// Applies a recipe: filters rows, maps label/protected/explanatory columns,
// passes numeric features through, and one-hot encodes categorical features.
inline Dataset apply_recipe(const RawTable& raw, const Recipe& r) {
  using detail::is_missing;
  RawTable table = filter_rows(raw, r);

  if (r.expected_rows) {
    const double expected = static_cast<double>(*r.expected_rows);
    const double got = static_cast<double>(table.n_rows());
    if (expected > 0 && std::abs(got - expected) / expected > 0.01)
      std::cerr << "warning: recipe '" << r.dataset_id << "' expected about "
                << *r.expected_rows << " rows after filtering, got " << table.n_rows()
                << "\n";
  }

  const long label_idx = detail::require_column(table, r.label_column);
  const long prot_idx = detail::require_column(table, r.protected_column);
  const long expl_idx = detail::require_column(table, r.explanatory_column);

  Dataset ds;
  ds.provenance = r.dataset_id;
  const std::size_t n = table.n_rows();
  ds.labels.reserve(n);
  ds.protected_attr.reserve(n);
  ds.explanatory.reserve(n);

  for (const auto& row : table.rows) {
    const std::string& lab = row[label_idx];
    if (is_missing(lab) && r.missing_policy == MissingPolicy::OwnCategory)
      throw MappingError("label column '" + r.label_column + "' has a missing cell");
    ds.labels.push_back(detail::contains(r.favorable_values, lab) ? Outcome::Favorable
                                                                  : Outcome::Unfavorable);

    const std::string& prot = row[prot_idx];
    if (detail::contains(r.privileged_values, prot))
      ds.protected_attr.push_back(Group::Privileged);
    else if (detail::contains(r.unprivileged_values, prot))
      ds.protected_attr.push_back(Group::Unprivileged);
    else
      throw MappingError("protected column '" + r.protected_column + "' value '" + prot +
                         "' matches neither group");

    auto stratum = detail::map_stratum(row[expl_idx], r);
    if (!stratum) {
      // Unreachable under drop_row (filter_rows removed such rows); with
      // own_category an identity-mapped missing token is its own stratum.
      if (r.missing_policy == MissingPolicy::OwnCategory && r.bins.empty() && r.values.empty())
        stratum = row[expl_idx];
      else
        throw MappingError("explanatory column '" + r.explanatory_column + "' value '" +
                           row[expl_idx] + "' matches no stratum");
    }
    ds.explanatory.push_back(std::move(*stratum));
  }

  // Encode features: numeric pass-through, categorical one-hot over the
  // lexicographically sorted post-filter value set.
  struct EncodedColumn {
    std::string name;
    bool numeric;
    long src_idx;
    std::string category;  // for one-hot columns
  };
  std::vector<EncodedColumn> cols;
  for (const FeatureSpec& f : r.feature_columns) {
    const long idx = detail::require_column(table, f.name);
    if (f.kind == FeatureKind::Numeric) {
      cols.push_back({f.name, true, idx, ""});
    } else {
      std::set<std::string> distinct;
      for (const auto& row : table.rows) distinct.insert(row[idx]);
      for (const std::string& v : distinct)
        cols.push_back({f.name + "=" + v, false, idx, v});
    }
  }

  ds.features = FeatureMatrix(n, cols.size());
  ds.feature_names.reserve(cols.size());
  ds.numeric_kind.reserve(cols.size());
  for (const EncodedColumn& c : cols) {
    ds.feature_names.push_back(c.name);
    ds.numeric_kind.push_back(c.numeric);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const EncodedColumn& c = cols[j];
      if (c.numeric) {
        const auto v = detail::parse_double(row[c.src_idx]);
        if (!v)
          throw MappingError("numeric feature '" + c.name + "' has unparseable cell '" +
                             row[c.src_idx] + "'");
        ds.features.at(i, j) = *v;
      } else {
        ds.features.at(i, j) = row[c.src_idx] == c.category ? 1.0 : 0.0;
      }
    }
  }
  return ds;
}

}  // namespace fairaudit
