#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"

namespace fairaudit {

enum class OutcomeKind : unsigned char { GroundTruth, Predicted };

// A vector of binary outcomes: dataset labels (Y) or model predictions.
struct OutcomeVector {
  std::vector<Outcome> outcomes;
  OutcomeKind kind = OutcomeKind::GroundTruth;

  std::size_t size() const { return outcomes.size(); }
};

struct StratumStat {
  double ratio = 0.0;
  double weight = 0.0;
  bool defined = false;
};

struct GroupOutcomeCounts {
  std::size_t unprivileged_favorable = 0;
  std::size_t unprivileged_unfavorable = 0;
  std::size_t privileged_favorable = 0;
  std::size_t privileged_unfavorable = 0;
};

// Aggregated fairness/performance metrics for one outcome vector.
struct FairnessReport {
  double dp = 0.0;
  double spd = 0.0;
  double disparate_impact = 0.0;  // +infinity sentinel possible
  double cdd_weighted = 0.0;      // NaN when every stratum is undefined
  std::map<std::string, StratumStat> cdd_per_stratum;
  std::optional<double> accuracy;  // present only for predicted outcomes
  GroupOutcomeCounts counts;
  std::size_t n = 0;
  double rate_unprivileged = 0.0;
  double rate_privileged = 0.0;
  OutcomeKind kind = OutcomeKind::GroundTruth;
};

namespace detail {

inline void check_aligned(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw LengthMismatchError(std::string(what) + ": length mismatch (" + std::to_string(a) +
                              " vs " + std::to_string(b) + ")");
}

}  // namespace detail

// P(outcome = + | g = which).
inline double positive_rate(const OutcomeVector& out, const std::vector<Group>& groups,
                            Group which) {
  detail::check_aligned(out.size(), groups.size(), "positive_rate");
  std::size_t in_group = 0, favorable = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i] != which) continue;
    ++in_group;
    if (out.outcomes[i] == Outcome::Favorable) ++favorable;
  }
  if (in_group == 0)
    throw EmptyGroupError(std::string("positive_rate: no instances in group ") +
                          to_string(which));
  return static_cast<double>(favorable) / static_cast<double>(in_group);
}

// min(rate_u, rate_p) / max(rate_u, rate_p); 1 when both rates are 0, 0 when
// exactly one is.
inline double dp_ratio(const OutcomeVector& out, const std::vector<Group>& groups) {
  const double ru = positive_rate(out, groups, Group::Unprivileged);
  const double rp = positive_rate(out, groups, Group::Privileged);
  const double mx = std::max(ru, rp);
  if (mx == 0.0) return 1.0;  // equal treatment: nobody receives the favorable outcome
  return std::min(ru, rp) / mx;
}

// rate_unprivileged - rate_privileged.
inline double spd(const OutcomeVector& out, const std::vector<Group>& groups) {
  return positive_rate(out, groups, Group::Unprivileged) -
         positive_rate(out, groups, Group::Privileged);
}

// rate_unprivileged / rate_privileged, with 1 when both rates are 0 and
// +infinity when only the privileged rate is 0.
inline double disparate_impact(const OutcomeVector& out, const std::vector<Group>& groups) {
  const double ru = positive_rate(out, groups, Group::Unprivileged);
  const double rp = positive_rate(out, groups, Group::Privileged);
  if (rp == 0.0) {
    if (ru == 0.0) return 1.0;
    return std::numeric_limits<double>::infinity();
  }
  return ru / rp;
}

// Within stratum r, compares the unprivileged share among favorable outcomes
// with the unprivileged share among unfavorable ones. `defined` is false when
// the stratum lacks either outcome or both shares are 0.
inline std::pair<double, bool> cdd_stratum(const OutcomeVector& out,
                                           const std::vector<Group>& groups,
                                           const std::vector<std::string>& strata,
                                           const std::string& r) {
  detail::check_aligned(out.size(), groups.size(), "cdd_stratum");
  detail::check_aligned(out.size(), strata.size(), "cdd_stratum");
  std::size_t n_plus = 0, n_minus = 0, u_plus = 0, u_minus = 0;
  bool seen = false;
  for (std::size_t i = 0; i < strata.size(); ++i) {
    if (strata[i] != r) continue;
    seen = true;
    const bool unpriv = groups[i] == Group::Unprivileged;
    if (out.outcomes[i] == Outcome::Favorable) {
      ++n_plus;
      if (unpriv) ++u_plus;
    } else {
      ++n_minus;
      if (unpriv) ++u_minus;
    }
  }
  if (!seen) throw UnknownStratumError("cdd_stratum: stratum '" + r + "' does not occur");
  if (n_plus == 0 || n_minus == 0) return {0.0, false};
  const double p_plus = static_cast<double>(u_plus) / static_cast<double>(n_plus);
  const double p_minus = static_cast<double>(u_minus) / static_cast<double>(n_minus);
  const double mx = std::max(p_plus, p_minus);
  if (mx == 0.0) return {0.0, false};
  return {std::min(p_plus, p_minus) / mx, true};
}

// Population-weighted mean of per-stratum ratios over the defined strata;
// weights are renormalized to the defined strata only.
inline std::pair<double, std::map<std::string, StratumStat>> cdd_weighted(
    const OutcomeVector& out, const std::vector<Group>& groups,
    const std::vector<std::string>& strata) {
  detail::check_aligned(out.size(), groups.size(), "cdd_weighted");
  detail::check_aligned(out.size(), strata.size(), "cdd_weighted");
  std::map<std::string, std::size_t> sizes;
  for (const std::string& s : strata) sizes[s] += 1;

  std::map<std::string, StratumStat> per;
  double defined_total = 0.0;
  for (const auto& [label, count] : sizes) {
    const auto [ratio, defined] = cdd_stratum(out, groups, strata, label);
    per[label] = {ratio, 0.0, defined};
    if (defined) defined_total += static_cast<double>(count);
  }
  if (defined_total == 0.0)
    throw AllStrataUndefinedError("cdd_weighted: no stratum has both outcomes");

  double summary = 0.0;
  for (const auto& [label, count] : sizes) {
    StratumStat& st = per[label];
    if (!st.defined) continue;
    st.weight = static_cast<double>(count) / defined_total;
    summary += st.weight * st.ratio;
  }
  return {summary, per};
}

// Fraction of positions where the two outcome vectors agree.
inline double accuracy(const OutcomeVector& pred, const OutcomeVector& truth) {
  detail::check_aligned(pred.size(), truth.size(), "accuracy");
  if (pred.size() == 0) throw LengthMismatchError("accuracy: empty vectors");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred.outcomes[i] == truth.outcomes[i]) ++agree;
  return static_cast<double>(agree) / static_cast<double>(pred.size());
}

// Computes every metric in one pass. `truth` enables the accuracy field; when
// every stratum is undefined the weighted summary is reported as NaN rather
// than raising, so callers still receive the group-level metrics.
inline FairnessReport full_report(const OutcomeVector& out, const std::vector<Group>& groups,
                                  const std::vector<std::string>& strata,
                                  const OutcomeVector* truth = nullptr) {
  detail::check_aligned(out.size(), groups.size(), "full_report");
  detail::check_aligned(out.size(), strata.size(), "full_report");
  FairnessReport rep;
  rep.kind = out.kind;
  rep.n = out.size();
  rep.rate_unprivileged = positive_rate(out, groups, Group::Unprivileged);
  rep.rate_privileged = positive_rate(out, groups, Group::Privileged);
  rep.dp = dp_ratio(out, groups);
  rep.spd = spd(out, groups);
  rep.disparate_impact = disparate_impact(out, groups);
  try {
    auto [summary, per] = cdd_weighted(out, groups, strata);
    rep.cdd_weighted = summary;
    rep.cdd_per_stratum = std::move(per);
  } catch (const AllStrataUndefinedError&) {
    rep.cdd_weighted = std::numeric_limits<double>::quiet_NaN();
    std::map<std::string, std::size_t> sizes;
    for (const std::string& s : strata) sizes[s] += 1;
    for (const auto& [label, count] : sizes) {
      (void)count;
      rep.cdd_per_stratum[label] = {0.0, 0.0, false};
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool unpriv = groups[i] == Group::Unprivileged;
    const bool fav = out.outcomes[i] == Outcome::Favorable;
    if (unpriv && fav)
      ++rep.counts.unprivileged_favorable;
    else if (unpriv)
      ++rep.counts.unprivileged_unfavorable;
    else if (fav)
      ++rep.counts.privileged_favorable;
    else
      ++rep.counts.privileged_unfavorable;
  }
  if (truth) rep.accuracy = accuracy(out, *truth);
  return rep;
}

// JSON rendering; non-finite numbers become null.
inline nlohmann::json report_to_json(const FairnessReport& r) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [label, st] : r.cdd_per_stratum)
    per[label] = {{"ratio", num(st.ratio)}, {"weight", num(st.weight)}, {"defined", st.defined}};
  nlohmann::json j{
      {"dp", num(r.dp)},
      {"spd", num(r.spd)},
      {"disparate_impact", num(r.disparate_impact)},
      {"cdd_weighted", num(r.cdd_weighted)},
      {"cdd_per_stratum", per},
      {"counts",
       {{"unprivileged_favorable", r.counts.unprivileged_favorable},
        {"unprivileged_unfavorable", r.counts.unprivileged_unfavorable},
        {"privileged_favorable", r.counts.privileged_favorable},
        {"privileged_unfavorable", r.counts.privileged_unfavorable}}},
      {"n", r.n},
      {"rate_unprivileged", num(r.rate_unprivileged)},
      {"rate_privileged", num(r.rate_privileged)},
      {"kind", r.kind == OutcomeKind::GroundTruth ? "ground_truth" : "predicted"},
  };
  if (r.accuracy) j["accuracy"] = num(*r.accuracy);
  return j;
}

}  // namespace fairaudit
