#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/metrics.hpp"
#include "fairaudit/split.hpp"
#include "fairaudit/trainer.hpp"

namespace fairaudit {

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;  // values that entered the aggregate
};

// NaN values (e.g. an undefined weighted-CDD summary) are excluded; stddev is
// the sample standard deviation, 0 for fewer than two values.
inline MeanStd aggregate(const std::vector<double>& values) {
  MeanStd out;
  double sum = 0.0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sum += v;
    ++out.count;
  }
  if (out.count == 0) {
    out.mean = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.mean = sum / static_cast<double>(out.count);
  if (out.count > 1) {
    double ss = 0.0;
    for (double v : values) {
      if (std::isnan(v)) continue;
      const double d = v - out.mean;
      ss += d * d;
    }
    out.stddev = std::sqrt(ss / static_cast<double>(out.count - 1));
  }
  return out;
}

struct RepeatMetrics {
  double dp = 0.0;
  double cdd_weighted = 0.0;
  double accuracy = 0.0;
  bool converged = false;
};

struct TauAggregate {
  double tau = 0.0;
  MeanStd dp;
  MeanStd cdd_weighted;
  MeanStd accuracy;
  std::size_t n_converged = 0;
};

// Aggregates of a repeated-split tau sweep, plus the per-repetition values
// they were reduced from.
struct SweepResult {
  std::vector<double> taus;
  std::vector<TauAggregate> per_tau;                  // one per tau, same order
  std::vector<std::vector<RepeatMetrics>> raw;        // [tau][repeat]
  std::string protected_attribute;
  std::string explanatory_attribute;
  std::string dataset_id;
  std::size_t n_repeats = 0;
  std::vector<std::uint64_t> seeds;
  std::string split_policy = "repeated_stratified_70_30";
  MeanStd ground_truth_test_dp;
  MeanStd ground_truth_test_cdd;
};

// Scores a trained model on held-out data.
inline FairnessReport evaluate(const Model& model, const Dataset& test) {
  OutcomeVector pred = predict(model, test.features, test.protected_attr);
  OutcomeVector truth{test.labels, OutcomeKind::GroundTruth};
  return full_report(pred, test.protected_attr, test.explanatory, &truth);
}

struct RepeatOutcome {
  Model model;
  FairnessReport test_report;
  double train_dp = 0.0;  // DP of the model's predictions on its training part
};

inline std::vector<std::pair<Dataset, Dataset>> make_splits(const Dataset& ds, std::size_t n,
                                                            std::uint64_t base_seed,
                                                            double fraction = 0.7) {
  std::vector<std::pair<Dataset, Dataset>> splits;
  splits.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    splits.push_back(stratified_split(ds, fraction, base_seed + i));
  return splits;
}

// Trains and evaluates one model per split, in parallel. Results are indexed
// by repetition, so the output is deterministic regardless of scheduling.
// Infeasible repetitions are collected and reported together unless
// best_effort is set.
inline std::vector<RepeatOutcome> run_on_splits(
    const std::vector<std::pair<Dataset, Dataset>>& splits, double tau, const TrainConfig& cfg,
    bool best_effort = false) {
  const std::size_t n = splits.size();
  std::vector<RepeatOutcome> results(n);
  std::vector<std::exception_ptr> errors(n);

  auto run_one = [&](std::size_t i) {
    const auto& [train, test] = splits[i];
    RepeatOutcome& out = results[i];
    out.model = train_constrained(train, tau, cfg, best_effort);
    OutcomeVector train_pred = predict(out.model, train.features, train.protected_attr);
    out.train_dp = dp_ratio(train_pred, train.protected_attr);
    out.test_report = evaluate(out.model, test);
  };

  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  const std::size_t n_threads = std::min(hw, n);
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        run_one(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          run_one(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::size_t n_infeasible = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const InfeasibleError&) {
      ++n_infeasible;
    } catch (...) {
      std::rethrow_exception(errors[i]);  // non-infeasible failures surface immediately
    }
  }
  if (n_infeasible > 0)
    throw InfeasibleError("run_on_splits: " + std::to_string(n_infeasible) + " of " +
                          std::to_string(n) + " repetitions found no feasible model at tau=" +
                          std::to_string(tau));
  return results;
}

// n repeated stratified 70/30 splits with seeds base_seed..base_seed+n-1;
// trains at the given tau on each training part and reports on each test part.
inline std::vector<FairnessReport> run_repeats(const Dataset& ds, double tau,
                                               const TrainConfig& cfg, std::size_t n,
                                               std::uint64_t base_seed,
                                               bool best_effort = false) {
  if (n < 1) throw DegenerateError("run_repeats: need at least one repetition");
  auto splits = make_splits(ds, n, base_seed);
  auto outcomes = run_on_splits(splits, tau, cfg, best_effort);
  std::vector<FairnessReport> reports;
  reports.reserve(outcomes.size());
  for (auto& o : outcomes) reports.push_back(std::move(o.test_report));
  return reports;
}

// Sweeps tau over the same repeated splits (paired comparisons across tau).
inline SweepResult tau_sweep(const Dataset& ds, const std::vector<double>& taus,
                             const TrainConfig& cfg, std::size_t n, std::uint64_t base_seed,
                             bool best_effort = false) {
  if (taus.empty()) throw DegenerateError("tau_sweep: taus must be non-empty");
  for (double t : taus)
    if (!(t >= 0.0 && t <= 1.0))
      throw DegenerateError("tau_sweep: tau " + std::to_string(t) + " outside [0,1]");
  if (n < 1) throw DegenerateError("tau_sweep: need at least one repetition");

  SweepResult res;
  res.taus = taus;
  res.dataset_id = ds.provenance;
  res.n_repeats = n;
  for (std::size_t i = 0; i < n; ++i) res.seeds.push_back(base_seed + i);

  const auto splits = make_splits(ds, n, base_seed);

  std::vector<double> gt_dp, gt_cdd;
  for (const auto& [train, test] : splits) {
    (void)train;
    OutcomeVector truth{test.labels, OutcomeKind::GroundTruth};
    FairnessReport rep = full_report(truth, test.protected_attr, test.explanatory);
    gt_dp.push_back(rep.dp);
    gt_cdd.push_back(rep.cdd_weighted);
  }
  res.ground_truth_test_dp = aggregate(gt_dp);
  res.ground_truth_test_cdd = aggregate(gt_cdd);

  for (double tau : taus) {
    auto outcomes = run_on_splits(splits, tau, cfg, best_effort);
    std::vector<RepeatMetrics> row;
    std::vector<double> dp, cdd, acc;
    TauAggregate agg;
    agg.tau = tau;
    for (const RepeatOutcome& o : outcomes) {
      RepeatMetrics m;
      m.dp = o.test_report.dp;
      m.cdd_weighted = o.test_report.cdd_weighted;
      m.accuracy = o.test_report.accuracy.value_or(
          std::numeric_limits<double>::quiet_NaN());
      m.converged = o.model.converged;
      if (m.converged) ++agg.n_converged;
      dp.push_back(m.dp);
      cdd.push_back(m.cdd_weighted);
      acc.push_back(m.accuracy);
      row.push_back(m);
    }
    agg.dp = aggregate(dp);
    agg.cdd_weighted = aggregate(cdd);
    agg.accuracy = aggregate(acc);
    res.per_tau.push_back(std::move(agg));
    res.raw.push_back(std::move(row));
  }
  return res;
}

inline nlohmann::json mean_std_to_json(const MeanStd& m) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  return {{"mean", num(m.mean)}, {"stddev", num(m.stddev)}, {"n", m.count}};
}

inline nlohmann::json sweep_result_to_json(const SweepResult& s) {
  nlohmann::json per = nlohmann::json::array();
  for (const TauAggregate& a : s.per_tau)
    per.push_back({{"tau", a.tau},
                   {"dp", mean_std_to_json(a.dp)},
                   {"cdd_weighted", mean_std_to_json(a.cdd_weighted)},
                   {"accuracy", mean_std_to_json(a.accuracy)},
                   {"n_converged", a.n_converged}});
  return {{"dataset_id", s.dataset_id},
          {"protected_attribute", s.protected_attribute},
          {"explanatory_attribute", s.explanatory_attribute},
          {"split_policy", s.split_policy},
          {"n_repeats", s.n_repeats},
          {"seeds", s.seeds},
          {"taus", s.taus},
          {"per_tau", per},
          {"ground_truth_test",
           {{"dp", mean_std_to_json(s.ground_truth_test_dp)},
            {"cdd_weighted", mean_std_to_json(s.ground_truth_test_cdd)}}}};
}

// Long-format CSV: dataset,protected,tau,repeat,metric,value.
inline std::string sweep_result_to_csv(const SweepResult& s) {
  std::string out = "dataset,protected,tau,repeat,metric,value\n";
  char buf[352];
  for (std::size_t ti = 0; ti < s.taus.size(); ++ti) {
    for (std::size_t r = 0; r < s.raw[ti].size(); ++r) {
      const RepeatMetrics& m = s.raw[ti][r];
      const struct {
        const char* name;
        double value;
      } rows[3] = {{"dp", m.dp}, {"cdd_weighted", m.cdd_weighted}, {"accuracy", m.accuracy}};
      for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%.17g,%zu,%s,%.17g\n", s.dataset_id.c_str(),
                      s.protected_attribute.c_str(), s.taus[ti], r, row.name, row.value);
        out += buf;
      }
    }
  }
  return out;
}

}  // namespace fairaudit
