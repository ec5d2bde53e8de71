#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/metrics.hpp"

namespace fairaudit {

struct TrainConfig {
  double learning_rate = 0.1;  // decayed by 1/sqrt(t)
  std::size_t max_iters = 2000;
  double l2_penalty = 1e-4;
  double epsilon = 0.05;  // allowed slack below tau on the training set
  std::uint64_t seed = 0;
  double multiplier_cap = 64.0;   // largest constraint multiplier tried
  double threshold_step = 0.01;   // decision-threshold grid resolution
};

// Per-column affine transform fitted on training data; identity for indicator
// columns (std 1, mean 0).
struct Standardization {
  std::vector<double> means;
  std::vector<double> stds;
};

struct GroupThresholds {
  double unprivileged = 0.5;
  double privileged = 0.5;

  double for_group(Group g) const {
    return g == Group::Unprivileged ? unprivileged : privileged;
  }
};

// A trained logistic scorer with per-group decision thresholds.
struct Model {
  std::vector<double> weights;
  double bias = 0.0;
  GroupThresholds group_thresholds;
  double tau = 0.0;
  double trained_epsilon = 0.0;
  bool converged = false;
  Standardization standardization;
};

inline double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

namespace detail {

inline double softplus(double s) {
  // log(1 + e^s), stable for large |s|
  return std::max(s, 0.0) + std::log1p(std::exp(-std::fabs(s)));
}

inline Standardization fit_standardization(const Dataset& ds) {
  const std::size_t n = ds.n_instances(), d = ds.n_features();
  Standardization st;
  st.means.assign(d, 0.0);
  st.stds.assign(d, 1.0);
  const bool have_mask = ds.numeric_kind.size() == d;
  for (std::size_t j = 0; j < d; ++j) {
    if (have_mask && !ds.numeric_kind[j]) continue;  // indicators pass through
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += ds.features.at(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = ds.features.at(i, j) - mean;
      var += diff * diff;
    }
    var /= static_cast<double>(n);
    st.means[j] = mean;
    st.stds[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return st;
}

inline FeatureMatrix apply_standardization(const FeatureMatrix& x, const Standardization& st) {
  FeatureMatrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      out.at(i, j) = (x.at(i, j) - st.means[j]) / st.stds[j];
  return out;
}

}  // namespace detail

struct ObjectiveValue {
  double loss = 0.0;
  std::vector<double> grad_w;
  double grad_b = 0.0;
};

// Full training objective and its analytic gradient:
//   mean log-loss + (l2/2)|w|^2 + lambda * max(0, tau - soft_dp)
// where soft_dp is the min/max ratio of group-mean sigmoid scores. lambda = 0
// reduces to plain regularized logistic regression.
inline ObjectiveValue logistic_objective(const FeatureMatrix& x, const std::vector<Outcome>& y,
                                         const std::vector<Group>& groups,
                                         const std::vector<double>& w, double b, double l2,
                                         double lambda, double tau) {
  const std::size_t n = x.rows(), d = x.cols();
  if (w.size() != d) throw DimensionError("logistic_objective: weight/feature width mismatch");
  if (y.size() != n) throw DimensionError("logistic_objective: label count mismatch");

  ObjectiveValue out;
  out.grad_w.assign(d, 0.0);

  std::vector<double> p(n);
  double nll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = b;
    const double* row = x.row(i);
    for (std::size_t j = 0; j < d; ++j) s += w[j] * row[j];
    p[i] = sigmoid(s);
    const double yi = y[i] == Outcome::Favorable ? 1.0 : 0.0;
    nll += detail::softplus(s) - s * yi;
    const double coef = (p[i] - yi) / static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) out.grad_w[j] += coef * row[j];
    out.grad_b += coef;
  }
  out.loss = nll / static_cast<double>(n);
  for (std::size_t j = 0; j < d; ++j) {
    out.loss += 0.5 * l2 * w[j] * w[j];
    out.grad_w[j] += l2 * w[j];
  }

  if (lambda > 0.0) {
    if (groups.size() != n) throw DimensionError("logistic_objective: group count mismatch");
    double sum_u = 0.0, sum_p = 0.0;
    std::size_t n_u = 0, n_p = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (groups[i] == Group::Unprivileged) {
        sum_u += p[i];
        ++n_u;
      } else {
        sum_p += p[i];
        ++n_p;
      }
    }
    if (n_u == 0 || n_p == 0)
      throw EmptyGroupError("logistic_objective: a group is empty during constrained training");
    const double mu_u = sum_u / static_cast<double>(n_u);
    const double mu_p = sum_p / static_cast<double>(n_p);
    const bool u_is_min = mu_u <= mu_p;
    const double a = u_is_min ? mu_u : mu_p;  // min group mean (sigmoid > 0, so a,mx > 0)
    const double mx = u_is_min ? mu_p : mu_u;
    const double soft_dp = a / mx;
    const double violation = tau - soft_dp;
    if (violation > 0.0) {
      out.loss += lambda * violation;
      // d(a/mx) per instance, folded into one coefficient each
      const double n_min = static_cast<double>(u_is_min ? n_u : n_p);
      const double n_max = static_cast<double>(u_is_min ? n_p : n_u);
      for (std::size_t i = 0; i < n; ++i) {
        const bool in_min = (groups[i] == Group::Unprivileged) == u_is_min;
        const double sp = p[i] * (1.0 - p[i]);
        const double dfd =
            in_min ? sp / (n_min * mx) : -a * sp / (n_max * mx * mx);
        const double coef = -lambda * dfd;  // gradient of the hinge term
        const double* row = x.row(i);
        for (std::size_t j = 0; j < d; ++j) out.grad_w[j] += coef * row[j];
        out.grad_b += coef;
      }
    }
  }
  return out;
}

namespace detail {

struct FitResult {
  std::vector<double> w;
  double b = 0.0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  bool decreased = false;
};

inline FitResult gradient_descent(const FeatureMatrix& x, const std::vector<Outcome>& y,
                                  const std::vector<Group>& groups, const TrainConfig& cfg,
                                  double lambda, double tau, std::vector<double> w0, double b0) {
  FitResult fit;
  fit.w = std::move(w0);
  fit.b = b0;
  ObjectiveValue cur = logistic_objective(x, y, groups, fit.w, fit.b, cfg.l2_penalty, lambda, tau);
  fit.initial_loss = cur.loss;
  for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
    const double lr = cfg.learning_rate / std::sqrt(static_cast<double>(t));
    double gnorm2 = cur.grad_b * cur.grad_b;
    for (std::size_t j = 0; j < fit.w.size(); ++j) gnorm2 += cur.grad_w[j] * cur.grad_w[j];
    if (gnorm2 < 1e-20) break;
    for (std::size_t j = 0; j < fit.w.size(); ++j) fit.w[j] -= lr * cur.grad_w[j];
    fit.b -= lr * cur.grad_b;
    cur = logistic_objective(x, y, groups, fit.w, fit.b, cfg.l2_penalty, lambda, tau);
  }
  fit.final_loss = cur.loss;
  for (double v : fit.w)
    if (!std::isfinite(v)) throw NonConvergenceError("training diverged to non-finite weights");
  if (!std::isfinite(fit.b))
    throw NonConvergenceError("training diverged to non-finite bias");
  fit.decreased = fit.final_loss < fit.initial_loss;
  return fit;
}

struct ThresholdSearch {
  bool found = false;
  double qu = 0.5, qp = 0.5;
  double acc = 0.0, dp = 0.0;
  // Point with the highest achievable training DP, for best-effort fallbacks.
  double closest_qu = 0.5, closest_qp = 0.5;
  double closest_dp = -1.0, closest_acc = 0.0;
};

// Exhaustive grid search over per-group decision thresholds. Maximizes
// training accuracy subject to dp >= tau - eps; ties resolve to the smallest
// (qu, qp) in lexicographic order. Probability equal to the threshold
// classifies as favorable.
inline ThresholdSearch threshold_search(const std::vector<double>& proba,
                                        const std::vector<Outcome>& y,
                                        const std::vector<Group>& groups, double tau, double eps,
                                        double step) {
  std::vector<double> up, un, pp, pn;  // (group, label) probability pools
  for (std::size_t i = 0; i < proba.size(); ++i) {
    const bool fav = y[i] == Outcome::Favorable;
    if (groups[i] == Group::Unprivileged)
      (fav ? up : un).push_back(proba[i]);
    else
      (fav ? pp : pn).push_back(proba[i]);
  }
  const std::size_t n_u = up.size() + un.size();
  const std::size_t n_p = pp.size() + pn.size();
  if (n_u == 0 || n_p == 0)
    throw EmptyGroupError("threshold_search: a group is empty in the training data");
  std::sort(up.begin(), up.end());
  std::sort(un.begin(), un.end());
  std::sort(pp.begin(), pp.end());
  std::sort(pn.begin(), pn.end());
  auto count_ge = [](const std::vector<double>& v, double q) {
    return static_cast<std::size_t>(v.end() - std::lower_bound(v.begin(), v.end(), q));
  };

  const std::size_t n_steps = static_cast<std::size_t>(std::floor(1.0 / step + 0.5)) - 1;
  std::vector<double> grid(n_steps);
  std::vector<std::size_t> fav_u(n_steps), cor_u(n_steps), fav_p(n_steps), cor_p(n_steps);
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double q = step * static_cast<double>(k + 1);
    grid[k] = q;
    const std::size_t gu_pos = count_ge(up, q), gu_neg = count_ge(un, q);
    const std::size_t gp_pos = count_ge(pp, q), gp_neg = count_ge(pn, q);
    fav_u[k] = gu_pos + gu_neg;
    cor_u[k] = gu_pos + (un.size() - gu_neg);
    fav_p[k] = gp_pos + gp_neg;
    cor_p[k] = gp_pos + (pn.size() - gp_neg);
  }

  const double n_total = static_cast<double>(n_u + n_p);
  const double min_dp = tau - eps - 1e-12;
  ThresholdSearch best;
  for (std::size_t a = 0; a < n_steps; ++a) {
    const double rate_u = static_cast<double>(fav_u[a]) / static_cast<double>(n_u);
    for (std::size_t b = 0; b < n_steps; ++b) {
      const double rate_p = static_cast<double>(fav_p[b]) / static_cast<double>(n_p);
      const double mx = std::max(rate_u, rate_p);
      const double dp = mx == 0.0 ? 1.0 : std::min(rate_u, rate_p) / mx;
      const double acc = static_cast<double>(cor_u[a] + cor_p[b]) / n_total;
      if (dp > best.closest_dp || (dp == best.closest_dp && acc > best.closest_acc)) {
        best.closest_dp = dp;
        best.closest_acc = acc;
        best.closest_qu = grid[a];
        best.closest_qp = grid[b];
      }
      if (dp >= min_dp && (!best.found || acc > best.acc)) {
        best.found = true;
        best.acc = acc;
        best.dp = dp;
        best.qu = grid[a];
        best.qp = grid[b];
      }
    }
  }
  return best;
}

}  // namespace detail

// Plain L2-regularized logistic regression fit by full-batch gradient descent
// with both decision thresholds at 0.5.
inline Model train_unconstrained(const Dataset& train, const TrainConfig& cfg) {
  if (train.n_instances() == 0)
    throw DegenerateError("train_unconstrained: empty training set");
  Model m;
  m.standardization = detail::fit_standardization(train);
  const FeatureMatrix x = detail::apply_standardization(train.features, m.standardization);
  std::vector<double> w0(train.n_features(), 0.0);
  auto fit = detail::gradient_descent(x, train.labels, train.protected_attr, cfg,
                                      /*lambda=*/0.0, /*tau=*/0.0, std::move(w0), 0.0);
  m.weights = std::move(fit.w);
  m.bias = fit.b;
  m.group_thresholds = {0.5, 0.5};
  m.tau = 0.0;
  m.trained_epsilon = cfg.epsilon;
  m.converged = fit.decreased;
  return m;
}

inline std::vector<double> predict_proba(const Model& m, const FeatureMatrix& features) {
  if (features.cols() != m.weights.size())
    throw DimensionError("predict_proba: feature width " + std::to_string(features.cols()) +
                         " does not match model width " + std::to_string(m.weights.size()));
  std::vector<double> out(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    double s = m.bias;
    const double* row = features.row(i);
    for (std::size_t j = 0; j < m.weights.size(); ++j)
      s += m.weights[j] * (row[j] - m.standardization.means[j]) / m.standardization.stds[j];
    out[i] = sigmoid(s);
  }
  return out;
}

inline OutcomeVector predict(const Model& m, const FeatureMatrix& features,
                             const std::vector<Group>& groups) {
  if (groups.size() != features.rows())
    throw DimensionError("predict: group vector does not match feature rows");
  const std::vector<double> proba = predict_proba(m, features);
  OutcomeVector out;
  out.kind = OutcomeKind::Predicted;
  out.outcomes.reserve(proba.size());
  for (std::size_t i = 0; i < proba.size(); ++i)
    out.outcomes.push_back(proba[i] >= m.group_thresholds.for_group(groups[i])
                               ? Outcome::Favorable
                               : Outcome::Unfavorable);
  return out;
}

// Trains a scorer whose thresholded training-set predictions reach a DP ratio
// of at least tau - epsilon while maximizing training accuracy.
//
// Two stages: (1) refit the scorer with an increasing multiplier on a hinge
// penalty max(0, tau - soft_dp), doubling the multiplier up to the cap and
// stopping early once the penalty is inactive at the fitted optimum (a larger
// multiplier cannot move an optimum whose penalty term is already zero);
// (2) grid-search per-group decision thresholds for the best feasible
// accuracy. With tau = 0 the constraint is vacuous and the unconstrained
// model is returned unchanged.
inline Model train_constrained(const Dataset& train, double tau, const TrainConfig& cfg,
                               bool best_effort = false) {
  if (!(tau >= 0.0 && tau <= 1.0))
    throw DegenerateError("train_constrained: tau must lie in [0,1]");
  if (tau == 0.0) return train_unconstrained(train, cfg);
  if (!train.has_both_groups())
    throw EmptyGroupError("train_constrained: both groups must occur in the training set");

  Model m;
  m.standardization = detail::fit_standardization(train);
  const FeatureMatrix x = detail::apply_standardization(train.features, m.standardization);

  std::vector<double> lambdas{0.0};
  for (double l = 1.0; l <= cfg.multiplier_cap; l *= 2.0) lambdas.push_back(l);

  struct Candidate {
    bool valid = false;
    std::vector<double> w;
    double b = 0.0;
    detail::ThresholdSearch th;
  };
  Candidate best, closest;

  std::vector<double> warm_w(train.n_features(), 0.0);
  double warm_b = 0.0;
  for (double lambda : lambdas) {
    auto fit = detail::gradient_descent(x, train.labels, train.protected_attr, cfg, lambda, tau,
                                        warm_w, warm_b);
    warm_w = fit.w;
    warm_b = fit.b;

    std::vector<double> proba(x.rows());
    double sum_u = 0.0, sum_p = 0.0;
    std::size_t n_u = 0, n_p = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double s = fit.b;
      const double* row = x.row(i);
      for (std::size_t j = 0; j < fit.w.size(); ++j) s += fit.w[j] * row[j];
      proba[i] = sigmoid(s);
      if (train.protected_attr[i] == Group::Unprivileged) {
        sum_u += proba[i];
        ++n_u;
      } else {
        sum_p += proba[i];
        ++n_p;
      }
    }

    auto th = detail::threshold_search(proba, train.labels, train.protected_attr, tau,
                                       cfg.epsilon, cfg.threshold_step);
    if (th.found && (!best.valid || th.acc > best.th.acc)) {
      best.valid = true;
      best.w = fit.w;
      best.b = fit.b;
      best.th = th;
    }
    if (!closest.valid || th.closest_dp > closest.th.closest_dp ||
        (th.closest_dp == closest.th.closest_dp && th.closest_acc > closest.th.closest_acc)) {
      closest.valid = true;
      closest.w = fit.w;
      closest.b = fit.b;
      closest.th = th;
    }

    const double mu_u = sum_u / static_cast<double>(n_u);
    const double mu_p = sum_p / static_cast<double>(n_p);
    const double soft_dp = std::min(mu_u, mu_p) / std::max(mu_u, mu_p);
    if (tau - soft_dp <= 0.0) break;  // penalty inactive: larger multipliers are no-ops
  }

  m.tau = tau;
  m.trained_epsilon = cfg.epsilon;
  if (best.valid) {
    m.weights = std::move(best.w);
    m.bias = best.b;
    m.group_thresholds = {best.th.qu, best.th.qp};
    m.converged = true;
    return m;
  }
  if (best_effort) {
    m.weights = std::move(closest.w);
    m.bias = closest.b;
    m.group_thresholds = {closest.th.closest_qu, closest.th.closest_qp};
    m.converged = false;
    return m;
  }
  throw InfeasibleError("train_constrained: no threshold pair reaches dp >= " +
                        std::to_string(tau) + " - " + std::to_string(cfg.epsilon) +
                        " on the training set");
}

inline nlohmann::json model_to_json(const Model& m) {
  return {{"weights", m.weights},
          {"bias", m.bias},
          {"group_thresholds",
           {{"unprivileged", m.group_thresholds.unprivileged},
            {"privileged", m.group_thresholds.privileged}}},
          {"tau", m.tau},
          {"trained_epsilon", m.trained_epsilon},
          {"converged", m.converged},
          {"standardization",
           {{"means", m.standardization.means}, {"stds", m.standardization.stds}}}};
}

}  // namespace fairaudit
