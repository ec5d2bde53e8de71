#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "fairaudit/dataset.hpp"
#include "fairaudit/errors.hpp"

namespace fairaudit {

// Label-stratified train/test split.
//
// Per-class train counts are floor(fraction * n_class); the leftover needed to
// reach floor(fraction * n_total) goes to classes by descending fractional
// remainder, favorable class first on ties. Instance selection uses a
// Fisher-Yates shuffle driven by std::mt19937_64 so partitions are identical
// across platforms for a given seed.
inline std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double train_fraction,
                                                    std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw DegenerateError("stratified_split: train_fraction must lie in (0,1)");

  const std::size_t n = ds.n_instances();
  std::vector<std::size_t> pos_idx, neg_idx;
  for (std::size_t i = 0; i < n; ++i)
    (ds.labels[i] == Outcome::Favorable ? pos_idx : neg_idx).push_back(i);
  if (pos_idx.size() < 2 || neg_idx.size() < 2)
    throw DegenerateError("stratified_split: each label class needs at least 2 instances");

  struct ClassPlan {
    std::vector<std::size_t>* idx;
    std::size_t n_train;
    double remainder;
  };
  ClassPlan plans[2] = {{&pos_idx, 0, 0.0}, {&neg_idx, 0, 0.0}};
  std::size_t total_train = static_cast<std::size_t>(std::floor(train_fraction * n));
  std::size_t assigned = 0;
  for (ClassPlan& p : plans) {
    const double exact = train_fraction * static_cast<double>(p.idx->size());
    p.n_train = static_cast<std::size_t>(std::floor(exact));
    p.remainder = exact - std::floor(exact);
    assigned += p.n_train;
  }
  // Distribute the leftover by descending remainder; the favorable class is
  // listed first, so stable ordering breaks ties in its favor.
  while (assigned < total_train) {
    ClassPlan* best = nullptr;
    for (ClassPlan& p : plans) {
      if (p.n_train >= p.idx->size()) continue;
      if (!best || p.remainder > best->remainder) best = &p;
    }
    if (!best) break;
    best->n_train += 1;
    best->remainder = -1.0;
    assigned += 1;
  }

  std::mt19937_64 rng(seed);
  auto shuffle_indices = [&rng](std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(v[i - 1], v[j]);
    }
  };

  std::vector<std::size_t> train_idx, test_idx;
  for (ClassPlan& p : plans) {
    shuffle_indices(*p.idx);
    for (std::size_t k = 0; k < p.idx->size(); ++k)
      (k < p.n_train ? train_idx : test_idx).push_back((*p.idx)[k]);
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {ds.subset(train_idx), ds.subset(test_idx)};
}

}  // namespace fairaudit
