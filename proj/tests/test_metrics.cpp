#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "fairaudit/csv.hpp"
#include "fairaudit/metrics.hpp"
#include "fairaudit/recipe.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using fairaudit::AllStrataUndefinedError;
using fairaudit::cdd_stratum;
using fairaudit::cdd_weighted;
using fairaudit::disparate_impact;
using fairaudit::dp_ratio;
using fairaudit::EmptyGroupError;
using fairaudit::FairnessReport;
using fairaudit::Group;
using fairaudit::LengthMismatchError;
using fairaudit::Outcome;
using fairaudit::OutcomeKind;
using fairaudit::OutcomeVector;
using fairaudit::positive_rate;
using fairaudit::spd;
using fairaudit::UnknownStratumError;

namespace {

OutcomeVector ov(std::initializer_list<int> xs) {
  OutcomeVector v;
  for (int x : xs) v.outcomes.push_back(x ? Outcome::Favorable : Outcome::Unfavorable);
  return v;
}

std::vector<Group> gv(std::initializer_list<int> xs) {
  std::vector<Group> v;
  for (int x : xs) v.push_back(x ? Group::Privileged : Group::Unprivileged);
  return v;
}

}  // namespace

TEST_CASE("positive_rate counts favorable outcomes per group", "[metrics]") {
  REQUIRE(positive_rate(ov({1, 1, 0, 0}), gv({0, 0, 1, 1}), Group::Unprivileged) == 1.0);
  REQUIRE(positive_rate(ov({1, 1, 0, 0}), gv({0, 0, 1, 1}), Group::Privileged) == 0.0);
  REQUIRE(positive_rate(ov({1, 0, 1, 0}), gv({1, 1, 1, 1}), Group::Privileged) == 0.5);
  // 6 instances, unprivileged gets 1 favorable of 3
  REQUIRE(positive_rate(ov({1, 0, 0, 1, 1, 0}), gv({0, 0, 0, 1, 1, 1}), Group::Unprivileged) ==
          Catch::Approx(1.0 / 3.0));
  REQUIRE_THROWS_AS(positive_rate(ov({1, 0}), gv({0, 0}), Group::Privileged), EmptyGroupError);
  REQUIRE_THROWS_AS(positive_rate(ov({1, 0, 1}), gv({0, 0}), Group::Privileged),
                    LengthMismatchError);
}

TEST_CASE("dp_ratio follows its edge-case table", "[metrics]") {
  REQUIRE(dp_ratio(ov({1, 0, 1, 0}), gv({0, 0, 1, 1})) == 1.0);            // 0.5 vs 0.5
  REQUIRE(dp_ratio(ov({1, 0, 0, 0, 1, 1, 0, 0}), gv({0, 0, 0, 0, 1, 1, 1, 1})) ==
          Catch::Approx(0.5));                                             // 0.25 vs 0.5
  REQUIRE(dp_ratio(ov({0, 0, 0, 0}), gv({0, 0, 1, 1})) == 1.0);            // both zero
  REQUIRE(dp_ratio(ov({1, 0, 0, 0}), gv({0, 0, 1, 1})) == 0.0);            // exactly one zero
  REQUIRE(dp_ratio(ov({0, 0, 1, 0}), gv({0, 0, 1, 1})) == 0.0);
}

TEST_CASE("spd and disparate impact report signed and ratio disparities", "[metrics]") {
  REQUIRE(spd(ov({1, 0, 1, 0}), gv({0, 0, 1, 1})) == 0.0);
  // rates 0.2 vs 0.4
  const OutcomeVector out = ov({1, 0, 0, 0, 0, 1, 1, 0, 0, 0});
  const std::vector<Group> g = gv({0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
  REQUIRE(spd(out, g) == Catch::Approx(-0.2));
  REQUIRE(disparate_impact(out, g) == Catch::Approx(0.5));
  // privileged rate zero, unprivileged positive: +infinity sentinel
  REQUIRE(std::isinf(disparate_impact(ov({1, 0, 0, 0}), gv({0, 0, 1, 1}))));
  // both zero: equal treatment
  REQUIRE(disparate_impact(ov({0, 0, 0, 0}), gv({0, 0, 1, 1})) == 1.0);
}

TEST_CASE("cdd_stratum compares group shares conditioned on the outcome", "[metrics]") {
  const std::vector<std::string> strata = {"r", "r", "r", "r"};
  // one favorable (unprivileged), three unfavorable (one unprivileged)
  {
    const auto [ratio, defined] =
        cdd_stratum(ov({1, 0, 0, 0}), gv({0, 0, 1, 1}), strata, "r");
    REQUIRE(defined);
    // p_plus = 1/1, p_minus = 1/3 -> ratio 1/3
    REQUIRE(ratio == Catch::Approx(1.0 / 3.0));
  }
  {
    // equal shares -> 1.0
    const auto [ratio, defined] =
        cdd_stratum(ov({1, 0, 1, 0}), gv({0, 0, 1, 1}), strata, "r");
    REQUIRE(defined);
    REQUIRE(ratio == 1.0);
  }
  {
    // only favorable outcomes -> undefined
    const auto [ratio, defined] =
        cdd_stratum(ov({1, 1, 1, 1}), gv({0, 0, 1, 1}), strata, "r");
    REQUIRE_FALSE(defined);
    REQUIRE(ratio == 0.0);
  }
  {
    // no unprivileged instance on either side -> both shares 0 -> undefined
    const auto [ratio, defined] =
        cdd_stratum(ov({1, 0, 1, 0}), gv({1, 1, 1, 1}), strata, "r");
    REQUIRE_FALSE(defined);
  }
  REQUIRE_THROWS_AS(cdd_stratum(ov({1, 0}), gv({0, 1}), {"a", "a"}, "zz"),
                    UnknownStratumError);
}

TEST_CASE("cdd_weighted weights defined strata by population", "[metrics]") {
  // Stratum a (4 rows): p_plus=1/2, p_minus=1/2 -> ratio 1. Stratum b (4
  // rows): undefined (favorable only). Weights renormalize to the defined 4.
  OutcomeVector out = ov({1, 1, 0, 0, 1, 1, 1, 1});
  std::vector<Group> g = gv({0, 1, 0, 1, 0, 1, 0, 1});
  std::vector<std::string> strata = {"a", "a", "a", "a", "b", "b", "b", "b"};
  const auto [summary, per] = cdd_weighted(out, g, strata);
  REQUIRE(summary == 1.0);
  REQUIRE(per.at("a").defined);
  REQUIRE(per.at("a").weight == 1.0);
  REQUIRE_FALSE(per.at("b").defined);
  REQUIRE(per.at("b").weight == 0.0);
}

TEST_CASE("cdd_weighted raises when every stratum is undefined", "[metrics]") {
  REQUIRE_THROWS_AS(cdd_weighted(ov({1, 1, 1, 1}), gv({0, 0, 1, 1}), {"a", "a", "b", "b"}),
                    AllStrataUndefinedError);
}

TEST_CASE("accuracy agrees positionally", "[metrics]") {
  REQUIRE(fairaudit::accuracy(ov({1, 0, 1, 0}), ov({1, 0, 1, 0})) == 1.0);
  REQUIRE(fairaudit::accuracy(ov({1, 0, 1, 0}), ov({0, 1, 0, 1})) == 0.0);
  REQUIRE(fairaudit::accuracy(ov({1, 0, 1, 0}), ov({1, 0, 1, 1})) == 0.75);
  REQUIRE_THROWS_AS(fairaudit::accuracy(ov({1}), ov({1, 0})), LengthMismatchError);
}

TEST_CASE("the bundled fixture reproduces its exact documented metrics", "[metrics]") {
  const auto recipe = fairaudit::load_recipe(synth::fixture("metrics_small_recipe.json"));
  const auto table = fairaudit::load_csv(synth::fixture("metrics_small.csv"), true);
  const auto ds = fairaudit::apply_recipe(table, recipe);

  OutcomeVector out;
  out.outcomes = ds.labels;
  const FairnessReport rep =
      fairaudit::full_report(out, ds.protected_attr, ds.explanatory);
  REQUIRE(rep.dp == 0.5);             // exactly representable
  REQUIRE(rep.cdd_weighted == 0.625);  // exactly representable
  REQUIRE(rep.rate_unprivileged == Catch::Approx(0.2));
  REQUIRE(rep.rate_privileged == Catch::Approx(0.4));
  REQUIRE(rep.spd == Catch::Approx(-0.2));
  REQUIRE(rep.disparate_impact == Catch::Approx(0.5));
  REQUIRE_FALSE(rep.accuracy.has_value());
  REQUIRE(rep.n == 40);
  REQUIRE(rep.counts.unprivileged_favorable + rep.counts.unprivileged_unfavorable +
              rep.counts.privileged_favorable + rep.counts.privileged_unfavorable ==
          40);

  // full_report agrees with the individual operations
  REQUIRE(rep.dp == dp_ratio(out, ds.protected_attr));
  REQUIRE(rep.spd == spd(out, ds.protected_attr));
  const auto [summary, per] = cdd_weighted(out, ds.protected_attr, ds.explanatory);
  REQUIRE(rep.cdd_weighted == summary);
  REQUIRE(per.size() == 2);
}

TEST_CASE("report JSON uses null for non-finite values", "[metrics]") {
  // privileged rate 0 -> disparate impact infinity; single stratum undefined
  OutcomeVector out = ov({1, 1, 1, 1});
  out.kind = OutcomeKind::Predicted;
  const FairnessReport rep =
      fairaudit::full_report(out, gv({0, 0, 0, 1}), {"a", "a", "a", "a"});
  REQUIRE(std::isnan(rep.cdd_weighted));
  const nlohmann::json j = fairaudit::report_to_json(rep);
  REQUIRE(j.at("cdd_weighted").is_null());
  REQUIRE(j.at("kind") == "predicted");
  REQUIRE(j.at("counts").at("unprivileged_favorable") == 3);
}

TEST_CASE("metrics agree with counting oracles on random instances", "[metrics][property]") {
  oracle::Rng rng(2026);
  for (int rep = 0; rep < 1000; ++rep) {
    const synth::Instance inst = synth::random_instance(rng);
    OutcomeVector out;
    out.outcomes = inst.outcomes;

    REQUIRE(positive_rate(out, inst.groups, Group::Unprivileged) ==
            *oracle::rate(inst.outcomes, inst.groups, Group::Unprivileged));
    REQUIRE(dp_ratio(out, inst.groups) == oracle::dp(inst.outcomes, inst.groups));
    REQUIRE(spd(out, inst.groups) == oracle::spd(inst.outcomes, inst.groups));
    REQUIRE(disparate_impact(out, inst.groups) == oracle::di(inst.outcomes, inst.groups));

    const auto expected = oracle::cdd_weighted(inst.outcomes, inst.groups, inst.strata);
    if (expected) {
      const auto [summary, per] = cdd_weighted(out, inst.groups, inst.strata);
      REQUIRE(summary == *expected);
    } else {
      REQUIRE_THROWS_AS(cdd_weighted(out, inst.groups, inst.strata),
                        AllStrataUndefinedError);
    }

    // random comparison vector for accuracy
    OutcomeVector truth;
    for (std::size_t i = 0; i < inst.outcomes.size(); ++i)
      truth.outcomes.push_back(rng.below(2) ? Outcome::Favorable : Outcome::Unfavorable);
    REQUIRE(fairaudit::accuracy(out, truth) ==
            oracle::accuracy(inst.outcomes, truth.outcomes));
  }
}

TEST_CASE("metric invariants hold on random instances", "[metrics][property]") {
  oracle::Rng rng(515);
  for (int rep = 0; rep < 300; ++rep) {
    const synth::Instance inst = synth::random_instance(rng);
    OutcomeVector out;
    out.outcomes = inst.outcomes;
    const double dp = dp_ratio(out, inst.groups);
    const double d = spd(out, inst.groups);

    REQUIRE(dp >= 0.0);
    REQUIRE(dp <= 1.0);

    // dp == 1 exactly when the group rates are equal, i.e. spd == 0
    if (dp == 1.0)
      REQUIRE(d == 0.0);
    else
      REQUIRE(d != 0.0);

    // permutation invariance
    std::vector<std::size_t> perm(inst.outcomes.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    OutcomeVector pout;
    std::vector<Group> pg;
    std::vector<std::string> ps;
    for (std::size_t i : perm) {
      pout.outcomes.push_back(inst.outcomes[i]);
      pg.push_back(inst.groups[i]);
      ps.push_back(inst.strata[i]);
    }
    REQUIRE(dp_ratio(pout, pg) == dp);
    try {
      const auto [orig, per1] = cdd_weighted(out, inst.groups, inst.strata);
      const auto [permuted, per2] = cdd_weighted(pout, pg, ps);
      REQUIRE(orig == permuted);
    } catch (const AllStrataUndefinedError&) {
      REQUIRE_THROWS_AS(cdd_weighted(pout, pg, ps), AllStrataUndefinedError);
    }

    // swapping the group encoding: dp invariant, spd negates, finite nonzero
    // disparate impact inverts
    std::vector<Group> swapped;
    for (Group g : inst.groups)
      swapped.push_back(g == Group::Unprivileged ? Group::Privileged : Group::Unprivileged);
    REQUIRE(dp_ratio(out, swapped) == dp);
    REQUIRE(spd(out, swapped) == -d);
    const double di = disparate_impact(out, inst.groups);
    if (std::isfinite(di) && di > 0.0)
      REQUIRE(disparate_impact(out, swapped) == Catch::Approx(1.0 / di));

    // per-stratum ratios stay in [0,1] and single-stratum weighting is exact
    for (const std::string& s : std::set<std::string>(inst.strata.begin(), inst.strata.end())) {
      const auto [ratio, defined] = cdd_stratum(out, inst.groups, inst.strata, s);
      if (defined) {
        REQUIRE(ratio >= 0.0);
        REQUIRE(ratio <= 1.0);
      }
    }
  }
}

TEST_CASE("a single stratum makes the weighted summary equal its ratio", "[metrics]") {
  OutcomeVector out = ov({1, 0, 0, 0, 1, 1});
  const std::vector<Group> g = gv({0, 0, 0, 1, 1, 1});
  const std::vector<std::string> strata(6, "only");
  const auto [summary, per] = cdd_weighted(out, g, strata);
  const auto [ratio, defined] = cdd_stratum(out, g, strata, "only");
  REQUIRE(defined);
  REQUIRE(summary == ratio);
  REQUIRE(per.at("only").weight == 1.0);
}
