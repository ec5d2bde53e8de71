#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fairaudit/stats.hpp"
#include "support/oracles.hpp"

using fairaudit::chi2_sf;
using fairaudit::chi_square;
using fairaudit::ChiSquareResult;
using fairaudit::contingency_table;
using fairaudit::ContingencyTable;
using fairaudit::DegenerateError;
using fairaudit::LengthMismatchError;
using fairaudit::ZeroMarginError;

namespace {

ContingencyTable table(std::vector<std::vector<std::size_t>> counts) {
  ContingencyTable t;
  t.counts = std::move(counts);
  for (std::size_t i = 0; i < t.counts.size(); ++i) t.row_labels.push_back("r" + std::to_string(i));
  for (std::size_t j = 0; j < t.counts[0].size(); ++j)
    t.col_labels.push_back("c" + std::to_string(j));
  return t;
}

}  // namespace

TEST_CASE("contingency_table cross-tabulates with sorted labels", "[stats]") {
  const ContingencyTable t =
      contingency_table({"x", "x", "y", "y"}, {"0", "1", "0", "1"});
  REQUIRE(t.row_labels == std::vector<std::string>{"x", "y"});
  REQUIRE(t.col_labels == std::vector<std::string>{"0", "1"});
  REQUIRE(t.counts == std::vector<std::vector<std::size_t>>{{1, 1}, {1, 1}});

  const ContingencyTable wide =
      contingency_table({"b", "a", "c", "a"}, {"1", "0", "1", "1"});
  REQUIRE(wide.row_labels == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(wide.n_rows() == 3);
  REQUIRE(wide.n_cols() == 2);
  REQUIRE(wide.counts[0][0] == 1);  // (a, 0)
  REQUIRE(wide.counts[0][1] == 1);  // (a, 1)
}

TEST_CASE("contingency_table rejects degenerate inputs", "[stats]") {
  REQUIRE_THROWS_AS(contingency_table({"x", "x"}, {"0", "1"}), DegenerateError);
  REQUIRE_THROWS_AS(contingency_table({"x", "y"}, {"0", "0"}), DegenerateError);
  REQUIRE_THROWS_AS(contingency_table({"x"}, {"0", "1"}), LengthMismatchError);
}

TEST_CASE("a uniform table has zero statistic and p = 1", "[stats]") {
  const ChiSquareResult r = chi_square(table({{10, 10}, {10, 10}}));
  REQUIRE(r.x2 == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(r.dof == 1);
  REQUIRE(r.p == Catch::Approx(1.0));
  REQUIRE(r.cramers_v == Catch::Approx(0.0).margin(1e-9));
  REQUIRE(r.n == 40);
}

TEST_CASE("the worked 2x2 example reproduces its statistic, p, and V", "[stats]") {
  const ChiSquareResult r = chi_square(table({{20, 10}, {10, 20}}));
  REQUIRE(r.x2 == Catch::Approx(20.0 / 3.0).epsilon(1e-9));
  REQUIRE(r.dof == 1);
  REQUIRE(r.p == Catch::Approx(0.009823).epsilon(1e-3));
  REQUIRE(r.cramers_v == Catch::Approx(1.0 / 3.0).epsilon(1e-9));
  REQUIRE(fairaudit::format_chi_square(r) == "X²(1, N=60)=6.67, p=0.0098, V=0.33");
}

TEST_CASE("a perfectly associated table has V = 1", "[stats]") {
  const ChiSquareResult r = chi_square(table({{10, 0}, {0, 10}}));
  REQUIRE(r.cramers_v == Catch::Approx(1.0));
}

TEST_CASE("zero margins are rejected", "[stats]") {
  REQUIRE_THROWS_AS(chi_square(table({{0, 5}, {0, 5}})), ZeroMarginError);
  REQUIRE_THROWS_AS(chi_square(table({{0, 0}, {5, 5}})), ZeroMarginError);
}

TEST_CASE("survival function matches classical quantiles", "[stats]") {
  REQUIRE(chi2_sf(0.0, 1) == 1.0);
  REQUIRE(chi2_sf(-1.0, 3) == 1.0);
  REQUIRE(chi2_sf(3.841, 1) == Catch::Approx(0.05).margin(1e-3));
  REQUIRE(chi2_sf(6.635, 1) == Catch::Approx(0.01).margin(1e-3));
  REQUIRE(chi2_sf(5.991, 2) == Catch::Approx(0.05).margin(1e-3));
  REQUIRE(chi2_sf(24.996, 15) == Catch::Approx(0.05).margin(1e-3));
}

TEST_CASE("survival function agrees with quadrature across regimes", "[stats][property]") {
  // Spans both internal branches (series for small x, continued fraction for
  // large) across a range of degrees of freedom.
  for (const double x : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0}) {
    for (std::size_t k = 1; k <= 20; ++k) {
      const double expected = oracle::chi2_sf_quadrature(x, k);
      REQUIRE_THAT(chi2_sf(x, k),
                   Catch::Matchers::WithinAbs(expected, 1e-8));
    }
  }
}

TEST_CASE("survival plus lower tail is one", "[stats][property]") {
  for (const double x : {0.1, 1.0, 10.0, 100.0}) {
    for (std::size_t k = 1; k <= 20; ++k) {
      const double total = chi2_sf(x, k) + oracle::chi2_cdf_quadrature(x, k);
      REQUIRE_THAT(total, Catch::Matchers::WithinAbs(1.0, 1e-8));
    }
  }
}

TEST_CASE("survival function decreases in x", "[stats][property]") {
  for (std::size_t k = 1; k <= 10; ++k) {
    double prev = 1.0;
    for (double x = 0.25; x <= 40.0; x += 0.25) {
      const double s = chi2_sf(x, k);
      REQUIRE(s <= prev + 1e-15);
      REQUIRE(s >= 0.0);
      prev = s;
    }
  }
}

TEST_CASE("the statistic matches a from-scratch recount on random tables", "[stats][property]") {
  oracle::Rng rng(99);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t r = 2 + rng.below(4), c = 2 + rng.below(4);
    std::vector<std::vector<std::size_t>> counts(r, std::vector<std::size_t>(c));
    for (auto& row : counts)
      for (auto& cell : row) cell = 1 + rng.below(50);
    const ChiSquareResult res = chi_square(table(counts));
    REQUIRE_THAT(res.x2, Catch::Matchers::WithinRel(oracle::chi2_statistic(counts), 1e-12) ||
                             Catch::Matchers::WithinAbs(oracle::chi2_statistic(counts), 1e-12));
    REQUIRE(res.dof == (r - 1) * (c - 1));
    REQUIRE(res.cramers_v >= 0.0);
    REQUIRE(res.cramers_v <= 1.0);

    // transposing the table leaves the statistic unchanged
    std::vector<std::vector<std::size_t>> tr(c, std::vector<std::size_t>(r));
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) tr[j][i] = counts[i][j];
    const ChiSquareResult rt = chi_square(table(tr));
    REQUIRE(rt.x2 == Catch::Approx(res.x2).epsilon(1e-12));
    REQUIRE(rt.dof == res.dof);
    REQUIRE(rt.cramers_v == Catch::Approx(res.cramers_v).epsilon(1e-12));

    // scaling every count by m scales the statistic by m and keeps V
    const std::size_t m = 3;
    std::vector<std::vector<std::size_t>> scaled = counts;
    for (auto& row : scaled)
      for (auto& cell : row) cell *= m;
    const ChiSquareResult rs = chi_square(table(scaled));
    REQUIRE(rs.x2 == Catch::Approx(res.x2 * static_cast<double>(m)).epsilon(1e-9));
    REQUIRE(rs.cramers_v == Catch::Approx(res.cramers_v).epsilon(1e-9));
  }
}

TEST_CASE("row order does not change the test", "[stats][property]") {
  oracle::Rng rng(7);
  std::vector<std::string> a, b;
  for (int i = 0; i < 200; ++i) {
    a.push_back("a" + std::to_string(rng.below(3)));
    b.push_back("b" + std::to_string(rng.below(4)));
  }
  const ChiSquareResult before = chi_square(contingency_table(a, b));
  // shuffle both vectors with the same permutation
  for (std::size_t i = a.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(a[i - 1], a[j]);
    std::swap(b[i - 1], b[j]);
  }
  const ChiSquareResult after = chi_square(contingency_table(a, b));
  REQUIRE(before.x2 == after.x2);
  REQUIRE(before.p == after.p);
  REQUIRE(before.cramers_v == after.cramers_v);
}

TEST_CASE("chi-square JSON carries all fields", "[stats]") {
  const ChiSquareResult r = chi_square(table({{20, 10}, {10, 20}}));
  const nlohmann::json j = fairaudit::chi_square_to_json(r);
  REQUIRE(j.at("dof") == 1);
  REQUIRE(j.at("n") == 60);
  REQUIRE(j.at("x2").get<double>() == Catch::Approx(6.6667).epsilon(1e-4));
}
