#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cwrank/metrics.hpp"
#include "cwrank/rng.hpp"
#include "support/oracles.hpp"

using namespace cwrank;
using namespace cwrank::testing;

namespace {

RankedList list_from_labels(const std::vector<int>& labels) {
  // already in rank order: descending synthetic scores
  RankedList list;
  for (std::size_t i = 0; i < labels.size(); ++i)
    list.push_back({"id" + std::to_string(i),
                    static_cast<double>(labels.size() - i), labels[i]});
  return list;
}

}  // namespace

TEST_CASE("rank sorts by score then id") {
  std::vector<Prediction> preds = {{"a", "", 0.9, {}}, {"b", "", 0.1, {}}};
  std::vector<GoldEntry> gold = {{"a", 1}, {"b", 0}};
  RankedList list = rank(preds, gold);
  CHECK(list[0].id == "a");
  CHECK(list[1].id == "b");

  SUBCASE("equal scores break ties by ascending id") {
    preds = {{"b", "", 0.5, {}}, {"a", "", 0.5, {}}};
    list = rank(preds, gold);
    CHECK(list[0].id == "a");
    CHECK(list[1].id == "b");
  }
  SUBCASE("unknown prediction id is named in the error") {
    preds = {{"zz", "", 0.5, {}}};
    CHECK_THROWS_WITH_AS(rank(preds, gold), doctest::Contains("zz"),
                         std::invalid_argument);
  }
}

TEST_CASE("average_precision hand-computed cases") {
  CHECK(average_precision(list_from_labels({1, 0, 1, 0})) ==
        doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  CHECK(average_precision(list_from_labels({1, 1, 0, 0})) == doctest::Approx(1.0));
  // single positive ranked last of 5
  CHECK(average_precision(list_from_labels({0, 0, 0, 0, 1})) ==
        doctest::Approx(0.2));
  CHECK_THROWS_AS(average_precision(list_from_labels({0, 0})),
                  UndefinedMetricError);
}

TEST_CASE("reciprocal_rank") {
  CHECK(reciprocal_rank(list_from_labels({1, 0})) == 1.0);
  CHECK(reciprocal_rank(list_from_labels({0, 1})) == 0.5);
  CHECK(reciprocal_rank(list_from_labels({0, 0, 0, 1, 0, 0, 0, 0, 0, 0})) == 0.25);
  CHECK_THROWS_AS(reciprocal_rank(list_from_labels({0})), UndefinedMetricError);
}

TEST_CASE("r_precision") {
  CHECK(r_precision(list_from_labels({1, 0, 0, 1})) == doctest::Approx(0.5));
  CHECK(r_precision(list_from_labels({1, 1, 0, 0})) == doctest::Approx(1.0));
  CHECK(r_precision(list_from_labels({0, 0, 1, 1})) == doctest::Approx(0.0));
  CHECK_THROWS_AS(r_precision(list_from_labels({0})), UndefinedMetricError);
}

TEST_CASE("precision_at_k with the denominator-k rule") {
  CHECK(precision_at_k(list_from_labels({1, 1, 1, 0, 0}), 5) == doctest::Approx(0.6));
  // list shorter than k: missing ranks count as non-relevant
  CHECK(precision_at_k(list_from_labels({1, 1, 1}), 5) == doctest::Approx(0.6));
  CHECK(precision_at_k(list_from_labels({0, 1}), 1) == doctest::Approx(0.0));
  CHECK_THROWS_AS(precision_at_k(list_from_labels({1}), 0), std::invalid_argument);
}

TEST_CASE("evaluate on all-negative gold reports P@k but no MAP") {
  std::vector<Prediction> preds = {{"a", "", 0.9, {}}, {"b", "", 0.1, {}}};
  std::vector<GoldEntry> gold = {{"a", 0}, {"b", 0}};
  const MetricsReport report = evaluate(preds, gold);
  CHECK_FALSE(report.map.has_value());
  CHECK_FALSE(report.reciprocal_rank.has_value());
  CHECK_FALSE(report.r_precision.has_value());
  for (const auto& [k, v] : report.p_at_k) CHECK(v == 0.0);
}

TEST_CASE("evaluate matches the brute-force oracle on random instances") {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.next_below(20);
    OracleInstance inst;
    std::vector<Prediction> preds;
    std::vector<GoldEntry> gold;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = "s" + std::to_string(i);
      // coarse scores so ties actually happen
      const double score = static_cast<double>(rng.next_below(6)) / 5.0;
      const int label = static_cast<int>(rng.next_below(2));
      inst.ids.push_back(id);
      inst.scores.push_back(score);
      inst.labels.push_back(label);
      preds.push_back({id, "", score, {}});
      gold.push_back({id, label});
    }
    const OracleMetrics oracle = oracle_evaluate(inst);
    const MetricsReport report = evaluate(preds, gold);
    for (std::size_t j = 0; j < report.p_at_k.size(); ++j)
      REQUIRE(report.p_at_k[j].second == oracle.p_at_k[j]);
    REQUIRE(report.map.has_value() == oracle.defined);
    if (oracle.defined) {
      REQUIRE(*report.map == oracle.map);
      REQUIRE(*report.reciprocal_rank == oracle.r_rank);
      REQUIRE(*report.r_precision == oracle.r_precision);
    }
  }
}

TEST_CASE("metrics are invariant under monotone score transforms") {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.next_below(18);
    std::vector<Prediction> preds, transformed;
    std::vector<GoldEntry> gold;
    bool any_pos = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = "m" + std::to_string(i);
      const double score = rng.next_unit();
      const int label = static_cast<int>(rng.next_below(2));
      any_pos |= label == 1;
      preds.push_back({id, "", score, {}});
      // strictly increasing map: exp(3x) + x
      transformed.push_back({id, "", std::exp(3.0 * score) + score, {}});
      gold.push_back({id, label});
    }
    if (!any_pos) {
      gold[0].label = 1;
    }
    const MetricsReport a = evaluate(preds, gold);
    const MetricsReport b = evaluate(transformed, gold);
    CHECK(*a.map == *b.map);
    CHECK(*a.reciprocal_rank == *b.reciprocal_rank);
    CHECK(*a.r_precision == *b.r_precision);
    for (std::size_t j = 0; j < a.p_at_k.size(); ++j)
      CHECK(a.p_at_k[j].second == b.p_at_k[j].second);
  }
}

TEST_CASE("perfect ranking yields all ones when positives cover the cutoffs") {
  std::vector<Prediction> preds;
  std::vector<GoldEntry> gold;
  for (int i = 0; i < 120; ++i) {
    const std::string id = (i < 60 ? "p" : "n") + std::to_string(i);
    preds.push_back({id, "", i < 60 ? 1.0 : 0.0, {}});
    gold.push_back({id, i < 60 ? 1 : 0});
  }
  const MetricsReport report = evaluate(preds, gold);
  CHECK(*report.map == 1.0);
  CHECK(*report.reciprocal_rank == 1.0);
  CHECK(*report.r_precision == 1.0);
  for (const auto& [k, v] : report.p_at_k) CHECK(v == 1.0);
}
