#include <gtest/gtest.h>

#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <numbers>
#include <set>

#include "beamgraph/beamgraph.hpp"
#include "support.hpp"

using namespace beamgraph;
using namespace bgtest;

namespace {

double pi4() { return std::pow(std::numbers::pi, 4); }

const BoundEntry* find(const BoundReport& r, const std::string& name, std::size_t stated_k = 1) {
  for (const auto& e : r.entries) {
    if (e.name == name && (!e.applicable || e.stated_k == stated_k)) return &e;
  }
  return nullptr;
}

}  // namespace

TEST(Bounds, LowestEigenvalueUpperBounds) {
  const auto g = interval(1.5, ConditionKind::C4, 2.0);
  const auto mean = lambda1_upper_mean(g);
  ASSERT_TRUE(mean.applicable);
  EXPECT_DOUBLE_EQ(mean.value, 4.0 / 1.5);
  const auto s = scan_spectrum(g, 2);
  EXPECT_LE(s.eigenvalue(1), mean.value);
  EXPECT_TRUE(lambda1_upper_cos(g).strict);
  EXPECT_FALSE(lambda1_upper_mean(interval(1.0, ConditionKind::C4, kInfiniteStrength)).applicable);
}

TEST(Bounds, TotalLengthBoundIsAttainedOnTheInterval) {
  const auto g = interval(1.2);
  const auto b = total_length_upper(g, 1);
  EXPECT_NEAR(b.value, std::pow(std::numbers::pi / 1.2, 4), 1e-12);
  const auto s = scan_spectrum(g, 3);
  const auto report = evaluate_bounds(g, s, 2);
  const auto* e = find(report, "total_length_upper");
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->k, 2u);
  EXPECT_NEAR(e->margin, 0.0, 1e-9 * e->bound);
  EXPECT_TRUE(e->satisfied(report.slack));
}

TEST(Bounds, EulerianLoopAttainsItsBound) {
  const auto g = loop(1.7, ConditionKind::C4);
  const auto b = eulerian_lower(g);
  ASSERT_TRUE(b.applicable);
  EXPECT_NEAR(b.value, std::pow(2 * std::numbers::pi / 1.7, 4), 1e-9);
  const auto s = scan_spectrum(g, 4);
  EXPECT_LT(rel(s.eigenvalue(2), b.value), 1e-9);

  const auto cmp = eulerian_comparison_loop(interval(1.0, ConditionKind::C4, 1.0));
  EXPECT_DOUBLE_EQ(cmp.edges().front().length, 2.0);
  EXPECT_DOUBLE_EQ(cmp.vertices().front().condition.alpha, 4.0);
  EXPECT_FALSE(eulerian_lower(star({1.0, 1.0}, ConditionKind::C2)).applicable);
}

TEST(Bounds, StarLowerBoundFailsOnTheUnitStar) {
  const auto g = star({1.0, 1.0, 1.0});
  const auto b = star_lower(g);
  ASSERT_TRUE(b.applicable);
  EXPECT_DOUBLE_EQ(b.value, pi4());
  // Antisymmetric leg mode: tan t = -tanh t.
  auto f = [](double t) { return std::tan(t) + std::tanh(t); };
  boost::uintmax_t it = 100;
  const auto r = boost::math::tools::toms748_solve(f, 2.2, 2.5, boost::math::tools::eps_tolerance<double>(50), it);
  const double t = 0.5 * (r.first + r.second);
  const auto s = scan_spectrum(g, 4);
  EXPECT_EQ(s.nullity(1e-9), 1);
  EXPECT_LT(rel(s.eigenvalue(2), std::pow(t, 4)), 1e-9);
  EXPECT_EQ(s.clusters[1].multiplicity, 2);
  const auto report = evaluate_bounds(g, s, 1);
  const auto* e = find(report, "star_lower");
  ASSERT_NE(e, nullptr);
  EXPECT_FALSE(e->satisfied(report.slack));
  EXPECT_FALSE(star_lower(interval(1.0, ConditionKind::C1)).applicable);
}

TEST(Bounds, BettiAndPendantTreeBounds) {
  const auto g = read_graph(data_path("graphs/star3_c4.json"));
  const auto s = scan_spectrum(g, 12);
  for (std::size_t k = 1; k <= 6; ++k) {
    const auto b = betti_upper(g, k);
    ASSERT_TRUE(b.betti.applicable);
    ASSERT_TRUE(b.pendant_tree.applicable);
    ASSERT_TRUE(b.equilateral.applicable);
    const double lk = s.eigenvalue(k + 1);
    EXPECT_LE(lk, b.betti.value * (1 + 1e-9));
    EXPECT_LE(lk, b.pendant_tree.value * (1 + 1e-9));
    EXPECT_LE(lk, b.equilateral.value * (1 + 1e-9));
  }
  EXPECT_FALSE(betti_upper(loop(1.0, ConditionKind::C4), 1).pendant_tree.applicable);
}

TEST(Bounds, Lambda2Variants) {
  const auto l2 = lambda2_upper(loop(2.0, ConditionKind::C4));
  EXPECT_TRUE(l2.general.applicable);
  EXPECT_FALSE(l2.bipartite.applicable);
  EXPECT_TRUE(l2.equilateral.applicable);
  EXPECT_DOUBLE_EQ(l2.equilateral.value, pi4());
  const auto mixed = lambda2_upper(read_graph(data_path("graphs/mixed_triangle.json")));
  EXPECT_FALSE(mixed.general.applicable);
}

TEST(Bounds, WeylBracketAndCountingSandwich) {
  const auto g = star({1.0, 0.6, 1.3}, ConditionKind::C1);
  const auto s = scan_spectrum(g, 20);
  for (std::size_t k = 1; k <= 20; ++k) {
    const auto w = weyl_bracket(g, k, WeylVariant::C1);
    ASSERT_TRUE(w.applicable);
    EXPECT_LE(w.lower, s.eigenvalue(k) * (1 + 1e-9) + 1e-9);
    EXPECT_GE(w.upper * (1 + 1e-9), s.eigenvalue(k));
  }
  EXPECT_FALSE(weyl_bracket(g, 1, WeylVariant::C2).applicable);
  const auto sw = counting_sandwich(g, s, 50);
  ASSERT_TRUE(sw.applicable);
  EXPECT_GE(sw.points, 50u);
  EXPECT_EQ(sw.violations, 0u);
  EXPECT_GE(sw.worst, 0);
  EXPECT_FALSE(counting_sandwich(star({1.0, 1.0}), s).applicable);
}

TEST(Bounds, HingedDecoupling) {
  const auto v = hinged_decoupling(interval(1.0, ConditionKind::C1), 17 * pi4());
  ASSERT_EQ(v.size(), 2u);
  EXPECT_DOUBLE_EQ(v[0], pi4());
  EXPECT_DOUBLE_EQ(v[1], 16 * pi4());
}

TEST(Bounds, ReportListsInapplicableBoundsOnce) {
  const auto g = read_graph(data_path("graphs/mixed_triangle.json"));
  const auto s = scan_spectrum(g, 8);
  const auto report = evaluate_bounds(g, s, 5);
  std::set<std::string> inapplicable;
  for (const auto& e : report.entries) {
    if (e.applicable) continue;
    EXPECT_TRUE(inapplicable.insert(e.name).second) << e.name;
    EXPECT_FALSE(e.reason.empty());
  }
  EXPECT_TRUE(inapplicable.count("betti_upper"));
  EXPECT_TRUE(report.ok());
}
