#include <gtest/gtest.h>

#include <numbers>

#include "beamgraph/graph.hpp"
#include "support.hpp"

using namespace beamgraph;
using namespace bgtest;

TEST(Graph, ConstructionSortsByIdAndIndexesEndpoints) {
  MetricGraph g({{"z", cond(ConditionKind::C4)}, {"a", cond(ConditionKind::C4)}},
                {{"e2", 1.0, "z", "a"}, {"e1", 2.0, "a", "z"}});
  ASSERT_EQ(g.vertices().front().id, "a");
  ASSERT_EQ(g.edges().front().id, "e1");
  const auto a = g.vertex_index("a");
  ASSERT_EQ(g.degree(a), 2u);
  EXPECT_EQ(g.endpoints(a)[0], (Endpoint{"e1", Side::Left}));
  EXPECT_EQ(g.endpoints(a)[1], (Endpoint{"e2", Side::Right}));
  EXPECT_DOUBLE_EQ(g.total_length(), 3.0);
  EXPECT_DOUBLE_EQ(g.max_edge_length(), 2.0);
  EXPECT_TRUE(validate(g).ok());
}

TEST(Graph, SelfLoopContributesTwoEndpoints) {
  const auto g = loop(1.0, ConditionKind::C4);
  EXPECT_EQ(g.degree(0), 2u);
  EXPECT_EQ(betti_number(g), 1u);
  EXPECT_FALSE(is_bipartite(g));
  EXPECT_TRUE(graph_predicates(g).eulerian);
}

TEST(Graph, ValidationNamesEveryViolation) {
  MetricGraph g({{"p", cond(ConditionKind::C2, 0.0, {{{"e1", Side::Left}, 1.0}})}, {"q", cond(ConditionKind::C4)}},
                {{"e1", 1.0, "p", "q"}, {"e2", -1.0, "q", "p"}, {"e3", 1.0, "q", "nowhere"}});
  const auto r = validate(g);
  ASSERT_FALSE(r.ok());
  const auto s = r.summary();
  EXPECT_NE(s.find("sigma incomplete at vertex 'p'"), std::string::npos);
  EXPECT_NE(s.find("non-positive length on edge 'e2'"), std::string::npos);
  EXPECT_NE(s.find("dangling endpoint on edge 'e3'"), std::string::npos);
  EXPECT_THROW(require_valid(g), GraphError);
}

TEST(Graph, SigmaRulesPerKind) {
  auto g = interval(1.0);
  auto bad = g.with_condition("a", cond(ConditionKind::C4, 0.0, {{{"e", Side::Left}, 1.0}}));
  EXPECT_NE(validate(bad).summary().find("sigma present on C4"), std::string::npos);
  auto zero = g.with_condition("a", cond(ConditionKind::C3, 0.0, {{{"e", Side::Left}, 0.0}}));
  EXPECT_NE(validate(zero).summary().find("sigma zero"), std::string::npos);
  auto foreign = g.with_condition("a", cond(ConditionKind::C2, 0.0, {{{"e", Side::Left}, 1.0}, {{"e", Side::Right}, 1.0}}));
  EXPECT_NE(validate(foreign).summary().find("is not an endpoint"), std::string::npos);
  auto neg_inf = g.with_condition("a", cond(ConditionKind::C4, -kInfiniteStrength));
  EXPECT_NE(validate(neg_inf).summary().find("invalid strength"), std::string::npos);
  auto pos_inf = g.with_condition("a", cond(ConditionKind::C4, kInfiniteStrength));
  EXPECT_TRUE(validate(pos_inf).ok());
  EXPECT_TRUE(pos_inf.vertex("a").condition.extended());
}

TEST(Graph, DisconnectedOnlyAsExplicitUnion) {
  MetricGraph g({{"a", cond(ConditionKind::C4)}, {"b", cond(ConditionKind::C4)}, {"c", cond(ConditionKind::C4)},
                 {"d", cond(ConditionKind::C4)}},
                {{"e1", 1.0, "a", "b"}, {"e2", 1.0, "c", "d"}});
  EXPECT_EQ(g.component_count(), 2u);
  EXPECT_NE(validate(g).summary().find("disconnected graph"), std::string::npos);
  EXPECT_TRUE(validate(g.as_union()).ok());
}

TEST(Graph, PredicatesOnSmallFamilies) {
  const auto s = star({1.0, 2.0, 3.0});
  EXPECT_TRUE(is_tree(s));
  EXPECT_TRUE(is_star(s));
  EXPECT_TRUE(is_bipartite(s));
  EXPECT_FALSE(graph_predicates(s).eulerian);
  EXPECT_FALSE(graph_predicates(s).equilateral);
  EXPECT_EQ(bridges(s).size(), 3u);
  EXPECT_EQ(betti_number(s), 0u);

  MetricGraph tri({{"a", cond(ConditionKind::C4)}, {"b", cond(ConditionKind::C4)}, {"c", cond(ConditionKind::C4)}},
                  {{"ab", 1.0, "a", "b"}, {"bc", 1.0, "b", "c"}, {"ca", 1.0, "c", "a"}});
  EXPECT_TRUE(graph_predicates(tri).eulerian);
  EXPECT_TRUE(graph_predicates(tri).equilateral);
  EXPECT_FALSE(is_bipartite(tri));
  EXPECT_TRUE(bridges(tri).empty());
  EXPECT_EQ(betti_number(tri), 1u);

  MetricGraph path({{"a", cond(ConditionKind::C4)}, {"b", cond(ConditionKind::C4)}, {"c", cond(ConditionKind::C4)},
                    {"d", cond(ConditionKind::C4)}},
                   {{"e1", 1.0, "a", "b"}, {"e2", 1.0, "b", "c"}, {"e3", 1.0, "c", "d"}});
  EXPECT_TRUE(is_tree(path));
  EXPECT_FALSE(is_star(path));
  const auto colours = bipartition(path);
  EXPECT_NE(colours[0], colours[1]);
  EXPECT_EQ(colours[0], colours[2]);
}

TEST(Graph, EndpointTextRoundTrip) {
  const Endpoint ep{"edge:with:colons", Side::Right};
  const auto parsed = parse_endpoint(to_string(ep));
  ASSERT_TRUE(parsed);
  EXPECT_EQ(*parsed, ep);
  EXPECT_FALSE(parse_endpoint("e:middle"));
  EXPECT_FALSE(parse_endpoint("noside"));
  for (auto k : {ConditionKind::C1, ConditionKind::C2, ConditionKind::C3, ConditionKind::C4}) {
    EXPECT_EQ(parse_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_kind("C5"));
}

TEST(Graph, AngleConditionUsesSines) {
  const auto g = star({1.0, 1.0}, ConditionKind::C2);
  const double angles[] = {std::numbers::pi / 2, std::numbers::pi / 6};
  const auto c = angle_condition(g, "c", angles);
  EXPECT_EQ(c.kind, ConditionKind::C2);
  EXPECT_NEAR(c.sigma.at({"e0", Side::Left}), 1.0, 1e-15);
  EXPECT_NEAR(c.sigma.at({"e1", Side::Left}), 0.5, 1e-15);
  const double flat[] = {std::numbers::pi, 1.0};
  EXPECT_THROW(angle_condition(g, "c", flat), GraphError);
  const double short_list[] = {1.0};
  EXPECT_THROW(angle_condition(g, "c", short_list), GraphError);
}

TEST(Graph, UnknownIdsThrow) {
  const auto g = interval(1.0);
  EXPECT_THROW((void)g.vertex("x"), GraphError);
  EXPECT_THROW((void)g.edge("x"), GraphError);
  EXPECT_FALSE(g.find_vertex("x"));
}
