#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "beamgraph/beamgraph.hpp"
#include "support.hpp"

using namespace beamgraph;
using namespace bgtest;

namespace {

double pi4() { return std::pow(std::numbers::pi, 4); }

}  // namespace

TEST(MeshSpec, ElementCounts) {
  EXPECT_EQ(MeshSpec::uniform(12).elements_for(3.0), 12);
  const auto m = MeshSpec::by_length(0.1, 3);
  EXPECT_EQ(m.elements_for(1.0), 10);
  EXPECT_EQ(m.elements_for(0.05), 3);
  EXPECT_EQ(m.refined().elements_for(1.0), 20);
  EXPECT_EQ(MeshSpec::uniform(8).refined().elements_per_edge, 16);
}

TEST(Fem, MatricesAreSymmetricAndEliminateEssentialDofs) {
  const auto sys = assemble_fem(interval(1.0), MeshSpec::uniform(10));
  EXPECT_EQ(sys.mass.rows(), 20);
  EXPECT_LT((sys.mass - sys.mass.transpose()).norm(), 1e-14 * sys.mass.norm());
  EXPECT_LT((sys.stiffness - sys.stiffness.transpose()).norm(), 1e-14 * sys.stiffness.norm());
  Eigen::LLT<Eigen::MatrixXd> llt(sys.mass);
  EXPECT_EQ(llt.info(), Eigen::Success);

  const auto free = assemble_fem(interval(1.0, ConditionKind::C1), MeshSpec::uniform(10));
  EXPECT_EQ(free.mass.rows(), 22);
  const auto hinged = assemble_fem(interval(1.0, ConditionKind::C1, kInfiniteStrength), MeshSpec::uniform(10));
  EXPECT_EQ(hinged.mass.rows(), 20);
  EXPECT_EQ(hinged.value_dof[0], -1);
  EXPECT_EQ(hinged.value_dof[1], -1);
}

TEST(Fem, IntervalConvergesAtFourthOrderFromAbove) {
  const auto g = interval(std::numbers::pi);
  FemOptions opt;
  opt.mesh = MeshSpec::uniform(64);
  const auto coarse = solve_fem(g, 5, opt);
  opt.mesh = opt.mesh.refined();
  const auto fine = solve_fem(g, 5, opt);
  EXPECT_NEAR(coarse.eigenvalue(1), 0.0, 1e-9);
  for (int k = 2; k <= 5; ++k) {
    const double exact = std::pow(k - 1, 4);
    EXPECT_GT(coarse.eigenvalue(k), exact);
    EXPECT_GT(fine.eigenvalue(k), exact);
    const double e64 = coarse.eigenvalue(k) - exact;
    const double e128 = fine.eigenvalue(k) - exact;
    if (k >= 3) EXPECT_NEAR(e64 / e128, 16.0, 0.5) << k;
    const double kh = (k - 1) * std::numbers::pi / 64.0;
    EXPECT_NEAR(e64 / exact, std::pow(kh, 4) / 720.0, 0.05 * std::pow(kh, 4) / 720.0) << k;
  }
  for (int k = 2; k <= 4; ++k) EXPECT_LT(rel(coarse.eigenvalue(k), std::pow(k - 1, 4)), 1e-6);
}

TEST(Fem, HingedAndClampedEnds) {
  FemOptions opt;
  opt.mesh = MeshSpec::uniform(64);
  const auto hinged = solve_fem(interval(1.0, ConditionKind::C1, kInfiniteStrength), 3, opt);
  for (int k = 1; k <= 3; ++k) EXPECT_LT(rel(hinged.eigenvalue(k), std::pow(k, 4) * pi4()), 1e-6);
  const auto clamped = solve_fem(interval(1.0, ConditionKind::C4, kInfiniteStrength), 1, opt);
  EXPECT_LT(rel(clamped.eigenvalue(1), std::pow(4.730040744862704, 4)), 1e-7);
  for (const auto& c : hinged.clusters) {
    for (const auto& m : c.modes) {
      EXPECT_EQ(m.vertex_values[0], 0.0);
      EXPECT_EQ(m.vertex_values[1], 0.0);
    }
  }
}

TEST(Fem, PeriodicLoopClustersDoubles) {
  FemOptions opt;
  opt.mesh = MeshSpec::uniform(96);
  const auto s = solve_fem(loop(2 * std::numbers::pi, ConditionKind::C2), 5, opt);
  ASSERT_GE(s.clusters.size(), 3u);
  EXPECT_EQ(s.clusters[0].multiplicity, 1);
  EXPECT_EQ(s.clusters[1].multiplicity, 2);
  EXPECT_EQ(s.clusters[2].multiplicity, 2);
  EXPECT_LT(rel(s.clusters[2].value, 16.0), 1e-6);
  EXPECT_EQ(s.clusters[1].modes.size(), 2u);
}

TEST(Fem, ModesAreMassNormalized) {
  const auto g = star({1.0, 0.6, 1.2}, ConditionKind::C2);
  FemOptions opt;
  opt.mesh = MeshSpec::uniform(16);
  const auto sys = assemble_fem(g, opt.mesh);
  const auto s = solve_fem(g, 4, opt);
  for (const auto& c : s.clusters) {
    for (const auto& m : c.modes) {
      ASSERT_EQ(m.nodal.size(), g.edge_count());
      double norm = 0.0;
      for (std::size_t e = 0; e < g.edge_count(); ++e) {
        const double h = g.edges()[e].length / 16.0;
        const auto& n = m.nodal[e];
        ASSERT_EQ(n.size(), 34u);
        for (int el = 0; el < 16; ++el) {
          const double u0 = n[2 * el], d0 = n[2 * el + 1], u1 = n[2 * el + 2], d1 = n[2 * el + 3];
          const auto rule = gauss_legendre(6, 0.0, 1.0);
          for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double t = rule.nodes[i];
            const double h00 = 2 * t * t * t - 3 * t * t + 1;
            const double h10 = t * t * t - 2 * t * t + t;
            const double h01 = -2 * t * t * t + 3 * t * t;
            const double h11 = t * t * t - t * t;
            const double u = h00 * u0 + h10 * h * d0 + h01 * u1 + h11 * h * d1;
            norm += rule.weights[i] * h * u * u;
          }
        }
      }
      EXPECT_NEAR(norm, 1.0, 1e-10);
    }
  }
  EXPECT_GT(sys.mass.rows(), 0);
}

TEST(Fem, MatchesSecularOnMixedGraph) {
  const auto g = read_graph(data_path("graphs/mixed_triangle.json"));
  const auto sec = scan_spectrum(g, 6);
  FemOptions opt;
  opt.mesh = MeshSpec::uniform(64);
  opt.compute_modes = false;
  const auto fem = solve_fem(g, 6, opt);
  for (int k = 1; k <= 6; ++k) {
    EXPECT_LT(rel(fem.eigenvalue(k), sec.eigenvalue(k)), 1e-6) << k;
    EXPECT_GE(fem.eigenvalue(k), sec.eigenvalue(k) - 1e-9 * std::max(1.0, sec.eigenvalue(k)));
  }
}

TEST(Fem, TooFewDofsIsASolverError) {
  FemOptions opt;
  opt.mesh = MeshSpec::uniform(1);
  EXPECT_THROW(solve_fem(interval(1.0, ConditionKind::C4, kInfiniteStrength), 3, opt), SolverError);
}
