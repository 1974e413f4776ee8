#pragma once

// Conforming Hermite-cubic finite elements for the beam form
//   int |phi''|^2 + sum_v alpha_v |phi(v)|^2   over   int |phi|^2.
// Essential vertex conditions (continuity, derivative constraints, phi = 0
// for alpha = inf) are built into the discrete space by eliminating degrees
// of freedom; the remaining conditions hold weakly.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "beamgraph/edge_basis.hpp"
#include "beamgraph/graph.hpp"
#include "beamgraph/spectrum.hpp"

namespace beamgraph {

struct MeshSpec {
  int elements_per_edge = 64;
  /// When positive, each edge gets max(min_elements, ceil(length / max_element_length)) elements.
  double max_element_length = 0.0;
  int min_elements = 2;

  static MeshSpec uniform(int n) {
    MeshSpec m;
    m.elements_per_edge = n;
    return m;
  }

  static MeshSpec by_length(double h, int min_elements = 2) {
    MeshSpec m;
    m.max_element_length = h;
    m.min_elements = min_elements;
    return m;
  }

  [[nodiscard]] int elements_for(double length) const {
    if (max_element_length > 0) {
      const auto n = static_cast<int>(std::ceil(length / max_element_length - 1e-9));
      return std::max(min_elements, n);
    }
    return elements_per_edge;
  }

  /// Every element halved.
  [[nodiscard]] MeshSpec refined() const {
    MeshSpec m = *this;
    m.elements_per_edge *= 2;
    m.max_element_length /= 2;
    m.min_elements *= 2;
    return m;
  }
};

struct FemOptions {
  MeshSpec mesh = MeshSpec::uniform(64);
  bool compute_modes = true;
  /// Recompute each eigenvalue as the Rayleigh quotient of the unshifted pair.
  bool rayleigh_refine = true;
  /// Consecutive eigenvalues closer than this (relative) form one cluster.
  double cluster_tol = 1e-9;
};

/// Reduced stiffness and mass matrices of the constrained discrete space.
struct FemSystem {
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd mass;
  std::vector<int> elements;
  /// Per vertex: reduced index of the vertex value, -1 when fixed to zero.
  std::vector<int> value_dof;
  /// Per edge, per node, per component (value, derivative): reduced combination.
  struct Term {
    int dof;
    double coeff;
  };
  std::vector<std::vector<std::array<std::vector<Term>, 2>>> node_map;
};

namespace detail {

/// Orthonormal basis of the null space of sigma^T (d x (d-1)).
inline Eigen::MatrixXd sigma_null_basis(const Eigen::VectorXd& sigma) {
  const Eigen::Index d = sigma.size();
  Eigen::MatrixXd row = sigma.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(row, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(d - 1);
}

}  // namespace detail

inline FemSystem assemble_fem(const MetricGraph& graph, const MeshSpec& mesh) {
  require_valid(graph);
  FemSystem sys;
  const std::size_t E = graph.edge_count();
  const std::size_t V = graph.vertex_count();
  int next = 0;

  // Vertex unknowns: value and derivative parameters t with
  // (normal derivative at endpoint j) = (B t)_j.
  sys.value_dof.assign(V, -1);
  std::vector<Eigen::MatrixXd> B(V);
  std::vector<int> param_offset(V, 0);
  for (std::size_t v = 0; v < V; ++v) {
    const auto& cond = graph.vertices()[v].condition;
    const auto& eps = graph.endpoints(v);
    const auto d = static_cast<Eigen::Index>(eps.size());
    if (!cond.extended()) sys.value_dof[v] = next++;
    switch (cond.kind) {
      case ConditionKind::C1:
        B[v] = Eigen::MatrixXd::Identity(d, d);
        break;
      case ConditionKind::C4:
        B[v] = Eigen::MatrixXd::Zero(d, 0);
        break;
      case ConditionKind::C2:
      case ConditionKind::C3: {
        Eigen::VectorXd sigma(d);
        for (Eigen::Index j = 0; j < d; ++j) sigma(j) = cond.sigma.at(eps[static_cast<std::size_t>(j)]);
        if (cond.kind == ConditionKind::C2) {
          B[v] = detail::sigma_null_basis(sigma);
        } else {
          B[v] = sigma / sigma.norm();
        }
        break;
      }
    }
    param_offset[v] = next;
    next += static_cast<int>(B[v].cols());
  }

  std::vector<double> vertex_h(V, 0.0);
  for (const auto& edge : graph.edges()) {
    const double h = edge.length / mesh.elements_for(edge.length);
    for (const auto& id : {edge.from, edge.to}) {
      auto& slot = vertex_h[graph.vertex_index(id)];
      slot = slot == 0.0 ? h : std::min(slot, h);
    }
  }

  sys.elements.resize(E);
  sys.node_map.resize(E);
  for (std::size_t e = 0; e < E; ++e) {
    const Edge& edge = graph.edges()[e];
    const int n = mesh.elements_for(edge.length);
    if (n < 1) throw Error("mesh must have at least one element per edge");
    sys.elements[e] = n;
    auto& nodes = sys.node_map[e];
    nodes.resize(static_cast<std::size_t>(n + 1));
    // Derivative unknowns are stored as h * phi' to balance the matrices.
    const double h = edge.length / n;
    for (int i = 1; i < n; ++i) {
      nodes[static_cast<std::size_t>(i)][0] = {{next++, 1.0}};
      nodes[static_cast<std::size_t>(i)][1] = {{next++, 1.0 / h}};
    }
    for (Side side : {Side::Left, Side::Right}) {
      const std::size_t v = graph.vertex_index(side == Side::Left ? edge.from : edge.to);
      const auto& eps = graph.endpoints(v);
      const Endpoint ep{edge.id, side};
      const auto j = static_cast<Eigen::Index>(std::lower_bound(eps.begin(), eps.end(), ep) - eps.begin());
      auto& node = nodes[side == Side::Left ? 0 : static_cast<std::size_t>(n)];
      if (sys.value_dof[v] >= 0) node[0] = {{sys.value_dof[v], 1.0}};
      const double s1 = normal_derivative_signs(side)[0];
      for (Eigen::Index p = 0; p < B[v].cols(); ++p) {
        const double c = s1 * B[v](j, p) / vertex_h[v];
        if (c != 0.0) node[1].push_back({param_offset[v] + static_cast<int>(p), c});
      }
    }
  }

  sys.stiffness = Eigen::MatrixXd::Zero(next, next);
  sys.mass = Eigen::MatrixXd::Zero(next, next);
  for (std::size_t e = 0; e < E; ++e) {
    const int n = sys.elements[e];
    const double h = graph.edges()[e].length / n;
    Eigen::Matrix4d ke;
    ke << 12, 6 * h, -12, 6 * h, 6 * h, 4 * h * h, -6 * h, 2 * h * h, -12, -6 * h, 12, -6 * h, 6 * h, 2 * h * h,
        -6 * h, 4 * h * h;
    ke /= h * h * h;
    Eigen::Matrix4d me;
    me << 156, 22 * h, 54, -13 * h, 22 * h, 4 * h * h, 13 * h, -3 * h * h, 54, 13 * h, 156, -22 * h, -13 * h,
        -3 * h * h, -22 * h, 4 * h * h;
    me *= h / 420.0;
    const auto& nodes = sys.node_map[e];
    for (int el = 0; el < n; ++el) {
      const std::array<const std::vector<FemSystem::Term>*, 4> local{
          &nodes[static_cast<std::size_t>(el)][0], &nodes[static_cast<std::size_t>(el)][1],
          &nodes[static_cast<std::size_t>(el + 1)][0], &nodes[static_cast<std::size_t>(el + 1)][1]};
      for (int a = 0; a < 4; ++a) {
        for (const auto& ta : *local[a]) {
          for (int b = 0; b < 4; ++b) {
            for (const auto& tb : *local[b]) {
              const double c = ta.coeff * tb.coeff;
              sys.stiffness(ta.dof, tb.dof) += c * ke(a, b);
              sys.mass(ta.dof, tb.dof) += c * me(a, b);
            }
          }
        }
      }
    }
  }
  for (std::size_t v = 0; v < V; ++v) {
    const double alpha = graph.vertices()[v].condition.alpha;
    if (sys.value_dof[v] >= 0 && alpha != 0.0) sys.stiffness(sys.value_dof[v], sys.value_dof[v]) += alpha;
  }
  return sys;
}

/// Lowest `count` discrete eigenvalues (the last cluster is completed).
inline Spectrum solve_fem(const MetricGraph& graph, std::size_t count, const FemOptions& options = {}) {
  const FemSystem sys = assemble_fem(graph, options.mesh);
  const auto N = sys.mass.rows();
  if (static_cast<Eigen::Index>(count) > N) {
    throw SolverError("solve_fem: mesh has " + std::to_string(N) + " degrees of freedom, fewer than requested " +
                      std::to_string(count));
  }
  Eigen::LLT<Eigen::MatrixXd> mass_llt(sys.mass);
  if (mass_llt.info() != Eigen::Success) throw SolverError("solve_fem: mass matrix is not positive definite");

  // Shift-invert form M x = theta (K + shift M) x keeps the low end of the
  // spectrum accurate to near machine precision.
  double shift = std::pow(std::numbers::pi / graph.total_length(), 4);
  Eigen::LLT<Eigen::MatrixXd> llt;
  for (int attempt = 0;; ++attempt) {
    llt.compute(sys.stiffness + shift * sys.mass);
    if (llt.info() == Eigen::Success) break;
    if (attempt > 60) throw SolverError("solve_fem: no positive definite shift found");
    shift *= 4.0;
  }
  const Eigen::MatrixXd L = llt.matrixL();
  Eigen::MatrixXd S = L.triangularView<Eigen::Lower>().solve(sys.mass);
  S = L.triangularView<Eigen::Lower>().solve(S.transpose()).transpose();
  S = 0.5 * (S + S.transpose());
  const bool vectors = options.compute_modes || options.rayleigh_refine;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw SolverError("solve_fem: eigensolver failed");
  Eigen::VectorXd values(N);
  for (Eigen::Index i = 0; i < N; ++i) values(i) = 1.0 / eig.eigenvalues()(N - 1 - i) - shift;
  if (options.rayleigh_refine) {
    const Eigen::Index top = std::min<Eigen::Index>(N, static_cast<Eigen::Index>(2 * count + 8));
    for (Eigen::Index i = 0; i < top; ++i) {
      const Eigen::VectorXd y = L.transpose().triangularView<Eigen::Upper>().solve(eig.eigenvectors().col(N - 1 - i));
      values(i) = y.dot(sys.stiffness * y) / y.dot(sys.mass * y);
    }
    std::sort(values.data(), values.data() + top);
  }

  Spectrum out;
  out.method = SpectralMethod::Fem;
  out.tolerance = options.cluster_tol;
  out.mesh = sys.elements;
  Eigen::Index i = 0;
  std::size_t taken = 0;
  while (i < N) {
    Eigen::Index j = i + 1;
    while (j < N && std::abs(values(j) - values(i)) <= options.cluster_tol * std::max(1.0, std::abs(values(i)))) ++j;
    if (taken >= count) break;
    SpectralCluster cluster;
    cluster.value = values.segment(i, j - i).mean();
    cluster.multiplicity = static_cast<int>(j - i);
    if (options.compute_modes) {
      for (Eigen::Index m = i; m < j; ++m) {
        Eigen::VectorXd y = L.transpose().triangularView<Eigen::Upper>().solve(eig.eigenvectors().col(N - 1 - m));
        y /= std::sqrt(y.dot(sys.mass * y));
        Mode mode;
        mode.vertex_values.resize(graph.vertex_count());
        for (std::size_t v = 0; v < graph.vertex_count(); ++v) {
          mode.vertex_values[v] = sys.value_dof[v] >= 0 ? y(sys.value_dof[v]) : 0.0;
        }
        mode.nodal.resize(graph.edge_count());
        for (std::size_t e = 0; e < graph.edge_count(); ++e) {
          auto& out_nodes = mode.nodal[e];
          for (const auto& node : sys.node_map[e]) {
            for (int comp = 0; comp < 2; ++comp) {
              double value = 0.0;
              for (const auto& t : node[static_cast<std::size_t>(comp)]) value += t.coeff * y(t.dof);
              out_nodes.push_back(value);
            }
          }
        }
        cluster.modes.push_back(std::move(mode));
      }
    }
    taken += static_cast<std::size_t>(cluster.multiplicity);
    out.clusters.push_back(std::move(cluster));
    i = j;
  }
  out.covered_up_to = out.clusters.back().value;
  return out;
}

}  // namespace beamgraph
