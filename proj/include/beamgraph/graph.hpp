#pragma once

// Metric graph data model for fourth-order operators with delta-type vertex
// conditions. A graph is a set of edges (intervals [0, length]) whose two
// endpoints are attached to vertices; each vertex carries one of the four
// condition kinds C1..C4, a strength alpha (possibly +inf) and, for C2/C3,
// a nonzero real weight per incident endpoint.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace beamgraph {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed graph or graph file (CLI exit code 2).
class GraphError : public Error {
 public:
  using Error::Error;
};

/// Root search or eigensolver failure (CLI exit code 3).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Surgery request outside the certified tables (CLI exit code 4).
class SurgeryError : public Error {
 public:
  using Error::Error;
};

enum class Side { Left, Right };

/// One end of an edge. Left is coordinate 0, Right is coordinate `length`.
struct Endpoint {
  std::string edge;
  Side side = Side::Left;

  auto operator<=>(const Endpoint&) const = default;
};

inline std::string to_string(const Endpoint& ep) {
  return ep.edge + (ep.side == Side::Left ? ":left" : ":right");
}

inline std::optional<Endpoint> parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) return std::nullopt;
  const auto side = text.substr(colon + 1);
  Endpoint ep{std::string(text.substr(0, colon)), Side::Left};
  if (side == "left") {
    ep.side = Side::Left;
  } else if (side == "right") {
    ep.side = Side::Right;
  } else {
    return std::nullopt;
  }
  return ep;
}

enum class ConditionKind { C1, C2, C3, C4 };

inline constexpr std::string_view to_string(ConditionKind kind) {
  switch (kind) {
    case ConditionKind::C1: return "C1";
    case ConditionKind::C2: return "C2";
    case ConditionKind::C3: return "C3";
    case ConditionKind::C4: return "C4";
  }
  return "?";
}

inline std::optional<ConditionKind> parse_kind(std::string_view text) {
  if (text == "C1") return ConditionKind::C1;
  if (text == "C2") return ConditionKind::C2;
  if (text == "C3") return ConditionKind::C3;
  if (text == "C4") return ConditionKind::C4;
  return std::nullopt;
}

inline constexpr bool uses_sigma(ConditionKind kind) {
  return kind == ConditionKind::C2 || kind == ConditionKind::C3;
}

inline constexpr double kInfiniteStrength = std::numeric_limits<double>::infinity();

struct VertexCondition {
  ConditionKind kind = ConditionKind::C4;
  double alpha = 0.0;
  std::map<Endpoint, double> sigma;

  /// alpha = +inf: the function vanishes at every endpoint of the vertex.
  [[nodiscard]] bool extended() const { return std::isinf(alpha) && alpha > 0; }

  bool operator==(const VertexCondition&) const = default;
};

struct Vertex {
  std::string id;
  VertexCondition condition;

  bool operator==(const Vertex&) const = default;
};

/// `from` is attached at the Left side, `to` at the Right side.
struct Edge {
  std::string id;
  double length = 1.0;
  std::string from;
  std::string to;

  bool operator==(const Edge&) const = default;
};

class MetricGraph {
 public:
  MetricGraph() = default;

  /// Construction never throws on invalid data; call validate() for a report.
  /// `explicit_union` marks a graph that is allowed to be disconnected
  /// (the result of a decoupling surgery).
  MetricGraph(std::vector<Vertex> vertices, std::vector<Edge> edges, bool explicit_union = false)
      : vertices_(std::move(vertices)), edges_(std::move(edges)), explicit_union_(explicit_union) {
    std::sort(vertices_.begin(), vertices_.end(),
              [](const Vertex& a, const Vertex& b) { return a.id < b.id; });
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) { return a.id < b.id; });
    index();
  }

  [[nodiscard]] const std::vector<Vertex>& vertices() const { return vertices_; }
  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
  [[nodiscard]] std::size_t vertex_count() const { return vertices_.size(); }
  [[nodiscard]] std::size_t edge_count() const { return edges_.size(); }
  [[nodiscard]] bool explicit_union() const { return explicit_union_; }

  [[nodiscard]] std::optional<std::size_t> find_vertex(std::string_view id) const {
    auto it = std::lower_bound(vertices_.begin(), vertices_.end(), id,
                               [](const Vertex& v, std::string_view key) { return v.id < key; });
    if (it == vertices_.end() || it->id != id) return std::nullopt;
    return static_cast<std::size_t>(it - vertices_.begin());
  }

  [[nodiscard]] std::optional<std::size_t> find_edge(std::string_view id) const {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), id,
                               [](const Edge& e, std::string_view key) { return e.id < key; });
    if (it == edges_.end() || it->id != id) return std::nullopt;
    return static_cast<std::size_t>(it - edges_.begin());
  }

  [[nodiscard]] std::size_t vertex_index(std::string_view id) const {
    auto idx = find_vertex(id);
    if (!idx) throw GraphError("unknown vertex '" + std::string(id) + "'");
    return *idx;
  }

  [[nodiscard]] std::size_t edge_index(std::string_view id) const {
    auto idx = find_edge(id);
    if (!idx) throw GraphError("unknown edge '" + std::string(id) + "'");
    return *idx;
  }

  [[nodiscard]] const Vertex& vertex(std::string_view id) const { return vertices_[vertex_index(id)]; }
  [[nodiscard]] const Edge& edge(std::string_view id) const { return edges_[edge_index(id)]; }

  /// Endpoints of a vertex, sorted by (edge id, side).
  [[nodiscard]] const std::vector<Endpoint>& endpoints(std::size_t vertex) const {
    return incidence_[vertex];
  }
  [[nodiscard]] std::size_t degree(std::size_t vertex) const { return incidence_[vertex].size(); }

  /// Vertex index owning an endpoint, if the edge refers to a known vertex.
  [[nodiscard]] std::optional<std::size_t> owner(const Endpoint& ep) const {
    auto e = find_edge(ep.edge);
    if (!e) return std::nullopt;
    const Edge& edge = edges_[*e];
    return find_vertex(ep.side == Side::Left ? edge.from : edge.to);
  }

  [[nodiscard]] double total_length() const {
    return std::accumulate(edges_.begin(), edges_.end(), 0.0,
                           [](double acc, const Edge& e) { return acc + e.length; });
  }

  [[nodiscard]] double max_edge_length() const {
    double m = 0.0;
    for (const auto& e : edges_) m = std::max(m, e.length);
    return m;
  }

  /// Number of connected components among vertices (isolated vertices count).
  [[nodiscard]] std::size_t component_count() const {
    return components().second;
  }

  /// Component label per vertex and the number of components.
  [[nodiscard]] std::pair<std::vector<std::size_t>, std::size_t> components() const {
    const std::size_t n = vertices_.size();
    std::vector<std::size_t> label(n, n);
    std::size_t count = 0;
    for (std::size_t start = 0; start < n; ++start) {
      if (label[start] != n) continue;
      std::queue<std::size_t> queue;
      queue.push(start);
      label[start] = count;
      while (!queue.empty()) {
        const std::size_t v = queue.front();
        queue.pop();
        for (std::size_t w : neighbours_[v]) {
          if (label[w] == n) {
            label[w] = count;
            queue.push(w);
          }
        }
      }
      ++count;
    }
    return {label, count};
  }

  /// Neighbouring vertex indices (with repetition for multi-edges, self for loops).
  [[nodiscard]] const std::vector<std::size_t>& neighbours(std::size_t vertex) const {
    return neighbours_[vertex];
  }

  [[nodiscard]] const std::vector<std::string>& dangling_edges() const { return dangling_; }

  /// Copy with one vertex condition replaced.
  [[nodiscard]] MetricGraph with_condition(std::string_view vertex_id, VertexCondition condition) const {
    auto vertices = vertices_;
    vertices[vertex_index(vertex_id)].condition = std::move(condition);
    return MetricGraph(std::move(vertices), edges_, explicit_union_);
  }

  [[nodiscard]] MetricGraph as_union(bool explicit_union = true) const {
    return MetricGraph(vertices_, edges_, explicit_union);
  }

  bool operator==(const MetricGraph& other) const {
    return vertices_ == other.vertices_ && edges_ == other.edges_;
  }

 private:
  void index() {
    incidence_.assign(vertices_.size(), {});
    neighbours_.assign(vertices_.size(), {});
    dangling_.clear();
    for (const auto& e : edges_) {
      auto from = find_vertex(e.from);
      auto to = find_vertex(e.to);
      if (!from || !to) {
        dangling_.push_back(e.id);
        if (from) incidence_[*from].push_back({e.id, Side::Left});
        if (to) incidence_[*to].push_back({e.id, Side::Right});
        continue;
      }
      incidence_[*from].push_back({e.id, Side::Left});
      incidence_[*to].push_back({e.id, Side::Right});
      neighbours_[*from].push_back(*to);
      if (*from != *to) neighbours_[*to].push_back(*from);
    }
    for (auto& list : incidence_) std::sort(list.begin(), list.end());
  }

  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  bool explicit_union_ = false;
  std::vector<std::vector<Endpoint>> incidence_;
  std::vector<std::vector<std::size_t>> neighbours_;
  std::vector<std::string> dangling_;
};

struct ValidationReport {
  std::vector<std::string> violations;

  [[nodiscard]] bool ok() const { return violations.empty(); }

  [[nodiscard]] std::string summary() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += "; ";
      out += v;
    }
    return out;
  }
};

/// Checks every structural invariant; never throws.
inline ValidationReport validate(const MetricGraph& graph) {
  ValidationReport report;
  auto& out = report.violations;

  for (std::size_t i = 1; i < graph.vertices().size(); ++i) {
    if (graph.vertices()[i].id == graph.vertices()[i - 1].id) {
      out.push_back("duplicate vertex id '" + graph.vertices()[i].id + "'");
    }
  }
  for (std::size_t i = 1; i < graph.edges().size(); ++i) {
    if (graph.edges()[i].id == graph.edges()[i - 1].id) {
      out.push_back("duplicate edge id '" + graph.edges()[i].id + "'");
    }
  }
  if (graph.edges().empty()) out.push_back("graph has no edges");

  for (const auto& e : graph.edges()) {
    if (!std::isfinite(e.length)) {
      out.push_back("non-finite length on edge '" + e.id + "'");
    } else if (e.length <= 0.0) {
      out.push_back("non-positive length on edge '" + e.id + "'");
    }
  }
  for (const auto& id : graph.dangling_edges()) {
    out.push_back("dangling endpoint on edge '" + id + "'");
  }

  for (std::size_t vi = 0; vi < graph.vertex_count(); ++vi) {
    const Vertex& v = graph.vertices()[vi];
    const VertexCondition& c = v.condition;
    if (std::isnan(c.alpha) || (std::isinf(c.alpha) && c.alpha < 0)) {
      out.push_back("invalid strength at vertex '" + v.id + "'");
    }
    const auto& eps = graph.endpoints(vi);
    if (uses_sigma(c.kind)) {
      for (const auto& ep : eps) {
        auto it = c.sigma.find(ep);
        if (it == c.sigma.end()) {
          out.push_back("sigma incomplete at vertex '" + v.id + "' (missing " + to_string(ep) + ")");
        } else if (it->second == 0.0 || !std::isfinite(it->second)) {
          out.push_back("sigma zero or non-finite at vertex '" + v.id + "' (" + to_string(ep) + ")");
        }
      }
      for (const auto& [ep, value] : c.sigma) {
        if (!std::binary_search(eps.begin(), eps.end(), ep)) {
          out.push_back("sigma key " + to_string(ep) + " is not an endpoint of vertex '" + v.id + "'");
        }
      }
    } else if (!c.sigma.empty()) {
      out.push_back("sigma present on " + std::string(to_string(c.kind)) + " vertex '" + v.id + "'");
    }
  }

  if (!graph.explicit_union() && graph.vertex_count() > 0 && graph.component_count() > 1) {
    out.push_back("disconnected graph");
  }
  return report;
}

/// Throws GraphError carrying every violated invariant.
inline void require_valid(const MetricGraph& graph) {
  auto report = validate(graph);
  if (!report.ok()) throw GraphError(report.summary());
}

/// |E| - |V| + 1 for a connected graph.
inline std::size_t betti_number(const MetricGraph& graph) {
  if (graph.component_count() != 1) throw GraphError("betti_number requires a connected graph");
  return graph.edge_count() + 1 - graph.vertex_count();
}

struct GraphPredicates {
  bool eulerian = false;
  bool bipartite = false;
  bool equilateral = false;
  double max_edge_length = 0.0;
  double total_length = 0.0;
};

inline bool is_bipartite(const MetricGraph& graph) {
  const std::size_t n = graph.vertex_count();
  std::vector<int> colour(n, -1);
  for (std::size_t s = 0; s < n; ++s) {
    if (colour[s] >= 0) continue;
    colour[s] = 0;
    std::queue<std::size_t> queue;
    queue.push(s);
    while (!queue.empty()) {
      auto v = queue.front();
      queue.pop();
      for (auto w : graph.neighbours(v)) {
        if (w == v) return false;
        if (colour[w] < 0) {
          colour[w] = 1 - colour[v];
          queue.push(w);
        } else if (colour[w] == colour[v]) {
          return false;
        }
      }
    }
  }
  return true;
}

/// Two-colouring of a bipartite graph (colour 0 or 1 per vertex).
inline std::vector<int> bipartition(const MetricGraph& graph) {
  const std::size_t n = graph.vertex_count();
  std::vector<int> colour(n, -1);
  for (std::size_t s = 0; s < n; ++s) {
    if (colour[s] >= 0) continue;
    colour[s] = 0;
    std::queue<std::size_t> queue;
    queue.push(s);
    while (!queue.empty()) {
      auto v = queue.front();
      queue.pop();
      for (auto w : graph.neighbours(v)) {
        if (colour[w] < 0) {
          colour[w] = 1 - colour[v];
          queue.push(w);
        }
      }
    }
  }
  return colour;
}

inline GraphPredicates graph_predicates(const MetricGraph& graph) {
  GraphPredicates p;
  p.eulerian = true;
  for (std::size_t v = 0; v < graph.vertex_count(); ++v) {
    if (graph.degree(v) % 2 != 0) p.eulerian = false;
  }
  p.bipartite = is_bipartite(graph);
  p.max_edge_length = graph.max_edge_length();
  p.total_length = graph.total_length();
  p.equilateral = !graph.edges().empty();
  const double first = graph.edges().empty() ? 0.0 : graph.edges().front().length;
  for (const auto& e : graph.edges()) {
    if (std::abs(e.length - first) > 1e-12 * first) p.equilateral = false;
  }
  return p;
}

inline bool is_tree(const MetricGraph& graph) {
  return graph.component_count() == 1 && graph.edge_count() + 1 == graph.vertex_count();
}

/// A tree in which at most one vertex has degree above one.
inline bool is_star(const MetricGraph& graph) {
  if (!is_tree(graph)) return false;
  std::size_t internal = 0;
  for (std::size_t v = 0; v < graph.vertex_count(); ++v) {
    if (graph.degree(v) > 1) ++internal;
  }
  return internal <= 1;
}

/// Edges whose removal disconnects the graph (self-loops never qualify).
inline std::vector<std::size_t> bridges(const MetricGraph& graph) {
  std::vector<std::size_t> out;
  const auto base = graph.component_count();
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    const Edge& edge = graph.edges()[e];
    if (edge.from == edge.to) continue;
    auto edges = graph.edges();
    edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(e));
    MetricGraph reduced(graph.vertices(), std::move(edges), true);
    if (reduced.component_count() > base) out.push_back(e);
  }
  return out;
}

/// C2 condition from planar joint angles: sigma_j = sin(angle_j), one angle
/// per endpoint of the vertex in its endpoint order.
inline VertexCondition angle_condition(const MetricGraph& graph, std::string_view vertex_id,
                                       std::span<const double> angles,
                                       std::optional<double> alpha = std::nullopt) {
  const std::size_t vi = graph.vertex_index(vertex_id);
  const auto& eps = graph.endpoints(vi);
  if (angles.size() != eps.size()) {
    throw GraphError("angle_condition: expected " + std::to_string(eps.size()) + " angles at vertex '" +
                     std::string(vertex_id) + "'");
  }
  VertexCondition c;
  c.kind = ConditionKind::C2;
  c.alpha = alpha.value_or(graph.vertices()[vi].condition.alpha);
  for (std::size_t j = 0; j < eps.size(); ++j) {
    const double s = std::sin(angles[j]);
    if (!std::isfinite(s) || std::abs(s) < 1e-12) {
      throw GraphError("angle_condition: angle " + std::to_string(angles[j]) +
                       " is a multiple of pi (degenerate joint not supported)");
    }
    c.sigma[eps[j]] = s;
  }
  return c;
}

}  // namespace beamgraph
