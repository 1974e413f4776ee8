#pragma once

// Graph surgery: each operation returns the transformed graph together with a
// record of the interlacing inequalities certified for that transformation.
// Only the kind combinations listed in the tables below are accepted.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "beamgraph/graph.hpp"

namespace beamgraph {

enum class SpectrumRole { Before, After, Auxiliary };

inline constexpr std::string_view to_string(SpectrumRole r) {
  switch (r) {
    case SpectrumRole::Before: return "before";
    case SpectrumRole::After: return "after";
    case SpectrumRole::Auxiliary: return "auxiliary";
  }
  return "?";
}

/// lambda_{k + lower_shift}(lower) <= lambda_{k + upper_shift}(upper) for k_min <= k (<= k_max).
struct Inequality {
  SpectrumRole lower = SpectrumRole::Before;
  int lower_shift = 0;
  SpectrumRole upper = SpectrumRole::After;
  int upper_shift = 0;
  int k_min = 1;
  std::optional<int> k_max;
  /// Only indices with lambda_k(before) >= 0 are covered.
  bool nonnegative_guard = false;

  [[nodiscard]] std::string describe() const {
    auto idx = [](int s) { return s == 0 ? std::string("k") : (s > 0 ? "k+" + std::to_string(s) : "k" + std::to_string(s)); };
    std::string out = "lambda_" + idx(lower_shift) + "(" + std::string(to_string(lower)) + ") <= lambda_" +
                      idx(upper_shift) + "(" + std::string(to_string(upper)) + ")";
    out += ", k >= " + std::to_string(k_min);
    if (k_max) out += ", k <= " + std::to_string(*k_max);
    if (nonnegative_guard) out += ", lambda_k(before) >= 0";
    return out;
  }
};

/// Hypothesis evaluated by the harness before any inequality is checked.
struct Obligation {
  enum class Kind { Compare, AtLeast };
  Kind kind = Kind::Compare;
  /// Compare: lambda_{lhs_index}(lhs) <= lambda_{rhs_index}(rhs).
  SpectrumRole lhs = SpectrumRole::Auxiliary;
  int lhs_index = 1;
  SpectrumRole rhs = SpectrumRole::Before;
  int rhs_index = 1;
  /// AtLeast: lambda_{rhs_index}(rhs) >= threshold.
  double threshold = 0.0;

  [[nodiscard]] std::string describe() const {
    if (kind == Kind::Compare) {
      return "lambda_" + std::to_string(lhs_index) + "(" + std::string(to_string(lhs)) + ") <= lambda_" +
             std::to_string(rhs_index) + "(" + std::string(to_string(rhs)) + ")";
    }
    return "lambda_" + std::to_string(rhs_index) + "(" + std::string(to_string(rhs)) +
           ") >= " + std::to_string(threshold);
  }
};

enum class StrictRule {
  None,
  /// lambda_k(before) < lambda_k(after) when lambda_k(after) is simple with eigenfunction nonzero at the vertex.
  StrengthIncrease,
  /// Pendant inequality strict when lambda_{k-1}(before) < lambda_k(before), the obligation holds strictly
  /// and some lambda_k(before) eigenfunction is nonzero at the vertex.
  Pendant,
  /// Insertion inequality strict when lambda_k(before) > max(0, lambda_{k-1}(before)) and the
  /// eigenfunction is nonzero at the vertex.
  Insertion,
};

struct SurgeryRecord {
  std::string op;
  /// "I", "II", "III" or "n/a".
  std::string classification = "n/a";
  /// Table entry that was matched, e.g. "C1->C3" or "I-7 (C4,C4->C4)".
  std::string rule;
  std::vector<std::string> vertices;
  std::vector<std::string> edges;
  std::vector<Inequality> inequalities;
  std::vector<Obligation> obligations;
  std::string validity;
  StrictRule strict = StrictRule::None;
  /// Vertex (id in the before graph) the strictness hypothesis refers to.
  std::string strict_vertex;
  /// Index of the inequality the strictness clause applies to.
  int strict_inequality = 0;
  /// Pendant graph for records whose obligations refer to it.
  std::optional<MetricGraph> auxiliary;

  [[nodiscard]] int max_shift() const {
    int m = 0;
    for (const auto& q : inequalities) m = std::max({m, q.lower_shift, q.upper_shift});
    for (const auto& o : obligations) m = std::max({m, o.lhs_index, o.rhs_index});
    return m;
  }
};

struct SurgeryResult {
  MetricGraph graph;
  SurgeryRecord record;
};

namespace detail {

inline Inequality ineq(SpectrumRole lo, int lo_shift, SpectrumRole up, int up_shift, int k_min = 1) {
  Inequality q;
  q.lower = lo;
  q.lower_shift = lo_shift;
  q.upper = up;
  q.upper_shift = up_shift;
  q.k_min = k_min;
  return q;
}

/// lambda_k(before) <= lambda_k(after) <= lambda_{k+m}(before).
inline std::vector<Inequality> rank_bracket(int m) {
  return {ineq(SpectrumRole::Before, 0, SpectrumRole::After, 0),
          ineq(SpectrumRole::After, 0, SpectrumRole::Before, m)};
}

inline std::string kinds(ConditionKind a, ConditionKind b, ConditionKind c) {
  return "(" + std::string(to_string(a)) + "," + std::string(to_string(b)) + "->" + std::string(to_string(c)) + ")";
}

inline std::string fresh_id(const MetricGraph& g, const std::string& stem) {
  std::set<std::string> used;
  for (const auto& v : g.vertices()) used.insert(v.id);
  for (const auto& e : g.edges()) used.insert(e.id);
  if (!used.count(stem)) return stem;
  for (int i = 1;; ++i) {
    auto id = stem + std::to_string(i);
    if (!used.count(id)) return id;
  }
}

/// Replaces the listed vertices with one vertex, keeping edges and building
/// sigma per endpoint from the old vertices (1.0 where none existed).
inline MetricGraph merge_vertices(const MetricGraph& g, const std::vector<std::string>& ids, const std::string& new_id,
                                  ConditionKind kind, double alpha) {
  std::set<std::string> merged(ids.begin(), ids.end());
  VertexCondition cond;
  cond.kind = kind;
  cond.alpha = alpha;
  std::vector<Vertex> vertices;
  for (const auto& v : g.vertices()) {
    if (!merged.count(v.id)) {
      vertices.push_back(v);
      continue;
    }
    if (!uses_sigma(kind)) continue;
    const auto vi = g.vertex_index(v.id);
    for (const auto& ep : g.endpoints(vi)) {
      double s = 1.0;
      if (uses_sigma(v.condition.kind)) {
        auto it = v.condition.sigma.find(ep);
        if (it != v.condition.sigma.end()) s = it->second;
      }
      cond.sigma[ep] = s;
    }
  }
  vertices.push_back({new_id, cond});
  std::vector<Edge> edges = g.edges();
  for (auto& e : edges) {
    if (merged.count(e.from)) e.from = new_id;
    if (merged.count(e.to)) e.to = new_id;
  }
  return MetricGraph(std::move(vertices), std::move(edges), g.explicit_union());
}

inline void require_connected_input(const MetricGraph& g, const std::string& op) {
  auto report = validate(g);
  if (!report.ok()) throw GraphError(op + ": " + report.summary());
}

inline std::string joined_id(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += "+";
    out += id;
  }
  return out;
}

struct GlueRule {
  ConditionKind v1, v2, glued;
  std::string classification;
  std::string label;
};

inline const std::vector<GlueRule>& glue_rules() {
  using K = ConditionKind;
  static const std::vector<GlueRule> rules = {
      {K::C1, K::C1, K::C1, "I", "I-1"},   {K::C1, K::C2, K::C1, "I", "I-2"},   {K::C1, K::C3, K::C1, "I", "I-3"},
      {K::C1, K::C4, K::C1, "I", "I-4"},   {K::C2, K::C2, K::C2, "I", "I-5"},   {K::C2, K::C4, K::C2, "I", "I-6"},
      {K::C4, K::C4, K::C4, "I", "I-7"},   {K::C2, K::C1, K::C2, "II", "II-1"}, {K::C3, K::C3, K::C3, "II", "II-2"},
      {K::C3, K::C4, K::C3, "II", "II-3"}, {K::C3, K::C1, K::C3, "III", "III-1"}, {K::C4, K::C1, K::C4, "III", "III-2"},
      {K::C4, K::C2, K::C4, "III", "III-3"}, {K::C4, K::C3, K::C4, "III", "III-4"},
  };
  return rules;
}

/// Matches (k1, k2 -> glued) in the listed order; `swapped` reports that the
/// second vertex plays the first role.
inline std::optional<GlueRule> match_glue(ConditionKind k1, ConditionKind k2, ConditionKind glued, bool& swapped) {
  for (const auto& r : glue_rules()) {
    if (r.v1 == k1 && r.v2 == k2 && r.glued == glued) {
      swapped = false;
      return r;
    }
  }
  for (const auto& r : glue_rules()) {
    if (r.v1 == k2 && r.v2 == k1 && r.glued == glued) {
      swapped = true;
      return r;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Condition and strength changes

/// Replaces the condition kind at one vertex, keeping alpha.
inline SurgeryResult change_condition(const MetricGraph& graph, const std::string& vertex, ConditionKind kind,
                                      std::optional<std::map<Endpoint, double>> sigma = std::nullopt) {
  using K = ConditionKind;
  detail::require_connected_input(graph, "change_condition");
  const auto vi = graph.vertex_index(vertex);
  const auto& old = graph.vertices()[vi].condition;
  const int d = static_cast<int>(graph.degree(vi));
  const std::string rule = std::string(to_string(old.kind)) + "->" + std::string(to_string(kind));

  SurgeryRecord rec;
  rec.op = "change_condition";
  rec.rule = rule;
  rec.vertices = {vertex};
  if (old.kind == K::C1 && kind == K::C2) {
    rec.inequalities = detail::rank_bracket(1);
  } else if (old.kind == K::C1 && kind == K::C3) {
    rec.inequalities = detail::rank_bracket(d - 1);
  } else if (old.kind == K::C1 && kind == K::C4) {
    rec.inequalities = detail::rank_bracket(d);
  } else if (old.kind == K::C2 && kind == K::C3) {
    rec.inequalities = {detail::ineq(SpectrumRole::Before, 0, SpectrumRole::After, 1),
                        detail::ineq(SpectrumRole::After, 1, SpectrumRole::Before, d)};
  } else if (old.kind == K::C2 && kind == K::C4) {
    rec.inequalities = detail::rank_bracket(d - 1);
  } else if (old.kind == K::C3 && kind == K::C4) {
    rec.inequalities = detail::rank_bracket(1);
  } else {
    throw SurgeryError("change_condition: unlisted condition change " + rule);
  }

  VertexCondition cond;
  cond.kind = kind;
  cond.alpha = old.alpha;
  if (uses_sigma(kind)) {
    if (sigma) {
      cond.sigma = *sigma;
    } else if (uses_sigma(old.kind)) {
      cond.sigma = old.sigma;
    } else {
      throw SurgeryError("change_condition: sigma data required for " + std::string(to_string(kind)) +
                         " at vertex '" + vertex + "'");
    }
  }
  auto out = graph.with_condition(vertex, cond);
  require_valid(out);
  rec.validity = "k >= 1";
  return {std::move(out), std::move(rec)};
}

/// C1 -> C2 at every vertex. Sigma per vertex defaults to 1 on every endpoint.
inline SurgeryResult change_condition_all(const MetricGraph& graph,
                                          const std::map<std::string, std::map<Endpoint, double>>& sigma = {}) {
  detail::require_connected_input(graph, "change_condition_all");
  std::vector<Vertex> vertices = graph.vertices();
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    if (vertices[v].condition.kind != ConditionKind::C1) {
      throw SurgeryError("change_condition_all: vertex '" + vertices[v].id + "' is " +
                         std::string(to_string(vertices[v].condition.kind)) + ", only C1->C2 is listed");
    }
    vertices[v].condition.kind = ConditionKind::C2;
    auto it = sigma.find(vertices[v].id);
    if (it != sigma.end()) {
      vertices[v].condition.sigma = it->second;
    } else {
      for (const auto& ep : graph.endpoints(v)) vertices[v].condition.sigma[ep] = 1.0;
    }
  }
  MetricGraph out(std::move(vertices), graph.edges(), graph.explicit_union());
  require_valid(out);
  SurgeryRecord rec;
  rec.op = "change_condition_all";
  rec.rule = "C1->C2 at all vertices";
  for (const auto& v : graph.vertices()) rec.vertices.push_back(v.id);
  rec.inequalities = detail::rank_bracket(static_cast<int>(graph.vertex_count()));
  rec.validity = "k >= 1";
  return {std::move(out), std::move(rec)};
}

/// Raises the strength at one vertex. alpha = +inf is accepted.
inline SurgeryResult change_strength(const MetricGraph& graph, const std::string& vertex, double alpha) {
  detail::require_connected_input(graph, "change_strength");
  const auto vi = graph.vertex_index(vertex);
  const auto& old = graph.vertices()[vi].condition;
  if (std::isnan(alpha) || alpha < old.alpha) {
    throw SurgeryError("change_strength: strength at '" + vertex + "' must not decrease");
  }
  SurgeryRecord rec;
  rec.op = "change_strength";
  rec.vertices = {vertex};
  rec.validity = "k >= 1";
  if (alpha == old.alpha) {
    rec.rule = "unchanged";
    rec.inequalities = detail::rank_bracket(0);
    return {graph, std::move(rec)};
  }
  VertexCondition cond = old;
  cond.alpha = alpha;
  if (std::isinf(alpha)) {
    if (old.kind == ConditionKind::C1) {
      rec.rule = "alpha -> inf at C1";
      rec.inequalities = detail::rank_bracket(1);
    } else {
      rec.rule = "alpha -> inf";
      rec.inequalities = {detail::ineq(SpectrumRole::Before, 0, SpectrumRole::After, 0)};
    }
  } else {
    rec.rule = "alpha increase";
    rec.inequalities = detail::rank_bracket(1);
    rec.strict = StrictRule::StrengthIncrease;
    rec.strict_vertex = vertex;
    rec.strict_inequality = 0;
  }
  return {graph.with_condition(vertex, cond), std::move(rec)};
}

/// Raises strengths at every listed vertex (untouched vertices keep theirs).
inline SurgeryResult change_strength_all(const MetricGraph& graph, const std::map<std::string, double>& alpha) {
  detail::require_connected_input(graph, "change_strength_all");
  std::vector<Vertex> vertices = graph.vertices();
  bool any = false;
  for (auto& v : vertices) {
    auto it = alpha.find(v.id);
    if (it == alpha.end()) continue;
    if (std::isnan(it->second) || std::isinf(it->second) || it->second < v.condition.alpha) {
      throw SurgeryError("change_strength_all: strength at '" + v.id + "' must be finite and not decrease");
    }
    any = any || it->second != v.condition.alpha;
    v.condition.alpha = it->second;
  }
  for (const auto& [id, value] : alpha) {
    if (!graph.find_vertex(id)) throw GraphError("unknown vertex '" + id + "'");
  }
  SurgeryRecord rec;
  rec.op = "change_strength_all";
  for (const auto& v : graph.vertices()) rec.vertices.push_back(v.id);
  rec.validity = "k >= 1";
  rec.rule = any ? "alpha increase at all vertices" : "unchanged";
  rec.inequalities = detail::rank_bracket(any ? static_cast<int>(graph.vertex_count()) : 0);
  return {MetricGraph(std::move(vertices), graph.edges(), graph.explicit_union()), std::move(rec)};
}

// ---------------------------------------------------------------------------
// Gluing, flower, splitting

/// Identifies two or more vertices into one with summed strength.
/// Two vertices: classification by the listed triples, plus the composed case
/// (C1, C1 -> C2). More vertices: every successive pair must be class I (upper
/// shift m) or every one class II (upper shift 2m).
inline SurgeryResult glue(const MetricGraph& graph, const std::vector<std::string>& ids, ConditionKind glued) {
  detail::require_connected_input(graph, "glue");
  if (ids.size() < 2) throw SurgeryError("glue: at least two vertices required");
  std::set<std::string> unique(ids.begin(), ids.end());
  if (unique.size() != ids.size()) throw SurgeryError("glue: vertices must be distinct");
  double alpha = 0.0;
  for (const auto& id : ids) {
    const auto& c = graph.vertex(id).condition;
    if (std::isinf(c.alpha)) throw SurgeryError("glue: vertex '" + id + "' has infinite strength");
    alpha += c.alpha;
  }

  SurgeryRecord rec;
  rec.op = "glue";
  rec.vertices = ids;
  rec.validity = "k >= 1";

  if (ids.size() == 2) {
    const auto k1 = graph.vertex(ids[0]).condition.kind;
    const auto k2 = graph.vertex(ids[1]).condition.kind;
    bool swapped = false;
    if (auto rule = detail::match_glue(k1, k2, glued, swapped)) {
      rec.classification = rule->classification;
      rec.rule = rule->label + " " + detail::kinds(rule->v1, rule->v2, rule->glued);
      if (rule->classification == "I") {
        rec.inequalities = detail::rank_bracket(1);
      } else if (rule->classification == "II") {
        rec.inequalities = detail::rank_bracket(2);
      } else {
        const auto& second = swapped ? ids[0] : ids[1];
        const int d2 = static_cast<int>(graph.degree(graph.vertex_index(second)));
        rec.inequalities = detail::rank_bracket(d2 + 1);
      }
    } else if (k1 == ConditionKind::C1 && k2 == ConditionKind::C1 && glued == ConditionKind::C2) {
      rec.classification = "I";
      rec.rule = "I-1 then C1->C2 " + detail::kinds(k1, k2, glued);
      rec.inequalities = detail::rank_bracket(2);
    } else {
      throw SurgeryError("glue: unlisted triple " + detail::kinds(k1, k2, glued));
    }
  } else {
    std::string cls;
    ConditionKind current = graph.vertex(ids[0]).condition.kind;
    for (std::size_t i = 1; i < ids.size(); ++i) {
      const auto next = graph.vertex(ids[i]).condition.kind;
      bool swapped = false;
      auto rule = detail::match_glue(current, next, glued, swapped);
      if (!rule || rule->classification == "III" || (!cls.empty() && rule->classification != cls)) {
        throw SurgeryError("glue: step " + detail::kinds(current, next, glued) +
                           " does not keep a uniform classification I or II");
      }
      cls = rule->classification;
      current = glued;
    }
    const int m = static_cast<int>(ids.size()) - 1;
    rec.classification = cls;
    rec.rule = "multi-vertex gluing of " + std::to_string(ids.size()) + " vertices, class " + cls;
    rec.inequalities = detail::rank_bracket(cls == "I" ? m : 2 * m);
  }

  auto out = detail::merge_vertices(graph, ids, detail::joined_id(ids), glued, alpha);
  require_valid(out);
  return {std::move(out), std::move(rec)};
}

inline SurgeryResult glue(const MetricGraph& graph, const std::string& v1, const std::string& v2,
                          ConditionKind glued) {
  return glue(graph, std::vector<std::string>{v1, v2}, glued);
}

/// All vertices merged into one carrying the total strength.
inline SurgeryResult flower(const MetricGraph& graph) {
  detail::require_connected_input(graph, "flower");
  const auto kind = graph.vertices().front().condition.kind;
  double alpha = 0.0;
  std::vector<std::string> ids;
  for (const auto& v : graph.vertices()) {
    if (v.condition.kind != kind) throw SurgeryError("flower: mixed condition kinds");
    if (std::isinf(v.condition.alpha)) throw SurgeryError("flower: infinite strength at '" + v.id + "'");
    alpha += v.condition.alpha;
    ids.push_back(v.id);
  }
  const int V = static_cast<int>(graph.vertex_count());
  SurgeryRecord rec;
  rec.op = "flower";
  rec.vertices = ids;
  rec.rule = "uniform " + std::string(to_string(kind));
  rec.validity = "k >= 1";
  rec.inequalities = detail::rank_bracket(kind == ConditionKind::C3 ? 2 * V - 2 : V - 1);
  if (V == 1) return {graph, std::move(rec)};
  auto out = detail::merge_vertices(graph, ids, detail::joined_id(ids), kind, alpha);
  require_valid(out);
  return {std::move(out), std::move(rec)};
}

struct SplitPart {
  ConditionKind kind = ConditionKind::C4;
  double alpha = 0.0;
  /// Sigma for the part's endpoints when its kind needs it and the parent has none.
  std::map<Endpoint, double> sigma;
};

/// Splits vertex v0: `first_endpoints` go to v0/1, the rest to v0/2.
inline SurgeryResult split(const MetricGraph& graph, const std::string& vertex,
                           const std::vector<Endpoint>& first_endpoints, const SplitPart& part1,
                           const SplitPart& part2) {
  using K = ConditionKind;
  detail::require_connected_input(graph, "split");
  const auto vi = graph.vertex_index(vertex);
  const auto& parent = graph.vertices()[vi].condition;
  static const std::vector<std::array<K, 3>> patterns = {
      {K::C1, K::C1, K::C1}, {K::C3, K::C3, K::C3}, {K::C4, K::C4, K::C4}, {K::C4, K::C1, K::C4},
      {K::C3, K::C1, K::C3}, {K::C4, K::C2, K::C4}, {K::C4, K::C3, K::C4}};
  const std::string label = std::string(to_string(parent.kind)) + "->" + std::string(to_string(part1.kind)) + "," +
                            std::string(to_string(part2.kind));
  const auto it = std::find(patterns.begin(), patterns.end(), std::array<K, 3>{parent.kind, part1.kind, part2.kind});
  if (it == patterns.end()) throw SurgeryError("split: unlisted pattern " + label);
  if (std::isinf(parent.alpha) || std::isinf(part1.alpha) || std::isinf(part2.alpha) ||
      std::abs(part1.alpha + part2.alpha - parent.alpha) > 1e-12 * std::max(1.0, std::abs(parent.alpha))) {
    throw SurgeryError("split: strengths must be finite and sum to the parent strength");
  }

  const auto& eps = graph.endpoints(vi);
  std::set<Endpoint> first(first_endpoints.begin(), first_endpoints.end());
  for (const auto& ep : first) {
    if (!std::binary_search(eps.begin(), eps.end(), ep)) {
      throw SurgeryError("split: " + to_string(ep) + " is not an endpoint of '" + vertex + "'");
    }
  }
  if (first.empty() || first.size() == eps.size()) throw SurgeryError("split: both parts need endpoints");

  const std::string id1 = detail::fresh_id(graph, vertex + "/1");
  const std::string id2 = detail::fresh_id(graph, vertex + "/2");
  auto make = [&](const SplitPart& part, bool is_first) {
    VertexCondition c;
    c.kind = part.kind;
    c.alpha = part.alpha;
    if (uses_sigma(part.kind)) {
      for (const auto& ep : eps) {
        if (first.count(ep) != (is_first ? 1u : 0u)) continue;
        double s = 1.0;
        if (auto f = part.sigma.find(ep); f != part.sigma.end()) {
          s = f->second;
        } else if (uses_sigma(parent.kind)) {
          s = parent.sigma.at(ep);
        }
        c.sigma[ep] = s;
      }
    }
    return c;
  };
  std::vector<Vertex> vertices;
  for (const auto& v : graph.vertices()) {
    if (v.id != vertex) vertices.push_back(v);
  }
  vertices.push_back({id1, make(part1, true)});
  vertices.push_back({id2, make(part2, false)});
  std::vector<Edge> edges = graph.edges();
  for (auto& e : edges) {
    if (e.from == vertex) e.from = first.count({e.id, Side::Left}) ? id1 : id2;
    if (e.to == vertex) e.to = first.count({e.id, Side::Right}) ? id1 : id2;
  }
  MetricGraph out(std::move(vertices), std::move(edges), true);
  if (out.component_count() == 1) out = out.as_union(graph.explicit_union());
  require_valid(out);

  SurgeryRecord rec;
  rec.op = "split";
  rec.rule = label;
  rec.vertices = {vertex, id1, id2};
  rec.validity = "k >= 1";
  rec.inequalities = {detail::ineq(SpectrumRole::After, 0, SpectrumRole::Before, 0)};
  return {std::move(out), std::move(rec)};
}

// ---------------------------------------------------------------------------
// Volume-increasing operations

namespace detail {

/// Disjoint union with every id of `other` prefixed.
inline MetricGraph disjoint_union(const MetricGraph& g, const MetricGraph& other, const std::string& prefix) {
  std::vector<Vertex> vertices = g.vertices();
  std::vector<Edge> edges = g.edges();
  for (const auto& v : other.vertices()) {
    Vertex copy{prefix + v.id, v.condition};
    copy.condition.sigma.clear();
    for (const auto& [ep, s] : v.condition.sigma) copy.condition.sigma[{prefix + ep.edge, ep.side}] = s;
    vertices.push_back(std::move(copy));
  }
  for (const auto& e : other.edges()) edges.push_back({prefix + e.id, e.length, prefix + e.from, prefix + e.to});
  MetricGraph out(std::move(vertices), std::move(edges), true);
  for (std::size_t i = 1; i < out.vertices().size(); ++i) {
    if (out.vertices()[i].id == out.vertices()[i - 1].id) {
      throw SurgeryError("id collision after prefixing: '" + out.vertices()[i].id + "'");
    }
  }
  for (std::size_t i = 1; i < out.edges().size(); ++i) {
    if (out.edges()[i].id == out.edges()[i - 1].id) {
      throw SurgeryError("id collision after prefixing: '" + out.edges()[i].id + "'");
    }
  }
  return out;
}

}  // namespace detail

/// Glues vertex w of the pendant graph to vertex v of `graph`. The hypothesis
/// lambda_r(pendant) <= lambda_{k0}(graph) is recorded as an obligation.
inline SurgeryResult attach_pendant(const MetricGraph& graph, const MetricGraph& pendant, const std::string& v,
                                    const std::string& w, ConditionKind glued, int r, int k0,
                                    const std::string& prefix = "p.") {
  if (graph.component_count() != 1 || graph.explicit_union()) {
    throw SurgeryError("attach_pendant: base graph must be connected");
  }
  detail::require_connected_input(graph, "attach_pendant");
  detail::require_connected_input(pendant, "attach_pendant (pendant)");
  if (r < 1 || k0 < 1) throw SurgeryError("attach_pendant: r and k0 must be positive");
  const auto& cv = graph.vertex(v).condition;
  const auto& cw = pendant.vertex(w).condition;
  if (std::isinf(cv.alpha) || std::isinf(cw.alpha)) throw SurgeryError("attach_pendant: infinite strength");
  bool swapped = false;
  auto rule = detail::match_glue(cv.kind, cw.kind, glued, swapped);
  if (!rule) throw SurgeryError("attach_pendant: unlisted triple " + detail::kinds(cv.kind, cw.kind, glued));

  const int d = static_cast<int>(graph.degree(graph.vertex_index(v)));
  int shift = r - 1;
  if (rule->classification == "II") shift = r - 2;
  if (rule->classification == "III") shift = r - d - 1;

  auto combined = detail::disjoint_union(graph, pendant, prefix);
  const std::string pw = prefix + w;
  const std::string new_id = detail::joined_id({v, pw});
  auto glued_graph = detail::merge_vertices(combined, {v, pw}, new_id, glued, cv.alpha + cw.alpha);
  auto out = glued_graph.as_union(false);
  require_valid(out);

  SurgeryRecord rec;
  rec.op = "attach_pendant";
  rec.classification = rule->classification;
  rec.rule = rule->label + " " + detail::kinds(rule->v1, rule->v2, rule->glued);
  rec.vertices = {v, pw};
  for (const auto& e : pendant.edges()) rec.edges.push_back(prefix + e.id);
  Inequality q = detail::ineq(SpectrumRole::After, shift, SpectrumRole::Before, 0, k0);
  rec.inequalities = {q};
  Obligation o;
  o.kind = Obligation::Kind::Compare;
  o.lhs = SpectrumRole::Auxiliary;
  o.lhs_index = r;
  o.rhs = SpectrumRole::Before;
  o.rhs_index = k0;
  rec.obligations = {o};
  rec.validity = "k >= " + std::to_string(k0) + " where lambda_" + std::to_string(r) +
                 "(pendant) <= lambda_" + std::to_string(k0) + "(graph)";
  rec.strict = StrictRule::Pendant;
  rec.strict_vertex = v;
  rec.auxiliary = pendant;
  return {std::move(out), std::move(rec)};
}

struct PidCondition {
  ConditionKind kind = ConditionKind::C4;
  double alpha = 0.0;
};

/// Removes v0 and reattaches each of its endpoints to a vertex of `inserted`.
/// `pids` lists the two receiving vertices (w'_1 first) and their conditions.
inline SurgeryResult insert_graph(const MetricGraph& graph, const std::string& v0, const MetricGraph& inserted,
                                  const std::map<Endpoint, std::string>& attachment,
                                  const std::vector<std::pair<std::string, PidCondition>>& pids,
                                  const std::string& prefix = "g.") {
  using K = ConditionKind;
  detail::require_connected_input(graph, "insert_graph");
  detail::require_connected_input(inserted, "insert_graph (inserted)");
  for (const auto& v : inserted.vertices()) {
    if (v.condition.kind != K::C4 || v.condition.alpha != 0.0) {
      throw SurgeryError("insert_graph: inserted graph must carry C4 with zero strength at every vertex");
    }
  }
  if (pids.size() != 2) throw SurgeryError("insert_graph: exactly two post-insertion descendants required");
  const auto vi = graph.vertex_index(v0);
  const auto& parent = graph.vertices()[vi].condition;
  if (std::isinf(parent.alpha)) throw SurgeryError("insert_graph: infinite strength at '" + v0 + "'");
  const auto& eps = graph.endpoints(vi);
  std::set<std::string> targets;
  for (const auto& ep : eps) {
    auto it = attachment.find(ep);
    if (it == attachment.end()) throw SurgeryError("insert_graph: endpoint " + to_string(ep) + " not attached");
    targets.insert(it->second);
  }
  if (attachment.size() != eps.size()) throw SurgeryError("insert_graph: attachment lists foreign endpoints");
  std::set<std::string> pid_ids;
  double alpha_sum = 0.0;
  for (const auto& [id, c] : pids) {
    if (!inserted.find_vertex(id)) throw SurgeryError("insert_graph: unknown vertex '" + id + "'");
    if (std::isinf(c.alpha)) throw SurgeryError("insert_graph: infinite strength at descendant '" + id + "'");
    pid_ids.insert(id);
    alpha_sum += c.alpha;
  }
  if (pid_ids.size() != 2 || targets != pid_ids) {
    throw SurgeryError("insert_graph: endpoints must be attached to exactly the two listed descendants");
  }
  if (std::abs(alpha_sum - parent.alpha) > 1e-12 * std::max(1.0, std::abs(parent.alpha))) {
    throw SurgeryError("insert_graph: descendant strengths must sum to the strength at '" + v0 + "'");
  }

  auto classify = [&](K a, K b) -> std::optional<std::string> {
    if (parent.kind == K::C1 && a == K::C1 && b == K::C1) return "I";
    if (parent.kind == K::C4 && a == K::C4) return "I";
    if (parent.kind == K::C3 && a == K::C3 && (b == K::C1 || b == K::C3)) return "II";
    if ((parent.kind == K::C1 || parent.kind == K::C2 || parent.kind == K::C3) && a == K::C4) return "III";
    return std::nullopt;
  };
  const K w1 = pids[0].second.kind;
  const K w2 = pids[1].second.kind;
  auto cls = classify(w1, w2);
  auto cls_swapped = classify(w2, w1);
  if (cls && cls_swapped && *cls != *cls_swapped) {
    throw SurgeryError("insert_graph: ambiguous triple " + detail::kinds(parent.kind, w1, w2));
  }
  if (!cls) cls = cls_swapped;
  const std::string triple = "(" + std::string(to_string(parent.kind)) + "," + std::string(to_string(w1)) + "," +
                             std::string(to_string(w2)) + ")";
  if (!cls) throw SurgeryError("insert_graph: unlisted triple " + triple);

  // Build: graph without v0, plus the prefixed inserted graph, edges rewired.
  std::vector<Vertex> vertices;
  for (const auto& v : graph.vertices()) {
    if (v.id != v0) vertices.push_back(v);
  }
  std::map<std::string, PidCondition> pid_map(pids.begin(), pids.end());
  std::vector<Edge> edges = graph.edges();
  for (auto& e : edges) {
    if (e.from == v0) e.from = prefix + attachment.at({e.id, Side::Left});
    if (e.to == v0) e.to = prefix + attachment.at({e.id, Side::Right});
  }
  for (const auto& e : inserted.edges()) edges.push_back({prefix + e.id, e.length, prefix + e.from, prefix + e.to});
  MetricGraph skeleton(vertices, edges, true);
  for (const auto& v : inserted.vertices()) {
    Vertex copy{prefix + v.id, v.condition};
    if (auto it = pid_map.find(v.id); it != pid_map.end()) {
      copy.condition.kind = it->second.kind;
      copy.condition.alpha = it->second.alpha;
    }
    vertices.push_back(copy);
  }
  MetricGraph wired(vertices, edges, true);
  // Sigma for descendants of C2/C3 kind: from v0 where it had weights, else 1.
  std::vector<Vertex> final_vertices = wired.vertices();
  for (auto& v : final_vertices) {
    if (!uses_sigma(v.condition.kind)) continue;
    if (v.id.rfind(prefix, 0) != 0 || !pid_map.count(v.id.substr(prefix.size()))) continue;
    v.condition.sigma.clear();
    for (const auto& ep : wired.endpoints(wired.vertex_index(v.id))) {
      double s = 1.0;
      if (uses_sigma(parent.kind)) {
        if (auto f = parent.sigma.find(ep); f != parent.sigma.end()) s = f->second;
      }
      v.condition.sigma[ep] = s;
    }
  }
  MetricGraph out(std::move(final_vertices), wired.edges(), false);
  require_valid(out);

  SurgeryRecord rec;
  rec.op = "insert_graph";
  rec.classification = *cls;
  rec.rule = "insertion " + triple;
  rec.vertices = {v0, prefix + pids[0].first, prefix + pids[1].first};
  for (const auto& e : inserted.edges()) rec.edges.push_back(prefix + e.id);
  const int d = static_cast<int>(eps.size());
  const int up = *cls == "I" ? 0 : (*cls == "II" ? 1 : d);
  Inequality q = detail::ineq(SpectrumRole::After, 0, SpectrumRole::Before, up);
  q.nonnegative_guard = true;
  rec.inequalities = {q};
  rec.validity = "all k with lambda_k(graph) >= 0";
  rec.strict = StrictRule::Insertion;
  rec.strict_vertex = v0;
  return {std::move(out), std::move(rec)};
}

/// Adds an edge of length `length` from v (left end) to w (right end).
/// New endpoints at C2/C3 vertices get sigma 1 unless given.
inline SurgeryResult add_edge(const MetricGraph& graph, const std::string& v, const std::string& w, double length,
                              int k0, std::optional<std::string> edge_id = std::nullopt,
                              double sigma_v = 1.0, double sigma_w = 1.0) {
  using K = ConditionKind;
  detail::require_connected_input(graph, "add_edge");
  if (!(length > 0) || !std::isfinite(length)) throw SurgeryError("add_edge: length must be positive");
  if (k0 < 1) throw SurgeryError("add_edge: k0 must be positive");
  const std::string id = edge_id ? *edge_id : detail::fresh_id(graph, "x");
  if (graph.find_edge(id) || graph.find_vertex(id)) throw SurgeryError("add_edge: id '" + id + "' already in use");
  const K a = graph.vertex(v).condition.kind;
  const K b = graph.vertex(w).condition.kind;
  auto pair = std::minmax(a, b);
  int shift = 0;
  int case_no = 0;
  using P = std::pair<K, K>;
  const std::map<P, int> cases = {{{K::C1, K::C1}, 1}, {{K::C2, K::C2}, 2}, {{K::C4, K::C4}, 3},
                                  {{K::C1, K::C2}, 4}, {{K::C1, K::C4}, 5}, {{K::C2, K::C4}, 6},
                                  {{K::C1, K::C3}, 8}, {{K::C2, K::C3}, 9}, {{K::C3, K::C4}, 10},
                                  {{K::C3, K::C3}, 11}};
  auto it = cases.find(P{pair.first, pair.second});
  if (it == cases.end()) {
    throw SurgeryError("add_edge: unlisted kind pair (" + std::string(to_string(a)) + "," +
                       std::string(to_string(b)) + ")");
  }
  case_no = it->second;
  shift = case_no <= 7 ? 0 : (case_no <= 10 ? 1 : 2);

  std::vector<Vertex> vertices = graph.vertices();
  for (auto& vx : vertices) {
    if (vx.id == v && uses_sigma(vx.condition.kind)) vx.condition.sigma[{id, Side::Left}] = sigma_v;
    if (vx.id == w && uses_sigma(vx.condition.kind)) vx.condition.sigma[{id, Side::Right}] = sigma_w;
  }
  std::vector<Edge> edges = graph.edges();
  edges.push_back({id, length, v, w});
  MetricGraph out(std::move(vertices), std::move(edges), graph.explicit_union());
  require_valid(out);

  SurgeryRecord rec;
  rec.op = "add_edge";
  rec.rule = "case " + std::to_string(case_no) + " (" + std::string(to_string(a)) + "," + std::string(to_string(b)) + ")";
  rec.vertices = {v, w};
  rec.edges = {id};
  rec.inequalities = {detail::ineq(SpectrumRole::After, 0, SpectrumRole::Before, shift, std::max(1, k0 - shift))};
  Obligation o;
  o.kind = Obligation::Kind::AtLeast;
  o.rhs = SpectrumRole::Before;
  o.rhs_index = k0;
  o.threshold = std::pow(std::numbers::pi / length, 4);
  rec.obligations = {o};
  rec.validity = "k + " + std::to_string(shift) + " >= " + std::to_string(k0) + " where lambda_" +
                 std::to_string(k0) + "(graph) >= (pi/length)^4";
  return {std::move(out), std::move(rec)};
}

// ---------------------------------------------------------------------------
// Degree-two vertices

/// Splits an edge at fraction t in (0,1) by a C2 vertex with equal weights and zero strength.
inline SurgeryResult subdivide_edge(const MetricGraph& graph, const std::string& edge_id, double t,
                                    std::optional<std::string> vertex_id = std::nullopt) {
  detail::require_connected_input(graph, "subdivide_edge");
  if (!(t > 0.0 && t < 1.0)) throw SurgeryError("subdivide_edge: position must lie strictly inside the edge");
  const Edge& e = graph.edge(edge_id);
  const std::string vid = vertex_id ? *vertex_id : detail::fresh_id(graph, edge_id + "@");
  const std::string a = detail::fresh_id(graph, edge_id + "a");
  std::string b = detail::fresh_id(graph, edge_id + "b");
  if (b == a) b = a + "'";
  const auto sigma_key = [&](const std::string& old_vertex, Side old_side, Side new_side, const std::string& new_edge,
                             VertexCondition& c) {
    (void)old_vertex;
    auto it = c.sigma.find({edge_id, old_side});
    if (it == c.sigma.end()) return;
    const double s = it->second;
    c.sigma.erase(it);
    c.sigma[{new_edge, new_side}] = s;
  };
  std::vector<Vertex> vertices = graph.vertices();
  for (auto& v : vertices) {
    if (v.id == e.from) sigma_key(v.id, Side::Left, Side::Left, a, v.condition);
    if (v.id == e.to) sigma_key(v.id, Side::Right, Side::Right, b, v.condition);
  }
  VertexCondition c;
  c.kind = ConditionKind::C2;
  c.alpha = 0.0;
  c.sigma[{a, Side::Right}] = 1.0;
  c.sigma[{b, Side::Left}] = 1.0;
  vertices.push_back({vid, c});
  std::vector<Edge> edges;
  for (const auto& x : graph.edges()) {
    if (x.id != edge_id) edges.push_back(x);
  }
  edges.push_back({a, e.length * t, e.from, vid});
  edges.push_back({b, e.length * (1.0 - t), vid, e.to});
  MetricGraph out(std::move(vertices), std::move(edges), graph.explicit_union());
  require_valid(out);
  SurgeryRecord rec;
  rec.op = "subdivide_edge";
  rec.rule = "degree-two C2 vertex, equal weights, zero strength";
  rec.vertices = {vid};
  rec.edges = {edge_id, a, b};
  rec.inequalities = detail::rank_bracket(0);
  rec.validity = "k >= 1";
  return {std::move(out), std::move(rec)};
}

/// Removes a degree-two C2 vertex with equal weights and zero strength, joining its edges.
inline SurgeryResult merge_degree_two(const MetricGraph& graph, const std::string& vertex,
                                      std::optional<std::string> edge_id = std::nullopt) {
  detail::require_connected_input(graph, "merge_degree_two");
  const auto vi = graph.vertex_index(vertex);
  const auto& c = graph.vertices()[vi].condition;
  const auto& eps = graph.endpoints(vi);
  if (eps.size() != 2 || c.kind != ConditionKind::C2 || c.alpha != 0.0 ||
      c.sigma.at(eps[0]) != c.sigma.at(eps[1])) {
    throw SurgeryError("merge_degree_two: '" + vertex + "' is not a degree-two C2 vertex with equal weights and zero strength");
  }
  if (eps[0].edge == eps[1].edge) throw SurgeryError("merge_degree_two: vertex carries a self-loop");
  // Orient: first edge runs into the vertex, second runs out of it.
  const Edge e1 = graph.edge(eps[0].edge);
  const Edge e2 = graph.edge(eps[1].edge);
  auto far_end = [&](const Edge& e, Side at_vertex) {
    return at_vertex == Side::Right ? std::make_pair(e.from, Side::Left) : std::make_pair(e.to, Side::Right);
  };
  const auto [start, start_side] = far_end(e1, eps[0].side);
  const auto [stop, stop_side] = far_end(e2, eps[1].side);
  const std::string id = edge_id ? *edge_id : detail::joined_id({e1.id, e2.id});
  std::vector<Vertex> vertices;
  for (auto v : graph.vertices()) {
    if (v.id == vertex) continue;
    if (uses_sigma(v.condition.kind)) {
      std::map<Endpoint, double> sigma;
      for (const auto& [ep, s] : v.condition.sigma) {
        if (ep.edge == e1.id && ep.side == start_side && v.id == start) {
          sigma[{id, Side::Left}] = s;
        } else if (ep.edge == e2.id && ep.side == stop_side && v.id == stop) {
          sigma[{id, Side::Right}] = s;
        } else {
          sigma[ep] = s;
        }
      }
      v.condition.sigma = sigma;
    }
    vertices.push_back(v);
  }
  std::vector<Edge> edges;
  for (const auto& x : graph.edges()) {
    if (x.id != e1.id && x.id != e2.id) edges.push_back(x);
  }
  if (graph.find_edge(id) && id != e1.id && id != e2.id) throw SurgeryError("merge_degree_two: id '" + id + "' in use");
  edges.push_back({id, e1.length + e2.length, start, stop});
  MetricGraph out(std::move(vertices), std::move(edges), graph.explicit_union());
  require_valid(out);
  SurgeryRecord rec;
  rec.op = "merge_degree_two";
  rec.rule = "degree-two C2 vertex, equal weights, zero strength";
  rec.vertices = {vertex};
  rec.edges = {e1.id, e2.id, id};
  rec.inequalities = detail::rank_bracket(0);
  rec.validity = "k >= 1";
  return {std::move(out), std::move(rec)};
}

}  // namespace beamgraph
