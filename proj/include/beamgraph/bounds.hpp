#pragma once

// Eigenvalue estimates from test functions and surgery chains, evaluated
// against a computed spectrum.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "beamgraph/graph.hpp"
#include "beamgraph/secular.hpp"
#include "beamgraph/spectrum.hpp"

namespace beamgraph {

struct BoundValue {
  double value = 0.0;
  bool applicable = true;
  std::string reason;
  bool strict = false;

  static BoundValue inapplicable(std::string why) {
    BoundValue b;
    b.applicable = false;
    b.reason = std::move(why);
    return b;
  }
};

enum class BoundSide { Lower, Upper };

struct BoundEntry {
  std::string name;
  BoundSide side = BoundSide::Upper;
  /// Canonical 1-based index the bound is compared against.
  std::size_t k = 1;
  /// Index in the statement's own convention ("lowest nonzero" counts from 1 past the kernel).
  std::size_t stated_k = 1;
  bool nonzero_indexed = false;
  double bound = 0.0;
  double computed = 0.0;
  /// >= 0 means satisfied.
  double margin = 0.0;
  bool applicable = true;
  bool strict = false;
  std::string reason;

  [[nodiscard]] bool satisfied(double slack) const {
    return !applicable || margin >= -slack * std::max(1.0, std::abs(bound));
  }
};

struct BoundReport {
  std::vector<BoundEntry> entries;
  double slack = 1e-9;
  int nullity = 0;

  [[nodiscard]] bool ok() const {
    return std::all_of(entries.begin(), entries.end(), [&](const BoundEntry& e) { return e.satisfied(slack); });
  }
  [[nodiscard]] std::vector<const BoundEntry*> failures() const {
    std::vector<const BoundEntry*> out;
    for (const auto& e : entries) {
      if (!e.satisfied(slack)) out.push_back(&e);
    }
    return out;
  }
};

namespace detail {

inline std::optional<std::string> require_connected(const MetricGraph& g) {
  if (g.explicit_union() || g.component_count() != 1) return "graph is not connected";
  return std::nullopt;
}

inline std::optional<std::string> require_zero_strength(const MetricGraph& g) {
  for (const auto& v : g.vertices()) {
    if (v.condition.alpha != 0.0) return "nonzero strength at '" + v.id + "'";
  }
  return std::nullopt;
}

inline std::optional<std::string> require_finite_strength(const MetricGraph& g) {
  for (const auto& v : g.vertices()) {
    if (std::isinf(v.condition.alpha)) return "infinite strength at '" + v.id + "'";
  }
  return std::nullopt;
}

inline std::optional<std::string> require_kinds(const MetricGraph& g, std::initializer_list<ConditionKind> allowed) {
  for (const auto& v : g.vertices()) {
    if (std::find(allowed.begin(), allowed.end(), v.condition.kind) == allowed.end()) {
      return "vertex '" + v.id + "' has kind " + std::string(to_string(v.condition.kind));
    }
  }
  return std::nullopt;
}

inline std::optional<std::string> require_uniform_kind(const MetricGraph& g) {
  for (const auto& v : g.vertices()) {
    if (v.condition.kind != g.vertices().front().condition.kind) return "condition kinds are not uniform";
  }
  return std::nullopt;
}

inline double pow4(double x) { return x * x * x * x; }

template <class... Checks>
std::optional<std::string> first_failure(Checks... checks) {
  std::optional<std::string> out;
  ((out = out ? out : checks), ...);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Lowest eigenvalue

/// Constant test function: lambda_1 <= sum(alpha) / L.
inline BoundValue lambda1_upper_mean(const MetricGraph& graph) {
  if (auto why = detail::first_failure(detail::require_connected(graph), detail::require_finite_strength(graph))) {
    return BoundValue::inapplicable(*why);
  }
  double a = 0.0;
  for (const auto& v : graph.vertices()) a += v.condition.alpha;
  return {a / graph.total_length(), true, "", false};
}

/// cos(2 pi x / l_i) test function; strict.
inline BoundValue lambda1_upper_cos(const MetricGraph& graph) {
  if (auto why = detail::first_failure(detail::require_connected(graph), detail::require_finite_strength(graph))) {
    return BoundValue::inapplicable(*why);
  }
  double s = 0.0;
  for (const auto& e : graph.edges()) s += 8.0 * detail::pow4(std::numbers::pi) / (e.length * e.length * e.length);
  for (const auto& v : graph.vertices()) s += v.condition.alpha;
  return {2.0 / graph.total_length() * s, true, "", true};
}

struct Lambda2Upper {
  BoundValue general;
  BoundValue bipartite;
  BoundValue equilateral;
};

inline Lambda2Upper lambda2_upper(const MetricGraph& graph) {
  Lambda2Upper out;
  if (auto why = detail::first_failure(detail::require_connected(graph), detail::require_zero_strength(graph),
                                       detail::require_uniform_kind(graph))) {
    out.general = out.bipartite = out.equilateral = BoundValue::inapplicable(*why);
    return out;
  }
  const double L = graph.total_length();
  const double pi4 = detail::pow4(std::numbers::pi);
  double s = 0.0;
  double r = 0.0;
  for (const auto& e : graph.edges()) {
    s += 8.0 * pi4 / (e.length * e.length * e.length);
    r += std::pow(L / e.length, 3);
  }
  out.general = {2.0 / L * s, true, "", false};
  const auto p = graph_predicates(graph);
  out.bipartite = p.bipartite ? BoundValue{detail::pow4(std::numbers::pi / L) * r, true, "", false}
                              : BoundValue::inapplicable("graph is not bipartite");
  out.equilateral = p.equilateral
                        ? BoundValue{detail::pow4(2.0 * std::numbers::pi / graph.edges().front().length), true, "", false}
                        : BoundValue::inapplicable("graph is not equilateral");
  return out;
}

/// (pi / l_max)^4 below the lowest nonzero eigenvalue of a star.
inline BoundValue star_lower(const MetricGraph& graph) {
  if (auto why = detail::first_failure(detail::require_connected(graph), detail::require_zero_strength(graph),
                                       detail::require_kinds(graph, {ConditionKind::C2, ConditionKind::C4}))) {
    return BoundValue::inapplicable(*why);
  }
  if (!is_star(graph)) return BoundValue::inapplicable("graph is not a star");
  return {detail::pow4(std::numbers::pi / graph.max_edge_length()), true, "", false};
}

/// Comparison loop: one edge of length L (Eulerian) or 2L, periodic derivative
/// matching, total strength alpha (Eulerian) or 2 alpha.
inline MetricGraph eulerian_comparison_loop(const MetricGraph& graph) {
  double a = 0.0;
  for (const auto& v : graph.vertices()) a += v.condition.alpha;
  const bool eulerian = graph_predicates(graph).eulerian;
  const double L = graph.total_length() * (eulerian ? 1.0 : 2.0);
  VertexCondition c;
  c.kind = ConditionKind::C3;
  c.alpha = eulerian ? a : 2.0 * a;
  c.sigma = {{{"loop", Side::Left}, 1.0}, {{"loop", Side::Right}, -1.0}};
  return MetricGraph({{"v", c}}, {{"loop", L, "v", "v"}});
}

/// Lower bound on the lowest nonzero eigenvalue through an Eulerian trail.
inline BoundValue eulerian_lower(const MetricGraph& graph) {
  if (auto why = detail::first_failure(detail::require_connected(graph), detail::require_finite_strength(graph),
                                       detail::require_kinds(graph, {ConditionKind::C3, ConditionKind::C4}))) {
    return BoundValue::inapplicable(*why);
  }
  bool pos = false;
  bool neg = false;
  for (const auto& v : graph.vertices()) {
    pos = pos || v.condition.alpha > 0;
    neg = neg || v.condition.alpha < 0;
    if (v.condition.kind == ConditionKind::C3) {
      const double first = v.condition.sigma.begin()->second;
      for (const auto& [ep, s] : v.condition.sigma) {
        if (s != first) return BoundValue::inapplicable("unequal sigma at '" + v.id + "'");
      }
    }
  }
  if (pos && neg) return BoundValue::inapplicable("strengths of mixed sign");
  const bool eulerian = graph_predicates(graph).eulerian;
  const double L = graph.total_length();
  if (!pos && !neg) {
    return {(eulerian ? 16.0 : 1.0) * detail::pow4(std::numbers::pi / L), true, "", false};
  }
  const auto loop = eulerian_comparison_loop(graph);
  const auto s = scan_spectrum(loop, 2);
  const int z = s.nullity(1e-9);
  return {s.eigenvalue(static_cast<std::size_t>(z) + 1), true, "comparison loop, secular solver", false};
}

// ---------------------------------------------------------------------------
// Higher eigenvalues

struct BettiUpper {
  BoundValue betti;
  BoundValue pendant_tree;
  BoundValue equilateral;
};

/// Bounds on the k-th nonzero eigenvalue from the cycle structure.
inline BettiUpper betti_upper(const MetricGraph& graph, std::size_t k) {
  BettiUpper out;
  if (auto why = detail::first_failure(detail::require_connected(graph), detail::require_zero_strength(graph),
                                       detail::require_kinds(graph, {ConditionKind::C2, ConditionKind::C4}))) {
    out.betti = out.pendant_tree = out.equilateral = BoundValue::inapplicable(*why);
    return out;
  }
  const double beta = static_cast<double>(betti_number(graph));
  const double kk = static_cast<double>(k);
  out.betti = {detail::pow4((kk + beta) * std::numbers::pi / graph.max_edge_length()), true, "", false};
  const auto br = bridges(graph);
  if (br.empty()) {
    out.pendant_tree = BoundValue::inapplicable("no bridge edge");
  } else {
    double lmax = 0.0;
    for (auto e : br) lmax = std::max(lmax, graph.edges()[e].length);
    out.pendant_tree = {detail::pow4(kk * std::numbers::pi / lmax), true, "longest bridge as the tree", false};
  }
  if (graph_predicates(graph).equilateral) {
    out.equilateral = {detail::pow4((kk + beta) * static_cast<double>(graph.edge_count()) * std::numbers::pi /
                                    graph.total_length()),
                       true, "", false};
  } else {
    out.equilateral = BoundValue::inapplicable("graph is not equilateral");
  }
  return out;
}

/// Bound on the k-th nonzero eigenvalue in terms of total length.
inline BoundValue total_length_upper(const MetricGraph& graph, std::size_t k) {
  if (auto why = detail::first_failure(detail::require_connected(graph), detail::require_zero_strength(graph),
                                       detail::require_kinds(graph, {ConditionKind::C2, ConditionKind::C4}))) {
    return BoundValue::inapplicable(*why);
  }
  const double n = static_cast<double>(k) - 3.0 + 3.0 * static_cast<double>(graph.edge_count()) +
                   static_cast<double>(betti_number(graph));
  return {detail::pow4(n * std::numbers::pi / graph.total_length()), true, "", false};
}

enum class WeylVariant { C1, C2 };

struct WeylBracket {
  double lower = 0.0;
  double upper = 0.0;
  bool applicable = true;
  std::string reason;
};

inline WeylBracket weyl_bracket(const MetricGraph& graph, std::size_t k, WeylVariant variant) {
  WeylBracket out;
  const auto kind = variant == WeylVariant::C1 ? ConditionKind::C1 : ConditionKind::C2;
  if (auto why = detail::first_failure(detail::require_connected(graph), detail::require_zero_strength(graph),
                                       detail::require_kinds(graph, {kind}))) {
    out.applicable = false;
    out.reason = *why;
    return out;
  }
  const double c = std::numbers::pi / graph.total_length();
  const double kk = static_cast<double>(k);
  const double V = static_cast<double>(graph.vertex_count());
  const double E = static_cast<double>(graph.edge_count());
  out.lower = kk > V ? detail::pow4(c * (kk - V)) : 0.0;
  out.upper = variant == WeylVariant::C1 ? detail::pow4(c * (kk + E - 1.0)) : detail::pow4(c * (kk + E + V - 1.0));
  return out;
}

/// Spectrum of the graph with every C1 vertex at infinite strength: hinged
/// intervals, (j pi / l_i)^4.
inline std::vector<double> hinged_decoupling(const MetricGraph& graph, double up_to) {
  std::vector<double> out;
  for (const auto& e : graph.edges()) {
    for (int j = 1;; ++j) {
      const double v = detail::pow4(j * std::numbers::pi / e.length);
      if (v > up_to) break;
      out.push_back(v);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct SandwichCheck {
  bool applicable = true;
  std::string reason;
  std::size_t points = 0;
  std::size_t violations = 0;
  /// min over sample points of (N_graph - N_decoupled) and (N_decoupled + |V| - N_graph).
  long worst = 0;
};

/// N_inf(lambda) <= N(lambda) <= N_inf(lambda) + |V| sampled between consecutive eigenvalues,
/// plus `samples` evenly spaced points in (0, covered range) away from every eigenvalue.
inline SandwichCheck counting_sandwich(const MetricGraph& graph, const Spectrum& spectrum, std::size_t samples = 0) {
  SandwichCheck out;
  if (auto why = detail::first_failure(detail::require_connected(graph), detail::require_zero_strength(graph),
                                       detail::require_kinds(graph, {ConditionKind::C1}))) {
    out.applicable = false;
    out.reason = *why;
    return out;
  }
  const double top = spectrum.covered_up_to;
  const auto dec = hinged_decoupling(graph, top);
  std::vector<double> marks = spectrum.expanded();
  marks.insert(marks.end(), dec.begin(), dec.end());
  std::erase_if(marks, [top](double m) { return m > top; });
  marks.push_back(top);
  std::sort(marks.begin(), marks.end());
  const long V = static_cast<long>(graph.vertex_count());
  out.worst = V;
  auto probe = [&](double x) {
    const long n = static_cast<long>(counting_function(spectrum, x));
    const long ninf = static_cast<long>(std::upper_bound(dec.begin(), dec.end(), x) - dec.begin());
    const long w = std::min(n - ninf, ninf + V - n);
    out.worst = std::min(out.worst, w);
    ++out.points;
    if (w < 0) ++out.violations;
  };
  for (std::size_t i = 0; i + 1 < marks.size(); ++i) {
    const double a = marks[i];
    const double b = marks[i + 1];
    if (b - a <= 1e-9 * std::max(1.0, std::abs(b))) continue;
    probe(0.5 * (a + b));
  }
  for (std::size_t i = 1; i <= samples; ++i) {
    const double x = top * static_cast<double>(i) / static_cast<double>(samples + 1);
    const auto near = std::lower_bound(marks.begin(), marks.end(), x);
    const double gap = 1e-9 * std::max(1.0, x);
    if (near != marks.end() && *near - x <= gap) continue;
    if (near != marks.begin() && x - *(near - 1) <= gap) continue;
    probe(x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report

/// Evaluates every bound on the graph against `spectrum` for stated indices 1..K.
inline BoundReport evaluate_bounds(const MetricGraph& graph, const Spectrum& spectrum, std::size_t K,
                                   double slack = 1e-9) {
  BoundReport report;
  report.slack = slack;
  const double zero_tol = 1e-7 * std::max(1.0, std::pow(std::numbers::pi / graph.total_length(), 4));
  report.nullity = spectrum.nullity(zero_tol);
  const auto z = static_cast<std::size_t>(report.nullity);

  auto add = [&](const std::string& name, BoundSide side, std::size_t stated, bool nonzero, const BoundValue& b) {
    BoundEntry e;
    e.name = name;
    e.side = side;
    e.stated_k = stated;
    e.nonzero_indexed = nonzero;
    e.k = nonzero ? stated + z : stated;
    e.applicable = b.applicable;
    e.reason = b.reason;
    e.strict = b.strict;
    e.bound = b.value;
    if (!b.applicable) {
      const bool seen = std::any_of(report.entries.begin(), report.entries.end(),
                                    [&](const BoundEntry& x) { return !x.applicable && x.name == name; });
      if (seen) return;
    } else {
      if (e.k > spectrum.size()) return;
      e.computed = spectrum.eigenvalue(e.k);
      e.margin = side == BoundSide::Upper ? e.bound - e.computed : e.computed - e.bound;
    }
    report.entries.push_back(std::move(e));
  };

  add("lambda1_upper_mean", BoundSide::Upper, 1, false, lambda1_upper_mean(graph));
  add("lambda1_upper_cos", BoundSide::Upper, 1, false, lambda1_upper_cos(graph));
  const auto l2 = lambda2_upper(graph);
  add("lambda2_upper_general", BoundSide::Upper, 2, false, l2.general);
  add("lambda2_upper_bipartite", BoundSide::Upper, 2, false, l2.bipartite);
  add("lambda2_upper_equilateral", BoundSide::Upper, 2, false, l2.equilateral);
  add("star_lower", BoundSide::Lower, 1, true, star_lower(graph));
  add("eulerian_lower", BoundSide::Lower, 1, true, eulerian_lower(graph));
  for (std::size_t k = 1; k <= K; ++k) {
    const auto b = betti_upper(graph, k);
    add("betti_upper", BoundSide::Upper, k, true, b.betti);
    add("pendant_tree_upper", BoundSide::Upper, k, true, b.pendant_tree);
    add("betti_upper_equilateral", BoundSide::Upper, k, true, b.equilateral);
    add("total_length_upper", BoundSide::Upper, k, true, total_length_upper(graph, k));
    for (auto variant : {WeylVariant::C1, WeylVariant::C2}) {
      const auto w = weyl_bracket(graph, k, variant);
      const std::string stem = variant == WeylVariant::C1 ? "weyl_c1" : "weyl_c2";
      BoundValue lo{w.lower, w.applicable, w.reason, false};
      BoundValue up{w.upper, w.applicable, w.reason, false};
      add(stem + "_lower", BoundSide::Lower, k, false, lo);
      add(stem + "_upper", BoundSide::Upper, k, false, up);
    }
  }
  return report;
}

}  // namespace beamgraph
