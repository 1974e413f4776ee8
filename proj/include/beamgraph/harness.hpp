#pragma once

// Executable checks for surgery records and bounds, random instance
// generation and the suite driver.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "beamgraph/bounds.hpp"
#include "beamgraph/fem.hpp"
#include "beamgraph/graph.hpp"
#include "beamgraph/secular.hpp"
#include "beamgraph/spectrum.hpp"
#include "beamgraph/surgery.hpp"

namespace beamgraph {

/// Every slack constant used by the harness. Reported with each result.
struct Tolerances {
  /// Certified inequalities: violation when lower - upper > inequality * max(1, |lambda|).
  double inequality = 1e-7;
  /// Bounds: violation when the margin is below -bound * max(1, |bound value|).
  double bound = 1e-9;
  /// Strict inequalities must clear this relative gap.
  double strict_gap = 1e-9;
  /// Eigenfunction value (L2-normalized) treated as nonzero at a vertex.
  double vertex_value = 1e-2;
  /// Eigenvalues within this relative distance count as equal (simplicity, gaps).
  double cluster = 1e-9;
  /// Scaled loop residual bound.
  double loop_residual = 1e-8;
  /// Degree-two merge invariance and symmetric equality checks (relative).
  double invariance = 1e-8;
};

enum class CheckStatus { Pass, Fail, HypothesisUnmet };

inline constexpr std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::HypothesisUnmet: return "hypothesis-unmet";
  }
  return "?";
}

struct CheckResult {
  std::string check;
  std::string instance;
  std::vector<int> indices;
  /// Smallest relative margin seen; negative beyond tolerance means failure.
  double worst_margin = std::numeric_limits<double>::infinity();
  CheckStatus status = CheckStatus::Pass;
  std::string detail;
  Tolerances tolerances;
  std::vector<double> before;
  std::vector<double> after;
  std::optional<SurgeryRecord> record;
};

struct RecordContext {
  const Spectrum* auxiliary = nullptr;
  const MetricGraph* before_graph = nullptr;
  const MetricGraph* after_graph = nullptr;
};

namespace detail {

inline const Spectrum& pick(SpectrumRole role, const Spectrum& before, const Spectrum& after, const RecordContext& ctx) {
  if (role == SpectrumRole::Before) return before;
  if (role == SpectrumRole::After) return after;
  if (!ctx.auxiliary) throw Error("check_record: record needs the auxiliary spectrum");
  return *ctx.auxiliary;
}

inline double at(const Spectrum& s, int k, const char* what) {
  if (k < 1) throw Error("check_record: index below 1");
  if (static_cast<std::size_t>(k) > s.size()) {
    throw Error(std::string("check_record: insufficient spectral depth for ") + what + " index " + std::to_string(k));
  }
  return s.eigenvalue(static_cast<std::size_t>(k));
}

inline double scale(double a, double b) { return std::max({1.0, std::abs(a), std::abs(b)}); }

inline bool nonzero_at(const SpectralCluster& c, const MetricGraph& g, const std::string& vertex, double thr,
                       bool all_modes) {
  const auto vi = g.vertex_index(vertex);
  if (c.modes.empty()) return false;
  bool any = false;
  bool all = true;
  for (const auto& m : c.modes) {
    const bool nz = std::abs(m.vertex_values.at(vi)) >= thr;
    any = any || nz;
    all = all && nz;
  }
  return all_modes ? all : any;
}

}  // namespace detail

/// Checks every inequality of `record` for k = k_min..K. Obligations are evaluated first.
inline CheckResult check_record(const Spectrum& before, const Spectrum& after, const SurgeryRecord& record,
                                std::size_t K, const RecordContext& ctx = {}, const Tolerances& tol = {}) {
  CheckResult res;
  res.check = record.op;
  res.tolerances = tol;
  res.record = record;
  res.before = before.expanded();
  res.after = after.expanded();

  for (const auto& o : record.obligations) {
    bool held = false;
    if (o.kind == Obligation::Kind::Compare) {
      const double lhs = detail::at(detail::pick(o.lhs, before, after, ctx), o.lhs_index, "obligation");
      const double rhs = detail::at(detail::pick(o.rhs, before, after, ctx), o.rhs_index, "obligation");
      held = lhs <= rhs;
    } else {
      held = detail::at(detail::pick(o.rhs, before, after, ctx), o.rhs_index, "obligation") >= o.threshold;
    }
    if (!held) {
      res.status = CheckStatus::HypothesisUnmet;
      res.detail = "obligation unmet: " + o.describe();
      return res;
    }
  }

  const int Ki = static_cast<int>(K);
  for (std::size_t qi = 0; qi < record.inequalities.size(); ++qi) {
    const auto& q = record.inequalities[qi];
    const int top = q.k_max ? std::min(*q.k_max, Ki) : Ki;
    for (int k = std::max(1, q.k_min); k <= top; ++k) {
      const int li = k + q.lower_shift;
      const int ui = k + q.upper_shift;
      if (li < 1 || ui < 1) continue;
      if (q.nonnegative_guard && detail::at(before, k, "guard") < 0) continue;
      const double lo = detail::at(detail::pick(q.lower, before, after, ctx), li, "lower");
      const double up = detail::at(detail::pick(q.upper, before, after, ctx), ui, "upper");
      const double rel = (up - lo) / detail::scale(lo, up);
      res.worst_margin = std::min(res.worst_margin, rel);
      if (std::find(res.indices.begin(), res.indices.end(), k) == res.indices.end()) res.indices.push_back(k);
      if (rel < -tol.inequality && res.status != CheckStatus::Fail) {
        res.status = CheckStatus::Fail;
        res.detail = fmt::format("violated {} at k={}: {:.12g} > {:.12g}", q.describe(), k, lo, up);
      }
    }
  }

  if (record.strict == StrictRule::None || res.status == CheckStatus::Fail) return res;
  if (!ctx.before_graph || !ctx.after_graph) return res;
  const auto& q = record.inequalities.at(static_cast<std::size_t>(record.strict_inequality));
  const int top = q.k_max ? std::min(*q.k_max, Ki) : Ki;
  auto close = [&](double a, double b) { return std::abs(a - b) <= tol.cluster * detail::scale(a, b); };
  for (int k = std::max(1, q.k_min); k <= top; ++k) {
    const int li = k + q.lower_shift;
    const int ui = k + q.upper_shift;
    if (li < 1 || ui < 1) continue;
    bool applies = false;
    const double bk = detail::at(before, k, "strict");
    switch (record.strict) {
      case StrictRule::StrengthIncrease: {
        const auto& c = after.cluster_of(static_cast<std::size_t>(k));
        applies = c.multiplicity == 1 && detail::nonzero_at(c, *ctx.after_graph, record.strict_vertex, tol.vertex_value, true);
        break;
      }
      case StrictRule::Pendant: {
        const bool gap = k == 1 || !close(detail::at(before, k - 1, "strict"), bk);
        const auto& o = record.obligations.front();
        const double lr = detail::at(detail::pick(o.lhs, before, after, ctx), o.lhs_index, "strict");
        const double lk0 = detail::at(before, o.rhs_index, "strict");
        applies = gap && lr < lk0 && !close(lr, lk0) &&
                  detail::nonzero_at(before.cluster_of(static_cast<std::size_t>(k)), *ctx.before_graph,
                                     record.strict_vertex, tol.vertex_value, false);
        break;
      }
      case StrictRule::Insertion: {
        const double prev = k == 1 ? 0.0 : std::max(0.0, detail::at(before, k - 1, "strict"));
        applies = bk > prev && !close(bk, prev) &&
                  detail::nonzero_at(before.cluster_of(static_cast<std::size_t>(k)), *ctx.before_graph,
                                     record.strict_vertex, tol.vertex_value, false);
        break;
      }
      case StrictRule::None: break;
    }
    if (!applies) continue;
    const double lo = detail::at(detail::pick(q.lower, before, after, ctx), li, "lower");
    const double up = detail::at(detail::pick(q.upper, before, after, ctx), ui, "upper");
    if ((up - lo) / detail::scale(lo, up) <= tol.strict_gap) {
      res.status = CheckStatus::Fail;
      res.detail = fmt::format("strict inequality not strict at k={}: {:.12g} vs {:.12g}", k, lo, up);
      return res;
    }
  }
  return res;
}

/// Bounds report turned into a check result.
inline CheckResult check_bounds(const BoundReport& report, const std::string& instance, const Tolerances& tol = {}) {
  CheckResult res;
  res.check = "bounds";
  res.instance = instance;
  res.tolerances = tol;
  for (const auto& e : report.entries) {
    if (!e.applicable) continue;
    const double rel = e.margin / std::max(1.0, std::abs(e.bound));
    res.worst_margin = std::min(res.worst_margin, rel);
    res.indices.push_back(static_cast<int>(e.k));
    if (rel < -tol.bound && res.status != CheckStatus::Fail) {
      res.status = CheckStatus::Fail;
      res.detail = fmt::format("{} ({}) at k={}: bound {:.12g}, computed {:.12g}", e.name,
                               e.side == BoundSide::Upper ? "upper" : "lower", e.k, e.bound, e.computed);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Random graphs

struct SizeParams {
  int min_vertices = 2;
  int max_vertices = 6;
  int min_edges = 1;
  int max_edges = 8;
  double min_length = 0.5;
  double max_length = 2.0;
};

struct KindPolicy {
  std::vector<ConditionKind> kinds{ConditionKind::C1, ConditionKind::C2, ConditionKind::C3, ConditionKind::C4};
  bool zero_strength = false;
  bool equal_sigma = false;
  double alpha_max = 2.0;
  std::string name = "mixed";

  static KindPolicy uniform(ConditionKind k, bool zero_strength = true) {
    KindPolicy p;
    p.kinds = {k};
    p.zero_strength = zero_strength;
    p.name = std::string(to_string(k)) + (zero_strength ? ", alpha=0" : "");
    return p;
  }
};

/// Connected graph: random spanning tree plus extra edges (self-loops allowed).
inline MetricGraph random_graph(std::uint64_t seed, const SizeParams& size = {}, const KindPolicy& policy = {}) {
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };
  auto uniform = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  const int V = uniform_int(size.min_vertices, size.max_vertices);
  const int E = std::max(V - 1, uniform_int(std::max(size.min_edges, 1), std::max(size.max_edges, V - 1)));
  const int Eall = std::max(E, 1);
  std::vector<Edge> edges;
  auto vid = [](int i) { return "v" + std::to_string(i); };
  for (int i = 1; i < V; ++i) {
    const int j = uniform_int(0, i - 1);
    const bool flip = uniform_int(0, 1) == 1;
    edges.push_back({"", uniform(size.min_length, size.max_length), vid(flip ? i : j), vid(flip ? j : i)});
  }
  while (static_cast<int>(edges.size()) < Eall) {
    const int a = uniform_int(0, V - 1);
    const int b = uniform_int(0, V - 1);
    edges.push_back({"", uniform(size.min_length, size.max_length), vid(a), vid(b)});
  }
  for (std::size_t e = 0; e < edges.size(); ++e) edges[e].id = "e" + std::to_string(e);
  std::vector<Vertex> vertices;
  for (int i = 0; i < V; ++i) {
    VertexCondition c;
    c.kind = policy.kinds[static_cast<std::size_t>(uniform_int(0, static_cast<int>(policy.kinds.size()) - 1))];
    c.alpha = 0.0;
    if (!policy.zero_strength && uniform_int(0, 1) == 1) c.alpha = uniform(0.0, policy.alpha_max);
    vertices.push_back({vid(i), c});
  }
  MetricGraph g(vertices, edges);
  std::vector<Vertex> out = g.vertices();
  for (std::size_t v = 0; v < out.size(); ++v) {
    if (!uses_sigma(out[v].condition.kind)) continue;
    for (const auto& ep : g.endpoints(v)) out[v].condition.sigma[ep] = policy.equal_sigma ? 1.0 : uniform(0.5, 2.0);
  }
  return MetricGraph(std::move(out), g.edges());
}

/// Sets kind (and sigma when needed) at one vertex.
inline MetricGraph set_kind(const MetricGraph& g, const std::string& vertex, ConditionKind kind, std::mt19937_64& rng,
                            std::optional<double> alpha = std::nullopt) {
  VertexCondition c = g.vertex(vertex).condition;
  const bool had = uses_sigma(c.kind);
  c.kind = kind;
  if (alpha) c.alpha = *alpha;
  if (uses_sigma(kind) && !had) {
    c.sigma.clear();
    for (const auto& ep : g.endpoints(g.vertex_index(vertex))) {
      c.sigma[ep] = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
    }
  }
  if (!uses_sigma(kind)) c.sigma.clear();
  return g.with_condition(vertex, c);
}

// ---------------------------------------------------------------------------
// Suites

enum class SpectrumSource { Fem, Secular };

struct SuiteConfig {
  std::size_t depth = 12;
  std::size_t instances = 200;
  std::uint64_t seed = 20240601;
  /// Element length for fem spectra; one mesh rule for both sides of every record.
  double fem_h = 0.1;
  /// Every n-th surgery instance is re-checked with secular spectra (0 disables).
  std::size_t secular_every = 10;
  /// Reduce every certified upper index by one (mutation run).
  bool mutate = false;
  unsigned threads = 0;
  Tolerances tolerances;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> results;

  [[nodiscard]] std::size_t count(CheckStatus s) const {
    return static_cast<std::size_t>(
        std::count_if(results.begin(), results.end(), [&](const CheckResult& r) { return r.status == s; }));
  }
  [[nodiscard]] bool ok() const { return count(CheckStatus::Fail) == 0; }
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"condition-change", "strength", "gluing",  "splitting",
                                                 "flower",           "pendant",  "insertion", "add-edge",
                                                 "bounds",           "weyl",     "degree-two-merge", "loop-secular"};
  return names;
}

inline unsigned thread_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("BEAMGRAPH_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on a small pool; results land by index.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  const unsigned t = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1)));
  if (t <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < t; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

namespace detail {

/// Element length shared by every graph of one instance, fine enough for `count` eigenvalues.
inline double case_h(const MetricGraph& g, std::size_t count, const SuiteConfig& cfg) {
  return std::min(cfg.fem_h, g.total_length() / static_cast<double>(count + 4));
}

inline Spectrum harness_spectrum(const MetricGraph& g, std::size_t count, SpectrumSource src, const SuiteConfig& cfg,
                                 double h) {
  if (src == SpectrumSource::Secular) return scan_spectrum(g, count);
  FemOptions opt;
  opt.mesh = MeshSpec::by_length(h, 2);
  opt.cluster_tol = cfg.tolerances.cluster;
  return solve_fem(g, count, opt);
}

inline SurgeryRecord mutated(SurgeryRecord r) {
  for (auto& q : r.inequalities) q.upper_shift -= 1;
  r.strict = StrictRule::None;
  return r;
}

struct SurgeryCase {
  MetricGraph before;
  SurgeryResult result;
  std::optional<MetricGraph> auxiliary;
  std::string description;
};

inline std::string pick_vertex(const MetricGraph& g, std::mt19937_64& rng) {
  const auto i = std::uniform_int_distribution<std::size_t>(0, g.vertex_count() - 1)(rng);
  return g.vertices()[i].id;
}

inline double unit(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Smallest k0 with lambda_{k0}(spectrum) >= value, or nullopt.
inline std::optional<int> first_index_at_least(const Spectrum& s, double value) {
  const auto v = s.expanded();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] >= value) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

inline MetricGraph c4_graph(const MetricGraph& g) {
  std::vector<Vertex> vs = g.vertices();
  for (auto& v : vs) v.condition = VertexCondition{};
  return MetricGraph(vs, g.edges());
}

/// Builds instance i of a surgery suite. Returns nullopt when the drawn graph cannot host the operation.
inline std::optional<SurgeryCase> make_case(const std::string& suite, std::size_t i, std::uint64_t seed,
                                            const SuiteConfig& cfg) {
  using K = ConditionKind;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  MetricGraph g = random_graph(seed);
  SurgeryCase sc{g, {g, {}}, std::nullopt, ""};

  if (suite == "condition-change") {
    static const std::vector<std::pair<K, K>> pairs = {{K::C1, K::C2}, {K::C1, K::C3}, {K::C1, K::C4},
                                                       {K::C2, K::C3}, {K::C2, K::C4}, {K::C3, K::C4}};
    const auto [from, to] = pairs[i % pairs.size()];
    const auto v = pick_vertex(g, rng);
    sc.before = set_kind(g, v, from, rng);
    std::optional<std::map<Endpoint, double>> sigma;
    if (uses_sigma(to) && !uses_sigma(from)) {
      std::map<Endpoint, double> s;
      for (const auto& ep : sc.before.endpoints(sc.before.vertex_index(v))) s[ep] = 0.5 + 1.5 * unit(rng);
      sigma = s;
    }
    if (i % 13 == 12 && from == K::C1 && to == K::C2) {
      std::vector<Vertex> vs = g.vertices();
      for (auto& x : vs) x.condition = VertexCondition{K::C1, x.condition.alpha, {}};
      sc.before = MetricGraph(vs, g.edges());
      sc.result = change_condition_all(sc.before);
    } else {
      sc.result = change_condition(sc.before, v, to, sigma);
    }
  } else if (suite == "strength") {
    if (i % 5 == 4) {
      const auto v = pick_vertex(g, rng);
      sc.before = i % 10 == 4 ? set_kind(g, v, K::C1, rng) : g;
      sc.result = change_strength(sc.before, v, kInfiniteStrength);
    } else if (i % 2 == 1) {
      std::map<std::string, double> a;
      for (const auto& v : g.vertices()) a[v.id] = v.condition.alpha + 0.1 + unit(rng);
      sc.result = change_strength_all(g, a);
    } else {
      const auto v = pick_vertex(g, rng);
      sc.result = change_strength(g, v, g.vertex(v).condition.alpha + 0.1 + 1.9 * unit(rng));
    }
  } else if (suite == "gluing") {
    if (g.vertex_count() < 2) return std::nullopt;
    const auto& rules = glue_rules();
    if (i % 9 == 8 && g.vertex_count() >= 3) {
      // Three vertices, uniform class I (C4 everywhere) or II (C3 everywhere).
      const K k = (i / 9) % 2 == 0 ? K::C4 : K::C3;
      MetricGraph h = g;
      std::vector<std::string> ids;
      for (std::size_t j = 0; j < 3; ++j) {
        ids.push_back(h.vertices()[j].id);
        h = set_kind(h, ids.back(), k, rng);
      }
      sc.before = h;
      sc.result = glue(h, ids, k);
    } else {
      const std::size_t which = i % (rules.size() + 1);
      auto v1 = pick_vertex(g, rng);
      auto v2 = pick_vertex(g, rng);
      while (v2 == v1) v2 = pick_vertex(g, rng);
      K k1 = K::C1, k2 = K::C1, kg = K::C2;
      if (which < rules.size()) {
        k1 = rules[which].v1;
        k2 = rules[which].v2;
        kg = rules[which].glued;
      }
      MetricGraph h = set_kind(set_kind(g, v1, k1, rng), v2, k2, rng);
      sc.before = h;
      sc.result = glue(h, v1, v2, kg);
    }
  } else if (suite == "splitting") {
    static const std::vector<std::array<K, 3>> patterns = {
        {K::C1, K::C1, K::C1}, {K::C3, K::C3, K::C3}, {K::C4, K::C4, K::C4}, {K::C4, K::C1, K::C4},
        {K::C3, K::C1, K::C3}, {K::C4, K::C2, K::C4}, {K::C4, K::C3, K::C4}};
    const auto p = patterns[i % patterns.size()];
    std::vector<std::string> candidates;
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
      if (g.degree(v) >= 2) candidates.push_back(g.vertices()[v].id);
    }
    if (candidates.empty()) return std::nullopt;
    const auto v = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
    MetricGraph h = set_kind(g, v, p[0], rng);
    const auto& eps = h.endpoints(h.vertex_index(v));
    std::vector<Endpoint> first;
    for (const auto& ep : eps) {
      if (unit(rng) < 0.5) first.push_back(ep);
    }
    if (first.empty()) first.push_back(eps.front());
    if (first.size() == eps.size()) first.pop_back();
    const double a0 = h.vertex(v).condition.alpha;
    const double share = unit(rng);
    SplitPart p1{p[1], a0 * share, {}};
    SplitPart p2{p[2], a0 - a0 * share, {}};
    sc.before = h;
    sc.result = split(h, v, first, p1, p2);
  } else if (suite == "flower") {
    const K k = static_cast<K>(i % 4);
    std::vector<Vertex> vs = g.vertices();
    MetricGraph h = g;
    for (const auto& v : vs) h = set_kind(h, v.id, k, rng);
    sc.before = h;
    sc.result = flower(h);
  } else if (suite == "pendant") {
    const auto& rules = glue_rules();
    const auto& rule = rules[i % rules.size()];
    SizeParams small;
    small.min_vertices = 1;
    small.max_vertices = 3;
    small.max_edges = 3;
    MetricGraph pendant = random_graph(seed * 31 + 7, small);
    const auto v = pick_vertex(g, rng);
    const auto w = pick_vertex(pendant, rng);
    MetricGraph base = set_kind(g, v, rule.v1, rng);
    pendant = set_kind(pendant, w, rule.v2, rng);
    const int r = 1 + static_cast<int>((i / rules.size()) % 3);
    const auto src = SpectrumSource::Fem;
    const double h = std::min(case_h(base, 3 * cfg.depth, cfg), case_h(pendant, 3 * cfg.depth, cfg));
    const auto aux = harness_spectrum(pendant, static_cast<std::size_t>(r), src, cfg, h);
    const auto bs = harness_spectrum(base, cfg.depth, src, cfg, h);
    auto k0 = first_index_at_least(bs, aux.eigenvalue(static_cast<std::size_t>(r)));
    if (!k0) return std::nullopt;
    sc.before = base;
    sc.auxiliary = pendant;
    sc.result = attach_pendant(base, pendant, v, w, rule.glued, r, *k0);
  } else if (suite == "insertion") {
    std::vector<std::string> candidates;
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
      if (g.degree(v) >= 2) candidates.push_back(g.vertices()[v].id);
    }
    if (candidates.empty()) return std::nullopt;
    const auto v0 = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
    SizeParams small;
    small.min_vertices = 2;
    small.max_vertices = 3;
    small.max_edges = 3;
    MetricGraph ins = c4_graph(random_graph(seed * 17 + 3, small));
    // Rows: (v0, w1, w2) kinds.
    static const std::vector<std::array<int, 3>> rows = {{0, 0, 0},  {3, 3, -1}, {2, 2, 0}, {2, 2, 2},
                                                         {0, 3, -1}, {1, 3, -1}, {2, 3, -1}};
    const auto row = rows[i % rows.size()];
    auto kind_of = [&](int code) { return code < 0 ? static_cast<K>(std::uniform_int_distribution<int>(0, 3)(rng)) : static_cast<K>(code); };
    const K kv = static_cast<K>(row[0]);
    MetricGraph h = set_kind(g, v0, kv, rng);
    const auto& eps = h.endpoints(h.vertex_index(v0));
    const std::string w1 = ins.vertices()[0].id;
    const std::string w2 = ins.vertices()[1].id;
    std::map<Endpoint, std::string> att;
    for (std::size_t j = 0; j < eps.size(); ++j) att[eps[j]] = j == 0 ? w1 : (j == 1 ? w2 : (unit(rng) < 0.5 ? w1 : w2));
    const double a0 = h.vertex(v0).condition.alpha;
    const double share = unit(rng);
    std::vector<std::pair<std::string, PidCondition>> pids = {{w1, {kind_of(row[1]), a0 * share}},
                                                             {w2, {kind_of(row[2]), a0 - a0 * share}}};
    sc.before = h;
    sc.result = insert_graph(h, v0, ins, att, pids);
  } else if (suite == "add-edge") {
    const auto v = pick_vertex(g, rng);
    const auto w = pick_vertex(g, rng);
    const double len = 0.5 + 2.5 * unit(rng);
    const auto bs = harness_spectrum(g, cfg.depth, SpectrumSource::Fem, cfg, case_h(g, 3 * cfg.depth, cfg));
    auto k0 = first_index_at_least(bs, std::pow(std::numbers::pi / len, 4));
    if (!k0) return std::nullopt;
    sc.result = add_edge(g, v, w, len, *k0);
  } else {
    throw Error("unknown surgery suite '" + suite + "'");
  }
  sc.description = fmt::format("seed={} op={} rule={}", seed, sc.result.record.op, sc.result.record.rule);
  return sc;
}

inline std::vector<CheckResult> check_case(const SurgeryCase& sc, SpectrumSource src, const SuiteConfig& cfg) {
  const auto& rec0 = sc.result.record;
  const SurgeryRecord rec = cfg.mutate ? mutated(rec0) : rec0;
  const std::size_t depth = cfg.depth + static_cast<std::size_t>(std::max(0, rec0.max_shift())) + 1;
  double h = std::min(case_h(sc.before, 3 * cfg.depth, cfg), case_h(sc.result.graph, 3 * cfg.depth, cfg));
  if (sc.auxiliary) h = std::min(h, case_h(*sc.auxiliary, 3 * cfg.depth, cfg));
  const auto before = harness_spectrum(sc.before, depth, src, cfg, h);
  const auto after = harness_spectrum(sc.result.graph, depth, src, cfg, h);
  std::optional<Spectrum> aux;
  RecordContext ctx;
  ctx.before_graph = &sc.before;
  ctx.after_graph = &sc.result.graph;
  if (sc.auxiliary) {
    aux = harness_spectrum(*sc.auxiliary, depth, src, cfg, h);
    ctx.auxiliary = &*aux;
  }
  auto res = check_record(before, after, rec, cfg.depth, ctx, cfg.tolerances);
  res.instance = sc.description + (src == SpectrumSource::Secular ? " [secular]" : " [fem]");
  return {res};
}

}  // namespace detail

/// Equality of leading eigenvalues when gluing two vertices exchanged by a
/// symmetry of the graph (class I-7), and non-increase when joining them by an edge.
inline std::vector<CheckResult> symmetric_equality_checks(const Tolerances& tol = {}) {
  std::vector<CheckResult> out;
  VertexCondition c4;
  MetricGraph g({{"a", c4}, {"c", c4}, {"p", c4}, {"q", c4}},
                {{"body", 3.0, "a", "c"}, {"leg1", 0.25, "c", "p"}, {"leg2", 0.25, "c", "q"}});
  const std::size_t depth = 8;
  const auto s = scan_spectrum(g, depth + 2);
  const auto ip = g.vertex_index("p");
  const auto iq = g.vertex_index("q");
  std::size_t n = 0;
  for (std::size_t k = 1; k <= depth; ++k) {
    const auto& cl = s.cluster_of(k);
    bool level = !cl.modes.empty();
    for (const auto& m : cl.modes) level = level && std::abs(m.vertex_values[ip] - m.vertex_values[iq]) <= 1e-8;
    if (!level) break;
    n = k;
  }

  auto glued = glue(g, "p", "q", ConditionKind::C4);
  const auto sg = scan_spectrum(glued.graph, depth + 2);
  CheckResult r;
  r.check = "glue-equality";
  r.instance = "star body 3, legs 0.25, C4, glue leg ends";
  r.tolerances = tol;
  r.before = s.expanded();
  r.after = sg.expanded();
  r.record = glued.record;
  if (n == 0) {
    r.status = CheckStatus::HypothesisUnmet;
    r.detail = "no leading eigenfunctions level at the glued vertices";
  }
  for (std::size_t k = 1; k <= n; ++k) {
    const double a = s.eigenvalue(k);
    const double b = sg.eigenvalue(k);
    const double rel = -std::abs(a - b) / std::max(1.0, std::abs(a));
    r.worst_margin = std::min(r.worst_margin, rel);
    r.indices.push_back(static_cast<int>(k));
    if (-rel > tol.invariance) {
      r.status = CheckStatus::Fail;
      r.detail = fmt::format("lambda_{} changed: {:.12g} -> {:.12g}", k, a, b);
    }
  }
  out.push_back(r);

  auto joined = add_edge(g, "p", "q", 2.0, 1);
  const auto sj = scan_spectrum(joined.graph, depth + 2);
  CheckResult j;
  j.check = "insert-edge-level";
  j.instance = "star body 3, legs 0.25, C4, edge of length 2 between leg ends";
  j.tolerances = tol;
  j.before = s.expanded();
  j.after = sj.expanded();
  if (n == 0) j.status = CheckStatus::HypothesisUnmet;
  for (std::size_t k = 1; k <= n; ++k) {
    const double a = s.eigenvalue(k);
    const double b = sj.eigenvalue(k);
    const double rel = (a - b) / std::max(1.0, std::abs(a));
    j.worst_margin = std::min(j.worst_margin, rel);
    j.indices.push_back(static_cast<int>(k));
    if (rel < -tol.inequality) {
      j.status = CheckStatus::Fail;
      j.detail = fmt::format("lambda_{} increased: {:.12g} -> {:.12g}", k, a, b);
    }
  }
  out.push_back(j);
  return out;
}

namespace detail {

inline KindPolicy bounds_policy(std::size_t i) {
  using K = ConditionKind;
  switch (i % 7) {
    case 0: return KindPolicy::uniform(K::C4);
    case 1: return KindPolicy::uniform(K::C2);
    case 2: return KindPolicy::uniform(K::C1);
    case 3: {
      auto p = KindPolicy::uniform(K::C3);
      p.equal_sigma = true;
      p.name = "C3 equal sigma, alpha=0";
      return p;
    }
    case 4: {
      KindPolicy p;
      p.kinds = {K::C3, K::C4};
      p.equal_sigma = true;
      p.name = "C3 equal sigma / C4, alpha>=0";
      return p;
    }
    case 5: {
      KindPolicy p;
      p.kinds = {K::C2, K::C4};
      p.zero_strength = true;
      p.name = "C2/C4, alpha=0";
      return p;
    }
    default: return KindPolicy{};
  }
}

inline MetricGraph star_graph(std::uint64_t seed, const KindPolicy& policy) {
  std::mt19937_64 rng(seed);
  const int legs = std::uniform_int_distribution<int>(1, 5)(rng);
  std::vector<Vertex> vs;
  std::vector<Edge> es;
  vs.push_back({"c", {}});
  for (int j = 0; j < legs; ++j) {
    vs.push_back({"l" + std::to_string(j), {}});
    es.push_back({"e" + std::to_string(j), std::uniform_real_distribution<double>(0.5, 2.0)(rng), "c",
                  "l" + std::to_string(j)});
  }
  MetricGraph g(vs, es);
  for (const auto& v : g.vertices()) {
    const auto k = policy.kinds[std::uniform_int_distribution<std::size_t>(0, policy.kinds.size() - 1)(rng)];
    g = set_kind(g, v.id, k, rng, 0.0);
  }
  return g;
}

}  // namespace detail

inline SuiteReport run_suite(const std::string& suite, const SuiteConfig& cfg = {}) {
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) throw Error("unknown suite '" + suite + "'");
  SuiteReport report;
  report.suite = suite;
  const unsigned threads = thread_count(cfg.threads);
  std::vector<std::vector<CheckResult>> slots(cfg.instances);
  std::uint64_t base = cfg.seed;
  for (char c : suite) base = base * 131 + static_cast<unsigned char>(c);
  base %= 1000000007ULL;
  auto run = [&](auto&& body) {
    parallel_for(cfg.instances, threads, [&](std::size_t i) {
      try {
        body(i);
      } catch (const std::exception& e) {
        CheckResult r;
        r.check = suite;
        r.instance = fmt::format("seed={}", base + i);
        r.status = CheckStatus::Fail;
        r.detail = std::string("exception: ") + e.what();
        slots[i].clear();
        slots[i].push_back(std::move(r));
      }
    });
  };

  if (suite == "bounds") {
    run([&](std::size_t i) {
      const std::uint64_t seed = base + i;
      const bool star = i % 6 == 5;
      const auto policy = !star ? detail::bounds_policy(i)
                                : KindPolicy::uniform(i % 12 == 5 ? ConditionKind::C4 : ConditionKind::C2);
      const MetricGraph g = star ? detail::star_graph(seed, policy) : random_graph(seed, {}, policy);
      const std::size_t count = cfg.depth + 2 * g.vertex_count() + 2;
      const auto s = scan_spectrum(g, count);
      const auto rep = evaluate_bounds(g, s, cfg.depth, cfg.tolerances.bound);
      auto res = check_bounds(rep, fmt::format("seed={} policy={}{}", seed, policy.name, star ? " star" : ""),
                              cfg.tolerances);
      res.before = s.expanded();
      slots[i].push_back(std::move(res));
    });
  } else if (suite == "weyl") {
    run([&](std::size_t i) {
      const std::uint64_t seed = base + i;
      const auto kind = i % 2 == 0 ? ConditionKind::C1 : ConditionKind::C2;
      const MetricGraph g = random_graph(seed, {}, KindPolicy::uniform(kind));
      const std::size_t K = std::max<std::size_t>(cfg.depth, 20);
      const auto s = scan_spectrum(g, K);
      CheckResult r;
      r.check = "weyl";
      r.instance = fmt::format("seed={} kind={}", seed, to_string(kind));
      r.tolerances = cfg.tolerances;
      r.before = s.expanded();
      for (std::size_t k = 1; k <= K; ++k) {
        const auto b = weyl_bracket(g, k, kind == ConditionKind::C1 ? WeylVariant::C1 : WeylVariant::C2);
        const double lam = s.eigenvalue(k);
        const double lo = (lam - b.lower) / std::max(1.0, std::abs(b.lower));
        const double up = (b.upper - lam) / std::max(1.0, std::abs(b.upper));
        r.worst_margin = std::min({r.worst_margin, lo, up});
        r.indices.push_back(static_cast<int>(k));
        if (std::min(lo, up) < -cfg.tolerances.bound && r.status != CheckStatus::Fail) {
          r.status = CheckStatus::Fail;
          r.detail = fmt::format("k={}: {:.12g} outside [{:.12g}, {:.12g}]", k, lam, b.lower, b.upper);
        }
      }
      if (kind == ConditionKind::C1) {
        const auto sw = counting_sandwich(g, s, 50);
        if (sw.violations > 0) {
          r.status = CheckStatus::Fail;
          r.detail += fmt::format(" counting sandwich violated at {} of {} points", sw.violations, sw.points);
        }
      }
      slots[i].push_back(std::move(r));
    });
  } else if (suite == "degree-two-merge") {
    run([&](std::size_t i) {
      const std::uint64_t seed = base + i;
      std::mt19937_64 rng(seed);
      const MetricGraph g = random_graph(seed);
      const auto& e = g.edges()[std::uniform_int_distribution<std::size_t>(0, g.edge_count() - 1)(rng)];
      const double t = 0.1 + 0.8 * detail::unit(rng);
      auto sub = subdivide_edge(g, e.id, t);
      auto back = merge_degree_two(sub.graph, sub.record.vertices.front());
      const auto s0 = scan_spectrum(g, cfg.depth);
      const auto s1 = scan_spectrum(sub.graph, cfg.depth);
      const auto s2 = scan_spectrum(back.graph, cfg.depth);
      CheckResult r;
      r.check = "degree-two-merge";
      r.instance = fmt::format("seed={} edge={} t={:.6f}", seed, e.id, t);
      r.tolerances = cfg.tolerances;
      r.before = s0.expanded();
      r.after = s1.expanded();
      r.record = sub.record;
      for (std::size_t k = 1; k <= cfg.depth; ++k) {
        const double a = s0.eigenvalue(k);
        const double d = std::max(std::abs(s1.eigenvalue(k) - a), std::abs(s2.eigenvalue(k) - a)) /
                         std::max(1.0, std::abs(a));
        r.worst_margin = std::min(r.worst_margin, -d);
        r.indices.push_back(static_cast<int>(k));
        if (d > cfg.tolerances.invariance && r.status != CheckStatus::Fail) {
          r.status = CheckStatus::Fail;
          r.detail = fmt::format("lambda_{} moved by {:.3g} relative", k, d);
        }
      }
      slots[i].push_back(std::move(r));
    });
  } else if (suite == "loop-secular") {
    run([&](std::size_t i) {
      const std::uint64_t seed = base + i;
      std::mt19937_64 rng(seed);
      const double len = std::uniform_real_distribution<double>(0.5, 4.0)(rng);
      MetricGraph g({{"v", {}}}, {{"e", len, "v", "v"}});
      const auto s = scan_spectrum(g, cfg.depth);
      CheckResult r;
      r.check = "loop-secular";
      r.instance = fmt::format("seed={} length={:.6f}", seed, len);
      r.tolerances = cfg.tolerances;
      r.before = s.expanded();
      for (std::size_t k = 1; k <= cfg.depth; ++k) {
        const double lam = s.eigenvalue(k);
        if (lam <= 0) continue;
        const double res = std::abs(loop_secular_residual(lam, len));
        r.worst_margin = std::min(r.worst_margin, cfg.tolerances.loop_residual - res);
        r.indices.push_back(static_cast<int>(k));
        if (res > cfg.tolerances.loop_residual && r.status != CheckStatus::Fail) {
          r.status = CheckStatus::Fail;
          r.detail = fmt::format("lambda_{}={:.12g} residual {:.3g}", k, lam, res);
        }
      }
      slots[i].push_back(std::move(r));
    });
  } else {
    run([&](std::size_t i) {
      const std::uint64_t seed = base + i;
      std::optional<detail::SurgeryCase> sc;
      // Redraw (deterministically) until the operation is possible.
      for (std::uint64_t attempt = 0; attempt < 64 && !sc; ++attempt) {
        sc = detail::make_case(suite, i, seed + attempt * 7919ULL * (cfg.instances + 1), cfg);
      }
      if (!sc) {
        CheckResult r;
        r.check = suite;
        r.instance = fmt::format("seed={}", seed);
        r.status = CheckStatus::HypothesisUnmet;
        r.detail = "no admissible instance drawn";
        slots[i].push_back(std::move(r));
        return;
      }
      for (auto& r : detail::check_case(*sc, SpectrumSource::Fem, cfg)) slots[i].push_back(std::move(r));
      if (cfg.secular_every > 0 && i % cfg.secular_every == 0) {
        for (auto& r : detail::check_case(*sc, SpectrumSource::Secular, cfg)) slots[i].push_back(std::move(r));
      }
    });
    if (suite == "gluing" && !cfg.mutate) {
      for (auto& r : symmetric_equality_checks(cfg.tolerances)) report.results.push_back(std::move(r));
    }
  }
  for (auto& s : slots) {
    for (auto& r : s) report.results.push_back(std::move(r));
  }
  return report;
}

}  // namespace beamgraph
