#pragma once

// JSON graph files, job files and reports. Graph documents look like
//   {"vertices": [{"id": "a", "condition": "C2", "alpha": 0, "sigma": {"e:left": 1}}],
//    "edges": [{"id": "e", "from": "a", "to": "b", "length": 1.5}]}
// with "inf" standing for alpha = +infinity.

#include <fmt/format.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "beamgraph/bounds.hpp"
#include "beamgraph/graph.hpp"
#include "beamgraph/harness.hpp"
#include "beamgraph/spectrum.hpp"
#include "beamgraph/surgery.hpp"

namespace beamgraph {

using json = nlohmann::ordered_json;

class SchemaError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + ": missing \"" + key + "\"");
  return *it;
}

inline std::string string_field(const json& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_string()) throw SchemaError(where + ": \"" + key + "\" must be a string");
  return v.get<std::string>();
}

inline std::string string_value(const json& v, const std::string& where) {
  if (!v.is_string()) throw SchemaError(where + ": expected a string");
  return v.get<std::string>();
}

inline std::vector<std::string> string_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw SchemaError(where + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& x : v) out.push_back(string_value(x, where));
  return out;
}

inline double number_value(const json& v, const std::string& where, bool allow_inf) {
  if (v.is_number()) return v.get<double>();
  if (allow_inf && v.is_string() && v.get<std::string>() == "inf") return kInfiniteStrength;
  throw SchemaError(where + (allow_inf ? ": expected a number or \"inf\"" : ": expected a number"));
}

inline double number_field(const json& obj, const char* key, const std::string& where, bool allow_inf = false) {
  return number_value(field(obj, key, where), where + "." + key, allow_inf);
}

inline int int_field(const json& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_number_integer()) throw SchemaError(where + ": \"" + key + "\" must be an integer");
  return v.get<int>();
}

inline ConditionKind kind_value(const json& v, const std::string& where) {
  if (!v.is_string()) throw SchemaError(where + ": condition must be a string");
  auto k = parse_kind(v.get<std::string>());
  if (!k) throw SchemaError(where + ": unknown condition '" + v.get<std::string>() + "'");
  return *k;
}

inline Endpoint endpoint_value(const std::string& text, const std::string& where) {
  auto ep = parse_endpoint(text);
  if (!ep) throw SchemaError(where + ": bad endpoint reference '" + text + "' (expected edge:left or edge:right)");
  return *ep;
}

inline std::map<Endpoint, double> sigma_value(const json& v, const std::string& where) {
  if (!v.is_object()) throw SchemaError(where + ": sigma must be an object");
  std::map<Endpoint, double> out;
  for (const auto& [key, value] : v.items()) {
    out[endpoint_value(key, where)] = number_value(value, where + ".sigma[" + key + "]", false);
  }
  return out;
}

inline json alpha_json(double a) {
  if (std::isinf(a) && a > 0) return "inf";
  return a;
}

inline json number_json(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return nullptr;
  return x;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_text(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(where + ": " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Graphs

/// Parses a graph document; schema problems and graph-core violations throw SchemaError.
inline MetricGraph graph_from_json(const json& doc) {
  const std::string where = "graph";
  if (!doc.is_object()) throw SchemaError("graph: document must be an object");
  const auto& vs = detail::field(doc, "vertices", where);
  const auto& es = detail::field(doc, "edges", where);
  if (!vs.is_array()) throw SchemaError("graph: \"vertices\" must be an array");
  if (!es.is_array()) throw SchemaError("graph: \"edges\" must be an array");

  std::vector<Vertex> vertices;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const std::string w = fmt::format("vertices[{}]", i);
    const auto& v = vs[i];
    Vertex out;
    out.id = detail::string_field(v, "id", w);
    out.condition.kind = detail::kind_value(detail::field(v, "condition", w), w);
    out.condition.alpha = v.contains("alpha") ? detail::number_field(v, "alpha", w, true) : 0.0;
    if (v.contains("sigma")) out.condition.sigma = detail::sigma_value(v["sigma"], w);
    vertices.push_back(std::move(out));
  }
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < es.size(); ++i) {
    const std::string w = fmt::format("edges[{}]", i);
    const auto& e = es[i];
    edges.push_back({detail::string_field(e, "id", w), detail::number_field(e, "length", w),
                     detail::string_field(e, "from", w), detail::string_field(e, "to", w)});
  }
  bool is_union = false;
  if (doc.contains("union")) {
    if (!doc["union"].is_boolean()) throw SchemaError("graph: \"union\" must be a boolean");
    is_union = doc["union"].get<bool>();
  }
  MetricGraph g(std::move(vertices), std::move(edges), is_union);
  const auto report = validate(g);
  if (!report.ok()) throw SchemaError(report.summary());
  return g;
}

inline json graph_to_json(const MetricGraph& g) {
  json doc;
  doc["vertices"] = json::array();
  for (const auto& v : g.vertices()) {
    json jv;
    jv["id"] = v.id;
    jv["condition"] = std::string(to_string(v.condition.kind));
    jv["alpha"] = detail::alpha_json(v.condition.alpha);
    if (!v.condition.sigma.empty()) {
      json s = json::object();
      for (const auto& [ep, value] : v.condition.sigma) s[to_string(ep)] = value;
      jv["sigma"] = std::move(s);
    }
    doc["vertices"].push_back(std::move(jv));
  }
  doc["edges"] = json::array();
  for (const auto& e : g.edges()) {
    doc["edges"].push_back({{"id", e.id}, {"from", e.from}, {"to", e.to}, {"length", e.length}});
  }
  if (g.explicit_union()) doc["union"] = true;
  return doc;
}

inline MetricGraph parse_graph(const std::string& text) {
  return graph_from_json(detail::parse_text(text, "graph"));
}

inline MetricGraph read_graph(const std::filesystem::path& path) {
  return graph_from_json(detail::parse_text(detail::read_text(path), path.string()));
}

inline void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Spectra, records, reports

inline json spectrum_to_json(const Spectrum& s, bool modes = false) {
  json doc;
  doc["method"] = std::string(to_string(s.method));
  doc["covered_up_to"] = detail::number_json(s.covered_up_to);
  doc["tolerance"] = s.tolerance;
  if (!s.mesh.empty()) doc["mesh"] = s.mesh;
  doc["clusters"] = json::array();
  for (const auto& c : s.clusters) {
    json jc = {{"value", c.value}, {"multiplicity", c.multiplicity}};
    if (modes && !c.modes.empty()) {
      jc["vertex_values"] = json::array();
      for (const auto& m : c.modes) jc["vertex_values"].push_back(m.vertex_values);
    }
    doc["clusters"].push_back(std::move(jc));
  }
  doc["eigenvalues"] = s.expanded();
  return doc;
}

/// Rows k, lambda_k, multiplicity of the cluster holding lambda_k.
inline std::string spectrum_csv(const Spectrum& s, std::size_t count) {
  std::string out = "k,lambda,multiplicity\n";
  std::size_t k = 1;
  for (const auto& c : s.clusters) {
    for (int m = 0; m < c.multiplicity && k <= count; ++m, ++k) {
      out += fmt::format("{},{:.17g},{}\n", k, c.value, c.multiplicity);
    }
  }
  return out;
}

inline json inequality_to_json(const Inequality& q) {
  json doc = {{"lower", std::string(to_string(q.lower))},
              {"lower_shift", q.lower_shift},
              {"upper", std::string(to_string(q.upper))},
              {"upper_shift", q.upper_shift},
              {"k_min", q.k_min}};
  if (q.k_max) doc["k_max"] = *q.k_max;
  if (q.nonnegative_guard) doc["nonnegative_guard"] = true;
  doc["text"] = q.describe();
  return doc;
}

inline std::string_view to_string(StrictRule r) {
  switch (r) {
    case StrictRule::None: return "none";
    case StrictRule::StrengthIncrease: return "strength-increase";
    case StrictRule::Pendant: return "pendant";
    case StrictRule::Insertion: return "insertion";
  }
  return "?";
}

inline json record_to_json(const SurgeryRecord& r) {
  json doc = {{"op", r.op}, {"classification", r.classification}, {"rule", r.rule},
              {"vertices", r.vertices}, {"edges", r.edges}};
  doc["inequalities"] = json::array();
  for (const auto& q : r.inequalities) doc["inequalities"].push_back(inequality_to_json(q));
  doc["obligations"] = json::array();
  for (const auto& o : r.obligations) doc["obligations"].push_back(o.describe());
  doc["validity"] = r.validity;
  doc["strict"] = std::string(to_string(r.strict));
  if (r.strict != StrictRule::None) {
    doc["strict_vertex"] = r.strict_vertex;
    doc["strict_inequality"] = r.strict_inequality;
  }
  return doc;
}

inline json tolerances_to_json(const Tolerances& t) {
  return {{"inequality", t.inequality}, {"bound", t.bound},       {"strict_gap", t.strict_gap},
          {"vertex_value", t.vertex_value}, {"cluster", t.cluster}, {"loop_residual", t.loop_residual},
          {"invariance", t.invariance}};
}

inline json check_to_json(const CheckResult& r) {
  json doc = {{"check", r.check},
              {"instance", r.instance},
              {"status", std::string(to_string(r.status))},
              {"worst_margin", detail::number_json(r.worst_margin)},
              {"detail", r.detail},
              {"indices", r.indices},
              {"tolerances", tolerances_to_json(r.tolerances)},
              {"before", r.before},
              {"after", r.after}};
  if (r.record) doc["record"] = record_to_json(*r.record);
  return doc;
}

inline json suite_to_json(const SuiteReport& s) {
  json doc = {{"suite", s.suite},
              {"pass", s.count(CheckStatus::Pass)},
              {"fail", s.count(CheckStatus::Fail)},
              {"hypothesis_unmet", s.count(CheckStatus::HypothesisUnmet)}};
  doc["results"] = json::array();
  for (const auto& r : s.results) doc["results"].push_back(check_to_json(r));
  return doc;
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

/// One testsuite per report, one testcase per result; hypothesis-unmet is reported as skipped.
inline std::string junit_xml(const std::vector<SuiteReport>& suites) {
  std::size_t tests = 0;
  std::size_t failures = 0;
  for (const auto& s : suites) {
    tests += s.results.size();
    failures += s.count(CheckStatus::Fail);
  }
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += fmt::format("<testsuites name=\"beamgraph\" tests=\"{}\" failures=\"{}\">\n", tests, failures);
  for (const auto& s : suites) {
    out += fmt::format("  <testsuite name=\"{}\" tests=\"{}\" failures=\"{}\" skipped=\"{}\">\n", xml_escape(s.suite),
                       s.results.size(), s.count(CheckStatus::Fail), s.count(CheckStatus::HypothesisUnmet));
    for (const auto& r : s.results) {
      out += fmt::format("    <testcase classname=\"{}\" name=\"{}\"", xml_escape(s.suite + "." + r.check),
                         xml_escape(r.instance));
      if (r.status == CheckStatus::Pass) {
        out += "/>\n";
        continue;
      }
      out += ">\n";
      if (r.status == CheckStatus::Fail) {
        out += fmt::format("      <failure message=\"{}\"/>\n", xml_escape(r.detail));
      } else {
        out += fmt::format("      <skipped message=\"{}\"/>\n", xml_escape(r.detail));
      }
      out += "    </testcase>\n";
    }
    out += "  </testsuite>\n";
  }
  out += "</testsuites>\n";
  return out;
}

inline json bounds_to_json(const BoundReport& report) {
  json doc = {{"slack", report.slack}, {"nullity", report.nullity}, {"ok", report.ok()}};
  doc["entries"] = json::array();
  for (const auto& e : report.entries) {
    json je = {{"name", e.name},
               {"side", e.side == BoundSide::Lower ? "lower" : "upper"},
               {"k", e.k},
               {"stated_k", e.stated_k},
               {"nonzero_indexed", e.nonzero_indexed},
               {"applicable", e.applicable}};
    if (e.applicable) {
      je["bound"] = detail::number_json(e.bound);
      je["computed"] = e.computed;
      je["margin"] = detail::number_json(e.margin);
      je["strict"] = e.strict;
      je["satisfied"] = e.satisfied(report.slack);
    } else {
      je["reason"] = e.reason;
    }
    doc["entries"].push_back(std::move(je));
  }
  return doc;
}

/// Plot data: one row per applicable entry (k, lambda_k, bound name, bound value, side).
inline std::string bounds_csv(const BoundReport& report) {
  std::string out = "k,lambda,bound,value,side\n";
  for (const auto& e : report.entries) {
    if (!e.applicable) continue;
    out += fmt::format("{},{:.17g},{},{:.17g},{}\n", e.k, e.computed, e.name, e.bound,
                       e.side == BoundSide::Lower ? "lower" : "upper");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Jobs

enum class JobMethod { Secular, Fem, Both };

struct JobFile {
  std::filesystem::path base;
  MetricGraph graph;
  std::vector<json> ops;
  /// A "compute" block was present: surgery runs record checks on these spectra.
  bool compute_requested = false;
  std::size_t count = 12;
  JobMethod method = JobMethod::Secular;
  int mesh = 64;
  std::vector<std::string> checks;
  bool bounds = false;
  std::size_t instances = 200;
  std::size_t depth = 12;
  std::uint64_t seed = 20240601;
  /// Reduce every certified upper index by one before checking op records.
  bool mutate = false;
};

namespace detail {

/// Inline graph object or a path relative to the job file.
inline MetricGraph graph_ref(const json& v, const std::filesystem::path& base, const std::string& where) {
  if (v.is_string()) return read_graph(base / v.get<std::string>());
  if (v.is_object()) return graph_from_json(v);
  throw SchemaError(where + ": graph must be a path or an object");
}

}  // namespace detail

inline JobFile job_from_json(const json& doc, const std::filesystem::path& base = ".") {
  if (!doc.is_object()) throw SchemaError("job: document must be an object");
  JobFile job;
  job.base = base;
  job.graph = detail::graph_ref(detail::field(doc, "graph", "job"), base, "job.graph");
  if (doc.contains("ops")) {
    if (!doc["ops"].is_array()) throw SchemaError("job: \"ops\" must be an array");
    for (const auto& op : doc["ops"]) {
      if (!op.is_object() || !op.contains("op") || !op["op"].is_string()) {
        throw SchemaError("job: every op needs a string \"op\" field");
      }
      job.ops.push_back(op);
    }
  }
  if (doc.contains("compute")) {
    const auto& c = doc["compute"];
    job.compute_requested = true;
    if (c.contains("count")) job.count = static_cast<std::size_t>(detail::int_field(c, "count", "job.compute"));
    if (c.contains("method")) {
      const auto m = detail::string_field(c, "method", "job.compute");
      if (m == "secular") {
        job.method = JobMethod::Secular;
      } else if (m == "fem") {
        job.method = JobMethod::Fem;
      } else if (m == "both") {
        job.method = JobMethod::Both;
      } else {
        throw SchemaError("job.compute: method must be secular, fem or both");
      }
    }
    if (c.contains("mesh")) job.mesh = detail::int_field(c, "mesh", "job.compute");
  }
  if (doc.contains("checks")) {
    if (!doc["checks"].is_array()) throw SchemaError("job: \"checks\" must be an array");
    const auto& names = suite_names();
    for (const auto& c : doc["checks"]) {
      if (!c.is_string()) throw SchemaError("job: check names must be strings");
      const auto n = detail::string_value(c, "job.checks");
      if (std::find(names.begin(), names.end(), n) == names.end()) throw SchemaError("job: unknown suite '" + n + "'");
      job.checks.push_back(n);
    }
  }
  if (doc.contains("bounds")) {
    if (!doc["bounds"].is_boolean()) throw SchemaError("job: \"bounds\" must be a boolean");
    job.bounds = doc["bounds"].get<bool>();
  }
  if (doc.contains("instances")) job.instances = static_cast<std::size_t>(detail::int_field(doc, "instances", "job"));
  if (doc.contains("depth")) job.depth = static_cast<std::size_t>(detail::int_field(doc, "depth", "job"));
  if (doc.contains("seed")) job.seed = static_cast<std::uint64_t>(detail::int_field(doc, "seed", "job"));
  if (doc.contains("mutate")) {
    if (!doc["mutate"].is_boolean()) throw SchemaError("job: \"mutate\" must be a boolean");
    job.mutate = doc["mutate"].get<bool>();
  }
  return job;
}

inline JobFile read_job(const std::filesystem::path& path) {
  return job_from_json(detail::parse_text(detail::read_text(path), path.string()), path.parent_path());
}

/// Spectrum of a graph to at least the given depth; used to fill omitted k0 values.
using SpectrumProvider = std::function<Spectrum(const MetricGraph&, std::size_t)>;

/// Applies one op descriptor. Missing k0 for add_edge / attach_pendant is derived
/// from `provider` as the first index meeting the hypothesis.
inline SurgeryResult apply_op(const MetricGraph& g, const json& op, const std::filesystem::path& base = ".",
                              const SpectrumProvider& provider = {}) {
  const std::string name = detail::string_field(op, "op", "op");
  const std::string w = "op " + name;
  auto str = [&](const char* key) { return detail::string_field(op, key, w); };
  auto kind = [&](const char* key) { return detail::kind_value(detail::field(op, key, w), w); };
  auto first_at_least = [&](const MetricGraph& graph, double value, const char* what) {
    if (!provider) throw SchemaError(w + ": \"k0\" is required");
    const auto s = provider(graph, 4 * graph.edge_count() + 12);
    const auto ev = s.expanded();
    for (std::size_t k = 0; k < ev.size(); ++k) {
      if (ev[k] >= value) return static_cast<int>(k + 1);
    }
    throw SolverError(w + ": no computed eigenvalue reaches " + what);
  };

  if (name == "change_condition") {
    std::optional<std::map<Endpoint, double>> sigma;
    if (op.contains("sigma")) sigma = detail::sigma_value(op["sigma"], w);
    return change_condition(g, str("vertex"), kind("kind"), sigma);
  }
  if (name == "change_condition_all") {
    std::map<std::string, std::map<Endpoint, double>> sigma;
    if (op.contains("sigma")) {
      for (const auto& [v, s] : op["sigma"].items()) sigma[v] = detail::sigma_value(s, w);
    }
    return change_condition_all(g, sigma);
  }
  if (name == "change_strength") {
    return change_strength(g, str("vertex"), detail::number_field(op, "alpha", w, true));
  }
  if (name == "change_strength_all") {
    std::map<std::string, double> alpha;
    const auto& a = detail::field(op, "alpha", w);
    if (!a.is_object()) throw SchemaError(w + ": alpha must map vertex ids to strengths");
    for (const auto& [v, x] : a.items()) alpha[v] = detail::number_value(x, w, true);
    return change_strength_all(g, alpha);
  }
  if (name == "glue") {
    return glue(g, detail::string_list(detail::field(op, "vertices", w), w), kind("kind"));
  }
  if (name == "flower") return flower(g);
  if (name == "split") {
    std::vector<Endpoint> first;
    for (const auto& e : detail::string_list(detail::field(op, "first", w), w)) {
      first.push_back(detail::endpoint_value(e, w));
    }
    const auto& parts = detail::field(op, "parts", w);
    if (!parts.is_array() || parts.size() != 2) throw SchemaError(w + ": parts must list two conditions");
    SplitPart p[2];
    for (int i = 0; i < 2; ++i) {
      p[i].kind = detail::kind_value(detail::field(parts[i], "condition", w), w);
      p[i].alpha = parts[i].contains("alpha") ? detail::number_field(parts[i], "alpha", w, true) : 0.0;
      if (parts[i].contains("sigma")) p[i].sigma = detail::sigma_value(parts[i]["sigma"], w);
    }
    return split(g, str("vertex"), first, p[0], p[1]);
  }
  if (name == "attach_pendant") {
    const auto pendant = detail::graph_ref(detail::field(op, "pendant", w), base, w);
    const int r = detail::int_field(op, "r", w);
    int k0 = 0;
    if (op.contains("k0")) {
      k0 = detail::int_field(op, "k0", w);
    } else {
      if (!provider) throw SchemaError(w + ": \"k0\" is required");
      const double lr = provider(pendant, static_cast<std::size_t>(r)).eigenvalue(static_cast<std::size_t>(r));
      k0 = first_at_least(g, lr, "lambda_r(pendant)");
    }
    const std::string prefix = op.contains("prefix") ? str("prefix") : "p.";
    return attach_pendant(g, pendant, str("vertex"), str("pendant_vertex"), kind("kind"), r, k0, prefix);
  }
  if (name == "insert_graph") {
    const auto inserted = detail::graph_ref(detail::field(op, "graph", w), base, w);
    std::map<Endpoint, std::string> attachment;
    const auto& a = detail::field(op, "attachment", w);
    if (!a.is_object()) throw SchemaError(w + ": attachment must map endpoints to vertex ids");
    for (const auto& [ep, v] : a.items()) attachment[detail::endpoint_value(ep, w)] = detail::string_value(v, w);
    std::vector<std::pair<std::string, PidCondition>> pids;
    const auto& ps = detail::field(op, "pids", w);
    if (!ps.is_array()) throw SchemaError(w + ": pids must be an array");
    for (const auto& p : ps) {
      PidCondition c;
      c.kind = detail::kind_value(detail::field(p, "condition", w), w);
      c.alpha = p.contains("alpha") ? detail::number_field(p, "alpha", w, true) : 0.0;
      pids.emplace_back(detail::string_field(p, "id", w), c);
    }
    const std::string prefix = op.contains("prefix") ? str("prefix") : "g.";
    return insert_graph(g, str("vertex"), inserted, attachment, pids, prefix);
  }
  if (name == "add_edge") {
    const double len = detail::number_field(op, "length", w);
    int k0 = 0;
    if (op.contains("k0")) {
      k0 = detail::int_field(op, "k0", w);
    } else {
      const double t = std::pow(std::numbers::pi / len, 4);
      k0 = first_at_least(g, t, "(pi/length)^4");
    }
    std::optional<std::string> id;
    if (op.contains("id")) id = str("id");
    const double sv = op.contains("sigma_from") ? detail::number_field(op, "sigma_from", w) : 1.0;
    const double sw = op.contains("sigma_to") ? detail::number_field(op, "sigma_to", w) : 1.0;
    return add_edge(g, str("from"), str("to"), len, k0, id, sv, sw);
  }
  if (name == "subdivide_edge") return subdivide_edge(g, str("edge"), detail::number_field(op, "t", w));
  if (name == "merge_degree_two") return merge_degree_two(g, str("vertex"));
  throw SchemaError("unknown op '" + name + "'");
}

}  // namespace beamgraph
