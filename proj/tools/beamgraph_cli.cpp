// beamgraph command line: spectrum, surgery, verify.
// Exit codes: 0 ok, 1 verification failure, 2 schema error, 3 solver error, 4 illegal op.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "beamgraph/beamgraph.hpp"

namespace fs = std::filesystem;
using namespace beamgraph;

namespace {

enum Exit { kOk = 0, kVerifyFail = 1, kSchema = 2, kSolver = 3, kIllegalOp = 4 };

JobMethod parse_method(const std::string& m) {
  if (m == "secular") return JobMethod::Secular;
  if (m == "fem") return JobMethod::Fem;
  if (m == "both") return JobMethod::Both;
  throw SchemaError("--method must be secular, fem or both");
}

Spectrum compute(const MetricGraph& g, std::size_t count, JobMethod method, int mesh) {
  if (method == JobMethod::Fem) {
    FemOptions opt;
    opt.mesh = MeshSpec::uniform(mesh);
    return solve_fem(g, count, opt);
  }
  return scan_spectrum(g, count);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

int run_spectrum(const std::string& graph_path, std::size_t count, const std::string& method_name, int mesh,
                 const std::string& out) {
  const auto g = read_graph(graph_path);
  const auto method = parse_method(method_name);
  json doc;
  std::string csv;
  if (method == JobMethod::Both) {
    const auto sec = compute(g, count, JobMethod::Secular, mesh);
    const auto fem = compute(g, count, JobMethod::Fem, mesh);
    double diff = 0.0;
    for (std::size_t k = 1; k <= count; ++k) {
      const double a = sec.eigenvalue(k);
      const double b = fem.eigenvalue(k);
      diff = std::max(diff, std::abs(a - b) / std::max(1.0, std::abs(a)));
    }
    doc["secular"] = spectrum_to_json(sec);
    doc["fem"] = spectrum_to_json(fem);
    doc["max_relative_difference"] = diff;
    csv = "k,lambda_secular,lambda_fem\n";
    for (std::size_t k = 1; k <= count; ++k) csv += fmt::format("{},{:.17g},{:.17g}\n", k, sec.eigenvalue(k), fem.eigenvalue(k));
    fmt::print("max relative difference {:.17g}\n", diff);
  } else {
    const auto s = compute(g, count, method, mesh);
    doc = spectrum_to_json(s);
    csv = spectrum_csv(s, count);
  }
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_json(out + ".json", doc);
    write_text(out + ".csv", csv);
  }
  return kOk;
}

struct Applied {
  MetricGraph before;
  SurgeryResult result;
};

std::vector<Applied> apply_ops(const JobFile& job) {
  SpectrumProvider provider = [&](const MetricGraph& g, std::size_t n) {
    return compute(g, n, job.method == JobMethod::Fem ? JobMethod::Fem : JobMethod::Secular, job.mesh);
  };
  std::vector<Applied> out;
  MetricGraph g = job.graph;
  for (const auto& op : job.ops) {
    auto r = apply_op(g, op, job.base, provider);
    out.push_back({g, r});
    g = r.graph;
  }
  return out;
}

CheckResult check_applied(const Applied& a, const JobFile& job) {
  const auto& rec = job.mutate ? detail::mutated(a.result.record) : a.result.record;
  const std::size_t depth = job.count + static_cast<std::size_t>(std::max(0, rec.max_shift())) + 1;
  const auto m = job.method == JobMethod::Fem ? JobMethod::Fem : JobMethod::Secular;
  const auto before = compute(a.before, depth, m, job.mesh);
  const auto after = compute(a.result.graph, depth, m, job.mesh);
  std::optional<Spectrum> aux;
  RecordContext ctx;
  ctx.before_graph = &a.before;
  ctx.after_graph = &a.result.graph;
  if (rec.auxiliary) {
    aux = compute(*rec.auxiliary, depth, m, job.mesh);
    ctx.auxiliary = &*aux;
  }
  auto res = check_record(before, after, rec, job.count, ctx);
  res.instance = rec.op + " " + rec.rule;
  return res;
}

int run_surgery(const std::string& job_path, const std::string& out) {
  const auto job = read_job(job_path);
  const auto applied = apply_ops(job);
  const MetricGraph& final_graph = applied.empty() ? job.graph : applied.back().result.graph;
  json records = json::array();
  for (const auto& a : applied) records.push_back(record_to_json(a.result.record));
  json doc = {{"graph", graph_to_json(final_graph)}, {"records", records}};
  bool ok = true;
  if (job.compute_requested) {
    json checks = json::array();
    for (const auto& a : applied) {
      const auto r = check_applied(a, job);
      ok = ok && r.status != CheckStatus::Fail;
      checks.push_back(check_to_json(r));
    }
    doc["checks"] = checks;
  }
  if (out.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    fs::create_directories(out);
    write_json(fs::path(out) / "graph.json", graph_to_json(final_graph));
    write_json(fs::path(out) / "records.json", doc);
  }
  return ok ? kOk : kVerifyFail;
}

int run_verify(const std::string& job_path, const std::string& out, const std::string& junit) {
  const auto job = read_job(job_path);
  std::vector<SuiteReport> suites;

  if (!job.ops.empty()) {
    SuiteReport ops;
    ops.suite = "job-ops";
    for (const auto& a : apply_ops(job)) ops.results.push_back(check_applied(a, job));
    suites.push_back(std::move(ops));
  }
  if (job.bounds) {
    SuiteReport b;
    b.suite = "job-bounds";
    const auto s = scan_spectrum(job.graph, job.count + 2 * job.graph.vertex_count() + 2);
    const auto rep = evaluate_bounds(job.graph, s, job.count);
    b.results.push_back(check_bounds(rep, "job graph"));
    suites.push_back(std::move(b));
  }
  for (const auto& name : job.checks) {
    SuiteConfig cfg;
    cfg.instances = job.instances;
    cfg.depth = job.depth;
    cfg.seed = job.seed;
    cfg.mutate = job.mutate;
    auto rep = run_suite(name, cfg);
    rep.suite = name;
    suites.push_back(std::move(rep));
  }

  bool ok = true;
  json doc = json::array();
  for (const auto& s : suites) {
    ok = ok && s.ok();
    fmt::print("{:<18} pass {} fail {} hypothesis-unmet {}\n", s.suite, s.count(CheckStatus::Pass),
               s.count(CheckStatus::Fail), s.count(CheckStatus::HypothesisUnmet));
    for (const auto& r : s.results) {
      if (r.status == CheckStatus::Fail) fmt::print("  fail {} | {}\n", r.instance, r.detail);
    }
    doc.push_back(suite_to_json(s));
  }
  if (!out.empty()) write_json(out, doc);
  if (!junit.empty()) write_text(junit, junit_xml(suites));
  return ok ? kOk : kVerifyFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beamgraph: fourth-order operators on metric graphs"};
  app.require_subcommand(1);

  std::string graph_path;
  std::size_t count = 10;
  std::string method = "secular";
  int mesh = 64;
  std::string out;
  auto* spectrum_cmd = app.add_subcommand("spectrum", "lowest eigenvalues of a graph file");
  spectrum_cmd->add_option("graph", graph_path, "graph JSON file")->required();
  spectrum_cmd->add_option("--count", count, "number of eigenvalues (with multiplicity)");
  spectrum_cmd->add_option("--method", method, "secular, fem or both");
  spectrum_cmd->add_option("--mesh", mesh, "fem elements per edge");
  spectrum_cmd->add_option("--out", out, "output prefix for .json and .csv");

  std::string job_path;
  auto* surg = app.add_subcommand("surgery", "apply the ops of a job file");
  surg->add_option("job", job_path, "job JSON file")->required();
  surg->add_option("--out", out, "output directory");

  std::string junit;
  auto* ver = app.add_subcommand("verify", "run the checks of a job file");
  ver->add_option("job", job_path, "job JSON file")->required();
  ver->add_option("--out", out, "JSON report path");
  ver->add_option("--junit", junit, "JUnit XML report path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*spectrum_cmd) return run_spectrum(graph_path, count, method, mesh, out);
    if (*surg) return run_surgery(job_path, out);
    if (*ver) return run_verify(job_path, out, junit);
  } catch (const SchemaError& e) {
    fmt::print(stderr, "schema error: {}\n", e.what());
    return kSchema;
  } catch (const SolverError& e) {
    fmt::print(stderr, "solver error: {}\n", e.what());
    return kSolver;
  } catch (const SurgeryError& e) {
    fmt::print(stderr, "illegal op: {}\n", e.what());
    return kIllegalOp;
  } catch (const GraphError& e) {
    fmt::print(stderr, "illegal op: {}\n", e.what());
    return kIllegalOp;
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kSchema;
  } catch (const json::exception& e) {
    fmt::print(stderr, "schema error: {}\n", e.what());
    return kSchema;
  }
  return kOk;
}
