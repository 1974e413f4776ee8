#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "beamgraph/beamgraph.hpp"
#include "support.hpp"

using namespace bgtest;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / ("beamgraph_cli_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

Run cli(const std::string& args) {
  const auto log = scratch() / "stdout.txt";
  const std::string cmd = std::string(BEAMGRAPH_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.out = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, SpectrumPrintsCsv) {
  const auto r = cli("spectrum " + data_path("graphs/interval_pi.json") + " --count 4");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "k,lambda,multiplicity");
  const auto row = r.out.find("\n2,");
  ASSERT_NE(row, std::string::npos) << r.out;
  EXPECT_NEAR(std::stod(r.out.substr(row + 3)), 1.0, 1e-10);
}

TEST(Cli, SpectrumWritesFiles) {
  const auto prefix = (scratch() / "spectrum").string();
  const auto r = cli("spectrum " + data_path("graphs/loop_c2_2pi.json") + " --count 5 --out " + prefix);
  ASSERT_EQ(r.code, 0) << r.out;
  const auto doc = beamgraph::json::parse(slurp(prefix + ".json"));
  EXPECT_EQ(doc["clusters"][1]["multiplicity"], 2);
  EXPECT_NE(slurp(prefix + ".csv").find("k,lambda,multiplicity"), std::string::npos);
}

TEST(Cli, SpectrumBothReportsDifference) {
  const auto r = cli("spectrum " + data_path("graphs/free_beam.json") + " --count 4 --method both --mesh 64");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("max relative difference"), std::string::npos);
  EXPECT_NE(r.out.find("k,lambda_secular,lambda_fem"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli("spectrum " + data_path("graphs/bad_sigma.json")).code, 2);
  EXPECT_EQ(cli("spectrum " + data_path("graphs/interval.json") + " --method magic").code, 2);
  EXPECT_EQ(cli("surgery " + data_path("jobs/flower_mixed.json")).code, 4);
  EXPECT_EQ(cli("verify " + data_path("jobs/glue_mutated.json")).code, 1);
  EXPECT_EQ(cli("verify " + data_path("jobs/bounds_star.json")).code, 1);
  EXPECT_NE(cli("").code, 0);
}

TEST(Cli, SurgeryWritesGraphAndRecords) {
  const auto dir = scratch() / "surgery";
  const auto r = cli("surgery " + data_path("jobs/glue_then_add_edge.json") + " --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto g = beamgraph::read_graph(dir / "graph.json");
  EXPECT_EQ(g.vertex_count(), 2u);
  EXPECT_EQ(g.edge_count(), 3u);
  const auto rec = beamgraph::json::parse(slurp(dir / "records.json"));
  ASSERT_EQ(rec["records"].size(), 2u);
  EXPECT_EQ(rec["records"][0]["op"], "glue");
  ASSERT_EQ(rec["checks"].size(), 2u);
  EXPECT_EQ(rec["checks"][0]["status"], "pass");
}

TEST(Cli, VerifyWritesJsonAndJunit) {
  const auto json_path = scratch() / "verify.json";
  const auto xml_path = scratch() / "verify.xml";
  const auto r = cli("verify " + data_path("jobs/glue_two_intervals.json") + " --out " + json_path.string() +
                     " --junit " + xml_path.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("job-ops"), std::string::npos);
  const auto doc = beamgraph::json::parse(slurp(json_path));
  EXPECT_EQ(doc[0]["suite"], "job-ops");
  EXPECT_NE(slurp(xml_path).find("<testsuites"), std::string::npos);
}
