#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "beamgraph/graph.hpp"

namespace bgtest {

using beamgraph::ConditionKind;
using beamgraph::Edge;
using beamgraph::Endpoint;
using beamgraph::MetricGraph;
using beamgraph::Side;
using beamgraph::Vertex;
using beamgraph::VertexCondition;

inline VertexCondition cond(ConditionKind k, double alpha = 0.0, std::map<Endpoint, double> sigma = {}) {
  return {k, alpha, std::move(sigma)};
}

inline MetricGraph interval(double length, ConditionKind k = ConditionKind::C4, double alpha = 0.0) {
  return MetricGraph({{"a", cond(k, alpha)}, {"b", cond(k, alpha)}}, {{"e", length, "a", "b"}});
}

/// One-edge loop; sigma (left, right) when the kind uses it.
inline MetricGraph loop(double length, ConditionKind k, double s_left = 1.0, double s_right = 1.0,
                        double alpha = 0.0) {
  std::map<Endpoint, double> sigma;
  if (beamgraph::uses_sigma(k)) sigma = {{{"e", Side::Left}, s_left}, {{"e", Side::Right}, s_right}};
  return MetricGraph({{"o", cond(k, alpha, sigma)}}, {{"e", length, "o", "o"}});
}

inline MetricGraph star(const std::vector<double>& legs, ConditionKind k = ConditionKind::C4) {
  std::vector<Vertex> vs{{"c", cond(k)}};
  std::vector<Edge> es;
  std::map<Endpoint, double> centre_sigma;
  for (std::size_t i = 0; i < legs.size(); ++i) {
    const std::string leaf = "l" + std::to_string(i);
    const std::string edge = "e" + std::to_string(i);
    std::map<Endpoint, double> leaf_sigma;
    if (beamgraph::uses_sigma(k)) {
      leaf_sigma[{edge, Side::Right}] = 1.0;
      centre_sigma[{edge, Side::Left}] = 1.0;
    }
    vs.push_back({leaf, cond(k, 0.0, leaf_sigma)});
    es.push_back({edge, legs[i], "c", leaf});
  }
  vs[0].condition.sigma = centre_sigma;
  return MetricGraph(vs, es);
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

inline std::string data_path(const std::string& rel_path) { return std::string(BEAMGRAPH_DATA_DIR) + "/" + rel_path; }

}  // namespace bgtest
