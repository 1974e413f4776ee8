#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "beamgraph/graph.hpp"

namespace beamgraph {

enum class SpectralMethod { Secular, Fem };

inline constexpr std::string_view to_string(SpectralMethod m) {
  return m == SpectralMethod::Secular ? "secular" : "fem";
}

/// One eigenfunction. Which representation is filled depends on the method:
/// secular modes carry working-basis coefficients per edge, FEM modes carry
/// nodal (value, derivative) pairs per edge. Vertex values are always set
/// (vertex order of the graph); at an alpha=inf vertex they are 0.
struct Mode {
  std::vector<double> vertex_values;
  std::vector<std::array<double, 4>> coefficients;
  std::vector<std::vector<double>> nodal;
};

struct SpectralCluster {
  double value = 0.0;
  int multiplicity = 1;
  std::vector<Mode> modes;
};

struct Spectrum {
  SpectralMethod method = SpectralMethod::Secular;
  std::vector<SpectralCluster> clusters;
  /// Every eigenvalue <= covered_up_to is present in `clusters`.
  double covered_up_to = 0.0;
  /// Relative singular-value threshold (secular) or clustering tolerance (FEM).
  double tolerance = 0.0;
  /// FEM only: number of elements on each edge, in graph edge order.
  std::vector<int> mesh;

  /// Eigenvalues repeated by multiplicity, ascending.
  [[nodiscard]] std::vector<double> expanded() const {
    std::vector<double> out;
    for (const auto& c : clusters) out.insert(out.end(), static_cast<std::size_t>(c.multiplicity), c.value);
    return out;
  }

  [[nodiscard]] std::size_t size() const {
    std::size_t n = 0;
    for (const auto& c : clusters) n += static_cast<std::size_t>(c.multiplicity);
    return n;
  }

  /// lambda_k with 1-based index counted with multiplicity.
  [[nodiscard]] double eigenvalue(std::size_t k) const {
    if (k == 0) throw Error("eigenvalue index is 1-based");
    std::size_t seen = 0;
    for (const auto& c : clusters) {
      seen += static_cast<std::size_t>(c.multiplicity);
      if (k <= seen) return c.value;
    }
    throw Error("spectrum depth " + std::to_string(size()) + " is below requested index " + std::to_string(k));
  }

  /// Cluster holding lambda_k (1-based with multiplicity).
  [[nodiscard]] const SpectralCluster& cluster_of(std::size_t k) const {
    if (k == 0) throw Error("eigenvalue index is 1-based");
    std::size_t seen = 0;
    for (const auto& c : clusters) {
      seen += static_cast<std::size_t>(c.multiplicity);
      if (k <= seen) return c;
    }
    throw Error("spectrum depth " + std::to_string(size()) + " is below requested index " + std::to_string(k));
  }

  /// Multiplicity of the eigenvalue 0 (|lambda| <= tol), 0 if absent.
  [[nodiscard]] int nullity(double tol = 1e-9) const {
    for (const auto& c : clusters) {
      if (std::abs(c.value) <= tol) return c.multiplicity;
    }
    return 0;
  }
};

/// N(lambda) = #{k : lambda_k <= lambda}.
inline std::size_t counting_function(const Spectrum& spectrum, double lambda) {
  if (lambda > spectrum.covered_up_to) {
    throw Error("counting_function: lambda beyond computed range");
  }
  std::size_t n = 0;
  for (const auto& c : spectrum.clusters) {
    if (c.value <= lambda) n += static_cast<std::size_t>(c.multiplicity);
  }
  return n;
}

/// Spectrum of a disjoint union: merged values (modes dropped).
inline Spectrum merge_spectra(const std::vector<Spectrum>& parts, double cluster_tol = 1e-10) {
  Spectrum out;
  if (parts.empty()) return out;
  out.method = parts.front().method;
  out.covered_up_to = std::numeric_limits<double>::infinity();
  std::vector<double> all;
  for (const auto& p : parts) {
    auto v = p.expanded();
    all.insert(all.end(), v.begin(), v.end());
    out.covered_up_to = std::min(out.covered_up_to, p.covered_up_to);
    out.tolerance = std::max(out.tolerance, p.tolerance);
  }
  std::sort(all.begin(), all.end());
  for (double v : all) {
    if (v > out.covered_up_to) break;
    if (!out.clusters.empty() &&
        std::abs(v - out.clusters.back().value) <= cluster_tol * std::max(1.0, std::abs(v))) {
      ++out.clusters.back().multiplicity;
    } else {
      out.clusters.push_back({v, 1, {}});
    }
  }
  return out;
}

}  // namespace beamgraph
