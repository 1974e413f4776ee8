#pragma once

// Secular-matrix eigenvalue search: lambda is an eigenvalue exactly when the
// 4|E| x 4|E| matrix of vertex conditions applied to the edgewise solution
// space drops rank. The scan walks a signed root variable q (lambda = q|q|^3)
// on a uniform grid. Candidates are local minima of sigma_min / sigma_max,
// local minima of |det| and sign changes of det between grid points whose
// edges share the same basis regime. Minima are refined by golden section,
// sign changes by TOMS 748; the multiplicity is read off the singular values.
// A final parity pass per grid cell recovers roots closer than one step.

#include <Eigen/Dense>
#include <boost/math/tools/toms748_solve.hpp>
#include <cstdint>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "beamgraph/edge_basis.hpp"
#include "beamgraph/graph.hpp"
#include "beamgraph/quadrature.hpp"
#include "beamgraph/spectrum.hpp"

namespace beamgraph {

struct SecularMatrix {
  Eigen::MatrixXd matrix;
  /// Vertex index owning each row.
  std::vector<std::size_t> row_vertex;
  double lambda = 0.0;
  double kappa = 1.0;
};

struct SecularOptions {
  /// Lower end of the scan; default max(0) or an FEM estimate when some alpha < 0.
  std::optional<double> floor;
  /// sigma_i / sigma_max below this counts toward the nullity.
  double multiplicity_tol = 1e-8;
  /// Grid step in q is pi / (samples_per_gap * total length).
  int samples_per_gap = 32;
  double refine_rel_width = 1e-12;
  int max_refine_iterations = 200;
  bool compute_modes = true;
};

namespace detail {

struct EndpointSlot {
  std::size_t edge = 0;
  Side side = Side::Left;
  double sigma = 1.0;
};

struct SecularLayout {
  const MetricGraph* graph = nullptr;
  std::vector<std::vector<EndpointSlot>> slots;
  double mean_length = 1.0;
};

inline SecularLayout make_layout(const MetricGraph& g) {
  SecularLayout layout;
  layout.graph = &g;
  layout.mean_length = g.total_length() / static_cast<double>(g.edge_count());
  layout.slots.resize(g.vertex_count());
  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    const auto& cond = g.vertices()[v].condition;
    for (const auto& ep : g.endpoints(v)) {
      EndpointSlot s;
      s.edge = g.edge_index(ep.edge);
      s.side = ep.side;
      if (uses_sigma(cond.kind)) s.sigma = cond.sigma.at(ep);
      layout.slots[v].push_back(s);
    }
  }
  return layout;
}

inline SecularMatrix assemble_unchecked(const SecularLayout& layout, double lambda) {
  const MetricGraph& g = *layout.graph;
  const std::size_t E = g.edge_count();
  const double kappa = working_scale(lambda, layout.mean_length);

  std::vector<DerivativeTable> left(E), right(E);
  for (std::size_t e = 0; e < E; ++e) {
    const double len = g.edges()[e].length;
    left[e] = working_basis(lambda, len, 0.0, kappa);
    right[e] = working_basis(lambda, len, len, kappa);
  }

  SecularMatrix out;
  out.lambda = lambda;
  out.kappa = kappa;
  out.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(4 * E), static_cast<Eigen::Index>(4 * E));
  out.row_vertex.reserve(4 * E);
  Eigen::Index row = 0;

  // Adds weight * (normal derivative of order r at slot) to the current row.
  auto add = [&](const EndpointSlot& s, int r, double weight) {
    const auto& table = s.side == Side::Left ? left[s.edge] : right[s.edge];
    const double sign = r == 0 ? 1.0 : normal_derivative_signs(s.side)[r - 1];
    for (int c = 0; c < 4; ++c) {
      out.matrix(row, static_cast<Eigen::Index>(4 * s.edge + c)) += weight * sign * table[r][c];
    }
  };

  for (std::size_t v = 0; v < g.vertex_count(); ++v) {
    const auto& cond = g.vertices()[v].condition;
    const auto& slots = layout.slots[v];
    const std::size_t d = slots.size();
    auto next = [&] {
      out.row_vertex.push_back(v);
      ++row;
    };

    if (cond.extended()) {
      for (const auto& s : slots) {
        add(s, 0, 1.0);
        next();
      }
    } else {
      for (std::size_t j = 1; j < d; ++j) {
        add(slots[j], 0, 1.0);
        add(slots[0], 0, -1.0);
        next();
      }
      for (const auto& s : slots) add(s, 3, 1.0);
      add(slots[0], 0, cond.alpha / (kappa * kappa * kappa));
      next();
    }

    switch (cond.kind) {
      case ConditionKind::C1:
        for (const auto& s : slots) {
          add(s, 2, 1.0);
          next();
        }
        break;
      case ConditionKind::C4:
        for (const auto& s : slots) {
          add(s, 1, 1.0);
          next();
        }
        break;
      case ConditionKind::C2:
        for (const auto& s : slots) add(s, 1, s.sigma);
        next();
        for (std::size_t j = 1; j < d; ++j) {
          add(slots[j], 2, 1.0 / slots[j].sigma);
          add(slots[0], 2, -1.0 / slots[0].sigma);
          next();
        }
        break;
      case ConditionKind::C3:
        for (std::size_t j = 1; j < d; ++j) {
          add(slots[j], 1, 1.0 / slots[j].sigma);
          add(slots[0], 1, -1.0 / slots[0].sigma);
          next();
        }
        for (const auto& s : slots) add(s, 2, s.sigma);
        next();
        break;
    }
  }

  for (Eigen::Index r = 0; r < out.matrix.rows(); ++r) {
    const double n = out.matrix.row(r).norm();
    if (n > 0) out.matrix.row(r) /= n;
  }
  return out;
}

inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues();
}

/// sigma_min / sigma_max of the normalized secular matrix.
inline double detector(const SecularLayout& layout, double lambda) {
  const auto s = singular_values(assemble_unchecked(layout, lambda).matrix);
  if (s(0) == 0.0) return 0.0;
  return s(s.size() - 1) / s(0);
}

inline double q_to_lambda(double q) { return q * q * q * std::abs(q); }

struct SignedLogDet {
  int sign = 0;
  double log_abs = -std::numeric_limits<double>::infinity();
};

inline SignedLogDet signed_log_det(const SecularLayout& layout, double lambda) {
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(assemble_unchecked(layout, lambda).matrix);
  SignedLogDet out;
  out.sign = static_cast<int>(lu.permutationP().determinant());
  out.log_abs = 0.0;
  const auto& m = lu.matrixLU();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double u = m(i, i);
    if (u == 0.0) return {0, -std::numeric_limits<double>::infinity()};
    if (u < 0) out.sign = -out.sign;
    out.log_abs += std::log(std::abs(u));
  }
  return out;
}

/// Sign of lambda and the per-edge Krylov flags; det is continuous while this is fixed.
inline std::vector<std::uint8_t> regime(const SecularLayout& layout, double lambda) {
  const auto& edges = layout.graph->edges();
  std::vector<std::uint8_t> out;
  out.reserve(edges.size() + 1);
  out.push_back(lambda < 0 ? 0 : (lambda > 0 ? 2 : 1));
  for (const auto& e : edges) out.push_back(uses_krylov(lambda, e.length) ? 1 : 0);
  return out;
}

/// L2 Gram matrix of two working-basis coefficient vectors (quadrature per edge).
inline Eigen::MatrixXd mode_gram(const MetricGraph& g, double lambda, const Eigen::MatrixXd& coeffs) {
  const auto E = g.edge_count();
  const double kappa = working_scale(lambda, g.total_length() / static_cast<double>(E));
  const Eigen::Index m = coeffs.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t e = 0; e < E; ++e) {
    const double len = g.edges()[e].length;
    const auto rule = gauss_legendre(64, 0.0, len);
    Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const auto t = working_basis(lambda, len, rule.nodes[i], kappa);
      Eigen::Vector4d f(t[0][0], t[0][1], t[0][2], t[0][3]);
      q += rule.weights[i] * f * f.transpose();
    }
    const auto block = coeffs.middleRows(static_cast<Eigen::Index>(4 * e), 4);
    gram += block.transpose() * q * block;
  }
  return gram;
}

inline SpectralCluster make_cluster(const SecularLayout& layout, double lambda, double tol, bool modes,
                                    int min_multiplicity = 0) {
  const MetricGraph& g = *layout.graph;
  const auto sm = assemble_unchecked(layout, lambda);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sm.matrix, modes ? Eigen::ComputeFullV : 0);
  const auto& s = svd.singularValues();
  int mult = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) < tol * s(0)) ++mult;
  }
  mult = std::max(mult, min_multiplicity);
  SpectralCluster cluster;
  cluster.value = lambda;
  cluster.multiplicity = mult;
  if (!modes || mult == 0) return cluster;

  Eigen::MatrixXd null = svd.matrixV().rightCols(mult);
  const Eigen::MatrixXd gram = mode_gram(g, lambda, null);
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) throw SolverError("eigenfunction Gram matrix is not positive definite");
  const Eigen::MatrixXd lower = llt.matrixL();
  null = lower.triangularView<Eigen::Lower>().solve(null.transpose()).transpose();

  const double kappa = sm.kappa;
  for (int m = 0; m < mult; ++m) {
    Mode mode;
    mode.coefficients.resize(g.edge_count());
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      for (int c = 0; c < 4; ++c) mode.coefficients[e][c] = null(static_cast<Eigen::Index>(4 * e + c), m);
    }
    mode.vertex_values.assign(g.vertex_count(), 0.0);
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
      const auto& slot = layout.slots[v].front();
      const double len = g.edges()[slot.edge].length;
      const auto t = working_basis(lambda, len, slot.side == Side::Left ? 0.0 : len, kappa);
      double value = 0.0;
      for (int c = 0; c < 4; ++c) value += t[0][c] * mode.coefficients[slot.edge][c];
      mode.vertex_values[v] = value;
    }
    cluster.modes.push_back(std::move(mode));
  }
  return cluster;
}

/// Golden-section minimization of f on [a, b].
template <class F>
double golden_minimize(F&& f, double a, double b, double width, int max_iterations) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int it = 0;
  while (b - a > width) {
    if (++it > max_iterations) throw SolverError("golden-section refinement did not converge");
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

}  // namespace detail

/// Secular matrix at lambda. Rows are grouped per vertex (2 * degree each) and
/// normalized to unit length; columns are 4 working-basis coefficients per edge.
inline SecularMatrix assemble(const MetricGraph& graph, double lambda) {
  require_valid(graph);
  if (!std::isfinite(lambda)) throw Error("assemble: lambda must be finite");
  const auto layout = detail::make_layout(graph);
  return detail::assemble_unchecked(layout, lambda);
}

/// Numerical nullity of the secular matrix at lambda.
inline int secular_nullity(const MetricGraph& graph, double lambda, double tol = 1e-8) {
  const auto s = detail::singular_values(assemble(graph, lambda).matrix);
  int n = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) < tol * s(0)) ++n;
  }
  return n;
}

inline Spectrum solve_fem_floor_estimate(const MetricGraph& graph);

/// Lowest `count` eigenvalues (with multiplicity) by the secular scan.
inline Spectrum scan_spectrum(const MetricGraph& graph, std::size_t count, const SecularOptions& options = {}) {
  require_valid(graph);
  if (count == 0) throw Error("scan_spectrum: count must be positive");
  const auto layout = detail::make_layout(graph);
  const double total = graph.total_length();
  const double step = std::numbers::pi / (options.samples_per_gap * total);
  if (!(step > 0) || step > std::numbers::pi / (4.0 * total)) {
    throw SolverError("scan_spectrum: grid step exceeds pi / (4 L); roots could be skipped");
  }

  double floor = 0.0;
  if (options.floor) {
    floor = *options.floor;
  } else {
    bool negative = false;
    for (const auto& v : graph.vertices()) negative = negative || v.condition.alpha < 0;
    if (negative) {
      const auto est = solve_fem_floor_estimate(graph);
      const double l1 = est.eigenvalue(1);
      floor = l1 - 0.1 * std::abs(l1) - 1e-6;
    }
  }

  // Crude cap on how far the scan may run before giving up.
  double alpha_sum = 0.0;
  for (const auto& v : graph.vertices()) {
    if (std::isfinite(v.condition.alpha)) alpha_sum += std::abs(v.condition.alpha);
  }
  const double q_cap =
      2.0 * (static_cast<double>(count + 2 * graph.edge_count() + 2 * graph.vertex_count()) + 4.0) *
          std::numbers::pi / total +
      std::pow(alpha_sum, 0.25) + 10.0 * step;

  Spectrum out;
  out.method = SpectralMethod::Secular;
  out.tolerance = options.multiplicity_tol;

  const auto zero = detail::make_cluster(layout, 0.0, options.multiplicity_tol, options.compute_modes);
  const int nullity0 = zero.multiplicity;
  std::size_t found = 0;
  auto push = [&](SpectralCluster c) {
    found += static_cast<std::size_t>(c.multiplicity);
    out.clusters.push_back(std::move(c));
  };
  bool zero_pushed = false;

  const long j_start = std::min(-1L, -static_cast<long>(std::ceil(std::pow(std::max(0.0, -floor), 0.25) / step)) - 1);
  auto q_of = [&](long j) { return static_cast<double>(j) * step; };
  auto s_of = [&](double q) { return detail::detector(layout, detail::q_to_lambda(q)); };
  auto logdet_of = [&](double q) { return detail::signed_log_det(layout, detail::q_to_lambda(q)).log_abs; };

  struct Sample {
    double q = 0.0;
    double s = 0.0;
    detail::SignedLogDet det;
    std::vector<std::uint8_t> regime;
  };
  auto sample = [&](long jj) {
    Sample x;
    x.q = q_of(jj);
    const double lambda = detail::q_to_lambda(x.q);
    x.s = detail::detector(layout, lambda);
    x.det = detail::signed_log_det(layout, lambda);
    x.regime = detail::regime(layout, lambda);
    return x;
  };

  auto consider = [&](double r) {
    if (nullity0 > 0 && std::abs(r) < step) return;
    const double lambda = detail::q_to_lambda(r);
    const double dup_tol = 1e-7 * std::max(1.0, std::abs(lambda));
    for (const auto& c : out.clusters) {
      if (std::abs(c.value - lambda) <= dup_tol) return;
    }
    auto cluster = detail::make_cluster(layout, lambda, options.multiplicity_tol, options.compute_modes);
    if (cluster.multiplicity == 0) return;
    if (!zero_pushed && nullity0 > 0 && lambda > 0) {
      push(zero);
      zero_pushed = true;
    }
    push(std::move(cluster));
  };

  auto root_of_det = [&](const Sample& lo, const Sample& hi) {
    const double ref = std::max(lo.det.log_abs, hi.det.log_abs);
    auto f = [&](double q) {
      const auto d = detail::signed_log_det(layout, detail::q_to_lambda(q));
      return d.sign * std::exp(d.log_abs - ref);
    };
    const double width = options.refine_rel_width * std::max(std::abs(lo.q), std::numbers::pi / total);
    auto tol = [width](double x, double y) { return std::abs(y - x) <= width; };
    std::uintmax_t iterations = static_cast<std::uintmax_t>(options.max_refine_iterations);
    const double flo = lo.det.sign * std::exp(lo.det.log_abs - ref);
    const double fhi = hi.det.sign * std::exp(hi.det.log_abs - ref);
    const auto bracket = boost::math::tools::toms748_solve(f, lo.q, hi.q, flo, fhi, tol, iterations);
    return 0.5 * (bracket.first + bracket.second);
  };

  Sample p2 = sample(j_start);
  Sample p1 = sample(j_start + 1);
  if (p2.det.sign == 0) {
    consider(p2.q);
  } else if (p1.det.sign != 0 && p1.det.sign != p2.det.sign && p1.regime == p2.regime) {
    consider(root_of_det(p2, p1));
  }
  long j = j_start + 2;
  for (;; ++j) {
    const double q = q_of(j);
    if (q > q_cap) throw SolverError("scan_spectrum: no convergence below the scan cap");
    Sample now = sample(j);
    const long centre = j - 1;
    const double qc = q_of(centre);

    if (!zero_pushed && nullity0 > 0 && qc >= 0.0) {
      push(zero);
      zero_pushed = true;
    }

    const bool zero_cell = nullity0 > 0 && centre == 0;
    const double width = options.refine_rel_width * std::max(std::abs(qc), std::numbers::pi / total);
    if (!zero_cell && p1.s <= p2.s && p1.s < now.s) {
      consider(detail::golden_minimize(s_of, p2.q, now.q, width, options.max_refine_iterations));
    }
    const bool same_regime = p2.regime == p1.regime && p1.regime == now.regime;
    if (!zero_cell && same_regime && p1.det.log_abs <= p2.det.log_abs && p1.det.log_abs < now.det.log_abs) {
      consider(detail::golden_minimize(logdet_of, p2.q, now.q, width, options.max_refine_iterations));
    }
    if (p1.det.sign == 0) {
      consider(p1.q);
    } else if (now.det.sign != 0 && now.det.sign != p1.det.sign && now.regime == p1.regime) {
      consider(root_of_det(p1, now));
    }

    p2 = std::move(p1);
    p1 = std::move(now);
    if (found >= count && (zero_pushed || nullity0 == 0) && qc > 0.0) {
      out.covered_up_to = detail::q_to_lambda(qc);
      break;
    }
  }

  // Parity pass: within a grid cell of fixed regime, det changes sign once per
  // root. A cell whose sign change disagrees with the roots already found in it
  // holds one more, located on det deflated by the known roots.
  auto q_of_lambda = [](double lambda) { return std::copysign(std::pow(std::abs(lambda), 0.25), lambda); };
  for (std::size_t pass = 0; pass < out.clusters.size(); ++pass) {
    const double r0 = q_of_lambda(out.clusters[pass].value);
    const long cell = static_cast<long>(std::floor(r0 / step));
    const double a = q_of(cell);
    const double b = q_of(cell + 1);
    for (int extra = 0; extra < 4; ++extra) {
      const double la = detail::q_to_lambda(a);
      const double lb = detail::q_to_lambda(b);
      if (detail::regime(layout, la) != detail::regime(layout, lb)) break;
      if (detail::regime(layout, la) != detail::regime(layout, detail::q_to_lambda(r0))) break;
      std::vector<std::pair<double, int>> known;
      bool on_edge = false;
      for (const auto& c : out.clusters) {
        const double r = q_of_lambda(c.value);
        on_edge = on_edge || std::min(std::abs(r - a), std::abs(r - b)) < 1e-3 * step;
        if (r > a && r < b) known.emplace_back(r, c.multiplicity);
      }
      if (on_edge) break;
      const auto da = detail::signed_log_det(layout, la);
      const auto db = detail::signed_log_det(layout, lb);
      if (da.sign == 0 || db.sign == 0) break;
      const double ref = std::max(da.log_abs, db.log_abs);
      auto deflated = [&](double q) {
        const auto d = detail::signed_log_det(layout, detail::q_to_lambda(q));
        double v = d.sign * std::exp(d.log_abs - ref);
        for (const auto& [r, m] : known) v /= std::pow(q - r, m);
        return v;
      };
      const double fa = deflated(a);
      const double fb = deflated(b);
      if (!(fa * fb < 0)) break;
      const double width = options.refine_rel_width * std::max(std::abs(a), std::numbers::pi / total);
      auto tol = [width](double x, double y) { return std::abs(y - x) <= width; };
      std::uintmax_t iterations = static_cast<std::uintmax_t>(options.max_refine_iterations);
      const auto bracket = boost::math::tools::toms748_solve(deflated, a, b, fa, fb, tol, iterations);
      const double r = 0.5 * (bracket.first + bracket.second);
      const double lambda = detail::q_to_lambda(r);
      const double dup_tol = 1e-7 * std::max(1.0, std::abs(lambda));
      auto same = std::find_if(out.clusters.begin(), out.clusters.end(),
                               [&](const SpectralCluster& c) { return std::abs(c.value - lambda) <= dup_tol; });
      if (same != out.clusters.end()) {
        *same = detail::make_cluster(layout, same->value, options.multiplicity_tol, options.compute_modes,
                                     same->multiplicity + 1);
        found += 1;
      } else {
        push(detail::make_cluster(layout, lambda, options.multiplicity_tol, options.compute_modes, 1));
      }
    }
  }
  std::sort(out.clusters.begin(), out.clusters.end(),
            [](const SpectralCluster& a, const SpectralCluster& b) { return a.value < b.value; });
  return out;
}

struct EigenfunctionSample {
  double x = 0.0;
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

/// Pointwise values of a secular-solver eigenfunction on one edge.
inline std::vector<EigenfunctionSample> eigenfunction_values(const MetricGraph& graph, const SpectralCluster& cluster,
                                                             std::size_t mode, std::string_view edge_id,
                                                             const std::vector<double>& xs) {
  const std::size_t e = graph.edge_index(edge_id);
  if (mode >= cluster.modes.size() || cluster.modes[mode].coefficients.size() != graph.edge_count()) {
    throw Error("eigenfunction_values: cluster carries no secular mode " + std::to_string(mode));
  }
  const double len = graph.edges()[e].length;
  const double kappa = working_scale(cluster.value, graph.total_length() / static_cast<double>(graph.edge_count()));
  const auto& a = cluster.modes[mode].coefficients[e];
  std::vector<EigenfunctionSample> out;
  out.reserve(xs.size());
  for (double x : xs) {
    const auto t = working_basis(cluster.value, len, x, kappa);
    std::array<double, 4> d{};
    double kr = 1.0;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) d[r] += t[r][c] * a[c];
      d[r] *= kr;
      kr *= kappa;
    }
    out.push_back({x, d[0], d[1], d[2], d[3]});
  }
  return out;
}

}  // namespace beamgraph

#include "beamgraph/fem.hpp"

namespace beamgraph {

inline Spectrum solve_fem_floor_estimate(const MetricGraph& graph) {
  FemOptions opt;
  opt.mesh = MeshSpec::uniform(16);
  opt.compute_modes = false;
  return solve_fem(graph, 1, opt);
}

}  // namespace beamgraph
