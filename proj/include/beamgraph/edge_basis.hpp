#pragma once

// Solutions of phi'''' = lambda * phi on one edge.
//
// Two families live here. eval_basis() exposes the textbook bases (cos/sin/
// cosh/sinh, polynomials, damped oscillations) with hyperbolic columns
// rescaled by known positive factors. working_basis() is what the secular
// solver assembles from: per edge it picks either a Krylov (power series)
// basis for small |lambda|^{1/4} * length or an end-anchored exponential
// basis otherwise, and divides the r-th derivative by kappa^r so that all
// entries stay O(1) without changing the null space.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "beamgraph/graph.hpp"

namespace beamgraph {

enum class Regime { Negative, Zero, Positive };

class SpectralParameter {
 public:
  explicit SpectralParameter(double lambda) : lambda_(lambda) {
    if (!std::isfinite(lambda)) throw Error("spectral parameter must be finite");
    if (lambda > 0) {
      regime_ = Regime::Positive;
    } else if (lambda < 0) {
      regime_ = Regime::Negative;
    } else {
      regime_ = Regime::Zero;
    }
    root_ = std::pow(std::abs(lambda), 0.25);
  }

  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] Regime regime() const { return regime_; }
  /// k = lambda^{1/4} (Positive), mu = |lambda|^{1/4} (Negative), 0 (Zero).
  [[nodiscard]] double root() const { return root_; }

 private:
  double lambda_ = 0.0;
  double root_ = 0.0;
  Regime regime_ = Regime::Zero;
};

/// table[r][c]: r-th coordinate derivative of basis column c.
using DerivativeTable = std::array<std::array<double, 4>, 4>;

struct EdgeBasisEval {
  DerivativeTable table{};
  /// Natural log of the positive factor applied to each column.
  std::array<double, 4> column_log_scale{};

  /// Entries with the column factors divided out (may overflow).
  [[nodiscard]] DerivativeTable unscaled() const {
    DerivativeTable out = table;
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) out[r][c] = table[r][c] * std::exp(-column_log_scale[c]);
    }
    return out;
  }
};

/// Signs turning coordinate derivatives (phi', phi'', phi''') into normal
/// derivatives pointing into the edge.
inline constexpr std::array<int, 3> normal_derivative_signs(Side side) {
  return side == Side::Left ? std::array<int, 3>{1, 1, 1} : std::array<int, 3>{-1, 1, -1};
}

inline EdgeBasisEval eval_basis(const SpectralParameter& param, double length, Side side) {
  if (!(length > 0) || !std::isfinite(length)) throw GraphError("eval_basis: length must be positive");
  const double x = side == Side::Left ? 0.0 : length;
  EdgeBasisEval out;
  switch (param.regime()) {
    case Regime::Zero: {
      for (int c = 0; c < 4; ++c) {
        for (int r = 0; r < 4; ++r) {
          double v = 0.0;
          if (r <= c) {
            double coeff = 1.0;
            for (int i = 0; i < r; ++i) coeff *= (c - i);
            v = coeff * std::pow(x, c - r);
          }
          out.table[r][c] = v;
        }
      }
      out.column_log_scale = {0, 0, 0, 0};
      break;
    }
    case Regime::Positive: {
      const double k = param.root();
      const double grow = std::exp(k * (x - length));
      const double decay = std::exp(-k * (x + length));
      const double ch = 0.5 * (grow + decay);
      const double sh = 0.5 * (grow - decay);
      double kr = 1.0;
      for (int r = 0; r < 4; ++r) {
        const double phase = k * x + r * std::numbers::pi / 2;
        out.table[r][0] = kr * std::cos(phase);
        out.table[r][1] = kr * std::sin(phase);
        out.table[r][2] = kr * (r % 2 == 0 ? ch : sh);
        out.table[r][3] = kr * (r % 2 == 0 ? sh : ch);
        kr *= k;
      }
      out.column_log_scale = {0, 0, -k * length, -k * length};
      break;
    }
    case Regime::Negative: {
      const double nu = param.root() / std::numbers::sqrt2;
      const std::complex<double> zg(nu, nu);
      const std::complex<double> zd(-nu, nu);
      std::complex<double> g = std::exp(zg * x - nu * length);
      std::complex<double> d = std::exp(zd * x);
      for (int r = 0; r < 4; ++r) {
        out.table[r][0] = g.real();
        out.table[r][1] = g.imag();
        out.table[r][2] = d.real();
        out.table[r][3] = d.imag();
        g *= zg;
        d *= zd;
      }
      out.column_log_scale = {-nu * length, -nu * length, 0, 0};
      break;
    }
  }
  return out;
}

/// Scaled form of sin(t)(1 - cosh t) + sinh(t)(1 - cos t), t = lambda^{1/4} * length,
/// multiplied by e^{-t}.
inline double loop_secular_residual(double lambda, double length) {
  if (!(lambda > 0) || !std::isfinite(lambda)) throw Error("loop_secular_residual: lambda must be positive");
  const double t = std::pow(lambda, 0.25) * length;
  const double e = std::exp(-t);
  const double e2 = e * e;
  return std::sin(t) * (e - 0.5 * (1.0 + e2)) + 0.5 * (1.0 - e2) * (1.0 - std::cos(t));
}

// ---------------------------------------------------------------------------
// Working basis used by the secular solver.

/// Edges with |lambda|^{1/4} * length at most this use the Krylov basis.
inline constexpr double kKrylovThreshold = 2.0;

/// Global derivative scale kappa for a graph: max(|lambda|^{1/4}, 1 / mean edge length).
inline double working_scale(double lambda, double mean_edge_length) {
  return std::max(std::pow(std::abs(lambda), 0.25), 1.0 / mean_edge_length);
}

namespace detail {

/// K_j(x) = x^j * sum_n (lambda x^4)^n / (4n + j)!, j = 0..3.
inline std::array<double, 4> krylov(double lambda, double x) {
  std::array<double, 4> out{};
  const double s = lambda * x * x * x * x;
  double xj = 1.0;
  double jfact = 1.0;
  for (int j = 0; j < 4; ++j) {
    if (j > 0) {
      xj *= x;
      jfact *= j;
    }
    double term = 1.0 / jfact;
    double sum = term;
    for (int n = 1; n < 60; ++n) {
      const double m = 4.0 * n + j;
      term *= s / (m * (m - 1) * (m - 2) * (m - 3));
      sum += term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    }
    out[j] = xj * sum;
  }
  return out;
}

}  // namespace detail

inline bool uses_krylov(double lambda, double length) {
  return std::pow(std::abs(lambda), 0.25) * length <= kKrylovThreshold;
}

/// table[r][c] = f_c^{(r)}(x) / kappa^r for the working basis of one edge.
inline DerivativeTable working_basis(double lambda, double length, double x, double kappa) {
  DerivativeTable t{};
  const double mu = std::pow(std::abs(lambda), 0.25);
  if (uses_krylov(lambda, length)) {
    // f_c = c! K_c(x) / length^c, so f_c ~ (x / length)^c near lambda = 0.
    const auto K = detail::krylov(lambda, x);
    const std::array<double, 4> fact{1, 1, 2, 6};
    for (int c = 0; c < 4; ++c) {
      const double norm = fact[c] / std::pow(length, c);
      double kr = 1.0;
      for (int r = 0; r < 4; ++r) {
        const double d = r <= c ? K[c - r] : lambda * K[c - r + 4];
        t[r][c] = norm * d / kr;
        kr *= kappa;
      }
    }
    return t;
  }
  const double ratio = mu / kappa;
  if (lambda > 0) {
    const double k = mu;
    const double a = std::exp(-k * x);
    const double b = std::exp(-k * (length - x));
    double f = 1.0;
    for (int r = 0; r < 4; ++r) {
      const double phase = k * x + r * std::numbers::pi / 2;
      t[r][0] = f * std::cos(phase);
      t[r][1] = f * std::sin(phase);
      t[r][2] = f * (r % 2 == 0 ? a : -a);
      t[r][3] = f * b;
      f *= ratio;
    }
    return t;
  }
  const double nu = mu / std::numbers::sqrt2;
  const std::complex<double> wg(1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2);
  const std::complex<double> wd(-1.0 / std::numbers::sqrt2, 1.0 / std::numbers::sqrt2);
  std::complex<double> g = std::exp(std::complex<double>(nu * (x - length), nu * x));
  std::complex<double> d = std::exp(std::complex<double>(-nu * x, nu * x));
  double f = 1.0;
  for (int r = 0; r < 4; ++r) {
    t[r][0] = f * g.real();
    t[r][1] = f * g.imag();
    t[r][2] = f * d.real();
    t[r][3] = f * d.imag();
    g *= wg;
    d *= wd;
    f *= ratio;
  }
  return t;
}

}  // namespace beamgraph
