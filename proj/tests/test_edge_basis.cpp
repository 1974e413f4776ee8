#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>
#include <numbers>

#include "beamgraph/edge_basis.hpp"
#include "beamgraph/quadrature.hpp"

using namespace beamgraph;
using mp50 = boost::multiprecision::cpp_dec_float_50;

TEST(Quadrature, GaussLegendreIsExactForDegreeTwoNMinusOne) {
  for (int n : {1, 3, 8, 20, 64}) {
    const auto rule = gauss_legendre(n, 0.0, 2.0);
    for (int p = 0; p <= 2 * n - 1; p += std::max(1, n / 3)) {
      double sum = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * std::pow(rule.nodes[i], p);
      const double exact = std::pow(2.0, p + 1) / (p + 1);
      EXPECT_NEAR(sum / exact, 1.0, 1e-13) << "n=" << n << " p=" << p;
    }
  }
  EXPECT_THROW(gauss_legendre(0), std::invalid_argument);
}

TEST(EdgeBasis, SpectralParameterRegimes) {
  EXPECT_EQ(SpectralParameter(3.0).regime(), Regime::Positive);
  EXPECT_EQ(SpectralParameter(-3.0).regime(), Regime::Negative);
  EXPECT_EQ(SpectralParameter(0.0).regime(), Regime::Zero);
  EXPECT_DOUBLE_EQ(SpectralParameter(16.0).root(), 2.0);
  EXPECT_DOUBLE_EQ(SpectralParameter(-16.0).root(), 2.0);
  EXPECT_THROW(SpectralParameter(std::nan("")), Error);
}

TEST(EdgeBasis, NormalDerivativeSigns) {
  EXPECT_EQ(normal_derivative_signs(Side::Left), (std::array<int, 3>{1, 1, 1}));
  EXPECT_EQ(normal_derivative_signs(Side::Right), (std::array<int, 3>{-1, 1, -1}));
}

TEST(EdgeBasis, PositiveRegimeUnscaledMatchesClosedForms) {
  const double k = 1.7;
  const double len = 2.3;
  const auto right = eval_basis(SpectralParameter(std::pow(k, 4)), len, Side::Right).unscaled();
  const double x = len;
  EXPECT_NEAR(right[0][0], std::cos(k * x), 1e-13);
  EXPECT_NEAR(right[0][1], std::sin(k * x), 1e-13);
  EXPECT_NEAR(right[0][2], std::cosh(k * x), 1e-12);
  EXPECT_NEAR(right[0][3], std::sinh(k * x), 1e-12);
  EXPECT_NEAR(right[1][0], -k * std::sin(k * x), 1e-12);
  EXPECT_NEAR(right[2][1], -k * k * std::sin(k * x), 1e-12);
  EXPECT_NEAR(right[3][2], k * k * k * std::sinh(k * x), 1e-11);
  const auto left = eval_basis(SpectralParameter(std::pow(k, 4)), len, Side::Left).unscaled();
  EXPECT_NEAR(left[0][2], 1.0, 1e-14);
  EXPECT_NEAR(left[1][3], k, 1e-14);
}

TEST(EdgeBasis, NegativeAndZeroRegimesSolveTheEquation) {
  // Each column f satisfies f'''' = lambda f; check by one more derivative step via the table recursion.
  const double lambda = -5.0;
  const double len = 1.4;
  for (Side side : {Side::Left, Side::Right}) {
    const auto t = eval_basis(SpectralParameter(lambda), len, side).unscaled();
    const double nu = std::pow(5.0, 0.25) / std::numbers::sqrt2;
    const double x = side == Side::Left ? 0.0 : len;
    EXPECT_NEAR(t[0][2], std::exp(-nu * x) * std::cos(nu * x), 1e-13);
    EXPECT_NEAR(t[0][3], std::exp(-nu * x) * std::sin(nu * x), 1e-13);
    // (d/dx)^4 of e^{z x} is z^4 e^{z x} = lambda e^{zx}: derivative three equals z^3 times value.
    const std::complex<double> z(-nu, nu);
    const auto v = std::complex<double>(t[0][2], t[0][3]);
    const auto d3 = std::complex<double>(t[3][2], t[3][3]);
    EXPECT_NEAR(std::abs(d3 - z * z * z * v), 0.0, 1e-12);
    EXPECT_NEAR((z * z * z * z).real(), lambda, 1e-12);
  }
  const auto zero = eval_basis(SpectralParameter(0.0), 2.0, Side::Right).table;
  EXPECT_DOUBLE_EQ(zero[0][3], 8.0);
  EXPECT_DOUBLE_EQ(zero[1][3], 12.0);
  EXPECT_DOUBLE_EQ(zero[2][3], 12.0);
  EXPECT_DOUBLE_EQ(zero[3][3], 6.0);
  EXPECT_DOUBLE_EQ(zero[3][2], 0.0);
}

TEST(EdgeBasis, KrylovFunctionsMatchClosedForms) {
  for (double k : {0.3, 1.0, 1.9}) {
    const double lambda = std::pow(k, 4);
    for (double x : {0.0, 0.4, 1.0}) {
      const auto K = detail::krylov(lambda, x);
      EXPECT_NEAR(K[0], 0.5 * (std::cosh(k * x) + std::cos(k * x)), 1e-14);
      EXPECT_NEAR(K[1], 0.5 * (std::sinh(k * x) + std::sin(k * x)) / k, 1e-14);
      EXPECT_NEAR(K[2], 0.5 * (std::cosh(k * x) - std::cos(k * x)) / (k * k), 1e-14);
      EXPECT_NEAR(K[3], 0.5 * (std::sinh(k * x) - std::sin(k * x)) / (k * k * k), 1e-14);
    }
  }
}

TEST(EdgeBasis, WorkingBasisDerivativesAreConsistent) {
  // Central differences of row r against row r + 1 (times kappa) in every regime.
  const double len = 1.3;
  for (double lambda : {-40.0, 0.5, 30.0, 900.0}) {
    const double kappa = working_scale(lambda, len);
    const double x = 0.6;
    const double h = 1e-5;
    const auto tp = working_basis(lambda, len, x + h, kappa);
    const auto tm = working_basis(lambda, len, x - h, kappa);
    const auto t0 = working_basis(lambda, len, x, kappa);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        const double fd = (tp[r][c] - tm[r][c]) / (2 * h) / kappa;
        EXPECT_NEAR(fd, t0[r + 1][c], 1e-6 * std::max(1.0, std::abs(t0[r + 1][c])))
            << "lambda=" << lambda << " r=" << r << " c=" << c;
      }
    }
  }
  EXPECT_TRUE(uses_krylov(1.0, 1.0));
  EXPECT_FALSE(uses_krylov(81.0, 1.0));
}

TEST(EdgeBasis, LoopResidualAgainstFiftyDigitEvaluation) {
  const double len = 1.7;
  for (double t : {1.0, 3.3, 7.85, 12.0, 30.0}) {
    const double lambda = std::pow(t / len, 4);
    const mp50 T = mp50(std::pow(lambda, 0.25)) * mp50(len);
    const mp50 exact = (sin(T) * (1 - cosh(T)) + sinh(T) * (1 - cos(T))) * exp(-T);
    EXPECT_NEAR(loop_secular_residual(lambda, len), exact.convert_to<double>(), 1e-12) << "t=" << t;
  }
  const double first = std::pow(2 * std::numbers::pi / len, 4);
  EXPECT_NEAR(loop_secular_residual(first, len), 0.0, 1e-10);
  EXPECT_GT(std::abs(loop_secular_residual(std::pow(std::numbers::pi / len, 4), len)), 0.1);
  EXPECT_THROW(loop_secular_residual(0.0, len), Error);
}
