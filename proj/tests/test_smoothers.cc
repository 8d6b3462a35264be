#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "functree/error.h"
#include "functree/smoothers.h"
#include "functree/univariate.h"

namespace ft = functree;

namespace {

double Raw(const ft::SmoothResult& s, double x) { return s.function(x) + s.offset; }

std::vector<double> Uniform(std::size_t n, double lo, double hi, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

// Weighted window statistics over rank positions [s - half, s + half],
// computed directly from the rows (distinct x assumed).
struct WindowOracle {
  std::vector<double> x, r, w;
  double span;
  std::vector<std::size_t> order;

  WindowOracle(std::vector<double> x_, std::vector<double> r_, std::vector<double> w_, double s)
      : x(std::move(x_)), r(std::move(r_)), w(std::move(w_)), span(s), order(x.size()) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  }

  std::vector<std::size_t> Window(std::size_t pos) const {
    const auto n = x.size();
    const auto half = static_cast<std::size_t>(std::floor(span * static_cast<double>(n) / 2.0));
    const std::size_t lo = pos >= half ? pos - half : 0;
    const std::size_t hi = std::min(n - 1, pos + half);
    std::vector<std::size_t> rows;
    for (std::size_t s = lo; s <= hi; ++s) rows.push_back(order[s]);
    return rows;
  }

  double Mean(std::size_t pos) const {
    double num = 0, den = 0;
    for (auto i : Window(pos)) {
      num += w[i] * w[i] * (r[i] / w[i]);
      den += w[i] * w[i];
    }
    return num / den;
  }

  double Line(std::size_t pos) const {
    // Weighted least squares of r/w on x with weights w^2, evaluated at the knot.
    long double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
    for (auto i : Window(pos)) {
      const long double a = w[i] * w[i], t = r[i] / w[i];
      s0 += a;
      s1 += a * x[i];
      s2 += a * x[i] * x[i];
      t0 += a * t;
      t1 += a * t * x[i];
    }
    const long double det = s0 * s2 - s1 * s1;
    const long double b = (s0 * t1 - s1 * t0) / det;
    const long double a0 = (t0 - b * s1) / s0;
    return static_cast<double>(a0 + b * x[order[pos]]);
  }
};

}  // namespace

TEST(Smooth, CategoricalMeans) {
  const std::vector<double> x{0, 0, 1}, r{1, 3, 5}, w{1, 1, 1};
  ft::SmoothOptions opt;
  opt.kind = ft::VariableKind::kCategorical;
  opt.n_levels = 2;
  const auto s = ft::Smooth(x, r, w, ft::CategoricalMeanSmoother(), opt);
  EXPECT_NEAR(Raw(s, 0), 2.0, 1e-12);
  EXPECT_NEAR(Raw(s, 1), 5.0, 1e-12);
}

TEST(Smooth, CategoricalWeightedMean) {
  const std::vector<double> x{0, 0}, r{2, 6}, w{1, 2};
  ft::SmoothOptions opt;
  opt.kind = ft::VariableKind::kCategorical;
  opt.n_levels = 1;
  const auto s = ft::Smooth(x, r, w, ft::CategoricalMeanSmoother(), opt);
  EXPECT_NEAR(Raw(s, 0), 2.8, 1e-12);
}

TEST(Smooth, ConstantRatioGivesConstant) {
  const auto x = Uniform(300, -1, 1, 3);
  std::vector<double> w(300), r(300);
  for (std::size_t i = 0; i < 300; ++i) {
    w[i] = 0.5 + x[i] * x[i];
    r[i] = 1.7 * w[i];
  }
  for (const auto& spec : {ft::NearNeighborSmoother(), ft::LocalLinearSmoother()}) {
    const auto s = ft::Smooth(x, r, w, spec);
    EXPECT_NEAR(s.offset, 1.7, 1e-12);
    for (double v : {-2.0, -0.3, 0.0, 0.8, 3.0}) EXPECT_NEAR(s.function(v), 0.0, 1e-12);
  }
}

TEST(Smooth, LocalLinearReproducesLine) {
  const auto x = Uniform(400, -2, 2, 4);
  std::vector<double> r(400), w(400, 1.0);
  for (std::size_t i = 0; i < 400; ++i) r[i] = 2 * x[i] + 1;
  for (double span : {0.05, 0.2, 0.7}) {
    const auto s = ft::Smooth(x, r, w, ft::LocalLinearSmoother(span));
    for (double k : s.function.curve().knots) EXPECT_NEAR(Raw(s, k), 2 * k + 1, 1e-10);
  }
}

TEST(Smooth, CenteredUnderSquaredWeights) {
  const auto x = Uniform(500, 0, 1, 5);
  std::vector<double> r(500), w(500);
  for (std::size_t i = 0; i < 500; ++i) {
    w[i] = 1 + x[i];
    r[i] = std::sin(6 * x[i]) * w[i] + 0.3;
  }
  const auto s = ft::Smooth(x, r, w, ft::LocalLinearSmoother());
  double num = 0, den = 0;
  for (std::size_t i = 0; i < 500; ++i) {
    num += w[i] * w[i] * s.function(x[i]);
    den += w[i] * w[i];
  }
  EXPECT_NEAR(num / den, 0.0, 1e-12);
}

TEST(Smooth, NearNeighborMatchesWindowOracle) {
  const std::size_t n = 257;
  const auto x = Uniform(n, -1, 1, 6);
  const auto noise = Uniform(n, -0.5, 0.5, 7);
  std::vector<double> r(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.3 + std::abs(x[i]);
    r[i] = (std::cos(3 * x[i]) + noise[i]) * w[i];
  }
  const double span = 0.1;
  const auto s = ft::Smooth(x, r, w, ft::NearNeighborSmoother(span));
  WindowOracle oracle(x, r, w, span);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const double k = x[oracle.order[pos]];
    EXPECT_NEAR(Raw(s, k), oracle.Mean(pos), 1e-10);
  }
}

TEST(Smooth, LocalLinearMatchesWindowOracle) {
  const std::size_t n = 300;
  const auto x = Uniform(n, -1, 1, 8);
  const auto noise = Uniform(n, -0.5, 0.5, 9);
  std::vector<double> r(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 + x[i] * x[i];
    r[i] = (x[i] * x[i] * x[i] + noise[i]) * w[i];
  }
  const double span = 0.2;
  const auto s = ft::Smooth(x, r, w, ft::LocalLinearSmoother(span));
  WindowOracle oracle(x, r, w, span);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const double k = x[oracle.order[pos]];
    EXPECT_NEAR(Raw(s, k), oracle.Line(pos), 1e-9);
  }
}

TEST(Smooth, TinyWeightsExcluded) {
  std::vector<double> x{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, r(10), w(10, 1.0);
  for (std::size_t i = 0; i < 10; ++i) r[i] = 1.0;
  w[4] = 1e-12;
  r[4] = 5.0;  // r/w would be enormous
  const auto s = ft::Smooth(x, r, w, ft::NearNeighborSmoother(0.3));
  for (double v : {0.0, 4.0, 9.0}) EXPECT_NEAR(Raw(s, v), 1.0, 1e-9);
}

TEST(Smooth, ErrorsOnBadInput) {
  const std::vector<double> x{1, 2, 3}, r{1, 2}, w{1, 1, 1};
  EXPECT_THROW(ft::Smooth(x, r, w, ft::LocalLinearSmoother()), ft::ArgumentError);
  const std::vector<double> zero(3, 0.0), r3{1, 2, 3};
  EXPECT_THROW(ft::Smooth(x, r3, zero, ft::LocalLinearSmoother()), ft::ArgumentError);
}

TEST(Smooth, FiniteFarOutsideRange) {
  const auto x = Uniform(100, 0, 1, 10);
  std::vector<double> r(100), w(100, 1.0);
  for (std::size_t i = 0; i < 100; ++i) r[i] = x[i] * 3;
  const auto s = ft::Smooth(x, r, w, ft::LocalLinearSmoother());
  EXPECT_TRUE(std::isfinite(s.function(1e300)));
  EXPECT_TRUE(std::isfinite(s.function(-1e300)));
  EXPECT_EQ(s.function(1e9), s.function(2.0));
}

TEST(VariableSmoother, KnotsThinnedToCap) {
  const auto x = Uniform(5000, 0, 1, 11);
  ft::VariableSmoother sm(x, ft::VariableKind::kNumeric, 0, ft::LocalLinearSmoother(), 500);
  EXPECT_LE(sm.num_ordinates(), 500u);
  EXPECT_GE(sm.num_ordinates(), 450u);
}

TEST(VariableSmoother, RowValuesMatchFunction) {
  const auto x = Uniform(3000, -3, 3, 12);
  std::vector<double> r(3000), w(3000, 1.0), wr, ww, ord, rows(3000);
  for (std::size_t i = 0; i < 3000; ++i) r[i] = std::tanh(x[i]);
  const std::vector<double> omega(3000, 1.0);
  ft::VariableSmoother sm(x, ft::VariableKind::kNumeric, 0, ft::LocalLinearSmoother(), 200);
  ASSERT_TRUE(ft::PrepareSmootherWeights(r, w, omega, wr, ww));
  ASSERT_TRUE(sm.FitOrdinates(wr, ww, ord));
  sm.RowValues(ord, rows);
  const auto f = sm.MakeFunction(ord);
  for (std::size_t i = 0; i < 3000; ++i) ASSERT_EQ(rows[i], f(x[i]));
}

// --- regression spline -----------------------------------------------------

namespace {

// Least squares with the truncated power basis 1, x, x^2, x^3, (x-k)^3_+,
// solved through the normal equations by Gaussian elimination.
std::vector<double> PowerBasisFit(const std::vector<double>& x, const std::vector<double>& t,
                                  const std::vector<double>& knots,
                                  const std::vector<double>& at) {
  const std::size_t m = 4 + knots.size();
  auto basis = [&](double v) {
    std::vector<long double> b{1, v, v * v, v * v * v};
    for (double k : knots) b.push_back(v > k ? (v - k) * (v - k) * (v - k) : 0.0L);
    return b;
  };
  std::vector<std::vector<long double>> a(m, std::vector<long double>(m + 1, 0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto b = basis(x[i]);
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = 0; q < m; ++q) a[p][q] += b[p] * b[q];
      a[p][m] += b[p] * t[i];
    }
  }
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < m; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < m; ++r) {
      if (r == c) continue;
      const long double f = a[r][c] / a[c][c];
      for (std::size_t q = c; q <= m; ++q) a[r][q] -= f * a[c][q];
    }
  }
  std::vector<double> out;
  for (double v : at) {
    const auto b = basis(v);
    long double s = 0;
    for (std::size_t p = 0; p < m; ++p) s += b[p] * a[p][m] / a[p][p];
    out.push_back(static_cast<double>(s));
  }
  return out;
}

}  // namespace

TEST(SplineFit, ConstantTarget) {
  const auto x = Uniform(200, 0, 1, 13);
  const std::vector<double> t(200, 4.25);
  const auto f = ft::SplineFit(x, t);
  for (double v : {0.0, 0.3, 0.77, 1.0}) EXPECT_NEAR(f(v), 4.25, 1e-9);
}

TEST(SplineFit, LinearTarget) {
  const auto x = Uniform(300, -2, 5, 14);
  const auto f = ft::SplineFit(x, x);
  for (double v : x) EXPECT_NEAR(f(v), v, 1e-8);
}

TEST(SplineFit, MatchesNormalEquationOracle) {
  std::vector<double> x(1000), t(1000);
  for (std::size_t i = 0; i < 1000; ++i) {
    x[i] = -1.0 + 2.0 * static_cast<double>(i) / 999.0;
    t[i] = std::sin(std::numbers::pi * x[i]);
  }
  const auto knots = ft::PercentileKnots(x);
  EXPECT_EQ(knots.size(), 19u);
  const auto f = ft::SplineFit(x, t);
  const auto oracle = PowerBasisFit(x, t, knots, x);
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(f(x[i]) - oracle[i]));
  EXPECT_LT(worst, 0.01);
}

TEST(SplineFit, FewDistinctValuesStillFit) {
  std::vector<double> x, t;
  for (int i = 0; i < 90; ++i) {
    x.push_back(i % 3);
    t.push_back(i % 3 == 1 ? 2.0 : 0.0);
  }
  const auto f = ft::SplineFit(x, t);
  EXPECT_NEAR(f(1.0), 2.0, 1e-8);
  EXPECT_NEAR(f(0.0), 0.0, 1e-8);
}

// --- univariate functions --------------------------------------------------

TEST(UnivariateFunction, CurveInterpolatesAndExtrapolatesFlat) {
  const ft::UnivariateFunction f(ft::Curve{{0, 1, 3}, {1, 3, -1}});
  EXPECT_DOUBLE_EQ(f(0.5), 2.0);
  EXPECT_DOUBLE_EQ(f(2.0), 1.0);
  EXPECT_DOUBLE_EQ(f(-7), 1.0);
  EXPECT_DOUBLE_EQ(f(9), -1.0);
}

TEST(UnivariateFunction, LevelTableDefault) {
  const ft::UnivariateFunction f(ft::LevelTable{{1, 2}, 0.5});
  EXPECT_EQ(f(1), 2.0);
  EXPECT_EQ(f(-1), 0.5);
  EXPECT_EQ(f(7), 0.5);
}

TEST(UnivariateFunction, RejectsUnorderedKnots) {
  EXPECT_THROW(ft::UnivariateFunction(ft::Curve{{0, 0}, {1, 2}}), ft::ArgumentError);
}

TEST(UnivariateFunction, BlendOnUnionOfKnots) {
  const ft::UnivariateFunction a(ft::Curve{{0, 2}, {0, 2}});
  const ft::UnivariateFunction b(ft::Curve{{1}, {4}});
  const auto c = ft::UnivariateFunction::Blend(a, b, 0.25);
  for (double v : {-1.0, 0.0, 0.5, 1.0, 1.7, 2.0, 3.0}) {
    EXPECT_NEAR(c(v), 0.75 * a(v) + 0.25 * b(v), 1e-15);
  }
}
