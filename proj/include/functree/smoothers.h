#ifndef FUNCTREE_SMOOTHERS_H_
#define FUNCTREE_SMOOTHERS_H_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "functree/dataset.h"
#include "functree/univariate.h"

namespace functree {

enum class SmootherMethod { kCategoricalMean, kNearNeighbor, kLocalLinear };

struct SmootherSpec {
  SmootherMethod method = SmootherMethod::kLocalLinear;
  /// Fraction of observations in each neighborhood (numeric methods).
  double span = 0.2;
  /// Minimum observations per level or neighborhood.
  int min_count = 1;
};

inline SmootherSpec NearNeighborSmoother(double span = 0.1) {
  return {SmootherMethod::kNearNeighbor, span, 1};
}
inline SmootherSpec LocalLinearSmoother(double span = 0.2) {
  return {SmootherMethod::kLocalLinear, span, 1};
}
inline SmootherSpec CategoricalMeanSmoother() {
  return {SmootherMethod::kCategoricalMean, 1.0, 1};
}

/// Rows whose |w| falls below this multiple of the root-mean-square basis
/// weight are excluded from a fit.
inline constexpr double kWeightFloor = 1e-6;

/// Precomputed rank structure of one predictor column: sort order, knot
/// grid, neighborhood windows and per-row knot locations. Fitting with a new
/// residual/weight pair then costs O(N).
///
/// Categorical columns produce a LevelTable; numeric columns produce a Curve
/// with knots at the distinct sorted values, thinned by quantiles to at most
/// `max_knots`. With kCategoricalMean on a numeric column every distinct value
/// is its own neighborhood.
class VariableSmoother {
 public:
  VariableSmoother(std::span<const double> x, VariableKind kind,
                   std::size_t n_levels, const SmootherSpec& spec,
                   std::size_t max_knots = 500);

  std::size_t rows() const { return rows_; }
  bool categorical() const { return kind_ == VariableKind::kCategorical; }

  /// Number of ordinates a fit produces (knots, or levels plus a default).
  std::size_t num_ordinates() const;

  /// Ordinates of the weighted conditional mean of r/w with weights
  /// omega * w^2, given per-row products wr = omega*w*r and ww = omega*w^2.
  /// Returns false when every row has zero weight.
  bool FitOrdinates(std::span<const double> wr, std::span<const double> ww,
                    std::vector<double>& ordinates) const;

  /// Value of the function with these ordinates at each training row;
  /// bit-identical to evaluating MakeFunction(ordinates).
  void RowValues(std::span<const double> ordinates, std::span<double> out) const;

  UnivariateFunction MakeFunction(std::span<const double> ordinates) const;

  /// Ordinates of an existing function on this smoother's grid, or nullopt
  /// when the function is not representable exactly (different knots).
  std::optional<std::vector<double>> OrdinatesOf(const UnivariateFunction& f) const;

 private:
  bool FitNumeric(std::span<const double> wr, std::span<const double> ww,
                  std::vector<double>& ordinates) const;
  bool FitLevels(std::span<const double> wr, std::span<const double> ww,
                 std::vector<double>& ordinates) const;

  VariableKind kind_;
  SmootherSpec spec_;
  std::size_t rows_ = 0;
  // Categorical.
  std::size_t n_levels_ = 0;
  std::vector<std::int32_t> level_;  // per row, -1 for unseen
  // Numeric.
  std::vector<std::uint32_t> order_;  // rows sorted by x, ties by row index
  std::vector<double> sorted_x_;      // x in sorted order, globally centered
  double x_center_ = 0.0;
  double x_scale2_ = 1.0;             // global variance of x, for degeneracy tests
  std::vector<double> knots_;         // original scale
  std::vector<double> knot_x_;        // centered abscissa of each knot
  std::vector<std::pair<std::uint32_t, std::uint32_t>> windows_;  // inclusive
  std::vector<KnotLocation> row_loc_;
};

/// Computes wr = omega*w*r and ww = omega*w^2, zeroing rows with |w| below the
/// weight floor. Returns false if every row is excluded.
bool PrepareSmootherWeights(std::span<const double> r, std::span<const double> w,
                            std::span<const double> omega, std::vector<double>& wr,
                            std::vector<double>& ww);

struct SmoothOptions {
  /// Row weights omega (empty means all 1).
  std::span<const double> row_weight;
  /// Treat x as level indices (LevelTable output) or numeric values. Unset
  /// means categorical exactly when the method is kCategoricalMean.
  std::optional<VariableKind> kind;
  /// Level count for categorical x; 0 infers max(x) + 1.
  std::size_t n_levels = 0;
  std::size_t max_knots = 500;
};

struct SmoothResult {
  /// Centered estimate: zero mean under weights omega * w^2 over the rows.
  UnivariateFunction function;
  /// Constant removed by centering; function + offset is the raw estimate.
  double offset = 0.0;
};

/// Weighted conditional expectation E_{w^2}[r / w | x].
SmoothResult Smooth(std::span<const double> x, std::span<const double> r,
                    std::span<const double> w, const SmootherSpec& spec,
                    const SmoothOptions& options = {});

/// Least-squares cubic regression spline of t on x with interior knots at the
/// 5th, 10th, ..., 95th percentiles of x. Returned as a Curve sampled at
/// every distinct x (thinned to 4000) plus a uniform 257-point grid, so it
/// reproduces the spline exactly at the sample points. Rank-deficient designs
/// drop collinear columns with a warning.
UnivariateFunction SplineFit(std::span<const double> x, std::span<const double> t,
                             std::span<const double> weight = {});

/// The cubic regression spline itself, for callers that need it off-grid.
class RegressionSpline {
 public:
  RegressionSpline(std::span<const double> x, std::span<const double> t,
                   std::span<const double> weight = {});
  double operator()(double x) const;
  std::size_t num_basis() const { return coef_.size(); }
  const std::vector<double>& knots() const { return knots_; }

 private:
  std::vector<double> knots_;  // full knot vector with repeated boundaries
  std::vector<double> coef_;
  double lo_ = 0.0, hi_ = 0.0;
};

/// Interior knots used by the spline: distinct percentiles 5..95 strictly
/// inside (min x, max x).
std::vector<double> PercentileKnots(std::span<const double> x);

}  // namespace functree

#endif  // FUNCTREE_SMOOTHERS_H_
