#ifndef FUNCTREE_UNIVARIATE_H_
#define FUNCTREE_UNIVARIATE_H_

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace functree {

/// Per-level values of a function of a categorical variable. Level indices
/// outside the table (unseen levels) evaluate to `default_value`.
struct LevelTable {
  std::vector<double> values;
  double default_value = 0.0;
};

/// Piecewise-linear function through (knots[i], values[i]) with constant
/// extrapolation beyond the first and last knot. Knots strictly increase.
struct Curve {
  std::vector<double> knots;
  std::vector<double> values;
};

/// Position of x inside a curve's knot vector: interpolate between
/// `lo` and `lo + 1` with fraction `t`; `t` is 0 at or beyond the ends
/// (with `lo` the clamped end knot).
struct KnotLocation {
  std::size_t lo = 0;
  double t = 0.0;
};

KnotLocation LocateKnot(std::span<const double> knots, double x);

inline double Interpolate(std::span<const double> values, KnotLocation loc) {
  if (loc.t == 0.0) return values[loc.lo];
  return values[loc.lo] + loc.t * (values[loc.lo + 1] - values[loc.lo]);
}

/// A single-variable function in evaluable form. Evaluation is total: any
/// finite input yields a finite value.
class UnivariateFunction {
 public:
  UnivariateFunction() : repr_(Curve{{0.0}, {0.0}}) {}
  explicit UnivariateFunction(LevelTable table);
  explicit UnivariateFunction(Curve curve);

  static UnivariateFunction Constant(double c) { return UnivariateFunction(Curve{{0.0}, {c}}); }

  bool is_level_table() const { return std::holds_alternative<LevelTable>(repr_); }
  const LevelTable& level_table() const { return std::get<LevelTable>(repr_); }
  const Curve& curve() const { return std::get<Curve>(repr_); }

  double operator()(double x) const;

  void Shift(double delta);
  void Scale(double factor);

  /// (1 - beta) * a + beta * b, exact for two functions of the same kind.
  /// Curves are merged on the union of their knots.
  static UnivariateFunction Blend(const UnivariateFunction& a,
                                  const UnivariateFunction& b, double beta);

 private:
  std::variant<LevelTable, Curve> repr_;
};

}  // namespace functree

#endif  // FUNCTREE_UNIVARIATE_H_
