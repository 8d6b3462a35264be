#include "functree/univariate.h"

#include <algorithm>
#include <cmath>

#include "functree/error.h"

namespace functree {

KnotLocation LocateKnot(std::span<const double> knots, double x) {
  const std::size_t n = knots.size();
  if (n == 1 || !(x > knots.front())) return {0, 0.0};
  if (!(x < knots.back())) return {n - 1, 0.0};
  const auto it = std::upper_bound(knots.begin(), knots.end(), x);
  const std::size_t lo = static_cast<std::size_t>(it - knots.begin()) - 1;
  return {lo, (x - knots[lo]) / (knots[lo + 1] - knots[lo])};
}

UnivariateFunction::UnivariateFunction(LevelTable table) : repr_(std::move(table)) {
  const auto& t = std::get<LevelTable>(repr_);
  for (double v : t.values) {
    if (!std::isfinite(v)) throw ArgumentError("level table value is not finite");
  }
  if (!std::isfinite(t.default_value)) throw ArgumentError("level table default is not finite");
}

UnivariateFunction::UnivariateFunction(Curve curve) : repr_(std::move(curve)) {
  const auto& c = std::get<Curve>(repr_);
  if (c.knots.empty() || c.knots.size() != c.values.size()) {
    throw ArgumentError("curve needs matching, nonempty knot and value vectors");
  }
  for (std::size_t i = 0; i < c.knots.size(); ++i) {
    if (!std::isfinite(c.knots[i]) || !std::isfinite(c.values[i])) {
      throw ArgumentError("curve knot or value is not finite");
    }
    if (i > 0 && !(c.knots[i] > c.knots[i - 1])) {
      throw ArgumentError("curve knots must be strictly increasing");
    }
  }
}

double UnivariateFunction::operator()(double x) const {
  if (const auto* t = std::get_if<LevelTable>(&repr_)) {
    if (!(x >= 0.0) || x >= static_cast<double>(t->values.size())) return t->default_value;
    return t->values[static_cast<std::size_t>(x)];
  }
  const auto& c = std::get<Curve>(repr_);
  return Interpolate(c.values, LocateKnot(c.knots, x));
}

void UnivariateFunction::Shift(double delta) {
  if (auto* t = std::get_if<LevelTable>(&repr_)) {
    for (double& v : t->values) v += delta;
    t->default_value += delta;
  } else {
    for (double& v : std::get<Curve>(repr_).values) v += delta;
  }
}

void UnivariateFunction::Scale(double factor) {
  if (auto* t = std::get_if<LevelTable>(&repr_)) {
    for (double& v : t->values) v *= factor;
    t->default_value *= factor;
  } else {
    for (double& v : std::get<Curve>(repr_).values) v *= factor;
  }
}

UnivariateFunction UnivariateFunction::Blend(const UnivariateFunction& a,
                                             const UnivariateFunction& b,
                                             double beta) {
  if (a.is_level_table() != b.is_level_table()) {
    throw ArgumentError("cannot blend a level table with a curve");
  }
  if (a.is_level_table()) {
    const auto& ta = a.level_table();
    const auto& tb = b.level_table();
    LevelTable out;
    const std::size_t n = std::max(ta.values.size(), tb.values.size());
    out.values.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
      const double va = l < ta.values.size() ? ta.values[l] : ta.default_value;
      const double vb = l < tb.values.size() ? tb.values[l] : tb.default_value;
      out.values[l] = va + beta * (vb - va);
    }
    out.default_value = ta.default_value + beta * (tb.default_value - ta.default_value);
    return UnivariateFunction(std::move(out));
  }
  const auto& ca = a.curve();
  const auto& cb = b.curve();
  Curve out;
  if (ca.knots == cb.knots) {
    out.knots = ca.knots;
    out.values.resize(ca.values.size());
    for (std::size_t i = 0; i < ca.values.size(); ++i) {
      out.values[i] = ca.values[i] + beta * (cb.values[i] - ca.values[i]);
    }
    return UnivariateFunction(std::move(out));
  }
  std::set_union(ca.knots.begin(), ca.knots.end(), cb.knots.begin(), cb.knots.end(),
                 std::back_inserter(out.knots));
  out.values.reserve(out.knots.size());
  for (double k : out.knots) {
    const double va = a(k);
    out.values.push_back(va + beta * (b(k) - va));
  }
  return UnivariateFunction(std::move(out));
}

}  // namespace functree
