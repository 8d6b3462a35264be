#include "functree/smoothers.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "functree/error.h"

namespace functree {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Replaces NaN ordinates by linear interpolation (in index) between defined
// neighbors, constant beyond the defined range.
bool FillUndefined(std::vector<double>& v) {
  std::vector<std::size_t> defined;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isnan(v[i])) defined.push_back(i);
  }
  if (defined.empty()) return false;
  if (defined.size() == v.size()) return true;
  for (std::size_t i = 0; i < defined.front(); ++i) v[i] = v[defined.front()];
  for (std::size_t i = defined.back() + 1; i < v.size(); ++i) v[i] = v[defined.back()];
  for (std::size_t d = 0; d + 1 < defined.size(); ++d) {
    const std::size_t a = defined[d], b = defined[d + 1];
    for (std::size_t i = a + 1; i < b; ++i) {
      const double t = static_cast<double>(i - a) / static_cast<double>(b - a);
      v[i] = v[a] + t * (v[b] - v[a]);
    }
  }
  return true;
}

}  // namespace

bool PrepareSmootherWeights(std::span<const double> r, std::span<const double> w,
                            std::span<const double> omega, std::vector<double>& wr,
                            std::vector<double>& ww) {
  const std::size_t n = r.size();
  wr.resize(n);
  ww.resize(n);
  double sw = 0.0, sww = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double o = omega.empty() ? 1.0 : omega[i];
    sw += o;
    sww += o * w[i] * w[i];
  }
  if (!(sw > 0.0) || !(sww > 0.0)) return false;
  const double floor = kWeightFloor * std::sqrt(sww / sw);
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double o = omega.empty() ? 1.0 : omega[i];
    if (std::abs(w[i]) < floor || o == 0.0) {
      wr[i] = 0.0;
      ww[i] = 0.0;
    } else {
      wr[i] = o * w[i] * r[i];
      ww[i] = o * w[i] * w[i];
      any = true;
    }
  }
  return any;
}

VariableSmoother::VariableSmoother(std::span<const double> x, VariableKind kind,
                                   std::size_t n_levels, const SmootherSpec& spec,
                                   std::size_t max_knots)
    : kind_(kind), spec_(spec), rows_(x.size()) {
  if (rows_ == 0) throw ArgumentError("smoother needs at least one row");
  if (spec.min_count < 1) throw ArgumentError("min_count must be at least 1");
  if (kind_ == VariableKind::kCategorical) {
    n_levels_ = n_levels;
    if (n_levels_ == 0) {
      for (double v : x) n_levels_ = std::max(n_levels_, static_cast<std::size_t>(std::max(v, 0.0)) + 1);
    }
    level_.resize(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double v = x[i];
      level_[i] = (v >= 0.0 && v < static_cast<double>(n_levels_))
                      ? static_cast<std::int32_t>(v)
                      : -1;
    }
    return;
  }

  if (spec.method != SmootherMethod::kCategoricalMean &&
      !(spec.span > 0.0 && spec.span <= 1.0)) {
    throw ArgumentError("smoother span must lie in (0, 1]");
  }
  max_knots = std::max<std::size_t>(max_knots, 2);
  order_.resize(rows_);
  std::iota(order_.begin(), order_.end(), 0u);
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return x[a] < x[b]; });
  x_center_ = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(rows_);
  sorted_x_.resize(rows_);
  double var = 0.0;
  for (std::size_t s = 0; s < rows_; ++s) {
    sorted_x_[s] = x[order_[s]] - x_center_;
    var += sorted_x_[s] * sorted_x_[s];
  }
  x_scale2_ = var / static_cast<double>(rows_);

  // Tie groups in sorted order.
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  for (std::size_t s = 0; s < rows_;) {
    std::size_t e = s;
    while (e + 1 < rows_ && x[order_[e + 1]] == x[order_[s]]) ++e;
    groups.emplace_back(s, e);
    s = e + 1;
  }
  std::vector<std::size_t> group_of_pos(rows_);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t s = groups[g].first; s <= groups[g].second; ++s) group_of_pos[s] = g;
  }

  // Knot groups: all distinct values, or quantile-thinned positions.
  std::vector<std::size_t> knot_groups;
  if (groups.size() <= max_knots) {
    knot_groups.resize(groups.size());
    std::iota(knot_groups.begin(), knot_groups.end(), 0);
  } else {
    for (std::size_t i = 0; i < max_knots; ++i) {
      const double pos = static_cast<double>(i) * static_cast<double>(rows_ - 1) /
                         static_cast<double>(max_knots - 1);
      const std::size_t g = group_of_pos[static_cast<std::size_t>(std::llround(pos))];
      if (knot_groups.empty() || knot_groups.back() != g) knot_groups.push_back(g);
    }
  }

  const bool tie_only = spec.method == SmootherMethod::kCategoricalMean;
  const double target = spec.span * static_cast<double>(rows_);
  const std::size_t half = static_cast<std::size_t>(
      std::max(std::floor(target / 2.0), std::ceil((spec.min_count - 1) / 2.0)));
  for (std::size_t g : knot_groups) {
    const auto [gs, ge] = groups[g];
    knots_.push_back(x[order_[gs]]);
    knot_x_.push_back(sorted_x_[gs]);
    if (tie_only) {
      windows_.emplace_back(static_cast<std::uint32_t>(gs), static_cast<std::uint32_t>(ge));
      continue;
    }
    // Symmetric rank window around the tie group's center, truncated at the
    // ends of the data, always covering the whole tie group.
    const std::size_t center = (gs + ge) / 2;
    const std::size_t lo = std::min(gs, center >= half ? center - half : 0);
    const std::size_t hi = std::max(ge, std::min(rows_ - 1, center + half));
    windows_.emplace_back(static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(hi));
  }
  row_loc_.resize(rows_);
  for (std::size_t i = 0; i < rows_; ++i) row_loc_[i] = LocateKnot(knots_, x[i]);
}

std::size_t VariableSmoother::num_ordinates() const {
  return categorical() ? n_levels_ + 1 : knots_.size();
}

bool VariableSmoother::FitOrdinates(std::span<const double> wr,
                                    std::span<const double> ww,
                                    std::vector<double>& ordinates) const {
  return categorical() ? FitLevels(wr, ww, ordinates) : FitNumeric(wr, ww, ordinates);
}

bool VariableSmoother::FitLevels(std::span<const double> wr, std::span<const double> ww,
                                 std::vector<double>& ordinates) const {
  std::vector<double> num(n_levels_, 0.0), den(n_levels_, 0.0);
  std::vector<int> count(n_levels_, 0);
  double total_num = 0.0, total_den = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    if (ww[i] == 0.0) continue;
    total_num += wr[i];
    total_den += ww[i];
    const int l = level_[i];
    if (l < 0) continue;
    num[l] += wr[i];
    den[l] += ww[i];
    ++count[l];
  }
  if (!(total_den > 0.0)) return false;
  const double global = total_num / total_den;
  ordinates.resize(n_levels_ + 1);
  for (std::size_t l = 0; l < n_levels_; ++l) {
    ordinates[l] = (count[l] >= spec_.min_count && den[l] > 0.0) ? num[l] / den[l] : global;
  }
  ordinates[n_levels_] = global;
  return true;
}

bool VariableSmoother::FitNumeric(std::span<const double> wr, std::span<const double> ww,
                                  std::vector<double>& ordinates) const {
  const bool linear = spec_.method == SmootherMethod::kLocalLinear;
  const std::size_t n = rows_;
  // Prefix sums in sorted order.
  std::vector<double> p0(n + 1), q0(n + 1), pe(n + 1);
  std::vector<double> p1, p2, q1;
  if (linear) {
    p1.resize(n + 1);
    p2.resize(n + 1);
    q1.resize(n + 1);
    p1[0] = p2[0] = q1[0] = 0.0;
  }
  p0[0] = q0[0] = pe[0] = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    const std::uint32_t i = order_[s];
    const double a = ww[i], b = wr[i];
    p0[s + 1] = p0[s] + a;
    q0[s + 1] = q0[s] + b;
    pe[s + 1] = pe[s] + a * a;
    if (linear) {
      const double xs = sorted_x_[s];
      p1[s + 1] = p1[s] + a * xs;
      p2[s + 1] = p2[s] + a * xs * xs;
      q1[s + 1] = q1[s] + b * xs;
    }
  }
  if (!(p0[n] > 0.0)) return false;
  const double tiny = 1e-14 * p0[n];

  ordinates.assign(knots_.size(), kNaN);
  for (std::size_t k = 0; k < knots_.size(); ++k) {
    const std::size_t lo = windows_[k].first;
    const std::size_t hi = windows_[k].second + 1;
    const double s0 = p0[hi] - p0[lo];
    if (!(s0 > tiny)) continue;
    const double t0 = q0[hi] - q0[lo];
    const double mean = t0 / s0;
    if (!linear) {
      ordinates[k] = mean;
      continue;
    }
    // Local line through the window's weighted data, evaluated at the knot.
    const double see = pe[hi] - pe[lo];
    const double n_eff = see > 0.0 ? s0 * s0 / see : 0.0;
    const double mx = (p1[hi] - p1[lo]) / s0;
    const double vxx = (p2[hi] - p2[lo]) / s0 - mx * mx;
    if (n_eff < 3.0 || !(vxx > 1e-10 * x_scale2_)) {
      ordinates[k] = mean;
      continue;
    }
    const double cxy = (q1[hi] - q1[lo]) / s0 - mx * mean;
    ordinates[k] = mean + (cxy / vxx) * (knot_x_[k] - mx);
  }
  return FillUndefined(ordinates);
}

void VariableSmoother::RowValues(std::span<const double> ordinates,
                                 std::span<double> out) const {
  if (categorical()) {
    for (std::size_t i = 0; i < rows_; ++i) {
      const int l = level_[i];
      out[i] = l >= 0 ? ordinates[l] : ordinates[n_levels_];
    }
    return;
  }
  for (std::size_t i = 0; i < rows_; ++i) out[i] = Interpolate(ordinates, row_loc_[i]);
}

UnivariateFunction VariableSmoother::MakeFunction(std::span<const double> ordinates) const {
  if (categorical()) {
    LevelTable t;
    t.values.assign(ordinates.begin(), ordinates.begin() + n_levels_);
    t.default_value = ordinates[n_levels_];
    return UnivariateFunction(std::move(t));
  }
  return UnivariateFunction(Curve{knots_, {ordinates.begin(), ordinates.end()}});
}

std::optional<std::vector<double>> VariableSmoother::OrdinatesOf(
    const UnivariateFunction& f) const {
  if (categorical()) {
    if (!f.is_level_table()) return std::nullopt;
    const auto& t = f.level_table();
    if (t.values.size() != n_levels_) return std::nullopt;
    std::vector<double> out(t.values);
    out.push_back(t.default_value);
    return out;
  }
  if (f.is_level_table() || f.curve().knots != knots_) return std::nullopt;
  return f.curve().values;
}

SmoothResult Smooth(std::span<const double> x, std::span<const double> r,
                    std::span<const double> w, const SmootherSpec& spec,
                    const SmoothOptions& options) {
  const std::size_t n = x.size();
  if (r.size() != n || w.size() != n) throw ArgumentError("smooth: length mismatch");
  if (!options.row_weight.empty() && options.row_weight.size() != n) {
    throw ArgumentError("smooth: row weight length mismatch");
  }
  const VariableKind kind = options.kind.value_or(
      spec.method == SmootherMethod::kCategoricalMean ? VariableKind::kCategorical
                                                      : VariableKind::kNumeric);
  std::vector<double> wr, ww;
  if (!PrepareSmootherWeights(r, w, options.row_weight, wr, ww)) {
    throw ArgumentError("smooth: every row is excluded by the weight floor");
  }
  if (kind == VariableKind::kNumeric && spec.method != SmootherMethod::kCategoricalMean) {
    const double eff = spec.span * static_cast<double>(n);
    if (eff < 2.0) throw ArgumentError("smooth: span * N must cover at least two points");
  }
  VariableSmoother smoother(x, kind, options.n_levels, spec, options.max_knots);
  std::vector<double> ord;
  if (!smoother.FitOrdinates(wr, ww, ord)) {
    throw ArgumentError("smooth: no rows with positive weight");
  }
  std::vector<double> values(n);
  smoother.RowValues(ord, values);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += ww[i] * values[i];
    den += ww[i];
  }
  const double offset = num / den;
  for (double& o : ord) o -= offset;
  return {smoother.MakeFunction(ord), offset};
}

// ---------------------------------------------------------------------------
// Regression spline

namespace {

constexpr int kDegree = 3;

double Quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double f = pos - static_cast<double>(lo);
  return sorted[lo] + f * (sorted[hi] - sorted[lo]);
}

// Nonzero cubic B-spline values at x: fills n[0..3] for basis functions
// span-3 .. span and returns span.
std::size_t BasisFunctions(const std::vector<double>& t, std::size_t n_coef, double x,
                           double n[kDegree + 1]) {
  std::size_t span;
  if (x >= t[n_coef]) {
    span = n_coef - 1;
  } else {
    span = static_cast<std::size_t>(
               std::upper_bound(t.begin() + kDegree, t.begin() + n_coef, x) - t.begin()) - 1;
  }
  double left[kDegree + 1], right[kDegree + 1];
  n[0] = 1.0;
  for (int j = 1; j <= kDegree; ++j) {
    left[j] = x - t[span + 1 - j];
    right[j] = t[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = n[r] / (right[r + 1] + left[j - r]);
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }
  return span;
}

}  // namespace

std::vector<double> PercentileKnots(std::span<const double> x) {
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> knots;
  for (int p = 5; p <= 95; p += 5) {
    const double q = Quantile(sorted, p / 100.0);
    if (q > sorted.front() && q < sorted.back() && (knots.empty() || q > knots.back())) {
      knots.push_back(q);
    }
  }
  return knots;
}

RegressionSpline::RegressionSpline(std::span<const double> x, std::span<const double> t,
                                   std::span<const double> weight) {
  const std::size_t n = x.size();
  if (t.size() != n) throw ArgumentError("spline_fit: length mismatch");
  if (!weight.empty() && weight.size() != n) throw ArgumentError("spline_fit: weight length mismatch");
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  lo_ = *mn;
  hi_ = *mx;
  if (!(hi_ > lo_)) throw ArgumentError("spline_fit: x is constant");
  const std::vector<double> interior = PercentileKnots(x);
  knots_.assign(kDegree + 1, lo_);
  knots_.insert(knots_.end(), interior.begin(), interior.end());
  knots_.insert(knots_.end(), kDegree + 1, hi_);
  const std::size_t n_coef = interior.size() + kDegree + 1;
  if (n < n_coef) throw ArgumentError("spline_fit: fewer rows than basis functions");

  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                 static_cast<Eigen::Index>(n_coef));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  double basis[kDegree + 1];
  for (std::size_t i = 0; i < n; ++i) {
    const double sw = weight.empty() ? 1.0 : std::sqrt(weight[i]);
    const std::size_t span = BasisFunctions(knots_, n_coef, x[i], basis);
    for (int r = 0; r <= kDegree; ++r) {
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(span - kDegree + r)) =
          sw * basis[r];
    }
    rhs(static_cast<Eigen::Index>(i)) = sw * t[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(n_coef)) {
    Warn("spline_fit: rank-deficient design (" + std::to_string(qr.rank()) + " of " +
         std::to_string(n_coef) + " basis functions kept)");
  }
  const Eigen::VectorXd c = qr.solve(rhs);
  coef_.assign(c.data(), c.data() + c.size());
}

double RegressionSpline::operator()(double x) const {
  x = std::clamp(x, lo_, hi_);
  double basis[kDegree + 1];
  const std::size_t span = BasisFunctions(knots_, coef_.size(), x, basis);
  double v = 0.0;
  for (int r = 0; r <= kDegree; ++r) v += coef_[span - kDegree + r] * basis[r];
  return v;
}

UnivariateFunction SplineFit(std::span<const double> x, std::span<const double> t,
                             std::span<const double> weight) {
  RegressionSpline spline(x, t, weight);
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  constexpr std::size_t kMaxSamples = 4000;
  constexpr std::size_t kGrid = 257;
  std::vector<double> samples;
  if (sorted.size() <= kMaxSamples) {
    samples = sorted;
  } else {
    for (std::size_t i = 0; i < kMaxSamples; ++i) {
      samples.push_back(sorted[i * (sorted.size() - 1) / (kMaxSamples - 1)]);
    }
  }
  const double lo = sorted.front(), hi = sorted.back();
  for (std::size_t i = 0; i < kGrid; ++i) {
    samples.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(kGrid - 1));
  }
  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end()), samples.end());
  Curve curve;
  curve.knots = samples;
  curve.values.reserve(samples.size());
  for (double s : samples) curve.values.push_back(spline(s));
  return UnivariateFunction(std::move(curve));
}

}  // namespace functree
