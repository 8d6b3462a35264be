#include "functree/pdengine.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include "functree/error.h"
#include "functree/parallel.h"
#include "functree/smoothers.h"

namespace functree {

const char* EffectKindName(EffectKind kind) {
  switch (kind) {
    case EffectKind::kPd: return "pd";
    case EffectKind::kPa: return "pa";
    case EffectKind::kPureInteraction: return "pure_interaction";
    case EffectKind::kConditional: return "conditional";
  }
  return "pd";
}

std::vector<int> NormalizeSubset(std::vector<int> subset, std::size_t num_vars) {
  if (subset.empty()) throw ArgumentError("variable subset is empty");
  std::sort(subset.begin(), subset.end());
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (subset[i] < 0 || subset[i] >= static_cast<int>(num_vars)) {
      throw ArgumentError("variable index " + std::to_string(subset[i]) + " out of range");
    }
    if (i && subset[i] == subset[i - 1]) throw ArgumentError("variable subset has duplicates");
  }
  return subset;
}

namespace {

void CheckPoints(const Points& points, std::size_t dim) {
  for (const auto& p : points) {
    if (p.size() != dim) throw ArgumentError("evaluation point has the wrong dimension");
  }
}

double WeightSum(const Dataset& data) {
  const auto w = data.weight();
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(s > 0.0)) throw ArgumentError("dataset has no positive row weight");
  return s;
}

// Writes a point into the subset columns of a full-length row buffer.
void Place(const std::vector<int>& subset, std::span<const double> point, std::vector<double>& row) {
  for (std::size_t m = 0; m < subset.size(); ++m) row[static_cast<std::size_t>(subset[m])] = point[m];
}

}  // namespace

TreeDecomposition::TreeDecomposition(const FunctionTree& tree, std::vector<int> subset,
                                     const Dataset& data)
    : tree_(&tree), subset_(std::move(subset)) {
  tree.CheckSchema(data);
  const std::vector<int> set = NormalizeSubset(subset_, tree.variables().size());
  auto in_set = [&](int var) { return std::binary_search(set.begin(), set.end(), var); };
  std::size_t mixed = 0;
  for (const TreeNode& node : tree.nodes()) {
    DecompositionTerm term;
    term.node = node.id;
    for (int k : tree.Path(node.id)) {
      (in_set(tree.node(k).var) ? term.z_nodes : term.c_nodes).push_back(k);
    }
    if (term.z_nodes.empty()) {
      constant_nodes_.push_back(node.id);
    } else {
      if (!term.c_nodes.empty()) ++mixed;
      terms_.push_back(std::move(term));
    }
  }
  alpha_ = tree.size() ? static_cast<double>(mixed) / static_cast<double>(tree.size()) : 0.0;

  const double sw = WeightSum(data);
  const auto w = data.weight();
  std::vector<double> row(data.cols());
  std::vector<double> gsum(terms_.size(), 0.0);
  double asum = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    data.row(i, row);
    for (std::size_t t = 0; t < terms_.size(); ++t) {
      if (!terms_[t].c_nodes.empty()) gsum[t] += w[i] * G(t, row);
    }
    double a = 0.0;
    for (int k : constant_nodes_) {
      double b = 1.0;
      for (int l : tree.Path(k)) b *= tree.node(l).func(row[static_cast<std::size_t>(tree.node(l).var)]);
      a += b;
    }
    asum += w[i] * a;
  }
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    terms_[t].g_mean = terms_[t].c_nodes.empty() ? 1.0 : gsum[t] / sw;
  }
  a_mean_ = tree.b0() + asum / sw;
}

double TreeDecomposition::F(std::size_t term, std::span<const double> row) const {
  double v = 1.0;
  for (int k : terms_[term].z_nodes) {
    const TreeNode& n = tree_->node(k);
    v *= n.func(row[static_cast<std::size_t>(n.var)]);
  }
  return v;
}

double TreeDecomposition::G(std::size_t term, std::span<const double> row) const {
  double v = 1.0;
  for (int k : terms_[term].c_nodes) {
    const TreeNode& n = tree_->node(k);
    v *= n.func(row[static_cast<std::size_t>(n.var)]);
  }
  return v;
}

double TreeDecomposition::A(std::span<const double> row) const {
  double a = tree_->b0();
  for (int k : constant_nodes_) {
    double b = 1.0;
    for (int l : tree_->Path(k)) b *= tree_->node(l).func(row[static_cast<std::size_t>(tree_->node(l).var)]);
    a += b;
  }
  return a;
}

double TreeDecomposition::PartialDependence(std::span<const double> row) const {
  double v = a_mean_;
  for (std::size_t t = 0; t < terms_.size(); ++t) v += terms_[t].g_mean * F(t, row);
  return v;
}

double EvalCost(const TreeDecomposition& decomp, double n, double n_z) {
  return n_z + decomp.alpha() * n;
}

Points DefaultPoints(const Dataset& data, const std::vector<int>& subset, std::size_t grid) {
  if (grid == 0) throw ArgumentError("grid size must be positive");
  NormalizeSubset(subset, data.cols());
  std::vector<std::vector<double>> axes;
  for (int j : subset) {
    const Variable& v = data.variable(static_cast<std::size_t>(j));
    std::vector<double> axis;
    if (v.is_categorical()) {
      for (std::size_t l = 0; l < v.levels.size(); ++l) axis.push_back(static_cast<double>(l));
    } else {
      const auto col = data.column(static_cast<std::size_t>(j));
      std::vector<double> sorted(col.begin(), col.end());
      std::sort(sorted.begin(), sorted.end());
      const double last = static_cast<double>(sorted.size() - 1);
      for (std::size_t g = 0; g < grid; ++g) {
        const double pos = (static_cast<double>(g) + 0.5) / static_cast<double>(grid) * last;
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        const double frac = pos - static_cast<double>(lo);
        axis.push_back(sorted[lo] + frac * (sorted[hi] - sorted[lo]));
      }
      axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
    }
    axes.push_back(std::move(axis));
  }
  Points points{{}};
  for (const auto& axis : axes) {
    Points next;
    next.reserve(points.size() * axis.size());
    for (const auto& p : points) {
      for (double a : axis) {
        auto q = p;
        q.push_back(a);
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

EffectGrid PdFast(const FunctionTree& tree, const std::vector<int>& subset, const Points& points,
                  const Dataset& data) {
  CheckPoints(points, subset.size());
  TreeDecomposition decomp(tree, subset, data);
  const auto& terms = decomp.terms();
  const auto w = data.weight();
  const double sw = WeightSum(data);

  // Data means of each term's subset factor give the centering constant.
  std::vector<double> fmean(terms.size(), 0.0);
  std::vector<double> row(data.cols());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    data.row(i, row);
    for (std::size_t t = 0; t < terms.size(); ++t) fmean[t] += w[i] * decomp.F(t, row);
  }
  double centering = decomp.a_mean();
  for (std::size_t t = 0; t < terms.size(); ++t) {
    fmean[t] /= sw;
    centering += terms[t].g_mean * fmean[t];
  }

  EffectGrid grid;
  grid.subset = subset;
  grid.points = points;
  grid.kind = EffectKind::kPd;
  grid.alpha = decomp.alpha();
  grid.centering = centering;
  grid.values.resize(points.size());
  std::fill(row.begin(), row.end(), 0.0);
  for (std::size_t p = 0; p < points.size(); ++p) {
    Place(subset, points[p], row);
    double v = 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t) v += terms[t].g_mean * (decomp.F(t, row) - fmean[t]);
    grid.values[p] = v;
  }
  grid.evaluations = EvalCost(decomp, static_cast<double>(data.rows()), static_cast<double>(points.size()));
  grid.centering_evaluations = static_cast<double>(data.rows());
  return grid;
}

EffectGrid PdBrute(const PredictFn& predict, const std::vector<int>& subset, const Points& points,
                   const Dataset& data, const BruteOptions& options) {
  NormalizeSubset(subset, data.cols());
  CheckPoints(points, subset.size());
  if (data.rows() == 0) throw ArgumentError("brute-force partial dependence needs data rows");
  const auto w = data.weight();
  const double sw = WeightSum(data);
  const std::size_t n = data.rows();

  auto average_at = [&](std::span<const double> point, std::vector<double>& row) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      data.row(i, row);
      Place(subset, point, row);
      s += w[i] * predict(row);
    }
    return s / sw;
  };

  EffectGrid grid;
  grid.subset = subset;
  grid.points = points;
  grid.kind = EffectKind::kPd;
  grid.values.resize(points.size());
  ParallelFor(points.size(), options.threads, [&](std::size_t p) {
    std::vector<double> row(data.cols());
    grid.values[p] = average_at(points[p], row);
  });
  grid.evaluations = static_cast<double>(n) * static_cast<double>(points.size());

  if (options.center) {
    std::vector<double> at_row(n);
    ParallelFor(n, options.threads, [&](std::size_t i) {
      std::vector<double> row(data.cols()), point(subset.size());
      for (std::size_t m = 0; m < subset.size(); ++m) {
        point[m] = data.at(i, static_cast<std::size_t>(subset[m]));
      }
      at_row[i] = average_at(point, row);
    });
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += w[i] * at_row[i];
    grid.centering = c / sw;
    grid.centering_evaluations = static_cast<double>(n) * static_cast<double>(n);
    for (double& v : grid.values) v -= grid.centering;
  }
  return grid;
}

EffectGrid Pa(const FunctionTree& tree, const std::vector<int>& subset, const Points& points,
              const Dataset& data) {
  CheckPoints(points, subset.size());
  if (subset.size() > 4) throw ArgumentError("partial association supports at most 4 variables");
  TreeDecomposition decomp(tree, subset, data);
  const auto& terms = decomp.terms();
  const std::size_t n = data.rows();
  const auto w = data.weight();
  const double sw = WeightSum(data);

  // Per term: f_k at every row and the conditional mean of g_k given f_k.
  std::vector<std::vector<double>> frows(terms.size(), std::vector<double>(n));
  std::vector<std::optional<RegressionSpline>> h(terms.size());
  std::vector<double> row(data.cols()), grow(n);
  for (std::size_t t = 0; t < terms.size(); ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      data.row(i, row);
      frows[t][i] = decomp.F(t, row);
      if (!terms[t].c_nodes.empty()) grow[i] = decomp.G(t, row);
    }
    if (terms[t].c_nodes.empty()) continue;
    const auto [fmin, fmax] = std::minmax_element(frows[t].begin(), frows[t].end());
    const auto [gmin, gmax] = std::minmax_element(grow.begin(), grow.end());
    if (*fmin == *fmax || *gmin == *gmax) continue;
    h[t].emplace(frows[t], grow, w);
  }
  auto value = [&](std::size_t t, double f) {
    return f * (h[t] ? (*h[t])(f) : terms[t].g_mean);
  };

  double centering = decomp.a_mean();
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t) v += value(t, frows[t][i]);
    centering += w[i] * v / sw;
  }

  EffectGrid grid;
  grid.subset = subset;
  grid.points = points;
  grid.kind = EffectKind::kPa;
  grid.alpha = decomp.alpha();
  grid.centering = centering;
  grid.values.resize(points.size());
  std::fill(row.begin(), row.end(), 0.0);
  for (std::size_t p = 0; p < points.size(); ++p) {
    Place(subset, points[p], row);
    double v = decomp.a_mean();
    for (std::size_t t = 0; t < terms.size(); ++t) v += value(t, decomp.F(t, row));
    grid.values[p] = v - centering;
  }
  grid.evaluations = EvalCost(decomp, static_cast<double>(n), static_cast<double>(points.size()));
  grid.centering_evaluations = static_cast<double>(n);
  return grid;
}

std::string FormatEffectGrid(const EffectGrid& grid, const std::vector<Variable>& variables) {
  std::ostringstream out;
  std::string names;
  for (std::size_t m = 0; m < grid.subset.size(); ++m) {
    names += (m ? "," : "") + variables.at(static_cast<std::size_t>(grid.subset[m])).name;
  }
  out << "# kind: " << EffectKindName(grid.kind) << "\n";
  out << "# subset: " << names << "\n";
  out << "# centering: " << FormatReal(grid.centering) << "\n";
  out << "# alpha: " << FormatReal(grid.alpha) << "\n";
  if (!grid.condition.empty()) {
    out << "# condition: ";
    for (std::size_t c = 0; c < grid.condition.size(); ++c) {
      const auto& [var, val] = grid.condition[c];
      out << (c ? "," : "") << variables.at(static_cast<std::size_t>(var)).name << "="
          << FormatReal(val);
    }
    out << "\n";
  }
  out << names << ",value\n";
  for (std::size_t p = 0; p < grid.points.size(); ++p) {
    for (std::size_t m = 0; m < grid.subset.size(); ++m) {
      const Variable& v = variables.at(static_cast<std::size_t>(grid.subset[m]));
      const double x = grid.points[p][m];
      if (v.is_categorical()) {
        const auto l = static_cast<std::size_t>(x);
        out << (x >= 0 && l < v.levels.size() ? v.levels[l] : std::string("?"));
      } else {
        out << FormatReal(x);
      }
      out << ",";
    }
    out << FormatReal(grid.values[p]) << "\n";
  }
  return out.str();
}

void WriteEffectGrid(const EffectGrid& grid, const std::vector<Variable>& variables,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write grid file '" + path + "'");
  out << FormatEffectGrid(grid, variables);
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace functree
