#ifndef FUNCTREE_PDENGINE_H_
#define FUNCTREE_PDENGINE_H_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "functree/dataset.h"
#include "functree/tree.h"

namespace functree {

using PredictFn = std::function<double(std::span<const double>)>;

/// Joint evaluation points over a variable subset; each point lists values in
/// subset order (level indices for categorical variables).
using Points = std::vector<std::vector<double>>;

enum class EffectKind { kPd, kPa, kPureInteraction, kConditional };
const char* EffectKindName(EffectKind kind);

struct EffectGrid {
  std::vector<int> subset;
  Points points;
  std::vector<double> values;
  EffectKind kind = EffectKind::kPd;
  /// Constant subtracted so the values average to zero over the data.
  double centering = 0.0;
  /// Fraction of node basis functions that mix subset and complement
  /// variables (fast path only).
  double alpha = 0.0;
  /// Target function evaluations spent on the values and on the centering.
  double evaluations = 0.0;
  double centering_evaluations = 0.0;
  /// Variables pinned for conditional effects.
  std::vector<std::pair<int, double>> condition;
};

/// One node basis split into the factors on subset variables and the rest.
struct DecompositionTerm {
  int node = 0;
  std::vector<int> z_nodes;  // path nodes whose variable is in the subset
  std::vector<int> c_nodes;  // remaining path nodes
  double g_mean = 1.0;       // weighted data mean of the complement product
};

/// The tree written as A(x_c) + sum_k f_k(x_z) g_k(x_c) for a subset z.
/// Holds a pointer to the tree, which must outlive the decomposition.
class TreeDecomposition {
 public:
  TreeDecomposition(const FunctionTree& tree, std::vector<int> subset, const Dataset& data);

  const std::vector<int>& subset() const { return subset_; }
  /// Terms for nodes with at least one factor on a subset variable.
  const std::vector<DecompositionTerm>& terms() const { return terms_; }
  /// Nodes with no subset variable on their path.
  const std::vector<int>& constant_nodes() const { return constant_nodes_; }
  double alpha() const { return alpha_; }
  /// b0 plus the data mean of every basis in constant_nodes().
  double a_mean() const { return a_mean_; }

  /// Products of a term's subset and complement factors at a full row.
  double F(std::size_t term, std::span<const double> row) const;
  double G(std::size_t term, std::span<const double> row) const;
  /// b0 plus the constant-node bases at a full row.
  double A(std::span<const double> row) const;

  /// Uncentered partial dependence at a full row (only subset columns read).
  double PartialDependence(std::span<const double> row) const;

 private:
  const FunctionTree* tree_;
  std::vector<int> subset_;
  std::vector<DecompositionTerm> terms_;
  std::vector<int> constant_nodes_;
  double alpha_ = 0.0;
  double a_mean_ = 0.0;
};

/// Fast-path evaluation count N_z + alpha * N.
double EvalCost(const TreeDecomposition& decomp, double n, double n_z);

/// Default points: 50 quantiles per numeric variable (duplicates removed),
/// all levels per categorical variable; Cartesian product over the subset.
Points DefaultPoints(const Dataset& data, const std::vector<int>& subset, std::size_t grid = 50);

/// Partial dependence from the tree decomposition, centered over the data.
EffectGrid PdFast(const FunctionTree& tree, const std::vector<int>& subset,
                  const Points& points, const Dataset& data);

struct BruteOptions {
  /// Center over the data's own subset values (N^2 evaluations).
  bool center = true;
  int threads = 1;
};

/// Partial dependence by averaging predict over every data row with the
/// subset columns overwritten by each point.
EffectGrid PdBrute(const PredictFn& predict, const std::vector<int>& subset,
                   const Points& points, const Dataset& data, const BruteOptions& options = {});

/// Partial association: sum_k f_k(z) h_k(f_k(z)) with h_k a regression
/// spline of g_k on f_k over the data. Subsets of up to 4 variables.
EffectGrid Pa(const FunctionTree& tree, const std::vector<int>& subset,
              const Points& points, const Dataset& data);

/// CSV with one column per subset variable plus "value", preceded by '#'
/// metadata lines.
void WriteEffectGrid(const EffectGrid& grid, const std::vector<Variable>& variables,
                     const std::string& path);
std::string FormatEffectGrid(const EffectGrid& grid, const std::vector<Variable>& variables);

/// Sorted, distinct, in-range subset; throws ArgumentError otherwise.
std::vector<int> NormalizeSubset(std::vector<int> subset, std::size_t num_vars);

}  // namespace functree

#endif  // FUNCTREE_PDENGINE_H_
