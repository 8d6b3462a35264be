#ifndef FUNCTREE_TREE_H_
#define FUNCTREE_TREE_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "functree/dataset.h"
#include "functree/univariate.h"

namespace functree {

inline constexpr int kRootId = 0;
inline constexpr int kModelFormatVersion = 1;

/// A non-root node: a univariate function of one predictor attached below
/// `parent`. Its basis function is the product of the functions on the path
/// from the node up to the root.
struct TreeNode {
  int id = 0;
  int parent = kRootId;
  int var = -1;
  UnivariateFunction func;
  /// Standard deviation of the node's basis function over the training data.
  double influence = 0.0;
};

struct TrainStats {
  double train_rmse = 0.0;
  double test_rmse = 0.0;
  std::size_t node_count = 0;
};

/// Sum of path products plus a root constant:
///   F(x) = b0 + sum_k prod_{l on path(k)} f_l(x_{var(l)}).
///
/// Nodes are stored in topological order with ids 1..K; every parent id is
/// smaller than its child's id.
class FunctionTree {
 public:
  FunctionTree() = default;
  FunctionTree(std::vector<Variable> variables, double b0,
               std::vector<TreeNode> nodes, TrainStats stats = {});

  double b0() const { return b0_; }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  /// Node with the given id (1-based).
  const TreeNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id - 1)); }
  std::size_t size() const { return nodes_.size(); }
  const TrainStats& stats() const { return stats_; }
  void set_stats(const TrainStats& stats) { stats_ = stats; }

  double Predict(std::span<const double> row) const;
  std::vector<double> Predict(const Dataset& data) const;

  /// Column k-1 holds B_k at every row (column-major, one vector per node).
  std::vector<std::vector<double>> BasisValues(const Dataset& data) const;

  /// Node ids from the root's child down to `id`.
  std::vector<int> Path(int id) const;
  /// Distinct predictor indices on the node's path, sorted.
  std::vector<int> PathVariables(int id) const;
  /// Number of distinct variables on the path; repeats do not count.
  int InteractionOrder(int id) const;
  std::vector<std::vector<int>> Children() const;

  /// Throws SchemaError unless the dataset uses the same variable schema.
  void CheckSchema(const Dataset& data) const;

  void Save(const std::string& path) const;
  std::string ToJson() const;
  static FunctionTree Load(const std::string& path);
  static FunctionTree FromJson(const std::string& text);

 private:
  std::vector<Variable> variables_;
  double b0_ = 0.0;
  std::vector<TreeNode> nodes_;
  TrainStats stats_;
};

/// Difference of two models over the same schema (prediction a - b).
class ModelDifference {
 public:
  ModelDifference(const FunctionTree& a, const FunctionTree& b);
  double operator()(std::span<const double> row) const {
    return a_.Predict(row) - b_.Predict(row);
  }
  const std::vector<Variable>& variables() const { return a_.variables(); }

 private:
  FunctionTree a_;
  FunctionTree b_;
};

}  // namespace functree

#endif  // FUNCTREE_TREE_H_
