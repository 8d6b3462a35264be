#ifndef FUNCTREE_FIT_H_
#define FUNCTREE_FIT_H_

#include <cstddef>
#include <functional>
#include <vector>

#include "functree/dataset.h"
#include "functree/smoothers.h"
#include "functree/tree.h"

namespace functree {

struct FitConfig {
  int max_nodes = 200;
  /// Largest allowed interaction order of any node; 0 means unlimited and
  /// 1 builds an additive model.
  int max_order = 0;
  /// No node's path may contain all variables of any of these sets.
  std::vector<std::vector<int>> forbidden_subsets;
  SmootherSpec numeric_smoother = LocalLinearSmoother();
  SmootherSpec categorical_smoother = CategoricalMeanSmoother();
  SplitSpec split;
  int backfit_passes = 2;
  /// Consecutive additions without test improvement tolerated before stopping.
  int patience = 5;
  std::size_t max_knots = 500;
  int threads = 1;
};

/// Events reported while a tree is grown; all members are optional.
struct FitObserver {
  struct Candidate {
    int node = 0;  // parent node id (0 = root)
    int var = 0;
    double reduction = 0.0;  // decrease in weighted training SSE
  };
  struct Addition {
    int node_id = 0;
    int parent = 0;
    int var = 0;
    double reduction = 0.0;
    double sse_before = 0.0;
    double sse_after = 0.0;
    double test_rmse = 0.0;  // after backfitting
  };
  /// Called before each addition with the current model and every scored
  /// candidate (in scan order).
  std::function<void(const FunctionTree&, const std::vector<Candidate>&)> on_candidates;
  std::function<void(const Addition&)> on_addition;
  /// Training SSE before and after one backfitting pass.
  std::function<void(double, double)> on_backfit;
};

/// Grows a function tree best-first on `train`, stopping on `test` error.
/// Returns the snapshot with the lowest test RMSE.
FunctionTree Fit(const Dataset& train, const Dataset& test, const FitConfig& config,
                 const FitObserver* observer = nullptr);

/// Splits `data` with config.split and fits.
FunctionTree Fit(const Dataset& data, const FitConfig& config,
                 const FitObserver* observer = nullptr);

/// One cyclic pass re-estimating every node function in id order with all
/// others held fixed. Each update is accepted only to the extent that it
/// lowers the weighted training SSE, so the pass never increases it.
FunctionTree BackfitPass(const FunctionTree& tree, const Dataset& data,
                         const FitConfig& config = {});

/// Weighted sum of squared residuals of the tree on a labeled dataset.
double TrainingSse(const FunctionTree& tree, const Dataset& data);

/// True if `vars` (sorted, distinct) contains every variable of any
/// forbidden set.
bool ViolatesForbidden(const std::vector<int>& vars,
                       const std::vector<std::vector<int>>& forbidden);

}  // namespace functree

#endif  // FUNCTREE_FIT_H_
