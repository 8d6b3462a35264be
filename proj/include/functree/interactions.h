#ifndef FUNCTREE_INTERACTIONS_H_
#define FUNCTREE_INTERACTIONS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "functree/dataset.h"
#include "functree/fit.h"
#include "functree/pdengine.h"
#include "functree/tree.h"

namespace functree {

/// Partial dependence and pure interaction functions of a tree evaluated at
/// every data row. Centered partial dependences are memoized by subset, so
/// the sub-lattices shared by many subsets are computed once.
class EffectEngine {
 public:
  EffectEngine(const FunctionTree& tree, const Dataset& data);

  const FunctionTree& tree() const { return tree_; }
  const Dataset& data() const { return data_; }

  /// Centered PD of u at each row (u in any order; empty u gives zeros).
  const std::vector<double>& PdRows(const std::vector<int>& u);
  /// Computes any missing PDs for these subsets, in parallel.
  void Prefetch(const std::vector<std::vector<int>>& subsets, int threads);
  /// I(s) at each row: sum over nonempty u of s of (-1)^{|s|-|u|} PD(u).
  std::vector<double> InteractionRows(const std::vector<int>& s);
  /// sd of I(s) over the rows divided by sd of the predictions.
  double Strength(const std::vector<int>& s);

  const std::vector<double>& predictions() const { return pred_; }
  double prediction_mean() const { return pred_mean_; }
  double prediction_variance() const { return pred_var_; }
  /// Weighted mean and variance over the rows.
  double Mean(const std::vector<double>& v) const;
  double Variance(const std::vector<double>& v) const;

  /// Fast-path evaluation count of the PDs computed so far, using
  /// N = N_z = `nominal` per PD.
  double evaluations(double nominal = 1000.0) const;
  /// What brute force would have spent on the same PDs.
  double brute_evaluations(double nominal = 1000.0) const;
  std::size_t pd_count() const { return memo_.size(); }

 private:
  std::vector<double> ComputePd(const std::vector<int>& u, double* alpha) const;

  FunctionTree tree_;
  const Dataset& data_;
  std::vector<std::vector<double>> fvals_;  // node function at each row
  std::vector<std::vector<int>> paths_;
  std::vector<double> pred_;
  double sw_ = 0.0, pred_mean_ = 0.0, pred_var_ = 0.0;
  std::map<std::vector<int>, std::vector<double>> memo_;
  std::map<std::vector<int>, double> alpha_;
};

/// Pure interaction of s on a grid: inclusion-exclusion over PD grids of all
/// nonempty subsets of s.
EffectGrid PureInteraction(const FunctionTree& tree, const std::vector<int>& s,
                           const Points& points, const Dataset& data);

/// The same from brute-force partial dependences of any prediction function.
EffectGrid PureInteractionBrute(const PredictFn& predict, const std::vector<int>& s,
                                const Points& points, const Dataset& data,
                                const BruteOptions& options = {});

double Strength(const FunctionTree& tree, const std::vector<int>& s, const Dataset& data);

using Condition = std::vector<std::pair<int, double>>;

/// Pure interaction of s with the condition variables pinned to fixed values.
/// Computed on the tree over data with the pinned columns held constant, which
/// equals the brute-force result for the pinned prediction function.
EffectGrid ConditionalInteraction(const FunctionTree& tree, const std::vector<int>& s,
                                  const Condition& cond, const Points& points,
                                  const Dataset& data);

/// Brute-force reference for ConditionalInteraction.
EffectGrid ConditionalInteractionBrute(const PredictFn& predict, const std::vector<int>& s,
                                       const Condition& cond, const Points& points,
                                       const Dataset& data, const BruteOptions& options = {});

struct ScreeningOptions {
  /// H_j below this fraction of sd(prediction) marks j as non-interacting.
  double h_fraction = 0.05;
  /// R scores below this fraction of the largest R over all variables and
  /// levels drop a variable from a level's pool.
  double r_fraction = 0.05;
};

/// H_j = sqrt(E[(F - PD(j) - PD(not j))^2]) with centered F and PDs.
std::vector<double> ScreenH(const FunctionTree& tree, const Dataset& data);
std::vector<double> ScreenH(EffectEngine& engine, int threads = 1);

/// R[j][k-1]: summed influence of nodes of interaction order k with j on
/// their path, for k = 1..max(4, deepest order).
std::vector<std::vector<double>> ScreenR(const FunctionTree& tree);

struct EffectEntry {
  std::vector<int> subset;
  int order = 0;
  double strength = 0.0;
  /// Strength recomputed from partial association functions (NaN if unused).
  double pa_strength = 0.0;
};

struct EffectReport {
  /// Ordered by interaction order, strongest first within an order.
  std::vector<EffectEntry> entries;
  std::vector<std::string> screening_log;
  std::vector<double> h;
  std::vector<std::vector<double>> r;
  /// Candidate variables at each level 1..max_order.
  std::vector<std::vector<int>> pools;
  double evaluations = 0.0;
  double brute_evaluations = 0.0;
};

struct SearchOptions {
  int max_order = 3;
  bool use_screens = true;
  ScreeningOptions screening;
  /// Also report strengths from partial association functions.
  bool pa = false;
  int threads = 1;
};

EffectReport SearchEffects(const FunctionTree& tree, const Dataset& data,
                           const SearchOptions& options = {});

/// Entries of one order, strongest first.
std::vector<EffectEntry> EntriesOfOrder(const EffectReport& report, int order);

void WriteEffectReport(const EffectReport& report, const std::vector<Variable>& variables,
                       const std::string& path);
std::string FormatEffectReport(const EffectReport& report, const std::vector<Variable>& variables);
std::string FormatScreeningLog(const EffectReport& report);

/// Prediction of a minus prediction of b.
PredictFn ModelDiff(const FunctionTree& a, const FunctionTree& b);

struct BootstrapResult {
  /// Test RMSE per config and replicate.
  std::vector<std::vector<double>> rmse;
  /// Per config: min, 25%, median, 75%, max.
  std::vector<std::vector<double>> quantiles;
};

/// Refits every config on bootstrap resamples and measures RMSE on the rows
/// left out of each resample. Replicate r of every config sees the same rows.
BootstrapResult BootstrapCompare(const Dataset& data, const std::vector<FitConfig>& configs,
                                 int reps, std::uint64_t seed, int threads = 1,
                                 const std::function<void(int)>& progress = {});

/// Quantile with linear interpolation between order statistics.
double Quantile(std::vector<double> values, double prob);

}  // namespace functree

#endif  // FUNCTREE_INTERACTIONS_H_
