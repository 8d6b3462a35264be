#include "functree/fit.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "functree/error.h"
#include "functree/parallel.h"

namespace functree {

bool ViolatesForbidden(const std::vector<int>& vars,
                       const std::vector<std::vector<int>>& forbidden) {
  for (const auto& set : forbidden) {
    if (set.empty()) continue;
    const bool all = std::all_of(set.begin(), set.end(), [&](int v) {
      return std::binary_search(vars.begin(), vars.end(), v);
    });
    if (all) return true;
  }
  return false;
}

double TrainingSse(const FunctionTree& tree, const Dataset& data) {
  if (!data.labeled()) throw ArgumentError("training SSE needs a labeled dataset");
  const auto pred = tree.Predict(data);
  double sse = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double e = data.outcome()[i] - pred[i];
    sse += data.weight()[i] * e * e;
  }
  return sse;
}

namespace {

// Mutable model state during construction. Node 0 is the root; its basis is
// the constant 1 and the root constant b0 is kept separately.
class FitState {
 public:
  struct Candidate {
    int node = 0;
    int var = 0;
    double reduction = 0.0;
  };

  FitState(const Dataset& data, const FitConfig& config)
      : data_(data), config_(config), n_(data.rows()) {
    if (!data.labeled()) throw ArgumentError("fit needs a labeled dataset");
    smoothers_.reserve(data.cols());
    for (std::size_t j = 0; j < data.cols(); ++j) {
      const Variable& v = data.variable(j);
      smoothers_.emplace_back(data.column(j), v.kind, v.levels.size(),
                              v.is_categorical() ? config.categorical_smoother
                                                 : config.numeric_smoother,
                              config.max_knots);
    }
    omega_.assign(data.weight().begin(), data.weight().end());
    y_.assign(data.outcome().begin(), data.outcome().end());
    nodes_.push_back(Node{});
    nodes_[0].basis.assign(n_, 1.0);
  }

  void InitRoot() {
    double sw = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      sw += omega_[i];
      swy += omega_[i] * y_[i];
    }
    if (!(sw > 0.0)) throw ArgumentError("fit: all row weights are zero");
    b0_ = swy / sw;
    RecomputeBasisAndResiduals();
  }

  void InitFromTree(const FunctionTree& tree) {
    tree.CheckSchema(data_);
    b0_ = tree.b0();
    for (const TreeNode& tn : tree.nodes()) {
      Node node;
      node.parent = tn.parent;
      node.var = tn.var;
      node.func = tn.func;
      node.vars = tree.PathVariables(tn.id);
      nodes_.push_back(std::move(node));
      nodes_[static_cast<std::size_t>(tn.parent)].children.push_back(tn.id);
      EvaluateFunction(static_cast<int>(nodes_.size()) - 1);
    }
    RecomputeBasisAndResiduals();
  }

  std::size_t size() const { return nodes_.size() - 1; }

  double Sse() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_; ++i) s += omega_[i] * resid_[i] * resid_[i];
    return s;
  }

  // Scores every admissible (node, variable) pair and returns the best one.
  std::optional<Candidate> BestCandidate(std::vector<Candidate>* all) const {
    std::vector<Candidate> cands;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      for (std::size_t j = 0; j < data_.cols(); ++j) {
        if (!Admissible(static_cast<int>(k), static_cast<int>(j))) continue;
        cands.push_back({static_cast<int>(k), static_cast<int>(j), 0.0});
      }
    }
    if (cands.empty()) return std::nullopt;

    // Shared per-node weight products.
    std::vector<int> node_of_slot;
    std::vector<std::size_t> slot(nodes_.size(), SIZE_MAX);
    for (const auto& c : cands) {
      if (slot[static_cast<std::size_t>(c.node)] == SIZE_MAX) {
        slot[static_cast<std::size_t>(c.node)] = node_of_slot.size();
        node_of_slot.push_back(c.node);
      }
    }
    std::vector<NodeWeights> weights(node_of_slot.size());
    ParallelFor(node_of_slot.size(), config_.threads, [&](std::size_t s) {
      weights[s] = MakeWeights(nodes_[static_cast<std::size_t>(node_of_slot[s])].basis, resid_);
    });
    ParallelFor(cands.size(), config_.threads, [&](std::size_t c) {
      const auto& nw = weights[slot[static_cast<std::size_t>(cands[c].node)]];
      cands[c].reduction = nw.ok ? Score(nw, static_cast<std::size_t>(cands[c].var), nullptr) : 0.0;
    });

    std::optional<Candidate> best;
    for (const auto& c : cands) {
      if (!best || c.reduction > best->reduction) best = c;
    }
    if (all) *all = std::move(cands);
    const double floor = 1e-12 * std::max(Sse(), std::numeric_limits<double>::min());
    if (!best || !(best->reduction > floor)) return std::nullopt;
    return best;
  }

  void AddNode(const Candidate& cand) {
    const auto& parent = nodes_[static_cast<std::size_t>(cand.node)];
    NodeWeights nw = MakeWeights(parent.basis, resid_);
    ScoreDetail detail;
    Score(nw, static_cast<std::size_t>(cand.var), &detail);
    UnivariateFunction f = smoothers_[static_cast<std::size_t>(cand.var)].MakeFunction(detail.ordinates);
    f.Scale(detail.beta);

    Node node;
    node.parent = cand.node;
    node.var = cand.var;
    node.func = std::move(f);
    node.vars = parent.vars;
    if (!std::binary_search(node.vars.begin(), node.vars.end(), cand.var)) {
      node.vars.insert(std::upper_bound(node.vars.begin(), node.vars.end(), cand.var), cand.var);
    }
    nodes_.push_back(std::move(node));
    const int id = static_cast<int>(nodes_.size()) - 1;
    nodes_[static_cast<std::size_t>(cand.node)].children.push_back(id);
    EvaluateFunction(id);
    CenterLeaf(id, nodes_[static_cast<std::size_t>(cand.node)].basis);
    RecomputeBasisAndResiduals();
  }

  // One pass of cyclic re-estimation in node order.
  void Backfit() {
    const std::size_t K = nodes_.size();
    if (K <= 1) return;
    // D_k = 1 + sum over children c of f_c * D_c, so that the part of the
    // model depending on f_k is f_k * B_parent(k) * D_k.
    std::vector<std::vector<double>> d(K);
    for (std::size_t k = K; k-- > 1;) {
      d[k].assign(n_, 1.0);
      for (int c : nodes_[k].children) {
        const auto& fc = nodes_[static_cast<std::size_t>(c)].fval;
        const auto& dc = d[static_cast<std::size_t>(c)];
        for (std::size_t i = 0; i < n_; ++i) d[k][i] += fc[i] * dc[i];
      }
    }
    std::vector<double> w(n_), partial(n_), wr, ww, ord, vnew(n_);
    for (std::size_t k = 1; k < K; ++k) {
      Node& node = nodes_[k];
      const auto& bp = nodes_[static_cast<std::size_t>(node.parent)].basis;
      for (std::size_t i = 0; i < n_; ++i) {
        w[i] = bp[i] * d[k][i];
        partial[i] = resid_[i] + node.fval[i] * w[i];
      }
      const auto& sm = smoothers_[static_cast<std::size_t>(node.var)];
      if (PrepareSmootherWeights(partial, w, omega_, wr, ww) && sm.FitOrdinates(wr, ww, ord)) {
        sm.RowValues(ord, vnew);
        double a = 0.0, b = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
          const double wd = w[i] * (vnew[i] - node.fval[i]);
          a += omega_[i] * resid_[i] * wd;
          b += omega_[i] * wd * wd;
        }
        const double beta = b > 0.0 ? std::clamp(a / b, 0.0, 1.0) : 0.0;
        if (beta > 0.0) {
          node.func = UnivariateFunction::Blend(node.func, sm.MakeFunction(ord), beta);
          const std::vector<double> old = node.fval;
          EvaluateFunction(static_cast<int>(k));
          for (std::size_t i = 0; i < n_; ++i) resid_[i] -= (node.fval[i] - old[i]) * w[i];
        }
      }
      if (node.children.empty()) CenterLeaf(static_cast<int>(k), bp);
      auto& basis = nodes_[k].basis;
      const auto& pb = nodes_[static_cast<std::size_t>(nodes_[k].parent)].basis;
      for (std::size_t i = 0; i < n_; ++i) basis[i] = pb[i] * nodes_[k].fval[i];
    }
    RecomputeBasisAndResiduals();
  }

  FunctionTree Snapshot() const {
    std::vector<TreeNode> out;
    out.reserve(nodes_.size() - 1);
    for (std::size_t k = 1; k < nodes_.size(); ++k) {
      TreeNode tn;
      tn.id = static_cast<int>(k);
      tn.parent = nodes_[k].parent;
      tn.var = nodes_[k].var;
      tn.func = nodes_[k].func;
      out.push_back(std::move(tn));
    }
    return FunctionTree(data_.variables(), b0_, std::move(out));
  }

 private:
  struct Node {
    int parent = -1;
    int var = -1;
    UnivariateFunction func;
    std::vector<int> vars;  // distinct path variables, sorted
    std::vector<int> children;
    std::vector<double> fval;   // f(x_i) at each training row
    std::vector<double> basis;  // B(x_i)
  };

  struct NodeWeights {
    bool ok = false;
    std::vector<double> wr, ww;       // floored products for the smoother
    std::vector<double> rw, w;        // omega*r*w and the raw basis weight
  };

  struct ScoreDetail {
    std::vector<double> ordinates;
    double beta = 0.0;
  };

  bool Admissible(int node, int var) const {
    const auto& vars = nodes_[static_cast<std::size_t>(node)].vars;
    std::vector<int> next = vars;
    if (!std::binary_search(next.begin(), next.end(), var)) {
      next.insert(std::upper_bound(next.begin(), next.end(), var), var);
    }
    if (config_.max_order > 0 && static_cast<int>(next.size()) > config_.max_order) return false;
    return !ViolatesForbidden(next, config_.forbidden_subsets);
  }

  NodeWeights MakeWeights(const std::vector<double>& basis, const std::vector<double>& r) const {
    NodeWeights nw;
    nw.ok = PrepareSmootherWeights(r, basis, omega_, nw.wr, nw.ww);
    if (!nw.ok) return nw;
    nw.rw.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) nw.rw[i] = omega_[i] * r[i] * basis[i];
    nw.w = basis;
    return nw;
  }

  // Training SSE reduction of adding beta * B_k * f_j, with f_j the smoother
  // estimate and beta its least-squares scale.
  double Score(const NodeWeights& nw, std::size_t var, ScoreDetail* detail) const {
    thread_local std::vector<double> ord, v;
    const auto& sm = smoothers_[var];
    if (!sm.FitOrdinates(nw.wr, nw.ww, ord)) return 0.0;
    v.resize(n_);
    sm.RowValues(ord, v);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double wv = nw.w[i] * v[i];
      a += nw.rw[i] * v[i];
      b += omega_[i] * wv * wv;
    }
    if (!(b > 0.0)) return 0.0;
    if (detail) {
      detail->ordinates = ord;
      detail->beta = a / b;
    }
    return a * a / b;
  }

  void EvaluateFunction(int id) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    const auto x = data_.column(static_cast<std::size_t>(node.var));
    node.fval.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) node.fval[i] = node.func(x[i]);
  }

  // Moves the weighted mean of a leaf's function (weights omega * W^2 with W
  // the parent's basis) into its parent: into b0 for children of the root,
  // otherwise by rescaling the parent function and compensating its children.
  void CenterLeaf(int id, const std::vector<double>& parent_basis) {
    Node& node = nodes_[static_cast<std::size_t>(id)];
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double ww = omega_[i] * parent_basis[i] * parent_basis[i];
      num += ww * node.fval[i];
      den += ww;
    }
    if (!(den > 0.0)) return;
    const double c = num / den;
    if (c == 0.0) return;
    if (node.parent == kRootId) {
      node.func.Shift(-c);
      b0_ += c;
      EvaluateFunction(id);
      return;
    }
    const double s = 1.0 + c;
    if (std::abs(s) < 0.1) return;
    node.func.Shift(-c);
    const int parent = node.parent;
    Node& p = nodes_[static_cast<std::size_t>(parent)];
    p.func.Scale(s);
    EvaluateFunction(parent);
    for (int ch : p.children) {
      nodes_[static_cast<std::size_t>(ch)].func.Scale(1.0 / s);
      EvaluateFunction(ch);
    }
    auto& pb = p.basis;
    const auto& gb = nodes_[static_cast<std::size_t>(p.parent)].basis;
    for (std::size_t i = 0; i < n_; ++i) pb[i] = gb[i] * p.fval[i];
  }

  void RecomputeBasisAndResiduals() {
    resid_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) resid_[i] = y_[i] - b0_;
    for (std::size_t k = 1; k < nodes_.size(); ++k) {
      Node& node = nodes_[k];
      const auto& pb = nodes_[static_cast<std::size_t>(node.parent)].basis;
      node.basis.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) {
        node.basis[i] = pb[i] * node.fval[i];
        resid_[i] -= node.basis[i];
      }
    }
  }

  const Dataset& data_;
  const FitConfig& config_;
  std::size_t n_;
  std::vector<VariableSmoother> smoothers_;
  std::vector<double> omega_, y_, resid_;
  std::vector<Node> nodes_;
  double b0_ = 0.0;
};

double SafeRmse(std::span<const double> y, std::span<const double> pred) {
  try {
    return Rmse(y, pred);
  } catch (const ArgumentError&) {
    return std::numeric_limits<double>::infinity();
  }
}

void FinalizeStats(FunctionTree& tree, const Dataset& train, const Dataset* test) {
  auto basis = tree.BasisValues(train);
  std::vector<TreeNode> nodes = tree.nodes();
  const auto w = train.weight();
  const double sw = std::accumulate(w.begin(), w.end(), 0.0);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    double mean = 0.0;
    for (std::size_t i = 0; i < train.rows(); ++i) mean += w[i] * basis[k][i];
    mean /= sw;
    double var = 0.0;
    for (std::size_t i = 0; i < train.rows(); ++i) {
      var += w[i] * (basis[k][i] - mean) * (basis[k][i] - mean);
    }
    nodes[k].influence = std::sqrt(var / sw);
  }
  TrainStats stats;
  stats.train_rmse = SafeRmse(train.outcome(), tree.Predict(train));
  stats.test_rmse = test ? SafeRmse(test->outcome(), tree.Predict(*test)) : 0.0;
  tree = FunctionTree(tree.variables(), tree.b0(), std::move(nodes), stats);
}

void ValidateConfig(const FitConfig& config) {
  if (config.max_nodes < 1) throw ArgumentError("max_nodes must be at least 1");
  if (config.max_order < 0) throw ArgumentError("max_order must be nonnegative");
  if (config.patience < 0) throw ArgumentError("patience must be nonnegative");
  if (config.backfit_passes < 0) throw ArgumentError("backfit_passes must be nonnegative");
}

}  // namespace

FunctionTree Fit(const Dataset& train, const Dataset& test, const FitConfig& config,
                 const FitObserver* observer) {
  ValidateConfig(config);
  if (train.rows() < 20) throw ArgumentError("fit needs at least 20 training rows");
  FitState state(train, config);
  state.InitRoot();

  FunctionTree best = state.Snapshot();
  if (!(state.Sse() > 0.0)) {
    Warn("fit: outcome is constant; returning a root-only tree");
    FinalizeStats(best, train, &test);
    return best;
  }
  double best_test = SafeRmse(test.outcome(), best.Predict(test));
  int since_best = 0;
  std::vector<FitState::Candidate> scored;
  while (static_cast<int>(state.size()) < config.max_nodes) {
    const bool want_all = observer && observer->on_candidates;
    const auto cand = state.BestCandidate(want_all ? &scored : nullptr);
    if (want_all) {
      std::vector<FitObserver::Candidate> report;
      report.reserve(scored.size());
      for (const auto& c : scored) report.push_back({c.node, c.var, c.reduction});
      observer->on_candidates(state.Snapshot(), report);
    }
    if (!cand) break;
    const double before = state.Sse();
    state.AddNode(*cand);
    const double after_add = state.Sse();
    for (int p = 0; p < config.backfit_passes; ++p) {
      const double s0 = state.Sse();
      state.Backfit();
      if (observer && observer->on_backfit) observer->on_backfit(s0, state.Sse());
    }
    FunctionTree snap = state.Snapshot();
    const double test_rmse = SafeRmse(test.outcome(), snap.Predict(test));
    if (observer && observer->on_addition) {
      observer->on_addition({static_cast<int>(state.size()), cand->node, cand->var,
                             cand->reduction, before, after_add, test_rmse});
    }
    if (test_rmse < best_test) {
      best_test = test_rmse;
      best = std::move(snap);
      since_best = 0;
    } else if (++since_best > config.patience) {
      break;
    }
  }
  FinalizeStats(best, train, &test);
  return best;
}

FunctionTree Fit(const Dataset& data, const FitConfig& config, const FitObserver* observer) {
  auto [train, test] = data.split(config.split);
  return Fit(train, test, config, observer);
}

FunctionTree BackfitPass(const FunctionTree& tree, const Dataset& data, const FitConfig& config) {
  if (tree.size() == 0) return tree;
  FitState state(data, config);
  state.InitFromTree(tree);
  state.Backfit();
  FunctionTree out = state.Snapshot();
  FinalizeStats(out, data, nullptr);
  TrainStats stats = out.stats();
  stats.test_rmse = tree.stats().test_rmse;
  out.set_stats(stats);
  return out;
}

}  // namespace functree
