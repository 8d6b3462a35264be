#include "functree/interactions.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>

#include "functree/error.h"
#include "functree/parallel.h"
#include "functree/random.h"

namespace functree {

namespace {

// Nonempty subsets of s as index masks; bit m selects s[m].
std::vector<int> Project(const std::vector<int>& s, unsigned mask) {
  std::vector<int> u;
  for (std::size_t m = 0; m < s.size(); ++m) {
    if (mask & (1u << m)) u.push_back(s[m]);
  }
  return u;
}

double Sign(std::size_t size, unsigned mask) {
  return (size - static_cast<std::size_t>(std::popcount(mask))) % 2 ? -1.0 : 1.0;
}

void CheckOrder(const std::vector<int>& s) {
  if (s.empty() || s.size() > 4) throw ArgumentError("interaction subsets need 1 to 4 variables");
}

std::string SubsetNames(const std::vector<int>& s, const std::vector<Variable>& vars,
                        const char* sep) {
  std::string out;
  for (std::size_t m = 0; m < s.size(); ++m) {
    if (m) out += sep;
    out += vars.at(static_cast<std::size_t>(s[m])).name;
  }
  return out;
}

// Every combination of `size` elements of `pool`, in lexicographic order.
void Combinations(const std::vector<int>& pool, std::size_t size,
                  std::vector<std::vector<int>>& out) {
  if (size == 0 || size > pool.size()) return;
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    std::vector<int> c;
    for (std::size_t i : idx) c.push_back(pool[i]);
    out.push_back(std::move(c));
    std::size_t i = size;
    while (i > 0 && idx[i - 1] == pool.size() - size + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t k = i; k < size; ++k) idx[k] = idx[k - 1] + 1;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// EffectEngine

EffectEngine::EffectEngine(const FunctionTree& tree, const Dataset& data)
    : tree_(tree), data_(data) {
  tree.CheckSchema(data);
  const std::size_t n = data.rows();
  if (n == 0) throw ArgumentError("effect computations need data rows");
  for (const TreeNode& node : tree.nodes()) {
    const auto x = data.column(static_cast<std::size_t>(node.var));
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = node.func(x[i]);
    fvals_.push_back(std::move(f));
    paths_.push_back(tree.Path(node.id));
  }
  const auto w = data.weight();
  sw_ = std::accumulate(w.begin(), w.end(), 0.0);
  if (!(sw_ > 0.0)) throw ArgumentError("dataset has no positive row weight");
  pred_ = tree.Predict(data);
  pred_mean_ = Mean(pred_);
  pred_var_ = Variance(pred_);
}

double EffectEngine::Mean(const std::vector<double>& v) const {
  const auto w = data_.weight();
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i];
  return s / sw_;
}

double EffectEngine::Variance(const std::vector<double>& v) const {
  const auto w = data_.weight();
  const double m = Mean(v);
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * (v[i] - m) * (v[i] - m);
  return s / sw_;
}

std::vector<double> EffectEngine::ComputePd(const std::vector<int>& u, double* alpha) const {
  const std::size_t n = data_.rows();
  std::vector<double> out(n, 0.0), f(n), g(n);
  std::size_t mixed = 0;
  for (std::size_t k = 0; k < paths_.size(); ++k) {
    std::fill(f.begin(), f.end(), 1.0);
    std::fill(g.begin(), g.end(), 1.0);
    bool has_z = false, has_c = false;
    for (int l : paths_[k]) {
      const int var = tree_.node(l).var;
      const bool z = std::binary_search(u.begin(), u.end(), var);
      auto& target = z ? f : g;
      (z ? has_z : has_c) = true;
      const auto& fv = fvals_[static_cast<std::size_t>(l - 1)];
      for (std::size_t i = 0; i < n; ++i) target[i] *= fv[i];
    }
    if (!has_z) continue;
    if (has_c) ++mixed;
    const double gbar = has_c ? Mean(g) : 1.0;
    const double fbar = Mean(f);
    for (std::size_t i = 0; i < n; ++i) out[i] += gbar * (f[i] - fbar);
  }
  *alpha = paths_.empty() ? 0.0 : static_cast<double>(mixed) / static_cast<double>(paths_.size());
  return out;
}

const std::vector<double>& EffectEngine::PdRows(const std::vector<int>& u) {
  std::vector<int> key = u;
  std::sort(key.begin(), key.end());
  auto it = memo_.find(key);
  if (it != memo_.end()) return it->second;
  if (key.empty()) return memo_.emplace(key, std::vector<double>(data_.rows(), 0.0)).first->second;
  Prefetch({key}, 1);
  return memo_.at(key);
}

void EffectEngine::Prefetch(const std::vector<std::vector<int>>& subsets, int threads) {
  std::vector<std::vector<int>> missing;
  for (auto u : subsets) {
    std::sort(u.begin(), u.end());
    if (u.empty() || memo_.count(u)) continue;
    if (std::find(missing.begin(), missing.end(), u) == missing.end()) missing.push_back(u);
  }
  std::vector<std::vector<double>> values(missing.size());
  std::vector<double> alpha(missing.size());
  ParallelFor(missing.size(), threads,
              [&](std::size_t m) { values[m] = ComputePd(missing[m], &alpha[m]); });
  for (std::size_t m = 0; m < missing.size(); ++m) {
    alpha_[missing[m]] = alpha[m];
    memo_.emplace(std::move(missing[m]), std::move(values[m]));
  }
}

std::vector<double> EffectEngine::InteractionRows(const std::vector<int>& subset) {
  CheckOrder(subset);
  const std::vector<int> s = NormalizeSubset(subset, data_.cols());
  std::vector<double> out(data_.rows(), 0.0);
  const unsigned full = (1u << s.size()) - 1;
  for (unsigned mask = 1; mask <= full; ++mask) {
    const double sign = Sign(s.size(), mask);
    const auto& pd = PdRows(Project(s, mask));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += sign * pd[i];
  }
  return out;
}

double EffectEngine::Strength(const std::vector<int>& s) {
  if (!(pred_var_ > 0.0)) throw ArgumentError("strength is undefined: predictions are constant");
  return std::sqrt(Variance(InteractionRows(s)) / pred_var_);
}

double EffectEngine::evaluations(double nominal) const {
  double total = 0.0;
  for (const auto& [u, a] : alpha_) total += nominal + a * nominal;
  return total;
}

double EffectEngine::brute_evaluations(double nominal) const {
  return static_cast<double>(alpha_.size()) * nominal * nominal;
}

// ---------------------------------------------------------------------------
// Grids

namespace {

template <typename PdFn>
EffectGrid Inclusion(const std::vector<int>& s, const Points& points, PdFn pd) {
  CheckOrder(s);
  EffectGrid grid;
  grid.subset = s;
  grid.points = points;
  grid.kind = EffectKind::kPureInteraction;
  grid.values.assign(points.size(), 0.0);
  const unsigned full = (1u << s.size()) - 1;
  for (unsigned mask = 1; mask <= full; ++mask) {
    std::vector<int> u;
    std::vector<std::size_t> pos;
    for (std::size_t m = 0; m < s.size(); ++m) {
      if (mask & (1u << m)) {
        u.push_back(s[m]);
        pos.push_back(m);
      }
    }
    Points proj(points.size());
    for (std::size_t p = 0; p < points.size(); ++p) {
      for (std::size_t m : pos) proj[p].push_back(points[p][m]);
    }
    const EffectGrid sub = pd(u, proj);
    const double sign = Sign(s.size(), mask);
    for (std::size_t p = 0; p < points.size(); ++p) grid.values[p] += sign * sub.values[p];
    grid.evaluations += sub.evaluations;
    grid.centering_evaluations += sub.centering_evaluations;
    if (mask == full) grid.alpha = sub.alpha;
  }
  return grid;
}

Dataset Pin(const Dataset& data, const std::vector<int>& s, const Condition& cond) {
  Dataset out = data;
  for (const auto& [var, value] : cond) {
    if (var < 0 || var >= static_cast<int>(data.cols())) {
      throw ArgumentError("condition variable index out of range");
    }
    if (std::find(s.begin(), s.end(), var) != s.end()) {
      throw ArgumentError("condition variables must not be in the interaction subset");
    }
    const Variable& v = data.variable(static_cast<std::size_t>(var));
    const bool outside = v.is_categorical()
                             ? (value < 0 || value >= static_cast<double>(v.levels.size()))
                             : (value < v.min || value > v.max);
    if (outside) {
      Warn("condition " + v.name + "=" + FormatReal(value) +
           " is outside the observed range; functions extrapolate as constants");
    }
    out = out.with_constant_column(static_cast<std::size_t>(var), value);
  }
  return out;
}

}  // namespace

EffectGrid PureInteraction(const FunctionTree& tree, const std::vector<int>& s,
                           const Points& points, const Dataset& data) {
  NormalizeSubset(s, data.cols());
  return Inclusion(s, points, [&](const std::vector<int>& u, const Points& proj) {
    return PdFast(tree, u, proj, data);
  });
}

EffectGrid PureInteractionBrute(const PredictFn& predict, const std::vector<int>& s,
                                const Points& points, const Dataset& data,
                                const BruteOptions& options) {
  NormalizeSubset(s, data.cols());
  return Inclusion(s, points, [&](const std::vector<int>& u, const Points& proj) {
    return PdBrute(predict, u, proj, data, options);
  });
}

double Strength(const FunctionTree& tree, const std::vector<int>& s, const Dataset& data) {
  EffectEngine engine(tree, data);
  return engine.Strength(s);
}

EffectGrid ConditionalInteraction(const FunctionTree& tree, const std::vector<int>& s,
                                  const Condition& cond, const Points& points,
                                  const Dataset& data) {
  NormalizeSubset(s, data.cols());
  const Dataset pinned = Pin(data, s, cond);
  EffectGrid grid = PureInteraction(tree, s, points, pinned);
  grid.kind = EffectKind::kConditional;
  grid.condition = cond;
  return grid;
}

EffectGrid ConditionalInteractionBrute(const PredictFn& predict, const std::vector<int>& s,
                                       const Condition& cond, const Points& points,
                                       const Dataset& data, const BruteOptions& options) {
  NormalizeSubset(s, data.cols());
  Pin(data, s, cond);
  PredictFn pinned = [&predict, &cond](std::span<const double> row) {
    thread_local std::vector<double> buf;
    buf.assign(row.begin(), row.end());
    for (const auto& [var, value] : cond) buf[static_cast<std::size_t>(var)] = value;
    return predict(buf);
  };
  EffectGrid grid = PureInteractionBrute(pinned, s, points, data, options);
  grid.kind = EffectKind::kConditional;
  grid.condition = cond;
  return grid;
}

// ---------------------------------------------------------------------------
// Screening and search

std::vector<double> ScreenH(EffectEngine& engine, int threads) {
  const std::size_t p = engine.data().cols();
  std::vector<std::vector<int>> needed;
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<int> rest;
    for (std::size_t k = 0; k < p; ++k) {
      if (k != j) rest.push_back(static_cast<int>(k));
    }
    needed.push_back({static_cast<int>(j)});
    needed.push_back(std::move(rest));
  }
  engine.Prefetch(needed, threads);
  const auto& pred = engine.predictions();
  const double mean = engine.prediction_mean();
  std::vector<double> h(p);
  std::vector<double> resid(pred.size());
  for (std::size_t j = 0; j < p; ++j) {
    const auto& pj = engine.PdRows(needed[2 * j]);
    const auto& pc = engine.PdRows(needed[2 * j + 1]);
    for (std::size_t i = 0; i < pred.size(); ++i) resid[i] = pred[i] - mean - pj[i] - pc[i];
    double ms = 0.0;
    const auto w = engine.data().weight();
    double sw = 0.0;
    for (std::size_t i = 0; i < resid.size(); ++i) {
      ms += w[i] * resid[i] * resid[i];
      sw += w[i];
    }
    h[j] = std::sqrt(ms / sw);
  }
  return h;
}

std::vector<double> ScreenH(const FunctionTree& tree, const Dataset& data) {
  EffectEngine engine(tree, data);
  return ScreenH(engine);
}

std::vector<std::vector<double>> ScreenR(const FunctionTree& tree) {
  int levels = 4;
  for (const TreeNode& n : tree.nodes()) levels = std::max(levels, tree.InteractionOrder(n.id));
  std::vector<std::vector<double>> r(tree.variables().size(),
                                     std::vector<double>(static_cast<std::size_t>(levels), 0.0));
  for (const TreeNode& n : tree.nodes()) {
    const auto vars = tree.PathVariables(n.id);
    const std::size_t k = vars.size() - 1;
    for (int j : vars) r[static_cast<std::size_t>(j)][k] += n.influence;
  }
  return r;
}

EffectReport SearchEffects(const FunctionTree& tree, const Dataset& data,
                           const SearchOptions& options) {
  if (options.max_order < 1 || options.max_order > 4) {
    throw ArgumentError("max_order for the effect search must be between 1 and 4");
  }
  EffectEngine engine(tree, data);
  if (!(engine.prediction_variance() > 0.0)) {
    throw ArgumentError("effect search needs a model with non-constant predictions");
  }
  const auto& vars = tree.variables();
  const std::size_t p = vars.size();
  EffectReport report;
  report.r = ScreenR(tree);
  if (options.use_screens) report.h = ScreenH(engine, options.threads);

  const double sd = std::sqrt(engine.prediction_variance());
  const double h_thr = options.screening.h_fraction * sd;
  double r_max = 0.0;
  for (const auto& row : report.r) r_max = std::max(r_max, *std::max_element(row.begin(), row.end()));
  const double r_thr = options.screening.r_fraction * r_max;
  auto r_score = [&](std::size_t j, int level) {
    const auto& row = report.r[j];
    return *std::max_element(row.begin() + level - 1, row.end());
  };
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };

  auto& log = report.screening_log;
  if (options.use_screens) {
    log.push_back("H threshold " + fmt(h_thr) + " (" + fmt(options.screening.h_fraction) +
                  " x sd of predictions " + fmt(sd) + ")");
    for (std::size_t j = 0; j < p; ++j) {
      log.push_back("H " + vars[j].name + " " + fmt(report.h[j]) +
                    (report.h[j] >= h_thr ? " interacting" : " excluded"));
    }
    log.push_back("R threshold " + fmt(r_thr) + " (" + fmt(options.screening.r_fraction) +
                  " x largest R " + fmt(r_max) + ")");
  } else {
    log.push_back("screening disabled");
  }

  for (int level = 1; level <= options.max_order; ++level) {
    std::vector<int> pool;
    for (std::size_t j = 0; j < p; ++j) {
      if (!options.use_screens) {
        pool.push_back(static_cast<int>(j));
        continue;
      }
      const double rs = r_score(j, level);
      const bool r_ok = r_max > 0.0 && rs >= r_thr;
      const bool h_ok = level == 1 || report.h[j] >= h_thr;
      if (r_ok && h_ok) {
        pool.push_back(static_cast<int>(j));
      } else if (level == 1 || report.h[j] >= h_thr) {
        log.push_back("level " + std::to_string(level) + ": R excludes " + vars[j].name +
                      " (R " + fmt(rs) + ")");
      }
    }
    std::string names;
    for (int j : pool) names += (names.empty() ? "" : ",") + vars[static_cast<std::size_t>(j)].name;
    log.push_back("level " + std::to_string(level) + " pool: {" + names + "}");
    report.pools.push_back(pool);

    std::vector<std::vector<int>> subsets;
    Combinations(pool, static_cast<std::size_t>(level), subsets);
    std::vector<std::vector<int>> needed;
    for (const auto& s : subsets) {
      for (unsigned mask = 1; mask < (1u << s.size()); ++mask) needed.push_back(Project(s, mask));
    }
    engine.Prefetch(needed, options.threads);
    std::vector<EffectEntry> level_entries;
    for (const auto& s : subsets) {
      EffectEntry e;
      e.subset = s;
      e.order = level;
      e.strength = engine.Strength(s);
      e.pa_strength = std::numeric_limits<double>::quiet_NaN();
      level_entries.push_back(std::move(e));
    }
    std::stable_sort(level_entries.begin(), level_entries.end(),
                     [](const EffectEntry& a, const EffectEntry& b) { return a.strength > b.strength; });
    report.entries.insert(report.entries.end(), level_entries.begin(), level_entries.end());
  }

  if (options.pa) {
    std::map<std::vector<int>, std::vector<double>> pa_rows;
    auto pa_at_rows = [&](const std::vector<int>& u) -> const std::vector<double>& {
      auto it = pa_rows.find(u);
      if (it != pa_rows.end()) return it->second;
      Points pts(data.rows());
      for (std::size_t i = 0; i < data.rows(); ++i) {
        for (int j : u) pts[i].push_back(data.at(i, static_cast<std::size_t>(j)));
      }
      return pa_rows.emplace(u, Pa(tree, u, pts, data).values).first->second;
    };
    for (auto& e : report.entries) {
      std::vector<double> rows(data.rows(), 0.0);
      for (unsigned mask = 1; mask < (1u << e.subset.size()); ++mask) {
        const double sign = Sign(e.subset.size(), mask);
        const auto& v = pa_at_rows(Project(e.subset, mask));
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] += sign * v[i];
      }
      e.pa_strength = std::sqrt(engine.Variance(rows) / engine.prediction_variance());
    }
  }

  report.evaluations = engine.evaluations();
  report.brute_evaluations = engine.brute_evaluations();
  log.push_back("partial dependence functions computed: " + std::to_string(engine.pd_count()));
  log.push_back("fast-path evaluations (N = N_z = 1000): " + fmt(report.evaluations));
  log.push_back("brute-force equivalent: " + fmt(report.brute_evaluations));
  return report;
}

std::vector<EffectEntry> EntriesOfOrder(const EffectReport& report, int order) {
  std::vector<EffectEntry> out;
  for (const auto& e : report.entries) {
    if (e.order == order) out.push_back(e);
  }
  return out;
}

std::string FormatEffectReport(const EffectReport& report, const std::vector<Variable>& variables) {
  const bool pa = std::any_of(report.entries.begin(), report.entries.end(),
                              [](const EffectEntry& e) { return !std::isnan(e.pa_strength); });
  std::ostringstream out;
  out << "subset,order,strength" << (pa ? ",pa_strength" : "") << "\n";
  for (const auto& e : report.entries) {
    out << SubsetNames(e.subset, variables, ";") << "," << e.order << "," << FormatReal(e.strength);
    if (pa) out << "," << FormatReal(e.pa_strength);
    out << "\n";
  }
  return out.str();
}

std::string FormatScreeningLog(const EffectReport& report) {
  std::string out;
  for (const auto& line : report.screening_log) out += line + "\n";
  return out;
}

void WriteEffectReport(const EffectReport& report, const std::vector<Variable>& variables,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write report file '" + path + "'");
  out << FormatEffectReport(report, variables);
  if (!out) throw Error("write to '" + path + "' failed");
}

PredictFn ModelDiff(const FunctionTree& a, const FunctionTree& b) {
  auto diff = std::make_shared<ModelDifference>(a, b);
  return [diff](std::span<const double> row) { return (*diff)(row); };
}

// ---------------------------------------------------------------------------
// Bootstrap

double Quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw ArgumentError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BootstrapResult BootstrapCompare(const Dataset& data, const std::vector<FitConfig>& configs,
                                 int reps, std::uint64_t seed, int threads,
                                 const std::function<void(int)>& progress) {
  if (reps < 2) throw ArgumentError("bootstrap needs at least 2 replicates");
  if (configs.empty()) throw ArgumentError("bootstrap needs at least one configuration");
  if (!data.labeled()) throw ArgumentError("bootstrap needs a labeled dataset");
  const std::size_t n = data.rows();
  BootstrapResult result;
  result.rmse.assign(configs.size(), std::vector<double>(static_cast<std::size_t>(reps)));
  std::mutex progress_mutex;
  ParallelFor(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    Rng rng = MakeRng(seed, 0x1000 + r);
    std::vector<std::size_t> drawn(n);
    std::vector<char> used(n, 0);
    for (auto& d : drawn) {
      d = static_cast<std::size_t>(rng() % n);
      used[d] = 1;
    }
    std::vector<std::size_t> oob;
    for (std::size_t i = 0; i < n; ++i) {
      if (!used[i]) oob.push_back(i);
    }
    const Dataset train = data.subset(drawn);
    const Dataset test = data.subset(oob);
    for (std::size_t c = 0; c < configs.size(); ++c) {
      FitConfig cfg = configs[c];
      cfg.split.seed = MixSeed(seed, 0x2000 + r);
      if (threads > 1) cfg.threads = 1;
      const FunctionTree tree = Fit(train, cfg);
      result.rmse[c][r] = Rmse(test.outcome(), tree.Predict(test));
    }
    if (progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      progress(static_cast<int>(r));
    }
  });
  for (const auto& v : result.rmse) {
    result.quantiles.push_back({Quantile(v, 0.0), Quantile(v, 0.25), Quantile(v, 0.5),
                                Quantile(v, 0.75), Quantile(v, 1.0)});
  }
  return result;
}

}  // namespace functree
