// Command-line frontend: gen, fit, predict, effects, pd, interact, diff,
// bootstrap, surrogate.
//
// Exit codes: 0 success, 2 bad flags or arguments, 3 data/model/file errors.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "functree/dataset.h"
#include "functree/error.h"
#include "functree/fit.h"
#include "functree/interactions.h"
#include "functree/pdengine.h"
#include "functree/random.h"
#include "functree/tree.h"

namespace ft = functree;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct Globals {
  std::uint64_t seed = 1;
  int threads = 1;
  bool quiet = false;
};

struct FitFlags {
  int max_nodes = 200;
  int max_order = 0;
  std::vector<std::string> forbid;
  std::string smoother = "local_linear";
  double span = 0.2;
  int passes = 2;
  int patience = 5;
  double test_fraction = 0.2;
  std::vector<std::string> categorical;
  std::size_t categorical_threshold = 10;
  std::string weight;
};

void AddFitFlags(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("--max-nodes", f.max_nodes, "Largest number of nodes")->capture_default_str();
  cmd->add_option("--max-order", f.max_order, "Largest interaction order (0 = unlimited)")
      ->capture_default_str();
  cmd->add_option("--forbid", f.forbid,
                  "Comma-separated variable set that no node path may contain (repeatable)");
  cmd->add_option("--smoother", f.smoother, "Numeric smoother: local_linear or near_neighbor")
      ->check(CLI::IsMember({"local_linear", "near_neighbor"}))
      ->capture_default_str();
  cmd->add_option("--span", f.span, "Smoother neighborhood fraction")->capture_default_str();
  cmd->add_option("--passes", f.passes, "Backfitting passes after each addition")
      ->capture_default_str();
  cmd->add_option("--patience", f.patience, "Additions without test improvement before stopping")
      ->capture_default_str();
  cmd->add_option("--test-fraction", f.test_fraction, "Held-out fraction for stopping")
      ->capture_default_str();
  cmd->add_option("--categorical", f.categorical, "Columns to treat as categorical (repeatable)");
  cmd->add_option("--categorical-threshold", f.categorical_threshold,
                  "Numeric columns with at most this many distinct values become categorical")
      ->capture_default_str();
  cmd->add_option("--weight", f.weight, "Column of row weights");
}

std::vector<std::string> SplitList(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int VariableIndex(const std::vector<ft::Variable>& vars, const std::string& name) {
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (vars[j].name == name) return static_cast<int>(j);
  }
  throw ft::ArgumentError("unknown variable '" + name + "'");
}

std::vector<int> ParseVars(const std::string& list, const std::vector<ft::Variable>& vars) {
  std::vector<int> out;
  for (const auto& name : SplitList(list, ',')) out.push_back(VariableIndex(vars, name));
  if (out.empty()) throw ft::ArgumentError("no variables given");
  return out;
}

ft::Condition ParseConditions(const std::vector<std::string>& items,
                              const std::vector<ft::Variable>& vars) {
  ft::Condition cond;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ft::ArgumentError("condition '" + item + "' needs name=value");
    const int j = VariableIndex(vars, item.substr(0, eq));
    const std::string value = item.substr(eq + 1);
    const ft::Variable& v = vars[static_cast<std::size_t>(j)];
    if (v.is_categorical()) {
      const auto it = std::find(v.levels.begin(), v.levels.end(), value);
      if (it == v.levels.end()) throw ft::ArgumentError("unknown level '" + value + "' of " + v.name);
      cond.emplace_back(j, static_cast<double>(it - v.levels.begin()));
    } else {
      try {
        std::size_t used = 0;
        const double x = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        cond.emplace_back(j, x);
      } catch (const std::exception&) {
        throw ft::ArgumentError("condition value '" + value + "' is not a number");
      }
    }
  }
  return cond;
}

ft::FitConfig MakeConfig(const FitFlags& f, const Globals& g, const std::vector<ft::Variable>& vars) {
  ft::FitConfig cfg;
  cfg.max_nodes = f.max_nodes;
  cfg.max_order = f.max_order;
  for (const auto& set : f.forbid) {
    auto idx = ParseVars(set, vars);
    std::sort(idx.begin(), idx.end());
    cfg.forbidden_subsets.push_back(idx);
  }
  if (!(f.span > 0.0 && f.span <= 1.0)) throw ft::ArgumentError("--span must be in (0, 1]");
  cfg.numeric_smoother = f.smoother == "near_neighbor" ? ft::NearNeighborSmoother(f.span)
                                                       : ft::LocalLinearSmoother(f.span);
  cfg.backfit_passes = f.passes;
  cfg.patience = f.patience;
  if (!(f.test_fraction > 0.0 && f.test_fraction < 1.0)) {
    throw ft::ArgumentError("--test-fraction must be in (0, 1)");
  }
  cfg.split.test_fraction = f.test_fraction;
  cfg.split.seed = g.seed;
  cfg.threads = g.threads;
  return cfg;
}

ft::CsvOptions MakeCsvOptions(const FitFlags& f, const std::string& target) {
  ft::CsvOptions opt;
  opt.target = target;
  opt.categorical_override = f.categorical;
  opt.categorical_threshold = f.categorical_threshold;
  opt.weight_column = f.weight;
  return opt;
}

ft::FitObserver Progress(const Globals& g, const std::vector<ft::Variable>& vars) {
  ft::FitObserver obs;
  if (g.quiet) return obs;
  obs.on_addition = [&vars](const ft::FitObserver::Addition& a) {
    std::fprintf(stderr, "node %d: %s under %d, test rmse %.5f\n", a.node_id,
                 vars[static_cast<std::size_t>(a.var)].name.c_str(), a.parent, a.test_rmse);
  };
  return obs;
}

void PrintSummary(const ft::FunctionTree& tree, const ft::FitConfig& cfg, const ft::Dataset& data,
                  std::ostream& out) {
  const auto& st = tree.stats();
  out << "nodes: " << tree.size() << "\n";
  out << "max_order: " << (cfg.max_order == 0 ? std::string("unlimited") : std::to_string(cfg.max_order))
      << (cfg.max_order == 1 ? " (additive)" : "") << "\n";
  int deepest = 0;
  for (const auto& n : tree.nodes()) deepest = std::max(deepest, tree.InteractionOrder(n.id));
  out << "largest_interaction_order: " << deepest << "\n";
  out << "train_rmse: " << ft::FormatReal(st.train_rmse) << "\n";
  out << "test_rmse: " << ft::FormatReal(st.test_rmse) << "\n";
  if (data.has_truth()) {
    const double r = ft::RmseTarget(data.truth(), tree.Predict(data));
    out << "truth_rmse: " << ft::FormatReal(r) << "\n";
    out << "truth_r2: " << ft::FormatReal(1.0 - r * r) << "\n";
  }
  out << "node,parent,variable,order,influence\n";
  for (const auto& n : tree.nodes()) {
    out << n.id << "," << n.parent << "," << tree.variables()[static_cast<std::size_t>(n.var)].name
        << "," << tree.InteractionOrder(n.id) << "," << ft::FormatReal(n.influence) << "\n";
  }
}

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ft::Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw ft::Error("write to '" + path + "' failed");
}

// Copies a CSV file and appends one column.
void AppendColumn(const std::string& in_path, const std::string& out_path, const std::string& name,
                  const std::vector<double>& values) {
  std::ifstream in(in_path);
  if (!in) throw ft::DataError("cannot open '" + in_path + "'");
  std::ostringstream out;
  std::string line;
  bool header = true;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') {
      out << line << "\n";
      continue;
    }
    if (header) {
      out << line << "," << name << "\n";
      header = false;
      continue;
    }
    if (row >= values.size()) throw ft::DataError("row count changed while reading '" + in_path + "'");
    out << line << "," << ft::FormatReal(values[row++]) << "\n";
  }
  WriteText(out_path, out.str());
}

// ---------------------------------------------------------------------------

int CmdGen(const std::string& example, std::size_t n, double sd_x, double snr,
           const std::string& out, const Globals& g) {
  ft::Dataset data = [&] {
    if (example == "friedman") {
      ft::FriedmanOptions o;
      o.n = n ? n : 10000;
      o.seed = g.seed;
      o.sd_x = sd_x;
      o.snr = snr;
      return ft::GenerateFriedman(o);
    }
    ft::HuOptions o;
    o.n = n ? n : 20000;
    o.seed = g.seed;
    o.mode = example == "hu-logistic" ? ft::HuMode::kClassification : ft::HuMode::kRegression;
    return ft::GenerateHu(o);
  }();
  ft::WriteCsv(data, out, "y");
  if (!g.quiet) std::fprintf(stderr, "wrote %zu rows to %s\n", data.rows(), out.c_str());
  return 0;
}

int CmdFit(const std::string& data_path, const std::string& target, const std::string& out,
           const FitFlags& f, const Globals& g) {
  const ft::Dataset data = ft::LoadCsv(data_path, MakeCsvOptions(f, target));
  const ft::FitConfig cfg = MakeConfig(f, g, data.variables());
  const ft::FitObserver obs = Progress(g, data.variables());
  const ft::FunctionTree tree = ft::Fit(data, cfg, &obs);
  tree.Save(out);
  PrintSummary(tree, cfg, data, std::cout);
  return 0;
}

int CmdPredict(const std::string& model_path, const std::string& data_path, const std::string& out,
               const std::string& column) {
  const ft::FunctionTree tree = ft::FunctionTree::Load(model_path);
  const ft::Dataset data = ft::LoadCsvWithSchema(data_path, tree.variables());
  AppendColumn(data_path, out, column, tree.Predict(data));
  return 0;
}

int CmdEffects(const std::string& model_path, const std::string& data_path, const std::string& out,
               const std::string& log_path, int max_order, bool no_screen, bool pa,
               const Globals& g) {
  const ft::FunctionTree tree = ft::FunctionTree::Load(model_path);
  const ft::Dataset data = ft::LoadCsvWithSchema(data_path, tree.variables());
  ft::SearchOptions opt;
  opt.max_order = max_order;
  opt.use_screens = !no_screen;
  opt.pa = pa;
  opt.threads = g.threads;
  const ft::EffectReport report = ft::SearchEffects(tree, data, opt);
  ft::WriteEffectReport(report, tree.variables(), out);
  const std::string log = ft::FormatScreeningLog(report);
  if (!log_path.empty()) WriteText(log_path, log);
  if (!g.quiet) std::cerr << log;
  return 0;
}

int CmdPd(const std::string& model_path, const std::string& data_path, const std::string& vars,
          std::size_t grid, const std::string& out, bool pa, bool brute, std::size_t brute_rows,
          const Globals& g) {
  const ft::FunctionTree tree = ft::FunctionTree::Load(model_path);
  ft::Dataset data = ft::LoadCsvWithSchema(data_path, tree.variables());
  const auto subset = ParseVars(vars, tree.variables());
  const auto points = ft::DefaultPoints(data, subset, grid);
  ft::EffectGrid result;
  if (brute) {
    if (brute_rows && brute_rows < data.rows()) {
      std::vector<std::size_t> rows(brute_rows);
      for (std::size_t i = 0; i < brute_rows; ++i) rows[i] = i * data.rows() / brute_rows;
      data = data.subset(rows);
    }
    ft::BruteOptions opt;
    opt.threads = g.threads;
    result = ft::PdBrute([&tree](std::span<const double> r) { return tree.Predict(r); }, subset,
                         points, data, opt);
  } else if (pa) {
    result = ft::Pa(tree, subset, points, data);
  } else {
    result = ft::PdFast(tree, subset, points, data);
  }
  ft::WriteEffectGrid(result, tree.variables(), out);
  if (!g.quiet) {
    std::fprintf(stderr, "%zu points, %.0f evaluations\n", points.size(), result.evaluations);
  }
  return 0;
}

int CmdInteract(const std::string& model_path, const std::string& data_path,
                const std::string& vars, const std::vector<std::string>& conds, std::size_t grid,
                const std::string& out, const Globals& g) {
  const ft::FunctionTree tree = ft::FunctionTree::Load(model_path);
  const ft::Dataset data = ft::LoadCsvWithSchema(data_path, tree.variables());
  const auto subset = ParseVars(vars, tree.variables());
  const auto cond = ParseConditions(conds, tree.variables());
  const auto points = ft::DefaultPoints(data, subset, grid);
  const ft::EffectGrid result = cond.empty()
                                    ? ft::PureInteraction(tree, subset, points, data)
                                    : ft::ConditionalInteraction(tree, subset, cond, points, data);
  ft::WriteEffectGrid(result, tree.variables(), out);
  if (!g.quiet) {
    double ss = 0.0;
    for (double v : result.values) ss += v * v;
    std::fprintf(stderr, "%zu points, rms %.6g\n", points.size(),
                 std::sqrt(ss / static_cast<double>(result.values.size())));
  }
  return 0;
}

int CmdDiff(const std::string& a_path, const std::string& b_path, const std::string& data_path,
            const std::string& vars, const std::vector<std::string>& conds, std::size_t grid,
            std::size_t rows, const std::string& out, const Globals& g) {
  const ft::FunctionTree a = ft::FunctionTree::Load(a_path);
  const ft::FunctionTree b = ft::FunctionTree::Load(b_path);
  ft::Dataset data = ft::LoadCsvWithSchema(data_path, a.variables());
  const ft::PredictFn diff = ft::ModelDiff(a, b);
  const auto subset = ParseVars(vars, a.variables());
  const auto cond = ParseConditions(conds, a.variables());
  const auto points = ft::DefaultPoints(data, subset, grid);
  if (rows && rows < data.rows()) {
    std::vector<std::size_t> idx(rows);
    for (std::size_t i = 0; i < rows; ++i) idx[i] = i * data.rows() / rows;
    data = data.subset(idx);
  }
  ft::BruteOptions opt;
  opt.threads = g.threads;
  const ft::EffectGrid result =
      cond.empty() ? ft::PureInteractionBrute(diff, subset, points, data, opt)
                   : ft::ConditionalInteractionBrute(diff, subset, cond, points, data, opt);
  ft::WriteEffectGrid(result, a.variables(), out);
  double ss = 0.0;
  for (double v : result.values) ss += v * v;
  std::cout << "rms: " << ft::FormatReal(std::sqrt(ss / static_cast<double>(result.values.size())))
            << "\n";
  return 0;
}

int CmdBootstrap(const std::string& data_path, const std::string& target,
                 const std::vector<std::string>& configs, int reps, const std::string& out,
                 const FitFlags& f, const Globals& g) {
  const ft::Dataset data = ft::LoadCsv(data_path, MakeCsvOptions(f, target));
  const ft::FitConfig base = MakeConfig(f, g, data.variables());
  std::vector<ft::FitConfig> cfgs;
  for (const auto& c : configs) {
    ft::FitConfig cfg = base;
    if (c == "unconstrained") {
      cfg.max_order = 0;
    } else if (c.rfind("max_order=", 0) == 0) {
      try {
        cfg.max_order = std::stoi(c.substr(10));
      } catch (const std::exception&) {
        throw ft::ArgumentError("bad config '" + c + "'");
      }
    } else if (c.rfind("forbid=", 0) == 0) {
      auto idx = ParseVars(c.substr(7), data.variables());
      std::sort(idx.begin(), idx.end());
      cfg.forbidden_subsets.push_back(idx);
    } else {
      throw ft::ArgumentError("bad config '" + c + "' (use unconstrained, max_order=K, forbid=a,b)");
    }
    cfgs.push_back(cfg);
  }
  auto progress = [&](int r) {
    if (!g.quiet) std::fprintf(stderr, "replicate %d done\n", r + 1);
  };
  const ft::BootstrapResult res = ft::BootstrapCompare(data, cfgs, reps, g.seed, g.threads, progress);
  std::ostringstream csv;
  csv << "config,replicate,rmse\n";
  for (std::size_t c = 0; c < cfgs.size(); ++c) {
    for (std::size_t r = 0; r < res.rmse[c].size(); ++r) {
      csv << configs[c] << "," << r << "," << ft::FormatReal(res.rmse[c][r]) << "\n";
    }
  }
  WriteText(out, csv.str());
  std::cout << "config,min,q25,median,q75,max\n";
  for (std::size_t c = 0; c < cfgs.size(); ++c) {
    std::cout << configs[c];
    for (double q : res.quantiles[c]) std::cout << "," << ft::FormatReal(q);
    std::cout << "\n";
  }
  return 0;
}

int CmdSurrogate(const std::string& data_path, const std::string& pred, const std::string& truth,
                 const std::vector<std::string>& drop, const std::string& out, const FitFlags& f,
                 const Globals& g) {
  ft::CsvOptions opt = MakeCsvOptions(f, pred);
  opt.ignore_columns = drop;
  if (!truth.empty() && truth != ft::kTruthColumn) opt.ignore_columns.push_back(truth);
  const ft::Dataset data = ft::LoadCsv(data_path, opt);
  const ft::FitConfig cfg = MakeConfig(f, g, data.variables());
  const ft::FitObserver obs = Progress(g, data.variables());
  const ft::FunctionTree tree = ft::Fit(data, cfg, &obs);
  tree.Save(out);
  const auto fitted = tree.Predict(data);
  std::cout << "nodes: " << tree.size() << "\n";
  std::cout << "fidelity_rmse: " << ft::FormatReal(ft::RmseTarget(data.outcome(), fitted)) << "\n";
  if (!truth.empty()) {
    std::vector<double> t;
    if (truth == ft::kTruthColumn) {
      if (!data.has_truth()) throw ft::DataError("no '" + truth + "' column");
      t.assign(data.truth().begin(), data.truth().end());
    } else {
      ft::CsvOptions topt = opt;
      topt.target = truth;
      topt.ignore_columns = {};
      const ft::Dataset td = ft::LoadCsv(data_path, topt);
      t.assign(td.outcome().begin(), td.outcome().end());
    }
    std::cout << "truth_rmse: " << ft::FormatReal(ft::RmseTarget(t, fitted)) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Function tree models: fitting, partial dependence and interaction analysis"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker thread cap")->capture_default_str();
  app.add_flag("--quiet", g.quiet, "No progress output on stderr");

  std::string example = "friedman", out, data_path, target = "y", model, model_b, vars, column = "yhat";
  std::string log_path, pred, truth;
  std::size_t n = 0, grid = 50, rows = 0;
  double sd_x = 0.5, snr = 2.0;
  int max_order = 3, reps = 20;
  bool no_screen = false, pa = false, brute = false;
  std::vector<std::string> conds, configs{"unconstrained", "max_order=2", "max_order=1"}, drop;
  FitFlags ff;

  auto* gen = app.add_subcommand("gen", "Write a synthetic dataset");
  gen->add_option("--example", example, "friedman, hu or hu-logistic")
      ->check(CLI::IsMember({"friedman", "hu", "hu-logistic"}))
      ->capture_default_str();
  gen->add_option("--n", n, "Rows (default 10000 friedman, 20000 hu)");
  gen->add_option("--sd-x", sd_x, "Predictor scale (friedman)")->capture_default_str();
  gen->add_option("--snr", snr, "Signal-to-noise ratio (friedman)")->capture_default_str();
  gen->add_option("--out", out, "Output CSV")->required();

  auto* fit = app.add_subcommand("fit", "Fit a function tree");
  fit->add_option("--data", data_path, "Training CSV")->required();
  fit->add_option("--target", target, "Outcome column")->capture_default_str();
  fit->add_option("--out", out, "Model JSON")->required();
  AddFitFlags(fit, ff);

  auto* predict = app.add_subcommand("predict", "Append model predictions to a CSV");
  predict->add_option("--model", model, "Model JSON")->required();
  predict->add_option("--data", data_path, "Input CSV")->required();
  predict->add_option("--out", out, "Output CSV")->required();
  predict->add_option("--column", column, "Prediction column name")->capture_default_str();

  auto* effects = app.add_subcommand("effects", "Rank main and interaction effects");
  effects->add_option("--model", model, "Model JSON")->required();
  effects->add_option("--data", data_path, "Averaging data CSV")->required();
  effects->add_option("--out", out, "Report CSV")->required();
  effects->add_option("--log", log_path, "Screening log file");
  effects->add_option("--max-order", max_order, "Largest subset size (1-4)")
      ->check(CLI::Range(1, 4))
      ->capture_default_str();
  effects->add_flag("--no-screen", no_screen, "Search all subsets");
  effects->add_flag("--pa", pa, "Add strengths from partial association functions");

  auto* pd = app.add_subcommand("pd", "Partial dependence grid");
  pd->add_option("--model", model, "Model JSON")->required();
  pd->add_option("--data", data_path, "Averaging data CSV")->required();
  pd->add_option("--vars", vars, "Comma-separated variables")->required();
  pd->add_option("--grid", grid, "Points per numeric variable")->capture_default_str();
  pd->add_option("--out", out, "Grid CSV")->required();
  pd->add_flag("--pa", pa, "Partial association instead of dependence");
  pd->add_flag("--brute", brute, "Brute-force averaging over data rows");
  pd->add_option("--rows", rows, "Rows used by --brute (0 = all)");

  auto* interact = app.add_subcommand("interact", "Pure interaction grid");
  interact->add_option("--model", model, "Model JSON")->required();
  interact->add_option("--data", data_path, "Averaging data CSV")->required();
  interact->add_option("--vars", vars, "Comma-separated variables")->required();
  interact->add_option("--cond", conds, "Pinned variable name=value (repeatable)");
  interact->add_option("--grid", grid, "Points per numeric variable")->capture_default_str();
  interact->add_option("--out", out, "Grid CSV")->required();

  auto* diff = app.add_subcommand("diff", "Pure interaction of the difference of two models");
  diff->add_option("--model-a", model, "First model JSON")->required();
  diff->add_option("--model-b", model_b, "Second model JSON")->required();
  diff->add_option("--data", data_path, "Averaging data CSV")->required();
  diff->add_option("--vars", vars, "Comma-separated variables")->required();
  diff->add_option("--cond", conds, "Pinned variable name=value (repeatable)");
  diff->add_option("--grid", grid, "Points per numeric variable")->capture_default_str();
  diff->add_option("--rows", rows, "Averaging rows (0 = all)");
  diff->add_option("--out", out, "Grid CSV")->required();

  auto* boot = app.add_subcommand("bootstrap", "Compare fit configurations by bootstrap");
  boot->add_option("--data", data_path, "Data CSV")->required();
  boot->add_option("--target", target, "Outcome column")->capture_default_str();
  boot->add_option("--config", configs,
                   "unconstrained, max_order=K or forbid=a,b,c (repeatable)");
  boot->add_option("--reps", reps, "Replicates")->capture_default_str();
  boot->add_option("--out", out, "Per-replicate RMSE CSV")->required();
  AddFitFlags(boot, ff);

  auto* sur = app.add_subcommand("surrogate", "Fit a tree to another model's predictions");
  sur->add_option("--data", data_path, "CSV with predictors and predictions")->required();
  sur->add_option("--pred", pred, "Prediction column")->required();
  sur->add_option("--truth", truth, "Column to report fidelity against");
  sur->add_option("--drop", drop, "Columns to leave out of the predictors (repeatable)");
  sur->add_option("--out", out, "Model JSON")->required();
  AddFitFlags(sur, ff);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  if (g.threads < 1) {
    std::cerr << "error: --threads must be at least 1\n";
    return kExitUsage;
  }
  if (g.quiet) ft::SetWarningHandler({});

  try {
    if (gen->parsed()) return CmdGen(example, n, sd_x, snr, out, g);
    if (fit->parsed()) return CmdFit(data_path, target, out, ff, g);
    if (predict->parsed()) return CmdPredict(model, data_path, out, column);
    if (effects->parsed()) {
      return CmdEffects(model, data_path, out, log_path, max_order, no_screen, pa, g);
    }
    if (pd->parsed()) return CmdPd(model, data_path, vars, grid, out, pa, brute, rows, g);
    if (interact->parsed()) return CmdInteract(model, data_path, vars, conds, grid, out, g);
    if (diff->parsed()) return CmdDiff(model, model_b, data_path, vars, conds, grid, rows, out, g);
    if (boot->parsed()) return CmdBootstrap(data_path, target, configs, reps, out, ff, g);
    if (sur->parsed()) return CmdSurrogate(data_path, pred, truth, drop, out, ff, g);
  } catch (const ft::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
