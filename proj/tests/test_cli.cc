#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "functree/tree.h"
#include "test_util.h"

namespace {

const std::string kBinary = FUNCTREE_CLI_PATH;

int Cmd(const std::string& args) {
  const std::string cmd = kBinary + " --quiet " + args + " > /dev/null 2>" +
                          testutil::TempPath("cli_stderr.txt");
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string Slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string Stderr() { return Slurp(testutil::TempPath("cli_stderr.txt")); }

std::size_t DataLines(const std::string& text) {
  std::size_t n = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#') ++n;
  }
  return n;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ASSERT_EQ(Cmd("--seed 5 gen --example friedman --n 800 --out " + P("data.csv")), 0);
    ASSERT_EQ(Cmd("--seed 5 fit --data " + P("data.csv") + " --max-nodes 10 --out " + P("model.json")), 0);
  }
  static std::string P(const std::string& name) { return testutil::TempPath("cli_" + name); }
};

}  // namespace

TEST_F(Cli, GenWritesTruthColumn) {
  const auto text = Slurp(P("data.csv"));
  EXPECT_EQ(text.rfind("x1,x2,x3,x4,x5,x6,x7,x8,y,__truth__\n", 0), 0u) << text.substr(0, 80);
  EXPECT_EQ(DataLines(text), 801u);
}

TEST_F(Cli, PredictAppendsColumn) {
  ASSERT_EQ(Cmd("predict --model " + P("model.json") + " --data " + P("data.csv") + " --out " + P("pred.csv")), 0);
  const auto text = Slurp(P("pred.csv"));
  EXPECT_NE(text.find(",yhat\n"), std::string::npos);
  EXPECT_EQ(DataLines(text), 801u);
}

TEST_F(Cli, PdGridSize) {
  ASSERT_EQ(Cmd("pd --model " + P("model.json") + " --data " + P("data.csv") +
                " --vars x1,x2 --grid 40 --out " + P("pd.csv")),
            0);
  const auto text = Slurp(P("pd.csv"));
  EXPECT_EQ(DataLines(text), 1601u);
  EXPECT_NE(text.find("# kind: pd"), std::string::npos) << text.substr(0, 200);
}

TEST_F(Cli, EffectsAndInteract) {
  ASSERT_EQ(Cmd("effects --model " + P("model.json") + " --data " + P("data.csv") + " --max-order 2 --out " +
                P("effects.csv") + " --log " + P("effects.log")),
            0);
  EXPECT_EQ(Slurp(P("effects.csv")).rfind("subset,order,strength\n", 0), 0u);
  EXPECT_NE(Slurp(P("effects.log")).find("pool"), std::string::npos);
  ASSERT_EQ(Cmd("interact --model " + P("model.json") + " --data " + P("data.csv") +
                " --vars x4,x5 --cond x6=0 --grid 10 --out " + P("cond.csv")),
            0);
  EXPECT_NE(Slurp(P("cond.csv")).find("# condition: x6=0"), std::string::npos);
}

TEST_F(Cli, DiffAndSurrogate) {
  ASSERT_EQ(Cmd("--seed 6 fit --data " + P("data.csv") + " --max-order 1 --max-nodes 8 --out " + P("additive.json")), 0);
  ASSERT_EQ(Cmd("diff --model-a " + P("model.json") + " --model-b " + P("additive.json") + " --data " +
                P("data.csv") + " --vars x1,x2 --grid 5 --rows 100 --out " + P("diff.csv")),
            0);
  EXPECT_EQ(DataLines(Slurp(P("diff.csv"))), 26u);
  ASSERT_EQ(Cmd("predict --model " + P("model.json") + " --data " + P("data.csv") + " --out " + P("pred2.csv")), 0);
  ASSERT_EQ(Cmd("surrogate --data " + P("pred2.csv") + " --pred yhat --truth y --drop __truth__ --out " +
                P("surrogate.json")),
            0);
}

TEST_F(Cli, Bootstrap) {
  ASSERT_EQ(Cmd("bootstrap --data " + P("data.csv") + " --config max_order=1 --config max_order=2 --reps 2 --max-nodes 5 --out " +
                P("boot.csv")),
            0);
  EXPECT_EQ(DataLines(Slurp(P("boot.csv"))), 5u);
}

TEST_F(Cli, Deterministic) {
  ASSERT_EQ(Cmd("--seed 5 fit --data " + P("data.csv") + " --max-nodes 10 --out " + P("model2.json")), 0);
  EXPECT_EQ(Slurp(P("model.json")), Slurp(P("model2.json")));
  ASSERT_EQ(Cmd("--seed 5 --threads 3 fit --data " + P("data.csv") + " --max-nodes 10 --out " + P("model3.json")), 0);
  EXPECT_EQ(Slurp(P("model.json")), Slurp(P("model3.json")));
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(Cmd("fit --data " + P("data.csv")), 2);
  EXPECT_EQ(Cmd("nosuchcommand"), 2);
  EXPECT_EQ(Cmd("fit --data " + P("data.csv") + " --max-nodes 0 --out " + P("x.json")), 2);
  EXPECT_EQ(Cmd("pd --model " + P("model.json") + " --data " + P("data.csv") + " --vars nope --out " + P("x.csv")), 2);
}

TEST_F(Cli, RuntimeErrorsExitThree) {
  EXPECT_EQ(Cmd("fit --data " + P("missing.csv") + " --out " + P("x.json")), 3);
  EXPECT_NE(Stderr().find("missing.csv"), std::string::npos) << Stderr();
  std::ofstream(P("bad_model.json")) << "{\"format_version\": 99}";
  EXPECT_EQ(Cmd("predict --model " + P("bad_model.json") + " --data " + P("data.csv") + " --out " + P("x.csv")), 3);
}

namespace {

std::vector<std::vector<std::string>> CsvRows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

double SummaryValue(const std::string& text, const std::string& key) {
  const auto at = text.find(key + ": ");
  if (at == std::string::npos) return NAN;
  return std::stod(text.substr(at + key.size() + 2));
}

class CliFriedman : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ASSERT_EQ(Cmd("gen --example friedman --out " + P("data.csv")), 0);
    const std::string cmd = kBinary + " --quiet fit --data " + P("data.csv") + " --target y --out " +
                            P("model.json") + " > " + P("summary.txt");
    ASSERT_EQ(std::system(cmd.c_str()), 0);
  }
  static std::string P(const std::string& name) { return testutil::TempPath("clif_" + name); }
};

}  // namespace

TEST_F(CliFriedman, FitSummaryReportsTruthR2) {
  const auto text = Slurp(P("summary.txt"));
  EXPECT_GE(SummaryValue(text, "truth_r2"), 0.95) << text;
}

TEST_F(CliFriedman, ForbidKeepsTripleOffEveryPath) {
  ASSERT_EQ(Cmd("fit --data " + P("data.csv") + " --forbid x4,x5,x6 --out " + P("forbid.json")), 0);
  const auto tree = functree::FunctionTree::Load(P("forbid.json"));
  ASSERT_GT(tree.size(), 0u);
  for (const auto& n : tree.nodes()) {
    const auto vars = tree.PathVariables(n.id);
    const bool all = std::count(vars.begin(), vars.end(), 3) && std::count(vars.begin(), vars.end(), 4) &&
                     std::count(vars.begin(), vars.end(), 5);
    EXPECT_FALSE(all) << "node " << n.id;
  }
}

TEST_F(CliFriedman, EffectsTopTripleAndNoScreenParity) {
  ASSERT_EQ(Cmd("effects --model " + P("model.json") + " --data " + P("data.csv") + " --out " + P("screened.csv")), 0);
  ASSERT_EQ(Cmd("effects --model " + P("model.json") + " --data " + P("data.csv") + " --no-screen --out " +
                P("all.csv")),
            0);
  const auto screened = CsvRows(Slurp(P("screened.csv")));
  const auto all = CsvRows(Slurp(P("all.csv")));
  std::string top_triple;
  for (const auto& r : screened) {
    if (r[1] == "3") {
      top_triple = r[0];
      break;
    }
  }
  EXPECT_EQ(top_triple, "x4;x5;x6");
  // Every screened entry appears in the exhaustive report with the same strength,
  // and the exhaustive report's five strongest entries all survive screening.
  std::map<std::string, std::string> full;
  for (std::size_t k = 1; k < all.size(); ++k) full[all[k][0]] = all[k][2];
  for (std::size_t k = 1; k < screened.size(); ++k) EXPECT_EQ(full[screened[k][0]], screened[k][2]) << screened[k][0];
  auto top5 = [](std::vector<std::vector<std::string>> rows) {
    rows.erase(rows.begin());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return std::stod(a[2]) > std::stod(b[2]); });
    std::vector<std::string> out;
    for (std::size_t k = 0; k < 5; ++k) out.push_back(rows[k][0]);
    return out;
  };
  EXPECT_EQ(top5(screened), top5(all));
}

TEST_F(CliFriedman, PaColumnAgrees) {
  ASSERT_EQ(Cmd("effects --model " + P("model.json") + " --data " + P("data.csv") + " --pa --out " + P("pa.csv")), 0);
  const auto rows = CsvRows(Slurp(P("pa.csv")));
  ASSERT_EQ(rows[0].size(), 4u);
  double top = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) top = std::max(top, std::stod(rows[k][2]));
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double s = std::stod(rows[k][2]), pa = std::stod(rows[k][3]);
    if (s < 0.1 * top) continue;  // relative error of near-zero strengths is meaningless
    EXPECT_LE(std::abs(pa - s), 0.1 * s) << rows[k][0] << " " << s << " vs " << pa;
  }
}

TEST_F(CliFriedman, SelfSurrogateIsFaithful) {
  ASSERT_EQ(Cmd("predict --model " + P("model.json") + " --data " + P("data.csv") + " --out " + P("scored.csv")), 0);
  const std::string cmd = kBinary + " --quiet surrogate --data " + P("scored.csv") +
                          " --pred yhat --drop y --drop __truth__ --out " + P("surrogate.json") + " > " +
                          P("surrogate.txt");
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  const auto text = Slurp(P("surrogate.txt"));
  EXPECT_LT(SummaryValue(text, "fidelity_rmse"), 0.05) << text;
}
