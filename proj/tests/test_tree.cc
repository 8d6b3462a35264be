#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "functree/error.h"
#include "functree/tree.h"
#include "test_util.h"

namespace ft = functree;
using testutil::Linear;

namespace {

ft::TreeNode Node(int id, int parent, int var, ft::UnivariateFunction f) {
  ft::TreeNode n;
  n.id = id;
  n.parent = parent;
  n.var = var;
  n.func = std::move(f);
  return n;
}

// b0 + x1 + x1 * x2 written as a two-node chain.
ft::FunctionTree Bilinear(double b0) {
  return ft::FunctionTree(testutil::NumericVars(2), b0,
                          {Node(1, 0, 0, Linear(0, 1)), Node(2, 1, 1, Linear(0, 1))});
}

}  // namespace

TEST(FunctionTree, RootOnlyPredictsConstant) {
  const ft::FunctionTree t(testutil::NumericVars(3), 3.0, {});
  const std::vector<double> row{0.4, -2, 7};
  EXPECT_EQ(t.Predict(row), 3.0);
  EXPECT_EQ(t.size(), 0u);
}

TEST(FunctionTree, PathProductModel) {
  // Node 2's basis is f1(x1) * f2(x2) = x1 * x2, so F = 1 + x1 + x1 x2.
  const auto t = Bilinear(1.0);
  for (double a : {-1.5, 0.0, 0.7}) {
    for (double b : {-2.0, 0.3, 1.0}) {
      const std::vector<double> row{a, b};
      EXPECT_NEAR(t.Predict(row), 1.0 + a + a * b, 1e-12);
    }
  }
}

TEST(FunctionTree, InteractionOrderCountsDistinctVariables) {
  const ft::FunctionTree t(testutil::NumericVars(6), 0.0,
                           {Node(1, 0, 3, Linear(1, 1)), Node(2, 1, 3, Linear(1, 1)),
                            Node(3, 2, 4, Linear(1, 1))});
  EXPECT_EQ(t.InteractionOrder(1), 1);
  EXPECT_EQ(t.InteractionOrder(2), 1);
  EXPECT_EQ(t.InteractionOrder(3), 2);
  EXPECT_EQ(t.PathVariables(3), (std::vector<int>{3, 4}));
  EXPECT_EQ(t.Path(3), (std::vector<int>{1, 2, 3}));
  EXPECT_THROW(t.InteractionOrder(0), ft::ArgumentError);
}

TEST(FunctionTree, BasisValuesSumToPrediction) {
  std::mt19937_64 rng(21);
  const auto tree = testutil::RandomTree(rng, 4, 12);
  const auto data = testutil::UniformData(200, 4, 3, [](const auto&) { return 0.0; });
  const auto basis = tree.BasisValues(data);
  const auto pred = tree.Predict(data);
  ASSERT_EQ(basis.size(), 12u);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    double s = tree.b0();
    for (const auto& col : basis) s += col[i];
    EXPECT_NEAR(s, pred[i], 1e-12);
  }
}

TEST(FunctionTree, RejectsBadParents) {
  EXPECT_THROW(ft::FunctionTree(testutil::NumericVars(2), 0.0, {Node(1, 1, 0, Linear(0, 1))}),
               ft::ModelFormatError);
  EXPECT_THROW(ft::FunctionTree(testutil::NumericVars(2), 0.0, {Node(1, 0, 5, Linear(0, 1))}),
               ft::ModelFormatError);
  EXPECT_THROW(ft::FunctionTree(testutil::NumericVars(2), 0.0, {Node(2, 0, 0, Linear(0, 1))}),
               ft::ModelFormatError);
}

TEST(FunctionTree, SaveLoadRoundTrip) {
  std::mt19937_64 rng(5);
  auto vars = testutil::NumericVars(3);
  vars[2].kind = ft::VariableKind::kCategorical;
  vars[2].levels = {"lo", "mid", "hi"};
  std::vector<ft::TreeNode> nodes{Node(1, 0, 0, testutil::RandomCurve(rng)),
                                  Node(2, 1, 2, ft::UnivariateFunction(ft::LevelTable{{0.1, -3, 2}, 0.25})),
                                  Node(3, 0, 1, testutil::RandomCurve(rng))};
  const ft::FunctionTree t(vars, 0.123456789012345678, nodes, {0.5, 0.6, 3});
  const auto path = testutil::TempPath("roundtrip.json");
  t.Save(path);
  const auto back = ft::FunctionTree::Load(path);
  EXPECT_EQ(back.size(), 3u);
  EXPECT_EQ(back.variables(), vars);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> row{u(rng), u(rng), static_cast<double>(i % 4) - 1};
    EXPECT_EQ(back.Predict(row), t.Predict(row));
  }
  EXPECT_EQ(back.stats().test_rmse, 0.6);
}

TEST(FunctionTree, LoadRejectsUnknownVersion) {
  auto json = Bilinear(0).ToJson();
  json.replace(json.find("\"format_version\": 1"), 19, "\"format_version\": 9");
  try {
    ft::FunctionTree::FromJson(json);
    FAIL();
  } catch (const ft::ModelFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
  EXPECT_THROW(ft::FunctionTree::FromJson("{not json"), ft::ModelFormatError);
  EXPECT_THROW(ft::FunctionTree::Load(testutil::TempPath("does_not_exist.json")), ft::Error);
}

TEST(FunctionTree, EmptyNodeListRoundTrips) {
  const ft::FunctionTree t(testutil::NumericVars(2), -4.5, {});
  const auto back = ft::FunctionTree::FromJson(t.ToJson());
  EXPECT_EQ(back.size(), 0u);
  EXPECT_EQ(back.b0(), -4.5);
}

TEST(FunctionTree, SchemaCheck) {
  const auto t = Bilinear(0);
  const auto ok = testutil::UniformData(10, 2, 1, [](const auto&) { return 0.0; });
  EXPECT_NO_THROW(t.CheckSchema(ok));
  const auto bad = testutil::UniformData(10, 3, 1, [](const auto&) { return 0.0; });
  EXPECT_THROW(t.CheckSchema(bad), ft::SchemaError);
}

TEST(ModelDifference, SubtractsPredictions) {
  const auto a = Bilinear(2.0), b = Bilinear(0.5);
  const ft::ModelDifference d(a, b);
  const std::vector<double> row{0.3, -0.9};
  EXPECT_NEAR(d(row), 1.5, 1e-12);
}
