#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>

#include "functree/dataset.h"
#include "functree/error.h"

namespace ft = functree;

namespace {

std::string TempFile(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("functree_" + name);
  std::ofstream(path) << text;
  return path.string();
}

double Corr(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST(LoadCsv, ParsesNumericAndCategorical) {
  const auto path = TempFile("three.csv", "a,b,y\n1.5,x,1\n2.5,y,2\n3.5,x,3\n");
  ft::CsvOptions opt;
  opt.target = "y";
  opt.categorical_threshold = 0;
  const ft::Dataset d = ft::LoadCsv(path, opt);
  ASSERT_EQ(d.cols(), 2u);
  EXPECT_EQ(d.rows(), 3u);
  EXPECT_FALSE(d.variable(0).is_categorical());
  ASSERT_TRUE(d.variable(1).is_categorical());
  EXPECT_EQ(d.variable(1).levels, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(d.at(1, 1), 1.0);
  EXPECT_EQ(d.outcome()[2], 3.0);
}

TEST(LoadCsv, MissingTargetIsAnError) {
  const auto path = TempFile("notarget.csv", "a,b\n1,2\n3,4\n5,7\n");
  ft::CsvOptions opt;
  opt.target = "y";
  try {
    ft::LoadCsv(path, opt);
    FAIL() << "expected DataError";
  } catch (const ft::DataError& e) {
    EXPECT_NE(std::string(e.what()).find("target not found"), std::string::npos);
  }
}

TEST(LoadCsv, FewDistinctIntegersBecomeCategorical) {
  std::string text = "k,z,y\n";
  for (int i = 0; i < 30; ++i) {
    text += std::to_string(i % 3) + "," + std::to_string(i) + "," + std::to_string(i * 0.5) + "\n";
  }
  ft::CsvOptions opt;
  opt.target = "y";
  const ft::Dataset d = ft::LoadCsv(TempFile("ints.csv", text), opt);
  ASSERT_TRUE(d.variable(0).is_categorical());
  EXPECT_EQ(d.variable(0).levels.size(), 3u);
  EXPECT_FALSE(d.variable(1).is_categorical());
}

TEST(LoadCsv, MissingCellsRejected) {
  ft::CsvOptions opt;
  opt.target = "y";
  EXPECT_THROW(ft::LoadCsv(TempFile("na.csv", "a,y\n1,2\nNA,3\n4,5\n"), opt), ft::DataError);
  EXPECT_THROW(ft::LoadCsv(TempFile("empty.csv", "a,y\n1,2\n,3\n4,5\n"), opt), ft::DataError);
}

TEST(LoadCsv, WriteRoundTrip) {
  ft::FriedmanOptions o;
  o.n = 200;
  const ft::Dataset d = ft::GenerateFriedman(o);
  const auto path = (std::filesystem::temp_directory_path() / "functree_rt.csv").string();
  ft::WriteCsv(d, path, "y");
  ft::CsvOptions opt;
  opt.target = "y";
  const ft::Dataset e = ft::LoadCsv(path, opt);
  ASSERT_EQ(e.variables(), d.variables());
  for (std::size_t j = 0; j < d.cols(); ++j) {
    for (std::size_t i = 0; i < d.rows(); ++i) ASSERT_EQ(e.at(i, j), d.at(i, j));
  }
  for (std::size_t i = 0; i < d.rows(); ++i) {
    ASSERT_EQ(e.outcome()[i], d.outcome()[i]);
    ASSERT_EQ(e.truth()[i], d.truth()[i]);
  }
}

TEST(Friedman, TargetAtOrigin) {
  const std::vector<double> x(8, 0.0);
  EXPECT_NEAR(ft::FriedmanTarget(x), -0.72, 1e-12);
}

TEST(Friedman, NoiseRatioMatchesSnr) {
  const ft::Dataset d = ft::GenerateFriedman({});
  std::vector<double> noise(d.rows());
  for (std::size_t i = 0; i < d.rows(); ++i) noise[i] = d.outcome()[i] - d.truth()[i];
  auto var = [](std::span<const double> v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
  };
  EXPECT_NEAR(var(noise) / var(d.truth()), 0.25, 0.025);
}

TEST(Friedman, InfiniteSnrIsNoiseless) {
  ft::FriedmanOptions o;
  o.n = 100;
  o.snr = std::numeric_limits<double>::infinity();
  const ft::Dataset d = ft::GenerateFriedman(o);
  for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_EQ(d.outcome()[i], d.truth()[i]);
}

TEST(Friedman, DeterministicForSeed) {
  ft::FriedmanOptions o;
  o.n = 50;
  o.seed = 9;
  const ft::Dataset a = ft::GenerateFriedman(o), b = ft::GenerateFriedman(o);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    EXPECT_EQ(a.outcome()[i], b.outcome()[i]);
    EXPECT_EQ(a.at(i, 3), b.at(i, 3));
  }
}

TEST(Hu, TargetAtOrigin) {
  const std::vector<double> x(30, 0.0);
  EXPECT_EQ(ft::HuTarget(x), 0.0);
}

TEST(Hu, CorrelationAndClipping) {
  const ft::Dataset d = ft::GenerateHu({});
  const double r = Corr(d.column(0), d.column(1));
  EXPECT_GE(r, 0.45);
  EXPECT_LE(r, 0.55);
  EXPECT_NEAR(Corr(d.column(0), d.column(25)), 0.0, 0.05);
  EXPECT_NEAR(Corr(d.column(22), d.column(27)), 0.5, 0.05);
  for (std::size_t j = 0; j < d.cols(); ++j) {
    for (double v : d.column(j)) {
      ASSERT_GE(v, -2.5);
      ASSERT_LE(v, 2.5);
    }
  }
}

TEST(Hu, ClassificationOutcomeIsBinary) {
  ft::HuOptions o;
  o.n = 500;
  o.mode = ft::HuMode::kClassification;
  const ft::Dataset d = ft::GenerateHu(o);
  for (double y : d.outcome()) EXPECT_TRUE(y == 0.0 || y == 1.0);
}

TEST(Rmse, Examples) {
  const std::vector<double> a{0, 2}, p{1, 1};
  EXPECT_DOUBLE_EQ(ft::Rmse(a, p), 1.0);
  const std::vector<double> y{1, 4, 2, 8};
  const std::vector<double> mean(4, 3.75);
  EXPECT_DOUBLE_EQ(ft::Rmse(y, mean), 1.0);
  EXPECT_EQ(ft::Rmse(y, y), 0.0);
  EXPECT_THROW(ft::Rmse(std::vector<double>{1, 1}, std::vector<double>{1, 1}), ft::ArgumentError);
}

TEST(RmseTarget, MeanPredictionGivesOne) {
  const std::vector<double> t{1, 4, 2, 8};
  EXPECT_DOUBLE_EQ(ft::RmseTarget(t, std::vector<double>(4, 3.75)), 1.0);
  EXPECT_EQ(ft::RmseTarget(t, t), 0.0);
}

TEST(Dataset, SplitIsDeterministicAndDisjoint) {
  ft::FriedmanOptions o;
  o.n = 101;
  const ft::Dataset d = ft::GenerateFriedman(o);
  const auto [tr, te] = d.split_indices({0.2, 5});
  const auto [tr2, te2] = d.split_indices({0.2, 5});
  EXPECT_EQ(tr, tr2);
  EXPECT_EQ(te.size(), 20u);
  EXPECT_EQ(tr.size() + te.size(), 101u);
  std::vector<std::size_t> all(tr);
  all.insert(all.end(), te.begin(), te.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
}

TEST(Dataset, RejectsInvalidLevel) {
  ft::Variable v{"c", ft::VariableKind::kCategorical, {"a", "b"}};
  EXPECT_THROW(ft::Dataset({v}, {{0, 2}}, {1, 2}), ft::Error);
}
