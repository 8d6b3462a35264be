#ifndef FUNCTREE_TESTS_TEST_UTIL_H_
#define FUNCTREE_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "functree/dataset.h"
#include "functree/tree.h"

namespace testutil {

namespace ft = functree;

inline std::string TempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("functree_" + name)).string();
}

inline std::vector<ft::Variable> NumericVars(std::size_t p) {
  std::vector<ft::Variable> vars(p);
  for (std::size_t j = 0; j < p; ++j) vars[j].name = "x" + std::to_string(j + 1);
  return vars;
}

/// n rows of p uniform(-1, 1) predictors with y = f(row).
inline ft::Dataset UniformData(std::size_t n, std::size_t p, std::uint64_t seed,
                               const std::function<double(const std::vector<double>&)>& f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<double>> cols(p, std::vector<double>(n));
  std::vector<double> y(n);
  std::vector<double> row(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) row[j] = cols[j][i] = u(rng);
    y[i] = f(row);
  }
  auto vars = NumericVars(p);
  for (std::size_t j = 0; j < p; ++j) {
    vars[j].min = *std::min_element(cols[j].begin(), cols[j].end());
    vars[j].max = *std::max_element(cols[j].begin(), cols[j].end());
  }
  return ft::Dataset(std::move(vars), std::move(cols), std::move(y));
}

inline ft::UnivariateFunction Linear(double a, double b) {
  return ft::UnivariateFunction(ft::Curve{{-10.0, 10.0}, {a - 10.0 * b, a + 10.0 * b}});
}

/// Random curve with a few knots in [-1.2, 1.2].
inline ft::UnivariateFunction RandomCurve(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nk(2, 6);
  std::uniform_real_distribution<double> kx(-1.2, 1.2), kv(-2.0, 2.0);
  std::vector<double> knots(static_cast<std::size_t>(nk(rng)));
  for (auto& k : knots) k = kx(rng);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  std::vector<double> values(knots.size());
  for (auto& v : values) v = kv(rng);
  return ft::UnivariateFunction(ft::Curve{knots, values});
}

/// Random tree with `nodes` nodes on p numeric variables. When max_order > 0
/// no path holds more than that many distinct variables.
inline ft::FunctionTree RandomTree(std::mt19937_64& rng, std::size_t p, int nodes, int max_order = 0) {
  std::vector<ft::TreeNode> list;
  std::vector<std::vector<int>> pathvars(1);
  std::uniform_int_distribution<int> var(0, static_cast<int>(p) - 1);
  for (int id = 1; id <= nodes; ++id) {
    std::uniform_int_distribution<int> parent(0, id - 1);
    int par = 0, v = 0;
    for (int tries = 0;; ++tries) {
      par = parent(rng);
      v = var(rng);
      auto vars = pathvars[static_cast<std::size_t>(par)];
      if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
      if (max_order == 0 || static_cast<int>(vars.size()) <= max_order || tries > 100) {
        if (max_order != 0 && static_cast<int>(vars.size()) > max_order) {
          par = 0;
        }
        break;
      }
    }
    auto vars = pathvars[static_cast<std::size_t>(par)];
    if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);
    pathvars.push_back(vars);
    ft::TreeNode node;
    node.id = id;
    node.parent = par;
    node.var = v;
    node.func = RandomCurve(rng);
    list.push_back(std::move(node));
  }
  std::uniform_real_distribution<double> b(-1.0, 1.0);
  return ft::FunctionTree(NumericVars(p), b(rng), std::move(list));
}

inline double MaxAbsDiff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testutil

#endif  // FUNCTREE_TESTS_TEST_UTIL_H_
