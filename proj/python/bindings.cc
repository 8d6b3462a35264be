#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "functree/dataset.h"
#include "functree/error.h"
#include "functree/fit.h"
#include "functree/interactions.h"
#include "functree/pdengine.h"
#include "functree/tree.h"

#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)

namespace py = pybind11;
using namespace pybind11::literals;
namespace ft = functree;

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

namespace {

ft::Dataset FromArrays(Array x, std::optional<Array> y, std::optional<std::vector<std::string>> names) {
  if (x.ndim() != 2) throw ft::ArgumentError("X must be a 2-d array");
  const auto n = static_cast<std::size_t>(x.shape(0));
  const auto p = static_cast<std::size_t>(x.shape(1));
  auto xv = x.unchecked<2>();
  std::vector<ft::Variable> vars(p);
  std::vector<std::vector<double>> cols(p, std::vector<double>(n));
  for (std::size_t j = 0; j < p; ++j) {
    vars[j].name = names ? names->at(j) : "x" + std::to_string(j + 1);
    for (std::size_t i = 0; i < n; ++i) cols[j][i] = xv(i, j);
    if (n) {
      vars[j].min = *std::min_element(cols[j].begin(), cols[j].end());
      vars[j].max = *std::max_element(cols[j].begin(), cols[j].end());
    }
  }
  if (names && names->size() != p) throw ft::ArgumentError("names must match the columns of X");
  std::vector<double> outcome;
  if (y) {
    if (y->ndim() != 1 || static_cast<std::size_t>(y->shape(0)) != n) {
      throw ft::ArgumentError("y must be a 1-d array with one value per row");
    }
    outcome.assign(y->data(), y->data() + n);
  }
  return ft::Dataset(std::move(vars), std::move(cols), std::move(outcome));
}

Array Matrix(const ft::Dataset& d) {
  Array out({d.rows(), d.cols()});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) v(i, j) = d.at(i, j);
  }
  return out;
}

Array Vector(std::span<const double> v) { return Array(static_cast<py::ssize_t>(v.size()), v.data()); }

Array Points(const ft::Points& pts, std::size_t dim) {
  Array out({pts.size(), dim});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    for (std::size_t m = 0; m < dim; ++m) v(k, m) = pts[k][m];
  }
  return out;
}

std::vector<int> Subset(const ft::Dataset& data, const std::vector<std::string>& names) {
  std::vector<int> s;
  for (const auto& name : names) {
    const auto j = data.find_variable(name);
    if (!j) throw ft::ArgumentError("unknown variable '" + name + "'");
    s.push_back(static_cast<int>(*j));
  }
  return s;
}

py::tuple GridTuple(const ft::EffectGrid& g) {
  return py::make_tuple(Points(g.points, g.subset.size()), Vector(g.values));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Function tree models and their interaction effects";

  static py::exception<ft::Error> error(m, "FunctreeError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ft::ArgumentError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const ft::Error& e) {
      error(e.what());
    }
  });

  py::class_<ft::Dataset>(m, "Dataset")
      .def(py::init(&FromArrays), "X"_a, "y"_a = py::none(), "names"_a = py::none())
      .def_property_readonly("rows", &ft::Dataset::rows)
      .def_property_readonly("cols", &ft::Dataset::cols)
      .def_property_readonly("names",
                             [](const ft::Dataset& d) {
                               std::vector<std::string> out;
                               for (const auto& v : d.variables()) out.push_back(v.name);
                               return out;
                             })
      .def_property_readonly("X", &Matrix)
      .def_property_readonly("y", [](const ft::Dataset& d) { return Vector(d.outcome()); })
      .def_property_readonly("truth", [](const ft::Dataset& d) -> py::object {
        if (!d.has_truth()) return py::none();
        return Vector(d.truth());
      });

  m.def("gen_friedman",
        [](std::size_t n, std::uint64_t seed, double sd_x, double snr) {
          return ft::GenerateFriedman({n, seed, sd_x, snr});
        },
        "n"_a = 10000, "seed"_a = 1, "sd_x"_a = 0.5, "snr"_a = 2.0);
  m.def("gen_hu",
        [](std::size_t n, std::uint64_t seed, bool classification) {
          return ft::GenerateHu({n, seed, classification ? ft::HuMode::kClassification : ft::HuMode::kRegression});
        },
        "n"_a = 20000, "seed"_a = 1, "classification"_a = false);
  m.def("load_csv",
        [](const std::string& path, const std::string& target) {
          ft::CsvOptions opt;
          opt.target = target;
          return ft::LoadCsv(path, opt);
        },
        "path"_a, "target"_a = "y");
  m.def("rmse", [](Array a, Array b) {
    return ft::Rmse({a.data(), static_cast<std::size_t>(a.size())}, {b.data(), static_cast<std::size_t>(b.size())});
  });
  m.def("rmse_target", [](Array a, Array b) {
    return ft::RmseTarget({a.data(), static_cast<std::size_t>(a.size())},
                          {b.data(), static_cast<std::size_t>(b.size())});
  });

  py::class_<ft::FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("max_nodes", &ft::FitConfig::max_nodes)
      .def_readwrite("max_order", &ft::FitConfig::max_order)
      .def_readwrite("forbidden_subsets", &ft::FitConfig::forbidden_subsets)
      .def_readwrite("backfit_passes", &ft::FitConfig::backfit_passes)
      .def_readwrite("patience", &ft::FitConfig::patience)
      .def_readwrite("threads", &ft::FitConfig::threads)
      .def_property(
          "test_fraction", [](const ft::FitConfig& c) { return c.split.test_fraction; },
          [](ft::FitConfig& c, double v) { c.split.test_fraction = v; })
      .def_property(
          "seed", [](const ft::FitConfig& c) { return c.split.seed; },
          [](ft::FitConfig& c, std::uint64_t v) { c.split.seed = v; })
      .def_property(
          "smoother",
          [](const ft::FitConfig& c) {
            return c.numeric_smoother.method == ft::SmootherMethod::kNearNeighbor ? "near_neighbor"
                                                                                  : "local_linear";
          },
          [](ft::FitConfig& c, const std::string& name) {
            const double span = c.numeric_smoother.span;
            if (name == "near_neighbor") {
              c.numeric_smoother = ft::NearNeighborSmoother(span);
            } else if (name == "local_linear") {
              c.numeric_smoother = ft::LocalLinearSmoother(span);
            } else {
              throw ft::ArgumentError("unknown smoother '" + name + "'");
            }
          })
      .def_property(
          "span", [](const ft::FitConfig& c) { return c.numeric_smoother.span; },
          [](ft::FitConfig& c, double v) { c.numeric_smoother.span = v; });

  py::class_<ft::FunctionTree>(m, "FunctionTree")
      .def_property_readonly("b0", &ft::FunctionTree::b0)
      .def_property_readonly("size", &ft::FunctionTree::size)
      .def_property_readonly("train_rmse", [](const ft::FunctionTree& t) { return t.stats().train_rmse; })
      .def_property_readonly("test_rmse", [](const ft::FunctionTree& t) { return t.stats().test_rmse; })
      .def("interaction_order", &ft::FunctionTree::InteractionOrder, "node"_a)
      .def("predict", [](const ft::FunctionTree& t, const ft::Dataset& d) { return Vector(t.Predict(d)); })
      .def("predict",
           [](const ft::FunctionTree& t, Array x) {
             const auto d = FromArrays(x, std::nullopt, std::nullopt);
             if (d.cols() != t.variables().size()) throw ft::SchemaError("X has the wrong number of columns");
             return Vector(t.Predict(d));
           })
      .def("save", &ft::FunctionTree::Save, "path"_a)
      .def("to_json", &ft::FunctionTree::ToJson)
      .def_static("load", &ft::FunctionTree::Load, "path"_a)
      .def_static("from_json", &ft::FunctionTree::FromJson, "text"_a);

  m.def("fit", [](const ft::Dataset& d, const ft::FitConfig& c) { return ft::Fit(d, c); },
        "data"_a, "config"_a = ft::FitConfig{}, py::call_guard<py::gil_scoped_release>());
  m.def("backfit_pass", &ft::BackfitPass, "tree"_a, "data"_a, "config"_a = ft::FitConfig{});
  m.def("training_sse", &ft::TrainingSse, "tree"_a, "data"_a);

  m.def("pd",
        [](const ft::FunctionTree& t, const ft::Dataset& d, const std::vector<std::string>& vars,
           std::size_t grid) {
          const auto s = Subset(d, vars);
          return GridTuple(ft::PdFast(t, s, ft::DefaultPoints(d, s, grid), d));
        },
        "tree"_a, "data"_a, "vars"_a, "grid"_a = 50);
  m.def("pure_interaction",
        [](const ft::FunctionTree& t, const ft::Dataset& d, const std::vector<std::string>& vars,
           std::size_t grid) {
          const auto s = Subset(d, vars);
          return GridTuple(ft::PureInteraction(t, s, ft::DefaultPoints(d, s, grid), d));
        },
        "tree"_a, "data"_a, "vars"_a, "grid"_a = 50);
  m.def("conditional_interaction",
        [](const ft::FunctionTree& t, const ft::Dataset& d, const std::vector<std::string>& vars,
           const std::map<std::string, double>& cond, std::size_t grid) {
          const auto s = Subset(d, vars);
          ft::Condition c;
          for (const auto& [name, value] : cond) c.emplace_back(Subset(d, {name})[0], value);
          return GridTuple(ft::ConditionalInteraction(t, s, c, ft::DefaultPoints(d, s, grid), d));
        },
        "tree"_a, "data"_a, "vars"_a, "condition"_a, "grid"_a = 50);
  m.def("strength",
        [](const ft::FunctionTree& t, const ft::Dataset& d, const std::vector<std::string>& vars) {
          return ft::Strength(t, Subset(d, vars), d);
        },
        "tree"_a, "data"_a, "vars"_a);
  m.def("screen_h", py::overload_cast<const ft::FunctionTree&, const ft::Dataset&>(&ft::ScreenH),
        "tree"_a, "data"_a);
  m.def("screen_r", &ft::ScreenR, "tree"_a);
  m.def("search_effects",
        [](const ft::FunctionTree& t, const ft::Dataset& d, int max_order, bool use_screens, int threads) {
          ft::SearchOptions opt;
          opt.max_order = max_order;
          opt.use_screens = use_screens;
          opt.threads = threads;
          ft::EffectReport report;
          {
            py::gil_scoped_release release;
            report = ft::SearchEffects(t, d, opt);
          }
          py::list out;
          for (const auto& e : report.entries) {
            std::vector<std::string> names;
            for (int j : e.subset) names.push_back(d.variable(static_cast<std::size_t>(j)).name);
            out.append(py::dict("subset"_a = names, "order"_a = e.order, "strength"_a = e.strength));
          }
          return out;
        },
        "tree"_a, "data"_a, "max_order"_a = 3, "use_screens"_a = true, "threads"_a = 1);
  m.def("bootstrap_compare",
        [](const ft::Dataset& d, const std::vector<ft::FitConfig>& configs, int reps, std::uint64_t seed,
           int threads) {
          ft::BootstrapResult r;
          {
            py::gil_scoped_release release;
            r = ft::BootstrapCompare(d, configs, reps, seed, threads);
          }
          Array out({r.rmse.size(), static_cast<std::size_t>(reps)});
          auto v = out.mutable_unchecked<2>();
          for (std::size_t c = 0; c < r.rmse.size(); ++c) {
            for (std::size_t k = 0; k < r.rmse[c].size(); ++k) v(c, k) = r.rmse[c][k];
          }
          return out;
        },
        "data"_a, "configs"_a, "reps"_a = 20, "seed"_a = 1, "threads"_a = 1);

#ifdef VERSION_INFO
  m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif
}
