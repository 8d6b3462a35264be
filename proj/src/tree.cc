#include "functree/tree.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "functree/error.h"
#include "json.hpp"

namespace functree {

FunctionTree::FunctionTree(std::vector<Variable> variables, double b0,
                           std::vector<TreeNode> nodes, TrainStats stats)
    : variables_(std::move(variables)), b0_(b0), nodes_(std::move(nodes)), stats_(stats) {
  if (!std::isfinite(b0_)) throw ModelFormatError("root constant is not finite");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& n = nodes_[i];
    const int id = static_cast<int>(i) + 1;
    if (n.id != id) throw ModelFormatError("node ids must be 1..K in order");
    if (n.parent < 0 || n.parent >= id) {
      throw ModelFormatError("node " + std::to_string(id) + " has an invalid parent");
    }
    if (n.var < 0 || n.var >= static_cast<int>(variables_.size())) {
      throw ModelFormatError("node " + std::to_string(id) + " references an unknown variable");
    }
    if (variables_[static_cast<std::size_t>(n.var)].is_categorical() != n.func.is_level_table()) {
      throw ModelFormatError("node " + std::to_string(id) +
                             " function kind does not match its variable");
    }
    if (!(n.influence >= 0.0)) throw ModelFormatError("node influence must be nonnegative");
  }
  stats_.node_count = nodes_.size();
}

double FunctionTree::Predict(std::span<const double> row) const {
  thread_local std::vector<double> basis;
  basis.resize(nodes_.size() + 1);
  basis[0] = 1.0;
  double sum = b0_;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& n = nodes_[i];
    const double b = basis[static_cast<std::size_t>(n.parent)] * n.func(row[static_cast<std::size_t>(n.var)]);
    basis[i + 1] = b;
    sum += b;
  }
  return sum;
}

std::vector<double> FunctionTree::Predict(const Dataset& data) const {
  CheckSchema(data);
  std::vector<double> out(data.rows(), b0_);
  std::vector<std::vector<double>> basis = BasisValues(data);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    double sum = b0_;
    for (const auto& col : basis) sum += col[i];
    out[i] = sum;
  }
  return out;
}

std::vector<std::vector<double>> FunctionTree::BasisValues(const Dataset& data) const {
  CheckSchema(data);
  const std::size_t n = data.rows();
  std::vector<std::vector<double>> basis(nodes_.size(), std::vector<double>(n));
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const TreeNode& node = nodes_[k];
    const auto x = data.column(static_cast<std::size_t>(node.var));
    if (node.parent == kRootId) {
      for (std::size_t i = 0; i < n; ++i) basis[k][i] = 1.0 * node.func(x[i]);
    } else {
      const auto& parent = basis[static_cast<std::size_t>(node.parent - 1)];
      for (std::size_t i = 0; i < n; ++i) basis[k][i] = parent[i] * node.func(x[i]);
    }
  }
  return basis;
}

std::vector<int> FunctionTree::Path(int id) const {
  if (id <= kRootId || id > static_cast<int>(nodes_.size())) {
    throw ArgumentError("path of invalid node id " + std::to_string(id));
  }
  std::vector<int> path;
  for (int k = id; k != kRootId; k = node(k).parent) path.push_back(k);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<int> FunctionTree::PathVariables(int id) const {
  std::set<int> vars;
  for (int k : Path(id)) vars.insert(node(k).var);
  return {vars.begin(), vars.end()};
}

int FunctionTree::InteractionOrder(int id) const {
  if (id == kRootId) throw ArgumentError("the root has no interaction order");
  return static_cast<int>(PathVariables(id).size());
}

std::vector<std::vector<int>> FunctionTree::Children() const {
  std::vector<std::vector<int>> children(nodes_.size() + 1);
  for (const auto& n : nodes_) children[static_cast<std::size_t>(n.parent)].push_back(n.id);
  return children;
}

void FunctionTree::CheckSchema(const Dataset& data) const {
  if (data.cols() != variables_.size()) {
    throw SchemaError("dataset has " + std::to_string(data.cols()) +
                      " predictors, model expects " + std::to_string(variables_.size()));
  }
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    const Variable& a = variables_[j];
    const Variable& b = data.variable(j);
    if (a.name != b.name || a.kind != b.kind || a.levels != b.levels) {
      throw SchemaError("predictor " + std::to_string(j + 1) + " ('" + b.name +
                        "') does not match model variable '" + a.name + "'");
    }
  }
}

ModelDifference::ModelDifference(const FunctionTree& a, const FunctionTree& b) : a_(a), b_(b) {
  const auto& va = a.variables();
  const auto& vb = b.variables();
  bool same = va.size() == vb.size();
  for (std::size_t j = 0; same && j < va.size(); ++j) {
    same = va[j].name == vb[j].name && va[j].kind == vb[j].kind && va[j].levels == vb[j].levels;
  }
  if (!same) throw SchemaError("models were trained on different variable schemas");
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string JsonString(const std::string& s) {
  std::string out = "\"";
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  return out + "\"";
}

std::string RealArray(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += FormatReal(v[i]);
  }
  return out + "]";
}

std::string StringArray(const std::vector<std::string>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += JsonString(v[i]);
  }
  return out + "]";
}

}  // namespace

std::string FunctionTree::ToJson() const {
  std::ostringstream out;
  out << "{\n  \"format_version\": " << kModelFormatVersion << ",\n";
  out << "  \"b0\": " << FormatReal(b0_) << ",\n";
  out << "  \"variables\": [";
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    const Variable& v = variables_[j];
    out << (j ? ",\n    " : "\n    ") << "{\"name\": " << JsonString(v.name) << ", \"kind\": ";
    if (v.is_categorical()) {
      out << "\"categorical\", \"levels\": " << StringArray(v.levels) << "}";
    } else {
      out << "\"numeric\", \"range\": [" << FormatReal(v.min) << "," << FormatReal(v.max) << "]}";
    }
  }
  out << "\n  ],\n  \"nodes\": [";
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const TreeNode& n = nodes_[k];
    out << (k ? ",\n    " : "\n    ") << "{\"id\": " << n.id << ", \"parent\": " << n.parent
        << ", \"var\": " << n.var << ", ";
    if (n.func.is_level_table()) {
      const auto& t = n.func.level_table();
      out << "\"kind\": \"levels\", \"levels\": "
          << StringArray(variables_[static_cast<std::size_t>(n.var)].levels)
          << ", \"values\": " << RealArray(t.values)
          << ", \"default\": " << FormatReal(t.default_value);
    } else {
      const auto& c = n.func.curve();
      out << "\"kind\": \"curve\", \"knots\": " << RealArray(c.knots)
          << ", \"values\": " << RealArray(c.values);
    }
    out << ", \"influence\": " << FormatReal(n.influence) << "}";
  }
  out << "\n  ],\n  \"train_stats\": {\"train_rmse\": " << FormatReal(stats_.train_rmse)
      << ", \"test_rmse\": " << FormatReal(stats_.test_rmse)
      << ", \"node_count\": " << nodes_.size() << "}\n}\n";
  return out.str();
}

void FunctionTree::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file '" + path + "'");
  out << ToJson();
  if (!out) throw Error("write to '" + path + "' failed");
}

FunctionTree FunctionTree::FromJson(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("malformed model file: ") + e.what());
  }
  try {
    if (!doc.contains("format_version")) throw ModelFormatError("model file has no format_version");
    const auto& version = doc.at("format_version");
    if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion) {
      throw ModelFormatError("unsupported model format version " + version.dump() +
                             " (expected " + std::to_string(kModelFormatVersion) + ")");
    }
    std::vector<Variable> vars;
    for (const auto& jv : doc.at("variables")) {
      Variable v;
      v.name = jv.at("name").get<std::string>();
      const std::string kind = jv.at("kind").get<std::string>();
      if (kind == "categorical") {
        v.kind = VariableKind::kCategorical;
        v.levels = jv.at("levels").get<std::vector<std::string>>();
      } else if (kind == "numeric") {
        v.kind = VariableKind::kNumeric;
        const auto range = jv.at("range").get<std::vector<double>>();
        if (range.size() != 2) throw ModelFormatError("numeric range needs two values");
        v.min = range[0];
        v.max = range[1];
      } else {
        throw ModelFormatError("unknown variable kind '" + kind + "'");
      }
      vars.push_back(std::move(v));
    }
    std::vector<TreeNode> nodes;
    for (const auto& jn : doc.at("nodes")) {
      TreeNode n;
      n.id = jn.at("id").get<int>();
      n.parent = jn.at("parent").get<int>();
      n.var = jn.at("var").get<int>();
      const std::string kind = jn.at("kind").get<std::string>();
      if (kind == "levels") {
        LevelTable t;
        t.values = jn.at("values").get<std::vector<double>>();
        t.default_value = jn.at("default").get<double>();
        n.func = UnivariateFunction(std::move(t));
      } else if (kind == "curve") {
        Curve c;
        c.knots = jn.at("knots").get<std::vector<double>>();
        c.values = jn.at("values").get<std::vector<double>>();
        n.func = UnivariateFunction(std::move(c));
      } else {
        throw ModelFormatError("unknown node function kind '" + kind + "'");
      }
      n.influence = jn.at("influence").get<double>();
      nodes.push_back(std::move(n));
    }
    TrainStats stats;
    if (doc.contains("train_stats")) {
      const auto& s = doc.at("train_stats");
      stats.train_rmse = s.value("train_rmse", 0.0);
      stats.test_rmse = s.value("test_rmse", 0.0);
    }
    return FunctionTree(std::move(vars), doc.at("b0").get<double>(), std::move(nodes), stats);
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(std::string("malformed model file: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ModelFormatError(std::string("invalid node function: ") + e.what());
  }
}

FunctionTree FunctionTree::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return FromJson(buf.str());
}

}  // namespace functree
