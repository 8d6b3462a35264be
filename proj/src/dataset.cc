#include "functree/dataset.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "functree/error.h"
#include "functree/random.h"

namespace functree {

Dataset::Dataset(std::vector<Variable> variables,
                 std::vector<std::vector<double>> columns,
                 std::vector<double> outcome, std::vector<double> weight,
                 std::optional<std::vector<double>> truth)
    : variables_(std::move(variables)),
      columns_(std::move(columns)),
      outcome_(std::move(outcome)),
      weight_(std::move(weight)),
      truth_(std::move(truth)) {
  if (variables_.empty()) throw DataError("dataset needs at least one predictor");
  if (columns_.size() != variables_.size()) {
    throw DataError("column count does not match variable count");
  }
  rows_ = columns_.front().size();
  if (rows_ < 2) throw DataError("dataset needs at least two rows");
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].size() != rows_) throw DataError("ragged columns");
    const Variable& v = variables_[j];
    for (double cell : columns_[j]) {
      if (!std::isfinite(cell)) {
        throw DataError("non-finite cell in column '" + v.name + "'");
      }
      if (v.is_categorical()) {
        const bool unseen = cell == kUnseenLevel;
        if (!unseen && (cell < 0 || cell >= static_cast<double>(v.levels.size()) ||
                        cell != std::floor(cell))) {
          throw DataError("invalid level index in column '" + v.name + "'");
        }
      }
    }
  }
  if (!outcome_.empty() && outcome_.size() != rows_) {
    throw DataError("outcome length does not match row count");
  }
  if (weight_.empty()) weight_.assign(rows_, 1.0);
  if (weight_.size() != rows_) throw DataError("weight length mismatch");
  for (double w : weight_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("weights must be finite and nonnegative");
  }
  if (truth_ && truth_->size() != rows_) throw DataError("truth length mismatch");
}

std::optional<std::size_t> Dataset::find_variable(std::string_view name) const {
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    if (variables_[j].name == name) return j;
  }
  return std::nullopt;
}

std::vector<double> Dataset::row(std::size_t i) const {
  std::vector<double> out(cols());
  row(i, out);
  return out;
}

void Dataset::row(std::size_t i, std::span<double> out) const {
  for (std::size_t j = 0; j < columns_.size(); ++j) out[j] = columns_[j][i];
}

std::span<const double> Dataset::truth() const {
  if (!truth_) throw DataError("dataset has no noiseless target column");
  return *truth_;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<std::vector<double>> cols(columns_.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    cols[j].reserve(rows.size());
    for (std::size_t i : rows) cols[j].push_back(columns_[j].at(i));
  }
  auto pick = [&](const std::vector<double>& v) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t i : rows) out.push_back(v[i]);
    return out;
  };
  std::vector<double> y = outcome_.empty() ? std::vector<double>{} : pick(outcome_);
  std::optional<std::vector<double>> t;
  if (truth_) t = pick(*truth_);
  return Dataset(variables_, std::move(cols), std::move(y), pick(weight_),
                 std::move(t));
}

Dataset Dataset::with_constant_column(std::size_t j, double value) const {
  Dataset copy = *this;
  std::fill(copy.columns_.at(j).begin(), copy.columns_.at(j).end(), value);
  return copy;
}

Dataset Dataset::with_outcome(std::vector<double> outcome) const {
  Dataset copy = *this;
  if (outcome.size() != rows_) throw DataError("outcome length mismatch");
  copy.outcome_ = std::move(outcome);
  return copy;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
Dataset::split_indices(const SplitSpec& spec) const {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    throw ArgumentError("test_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(rows_);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = MakeRng(spec.seed, 0x5917);
  // Fisher-Yates with an explicit draw so the permutation does not depend on
  // the standard library's shuffle implementation.
  for (std::size_t i = rows_ - 1; i > 0; --i) {
    const std::size_t k = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(order[i], order[k]);
  }
  std::size_t n_test = static_cast<std::size_t>(
      std::llround(spec.test_fraction * static_cast<double>(rows_)));
  n_test = std::clamp<std::size_t>(n_test, 1, rows_ - 1);
  std::vector<std::size_t> test(order.begin(), order.begin() + n_test);
  std::vector<std::size_t> train(order.begin() + n_test, order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> Dataset::split(const SplitSpec& spec) const {
  auto [train, test] = split_indices(spec);
  return {subset(train), subset(test)};
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(" \t\r");
    const auto e = f.find_last_not_of(" \t\r");
    f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
  }
  return fields;
}

bool IsMissingToken(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "?";
}

std::optional<double> ParseReal(const std::string& s) {
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> cells;  // column-major
  std::size_t rows = 0;
};

RawTable ReadRaw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  RawTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    t.header = SplitCsvLine(line);
    break;
  }
  if (t.header.empty()) throw DataError("'" + path + "' has no header row");
  if (t.header.size() >= 1 && t.header[0].rfind("\xEF\xBB\xBF", 0) == 0) {
    t.header[0].erase(0, 3);  // UTF-8 byte order mark
  }
  t.cells.resize(t.header.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = SplitCsvLine(line);
    if (fields.size() != t.header.size()) {
      throw DataError("'" + path + "' line " + std::to_string(line_no) +
                      ": expected " + std::to_string(t.header.size()) +
                      " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (IsMissingToken(fields[j])) {
        throw DataError("'" + path + "' line " + std::to_string(line_no) +
                        ": missing value in column '" + t.header[j] + "'");
      }
      t.cells[j].push_back(std::move(fields[j]));
    }
    ++t.rows;
  }
  return t;
}

std::optional<std::size_t> FindColumn(const RawTable& t, const std::string& name) {
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (t.header[j] == name) return j;
  }
  return std::nullopt;
}

std::vector<double> ParseNumericColumn(const RawTable& t, std::size_t j,
                                       const std::string& what) {
  std::vector<double> out;
  out.reserve(t.rows);
  for (std::size_t i = 0; i < t.rows; ++i) {
    auto v = ParseReal(t.cells[j][i]);
    if (!v) {
      throw DataError("unparseable " + what + " value '" + t.cells[j][i] +
                      "' in column '" + t.header[j] + "' row " +
                      std::to_string(i + 1));
    }
    out.push_back(*v);
  }
  return out;
}

// Sorted level list: numerically when every token parses, else lexically.
std::vector<std::string> SortedLevels(const std::vector<std::string>& tokens) {
  std::set<std::string> distinct(tokens.begin(), tokens.end());
  std::vector<std::string> levels(distinct.begin(), distinct.end());
  const bool all_numeric = std::all_of(levels.begin(), levels.end(),
                                       [](const std::string& s) { return ParseReal(s).has_value(); });
  if (all_numeric) {
    std::stable_sort(levels.begin(), levels.end(),
                     [](const std::string& a, const std::string& b) {
                       return *ParseReal(a) < *ParseReal(b);
                     });
  }
  return levels;
}

}  // namespace

Dataset LoadCsv(const std::string& path, const CsvOptions& options) {
  RawTable t = ReadRaw(path);
  if (t.rows < 2) throw DataError("'" + path + "' needs at least two data rows");
  const auto target = FindColumn(t, options.target);
  if (!target) throw DataError("target not found: '" + options.target + "'");
  std::optional<std::size_t> weight_col;
  if (!options.weight_column.empty()) {
    weight_col = FindColumn(t, options.weight_column);
    if (!weight_col) throw DataError("weight column not found: '" + options.weight_column + "'");
  }
  const auto truth_col = FindColumn(t, kTruthColumn);

  std::vector<Variable> vars;
  std::vector<std::vector<double>> cols;
  for (std::size_t j = 0; j < t.header.size(); ++j) {
    if (j == *target || j == weight_col || j == truth_col) continue;
    if (std::find(options.ignore_columns.begin(), options.ignore_columns.end(), t.header[j]) !=
        options.ignore_columns.end()) {
      continue;
    }
    const auto& tokens = t.cells[j];
    Variable v;
    v.name = t.header[j];
    const bool forced = std::find(options.categorical_override.begin(),
                                  options.categorical_override.end(),
                                  v.name) != options.categorical_override.end();
    bool numeric = !forced;
    std::vector<double> values;
    if (numeric) {
      values.reserve(t.rows);
      for (const auto& tok : tokens) {
        auto x = ParseReal(tok);
        if (!x) {
          numeric = false;
          break;
        }
        values.push_back(*x);
      }
    }
    std::set<std::string> distinct_tokens(tokens.begin(), tokens.end());
    if (numeric) {
      std::set<double> distinct(values.begin(), values.end());
      if (distinct.size() <= 1) {
        Warn("column '" + v.name + "' has a single distinct value; dropped");
        continue;
      }
      if (distinct.size() <= options.categorical_threshold) numeric = false;
    } else if (distinct_tokens.size() <= 1) {
      Warn("column '" + v.name + "' has a single distinct value; dropped");
      continue;
    }
    if (numeric) {
      v.kind = VariableKind::kNumeric;
      v.min = *std::min_element(values.begin(), values.end());
      v.max = *std::max_element(values.begin(), values.end());
      cols.push_back(std::move(values));
    } else {
      v.kind = VariableKind::kCategorical;
      v.levels = SortedLevels(tokens);
      std::map<std::string, double> index;
      for (std::size_t l = 0; l < v.levels.size(); ++l) index[v.levels[l]] = static_cast<double>(l);
      std::vector<double> codes;
      codes.reserve(t.rows);
      for (const auto& tok : tokens) codes.push_back(index.at(tok));
      cols.push_back(std::move(codes));
    }
    vars.push_back(std::move(v));
  }
  if (vars.empty()) throw DataError("no usable predictor columns in '" + path + "'");
  std::vector<double> y = ParseNumericColumn(t, *target, "target");
  std::vector<double> w;
  if (weight_col) w = ParseNumericColumn(t, *weight_col, "weight");
  std::optional<std::vector<double>> truth;
  if (truth_col) truth = ParseNumericColumn(t, *truth_col, "truth");
  return Dataset(std::move(vars), std::move(cols), std::move(y), std::move(w),
                 std::move(truth));
}

Dataset LoadCsvWithSchema(const std::string& path,
                          const std::vector<Variable>& schema,
                          const std::string& target,
                          const std::string& weight_column) {
  RawTable t = ReadRaw(path);
  if (t.rows < 2) throw DataError("'" + path + "' needs at least two data rows");
  std::vector<std::vector<double>> cols;
  for (const Variable& v : schema) {
    const auto j = FindColumn(t, v.name);
    if (!j) throw SchemaError("column '" + v.name + "' required by the model is missing");
    if (v.is_categorical()) {
      std::map<std::string, double> index;
      for (std::size_t l = 0; l < v.levels.size(); ++l) index[v.levels[l]] = static_cast<double>(l);
      std::vector<double> codes;
      codes.reserve(t.rows);
      bool warned = false;
      for (const auto& tok : t.cells[*j]) {
        auto it = index.find(tok);
        if (it == index.end()) {
          // Numeric spellings such as "2" vs "2.0" still match by value.
          auto x = ParseReal(tok);
          double code = kUnseenLevel;
          if (x) {
            for (const auto& [name, l] : index) {
              auto y = ParseReal(name);
              if (y && *y == *x) code = l;
            }
          }
          if (code == kUnseenLevel && !warned) {
            Warn("column '" + v.name + "' has level '" + tok + "' not seen in training");
            warned = true;
          }
          codes.push_back(code);
        } else {
          codes.push_back(it->second);
        }
      }
      cols.push_back(std::move(codes));
    } else {
      cols.push_back(ParseNumericColumn(t, *j, "predictor"));
    }
  }
  std::vector<double> y;
  if (!target.empty()) {
    const auto tj = FindColumn(t, target);
    if (!tj) throw DataError("target not found: '" + target + "'");
    y = ParseNumericColumn(t, *tj, "target");
  }
  std::vector<double> w;
  if (!weight_column.empty()) {
    const auto wj = FindColumn(t, weight_column);
    if (!wj) throw DataError("weight column not found: '" + weight_column + "'");
    w = ParseNumericColumn(t, *wj, "weight");
  }
  std::optional<std::vector<double>> truth;
  if (const auto tc = FindColumn(t, kTruthColumn)) truth = ParseNumericColumn(t, *tc, "truth");
  return Dataset(schema, std::move(cols), std::move(y), std::move(w), std::move(truth));
}

std::string FormatReal(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

namespace {

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  return out + "\"";
}

}  // namespace

void WriteCsv(const Dataset& data, const std::string& path,
              const std::string& target) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  const bool weighted = std::any_of(data.weight().begin(), data.weight().end(),
                                    [](double w) { return w != 1.0; });
  std::vector<std::string> header;
  for (const auto& v : data.variables()) header.push_back(CsvField(v.name));
  if (data.labeled()) header.push_back(CsvField(target));
  if (weighted) header.push_back("__weight__");
  if (data.has_truth()) header.push_back(kTruthColumn);
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t j = 0; j < data.cols(); ++j) {
      if (j) out << ',';
      const Variable& v = data.variable(j);
      const double cell = data.at(i, j);
      if (v.is_categorical()) {
        if (cell == kUnseenLevel) throw DataError("cannot write an unseen categorical level");
        out << CsvField(v.levels[static_cast<std::size_t>(cell)]);
      } else {
        out << FormatReal(cell);
      }
    }
    if (data.labeled()) out << ',' << FormatReal(data.outcome()[i]);
    if (weighted) out << ',' << FormatReal(data.weight()[i]);
    if (data.has_truth()) out << ',' << FormatReal(data.truth()[i]);
    out << '\n';
  }
  if (!out) throw DataError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Generators

namespace {

std::vector<Variable> NumericVariables(std::size_t p,
                                       const std::vector<std::vector<double>>& cols) {
  std::vector<Variable> vars(p);
  for (std::size_t j = 0; j < p; ++j) {
    vars[j].name = "x" + std::to_string(j + 1);
    vars[j].kind = VariableKind::kNumeric;
    vars[j].min = *std::min_element(cols[j].begin(), cols[j].end());
    vars[j].max = *std::max_element(cols[j].begin(), cols[j].end());
  }
  return vars;
}

double PopulationVariance(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / n;
}

}  // namespace

double FriedmanTarget(std::span<const double> x) {
  using std::numbers::pi;
  return 4.0 * std::sin(pi * x[0]) * std::cos(pi * x[1]) + 7.0 * x[2] * x[2] +
         15.0 * (x[3] + 0.4) * (x[4] - 0.6) * (x[5] + 0.2) +
         5.0 * std::sin(pi * (x[6] + 0.1) * x[7]);
}

Dataset GenerateFriedman(const FriedmanOptions& options) {
  if (options.n < 2) throw ArgumentError("gen_friedman: n must be at least 2");
  if (!(options.sd_x > 0.0)) throw ArgumentError("gen_friedman: sd_x must be positive");
  if (!(options.snr > 0.0)) throw ArgumentError("gen_friedman: snr must be positive");
  constexpr std::size_t p = 8;
  Rng rng = MakeRng(options.seed, 0xF1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> cols(p, std::vector<double>(options.n));
  std::vector<double> truth(options.n);
  std::array<double, p> x{};
  for (std::size_t i = 0; i < options.n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      x[j] = options.sd_x * normal(rng);
      cols[j][i] = x[j];
    }
    truth[i] = FriedmanTarget(x);
  }
  const double noise_sd =
      std::isinf(options.snr) ? 0.0 : std::sqrt(PopulationVariance(truth)) / options.snr;
  std::vector<double> y(options.n);
  for (std::size_t i = 0; i < options.n; ++i) {
    const double e = normal(rng);
    y[i] = truth[i] + noise_sd * e;
  }
  auto vars = NumericVariables(p, cols);
  return Dataset(std::move(vars), std::move(cols), std::move(y), {}, std::move(truth));
}

double HuTarget(std::span<const double> x) {
  auto pos = [](double v) { return v > 0.0 ? 1.0 : 0.0; };
  double g = x[0] + x[1] + x[2] + x[3] + x[4];
  g += 0.5 * (x[5] * x[5] + x[6] * x[6] + x[7] * x[7]);
  g += x[8] * pos(x[8]) + x[9] * pos(x[9]);
  g += x[0] * x[1] + x[0] * x[2] + x[1] * x[2] + 0.5 * x[0] * x[1] * x[2];
  g += x[3] * x[4] + x[3] * x[5] + x[4] * x[5] + 0.5 * pos(x[3]) * x[4] * x[5];
  return g;
}

Dataset GenerateHu(const HuOptions& options) {
  if (options.n < 2) throw ArgumentError("gen_hu: n must be at least 2");
  constexpr std::size_t p = 30;
  constexpr double kClip = 2.5;
  const double a = std::sqrt(0.5);
  Rng rng = MakeRng(options.seed, 0x40);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<std::vector<double>> cols(p, std::vector<double>(options.n));
  std::vector<double> truth(options.n), y(options.n);
  std::array<double, p> x{};
  for (std::size_t i = 0; i < options.n; ++i) {
    std::size_t j = 0;
    for (std::size_t block : {std::size_t{20}, std::size_t{10}}) {
      const double common = normal(rng);
      for (std::size_t b = 0; b < block; ++b, ++j) {
        const double v = a * common + a * normal(rng);
        x[j] = std::clamp(v, -kClip, kClip);
        cols[j][i] = x[j];
      }
    }
    truth[i] = HuTarget(x);
    if (options.mode == HuMode::kRegression) {
      y[i] = truth[i] + 0.5 * normal(rng);
    } else {
      const double prob = 1.0 / (1.0 + std::exp(-truth[i]));
      y[i] = uniform(rng) < prob ? 1.0 : 0.0;
    }
  }
  auto vars = NumericVariables(p, cols);
  return Dataset(std::move(vars), std::move(cols), std::move(y), {}, std::move(truth));
}

// ---------------------------------------------------------------------------
// Metrics

double Rmse(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) throw ArgumentError("rmse: length mismatch");
  if (actual.size() < 2) throw ArgumentError("rmse: need at least two values");
  const double mean =
      std::accumulate(actual.begin(), actual.end(), 0.0) / static_cast<double>(actual.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    num += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    den += (actual[i] - mean) * (actual[i] - mean);
  }
  if (!(den > 0.0)) throw ArgumentError("rmse: actual values are constant");
  return std::sqrt(num / den);
}

double RmseTarget(std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size()) throw ArgumentError("rmse_target: length mismatch");
  if (truth.empty()) throw ArgumentError("rmse_target: empty input");
  const double var = PopulationVariance(truth);
  if (!(var > 0.0)) throw ArgumentError("rmse_target: truth is constant");
  double mse = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    mse += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
  }
  mse /= static_cast<double>(truth.size());
  return std::sqrt(mse / var);
}

}  // namespace functree
