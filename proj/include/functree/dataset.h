#ifndef FUNCTREE_DATASET_H_
#define FUNCTREE_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace functree {

enum class VariableKind { kNumeric, kCategorical };

/// Column schema. Categorical cells hold a level index into `levels`;
/// numeric cells hold the value itself.
struct Variable {
  std::string name;
  VariableKind kind = VariableKind::kNumeric;
  std::vector<std::string> levels;  // categorical only
  double min = 0.0;                 // numeric only
  double max = 0.0;

  bool is_categorical() const { return kind == VariableKind::kCategorical; }

  friend bool operator==(const Variable&, const Variable&) = default;
};

/// Level index used for a categorical value that is not in the schema's
/// level list (only produced when loading data against an existing model).
inline constexpr double kUnseenLevel = -1.0;

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 1;
};

/// Immutable observation matrix with outcome, row weights and an optional
/// noiseless target (the "__truth__" column of generated data).
///
/// Storage is column-major; `row()` gathers one observation for prediction.
/// The outcome may be empty for unlabeled data that is only used as an
/// averaging distribution or for prediction.
class Dataset {
 public:
  Dataset(std::vector<Variable> variables,
          std::vector<std::vector<double>> columns, std::vector<double> outcome,
          std::vector<double> weight = {},
          std::optional<std::vector<double>> truth = std::nullopt);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return variables_.size(); }

  const std::vector<Variable>& variables() const { return variables_; }
  const Variable& variable(std::size_t j) const { return variables_.at(j); }
  std::optional<std::size_t> find_variable(std::string_view name) const;

  std::span<const double> column(std::size_t j) const { return columns_[j]; }
  double at(std::size_t i, std::size_t j) const { return columns_[j][i]; }
  std::vector<double> row(std::size_t i) const;
  void row(std::size_t i, std::span<double> out) const;

  bool labeled() const { return !outcome_.empty(); }
  std::span<const double> outcome() const { return outcome_; }
  std::span<const double> weight() const { return weight_; }
  bool has_truth() const { return truth_.has_value(); }
  std::span<const double> truth() const;

  /// Rows in the given order (duplicates allowed, as in bootstrap samples).
  Dataset subset(std::span<const std::size_t> rows) const;

  /// Copy with column j replaced by a constant (used to pin variables).
  Dataset with_constant_column(std::size_t j, double value) const;

  /// Copy with a different outcome vector (surrogate fitting).
  Dataset with_outcome(std::vector<double> outcome) const;

  /// Deterministic train/test partition: returns (train, test).
  std::pair<Dataset, Dataset> split(const SplitSpec& spec) const;
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
      const SplitSpec& spec) const;

 private:
  std::vector<Variable> variables_;
  std::vector<std::vector<double>> columns_;
  std::vector<double> outcome_;
  std::vector<double> weight_;
  std::optional<std::vector<double>> truth_;
  std::size_t rows_ = 0;
};

// ---------------------------------------------------------------------------
// CSV input/output.

inline constexpr const char* kTruthColumn = "__truth__";

struct CsvOptions {
  std::string target;
  std::vector<std::string> categorical_override;
  /// Numeric columns with at most this many distinct values become factors.
  std::size_t categorical_threshold = 10;
  /// Optional column of nonnegative row weights.
  std::string weight_column;
  /// Columns left out of the predictors.
  std::vector<std::string> ignore_columns;
};

/// Reads a comma-separated file with a header row. Types are inferred per
/// column. Missing cells are rejected. Constant predictor columns are dropped
/// with a warning. A "__truth__" column, when present, is kept as the hidden
/// noiseless target.
Dataset LoadCsv(const std::string& path, const CsvOptions& options);

/// Reads a CSV against an existing schema (e.g. a fitted model's variables).
/// Columns are matched by name; extra columns are ignored. `target` may be
/// empty, in which case the dataset is unlabeled. Unknown categorical values
/// map to kUnseenLevel with a warning.
Dataset LoadCsvWithSchema(const std::string& path,
                          const std::vector<Variable>& schema,
                          const std::string& target = {},
                          const std::string& weight_column = {});

/// Writes predictors, the outcome column (named `target`), the weight column
/// if any weight differs from 1, and "__truth__" when present. Reals use 17
/// significant digits.
void WriteCsv(const Dataset& data, const std::string& path,
              const std::string& target = "y");

/// Formats a real with 17 significant digits (lossless round trip).
std::string FormatReal(double value);

// ---------------------------------------------------------------------------
// Synthetic generators.

struct FriedmanOptions {
  std::size_t n = 10000;
  std::uint64_t seed = 1;
  double sd_x = 0.5;
  /// Signal-to-noise ratio in standard-deviation units; infinity gives y = F.
  double snr = 2.0;
};

/// 8 independent N(0, sd_x^2) predictors, target
/// F = 4 sin(pi x1) cos(pi x2) + 7 x3^2 + 15 (x4+.4)(x5-.6)(x6+.2)
///     + 5 sin(pi (x7+.1) x8),
/// and y = F + noise with noise variance var(F) / snr^2.
Dataset GenerateFriedman(const FriedmanOptions& options);
double FriedmanTarget(std::span<const double> x);

enum class HuMode { kRegression, kClassification };

struct HuOptions {
  std::size_t n = 20000;
  std::uint64_t seed = 1;
  HuMode mode = HuMode::kRegression;
};

/// 30 predictors: two independent equicorrelated (rho = 0.5) Gaussian blocks
/// of 20 and 10 variables, clipped to [-2.5, 2.5]. Regression adds N(0, 0.5^2)
/// noise to g(x); classification draws y ~ Bernoulli(1 / (1 + exp(-g(x)))).
Dataset GenerateHu(const HuOptions& options);
double HuTarget(std::span<const double> x);

// ---------------------------------------------------------------------------
// Fit metrics.

/// sqrt(sum (y - yhat)^2 / sum (y - mean y)^2).
double Rmse(std::span<const double> actual, std::span<const double> predicted);

/// sqrt(mean (g - ghat)^2 / var g), with var the population (1/N) variance.
double RmseTarget(std::span<const double> truth,
                  std::span<const double> predicted);

}  // namespace functree

#endif  // FUNCTREE_DATASET_H_
