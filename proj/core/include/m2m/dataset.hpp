#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "m2m/matrix.hpp"

namespace m2m {

/// Writes "m2m: warning: ..." to stderr. Degradations the pipeline survives
/// (skipped arms, uniform fallbacks, single-level categoricals) go through
/// here so long multi-seed runs stay loud but alive.
void warn(const std::string& message);

enum class ColumnKind { continuous, binary };

struct ColumnInfo {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  /// Name of the original categorical column this indicator was expanded
  /// from; empty for columns that were not produced by dummification.
  std::string parent_categorical;
};

/// Covariates after preprocessing (dummified, no missing values), a binary
/// treatment vector and an outcome vector. Immutable once built; safe to
/// share across threads.
struct Dataset {
  Matrix x;
  std::vector<int> t;
  std::vector<double> y;
  std::vector<ColumnInfo> columns;

  std::size_t n() const { return y.size(); }
  std::size_t p() const { return x.cols(); }

  std::vector<int> arm_rows(int arm) const;
  std::vector<std::string> column_names() const;

  /// Throws std::runtime_error on any invariant violation: T not in {0,1},
  /// an empty arm, non-finite covariates, binary columns with values outside
  /// {0,1}, or one-hot groups with row sums above 1.
  void validate() const;
};

/// Assignment of units to eta folds. Sizes differ by at most one.
struct FoldPlan {
  int eta = 2;
  std::vector<int> assignments;
  std::uint64_t seed = 0;

  std::vector<int> rows_in(int fold) const;
  std::vector<int> rows_not_in(int fold) const;
};

/// Uniformly random partition of [0, n) into eta folds, deterministic in
/// (n, eta, seed). Throws if eta < 2 or eta > n.
FoldPlan make_folds(std::size_t n, int eta, std::uint64_t seed);

/// Per-column centering and scaling parameters fit on a row subset.
struct Standardization {
  std::vector<double> means;
  std::vector<double> scales;

  Matrix transform(const Matrix& x) const;
  Matrix inverse(const Matrix& xs) const;
};

/// Means and sample standard deviations over fit_rows. Columns that are
/// constant on fit_rows get scale 1 so they pass through centered.
Standardization fit_standardization(const Matrix& x, std::span<const int> fit_rows);

// --- CSV ingestion -------------------------------------------------------

struct CsvSchema {
  std::string treatment;
  std::string outcome;
  std::vector<std::string> categoricals;
  /// Optional mapping for non-numeric treatment labels, e.g. {"A",0},{"B",1}.
  std::map<std::string, int> treatment_mapping;
};

struct RawColumn {
  std::string name;
  bool categorical = false;
  std::vector<double> numeric;       // filled when !categorical
  std::vector<std::string> labels;   // filled when categorical
};

/// Typed CSV contents with declared roles; row order preserved.
struct RawTable {
  std::size_t n = 0;
  std::vector<int> treatment;
  std::vector<double> outcome;
  std::vector<RawColumn> covariates;
};

/// Reads a comma-separated file with a header row. Cells must parse for
/// their declared role; errors name the offending row and column. The
/// treatment column must hold exactly two distinct values mapping to 0/1.
RawTable load_csv(const std::string& path, const CsvSchema& schema);

/// Expands each categorical column with m levels into m 0/1 indicator
/// columns named "<col>=<level>" (levels sorted). Numeric columns pass
/// through; ones whose values are all in {0,1} are tagged binary.
Dataset dummify(const RawTable& raw);

}  // namespace m2m
