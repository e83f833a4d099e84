#pragma once

#include <string>
#include <vector>

#include "m2m/audit.hpp"
#include "m2m/dgp.hpp"
#include "m2m/estimate.hpp"

namespace m2m {

/// Shortest representation that round-trips a double exactly.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);

/// data CSV: X1..Xp, T, Y — one row per unit, header included.
void write_dataset_csv(const std::string& path, const Dataset& ds);

/// truth CSV: unit, y0, y1, true_cate.
void write_truth_csv(const std::string& path, const DgpSample& s);

struct Truth {
  std::vector<double> y0, y1, true_cate;
  double true_ate = 0.0;
};
Truth read_truth_csv(const std::string& path);

/// cates CSV: unit, yhat0, yhat1, cate, n_contributions. Absent values are
/// empty cells.
void write_cates_csv(const std::string& path, const CrossfitResult& res);
std::vector<double> read_cates_csv(const std::string& path);  // NaN where absent

/// groups CSV: repeat, fold, query, arm, rank, neighbor, distance.
void write_groups_csv(const std::string& path, const std::vector<FoldArtifacts>& folds);
/// Rebuilds the flat group list (pooled across repeats and folds).
std::vector<MatchedGroup> read_groups_csv(const std::string& path);

/// All learned fold metrics as a JSON array; each entry carries
/// {source, weights, fold, repeat, column_names, model_summary}.
std::string metrics_json(const std::vector<FoldArtifacts>& folds,
                         const std::vector<std::string>& column_names);

/// Generator parameters (including realized coefficients) as JSON.
std::string params_json(const DgpParams& params);

void write_tightness_csv(const std::string& path, const std::vector<TightnessRow>& rows,
                         std::size_t n_empty);
void write_dispersion_csv(const std::string& path,
                          const std::vector<std::string>& columns,
                          const std::vector<double>& values, std::size_t n_skipped);
void write_errors_csv(const std::string& path, const CateErrorReport& rep);

}  // namespace m2m
