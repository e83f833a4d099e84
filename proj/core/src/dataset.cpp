#include "m2m/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "m2m/rng.hpp"

namespace m2m {

void warn(const std::string& message) {
  std::fprintf(stderr, "m2m: warning: %s\n", message.c_str());
}

std::vector<int> Dataset::arm_rows(int arm) const {
  std::vector<int> rows;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] == arm) rows.push_back(static_cast<int>(i));
  return rows;
}

std::vector<std::string> Dataset::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

void Dataset::validate() const {
  if (y.size() != t.size() || y.size() != x.rows())
    throw std::runtime_error("dataset: x, t, y row counts disagree");
  if (columns.size() != x.cols())
    throw std::runtime_error("dataset: column metadata does not match x");
  std::size_t treated = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] != 0 && t[i] != 1)
      throw std::runtime_error("dataset: treatment must be 0 or 1 (row " +
                               std::to_string(i) + ")");
    treated += static_cast<std::size_t>(t[i]);
  }
  if (treated == 0 || treated == t.size())
    throw std::runtime_error("dataset: both treatment arms must be non-empty");
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double v = x(i, j);
      if (!std::isfinite(v))
        throw std::runtime_error("dataset: non-finite covariate at row " +
                                 std::to_string(i) + ", column " + columns[j].name);
      if (columns[j].kind == ColumnKind::binary && v != 0.0 && v != 1.0)
        throw std::runtime_error("dataset: binary column " + columns[j].name +
                                 " has value outside {0,1} at row " + std::to_string(i));
    }
    if (!std::isfinite(y[i]))
      throw std::runtime_error("dataset: non-finite outcome at row " + std::to_string(i));
  }
  // Indicators expanded from one categorical must stay mutually exclusive.
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t j = 0; j < columns.size(); ++j)
    if (!columns[j].parent_categorical.empty())
      groups[columns[j].parent_categorical].push_back(j);
  for (const auto& [parent, cols] : groups) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double sum = 0.0;
      for (std::size_t j : cols) sum += x(i, j);
      if (sum > 1.0)
        throw std::runtime_error("dataset: one-hot group " + parent +
                                 " has row sum > 1 at row " + std::to_string(i));
    }
  }
}

std::vector<int> FoldPlan::rows_in(int fold) const {
  std::vector<int> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == fold) rows.push_back(static_cast<int>(i));
  return rows;
}

std::vector<int> FoldPlan::rows_not_in(int fold) const {
  std::vector<int> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] != fold) rows.push_back(static_cast<int>(i));
  return rows;
}

FoldPlan make_folds(std::size_t n, int eta, std::uint64_t seed) {
  if (eta < 2)
    throw std::runtime_error("make_folds: need at least 2 folds, got " + std::to_string(eta));
  if (static_cast<std::size_t>(eta) > n)
    throw std::runtime_error("make_folds: more folds (" + std::to_string(eta) +
                             ") than units (" + std::to_string(n) + ")");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, 0x666f6c6473ULL));  // "folds"
  rng.shuffle(order);
  FoldPlan plan;
  plan.eta = eta;
  plan.seed = seed;
  plan.assignments.assign(n, 0);
  // Dealing the shuffled units round-robin keeps sizes within one of each
  // other: the first n % eta folds get the extra unit.
  for (std::size_t k = 0; k < n; ++k)
    plan.assignments[static_cast<std::size_t>(order[k])] = static_cast<int>(k % eta);
  return plan;
}

Standardization fit_standardization(const Matrix& x, std::span<const int> fit_rows) {
  if (fit_rows.size() < 2)
    throw std::runtime_error("fit_standardization: need at least 2 rows");
  const std::size_t p = x.cols();
  Standardization s;
  s.means.assign(p, 0.0);
  s.scales.assign(p, 1.0);
  const double m = static_cast<double>(fit_rows.size());
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (int i : fit_rows) mean += x(static_cast<std::size_t>(i), j);
    mean /= m;
    double ss = 0.0;
    for (int i : fit_rows) {
      const double d = x(static_cast<std::size_t>(i), j) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / (m - 1.0));
    s.means[j] = mean;
    s.scales[j] = sd > 0.0 ? sd : 1.0;  // constant columns pass through centered
  }
  return s;
}

Matrix Standardization::transform(const Matrix& x) const {
  if (x.cols() != means.size())
    throw std::runtime_error("standardization: column count mismatch");
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      out(i, j) = (x(i, j) - means[j]) / scales[j];
  return out;
}

Matrix Standardization::inverse(const Matrix& xs) const {
  if (xs.cols() != means.size())
    throw std::runtime_error("standardization: column count mismatch");
  Matrix out(xs.rows(), xs.cols());
  for (std::size_t i = 0; i < xs.rows(); ++i)
    for (std::size_t j = 0; j < xs.cols(); ++j)
      out(i, j) = xs(i, j) * scales[j] + means[j];
  return out;
}

// --- CSV ingestion -------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& cell, std::size_t row, const std::string& col) {
  const std::string t = trim(cell);
  if (t.empty())
    throw std::runtime_error("csv: empty cell at data row " + std::to_string(row) +
                             ", column " + col);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != t.size())
    throw std::runtime_error("csv: cannot parse '" + t + "' as a number at data row " +
                             std::to_string(row) + ", column " + col);
  return v;
}

}  // namespace

RawTable load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: " + path + " is empty");
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  auto index_of = [&](const std::string& name) {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (header[j] == name) return j;
    throw std::runtime_error("csv: column '" + name + "' not found in " + path);
  };
  const std::size_t t_col = index_of(schema.treatment);
  const std::size_t y_col = index_of(schema.outcome);
  std::set<std::string> categorical(schema.categoricals.begin(), schema.categoricals.end());
  for (const auto& c : schema.categoricals) index_of(c);  // fail fast on typos

  RawTable table;
  std::vector<std::string> raw_treatment;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j == t_col || j == y_col) continue;
    RawColumn col;
    col.name = header[j];
    col.categorical = categorical.count(header[j]) > 0;
    table.covariates.push_back(std::move(col));
  }

  std::size_t row = 0;  // 1-based in messages: "data row 1" is the first line after the header
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error("csv: data row " + std::to_string(row) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
    raw_treatment.push_back(trim(cells[t_col]));
    table.outcome.push_back(parse_number(cells[y_col], row, schema.outcome));
    std::size_t k = 0;
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j == t_col || j == y_col) continue;
      RawColumn& col = table.covariates[k++];
      if (col.categorical) {
        const std::string v = trim(cells[j]);
        if (v.empty())
          throw std::runtime_error("csv: empty cell at data row " + std::to_string(row) +
                                   ", column " + col.name);
        col.labels.push_back(v);
      } else {
        col.numeric.push_back(parse_number(cells[j], row, col.name));
      }
    }
  }
  table.n = row;
  if (table.n == 0) throw std::runtime_error("csv: " + path + " has no data rows");

  // Resolve treatment labels to 0/1.
  std::set<std::string> distinct(raw_treatment.begin(), raw_treatment.end());
  if (distinct.size() != 2)
    throw std::runtime_error("csv: treatment column " + schema.treatment + " has " +
                             std::to_string(distinct.size()) + " distinct values, expected 2");
  std::map<std::string, int> mapping = schema.treatment_mapping;
  if (mapping.empty()) {
    for (const auto& v : distinct) {
      std::size_t pos = 0;
      double num = 0.0;
      try {
        num = std::stod(v, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != v.size() || (num != 0.0 && num != 1.0))
        throw std::runtime_error("csv: treatment value '" + v +
                                 "' is not 0/1; provide a treatment mapping");
      mapping[v] = static_cast<int>(num);
    }
  } else {
    for (const auto& v : distinct)
      if (!mapping.count(v))
        throw std::runtime_error("csv: treatment value '" + v + "' missing from mapping");
  }
  table.treatment.reserve(table.n);
  for (std::size_t i = 0; i < raw_treatment.size(); ++i) {
    const int a = mapping.at(raw_treatment[i]);
    if (a != 0 && a != 1)
      throw std::runtime_error("csv: treatment mapping must target 0/1, got " +
                               std::to_string(a) + " at data row " + std::to_string(i + 1));
    table.treatment.push_back(a);
  }
  return table;
}

Dataset dummify(const RawTable& raw) {
  Dataset ds;
  ds.t = raw.treatment;
  ds.y = raw.outcome;

  struct Expanded {
    ColumnInfo info;
    std::vector<double> values;
  };
  std::vector<Expanded> out;
  for (const auto& col : raw.covariates) {
    if (!col.categorical) {
      Expanded e;
      e.info.name = col.name;
      bool binary = true;
      for (double v : col.numeric)
        if (v != 0.0 && v != 1.0) { binary = false; break; }
      e.info.kind = binary ? ColumnKind::binary : ColumnKind::continuous;
      e.values = col.numeric;
      out.push_back(std::move(e));
      continue;
    }
    std::set<std::string> levels(col.labels.begin(), col.labels.end());
    if (levels.size() < 2)
      warn("categorical column " + col.name + " has a single level; its indicator is constant");
    for (const auto& level : levels) {
      Expanded e;
      e.info.name = col.name + "=" + level;
      e.info.kind = ColumnKind::binary;
      e.info.parent_categorical = col.name;
      e.values.reserve(raw.n);
      for (const auto& v : col.labels) e.values.push_back(v == level ? 1.0 : 0.0);
      out.push_back(std::move(e));
    }
  }

  ds.x = Matrix(raw.n, out.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    ds.columns.push_back(out[j].info);
    for (std::size_t i = 0; i < raw.n; ++i) ds.x(i, j) = out[j].values[i];
  }
  ds.validate();
  return ds;
}

}  // namespace m2m
