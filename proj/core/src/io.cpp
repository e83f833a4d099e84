#include "m2m/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace m2m {

std::string format_double(double v) {
  char buf[40];
  // Shortest round-trip: try increasing precision until the value survives.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path);
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double cell_to_double(const std::string& cell) {
  if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::stod(cell);
}

}  // namespace

void write_dataset_csv(const std::string& path, const Dataset& ds) {
  std::ofstream out = open_out(path);
  for (const auto& c : ds.columns) out << c.name << ',';
  out << "T,Y\n";
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < ds.p(); ++j) out << format_double(ds.x(i, j)) << ',';
    out << ds.t[i] << ',' << format_double(ds.y[i]) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

void write_truth_csv(const std::string& path, const DgpSample& s) {
  std::ofstream out = open_out(path);
  out << "unit,y0,y1,true_cate\n";
  for (std::size_t i = 0; i < s.y0.size(); ++i)
    out << i << ',' << format_double(s.y0[i]) << ',' << format_double(s.y1[i]) << ','
        << format_double(s.true_cate[i]) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

Truth read_truth_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || split_line(line).size() != 4)
    throw std::runtime_error(path + ": expected header unit,y0,y1,true_cate");
  Truth t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != 4) throw std::runtime_error(path + ": malformed row: " + line);
    t.y0.push_back(std::stod(cells[1]));
    t.y1.push_back(std::stod(cells[2]));
    t.true_cate.push_back(std::stod(cells[3]));
  }
  if (t.true_cate.empty()) throw std::runtime_error(path + ": no rows");
  double sum = 0.0;
  for (double v : t.true_cate) sum += v;
  t.true_ate = sum / static_cast<double>(t.true_cate.size());
  return t;
}

void write_cates_csv(const std::string& path, const CrossfitResult& res) {
  std::ofstream out = open_out(path);
  out << "unit,yhat0,yhat1,cate,n_contributions\n";
  for (std::size_t i = 0; i < res.units.size(); ++i) {
    const UnitEstimate& u = res.units[i];
    out << i << ',';
    if (u.has0()) out << format_double(u.yhat0);
    out << ',';
    if (u.has1()) out << format_double(u.yhat1);
    out << ',';
    if (u.has_cate()) out << format_double(u.cate);
    out << ',' << u.n_contributions << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<double> read_cates_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || split_line(line).size() != 5)
    throw std::runtime_error(path + ": expected header unit,yhat0,yhat1,cate,n_contributions");
  std::vector<double> cates;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != 5) throw std::runtime_error(path + ": malformed row: " + line);
    cates.push_back(cell_to_double(cells[3]));
  }
  return cates;
}

void write_groups_csv(const std::string& path,
                      const std::vector<FoldArtifacts>& folds) {
  std::ofstream out = open_out(path);
  out << "repeat,fold,query,arm,rank,neighbor,distance\n";
  for (const auto& art : folds) {
    for (const auto& g : art.groups) {
      for (int a = 0; a < 2; ++a) {
        const auto& nb = g.neighbors[static_cast<std::size_t>(a)];
        const auto& dist = g.distances[static_cast<std::size_t>(a)];
        for (std::size_t r = 0; r < nb.size(); ++r)
          out << art.repeat << ',' << art.fold << ',' << g.query << ',' << a << ','
              << r << ',' << nb[r] << ',' << format_double(dist[r]) << '\n';
      }
    }
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<MatchedGroup> read_groups_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || split_line(line).size() != 7)
    throw std::runtime_error(path +
                             ": expected header repeat,fold,query,arm,rank,neighbor,distance");
  std::vector<MatchedGroup> groups;
  // Key of the group currently being filled; rows for one group arrive
  // contiguously in rank order per arm.
  long cur_repeat = -1, cur_fold = -1, cur_query = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != 7) throw std::runtime_error(path + ": malformed row: " + line);
    const long rep = std::stol(cells[0]);
    const long fold = std::stol(cells[1]);
    const long query = std::stol(cells[2]);
    const int arm = std::stoi(cells[3]);
    if (arm != 0 && arm != 1) throw std::runtime_error(path + ": arm outside {0,1}");
    if (rep != cur_repeat || fold != cur_fold || query != cur_query) {
      groups.emplace_back();
      groups.back().query = static_cast<int>(query);
      cur_repeat = rep;
      cur_fold = fold;
      cur_query = query;
    }
    groups.back().neighbors[static_cast<std::size_t>(arm)].push_back(
        std::stoi(cells[5]));
    groups.back().distances[static_cast<std::size_t>(arm)].push_back(
        std::stod(cells[6]));
  }
  if (groups.empty()) throw std::runtime_error(path + ": no rows");
  return groups;
}

std::string metrics_json(const std::vector<FoldArtifacts>& folds,
                         const std::vector<std::string>& column_names) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& art : folds) {
    nlohmann::json entry;
    entry["repeat"] = art.repeat;
    entry["fold"] = art.fold;
    entry["per_arm"] = art.per_arm_metrics;
    nlohmann::json ms = nlohmann::json::array();
    const int n_metrics = art.per_arm_metrics ? 2 : 1;
    for (int a = 0; a < n_metrics; ++a) {
      const DistanceMetric& m = art.metrics[static_cast<std::size_t>(a)];
      if (m.weights.empty()) continue;  // score-based methods carry no metric
      nlohmann::json j;
      j["source"] = to_string(m.source);
      j["weights"] = m.weights;
      j["fold"] = m.fold;
      j["column_names"] = column_names;
      j["model_summary"] = m.model_summary;
      ms.push_back(std::move(j));
    }
    entry["metrics"] = std::move(ms);
    arr.push_back(std::move(entry));
  }
  return arr.dump(2);
}

std::string params_json(const DgpParams& params) {
  nlohmann::json j;
  j["name"] = params.name;
  j["n"] = params.n;
  j["p"] = params.p;
  j["seed"] = params.seed;
  if (params.name == "quadratic") {
    j["k"] = params.k;
    j["kappa"] = params.kappa;
    j["alpha"] = params.alpha;
    j["beta"] = params.beta;
    j["s"] = params.s;
  }
  return j.dump(2);
}

void write_tightness_csv(const std::string& path, const std::vector<TightnessRow>& rows,
                         std::size_t n_empty) {
  std::ofstream out = open_out(path);
  out << "column,kind,tightness,mismatch_rate\n";
  for (const auto& r : rows) {
    out << r.column << ',' << (r.kind == ColumnKind::binary ? "binary" : "continuous")
        << ',' << format_double(r.value) << ',';
    if (r.kind == ColumnKind::binary) out << format_double(r.value);
    out << '\n';
  }
  out << "# empty_groups_excluded," << n_empty << ",,\n";
  if (!out) throw std::runtime_error("failed writing " + path);
}

void write_dispersion_csv(const std::string& path,
                          const std::vector<std::string>& columns,
                          const std::vector<double>& values, std::size_t n_skipped) {
  if (columns.size() != values.size())
    throw std::runtime_error("dispersion csv: column/value length mismatch");
  std::ofstream out = open_out(path);
  out << "column,dispersion\n";
  for (std::size_t j = 0; j < columns.size(); ++j)
    out << columns[j] << ',' << format_double(values[j]) << '\n';
  out << "# singleton_groups_skipped," << n_skipped << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

void write_errors_csv(const std::string& path, const CateErrorReport& rep) {
  std::ofstream out = open_out(path);
  out << "unit,relative_error\n";
  for (std::size_t i = 0; i < rep.per_unit.size(); ++i) {
    out << i << ',';
    if (!std::isnan(rep.per_unit[i])) out << format_double(rep.per_unit[i]);
    out << '\n';
  }
  out << "# median," << format_double(rep.median) << '\n';
  out << "# q25," << format_double(rep.q25) << '\n';
  out << "# q75," << format_double(rep.q75) << '\n';
  out << "# normalized," << (rep.normalized ? "true" : "false") << '\n';
  out << "# denom," << format_double(rep.denom) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace m2m
