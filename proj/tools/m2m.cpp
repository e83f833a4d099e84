// m2m: matched-group treatment effect estimation from the command line.
//
// Subcommands: dgp (synthetic data), run (end-to-end estimation), audit
// (matched-group diagnostics), bench (stage timings over size grids),
// experiment (named desk-scale study recipes). All outputs are CSV/JSON;
// failures exit nonzero with a one-line JSON error on stdout.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "m2m/audit.hpp"
#include "m2m/dgp.hpp"
#include "m2m/estimate.hpp"
#include "m2m/io.hpp"
#include "m2m/rng.hpp"
#include "m2m/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string default_out_dir() {
  const char* env = std::getenv("M2M_OUT_DIR");
  return env ? env : ".";
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// --- shared option bundles -------------------------------------------------

struct DataOpts {
  std::string dgp;  // inline generator name; empty means --data
  std::size_t n = 500;
  std::size_t p = 10;
  int k = 5;
  int kappa = 2;
  std::uint64_t dgp_seed = 0;
  bool dgp_seed_set = false;

  std::string data_path;
  std::string treatment = "T";
  std::string outcome = "Y";
  std::vector<std::string> categoricals;
  std::string truth_path;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--dgp", dgp,
                    "generate data inline: sine, exponential, quadratic, basic-quadratic");
    cmd->add_option("--n", n, "units to generate")->capture_default_str();
    cmd->add_option("--p", p, "covariates to generate")->capture_default_str();
    cmd->add_option("--dgp-k", k, "outcome-relevant covariates (quadratic)")
        ->capture_default_str();
    cmd->add_option("--dgp-kappa", kappa, "treatment-relevant covariates (quadratic)")
        ->capture_default_str();
    cmd->add_option("--dgp-seed", dgp_seed, "generator seed (default: --seed)")
        ->each([this](const std::string&) { dgp_seed_set = true; });
    cmd->add_option("--data", data_path, "read data from a CSV instead");
    cmd->add_option("--treatment", treatment, "treatment column name")
        ->capture_default_str();
    cmd->add_option("--outcome", outcome, "outcome column name")->capture_default_str();
    cmd->add_option("--categoricals", categoricals,
                    "comma-separated categorical covariate columns")
        ->delimiter(',');
    cmd->add_option("--truth", truth_path, "ground-truth CSV (unit,y0,y1,true_cate)");
  }
};

struct LoadedData {
  m2m::Dataset dataset;
  bool has_truth = false;
  std::vector<double> y0, y1;  // structural potential outcomes (dgp only)
  std::vector<double> true_cate;
  double true_ate = 0.0;
  std::vector<int> important;  // known-important columns, if any
  json source;                 // manifest echo
};

LoadedData load_data(const DataOpts& opts, std::uint64_t fallback_seed) {
  LoadedData out;
  if (!opts.dgp.empty() && !opts.data_path.empty())
    throw std::runtime_error("pass either --dgp or --data, not both");
  if (opts.dgp.empty() && opts.data_path.empty())
    throw std::runtime_error("no data source: pass --dgp NAME or --data FILE");
  if (!opts.dgp.empty()) {
    const std::uint64_t seed = opts.dgp_seed_set ? opts.dgp_seed : fallback_seed;
    m2m::DgpSample s =
        m2m::generate(opts.dgp, opts.n, opts.p, opts.k, opts.kappa, seed);
    out.dataset = std::move(s.dataset);
    out.has_truth = true;
    out.y0 = std::move(s.y0);
    out.y1 = std::move(s.y1);
    out.true_cate = std::move(s.true_cate);
    out.true_ate = s.true_ate;
    out.important = s.important_columns();
    out.source = {{"source", "dgp"}, {"name", opts.dgp},     {"n", opts.n},
                  {"p", opts.p},     {"seed", seed}};
    if (opts.dgp == "quadratic") {
      out.source["k"] = opts.k;
      out.source["kappa"] = opts.kappa;
    }
    return out;
  }
  m2m::CsvSchema schema;
  schema.treatment = opts.treatment;
  schema.outcome = opts.outcome;
  schema.categoricals = opts.categoricals;
  out.dataset = m2m::dummify(m2m::load_csv(opts.data_path, schema));
  out.source = {{"source", "csv"},
                {"path", opts.data_path},
                {"treatment", opts.treatment},
                {"outcome", opts.outcome},
                {"categoricals", opts.categoricals}};
  if (!opts.truth_path.empty()) {
    m2m::Truth truth = m2m::read_truth_csv(opts.truth_path);
    if (truth.true_cate.size() != out.dataset.n())
      throw std::runtime_error("truth row count does not match the dataset");
    out.has_truth = true;
    out.true_cate = std::move(truth.true_cate);
    out.true_ate = truth.true_ate;
    out.source["truth"] = opts.truth_path;
  }
  return out;
}

struct MethodOpts {
  std::string method = "lcm";
  int k = 10;
  int eta = 5;
  std::uint64_t seed = 0;
  std::string estimator = "mean";
  int k1 = 25;
  int k2 = 5;
  std::string score_model = "np";
  std::vector<int> oracle_support;
  int repeats = 1;
  int cv_folds = 5;
  int n_lambdas = 100;
  double eps_ratio = 1e-3;
  int max_depth = 3;
  int min_leaf = 5;
  int gbm_trees = 100;
  double learning_rate = 0.1;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--method", method,
                    "lcm, metalearner, tree, pgm_linear, pgm_np, lap, "
                    "feature_select, oracle, uniform")
        ->capture_default_str();
    cmd->add_option("--k", k, "matched neighbors per arm")->capture_default_str();
    cmd->add_option("--eta", eta, "number of folds")->capture_default_str();
    cmd->add_option("--seed", seed, "run seed")->capture_default_str();
    cmd->add_option("--estimator", estimator, "within-group estimator: mean or linear")
        ->capture_default_str();
    cmd->add_option("--k1", k1, "lap: score-space shortlist size")->capture_default_str();
    cmd->add_option("--k2", k2, "lap: final neighbors per arm")->capture_default_str();
    cmd->add_option("--score-model", score_model, "lap: linear or np scores")
        ->capture_default_str();
    cmd->add_option("--oracle-support", oracle_support,
                    "0-based important columns for --method oracle")
        ->delimiter(',');
    cmd->add_option("--repeats", repeats, "independent fold plans to average")
        ->capture_default_str();
    cmd->add_option("--cv-folds", cv_folds, "penalty-selection folds")
        ->capture_default_str();
    cmd->add_option("--n-lambdas", n_lambdas, "penalty grid size")->capture_default_str();
    cmd->add_option("--eps-ratio", eps_ratio, "smallest/largest penalty ratio")
        ->capture_default_str();
    cmd->add_option("--max-depth", max_depth, "tree depth cap")->capture_default_str();
    cmd->add_option("--min-leaf", min_leaf, "minimum rows per leaf")
        ->capture_default_str();
    cmd->add_option("--gbm-trees", gbm_trees, "boosting stages")->capture_default_str();
    cmd->add_option("--learning-rate", learning_rate, "boosting step size")
        ->capture_default_str();
  }

  m2m::RunConfig to_config(int threads) const {
    m2m::RunConfig cfg;
    cfg.method = m2m::method_from_string(method);
    cfg.k = k;
    cfg.eta = eta;
    cfg.seed = seed;
    cfg.estimator = m2m::estimator_from_string(estimator);
    cfg.k1 = k1;
    cfg.k2 = k2;
    if (score_model == "linear")
      cfg.lap_score = m2m::Method::pgm_linear;
    else if (score_model == "np")
      cfg.lap_score = m2m::Method::pgm_np;
    else
      throw std::runtime_error("--score-model must be linear or np");
    cfg.oracle_support = oracle_support;
    cfg.repeats = repeats;
    cfg.lasso.cv_folds = cv_folds;
    cfg.lasso.n_lambdas = n_lambdas;
    cfg.lasso.eps_ratio = eps_ratio;
    cfg.tree.max_depth = max_depth;
    cfg.tree.min_leaf = min_leaf;
    cfg.gbm.n_trees = gbm_trees;
    cfg.gbm.learning_rate = learning_rate;
    cfg.gbm.tree = cfg.tree;
    cfg.threads = threads;
    return cfg;
  }

  json echo() const {
    return {{"method", method},
            {"k", k},
            {"eta", eta},
            {"seed", seed},
            {"estimator", estimator},
            {"k1", k1},
            {"k2", k2},
            {"score_model", score_model},
            {"oracle_support", oracle_support},
            {"repeats", repeats},
            {"averaging", "mean_of_contributions"},
            {"lasso",
             {{"cv_folds", cv_folds},
              {"n_lambdas", n_lambdas},
              {"eps_ratio", eps_ratio}}},
            {"tree", {{"max_depth", max_depth}, {"min_leaf", min_leaf}}},
            {"gbm", {{"n_trees", gbm_trees}, {"learning_rate", learning_rate}}}};
  }
};

// --- dgp --------------------------------------------------------------------

struct DgpCmd {
  std::string name;
  std::size_t n = 500;
  std::size_t p = 10;
  int k = 5;
  int kappa = 2;
  std::uint64_t seed = 0;
  std::string out_dir = default_out_dir();

  int run() const {
    fs::create_directories(out_dir);
    m2m::DgpSample s = m2m::generate(name, n, p, k, kappa, seed);
    m2m::write_dataset_csv(join(out_dir, "data.csv"), s.dataset);
    m2m::write_truth_csv(join(out_dir, "truth.csv"), s);
    m2m::write_text_file(join(out_dir, "params.json"), m2m::params_json(s.params));
    std::size_t treated = 0;
    for (int t : s.dataset.t) treated += static_cast<std::size_t>(t);
    std::cout << "wrote " << s.dataset.n() << " units (" << treated << " treated, p="
              << s.dataset.p() << ", true ate=" << m2m::format_double(s.true_ate)
              << ") to " << out_dir << "\n";
    return 0;
  }
};

// --- run ---------------------------------------------------------------------

json timings_json(const m2m::StageTimings& t) {
  return {{"learn_s", t.learn_s}, {"match_s", t.match_s}, {"estimate_s", t.estimate_s}};
}

struct RunCmd {
  DataOpts data;
  MethodOpts method;
  int threads = 1;
  std::string out_dir = default_out_dir();

  int run() const {
    fs::create_directories(out_dir);
    LoadedData loaded = load_data(data, method.seed);
    m2m::RunConfig cfg = method.to_config(threads);
    if (cfg.method == m2m::Method::oracle && cfg.oracle_support.empty()) {
      if (loaded.important.empty())
        throw std::runtime_error(
            "oracle method needs --oracle-support (or an inline --dgp with known "
            "support)");
      cfg.oracle_support = loaded.important;
    }
    m2m::CrossfitResult res = m2m::crossfit_run(loaded.dataset, cfg);

    json outputs;
    m2m::write_cates_csv(join(out_dir, "cates.csv"), res);
    outputs["cates"] = "cates.csv";
    m2m::write_text_file(join(out_dir, "metrics.json"),
                         m2m::metrics_json(res.folds, loaded.dataset.column_names()));
    outputs["metrics"] = "metrics.json";
    m2m::write_groups_csv(join(out_dir, "groups.csv"), res.folds);
    outputs["groups"] = "groups.csv";
    if (!data.dgp.empty()) {
      // Inline generation: persist the data so audits can reload it.
      m2m::write_dataset_csv(join(out_dir, "data.csv"), loaded.dataset);
      outputs["data"] = "data.csv";
      m2m::DgpSample shell;
      shell.y0 = loaded.y0;
      shell.y1 = loaded.y1;
      shell.true_cate = loaded.true_cate;
      shell.true_ate = loaded.true_ate;
      m2m::write_truth_csv(join(out_dir, "truth.csv"), shell);
      outputs["truth"] = "truth.csv";
    }

    json manifest;
    manifest["command"] = "run";
    manifest["version"] = m2m::kVersion;
    manifest["config"] = method.echo();
    manifest["config"]["threads"] = threads;
    manifest["data"] = loaded.source;
    manifest["n"] = loaded.dataset.n();
    manifest["p"] = loaded.dataset.p();
    manifest["timings"] = timings_json(res.timings);
    manifest["outputs"] = outputs;
    manifest["n_excluded"] = res.n_excluded;
    manifest["ate"] = res.ate();
    json fold_assignments = json::array();
    for (const auto& art : res.folds) {
      json assignment;
      assignment["repeat"] = art.repeat;
      assignment["fold"] = art.fold;
      assignment["train_rows"] = art.train_rows;
      fold_assignments.push_back(std::move(assignment));
    }
    manifest["folds"] = std::move(fold_assignments);
    json digests = json::array();
    for (const auto& art : res.folds) {
      const int n_metrics = art.per_arm_metrics ? 2 : 1;
      for (int a = 0; a < n_metrics; ++a) {
        const auto& m = art.metrics[static_cast<std::size_t>(a)];
        if (m.weights.empty()) continue;
        int nnz = 0;
        for (double w : m.weights) nnz += w > 0.0;
        digests.push_back({{"repeat", art.repeat},
                           {"fold", art.fold},
                           {"source", m2m::to_string(m.source)},
                           {"nnz", nnz},
                           {"weight_sum", m.weight_sum()}});
      }
    }
    manifest["metric_digests"] = std::move(digests);
    if (loaded.has_truth) {
      m2m::CateErrorReport rep =
          m2m::cate_errors(res.cates(), loaded.true_cate, loaded.true_ate);
      manifest["median_relative_error"] = rep.median;
    }
    m2m::write_text_file(join(out_dir, "manifest.json"), manifest.dump(2));

    std::cout << "ate=" << m2m::format_double(res.ate())
              << " units=" << res.units.size() << " excluded=" << res.n_excluded;
    if (manifest.contains("median_relative_error"))
      std::cout << " median_rel_err="
                << m2m::format_double(manifest["median_relative_error"].get<double>());
    std::cout << " -> " << out_dir << "\n";
    return 0;
  }
};

// --- audit ---------------------------------------------------------------

struct AuditCmd {
  std::string run_dir;
  std::string data_override;
  std::string truth_override;

  int run() const {
    std::ifstream mf(join(run_dir, "manifest.json"));
    if (!mf) throw std::runtime_error("no manifest.json in " + run_dir);
    json manifest = json::parse(mf);

    // Reload the covariates the run matched on, preferring explicit overrides.
    std::string data_path = data_override;
    m2m::CsvSchema schema;
    schema.treatment = "T";
    schema.outcome = "Y";
    const json& src = manifest.at("data");
    if (data_path.empty()) {
      if (src.at("source") == "csv") {
        data_path = src.at("path").get<std::string>();
        schema.treatment = src.at("treatment").get<std::string>();
        schema.outcome = src.at("outcome").get<std::string>();
        schema.categoricals = src.at("categoricals").get<std::vector<std::string>>();
      } else {
        data_path = join(run_dir, "data.csv");
      }
    }
    m2m::Dataset ds = m2m::dummify(m2m::load_csv(data_path, schema));

    const std::vector<m2m::MatchedGroup> groups =
        m2m::read_groups_csv(join(run_dir, "groups.csv"));

    std::size_t n_empty = 0, n_single = 0;
    const auto rows = m2m::tightness(groups, ds.x, ds.columns, &n_empty);
    m2m::write_tightness_csv(join(run_dir, "tightness.csv"), rows, n_empty);
    const auto disp = m2m::dispersion(groups, ds.x, &n_single);
    m2m::write_dispersion_csv(join(run_dir, "dispersion.csv"), ds.column_names(), disp,
                              n_single);

    std::string truth_path = truth_override;
    if (truth_path.empty()) {
      if (src.contains("truth"))
        truth_path = src.at("truth").get<std::string>();
      else if (fs::exists(join(run_dir, "truth.csv")))
        truth_path = join(run_dir, "truth.csv");
    }
    bool wrote_errors = false;
    if (!truth_path.empty()) {
      const m2m::Truth truth = m2m::read_truth_csv(truth_path);
      const std::vector<double> cates =
          m2m::read_cates_csv(join(run_dir, "cates.csv"));
      const m2m::CateErrorReport rep =
          m2m::cate_errors(cates, truth.true_cate, truth.true_ate);
      m2m::write_errors_csv(join(run_dir, "errors.csv"), rep);
      wrote_errors = true;
      std::cout << "median_rel_err=" << m2m::format_double(rep.median) << " ";
    }
    std::cout << "groups=" << groups.size() << " tightness.csv dispersion.csv"
              << (wrote_errors ? " errors.csv" : " (no truth: errors.csv omitted)")
              << " -> " << run_dir << "\n";

    manifest["audit"] = {{"tightness", "tightness.csv"},
                         {"dispersion", "dispersion.csv"},
                         {"errors", wrote_errors ? json("errors.csv") : json()}};
    m2m::write_text_file(join(run_dir, "manifest.json"), manifest.dump(2));
    return 0;
  }
};

// --- bench -----------------------------------------------------------------

struct BenchCmd {
  std::vector<std::string> methods{"lcm"};
  std::vector<std::size_t> n_values{2048};
  std::vector<std::size_t> p_values{64};
  std::string dgp = "quadratic";
  int dgp_k = 8;
  int dgp_kappa = 2;
  int k = 10;
  int eta = 2;
  int repeats = 20;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out = join(default_out_dir(), "bench.csv");

  int run() const {
    if (fs::path(out).has_parent_path())
      fs::create_directories(fs::path(out).parent_path());
    std::ofstream csv(out);
    if (!csv) throw std::runtime_error("cannot open " + out + " for writing");
    csv << "method,n,p,repeat,learn_s,match_s,estimate_s,total_s,ate\n";
    for (std::size_t n : n_values) {
      for (std::size_t p : p_values) {
        const std::uint64_t cell_seed = m2m::mix_seed(m2m::mix_seed(seed, n), p);
        const int kk = std::min<int>(dgp_k, static_cast<int>(p));
        const m2m::DgpSample sample =
            m2m::generate(dgp, n, p, kk, std::min(dgp_kappa, kk), cell_seed);
        for (const std::string& name : methods) {
          m2m::RunConfig cfg;
          cfg.method = m2m::method_from_string(name);
          cfg.k = k;
          cfg.eta = eta;
          cfg.seed = cell_seed;
          cfg.threads = threads;
          if (cfg.method == m2m::Method::oracle)
            cfg.oracle_support = sample.important_columns();
          for (int r = 0; r < repeats; ++r) {
            const m2m::CrossfitResult res = m2m::crossfit_run(sample.dataset, cfg);
            const auto& t = res.timings;
            csv << name << ',' << n << ',' << p << ',' << r << ','
                << m2m::format_double(t.learn_s) << ','
                << m2m::format_double(t.match_s) << ','
                << m2m::format_double(t.estimate_s) << ','
                << m2m::format_double(t.learn_s + t.match_s + t.estimate_s) << ','
                << m2m::format_double(res.ate()) << '\n';
            csv.flush();
          }
          std::cerr << "bench: " << name << " n=" << n << " p=" << p << " done\n";
        }
      }
    }
    if (!csv) throw std::runtime_error("failed writing " + out);
    std::cout << "wrote " << out << "\n";
    return 0;
  }
};

// --- experiment ---------------------------------------------------------

struct ExperimentCmd {
  std::string preset;
  int seeds = 0;        // 0 = preset default
  std::size_t n = 0;    // 0 = preset default
  std::size_t p = 0;
  int repeats = 0;
  int threads = 1;
  std::string out_dir = default_out_dir();

  struct ErrorRow {
    std::string dgp, method;
    std::uint64_t seed;
    double median_err;
  };

  static double run_median_err(const m2m::DgpSample& s, m2m::RunConfig cfg) {
    const m2m::CrossfitResult res = m2m::crossfit_run(s.dataset, cfg);
    return m2m::cate_errors(res.cates(), s.true_cate, s.true_ate).median;
  }

  void write_errors(const std::string& file, const std::vector<ErrorRow>& rows) const {
    std::ofstream csv(join(out_dir, file));
    if (!csv) throw std::runtime_error("cannot open " + file);
    csv << "dgp,method,seed,median_relative_error\n";
    for (const auto& r : rows)
      csv << r.dgp << ',' << r.method << ',' << r.seed << ','
          << m2m::format_double(r.median_err) << '\n';
    std::cout << "wrote " << join(out_dir, file) << "\n";
  }

  int run() const {
    fs::create_directories(out_dir);
    if (preset == "sine-vs-pgm") return sine_vs_pgm();
    if (preset == "metalearner") return metalearner();
    if (preset == "tree-vs-lcm") return tree_vs_lcm();
    if (preset == "lap") return lap();
    if (preset == "feature-select") return feature_select();
    if (preset == "scaling") return scaling();
    throw std::runtime_error(
        "unknown experiment '" + preset +
        "'; presets: sine-vs-pgm, metalearner, tree-vs-lcm, lap, feature-select, "
        "scaling");
  }

  // Nonlinear outcomes: shared-metric matching vs linear prognostic scores.
  int sine_vs_pgm() const {
    const int S = seeds ? seeds : 5;
    const std::size_t N = n ? n : 5000, P = p ? p : 100;
    std::vector<ErrorRow> rows;
    for (const std::string dgp : {"sine", "exponential"}) {
      for (int s = 0; s < S; ++s) {
        const auto seed = static_cast<std::uint64_t>(s);
        const m2m::DgpSample sample = m2m::generate(dgp, N, P, 0, 0, seed);
        for (const std::string method : {"lcm", "pgm_linear"}) {
          m2m::RunConfig cfg;
          cfg.method = m2m::method_from_string(method);
          cfg.k = 10;
          cfg.eta = 10;
          cfg.seed = seed;
          cfg.threads = threads;
          rows.push_back({dgp, method, seed, run_median_err(sample, cfg)});
        }
      }
    }
    write_errors("sine-vs-pgm_errors.csv", rows);
    return 0;
  }

  // Per-arm metrics on the sine data: weights should track each arm's own
  // outcome surface, and errors should not get worse than the shared metric.
  int metalearner() const {
    const int S = seeds ? seeds : 10;
    const std::size_t N = n ? n : 500, P = p ? p : 10;
    std::vector<ErrorRow> rows;
    std::ofstream wcsv(join(out_dir, "metalearner_weights.csv"));
    if (!wcsv) throw std::runtime_error("cannot open metalearner_weights.csv");
    wcsv << "seed,arm,column,mean_weight\n";
    for (int s = 0; s < S; ++s) {
      const auto seed = static_cast<std::uint64_t>(s);
      const m2m::DgpSample sample = m2m::generate("sine", N, P, 0, 0, seed);
      for (const std::string method : {"metalearner", "lcm"}) {
        m2m::RunConfig cfg;
        cfg.method = m2m::method_from_string(method);
        cfg.k = 10;
        cfg.eta = 5;
        cfg.seed = seed;
        cfg.threads = threads;
        const m2m::CrossfitResult res = m2m::crossfit_run(sample.dataset, cfg);
        rows.push_back(
            {"sine", method, seed,
             m2m::cate_errors(res.cates(), sample.true_cate, sample.true_ate).median});
        if (method == "metalearner") {
          for (int a = 0; a < 2; ++a) {
            std::vector<double> mean(sample.dataset.p(), 0.0);
            for (const auto& art : res.folds)
              for (std::size_t j = 0; j < mean.size(); ++j)
                mean[j] += art.metrics[static_cast<std::size_t>(a)].weights[j];
            for (std::size_t j = 0; j < mean.size(); ++j) {
              mean[j] /= static_cast<double>(res.folds.size());
              wcsv << s << ',' << a << ',' << sample.dataset.columns[j].name << ','
                   << m2m::format_double(mean[j]) << '\n';
            }
          }
        }
      }
    }
    write_errors("metalearner_errors.csv", rows);
    std::cout << "wrote " << join(out_dir, "metalearner_weights.csv") << "\n";
    return 0;
  }

  // Split-gain importances vs coefficient importances on a DGP whose
  // outcome is quadratic in one covariate (invisible to a linear model).
  int tree_vs_lcm() const {
    const int S = seeds ? seeds : 10;
    const std::size_t N = n ? n : 500, P = p ? p : 10;
    std::vector<ErrorRow> rows;
    std::ofstream wcsv(join(out_dir, "tree-vs-lcm_weights.csv"));
    if (!wcsv) throw std::runtime_error("cannot open tree-vs-lcm_weights.csv");
    wcsv << "seed,method,mean_weight_on_X1\n";
    for (int s = 0; s < S; ++s) {
      const auto seed = static_cast<std::uint64_t>(s);
      const m2m::DgpSample sample = m2m::generate("basic-quadratic", N, P, 0, 0, seed);
      for (const std::string method : {"tree", "lcm"}) {
        m2m::RunConfig cfg;
        cfg.method = m2m::method_from_string(method);
        cfg.k = 10;
        cfg.eta = 5;
        cfg.seed = seed;
        cfg.threads = threads;
        const m2m::CrossfitResult res = m2m::crossfit_run(sample.dataset, cfg);
        rows.push_back({"basic-quadratic", method, seed,
                        m2m::cate_errors(res.cates(), sample.true_cate, sample.true_ate)
                            .median});
        double w1 = 0.0;
        for (const auto& art : res.folds) w1 += art.metrics[0].weights[0];
        w1 /= static_cast<double>(res.folds.size());
        wcsv << s << ',' << method << ',' << m2m::format_double(w1) << '\n';
      }
    }
    write_errors("tree-vs-lcm_errors.csv", rows);
    std::cout << "wrote " << join(out_dir, "tree-vs-lcm_weights.csv") << "\n";
    return 0;
  }

  // Two-stage prognostic+metric matching vs plain metric matching,
  // half/half split, with per-covariate dispersion for the audit story.
  int lap() const {
    const int S = seeds ? seeds : 5;
    const std::size_t N = n ? n : 5000, P = p ? p : 20;
    std::vector<ErrorRow> rows;
    std::ofstream dcsv(join(out_dir, "lap_dispersion.csv"));
    if (!dcsv) throw std::runtime_error("cannot open lap_dispersion.csv");
    dcsv << "seed,method,column,dispersion\n";
    for (int s = 0; s < S; ++s) {
      const auto seed = static_cast<std::uint64_t>(s);
      const m2m::DgpSample sample = m2m::generate("quadratic", N, P, 5, 2, seed);
      for (const std::string method : {"lap_np", "lap_linear", "lcm"}) {
        m2m::RunConfig cfg;
        cfg.eta = 2;  // half train, half estimate
        cfg.seed = seed;
        cfg.threads = threads;
        if (method == "lcm") {
          cfg.method = m2m::Method::lcm;
          cfg.k = 10;
        } else {
          cfg.method = m2m::Method::lap;
          cfg.k1 = 25;
          cfg.k2 = 5;
          cfg.lap_score = method == "lap_np" ? m2m::Method::pgm_np
                                             : m2m::Method::pgm_linear;
        }
        const m2m::CrossfitResult res = m2m::crossfit_run(sample.dataset, cfg);
        rows.push_back({"quadratic", method, seed,
                        m2m::cate_errors(res.cates(), sample.true_cate, sample.true_ate)
                            .median});
        std::vector<m2m::MatchedGroup> groups;
        for (const auto& art : res.folds)
          groups.insert(groups.end(), art.groups.begin(), art.groups.end());
        const std::vector<double> disp = m2m::dispersion(groups, sample.dataset.x);
        for (std::size_t j = 0; j < disp.size(); ++j)
          dcsv << s << ',' << method << ',' << sample.dataset.columns[j].name << ','
               << m2m::format_double(disp[j]) << '\n';
      }
    }
    write_errors("lap_errors.csv", rows);
    std::cout << "wrote " << join(out_dir, "lap_dispersion.csv") << "\n";
    return 0;
  }

  // Graded weights vs their binarized selector vs the known-support metric.
  int feature_select() const {
    const int S = seeds ? seeds : 5;
    const std::size_t N = n ? n : 5000, P = p ? p : 100;
    std::vector<ErrorRow> rows;
    for (const std::string dgp : {"sine", "exponential", "quadratic"}) {
      for (int s = 0; s < S; ++s) {
        const auto seed = static_cast<std::uint64_t>(s);
        const m2m::DgpSample sample = m2m::generate(dgp, N, P, 10, 2, seed);
        for (const std::string method : {"lcm", "feature_select", "oracle"}) {
          m2m::RunConfig cfg;
          cfg.method = m2m::method_from_string(method);
          cfg.k = 10;
          cfg.eta = 5;
          cfg.seed = seed;
          cfg.threads = threads;
          if (cfg.method == m2m::Method::oracle)
            cfg.oracle_support = sample.important_columns();
          rows.push_back({dgp, method, seed, run_median_err(sample, cfg)});
        }
      }
    }
    write_errors("feature-select_errors.csv", rows);
    return 0;
  }

  // Stage timings along the published size grids.
  int scaling() const {
    BenchCmd bench;
    bench.methods = {"lcm"};
    bench.repeats = repeats ? repeats : 20;
    bench.threads = threads;
    bench.eta = 2;
    bench.k = 10;
    bench.out = join(out_dir, "scaling_n.csv");
    bench.n_values = {256, 512, 1024, 2048, 4096, 8192};
    bench.p_values = {64};
    if (n) bench.n_values = {n};
    bench.run();
    bench.out = join(out_dir, "scaling_p.csv");
    bench.n_values = {2048};
    bench.p_values = {8, 16, 32, 64, 128, 256, 512, 1024};
    if (p) bench.p_values = {p};
    bench.run();
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"matched-group treatment effect estimation"};
  app.require_subcommand(1);

  DgpCmd dgp_cmd;
  CLI::App* dgp = app.add_subcommand("dgp", "generate a synthetic dataset with truth");
  dgp->add_option("name", dgp_cmd.name,
                  "sine, exponential, quadratic or basic-quadratic")
      ->required();
  dgp->add_option("--n", dgp_cmd.n, "units")->capture_default_str();
  dgp->add_option("--p", dgp_cmd.p, "covariates")->capture_default_str();
  dgp->add_option("--k", dgp_cmd.k, "outcome-relevant covariates (quadratic)")
      ->capture_default_str();
  dgp->add_option("--kappa", dgp_cmd.kappa, "treatment-relevant covariates (quadratic)")
      ->capture_default_str();
  dgp->add_option("--seed", dgp_cmd.seed, "generator seed")->capture_default_str();
  dgp->add_option("--out-dir", dgp_cmd.out_dir, "output directory")
      ->capture_default_str();

  RunCmd run_cmd;
  CLI::App* run = app.add_subcommand("run", "estimate effects end to end");
  run_cmd.data.add_options(run);
  run_cmd.method.add_options(run);
  run->add_option("--threads", run_cmd.threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  run->add_option("--out-dir", run_cmd.out_dir, "output directory")
      ->capture_default_str();

  AuditCmd audit_cmd;
  CLI::App* audit = app.add_subcommand("audit", "matched-group diagnostics for a run");
  audit->add_option("--run-dir", audit_cmd.run_dir, "directory a run wrote to")
      ->required();
  audit->add_option("--data", audit_cmd.data_override, "covariate CSV override");
  audit->add_option("--truth", audit_cmd.truth_override, "truth CSV override");

  BenchCmd bench_cmd;
  CLI::App* bench = app.add_subcommand("bench", "stage timings over size grids");
  bench->add_option("--methods", bench_cmd.methods, "methods to time")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--n-values", bench_cmd.n_values, "sample sizes")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--p-values", bench_cmd.p_values, "covariate counts")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--dgp", bench_cmd.dgp, "generator")->capture_default_str();
  bench->add_option("--dgp-k", bench_cmd.dgp_k, "outcome-relevant covariates")
      ->capture_default_str();
  bench->add_option("--dgp-kappa", bench_cmd.dgp_kappa, "treatment-relevant covariates")
      ->capture_default_str();
  bench->add_option("--k", bench_cmd.k, "matched neighbors per arm")
      ->capture_default_str();
  bench->add_option("--eta", bench_cmd.eta, "folds")->capture_default_str();
  bench->add_option("--repeats", bench_cmd.repeats, "timing repeats per cell")
      ->capture_default_str();
  bench->add_option("--seed", bench_cmd.seed, "seed")->capture_default_str();
  bench->add_option("--threads", bench_cmd.threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  bench->add_option("--out", bench_cmd.out, "timing CSV path")->capture_default_str();

  ExperimentCmd exp_cmd;
  CLI::App* exp = app.add_subcommand("experiment", "named desk-scale study recipes");
  exp->add_option("preset", exp_cmd.preset,
                  "sine-vs-pgm, metalearner, tree-vs-lcm, lap, feature-select, scaling")
      ->required();
  exp->add_option("--seeds", exp_cmd.seeds, "seeds to run (0 = preset default)")
      ->capture_default_str();
  exp->add_option("--n", exp_cmd.n, "override units (0 = preset default)")
      ->capture_default_str();
  exp->add_option("--p", exp_cmd.p, "override covariates (0 = preset default)")
      ->capture_default_str();
  exp->add_option("--repeats", exp_cmd.repeats, "override repeats (scaling)")
      ->capture_default_str();
  exp->add_option("--threads", exp_cmd.threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  exp->add_option("--out-dir", exp_cmd.out_dir, "output directory")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
    if (dgp->parsed()) return dgp_cmd.run();
    if (run->parsed()) return run_cmd.run();
    if (audit->parsed()) return audit_cmd.run();
    if (bench->parsed()) return bench_cmd.run();
    if (exp->parsed()) return exp_cmd.run();
    return 1;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cout << json{{"error", e.what()}}.dump() << "\n";
    return app.exit(e, std::cerr, std::cerr);
  } catch (const std::exception& e) {
    std::cout << json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
}
