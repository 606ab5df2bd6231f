#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "dagchoice/data_io.hpp"
#include "dagchoice/oracle.hpp"
#include "dagchoice/recursive_logit.hpp"

namespace dagchoice::cli {

namespace {

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

std::string fmt(Scalar v, int precision = 6) {
  if (std::isnan(v)) return "n/a";
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

void print_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (widths.size() <= c) widths.push_back(0);
      widths[c] = std::max(widths[c], row[c].size());
    }
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << "  ";
      out << (c == 0 ? std::left : std::right) << std::setw(static_cast<int>(widths[c])) << row[c];
    }
    out << '\n';
  }
  out << std::left;
}

struct LoadedReport {
  ModelSpec spec;
  Vector estimates;
};

LoadedReport load_report(const std::string& path, const ItemUniverse& universe) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad report JSON: " + e.what());
  }
  try {
    LoadedReport loaded;
    loaded.spec.family = parse_family(j.at("model").get<std::string>());
    const auto dag = j.at("dag").get<std::string>();
    loaded.spec.dag = dag.empty() ? DagVariant::BiC : parse_dag(dag);
    loaded.spec.count_mode = j.at("count_mode").get<bool>();
    std::vector<Scalar> estimates;
    std::string scale_text;
    for (const auto& p : j.at("parameters")) {
      estimates.push_back(p.at("estimate").get<Scalar>());
      const auto name = p.at("name").get<std::string>();
      if (name.starts_with("scale:")) {
        if (!scale_text.empty()) scale_text += ',';
        scale_text += name.substr(6);
      }
    }
    if (loaded.spec.family == ModelFamily::NestedRl)
      loaded.spec.scales = ScaleSpec::parse(scale_text, universe);
    loaded.estimates = Eigen::Map<const Vector>(estimates.data(), estimates.size());
    const int expected = parameter_count(loaded.spec, universe);
    if (loaded.estimates.size() != expected)
      throw DataError(path + ": report has " + std::to_string(loaded.estimates.size()) +
                      " parameters, the item file implies " + std::to_string(expected));
    return loaded;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": bad report JSON: " + e.what());
  }
}

std::vector<Observation> load_scored_observations(const std::string& path,
                                                  const ItemUniverse& universe, bool count_mode,
                                                  const std::string& bounds_rules) {
  auto observations = load_observations(path, universe, count_mode);
  if (!bounds_rules.empty())
    apply_bounds_rules(observations, BoundsRules::parse(bounds_rules));
  return observations;
}

Scalar time_fit(const ModelSpec& spec, const ItemUniverse& universe,
                std::span<const Observation> observations, int threads) {
  FitOptions options;
  options.threads = threads;
  options.compute_std_errors = false;
  const Vector init = Vector::Zero(parameter_count(spec, universe));
  const auto t0 = std::chrono::steady_clock::now();
  (void)fit(spec, universe, observations, init, options);
  return std::chrono::duration<Scalar>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ModelFamily parse_family(const std::string& text) {
  if (text == "lmdc") return ModelFamily::LmdcRl;
  if (text == "nested") return ModelFamily::NestedRl;
  if (text == "sc-base") return ModelFamily::ScBase;
  if (text == "mc-base") return ModelFamily::McBase;
  throw ConfigError("unknown model '" + text + "' (expected lmdc, nested, sc-base or mc-base)");
}

DagVariant parse_dag(const std::string& text) {
  if (text == "bic") return DagVariant::BiC;
  if (text == "muc") return DagVariant::MuC;
  throw ConfigError("unknown dag '" + text + "' (expected bic or muc)");
}

int run_estimate(const EstimateOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ModelFamily family = parse_family(options.model);
    const bool baseline = family == ModelFamily::ScBase || family == ModelFamily::McBase;
    if (baseline && options.dag_given)
      throw ConfigError("--dag does not apply to " + options.model +
                        ", which ignores the graph");
    if (options.scale_attrs_given && family != ModelFamily::NestedRl)
      throw ConfigError("--scale-attrs applies to the nested model only");
    if (options.items_path.empty() || options.obs_path.empty())
      throw ConfigError("estimate needs --items and --obs");

    const ItemUniverse universe = load_items(options.items_path);
    const auto observations = load_scored_observations(options.obs_path, universe,
                                                       options.count_mode, options.bounds_rules);
    if (observations.empty()) throw DataError(options.obs_path + ": no observations");

    ModelSpec spec;
    spec.family = family;
    spec.dag = parse_dag(options.dag);
    spec.count_mode = options.count_mode;
    if (family == ModelFamily::NestedRl)
      spec.scales = ScaleSpec::parse(options.scale_attrs, universe);

    FitOptions fit_options;
    fit_options.tol = options.tol;
    fit_options.max_iter = options.max_iter;
    fit_options.threads = options.threads;
    fit_options.seed = options.seed;

    const Vector init = Vector::Zero(parameter_count(spec, universe));
    const EstimationReport report = fit(spec, universe, observations, init, fit_options);

    std::ofstream json_out(options.out_path);
    if (!json_out) throw DataError("cannot open file for writing: " + options.out_path);
    json_out << report_to_json(report) << '\n';
    if (!json_out.flush()) throw DataError("write failed: " + options.out_path);

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"parameter", "estimate", "std. err.", "t-stat"});
    for (std::size_t i = 0; i < report.parameter_names.size(); ++i)
      rows.push_back({report.parameter_names[i], fmt(report.estimates[static_cast<int>(i)]),
                      fmt(report.std_errors[static_cast<int>(i)]),
                      fmt(report.t_stats[static_cast<int>(i)], 4)});
    print_table(out, rows);
    out << "final log-likelihood  " << fmt(report.final_ll, 10) << '\n'
        << "gradient max-norm     " << fmt(report.grad_norm, 3) << '\n'
        << "iterations            " << report.iterations << '\n'
        << "converged             " << (report.converged ? "yes" : "no") << '\n';
    for (const auto& d : report.diagnostics) out << "note: " << d << '\n';
    out << "report written to " << options.out_path << '\n';
    return report.converged ? 0 : 3;
  });
}

int run_predict(const PredictOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (options.report_path.empty() || options.items_path.empty() || options.obs_path.empty())
      throw ConfigError("predict needs --report, --items and --obs");
    const ItemUniverse universe = load_items(options.items_path);
    const LoadedReport loaded = load_report(options.report_path, universe);
    const auto observations = load_scored_observations(
        options.obs_path, universe, loaded.spec.count_mode, options.bounds_rules);
    if (observations.empty()) {
      out << "no observations to score\n";
      return 0;
    }

    const auto groups = predict_by_group(loaded.spec, universe, loaded.estimates, observations);
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"bounds", "n_obs", "avg. log-likelihood"});
    Scalar total = 0.0;
    int n = 0;
    for (const auto& g : groups) {
      rows.push_back({"[" + std::to_string(g.bounds.lower) + "," +
                          std::to_string(g.bounds.upper) + "]",
                      std::to_string(g.n_obs), fmt(g.average_ll, 8)});
      total += g.average_ll * g.n_obs;
      n += g.n_obs;
    }
    rows.push_back({"overall", std::to_string(n), fmt(total / n, 8)});
    print_table(out, rows);
    return 0;
  });
}

int run_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    SyntheticSpec spec;
    spec.m = options.m;
    spec.bounds = {options.lower, options.upper};
    spec.n_estimation = options.n_estimation;
    spec.n_prediction = options.n_prediction;
    spec.seed = options.seed;
    spec.dag = parse_dag(options.dag);
    spec.count_mode = options.count_mode;

    const Dataset dataset = generate_synthetic(spec);
    const std::filesystem::path dir(options.out_dir);
    std::filesystem::create_directories(dir);
    save_items(dataset.universe, (dir / "items.csv").string());
    save_observations(dataset.estimation_set(), (dir / "obs_estimation.csv").string());
    save_observations(dataset.prediction_set(), (dir / "obs_prediction.csv").string());
    save_dataset_json(dataset, (dir / "dataset.json").string());
    out << dataset.provenance << '\n'
        << "wrote items.csv, obs_estimation.csv, obs_prediction.csv, dataset.json to "
        << dir.string() << '\n';
    return 0;
  });
}

int run_verify(const VerifyOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (options.min_m < 1 || options.max_m < options.min_m)
      throw ConfigError("verify needs 1 <= min-m <= max-m");
    if (options.draws < 1) throw ConfigError("verify needs at least one draw");

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<Scalar> normal(0.0, 1.0);
    bool ok = true;

    const auto check_plain = [&](int m) {
      Scalar worst = 0.0;
      for (int draw = 0; draw < options.draws; ++draw) {
        Matrix attributes(m, 3);
        for (int i = 0; i < m; ++i) {
          attributes(i, 0) = std::exp(normal(rng));
          attributes(i, 1) = std::exp(normal(rng));
          attributes(i, 2) = 1.0;
        }
        const ItemUniverse universe(attributes, {"x1", "x2", "const"});
        Vector beta(3);
        beta << normal(rng), normal(rng), normal(rng);
        const ParameterVector params{beta, {}, 1.0};
        std::uniform_int_distribution<int> upper_draw(1, m);
        const int upper = upper_draw(rng);
        std::uniform_int_distribution<int> lower_draw(0, upper);
        const Bounds bounds{lower_draw(rng), upper};

        const auto oracle = enumerate_lmdc(universe, bounds, params);
        const ArcUtilities utils = make_arc_utilities(universe, params);
        for (const DagVariant variant : {DagVariant::BiC, DagVariant::MuC}) {
          const ChoiceDag dag = build_dag(variant, m, bounds);
          const ValueTable table = solve_value(dag, utils);
          for (const auto& composite : oracle.composites) {
            Observation obs{"v", bounds, composite.selections};
            const Scalar p = std::exp(subset_log_probability(dag, table, utils, obs));
            worst = std::max(worst, std::abs(p - composite.probability));
          }
        }
      }
      return worst;
    };

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"check", "max |dP|", "tolerance", "result"});
    for (int m = options.min_m; m <= options.max_m; ++m) {
      const Scalar worst = check_plain(m);
      const bool pass = worst < options.tol;
      ok = ok && pass;
      rows.push_back({"plain m=" + std::to_string(m), fmt(worst, 3), fmt(options.tol, 3),
                      pass ? "ok" : "FAIL"});
    }

    if (options.include_count) {
      for (int m = 2; m <= std::min(5, options.max_m); ++m) {
        Scalar worst = 0.0;
        for (int draw = 0; draw < options.draws; ++draw) {
          Matrix attributes(m, 3);
          for (int i = 0; i < m; ++i) {
            attributes(i, 0) = std::exp(normal(rng));
            attributes(i, 1) = std::exp(normal(rng));
            attributes(i, 2) = 1.0;
          }
          const ItemUniverse universe(attributes, {"x1", "x2", "const"});
          Vector beta(3);
          beta << normal(rng), normal(rng), normal(rng);
          const ParameterVector params{beta, {}, 1.0};
          std::uniform_int_distribution<int> upper_draw(1, 4);
          const int upper = upper_draw(rng);
          std::uniform_int_distribution<int> lower_draw(0, upper);
          const Bounds bounds{lower_draw(rng), upper};

          const auto oracle = enumerate_count_lmdc(universe, bounds, params);
          const ArcUtilities utils = make_arc_utilities(universe, params);
          for (const DagVariant variant : {DagVariant::BiCCount, DagVariant::MuCCount}) {
            const ChoiceDag dag = build_dag(variant, m, bounds);
            const ValueTable table = solve_value(dag, utils);
            for (const auto& composite : oracle.composites) {
              Observation obs{"v", bounds, composite.selections};
              const Scalar p = std::exp(subset_log_probability(dag, table, utils, obs));
              worst = std::max(worst, std::abs(p - composite.probability));
            }
          }
        }
        const bool pass = worst < options.tol;
        ok = ok && pass;
        rows.push_back({"count m=" + std::to_string(m), fmt(worst, 3), fmt(options.tol, 3),
                        pass ? "ok" : "FAIL"});
      }
    }

    print_table(out, rows);
    out << (ok ? "verification passed" : "verification FAILED") << '\n';
    return ok ? 0 : 1;
  });
}

int run_bench(const BenchOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    struct Row {
      int m;
      Bounds bounds;
    };
    const std::vector<Row> grid = {{5, {0, 3}},   {10, {0, 3}},  {10, {0, 5}},
                                   {20, {0, 5}},  {20, {0, 10}}, {30, {0, 10}},
                                   {30, {0, 20}}, {50, {0, 10}}, {50, {0, 30}}};

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"m", "L", "U", "rl-bic", "rl-muc", "sc-base", "mc-base"});
    std::uint64_t seed = options.seed;
    for (const Row& row : grid) {
      if (row.m > options.max_m) continue;

      SyntheticSpec spec;
      spec.m = row.m;
      spec.bounds = row.bounds;
      spec.n_estimation = options.n_obs;
      spec.n_prediction = 0;
      spec.seed = seed++;
      const Dataset rl_data = generate_synthetic(spec);
      spec.n_estimation = options.baseline_obs;
      spec.seed = seed++;
      const Dataset base_data = generate_synthetic(spec);

      ModelSpec bic{ModelFamily::LmdcRl, DagVariant::BiC, false, {}};
      ModelSpec muc{ModelFamily::LmdcRl, DagVariant::MuC, false, {}};
      ModelSpec sc{ModelFamily::ScBase, DagVariant::BiC, false, {}};
      ModelSpec mc{ModelFamily::McBase, DagVariant::BiC, false, {}};
      const Scalar t_bic =
          time_fit(bic, rl_data.universe, rl_data.observations, options.threads);
      const Scalar t_muc =
          time_fit(muc, rl_data.universe, rl_data.observations, options.threads);
      const Scalar t_sc =
          time_fit(sc, base_data.universe, base_data.observations, options.threads);
      const Scalar t_mc =
          time_fit(mc, base_data.universe, base_data.observations, options.threads);
      rows.push_back({std::to_string(row.m), std::to_string(row.bounds.lower),
                      std::to_string(row.bounds.upper), fmt(t_bic, 3), fmt(t_muc, 3),
                      fmt(t_sc, 3), fmt(t_mc, 3)});
    }
    print_table(out, rows);
    out << "times in seconds; rl rows fit " << options.n_obs << " observations, baselines "
        << options.baseline_obs << '\n';
    return 0;
  });
}

}  // namespace dagchoice::cli
