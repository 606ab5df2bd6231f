#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Subset-choice model estimation on choice DAGs"};
  app.require_subcommand(1);

  dagchoice::cli::EstimateOptions estimate;
  auto* est = app.add_subcommand("estimate", "Fit a model and write a JSON report");
  est->add_option("--model", estimate.model, "Model family: lmdc, nested, sc-base, mc-base")
      ->capture_default_str();
  auto* est_dag = est->add_option("--dag", estimate.dag, "DAG variant: bic or muc")
                      ->capture_default_str();
  est->add_flag("--count-mode", estimate.count_mode, "Allow repeated items (count extension)");
  auto* est_scales = est->add_option("--scale-attrs", estimate.scale_attrs,
                                     "Nested scale features: const, count, attribute names")
                         ->capture_default_str();
  est->add_option("--items", estimate.items_path, "Item attribute CSV")->required();
  est->add_option("--obs", estimate.obs_path, "Observations CSV")->required();
  est->add_option("--bounds-rules", estimate.bounds_rules,
                  "Size brackets like 1-2,3-5 overriding per-observation bounds");
  est->add_option("--out", estimate.out_path, "Report JSON path")->capture_default_str();
  est->add_option("--tol", estimate.tol, "Gradient max-norm stopping tolerance")
      ->capture_default_str();
  est->add_option("--max-iter", estimate.max_iter, "Iteration cap")->capture_default_str();
  est->add_option("--threads", estimate.threads, "Worker thread cap")->capture_default_str();
  est->add_option("--seed", estimate.seed, "Seed for nested multistarts")->capture_default_str();

  dagchoice::cli::PredictOptions predict;
  auto* pre = app.add_subcommand("predict", "Score a holdout set with a fitted report");
  pre->add_option("--report", predict.report_path, "Report JSON from estimate")->required();
  pre->add_option("--items", predict.items_path, "Item attribute CSV")->required();
  pre->add_option("--obs", predict.obs_path, "Holdout observations CSV")->required();
  pre->add_option("--bounds-rules", predict.bounds_rules,
                  "Size brackets like 1-2,3-5 overriding per-observation bounds");

  dagchoice::cli::SimulateOptions simulate;
  auto* sim = app.add_subcommand("simulate", "Write a synthetic dataset");
  sim->add_option("--out-dir", simulate.out_dir, "Output directory")->capture_default_str();
  sim->add_option("--m", simulate.m, "Number of items")->capture_default_str();
  sim->add_option("--lower", simulate.lower, "Lower bound L")->capture_default_str();
  sim->add_option("--upper", simulate.upper, "Upper bound U")->capture_default_str();
  sim->add_option("--n-estimation", simulate.n_estimation, "Estimation observations")
      ->capture_default_str();
  sim->add_option("--n-prediction", simulate.n_prediction, "Prediction observations")
      ->capture_default_str();
  sim->add_option("--dag", simulate.dag, "Sampling DAG: bic or muc")->capture_default_str();
  sim->add_flag("--count-mode", simulate.count_mode, "Sample multisets (count extension)");
  sim->add_option("--seed", simulate.seed, "RNG seed")->capture_default_str();

  dagchoice::cli::VerifyOptions verify;
  auto* ver = app.add_subcommand("verify", "Check DAG probabilities against enumeration");
  ver->add_option("--min-m", verify.min_m, "Smallest item count")->capture_default_str();
  ver->add_option("--max-m", verify.max_m, "Largest item count")->capture_default_str();
  ver->add_option("--draws", verify.draws, "Random instances per m")->capture_default_str();
  ver->add_option("--tol", verify.tol, "Probability tolerance")->capture_default_str();
  ver->add_option("--seed", verify.seed, "RNG seed")->capture_default_str();
  ver->add_flag("!--no-count", verify.include_count, "Skip the count-extension sweep");

  dagchoice::cli::BenchOptions bench;
  auto* ben = app.add_subcommand("bench", "Time fits across the synthetic grid");
  ben->add_option("--max-m", bench.max_m, "Skip grid rows above this m")->capture_default_str();
  ben->add_option("--n-obs", bench.n_obs, "Observations for the RL fits")->capture_default_str();
  ben->add_option("--baseline-obs", bench.baseline_obs, "Observations for the baseline fits")
      ->capture_default_str();
  ben->add_option("--threads", bench.threads, "Worker thread cap")->capture_default_str();
  ben->add_option("--seed", bench.seed, "RNG seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  estimate.dag_given = est_dag->count() > 0;
  estimate.scale_attrs_given = est_scales->count() > 0;

  if (est->parsed()) return dagchoice::cli::run_estimate(estimate, std::cout, std::cerr);
  if (pre->parsed()) return dagchoice::cli::run_predict(predict, std::cout, std::cerr);
  if (sim->parsed()) return dagchoice::cli::run_simulate(simulate, std::cout, std::cerr);
  if (ver->parsed()) return dagchoice::cli::run_verify(verify, std::cout, std::cerr);
  if (ben->parsed()) return dagchoice::cli::run_bench(bench, std::cout, std::cerr);
  return 2;
}
