#pragma once

// Command implementations behind the command-line front end. Each run_*
// function does the work of one subcommand, writes human output to `out` and
// complaints to `err`, and returns the process exit code:
//   0 success, 1 verification breach, 2 data or config error,
//   3 estimation did not converge (the report is still written).

#include <cstdint>
#include <iosfwd>
#include <string>

#include "dagchoice/estimation.hpp"

namespace dagchoice::cli {

ModelFamily parse_family(const std::string& text);
DagVariant parse_dag(const std::string& text);

struct EstimateOptions {
  std::string model = "lmdc";
  std::string dag = "bic";
  bool dag_given = false;  // explicit --dag contradicts the baseline families
  bool count_mode = false;
  std::string scale_attrs = "const,count";
  bool scale_attrs_given = false;
  std::string items_path;
  std::string obs_path;
  std::string bounds_rules;
  std::string out_path = "report.json";
  double tol = 1e-6;
  int max_iter = 500;
  int threads = 1;
  std::uint64_t seed = 1;
};

struct PredictOptions {
  std::string report_path;
  std::string items_path;
  std::string obs_path;
  std::string bounds_rules;
};

struct SimulateOptions {
  std::string out_dir = ".";
  int m = 10;
  int lower = 0;
  int upper = 5;
  int n_estimation = 1000;
  int n_prediction = 300;
  std::string dag = "bic";
  bool count_mode = false;
  std::uint64_t seed = 1;
};

struct VerifyOptions {
  int min_m = 3;
  int max_m = 10;
  int draws = 20;
  double tol = 1e-10;
  std::uint64_t seed = 1;
  bool include_count = true;
};

struct BenchOptions {
  int max_m = 50;
  int n_obs = 1000;
  int baseline_obs = 3000;
  std::uint64_t seed = 1;
  int threads = 1;
};

int run_estimate(const EstimateOptions& options, std::ostream& out, std::ostream& err);
int run_predict(const PredictOptions& options, std::ostream& out, std::ostream& err);
int run_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err);
int run_verify(const VerifyOptions& options, std::ostream& out, std::ostream& err);
int run_bench(const BenchOptions& options, std::ostream& out, std::ostream& err);

}  // namespace dagchoice::cli
