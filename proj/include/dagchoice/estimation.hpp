#pragma once

// Maximum-likelihood estimation: limited-memory quasi-Newton (L-BFGS two-loop
// recursion) with Armijo backtracking on analytic gradients. Standard errors
// come from the observed information, with the Hessian taken as central finite
// differences of the analytic gradient.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dagchoice/dag.hpp"
#include "dagchoice/nested_logit.hpp"
#include "dagchoice/types.hpp"

namespace dagchoice {

enum class ModelFamily { LmdcRl, NestedRl, ScBase, McBase };

std::string to_string(ModelFamily family);

struct ModelSpec {
  ModelFamily family = ModelFamily::LmdcRl;
  DagVariant dag = DagVariant::BiC;  // BiC or MuC; count_mode picks the adapted variant
  bool count_mode = false;
  ScaleSpec scales;  // NestedRl only
};

// The dag variant actually built for this spec.
DagVariant effective_variant(const ModelSpec& spec);

struct FitOptions {
  Scalar tol = 1e-6;       // stop when the gradient max-norm drops below this
  int max_iter = 500;
  int memory = 8;          // L-BFGS history length
  int threads = 1;
  int multistart = 3;      // NestedRl only: seeded restarts, best LL kept
  std::uint64_t seed = 1;  // seeds the restarts
  bool compute_std_errors = true;
};

struct IterationRecord {
  int iteration = 0;
  Scalar ll = 0.0;
  Scalar grad_norm = 0.0;
  Scalar step = 0.0;
};

struct EstimationReport {
  std::string model;
  std::string dag;
  bool count_mode = false;
  std::vector<std::string> parameter_names;
  Vector estimates;
  Vector std_errors;  // NaN where the information matrix is not usable
  Vector t_stats;
  Scalar final_ll = 0.0;
  Scalar grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool information_pd = false;
  Scalar timing_seconds = 0.0;
  std::vector<IterationRecord> trace;
  std::vector<std::string> diagnostics;
};

// Log-likelihood and (optionally) its gradient at theta. Gradient output is
// resized by the callee. Implementations cache their dags/choice sets.
using Objective = std::function<Scalar(const Vector& theta, Vector* gradient)>;

// Builds the likelihood for a model family. The universe and observations must
// outlive the returned closure.
Objective make_objective(const ModelSpec& spec, const ItemUniverse& universe,
                         std::span<const Observation> observations, int threads = 1);

int parameter_count(const ModelSpec& spec, const ItemUniverse& universe);
std::vector<std::string> parameter_names(const ModelSpec& spec, const ItemUniverse& universe);

EstimationReport fit(const ModelSpec& spec, const ItemUniverse& universe,
                     std::span<const Observation> observations, const Vector& init,
                     const FitOptions& options = {});

// sqrt(diag(inverse observed information)) at theta; information_pd reports
// whether the information matrix admitted a Cholesky factorization.
Vector standard_errors(const Objective& objective, const Vector& theta, bool* information_pd);

// Average per-observation holdout log-likelihood under the model's own
// universal-choice-set likelihood: the RL likelihood for LMDC and both
// baselines (their fitted betas are evaluated inside it), the nested RL
// likelihood for NestedRl. Empty holdout yields 0.
Scalar predict_loglik(const ModelSpec& spec, const ItemUniverse& universe, const Vector& fitted,
                      std::span<const Observation> holdout);

struct GroupPrediction {
  Bounds bounds;
  int n_obs = 0;
  Scalar average_ll = 0.0;
};

std::vector<GroupPrediction> predict_by_group(const ModelSpec& spec, const ItemUniverse& universe,
                                              const Vector& fitted,
                                              std::span<const Observation> holdout);

// Stable-key-order JSON rendering of a report.
std::string report_to_json(const EstimationReport& report, int indent = 2);

}  // namespace dagchoice
