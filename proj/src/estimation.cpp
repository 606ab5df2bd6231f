#include "dagchoice/estimation.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <memory>
#include <random>
#include <sstream>

#include "dagchoice/baselines.hpp"
#include "dagchoice/recursive_logit.hpp"

namespace dagchoice {

std::string to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::LmdcRl: return "lmdc";
    case ModelFamily::NestedRl: return "nested";
    case ModelFamily::ScBase: return "sc-base";
    case ModelFamily::McBase: return "mc-base";
  }
  return "?";
}

DagVariant effective_variant(const ModelSpec& spec) {
  if (spec.dag != DagVariant::BiC && spec.dag != DagVariant::MuC)
    throw ConfigError("model spec takes the base dag (bic or muc); count_mode selects the "
                      "adapted variant");
  if (!spec.count_mode) return spec.dag;
  return spec.dag == DagVariant::BiC ? DagVariant::BiCCount : DagVariant::MuCCount;
}

int parameter_count(const ModelSpec& spec, const ItemUniverse& universe) {
  int n = universe.num_attributes();
  if (spec.family == ModelFamily::NestedRl) n += spec.scales.size();
  return n;
}

std::vector<std::string> parameter_names(const ModelSpec& spec, const ItemUniverse& universe) {
  std::vector<std::string> names = universe.attribute_names();
  if (spec.family == ModelFamily::NestedRl)
    for (const std::string& s : spec.scales.names(universe)) names.push_back(s);
  return names;
}

Objective make_objective(const ModelSpec& spec, const ItemUniverse& universe,
                         std::span<const Observation> observations, int threads) {
  const auto K = universe.num_attributes();
  switch (spec.family) {
    case ModelFamily::LmdcRl: {
      auto dags = std::make_shared<DagsByBounds>(
          build_dags(effective_variant(spec), universe.size(), observations));
      return [&universe, observations, dags, threads](const Vector& theta, Vector* grad) {
        const ParameterVector params{theta, {}, 1.0};
        if (grad) *grad = log_likelihood_gradient(*dags, observations, universe, params, threads);
        return log_likelihood(*dags, observations, universe, params, threads);
      };
    }
    case ModelFamily::NestedRl: {
      if (spec.scales.empty())
        throw ConfigError("nested model needs at least one scale attribute");
      auto dags = std::make_shared<DagsByBounds>(
          build_dags(effective_variant(spec), universe.size(), observations));
      const ScaleSpec scales = spec.scales;
      return [&universe, observations, dags, scales, threads, K](const Vector& theta,
                                                                 Vector* grad) {
        const ParameterVector params{theta.head(K), theta.tail(theta.size() - K), 1.0};
        if (grad)
          *grad = nested_log_likelihood_gradient(*dags, observations, universe, params, scales,
                                                 threads);
        return nested_log_likelihood(*dags, observations, universe, params, scales, threads);
      };
    }
    case ModelFamily::ScBase: {
      return [&universe, observations](const Vector& theta, Vector* grad) {
        const ParameterVector params{theta, {}, 1.0};
        if (grad) *grad = sc_base_gradient(observations, universe, params);
        return sc_base_log_likelihood(observations, universe, params).ll;
      };
    }
    case ModelFamily::McBase: {
      auto gamma = std::make_shared<SampledChoiceSet>(build_sampled_choice_set(observations));
      return [&universe, observations, gamma](const Vector& theta, Vector* grad) {
        const ParameterVector params{theta, {}, 1.0};
        if (grad) *grad = mc_base_gradient(observations, *gamma, universe, params);
        return mc_base_log_likelihood(observations, *gamma, universe, params).ll;
      };
    }
  }
  throw ConfigError("unknown model family");
}

namespace {

struct LbfgsResult {
  Vector theta;
  Scalar ll = 0.0;
  Scalar grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<IterationRecord> trace;
  std::vector<std::string> diagnostics;
};

// Maximizes the objective; works on f = -LL internally.
LbfgsResult lbfgs_maximize(const Objective& objective, Vector theta, const FitOptions& options) {
  LbfgsResult res;
  const auto n = theta.size();
  Vector grad(n);
  Scalar ll = objective(theta, &grad);
  if (!std::isfinite(ll))
    throw ModelError("log-likelihood is not finite at the initial parameters");

  std::deque<Vector> s_hist, y_hist;
  std::deque<Scalar> rho_hist;
  Vector g = -grad;  // gradient of f = -LL
  res.trace.push_back({0, ll, grad.lpNorm<Eigen::Infinity>(), 0.0});

  int iter = 0;
  int flat_steps = 0;
  for (; iter < options.max_iter; ++iter) {
    const Scalar gnorm = g.lpNorm<Eigen::Infinity>();
    if (gnorm < options.tol) {
      res.converged = true;
      break;
    }

    // two-loop recursion for the search direction d = -H g
    Vector d = -g;
    const int h = static_cast<int>(s_hist.size());
    std::vector<Scalar> alpha(h);
    for (int i = h - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(d);
      d -= alpha[i] * y_hist[i];
    }
    if (h > 0) d *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (int i = 0; i < h; ++i) {
      const Scalar beta = rho_hist[i] * y_hist[i].dot(d);
      d += (alpha[i] - beta) * s_hist[i];
    }
    Scalar slope = g.dot(d);
    if (slope >= 0) {  // not a descent direction; fall back to steepest descent
      d = -g;
      slope = g.dot(d);
    }

    // Armijo backtracking on f = -ll. Without curvature history the direction
    // is the raw gradient, whose norm is a poor step scale; shrink it.
    const Scalar c1 = 1e-4;
    Scalar step = h > 0 ? 1.0 : std::min(1.0, 1.0 / std::max(1.0, d.norm()));
    Scalar ll_new = kNegInf;
    Vector theta_new, grad_new(n);
    bool accepted = false;
    for (int half = 0; half < 60; ++half) {
      theta_new = theta + step * d;
      ll_new = objective(theta_new, &grad_new);
      if (std::isfinite(ll_new) && -ll_new <= -ll + c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.diagnostics.push_back("line search failed at iteration " + std::to_string(iter + 1));
      break;
    }

    Vector s = theta_new - theta;
    Vector y = -grad_new - g;  // difference of f-gradients
    const Scalar sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > options.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    // A run of steps with no measurable objective change means the remaining
    // gradient is below what double precision can act on; call that converged.
    flat_steps = std::abs(ll_new - ll) <= 1e-11 * (1.0 + std::abs(ll_new)) ? flat_steps + 1 : 0;
    theta = std::move(theta_new);
    ll = ll_new;
    g = -grad_new;
    res.trace.push_back({iter + 1, ll, g.lpNorm<Eigen::Infinity>(), step});
    if (flat_steps >= 2) {
      res.converged = true;
      res.diagnostics.push_back("stopped on objective improvement below 1e-11 relative");
      ++iter;
      break;
    }
  }
  if (!res.converged && iter == options.max_iter)
    res.diagnostics.push_back("iteration limit reached");

  res.theta = std::move(theta);
  res.ll = ll;
  res.grad_norm = g.lpNorm<Eigen::Infinity>();
  res.iterations = iter;
  return res;
}

}  // namespace

Vector standard_errors(const Objective& objective, const Vector& theta, bool* information_pd) {
  const auto n = theta.size();
  Matrix hessian(n, n);
  Vector gp(n), gm(n), probe = theta;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar h = 1e-4 * std::max(1.0, std::abs(theta[j]));
    probe[j] = theta[j] + h;
    objective(probe, &gp);
    probe[j] = theta[j] - h;
    objective(probe, &gm);
    probe[j] = theta[j];
    hessian.col(j) = (gp - gm) / (2 * h);
  }
  const Matrix info = -0.5 * (hessian + hessian.transpose());
  Eigen::LLT<Matrix> llt(info);
  Vector se = Vector::Constant(n, std::numeric_limits<Scalar>::quiet_NaN());
  const bool pd = llt.info() == Eigen::Success;
  if (pd) {
    const Matrix cov = llt.solve(Matrix::Identity(n, n));
    se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  if (information_pd) *information_pd = pd;
  return se;
}

EstimationReport fit(const ModelSpec& spec, const ItemUniverse& universe,
                     std::span<const Observation> observations, const Vector& init,
                     const FitOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = parameter_count(spec, universe);
  if (init.size() != n)
    throw ConfigError("init has " + std::to_string(init.size()) + " entries, model needs " +
                      std::to_string(n));
  if (observations.empty()) throw DataError("no observations to fit");

  const Objective objective = make_objective(spec, universe, observations, options.threads);

  const int starts =
      spec.family == ModelFamily::NestedRl ? std::max(1, options.multistart) : 1;
  LbfgsResult best;
  bool have_best = false;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<Scalar> jitter(-0.5, 0.5);
  for (int r = 0; r < starts; ++r) {
    Vector start = init;
    if (r > 0)
      for (Eigen::Index i = 0; i < start.size(); ++i) start[i] += jitter(rng);
    LbfgsResult run = lbfgs_maximize(objective, start, options);
    if (!have_best || run.ll > best.ll) {
      if (starts > 1)
        run.diagnostics.push_back("kept restart " + std::to_string(r) + " of " +
                                  std::to_string(starts));
      best = std::move(run);
      have_best = true;
    }
  }

  EstimationReport report;
  report.model = to_string(spec.family);
  report.dag = (spec.family == ModelFamily::LmdcRl || spec.family == ModelFamily::NestedRl)
                   ? to_string(spec.dag)
                   : "";
  report.count_mode = spec.count_mode;
  report.parameter_names = parameter_names(spec, universe);
  report.estimates = best.theta;
  report.final_ll = best.ll;
  report.grad_norm = best.grad_norm;
  report.iterations = best.iterations;
  report.converged = best.converged;
  report.trace = std::move(best.trace);
  report.diagnostics = std::move(best.diagnostics);
  if (options.compute_std_errors) {
    report.std_errors = standard_errors(objective, report.estimates, &report.information_pd);
    report.t_stats = report.estimates.array() / report.std_errors.array();
  } else {
    report.std_errors = Vector::Constant(n, std::numeric_limits<Scalar>::quiet_NaN());
    report.t_stats = report.std_errors;
    report.information_pd = false;
  }
  report.timing_seconds =
      std::chrono::duration<Scalar>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::vector<GroupPrediction> predict_by_group(const ModelSpec& spec, const ItemUniverse& universe,
                                              const Vector& fitted,
                                              std::span<const Observation> holdout) {
  std::vector<GroupPrediction> out;
  if (holdout.empty()) return out;
  const auto K = universe.num_attributes();
  const DagsByBounds dags = build_dags(effective_variant(spec), universe.size(), holdout);

  std::map<Bounds, std::pair<int, Scalar>> acc;
  if (spec.family == ModelFamily::NestedRl) {
    const ParameterVector params{fitted.head(K), fitted.tail(fitted.size() - K), 1.0};
    const ArcUtilities utils = make_arc_utilities(universe, params);
    std::map<Bounds, NestedValueTable> tables;
    for (const Observation& obs : holdout) {
      const ChoiceDag& dag = dags.at(obs.bounds);
      auto it = tables.find(obs.bounds);
      if (it == tables.end())
        it = tables
                 .emplace(obs.bounds, solve_nested_value(dag, utils, universe, spec.scales,
                                                         params.gamma))
                 .first;
      auto& slot = acc[obs.bounds];
      slot.first += 1;
      slot.second += nested_subset_log_probability(dag, it->second, utils, obs);
    }
  } else {
    const ParameterVector params{fitted.head(K), {}, 1.0};
    const ArcUtilities utils = make_arc_utilities(universe, params);
    std::map<Bounds, ValueTable> tables;
    for (const Observation& obs : holdout) {
      const ChoiceDag& dag = dags.at(obs.bounds);
      auto it = tables.find(obs.bounds);
      if (it == tables.end()) it = tables.emplace(obs.bounds, solve_value(dag, utils)).first;
      auto& slot = acc[obs.bounds];
      slot.first += 1;
      slot.second += subset_log_probability(dag, it->second, utils, obs);
    }
  }
  for (const auto& [bounds, slot] : acc)
    out.push_back({bounds, slot.first, slot.second / slot.first});
  return out;
}

Scalar predict_loglik(const ModelSpec& spec, const ItemUniverse& universe, const Vector& fitted,
                      std::span<const Observation> holdout) {
  if (holdout.empty()) return 0.0;
  Scalar total = 0.0;
  int n = 0;
  for (const GroupPrediction& g : predict_by_group(spec, universe, fitted, holdout)) {
    total += g.average_ll * g.n_obs;
    n += g.n_obs;
  }
  return total / n;
}

std::string report_to_json(const EstimationReport& report, int indent) {
  nlohmann::ordered_json j;
  j["model"] = report.model;
  j["dag"] = report.dag;
  j["count_mode"] = report.count_mode;
  j["parameters"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < report.parameter_names.size(); ++i) {
    nlohmann::ordered_json p;
    p["name"] = report.parameter_names[i];
    p["estimate"] = report.estimates[i];
    p["std_error"] = std::isfinite(report.std_errors[i])
                         ? nlohmann::ordered_json(report.std_errors[i])
                         : nlohmann::ordered_json(nullptr);
    p["t_stat"] = std::isfinite(report.t_stats[i]) ? nlohmann::ordered_json(report.t_stats[i])
                                                   : nlohmann::ordered_json(nullptr);
    j["parameters"].push_back(p);
  }
  j["final_ll"] = report.final_ll;
  j["grad_norm"] = report.grad_norm;
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["information_pd"] = report.information_pd;
  j["timing_seconds"] = report.timing_seconds;
  j["trace"] = nlohmann::ordered_json::array();
  for (const IterationRecord& r : report.trace) {
    nlohmann::ordered_json t;
    t["iteration"] = r.iteration;
    t["ll"] = r.ll;
    t["grad_norm"] = r.grad_norm;
    t["step"] = r.step;
    j["trace"].push_back(t);
  }
  j["diagnostics"] = report.diagnostics;
  return j.dump(indent);
}

}  // namespace dagchoice
