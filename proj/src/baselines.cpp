#include "dagchoice/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace dagchoice {

namespace {

Scalar log_sum_exp(const Vector& t) {
  const Scalar best = t.maxCoeff();
  return best + std::log((t.array() - best).exp().sum());
}

}  // namespace

Scalar sc_base_log_probability(const Observation& obs, const ItemUniverse& universe,
                               const ParameterVector& params) {
  const Vector v = all_item_utilities(universe, params) / params.mu;
  const Scalar lse = log_sum_exp(v);
  Scalar lp = 0.0;
  for (const Selection& s : obs.selections) lp += s.count * (v[s.item] - lse);
  return lp;
}

Scalar sc_base_probability(const Observation& obs, const ItemUniverse& universe,
                           const ParameterVector& params) {
  return std::exp(sc_base_log_probability(obs, universe, params));
}

std::optional<std::size_t> SampledChoiceSet::find(std::span<const Selection> selections) const {
  const std::vector<Selection> key(selections.begin(), selections.end());
  const auto it = std::lower_bound(composites.begin(), composites.end(), key);
  if (it == composites.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - composites.begin());
}

SampledChoiceSet build_sampled_choice_set(std::span<const Observation> observations) {
  std::map<std::vector<Selection>, std::vector<int>> seen;
  for (std::size_t i = 0; i < observations.size(); ++i)
    seen[observations[i].selections].push_back(static_cast<int>(i));
  SampledChoiceSet gamma;
  gamma.composites.reserve(seen.size());
  for (auto& [key, who] : seen) {
    gamma.composites.push_back(key);
    gamma.contributors.push_back(std::move(who));
  }
  return gamma;
}

Scalar mc_base_log_probability(const Observation& obs, const SampledChoiceSet& gamma,
                               const ItemUniverse& universe, const ParameterVector& params) {
  const auto idx = gamma.find(obs.selections);
  if (!idx) return kNegInf;
  const Vector v = all_item_utilities(universe, params);
  Vector u(gamma.size());
  for (std::size_t s = 0; s < gamma.size(); ++s) {
    Scalar total = 0.0;
    for (const Selection& sel : gamma.composites[s]) total += sel.count * v[sel.item];
    u[s] = total / params.mu;
  }
  return u[*idx] - log_sum_exp(u);
}

Scalar mc_base_probability(const Observation& obs, const SampledChoiceSet& gamma,
                           const ItemUniverse& universe, const ParameterVector& params) {
  const Scalar lp = mc_base_log_probability(obs, gamma, universe, params);
  return lp == kNegInf ? 0.0 : std::exp(lp);
}

BaselineLogLik sc_base_log_likelihood(std::span<const Observation> observations,
                                      const ItemUniverse& universe,
                                      const ParameterVector& params) {
  BaselineLogLik out;
  for (const Observation& obs : observations) out.ll += sc_base_log_probability(obs, universe, params);
  return out;
}

BaselineLogLik mc_base_log_likelihood(std::span<const Observation> observations,
                                      const SampledChoiceSet& gamma, const ItemUniverse& universe,
                                      const ParameterVector& params) {
  const Vector v = all_item_utilities(universe, params);
  Vector u(gamma.size());
  for (std::size_t s = 0; s < gamma.size(); ++s) {
    Scalar total = 0.0;
    for (const Selection& sel : gamma.composites[s]) total += sel.count * v[sel.item];
    u[s] = total / params.mu;
  }
  const Scalar lse = log_sum_exp(u);
  BaselineLogLik out;
  for (const Observation& obs : observations) {
    const auto idx = gamma.find(obs.selections);
    if (!idx) {
      out.zero_probability_ids.push_back(obs.id);
      out.ll = kNegInf;
      continue;
    }
    if (out.ll != kNegInf) out.ll += u[*idx] - lse;
  }
  return out;
}

Vector sc_base_gradient(std::span<const Observation> observations, const ItemUniverse& universe,
                        const ParameterVector& params) {
  const Vector v = all_item_utilities(universe, params) / params.mu;
  const Scalar lse = log_sum_exp(v);
  const Vector p = (v.array() - lse).exp();
  Vector counts = Vector::Zero(universe.size());
  Scalar total = 0.0;
  for (const Observation& obs : observations)
    for (const Selection& s : obs.selections) {
      counts[s.item] += s.count;
      total += s.count;
    }
  return (universe.attributes().transpose() * counts -
          total * universe.attributes().transpose() * p) /
         params.mu;
}

Vector mc_base_gradient(std::span<const Observation> observations, const SampledChoiceSet& gamma,
                        const ItemUniverse& universe, const ParameterVector& params) {
  const Vector v = all_item_utilities(universe, params);
  const auto K = universe.num_attributes();
  // attribute totals per composite: A_s = sum_i c_i x_i
  Matrix A = Matrix::Zero(gamma.size(), K);
  Vector u(gamma.size());
  for (std::size_t s = 0; s < gamma.size(); ++s) {
    Scalar total = 0.0;
    for (const Selection& sel : gamma.composites[s]) {
      A.row(s) += sel.count * universe.attributes().row(sel.item);
      total += sel.count * v[sel.item];
    }
    u[s] = total / params.mu;
  }
  const Scalar lse = log_sum_exp(u);
  const Vector q = (u.array() - lse).exp();
  Vector grad = Vector::Zero(K);
  for (const Observation& obs : observations) {
    const auto idx = gamma.find(obs.selections);
    if (!idx)
      throw ModelError("observation " + obs.id + " is outside the sampled choice set");
    grad += A.row(*idx).transpose();
  }
  grad -= static_cast<Scalar>(observations.size()) * (A.transpose() * q);
  return grad / params.mu;
}

}  // namespace dagchoice
