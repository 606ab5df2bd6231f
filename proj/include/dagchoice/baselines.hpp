#pragma once

// Reference baselines. SC-Base treats a composite as independent single
// choices from the full universe and is blind to the size bounds. MC-Base is
// a multinomial logit over a sampled choice set Gamma (the deduplicated
// composites observed in the data); composites outside Gamma get probability
// zero.

#include <optional>
#include <span>
#include <vector>

#include "dagchoice/types.hpp"

namespace dagchoice {

// log P(S) = sum_i c_i (v_i - lse(v)) / mu under the item-level softmax.
Scalar sc_base_log_probability(const Observation& obs, const ItemUniverse& universe,
                               const ParameterVector& params);

Scalar sc_base_probability(const Observation& obs, const ItemUniverse& universe,
                           const ParameterVector& params);

struct SampledChoiceSet {
  std::vector<std::vector<Selection>> composites;  // deduplicated, sorted keys
  std::vector<std::vector<int>> contributors;      // observation indices per composite

  std::size_t size() const { return composites.size(); }
  std::optional<std::size_t> find(std::span<const Selection> selections) const;
};

SampledChoiceSet build_sampled_choice_set(std::span<const Observation> observations);

Scalar mc_base_log_probability(const Observation& obs, const SampledChoiceSet& gamma,
                               const ItemUniverse& universe, const ParameterVector& params);

Scalar mc_base_probability(const Observation& obs, const SampledChoiceSet& gamma,
                           const ItemUniverse& universe, const ParameterVector& params);

struct BaselineLogLik {
  Scalar ll = 0.0;                              // -inf when any probability is zero
  std::vector<std::string> zero_probability_ids;  // the offending observations
};

BaselineLogLik sc_base_log_likelihood(std::span<const Observation> observations,
                                      const ItemUniverse& universe,
                                      const ParameterVector& params);

BaselineLogLik mc_base_log_likelihood(std::span<const Observation> observations,
                                      const SampledChoiceSet& gamma, const ItemUniverse& universe,
                                      const ParameterVector& params);

Vector sc_base_gradient(std::span<const Observation> observations, const ItemUniverse& universe,
                        const ParameterVector& params);

Vector mc_base_gradient(std::span<const Observation> observations, const SampledChoiceSet& gamma,
                        const ItemUniverse& universe, const ParameterVector& params);

}  // namespace dagchoice
