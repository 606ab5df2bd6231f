#pragma once

// Brute-force reference implementations: enumerate the full composite space
// and normalize directly. Deliberately independent of the DAG machinery so the
// two routes can be checked against each other.

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "dagchoice/types.hpp"

namespace dagchoice {

struct EnumeratedComposite {
  std::vector<Selection> selections;  // sorted by item
  Scalar utility = 0.0;
  Scalar probability = 0.0;
};

struct EnumeratedChoiceSet {
  std::vector<EnumeratedComposite> composites;

  std::optional<std::size_t> find(std::span<const Selection> selections) const;

  // Probability of one composite; throws ModelError when it is not in the set.
  Scalar probability_of(std::span<const Selection> selections) const;

 private:
  friend EnumeratedChoiceSet finalize_enumeration(std::vector<EnumeratedComposite>, Scalar);
  std::map<std::vector<Selection>, std::size_t> index_;
};

// Refuse enumerations beyond this many composites.
inline constexpr Scalar kEnumerationCap = 1e7;

// All subsets S with |S| in [L, min(U, m)], softmax probabilities over them.
EnumeratedChoiceSet enumerate_lmdc(const ItemUniverse& universe, Bounds bounds,
                                   const ParameterVector& params);

// All count vectors with total in [L, U] (multiset composites).
EnumeratedChoiceSet enumerate_count_lmdc(const ItemUniverse& universe, Bounds bounds,
                                         const ParameterVector& params);

// Sum of log choice probabilities by per-bounds-group enumeration.
Scalar brute_force_loglik(const ItemUniverse& universe, std::span<const Observation> observations,
                          const ParameterVector& params, bool count_mode);

}  // namespace dagchoice
