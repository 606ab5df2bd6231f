#include "dagchoice/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "dagchoice/dag.hpp"

namespace dagchoice {

std::optional<std::size_t> EnumeratedChoiceSet::find(std::span<const Selection> selections) const {
  const std::vector<Selection> key(selections.begin(), selections.end());
  const auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Scalar EnumeratedChoiceSet::probability_of(std::span<const Selection> selections) const {
  const auto idx = find(selections);
  if (!idx) throw ModelError("composite not present in the enumerated choice set");
  return composites[*idx].probability;
}

// Normalizes utilities into probabilities with a max-shifted log-sum-exp and
// builds the lookup index.
EnumeratedChoiceSet finalize_enumeration(std::vector<EnumeratedComposite> composites, Scalar mu) {
  Scalar vmax = kNegInf;
  for (const EnumeratedComposite& c : composites) vmax = std::max(vmax, c.utility / mu);
  Scalar sum = 0.0;
  for (const EnumeratedComposite& c : composites) sum += std::exp(c.utility / mu - vmax);
  const Scalar lse = vmax + std::log(sum);
  EnumeratedChoiceSet set;
  set.composites = std::move(composites);
  for (std::size_t i = 0; i < set.composites.size(); ++i) {
    set.composites[i].probability = std::exp(set.composites[i].utility / mu - lse);
    set.index_.emplace(set.composites[i].selections, i);
  }
  return set;
}

namespace {

void check_cap(int m, Bounds bounds, bool count_mode) {
  validate_bounds(bounds);
  const Scalar size = composite_space_size(m, bounds, count_mode);
  if (size > kEnumerationCap)
    throw ModelError("refusing to enumerate " + std::to_string(size) +
                     " composites (cap " + std::to_string(kEnumerationCap) + ")");
  if (size < 1.0) throw ModelError("no feasible composite under the given bounds");
}

}  // namespace

EnumeratedChoiceSet enumerate_lmdc(const ItemUniverse& universe, Bounds bounds,
                                   const ParameterVector& params) {
  const int m = universe.size();
  const Bounds eff{bounds.lower, std::min(bounds.upper, m)};
  if (eff.lower > eff.upper)
    throw ModelError("bounds lower limit exceeds the universe size");
  check_cap(m, eff, false);
  const Vector v = all_item_utilities(universe, params);

  std::vector<EnumeratedComposite> out;
  std::vector<int> pick;
  for (int t = eff.lower; t <= eff.upper; ++t) {
    // lexicographic t-combinations of [0, m)
    pick.resize(t);
    for (int i = 0; i < t; ++i) pick[i] = i;
    while (true) {
      EnumeratedComposite c;
      c.selections.reserve(t);
      for (int i : pick) {
        c.selections.push_back({i, 1});
        c.utility += v[i];
      }
      out.push_back(std::move(c));
      if (t == 0) break;
      int pos = t - 1;
      while (pos >= 0 && pick[pos] == m - t + pos) --pos;
      if (pos < 0) break;
      ++pick[pos];
      for (int i = pos + 1; i < t; ++i) pick[i] = pick[i - 1] + 1;
    }
  }
  return finalize_enumeration(std::move(out), params.mu);
}

EnumeratedChoiceSet enumerate_count_lmdc(const ItemUniverse& universe, Bounds bounds,
                                         const ParameterVector& params) {
  const int m = universe.size();
  check_cap(m, bounds, true);
  const Vector v = all_item_utilities(universe, params);

  std::vector<EnumeratedComposite> out;
  std::vector<int> counts(m, 0);
  // depth-first odometer over count vectors with total <= U
  auto recurse = [&](auto&& self, int item, int total, Scalar utility) -> void {
    if (item == m) {
      if (total < bounds.lower) return;
      EnumeratedComposite c;
      c.utility = utility;
      for (int i = 0; i < m; ++i)
        if (counts[i] > 0) c.selections.push_back({i, counts[i]});
      out.push_back(std::move(c));
      return;
    }
    for (int q = 0; total + q <= bounds.upper; ++q) {
      counts[item] = q;
      self(self, item + 1, total + q, utility + q * v[item]);
    }
    counts[item] = 0;
  };
  recurse(recurse, 0, 0, 0.0);
  return finalize_enumeration(std::move(out), params.mu);
}

Scalar brute_force_loglik(const ItemUniverse& universe, std::span<const Observation> observations,
                          const ParameterVector& params, bool count_mode) {
  std::map<Bounds, EnumeratedChoiceSet> sets;
  Scalar ll = 0.0;
  for (const Observation& obs : observations) {
    auto it = sets.find(obs.bounds);
    if (it == sets.end()) {
      auto set = count_mode ? enumerate_count_lmdc(universe, obs.bounds, params)
                            : enumerate_lmdc(universe, obs.bounds, params);
      it = sets.emplace(obs.bounds, std::move(set)).first;
    }
    ll += std::log(it->second.probability_of(obs.selections));
  }
  return ll;
}

}  // namespace dagchoice
