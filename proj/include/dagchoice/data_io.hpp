#pragma once

// Data plumbing: the synthetic generator, the two CSV formats, a JSON dump for
// reproducibility, bounds-inference rules, and split/grouping helpers.
//
// items CSV:         item_id,<attr1>,<attr2>,...   (header names the attributes)
// observations CSV:  obs_id,L,U,items              (items: "3;7;7" semicolon ids,
//                                                   repeats allowed in count mode)

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dagchoice/dag.hpp"
#include "dagchoice/types.hpp"

namespace dagchoice {

struct Dataset {
  ItemUniverse universe;
  std::vector<Observation> observations;
  // Synthetic sets keep estimation observations first; this marks the cut.
  std::size_t n_estimation = 0;
  std::string provenance;

  std::span<const Observation> estimation_set() const {
    return {observations.data(), n_estimation};
  }
  std::span<const Observation> prediction_set() const {
    return {observations.data() + n_estimation, observations.size() - n_estimation};
  }
};

// The synthetic protocol: two log-normal(0,1) attributes plus a constant,
// observations drawn from the exact model distribution via path sampling.
struct SyntheticSpec {
  int m = 10;
  Bounds bounds{0, 5};
  int n_estimation = 1000;
  int n_prediction = 300;
  Vector beta_true = (Vector(3) << -0.5, -0.02, -0.1).finished();
  std::uint64_t seed = 1;
  DagVariant dag = DagVariant::BiC;
  bool count_mode = false;
};

Dataset generate_synthetic(const SyntheticSpec& spec);

ItemUniverse load_items(const std::string& path);
std::vector<Observation> load_observations(const std::string& path, const ItemUniverse& universe,
                                           bool count_mode);

void save_items(const ItemUniverse& universe, const std::string& path);
void save_observations(std::span<const Observation> observations, const std::string& path);

std::string dataset_to_json(const Dataset& dataset, int indent = 2);
Dataset dataset_from_json(const std::string& text);
void save_dataset_json(const Dataset& dataset, const std::string& path);
Dataset load_dataset_json(const std::string& path);

// Size brackets like "1-2,3-5,6-11": each observation gets the bracket that
// contains its total count as bounds.
struct BoundsRules {
  std::vector<Bounds> brackets;

  static BoundsRules parse(const std::string& text);
};

void apply_bounds_rules(std::vector<Observation>& observations, const BoundsRules& rules);

std::map<Bounds, std::vector<std::size_t>> group_by_bounds(
    std::span<const Observation> observations);

// Seeded shuffle, then split at floor(fraction * N).
std::pair<Dataset, Dataset> split(const Dataset& dataset, double fraction, std::uint64_t seed);

}  // namespace dagchoice
