#pragma once

// Core data model: items and their attributes, size bounds, observations
// (selected composites), and model parameters. All numerics sit on Eigen.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace dagchoice {

using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr Scalar kNegInf = -std::numeric_limits<Scalar>::infinity();

// Error categories. Configuration and data problems map to CLI exit code 2;
// model errors indicate a request the model cannot evaluate.
struct ConfigError : std::runtime_error { using std::runtime_error::runtime_error; };
struct DataError : std::runtime_error { using std::runtime_error::runtime_error; };
struct ModelError : std::runtime_error { using std::runtime_error::runtime_error; };
struct MappingError : std::runtime_error { using std::runtime_error::runtime_error; };

// Inclusive size (or total-count) bounds [L, U] on a composite choice.
// U <= m is a constraint of the plain subset variants only and is checked
// where a plain DAG is built; count variants allow U > m.
struct Bounds {
  int lower = 0;
  int upper = 1;

  friend auto operator<=>(const Bounds&, const Bounds&) = default;
};

inline void validate_bounds(const Bounds& b) {
  if (b.lower < 0 || b.upper < 1 || b.lower > b.upper)
    throw ConfigError("invalid bounds [" + std::to_string(b.lower) + "," +
                      std::to_string(b.upper) + "]: need 0 <= L <= U and U >= 1");
}

struct Item {
  int id = 0;
  Vector attributes;
};

// The alternatives an individual chooses from. Ids are dense in [0, m) and
// double as row indices into the attribute matrix.
class ItemUniverse {
 public:
  ItemUniverse() = default;

  ItemUniverse(const std::vector<Item>& items, std::vector<std::string> attribute_names)
      : names_(std::move(attribute_names)) {
    const int m = static_cast<int>(items.size());
    if (m == 0) throw DataError("item universe is empty");
    const auto k = items.front().attributes.size();
    if (k == 0) throw DataError("items carry no attributes");
    if (static_cast<Eigen::Index>(names_.size()) != k)
      throw DataError("attribute name count does not match attribute columns");
    attributes_.resize(m, k);
    std::vector<bool> seen(m, false);
    for (const Item& item : items) {
      if (item.id < 0 || item.id >= m)
        throw DataError("item ids must be dense in [0," + std::to_string(m) +
                        "): got " + std::to_string(item.id));
      if (seen[item.id]) throw DataError("duplicate item id " + std::to_string(item.id));
      seen[item.id] = true;
      if (item.attributes.size() != k)
        throw DataError("item " + std::to_string(item.id) + " has " +
                        std::to_string(item.attributes.size()) + " attributes, expected " +
                        std::to_string(k));
      if (!item.attributes.allFinite())
        throw DataError("item " + std::to_string(item.id) + " has non-finite attributes");
      attributes_.row(item.id) = item.attributes.transpose();
    }
  }

  // Row i holds the attributes of item i.
  ItemUniverse(Matrix attributes, std::vector<std::string> attribute_names)
      : attributes_(std::move(attributes)), names_(std::move(attribute_names)) {
    if (attributes_.rows() == 0) throw DataError("item universe is empty");
    if (attributes_.cols() == 0) throw DataError("items carry no attributes");
    if (static_cast<Eigen::Index>(names_.size()) != attributes_.cols())
      throw DataError("attribute name count does not match attribute columns");
    if (!attributes_.allFinite()) throw DataError("attribute matrix has non-finite entries");
  }

  int size() const { return static_cast<int>(attributes_.rows()); }
  int num_attributes() const { return static_cast<int>(attributes_.cols()); }
  const Matrix& attributes() const { return attributes_; }
  auto item_attributes(int id) const { return attributes_.row(id); }
  const std::vector<std::string>& attribute_names() const { return names_; }

 private:
  Matrix attributes_;
  std::vector<std::string> names_;
};

// Model parameters: utility coefficients beta (one per item attribute), scale
// coefficients gamma (nested model only, empty otherwise), and the global RL
// scale mu. mu is kept at 1 and never estimated.
struct ParameterVector {
  Vector beta;
  Vector gamma;
  Scalar mu = 1.0;
};

// One selected item together with its multiplicity. Plain subset mode keeps
// every count at 1; the count extension allows repeats.
struct Selection {
  int item = 0;
  int count = 1;

  friend auto operator<=>(const Selection&, const Selection&) = default;
};

// A single observed composite choice: which items (with counts) were picked
// under which size bounds. Selections are kept sorted by item id.
struct Observation {
  std::string id;
  Bounds bounds;
  std::vector<Selection> selections;

  int total_count() const {
    int t = 0;
    for (const Selection& s : selections) t += s.count;
    return t;
  }

  friend bool operator==(const Observation&, const Observation&) = default;
};

inline void sort_selections(Observation& obs) {
  std::sort(obs.selections.begin(), obs.selections.end(),
            [](const Selection& a, const Selection& b) { return a.item < b.item; });
}

// Returns the list of invariant violations (empty means valid). Callers decide
// whether to aggregate, throw, or report with file line numbers.
inline std::vector<std::string> validate_observation(const Observation& obs,
                                                     const ItemUniverse& universe,
                                                     bool count_mode) {
  std::vector<std::string> bad;
  const std::string tag = obs.id.empty() ? std::string("<unnamed>") : obs.id;
  if (obs.bounds.lower < 0 || obs.bounds.upper < 1 || obs.bounds.lower > obs.bounds.upper)
    bad.push_back(tag + ": invalid bounds [" + std::to_string(obs.bounds.lower) + "," +
                  std::to_string(obs.bounds.upper) + "]");
  int last = -1;
  for (const Selection& s : obs.selections) {
    if (s.item < 0 || s.item >= universe.size())
      bad.push_back(tag + ": unknown item id " + std::to_string(s.item));
    if (s.item <= last)
      bad.push_back(tag + ": item ids must be strictly increasing (duplicate or unsorted " +
                    std::to_string(s.item) + ")");
    last = s.item;
    if (s.count < 1)
      bad.push_back(tag + ": item " + std::to_string(s.item) + " has count " +
                    std::to_string(s.count));
    if (!count_mode && s.count != 1)
      bad.push_back(tag + ": repeated selection of item " + std::to_string(s.item) +
                    " outside count mode");
  }
  const int total = obs.total_count();
  if (total < obs.bounds.lower || total > obs.bounds.upper)
    bad.push_back(tag + ": total count " + std::to_string(total) + " outside bounds [" +
                  std::to_string(obs.bounds.lower) + "," + std::to_string(obs.bounds.upper) +
                  "]");
  return bad;
}

inline Scalar item_utility(const Item& item, const ParameterVector& params) {
  if (item.attributes.size() != params.beta.size())
    throw ConfigError("attribute/coefficient dimension mismatch: item has " +
                      std::to_string(item.attributes.size()) + ", beta has " +
                      std::to_string(params.beta.size()));
  return item.attributes.dot(params.beta);
}

// v_i = beta' x_i for every item at once.
inline Vector all_item_utilities(const ItemUniverse& universe, const ParameterVector& params) {
  if (universe.num_attributes() != params.beta.size())
    throw ConfigError("attribute/coefficient dimension mismatch: universe has " +
                      std::to_string(universe.num_attributes()) + " attributes, beta has " +
                      std::to_string(params.beta.size()));
  return universe.attributes() * params.beta;
}

struct SubsetUtility {
  Scalar value = 0.0;
};

// v(S) = sum_i c_i v_i. The empty composite has utility 0.
inline SubsetUtility subset_utility(const Observation& obs, const ItemUniverse& universe,
                                    const ParameterVector& params) {
  const Vector v = all_item_utilities(universe, params);
  Scalar total = 0.0;
  for (const Selection& s : obs.selections) {
    if (s.item < 0 || s.item >= universe.size())
      throw DataError("observation " + obs.id + " references unknown item " +
                      std::to_string(s.item));
    total += s.count * v[s.item];
  }
  return SubsetUtility{total};
}

}  // namespace dagchoice
