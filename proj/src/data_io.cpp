#include "dagchoice/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dagchoice/recursive_logit.hpp"

namespace dagchoice {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// One CSV record. Fields may be double-quoted; "" inside quotes is a literal
// quote. Multi-line fields are not supported, which both formats here avoid.
std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c == '\r') {
      // tolerate CRLF files
    } else {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

std::string csv_quote(const std::string& field) {
  bool needs = field.find_first_of(",\";") != std::string::npos;
  if (!needs) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(Scalar v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw DataError("failed to format a floating point value");
  return std::string(buf, ptr);
}

bool parse_int(const std::string& text, int& out) {
  const std::string t = trim(text);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc{} && ptr == t.data() + t.size();
}

bool parse_double(const std::string& text, Scalar& out) {
  const std::string t = trim(text);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc{} && ptr == t.data() + t.size();
}

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  return out;
}

// Collects line-numbered complaints and throws once, quoting the first ten.
class ErrorSink {
 public:
  explicit ErrorSink(std::string path) : path_(std::move(path)) {}

  void add(std::size_t line, const std::string& message) {
    ++count_;
    if (messages_.size() < 10)
      messages_.push_back(path_ + ":" + std::to_string(line) + ": " + message);
  }

  void throw_if_any() const {
    if (count_ == 0) return;
    std::ostringstream os;
    os << count_ << " bad line" << (count_ == 1 ? "" : "s") << " in " << path_;
    for (const auto& m : messages_) os << "\n  " << m;
    if (count_ > messages_.size()) os << "\n  ... and " << (count_ - messages_.size()) << " more";
    throw DataError(os.str());
  }

 private:
  std::string path_;
  std::size_t count_ = 0;
  std::vector<std::string> messages_;
};

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.m < 1) throw ConfigError("synthetic spec needs at least one item");
  if (spec.n_estimation < 1 || spec.n_prediction < 0)
    throw ConfigError("synthetic spec needs a positive estimation sample");
  validate_bounds(spec.bounds);
  if (spec.beta_true.size() != 3)
    throw ConfigError("synthetic spec uses exactly three attributes");

  std::mt19937_64 rng(spec.seed);
  std::lognormal_distribution<Scalar> lognorm(0.0, 1.0);

  Matrix attributes(spec.m, 3);
  for (int i = 0; i < spec.m; ++i) {
    attributes(i, 0) = lognorm(rng);
    attributes(i, 1) = lognorm(rng);
    attributes(i, 2) = 1.0;
  }

  Dataset dataset;
  dataset.universe = ItemUniverse(attributes, {"x1", "x2", "const"});
  dataset.n_estimation = static_cast<std::size_t>(spec.n_estimation);

  const DagVariant variant =
      spec.count_mode ? (spec.dag == DagVariant::BiC ? DagVariant::BiCCount : DagVariant::MuCCount)
                      : spec.dag;
  const ChoiceDag dag = build_dag(variant, spec.m, spec.bounds);
  const ArcUtilities arc_utils =
      make_arc_utilities(dataset.universe, ParameterVector{spec.beta_true, {}, 1.0});
  const ValueTable values = solve_value(dag, arc_utils);

  const int total = spec.n_estimation + spec.n_prediction;
  dataset.observations = sample_paths(dag, values, arc_utils, total, spec.seed + 1);
  for (int t = 0; t < total; ++t) {
    const bool est = t < spec.n_estimation;
    const int local = est ? t + 1 : t - spec.n_estimation + 1;
    dataset.observations[static_cast<std::size_t>(t)].id =
        (est ? "e" : "p") + std::to_string(local);
  }

  std::ostringstream prov;
  prov << "synthetic dag=" << to_string(spec.dag) << (spec.count_mode ? " count" : "")
       << " m=" << spec.m << " L=" << spec.bounds.lower << " U=" << spec.bounds.upper
       << " n_estimation=" << spec.n_estimation << " n_prediction=" << spec.n_prediction
       << " seed=" << spec.seed << " beta=[" << spec.beta_true(0) << "," << spec.beta_true(1)
       << "," << spec.beta_true(2) << "]";
  dataset.provenance = prov.str();
  return dataset;
}

ItemUniverse load_items(const std::string& path) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  auto header = parse_csv_line(line);
  if (header.empty() || trim(header[0]) != "item_id")
    throw DataError(path + ":1: header must start with item_id");
  if (header.size() < 2) throw DataError(path + ":1: no attribute columns");
  std::vector<std::string> names;
  for (std::size_t j = 1; j < header.size(); ++j) {
    names.push_back(trim(header[j]));
    if (names.back().empty()) throw DataError(path + ":1: empty attribute name");
  }

  const int n_attrs = static_cast<int>(names.size());
  std::vector<std::pair<int, Vector>> rows;
  ErrorSink errors(path);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = parse_csv_line(line);
    if (static_cast<int>(fields.size()) != n_attrs + 1) {
      errors.add(line_no, "expected " + std::to_string(n_attrs + 1) + " fields, got " +
                              std::to_string(fields.size()));
      continue;
    }
    int id = 0;
    if (!parse_int(fields[0], id)) {
      errors.add(line_no, "bad item_id '" + fields[0] + "'");
      continue;
    }
    Vector attrs(n_attrs);
    bool ok = true;
    for (int j = 0; j < n_attrs; ++j) {
      if (!parse_double(fields[static_cast<std::size_t>(j) + 1], attrs(j))) {
        errors.add(line_no, "bad value '" + fields[static_cast<std::size_t>(j) + 1] +
                                "' for attribute " + names[static_cast<std::size_t>(j)]);
        ok = false;
        break;
      }
    }
    if (ok) rows.emplace_back(id, std::move(attrs));
  }
  errors.throw_if_any();
  if (rows.empty()) throw DataError(path + ": no item rows");

  const int m = static_cast<int>(rows.size());
  Matrix attributes(m, n_attrs);
  std::vector<bool> seen(static_cast<std::size_t>(m), false);
  for (const auto& [id, attrs] : rows) {
    if (id < 0 || id >= m)
      throw DataError(path + ": item ids must be exactly 0.." + std::to_string(m - 1) +
                      ", found " + std::to_string(id));
    if (seen[static_cast<std::size_t>(id)])
      throw DataError(path + ": duplicate item id " + std::to_string(id));
    seen[static_cast<std::size_t>(id)] = true;
    attributes.row(id) = attrs.transpose();
  }
  return ItemUniverse(attributes, names);
}

std::vector<Observation> load_observations(const std::string& path, const ItemUniverse& universe,
                                           bool count_mode) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  auto header = parse_csv_line(line);
  const std::vector<std::string> expected = {"obs_id", "L", "U", "items"};
  bool header_ok = header.size() == expected.size();
  for (std::size_t j = 0; header_ok && j < expected.size(); ++j)
    header_ok = trim(header[j]) == expected[j];
  if (!header_ok) throw DataError(path + ":1: header must be obs_id,L,U,items");

  std::vector<Observation> observations;
  ErrorSink errors(path);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = parse_csv_line(line);
    if (fields.size() != 4) {
      errors.add(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
      continue;
    }
    Observation obs;
    obs.id = trim(fields[0]);
    if (obs.id.empty()) {
      errors.add(line_no, "empty obs_id");
      continue;
    }
    if (!parse_int(fields[1], obs.bounds.lower) || !parse_int(fields[2], obs.bounds.upper)) {
      errors.add(line_no, "bad bounds '" + fields[1] + "','" + fields[2] + "'");
      continue;
    }
    try {
      validate_bounds(obs.bounds);
    } catch (const ConfigError& e) {
      errors.add(line_no, e.what());
      continue;
    }

    std::map<int, int> counts;
    bool ok = true;
    const std::string items = trim(fields[3]);
    if (!items.empty()) {
      for (const auto& tok : split_on(items, ';')) {
        int id = 0;
        if (!parse_int(tok, id)) {
          errors.add(line_no, "bad item id '" + trim(tok) + "'");
          ok = false;
          break;
        }
        ++counts[id];
      }
    }
    if (!ok) continue;
    for (const auto& [id, count] : counts) {
      if (!count_mode && count > 1) {
        errors.add(line_no, "item " + std::to_string(id) + " repeats " + std::to_string(count) +
                                " times (repeats need count mode)");
        ok = false;
        break;
      }
      obs.selections.push_back({id, count});
    }
    if (!ok) continue;
    for (const auto& violation : validate_observation(obs, universe, count_mode))
      errors.add(line_no, violation);
    observations.push_back(std::move(obs));
  }
  errors.throw_if_any();
  return observations;
}

void save_items(const ItemUniverse& universe, const std::string& path) {
  auto out = open_output(path);
  out << "item_id";
  for (const auto& name : universe.attribute_names()) out << ',' << csv_quote(name);
  out << '\n';
  for (int i = 0; i < universe.size(); ++i) {
    out << i;
    for (int j = 0; j < universe.num_attributes(); ++j)
      out << ',' << format_double(universe.attributes()(i, j));
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

void save_observations(std::span<const Observation> observations, const std::string& path) {
  auto out = open_output(path);
  out << "obs_id,L,U,items\n";
  for (const auto& obs : observations) {
    std::string items;
    for (const auto& sel : obs.selections)
      for (int r = 0; r < sel.count; ++r) {
        if (!items.empty()) items += ';';
        items += std::to_string(sel.item);
      }
    out << csv_quote(obs.id) << ',' << obs.bounds.lower << ',' << obs.bounds.upper << ','
        << csv_quote(items) << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

std::string dataset_to_json(const Dataset& dataset, int indent) {
  nlohmann::ordered_json j;
  j["provenance"] = dataset.provenance;
  j["n_estimation"] = dataset.n_estimation;
  j["attribute_names"] = dataset.universe.attribute_names();
  auto items = nlohmann::ordered_json::array();
  for (int i = 0; i < dataset.universe.size(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (int k = 0; k < dataset.universe.num_attributes(); ++k)
      row.push_back(dataset.universe.attributes()(i, k));
    items.push_back(std::move(row));
  }
  j["items"] = std::move(items);
  auto obs_list = nlohmann::ordered_json::array();
  for (const auto& obs : dataset.observations) {
    nlohmann::ordered_json o;
    o["id"] = obs.id;
    o["L"] = obs.bounds.lower;
    o["U"] = obs.bounds.upper;
    auto sels = nlohmann::ordered_json::array();
    for (const auto& sel : obs.selections) sels.push_back({sel.item, sel.count});
    o["items"] = std::move(sels);
    obs_list.push_back(std::move(o));
  }
  j["observations"] = std::move(obs_list);
  return j.dump(indent);
}

Dataset dataset_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad dataset JSON: ") + e.what());
  }
  try {
    Dataset dataset;
    dataset.provenance = j.value("provenance", std::string());
    const auto names = j.at("attribute_names").get<std::vector<std::string>>();
    const auto& items = j.at("items");
    Matrix attributes(items.size(), names.size());
    for (std::size_t i = 0; i < items.size(); ++i)
      for (std::size_t k = 0; k < names.size(); ++k)
        attributes(static_cast<int>(i), static_cast<int>(k)) = items[i][k].get<Scalar>();
    dataset.universe = ItemUniverse(attributes, names);
    for (const auto& o : j.at("observations")) {
      Observation obs;
      obs.id = o.at("id").get<std::string>();
      obs.bounds.lower = o.at("L").get<int>();
      obs.bounds.upper = o.at("U").get<int>();
      for (const auto& sel : o.at("items"))
        obs.selections.push_back({sel[0].get<int>(), sel[1].get<int>()});
      dataset.observations.push_back(std::move(obs));
    }
    dataset.n_estimation = j.value("n_estimation", dataset.observations.size());
    if (dataset.n_estimation > dataset.observations.size())
      throw DataError("n_estimation exceeds the number of observations");
    return dataset;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad dataset JSON: ") + e.what());
  }
}

void save_dataset_json(const Dataset& dataset, const std::string& path) {
  auto out = open_output(path);
  out << dataset_to_json(dataset) << '\n';
  if (!out) throw DataError("write failed: " + path);
}

Dataset load_dataset_json(const std::string& path) {
  auto in = open_input(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return dataset_from_json(buffer.str());
}

BoundsRules BoundsRules::parse(const std::string& text) {
  BoundsRules rules;
  for (const auto& part : split_on(text, ',')) {
    const std::string p = trim(part);
    if (p.empty()) throw ConfigError("empty bracket in bounds rules '" + text + "'");
    const auto dash = p.find('-');
    if (dash == std::string::npos)
      throw ConfigError("bracket '" + p + "' must look like L-U");
    Bounds b;
    if (!parse_int(p.substr(0, dash), b.lower) || !parse_int(p.substr(dash + 1), b.upper))
      throw ConfigError("bracket '" + p + "' must look like L-U");
    validate_bounds(b);
    rules.brackets.push_back(b);
  }
  if (rules.brackets.empty()) throw ConfigError("bounds rules are empty");
  return rules;
}

void apply_bounds_rules(std::vector<Observation>& observations, const BoundsRules& rules) {
  std::vector<std::string> unmatched;
  for (auto& obs : observations) {
    const int total = obs.total_count();
    bool found = false;
    for (const auto& bracket : rules.brackets)
      if (bracket.lower <= total && total <= bracket.upper) {
        obs.bounds = bracket;
        found = true;
        break;
      }
    if (!found && unmatched.size() < 10)
      unmatched.push_back(obs.id + " (size " + std::to_string(total) + ")");
    if (!found && unmatched.size() == 10) unmatched.push_back("...");
  }
  if (!unmatched.empty()) {
    std::string msg = "no bracket covers:";
    for (const auto& u : unmatched) msg += " " + u;
    throw DataError(msg);
  }
}

std::map<Bounds, std::vector<std::size_t>> group_by_bounds(
    std::span<const Observation> observations) {
  std::map<Bounds, std::vector<std::size_t>> groups;
  for (std::size_t t = 0; t < observations.size(); ++t)
    groups[observations[t].bounds].push_back(t);
  return groups;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ConfigError("split fraction must lie strictly between 0 and 1");
  const std::size_t n = dataset.observations.size();
  if (n < 2) throw DataError("need at least two observations to split");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cut = static_cast<std::size_t>(fraction * static_cast<double>(n));
  cut = std::clamp<std::size_t>(cut, 1, n - 1);

  Dataset first;
  first.universe = dataset.universe;
  first.provenance = dataset.provenance;
  Dataset second = first;
  for (std::size_t r = 0; r < n; ++r) {
    auto& side = r < cut ? first : second;
    side.observations.push_back(dataset.observations[order[r]]);
  }
  first.n_estimation = first.observations.size();
  second.n_estimation = second.observations.size();
  return {std::move(first), std::move(second)};
}

}  // namespace dagchoice
