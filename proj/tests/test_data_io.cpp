#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "dagchoice/data_io.hpp"
#include "helpers.hpp"

using namespace dagchoice;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;

  TempDir() {
    path = fs::temp_directory_path() / ("dagchoice-test-" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }

  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("csv round trip preserves the dataset exactly") {
  SyntheticSpec spec;
  spec.m = 5;
  spec.bounds = {0, 3};
  spec.n_estimation = 40;
  spec.n_prediction = 10;
  spec.seed = 5;
  const Dataset data = generate_synthetic(spec);

  TempDir dir;
  save_items(data.universe, dir.file("items.csv"));
  save_observations(data.observations, dir.file("obs.csv"));

  const ItemUniverse items = load_items(dir.file("items.csv"));
  REQUIRE(items.size() == data.universe.size());
  CHECK(items.attribute_names() == data.universe.attribute_names());
  // to_chars formatting is round-trip exact, so equality is bitwise
  CHECK(items.attributes() == data.universe.attributes());

  const std::vector<Observation> obs = load_observations(dir.file("obs.csv"), items, false);
  REQUIRE(obs.size() == data.observations.size());
  for (std::size_t i = 0; i < obs.size(); ++i) CHECK(obs[i] == data.observations[i]);
}

TEST_CASE("json round trip preserves the dataset exactly") {
  SyntheticSpec spec;
  spec.m = 4;
  spec.bounds = {1, 4};
  spec.n_estimation = 25;
  spec.n_prediction = 5;
  spec.seed = 9;
  spec.dag = DagVariant::MuC;
  spec.count_mode = true;
  const Dataset data = generate_synthetic(spec);

  const Dataset back = dataset_from_json(dataset_to_json(data));
  CHECK(back.provenance == data.provenance);
  CHECK(back.n_estimation == data.n_estimation);
  CHECK(back.universe.attributes() == data.universe.attributes());
  CHECK(back.universe.attribute_names() == data.universe.attribute_names());
  REQUIRE(back.observations.size() == data.observations.size());
  for (std::size_t i = 0; i < back.observations.size(); ++i)
    CHECK(back.observations[i] == data.observations[i]);

  TempDir dir;
  save_dataset_json(data, dir.file("dataset.json"));
  const Dataset from_disk = load_dataset_json(dir.file("dataset.json"));
  CHECK(from_disk.observations.size() == data.observations.size());
  CHECK(dataset_to_json(from_disk) == dataset_to_json(data));
}

TEST_CASE("item loader rejects malformed tables") {
  TempDir dir;

  write_file(dir.file("bad_header.csv"), "id,x\n0,1.0\n");
  CHECK_THROWS_AS(load_items(dir.file("bad_header.csv")), DataError);

  write_file(dir.file("no_attrs.csv"), "item_id\n0\n");
  CHECK_THROWS_AS(load_items(dir.file("no_attrs.csv")), DataError);

  write_file(dir.file("gap.csv"), "item_id,x\n0,1.0\n2,2.0\n");
  CHECK_THROWS_AS(load_items(dir.file("gap.csv")), DataError);

  write_file(dir.file("dup.csv"), "item_id,x\n0,1.0\n0,2.0\n");
  CHECK_THROWS_AS(load_items(dir.file("dup.csv")), DataError);

  write_file(dir.file("nonnum.csv"), "item_id,x\n0,apple\n");
  CHECK_THROWS_AS(load_items(dir.file("nonnum.csv")), DataError);

  CHECK_THROWS_AS(load_items(dir.file("missing.csv")), DataError);
  try {
    load_items(dir.file("missing.csv"));
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("missing.csv") != std::string::npos);
  }
}

TEST_CASE("observation loader reports line-numbered violations") {
  Matrix attributes(3, 1);
  attributes << 1.0, 2.0, 3.0;
  const ItemUniverse universe(attributes, {"x"});
  TempDir dir;

  write_file(dir.file("head.csv"), "obs,L,U,items\no1,1,2,\"0\"\n");
  CHECK_THROWS_AS(load_observations(dir.file("head.csv"), universe, false), DataError);

  write_file(dir.file("mixed.csv"),
             "obs_id,L,U,items\n"
             "o1,0,2,\"0;1\"\n"
             "o2,0,2,\"0;5\"\n"
             "o3,0,2,\"0;0\"\n"
             "o4,2,1,\"0\"\n"
             "o5,0,1,\"0;1\"\n");
  try {
    load_observations(dir.file("mixed.csv"), universe, false);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("mixed.csv:3") != std::string::npos);  // unknown item 5
    CHECK(msg.find("mixed.csv:4") != std::string::npos);  // repeat outside count mode
    CHECK(msg.find("mixed.csv:5") != std::string::npos);  // inverted bounds
    CHECK(msg.find("mixed.csv:6") != std::string::npos);  // two picks above U
    CHECK(msg.find("mixed.csv:2") == std::string::npos);  // the clean line
  }

  // more than ten bad lines: the report truncates instead of flooding
  std::string many = "obs_id,L,U,items\n";
  for (int i = 0; i < 14; ++i) many += "o" + std::to_string(i) + ",0,2,\"9\"\n";
  write_file(dir.file("many.csv"), many);
  try {
    load_observations(dir.file("many.csv"), universe, false);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("... and 4 more") != std::string::npos);
  }
}

TEST_CASE("quoted item lists with repeats parse in count mode") {
  Matrix attributes(8, 1);
  for (int i = 0; i < 8; ++i) attributes(i, 0) = i;
  const ItemUniverse universe(attributes, {"x"});
  TempDir dir;

  write_file(dir.file("counts.csv"),
             "obs_id,L,U,items\n"
             "o1,1,11,\"3;7;7\"\n"
             "o2,0,3,\"\"\n");
  const std::vector<Observation> obs = load_observations(dir.file("counts.csv"), universe, true);
  REQUIRE(obs.size() == 2);
  CHECK(obs[0].id == "o1");
  CHECK(obs[0].bounds == Bounds{1, 11});
  REQUIRE(obs[0].selections.size() == 2);
  CHECK(obs[0].selections[0] == Selection{3, 1});
  CHECK(obs[0].selections[1] == Selection{7, 2});
  CHECK(obs[1].selections.empty());

  // the same file is invalid without count mode
  CHECK_THROWS_AS(load_observations(dir.file("counts.csv"), universe, false), DataError);
}

TEST_CASE("saving observations expands counts back to the list form") {
  Matrix attributes(4, 1);
  attributes << 0.0, 1.0, 2.0, 3.0;
  const ItemUniverse universe(attributes, {"x"});

  std::vector<Observation> obs;
  obs.push_back({"a", {0, 5}, {{1, 2}, {3, 1}}});
  obs.push_back({"b", {0, 5}, {}});

  TempDir dir;
  save_observations(obs, dir.file("out.csv"));
  std::ifstream in(dir.file("out.csv"));
  std::string header, line_a, line_b;
  std::getline(in, header);
  std::getline(in, line_a);
  std::getline(in, line_b);
  CHECK(header == "obs_id,L,U,items");
  CHECK(line_a == "a,0,5,\"1;1;3\"");
  CHECK(line_b == "b,0,5,");

  const std::vector<Observation> back = load_observations(dir.file("out.csv"), universe, true);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == obs[0]);
  CHECK(back[1] == obs[1]);
}

TEST_CASE("bounds rules bracket observations by their size") {
  const BoundsRules rules = BoundsRules::parse("0-1,2-3,4-8");
  REQUIRE(rules.brackets.size() == 3);
  CHECK(rules.brackets[1] == Bounds{2, 3});

  CHECK_THROWS_AS(BoundsRules::parse("2-1"), ConfigError);
  CHECK_THROWS_AS(BoundsRules::parse("fish"), ConfigError);
  CHECK_THROWS_AS(BoundsRules::parse(""), ConfigError);

  std::vector<Observation> obs;
  obs.push_back({"a", {0, 0}, {{0, 1}}});
  obs.push_back({"b", {0, 0}, {{0, 1}, {1, 1}, {2, 1}}});
  obs.push_back({"c", {0, 0}, {}});
  apply_bounds_rules(obs, rules);
  CHECK(obs[0].bounds == Bounds{0, 1});
  CHECK(obs[1].bounds == Bounds{2, 3});
  CHECK(obs[2].bounds == Bounds{0, 1});

  // an observation no bracket covers is an error that names the offender
  std::vector<Observation> uncovered;
  uncovered.push_back({"big", {0, 0}, {{0, 4}, {1, 5}}});
  try {
    apply_bounds_rules(uncovered, BoundsRules::parse("0-3"));
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("big") != std::string::npos);
  }
}

TEST_CASE("grouping by bounds partitions the observations") {
  std::vector<Observation> obs;
  obs.push_back({"a", {0, 2}, {}});
  obs.push_back({"b", {1, 3}, {{0, 1}}});
  obs.push_back({"c", {0, 2}, {{1, 1}}});

  const auto groups = group_by_bounds(obs);
  REQUIRE(groups.size() == 2);
  CHECK(groups.at(Bounds{0, 2}) == std::vector<std::size_t>{0, 2});
  CHECK(groups.at(Bounds{1, 3}) == std::vector<std::size_t>{1});
}

TEST_CASE("splitting is a seeded partition") {
  SyntheticSpec spec;
  spec.m = 4;
  spec.bounds = {0, 2};
  spec.n_estimation = 30;
  spec.n_prediction = 0;
  spec.seed = 3;
  const Dataset data = generate_synthetic(spec);

  const auto [train, test] = split(data, 0.8, 42);
  CHECK(train.observations.size() == 24);
  CHECK(test.observations.size() == 6);
  CHECK(train.n_estimation == train.observations.size());

  std::set<std::string> ids;
  for (const auto& o : train.observations) ids.insert(o.id);
  for (const auto& o : test.observations) ids.insert(o.id);
  CHECK(ids.size() == data.observations.size());

  const auto [train2, test2] = split(data, 0.8, 42);
  REQUIRE(train2.observations.size() == train.observations.size());
  for (std::size_t i = 0; i < train.observations.size(); ++i)
    CHECK(train2.observations[i].id == train.observations[i].id);

  const auto [train3, test3] = split(data, 0.8, 43);
  bool any_difference = false;
  for (std::size_t i = 0; i < train.observations.size(); ++i)
    if (train3.observations[i].id != train.observations[i].id) any_difference = true;
  CHECK(any_difference);

  // tiny fractions still leave both sides nonempty; degenerate ones are refused
  const auto [tiny, rest] = split(data, 0.01, 1);
  CHECK(tiny.observations.size() == 1);
  CHECK(rest.observations.size() == data.observations.size() - 1);
  CHECK_THROWS_AS(split(data, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(split(data, 1.0, 1), ConfigError);
}

TEST_CASE("synthetic provenance records the generator settings") {
  SyntheticSpec spec;
  spec.m = 4;
  spec.bounds = {0, 2};
  spec.n_estimation = 10;
  spec.n_prediction = 2;
  spec.seed = 77;
  const Dataset data = generate_synthetic(spec);

  CHECK(data.provenance.find("dag=bic") != std::string::npos);
  CHECK(data.provenance.find("seed=77") != std::string::npos);
  CHECK(data.estimation_set().size() == 10);
  CHECK(data.prediction_set().size() == 2);
  CHECK(data.observations.front().id == "e1");
  CHECK(data.observations.back().id == "p2");
}
