#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "adafnn/dataset_io.hpp"
#include "adafnn/simgen.hpp"

using namespace adafnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "adafnn_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("well-formed csv ingests every sample") {
  fs::path path = scratch_file("small.csv");
  write_text(path,
             "0,0.25,0.5,0.75,1\n"
             "1,2,3,4,5,10\n"
             "0.5,0.5,0.5,0.5,0.5,-1\n"
             "-2,0,2,0,-2,3.5\n");
  FunctionalDataset data = read_dataset_csv(path.string(), Task::regression);
  REQUIRE(data.size() == 3);
  REQUIRE(data.grid.size() == 5);
  CHECK(data.grid[1] == 0.25);
  CHECK(data.samples[0].values == std::vector<double>{1, 2, 3, 4, 5});
  CHECK(*data.samples[0].response == 10.0);
  CHECK(*data.samples[2].response == 3.5);
}

TEST_CASE("field count errors name the offending line") {
  fs::path path = scratch_file("ragged.csv");
  write_text(path,
             "0,0.5,1\n"
             "1,2,3,0\n"
             "1,2,3\n");
  REQUIRE_THROWS_WITH(read_dataset_csv(path.string(), Task::regression),
                      Catch::Matchers::ContainsSubstring("line 3") &&
                          Catch::Matchers::ContainsSubstring("got 3"));
}

TEST_CASE("non-numeric cells name the offending line") {
  fs::path path = scratch_file("garbage.csv");
  write_text(path,
             "0,0.5,1\n"
             "1,2,3,0\n"
             "1,oops,3,0\n");
  REQUIRE_THROWS_WITH(read_dataset_csv(path.string(), Task::regression),
                      Catch::Matchers::ContainsSubstring("line 3") &&
                          Catch::Matchers::ContainsSubstring("oops"));
}

TEST_CASE("grid problems are reported on line 1") {
  fs::path path = scratch_file("badgrid.csv");
  write_text(path, "0,0.5,0.5,1\n1,2,3,4,0\n");
  REQUIRE_THROWS_WITH(read_dataset_csv(path.string(), Task::regression),
                      Catch::Matchers::ContainsSubstring("line 1") &&
                          Catch::Matchers::ContainsSubstring("increasing"));

  write_text(path, "0,1\n");
  REQUIRE_THROWS_WITH(read_dataset_csv(path.string(), Task::regression),
                      Catch::Matchers::ContainsSubstring("line 1"));

  REQUIRE_THROWS_AS(read_dataset_csv("/no/such/file.csv", Task::regression),
                    data_error);
}

TEST_CASE("observation times are rescaled onto the unit interval") {
  fs::path path = scratch_file("hours.csv");
  write_text(path,
             "0,12,24,36,48\n"
             "5,6,7,8,9,1\n");
  FunctionalDataset data = read_dataset_csv(path.string(), Task::regression);
  REQUIRE(data.grid.size() == 5);
  CHECK(data.grid.front() == 0.0);
  CHECK(data.grid.back() == 1.0);
  CHECK(data.grid[1] == Catch::Approx(0.25).margin(1e-15));
  CHECK(data.grid[2] == Catch::Approx(0.5).margin(1e-15));

  // Same shape shifted away from zero.
  write_text(path, "10,11,12,14\n1,1,1,1,0\n");
  data = read_dataset_csv(path.string(), Task::regression);
  CHECK(data.grid.front() == 0.0);
  CHECK(data.grid[1] == Catch::Approx(0.25).margin(1e-15));
  CHECK(data.grid.back() == 1.0);
}

TEST_CASE("classification ingestion rejects non-binary labels") {
  fs::path path = scratch_file("labels.csv");
  write_text(path,
             "0,0.5,1\n"
             "1,2,3,1\n"
             "4,5,6,0\n"
             "7,8,9,0.5\n");
  REQUIRE_THROWS_WITH(
      read_dataset_csv(path.string(), Task::binary_classification),
      Catch::Matchers::ContainsSubstring("line 4"));
  // The same file is fine as regression data.
  CHECK(read_dataset_csv(path.string(), Task::regression).size() == 3);
}

TEST_CASE("dump then ingest reproduces the dataset bit for bit") {
  SimCaseSpec spec = sim_case_spec(3);
  spec.n_train = 40;
  spec.n_val = 10;
  spec.n_test = 10;
  SimulatedCase sim = build_case(spec, 99);

  fs::path path = scratch_file("roundtrip.csv");
  write_dataset_csv(sim.train, path.string());
  FunctionalDataset back = read_dataset_csv(path.string(), Task::regression);

  REQUIRE(back.size() == sim.train.size());
  REQUIRE(back.grid == sim.train.grid);
  for (std::size_t i = 0; i < back.size(); ++i) {
    REQUIRE(back.samples[i].values == sim.train.samples[i].values);
    REQUIRE(*back.samples[i].response == *sim.train.samples[i].response);
  }

  // A second dump of the ingested copy is byte identical to the first file.
  fs::path again = scratch_file("roundtrip2.csv");
  write_dataset_csv(back, again.string());
  std::ifstream a(path), b(again);
  std::string text_a((std::istreambuf_iterator<char>(a)),
                     std::istreambuf_iterator<char>());
  std::string text_b((std::istreambuf_iterator<char>(b)),
                     std::istreambuf_iterator<char>());
  REQUIRE(text_a == text_b);
}

TEST_CASE("dump requires labels everywhere") {
  FunctionalDataset data{Grid::uniform(2), {}, Task::regression};
  data.samples.push_back({{1, 2, 3}, 0.5});
  data.samples.push_back({{4, 5, 6}, std::nullopt});
  fs::path path = scratch_file("unlabeled.csv");
  REQUIRE_THROWS_AS(write_dataset_csv(data, path.string()), data_error);
}

TEST_CASE("seeded split is deterministic with floor counts") {
  FunctionalDataset data{Grid::uniform(2), {}, Task::regression};
  for (int i = 0; i < 100; ++i) {
    double v = static_cast<double>(i);
    data.samples.push_back({{v, v, v}, v});
  }

  DatasetSplits s1 = split_dataset(data, SplitFractions{}, 7);
  DatasetSplits s2 = split_dataset(data, SplitFractions{}, 7);
  DatasetSplits s3 = split_dataset(data, SplitFractions{}, 8);

  CHECK(s1.train.size() == 70);
  CHECK(s1.val.size() == 15);
  CHECK(s1.test.size() == 15);

  auto ids = [](const FunctionalDataset& d) {
    std::vector<double> out;
    for (const FunctionalSample& s : d.samples) out.push_back(*s.response);
    return out;
  };
  CHECK(ids(s1.train) == ids(s2.train));
  CHECK(ids(s1.test) == ids(s2.test));
  CHECK(ids(s1.train) != ids(s3.train));

  // Every sample lands in exactly one split.
  std::vector<double> all = ids(s1.train);
  for (double v : ids(s1.val)) all.push_back(v);
  for (double v : ids(s1.test)) all.push_back(v);
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) {
    REQUIRE(all[i] == static_cast<double>(i));
  }

  // Uneven count: floors for train and val, remainder to test.
  FunctionalDataset ten{Grid::uniform(2), {}, Task::regression};
  for (int i = 0; i < 10; ++i) ten.samples.push_back({{1, 2, 3}, 0.0});
  DatasetSplits s = split_dataset(ten, SplitFractions{}, 1);
  CHECK(s.train.size() == 7);
  CHECK(s.val.size() == 1);
  CHECK(s.test.size() == 2);
}

TEST_CASE("split validation") {
  FunctionalDataset data{Grid::uniform(2), {}, Task::regression};
  for (int i = 0; i < 4; ++i) data.samples.push_back({{1, 2, 3}, 0.0});

  CHECK_THROWS_AS(split_dataset(data, SplitFractions{0.5, 0.4, 0.3}, 1),
                  config_error);
  CHECK_THROWS_AS(split_dataset(data, SplitFractions{0.9, -0.1, 0.2}, 1),
                  config_error);
  // 4 samples cannot produce three nonempty 70/15/15 pieces.
  CHECK_THROWS_AS(split_dataset(data, SplitFractions{}, 1), data_error);
}
