#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "opau/dataset.hpp"
#include "support/idx_fixture.hpp"

using namespace opau;
namespace fixture = testing_fixture;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

// Four 2x2 "images" with one bright pixel walking around the square.
struct SmallIdx {
  std::string images = temp_path("opau_test_small-images.idx");
  std::string labels = temp_path("opau_test_small-labels.idx");

  SmallIdx() {
    std::vector<std::vector<std::uint8_t>> imgs = {
        {255, 0, 0, 0}, {0, 255, 0, 0}, {0, 0, 255, 0}, {0, 0, 0, 51}};
    fixture::write_idx_images(images, imgs, 2, 2);
    fixture::write_idx_labels(labels, {0, 1, 2, 3});
  }
  ~SmallIdx() {
    std::filesystem::remove(images);
    std::filesystem::remove(labels);
  }
};

}  // namespace

TEST_CASE("idx pair loads with pixels scaled to [0,1]") {
  SmallIdx files;
  const DatasetBatch data = load_idx(files.images, files.labels, 10);
  REQUIRE(data.size() == 4);
  REQUIRE(data.dim() == 4);
  CHECK(data.num_classes == 10);
  CHECK(data.features(0, 0) == 1.0);
  CHECK(data.features(0, 1) == 0.0);
  CHECK(data.features(1, 1) == 1.0);
  CHECK(data.features(3, 3) == doctest::Approx(51.0 / 255.0));
  CHECK(data.labels == std::vector<int>{0, 1, 2, 3});
  CHECK_NOTHROW(data.validate());
}

TEST_CASE("idx error paths are distinguishable") {
  SmallIdx files;

  SUBCASE("missing files") {
    CHECK_THROWS_WITH_AS(load_idx(temp_path("opau_no_such.idx"), files.labels),
                         doctest::Contains("cannot open"), std::runtime_error);
  }
  SUBCASE("bad image magic") {
    const std::string bad = temp_path("opau_bad_magic-images.idx");
    fixture::write_idx_images(bad, {{0, 0, 0, 0}}, 2, 2, 0x00000804);
    CHECK_THROWS_WITH_AS(load_idx(bad, files.labels),
                         doctest::Contains("bad IDX image magic"), std::runtime_error);
    std::filesystem::remove(bad);
  }
  SUBCASE("bad label magic") {
    const std::string bad = temp_path("opau_bad_magic-labels.idx");
    fixture::write_idx_labels(bad, {0, 1, 2, 3}, 0x00000803);
    CHECK_THROWS_WITH_AS(load_idx(files.images, bad),
                         doctest::Contains("bad IDX label magic"), std::runtime_error);
    std::filesystem::remove(bad);
  }
  SUBCASE("truncated pixel payload") {
    const std::string bad = temp_path("opau_truncated-images.idx");
    {
      std::ofstream out(bad, std::ios::binary);
      fixture::write_be32(out, 0x00000803);
      fixture::write_be32(out, 4);
      fixture::write_be32(out, 2);
      fixture::write_be32(out, 2);
      out.put(static_cast<char>(7));  // 1 of 16 payload bytes
    }
    CHECK_THROWS_WITH_AS(load_idx(bad, files.labels),
                         doctest::Contains("truncated pixel payload"),
                         std::runtime_error);
    std::filesystem::remove(bad);
  }
  SUBCASE("image/label count mismatch") {
    const std::string bad = temp_path("opau_mismatch-labels.idx");
    fixture::write_idx_labels(bad, {0, 1, 2});
    CHECK_THROWS_WITH_AS(load_idx(files.images, bad),
                         doctest::Contains("label count 3 != image count 4"),
                         std::runtime_error);
    std::filesystem::remove(bad);
  }
  SUBCASE("label value outside the class range") {
    const std::string bad = temp_path("opau_range-labels.idx");
    fixture::write_idx_labels(bad, {0, 1, 10, 3});
    CHECK_THROWS_WITH_AS(load_idx(files.images, bad),
                         doctest::Contains("label 10 out of range for 10 classes"),
                         std::runtime_error);
    std::filesystem::remove(bad);
  }
}

TEST_CASE("synthetic digit fixture produces a loadable pair") {
  const auto pair = fixture::make_digit_idx(temp_path("opau_digits"), 40, 7);
  const DatasetBatch data = load_idx(pair.images, pair.labels);
  CHECK(data.size() == 40);
  CHECK(data.dim() == 28 * 28);
  for (int s = 0; s < 40; ++s) CHECK(data.labels[static_cast<std::size_t>(s)] == s % 10);
  CHECK(data.features.minCoeff() >= 0.0);
  CHECK(data.features.maxCoeff() <= 1.0);
  CHECK(data.features.row(0).maxCoeff() > 0.5);  // the glyph is actually drawn

  // deterministic for a fixed seed
  const auto again = fixture::make_digit_idx(temp_path("opau_digits2"), 40, 7);
  const DatasetBatch data2 = load_idx(again.images, again.labels);
  CHECK((data.features - data2.features).cwiseAbs().maxCoeff() == 0.0);
  for (const auto& p : {pair, again}) {
    std::filesystem::remove(p.images);
    std::filesystem::remove(p.labels);
  }
}

TEST_CASE("csv with a header row loads features and labels") {
  const std::string path = temp_path("opau_test.csv");
  std::ofstream(path) << "x1,x2,label\r\n"
                         "0.5,0.5,1\n"
                         "-1.25,3e-1,0\n"
                         "\n"
                         "4,5,2\r\n";
  const DatasetBatch data = load_csv(path, "label");
  REQUIRE(data.size() == 3);
  REQUIRE(data.dim() == 2);
  CHECK(data.num_classes == 3);
  CHECK(data.features(0, 0) == 0.5);
  CHECK(data.features(0, 1) == 0.5);
  CHECK(data.labels[0] == 1);
  CHECK(data.features(1, 0) == -1.25);
  CHECK(data.features(1, 1) == 0.3);
  CHECK(data.labels[1] == 0);
  CHECK(data.labels[2] == 2);
  std::filesystem::remove(path);
}

TEST_CASE("label column can sit anywhere") {
  const std::string path = temp_path("opau_test_labelfirst.csv");
  std::ofstream(path) << "y,a,b\n1,2,3\n0,4,5\n";
  const DatasetBatch data = load_csv(path, "y");
  CHECK(data.labels == std::vector<int>{1, 0});
  CHECK(data.features(0, 0) == 2.0);
  CHECK(data.features(1, 1) == 5.0);
  std::filesystem::remove(path);
}

TEST_CASE("csv error paths") {
  const std::string path = temp_path("opau_test_bad.csv");

  SUBCASE("missing label column") {
    std::ofstream(path) << "a,b\n1,2\n";
    CHECK_THROWS_WITH_AS(load_csv(path, "label"),
                         doctest::Contains("no column named 'label'"),
                         std::runtime_error);
  }
  SUBCASE("unparseable cell, with its line number") {
    std::ofstream(path) << "a,label\n1,0\nx2,1\n";
    CHECK_THROWS_WITH_AS(load_csv(path, "label"), doctest::Contains(":3:"),
                         std::runtime_error);
  }
  SUBCASE("ragged row") {
    std::ofstream(path) << "a,b,label\n1,2,0\n1,0\n";
    CHECK_THROWS_WITH_AS(load_csv(path, "label"),
                         doctest::Contains("expected 3 cells, got 2"),
                         std::runtime_error);
  }
  SUBCASE("fractional label") {
    std::ofstream(path) << "a,label\n1,0.5\n";
    CHECK_THROWS_WITH_AS(load_csv(path, "label"),
                         doctest::Contains("label must be a non-negative integer"),
                         std::runtime_error);
  }
  SUBCASE("negative label") {
    std::ofstream(path) << "a,label\n1,-1\n";
    CHECK_THROWS(load_csv(path, "label"));
  }
  SUBCASE("empty file") {
    std::ofstream(path) << "";
    CHECK_THROWS_WITH_AS(load_csv(path, "label"),
                         doctest::Contains("missing CSV header row"),
                         std::runtime_error);
  }
  std::filesystem::remove(path);
}

TEST_CASE("split_batches preserves order and covers every sample") {
  DatasetBatch data;
  data.num_classes = 5;
  data.features.resize(10, 2);
  for (int i = 0; i < 10; ++i) {
    data.features(i, 0) = i;
    data.features(i, 1) = -i;
    data.labels.push_back(i % 5);
  }
  const auto batches = split_batches(data, 4);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 4);
  CHECK(batches[1].size() == 4);
  CHECK(batches[2].size() == 2);  // remainder batch
  CHECK(batches[1].features(0, 0) == 4.0);
  CHECK(batches[2].labels == std::vector<int>{3, 4});
  for (const auto& b : batches) CHECK(b.num_classes == 5);

  const auto whole = split_batches(data, 100);
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].size() == 10);
  CHECK_THROWS_AS(split_batches(data, 0), std::invalid_argument);
}

TEST_CASE("dataset validation catches inconsistencies") {
  DatasetBatch data;
  data.num_classes = 2;
  data.features.resize(2, 3);
  data.features.setZero();
  data.labels = {0, 1};
  CHECK_NOTHROW(data.validate());
  data.labels = {0};
  CHECK_THROWS_AS(data.validate(), std::invalid_argument);
  data.labels = {0, 2};
  CHECK_THROWS_AS(data.validate(), std::invalid_argument);
  data.labels = {0, 1};
  data.features(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(data.validate(), std::invalid_argument);
}
