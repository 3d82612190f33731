#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "doctest.h"
#include "smlp/dataio.hpp"

using namespace smlp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("smlp_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

}  // namespace

TEST_CASE("IDX round trip recovers bytes as scaled features") {
  TempDir dir;
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> byte(0, 255);
  std::vector<std::vector<unsigned char>> images;
  std::vector<unsigned char> labels;
  for (int k = 0; k < 7; ++k) {
    std::vector<unsigned char> img(4 * 3);
    for (auto& b : img) b = static_cast<unsigned char>(byte(rng));
    images.push_back(img);
    labels.push_back(static_cast<unsigned char>(k % 10));
  }
  write_mnist_idx(dir.file("img"), dir.file("lbl"), images, labels, 4, 3);

  const auto ds = load_mnist_idx(dir.file("img"), dir.file("lbl"));
  REQUIRE(ds.size() == 7);
  CHECK(ds.n_features == 12);
  for (int k = 0; k < 7; ++k) {
    CHECK(ds.samples[k].label == static_cast<uint32_t>(k % 10));
    for (std::size_t i = 0; i < 12; ++i)
      CHECK(ds.samples[k].dense[i] ==
            static_cast<float>(images[k][i]) / 255.0f);
  }
  // pixel byte 255 -> exactly 1.0
  images[0][0] = 255;
  write_mnist_idx(dir.file("img"), dir.file("lbl"), images, labels, 4, 3);
  CHECK(load_mnist_idx(dir.file("img"), dir.file("lbl")).samples[0].dense[0] ==
        1.0f);
}

TEST_CASE("IDX loader rejects bad magic, truncation and count mismatch") {
  TempDir dir;
  write_mnist_idx(dir.file("img"), dir.file("lbl"),
                  {std::vector<unsigned char>(4, 1)}, {3}, 2, 2);

  // swap magics
  CHECK_THROWS_WITH_AS(load_mnist_idx(dir.file("lbl"), dir.file("img")),
                       doctest::Contains("bad image magic"),
                       std::runtime_error);

  // truncate the image file
  {
    std::ifstream in(dir.file("img"), std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)), {});
    write_text(dir.file("trunc"), all.substr(0, all.size() - 2));
  }
  CHECK_THROWS_WITH_AS(load_mnist_idx(dir.file("trunc"), dir.file("lbl")),
                       doctest::Contains("truncated"), std::runtime_error);

  // count mismatch
  write_mnist_idx(dir.file("img2"), dir.file("lbl2"),
                  {std::vector<unsigned char>(4, 1),
                   std::vector<unsigned char>(4, 2)},
                  {3, 4}, 2, 2);
  CHECK_THROWS_WITH_AS(load_mnist_idx(dir.file("img2"), dir.file("lbl")),
                       doctest::Contains("count mismatch"),
                       std::runtime_error);
  CHECK_THROWS_AS(load_mnist_idx(dir.file("missing"), dir.file("lbl")),
                  std::runtime_error);
}

TEST_CASE("sparse loader parses the line format") {
  TempDir dir;
  write_text(dir.file("s.txt"), "1 0:2 5:1\n0\n");
  const auto ds = load_sparse(dir.file("s.txt"));
  REQUIRE(ds.size() == 2);
  CHECK(ds.n_features == 6);
  CHECK(ds.n_classes == 2);
  CHECK(ds.samples[0].label == 1);
  REQUIRE(ds.samples[0].sparse.size() == 2);
  CHECK(ds.samples[0].sparse[0] == std::pair<uint32_t, float>{0, 2.0f});
  CHECK(ds.samples[0].sparse[1] == std::pair<uint32_t, float>{5, 1.0f});

  // empty feature list -> zero vector sample
  CHECK(ds.samples[1].sparse.empty());
  std::vector<double> dense;
  ds.samples[1].to_dense(dense, ds.n_features);
  for (double v : dense) CHECK(v == 0.0);
}

TEST_CASE("sparse loader reports malformed lines with line numbers") {
  TempDir dir;
  write_text(dir.file("dup.txt"), "0 1:1 1:2\n");
  CHECK_THROWS_WITH_AS(load_sparse(dir.file("dup.txt")),
                       doctest::Contains(":1"), std::runtime_error);
  write_text(dir.file("desc.txt"), "0 0:1\n0 5:1 2:1\n");
  CHECK_THROWS_WITH_AS(load_sparse(dir.file("desc.txt")),
                       doctest::Contains(":2"), std::runtime_error);
  write_text(dir.file("bad.txt"), "0 abc\n");
  CHECK_THROWS_AS(load_sparse(dir.file("bad.txt")), std::runtime_error);
  write_text(dir.file("neg.txt"), "-1 0:1\n");
  CHECK_THROWS_AS(load_sparse(dir.file("neg.txt")), std::runtime_error);
}

TEST_CASE("sparse loader rejects out-of-range indices when width is fixed") {
  TempDir dir;
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> idx(0, 20);
  for (int rep = 0; rep < 50; ++rep) {
    const int i = idx(rng);
    write_text(dir.file("f.txt"),
               "0 " + std::to_string(i) + ":1\n");
    if (i >= 10) {
      CHECK_THROWS_AS(load_sparse(dir.file("f.txt"), 10), std::runtime_error);
    } else {
      CHECK(load_sparse(dir.file("f.txt"), 10).n_features == 10);
    }
  }
}

TEST_CASE("split_and_shuffle: sizes, determinism, seed sensitivity") {
  Dataset ds;
  ds.n_features = 1;
  ds.n_classes = 2;
  for (int k = 0; k < 8000; ++k) {
    Sample s;
    s.dense = {static_cast<float>(k)};
    s.label = static_cast<uint32_t>(k % 2);
    ds.samples.push_back(s);
  }
  auto [train, test] = split_and_shuffle(ds, 7.0 / 8.0, 1);
  CHECK(train.size() == 7000);
  CHECK(test.size() == 1000);

  auto [train2, test2] = split_and_shuffle(ds, 7.0 / 8.0, 1);
  for (std::size_t k = 0; k < 100; ++k)
    CHECK(train.samples[k].dense[0] == train2.samples[k].dense[0]);

  auto [train3, test3] = split_and_shuffle(ds, 7.0 / 8.0, 2);
  std::size_t diff = 0;
  for (std::size_t k = 0; k < train.size(); ++k)
    if (train.samples[k].dense[0] != train3.samples[k].dense[0]) ++diff;
  CHECK(diff > 100);  // different seeds give different permutations

  CHECK_THROWS_AS(split_and_shuffle(ds, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_and_shuffle(ds, 1.0, 1), std::invalid_argument);
}
