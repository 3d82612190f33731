#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace smlp {

// One labelled sample.  Dense samples carry a full feature vector; sparse
// samples carry (index, value) pairs and are densified only when fed to
// the input quantizer.
struct Sample {
  std::vector<float> dense;
  std::vector<std::pair<uint32_t, float>> sparse;
  bool is_sparse = false;
  uint32_t label = 0;

  void to_dense(std::vector<double>& out, std::size_t n_features) const {
    out.assign(n_features, 0.0);
    if (is_sparse) {
      for (const auto& [i, v] : sparse) out[i] = v;
    } else {
      for (std::size_t i = 0; i < dense.size(); ++i) out[i] = dense[i];
    }
  }
};

struct Dataset {
  std::vector<Sample> samples;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;

  std::size_t size() const { return samples.size(); }
};

namespace detail {

inline uint32_t read_be_u32(std::istream& f, const std::string& path) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f) throw std::runtime_error("truncated IDX file: " + path);
  return (static_cast<uint32_t>(b[0]) << 24) |
         (static_cast<uint32_t>(b[1]) << 16) |
         (static_cast<uint32_t>(b[2]) << 8) | static_cast<uint32_t>(b[3]);
}

inline void write_be_u32(std::ostream& f, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace detail

// IDX (big-endian) image + label pair, the MNIST distribution format.
// Image magic 2051, label magic 2049; pixels are scaled to [0, 1] by 255.
inline Dataset load_mnist_idx(const std::string& images_path,
                              const std::string& labels_path) {
  std::ifstream fi(images_path, std::ios::binary);
  if (!fi) throw std::runtime_error("cannot open " + images_path);
  if (detail::read_be_u32(fi, images_path) != 2051)
    throw std::runtime_error("bad image magic (expected 2051): " +
                             images_path);
  const uint32_t n_images = detail::read_be_u32(fi, images_path);
  const uint32_t rows = detail::read_be_u32(fi, images_path);
  const uint32_t cols = detail::read_be_u32(fi, images_path);

  std::ifstream fl(labels_path, std::ios::binary);
  if (!fl) throw std::runtime_error("cannot open " + labels_path);
  if (detail::read_be_u32(fl, labels_path) != 2049)
    throw std::runtime_error("bad label magic (expected 2049): " +
                             labels_path);
  const uint32_t n_labels = detail::read_be_u32(fl, labels_path);
  if (n_images != n_labels)
    throw std::runtime_error("image/label count mismatch: " +
                             std::to_string(n_images) + " vs " +
                             std::to_string(n_labels));

  Dataset ds;
  ds.n_features = static_cast<std::size_t>(rows) * cols;
  std::vector<unsigned char> buf(ds.n_features);
  uint32_t max_label = 0;
  for (uint32_t k = 0; k < n_images; ++k) {
    fi.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (!fi) throw std::runtime_error("truncated IDX file: " + images_path);
    char label_byte;
    fl.read(&label_byte, 1);
    if (!fl) throw std::runtime_error("truncated IDX file: " + labels_path);
    Sample s;
    s.dense.resize(ds.n_features);
    for (std::size_t i = 0; i < buf.size(); ++i)
      s.dense[i] = static_cast<float>(buf[i]) / 255.0f;
    s.label = static_cast<unsigned char>(label_byte);
    max_label = std::max(max_label, s.label);
    ds.samples.push_back(std::move(s));
  }
  ds.n_classes = max_label + 1;
  return ds;
}

// Writes an image/label IDX pair; pixel values are raw bytes.
inline void write_mnist_idx(const std::string& images_path,
                            const std::string& labels_path,
                            const std::vector<std::vector<unsigned char>>& images,
                            const std::vector<unsigned char>& labels,
                            uint32_t rows, uint32_t cols) {
  if (images.size() != labels.size())
    throw std::invalid_argument("write_mnist_idx: count mismatch");
  std::ofstream fi(images_path, std::ios::binary | std::ios::trunc);
  detail::write_be_u32(fi, 2051);
  detail::write_be_u32(fi, static_cast<uint32_t>(images.size()));
  detail::write_be_u32(fi, rows);
  detail::write_be_u32(fi, cols);
  for (const auto& img : images) {
    if (img.size() != static_cast<std::size_t>(rows) * cols)
      throw std::invalid_argument("write_mnist_idx: image size mismatch");
    fi.write(reinterpret_cast<const char*>(img.data()),
             static_cast<std::streamsize>(img.size()));
  }
  std::ofstream fl(labels_path, std::ios::binary | std::ios::trunc);
  detail::write_be_u32(fl, 2049);
  detail::write_be_u32(fl, static_cast<uint32_t>(labels.size()));
  fl.write(reinterpret_cast<const char*>(labels.data()),
           static_cast<std::streamsize>(labels.size()));
  if (!fi || !fl) throw std::runtime_error("write_mnist_idx: write failed");
}

// Sparse text format, one sample per line:
//   label idx:val idx:val ...
// Indices must be ascending within a line; duplicates are rejected.
// If expected_features is 0 the feature count is inferred as max index + 1.
inline Dataset load_sparse(const std::string& path,
                           std::size_t expected_features = 0) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  Dataset ds;
  ds.n_features = expected_features;
  uint32_t max_label = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    const std::string where = path + ":" + std::to_string(line_no);
    long label;
    if (!(ss >> label) || label < 0)
      throw std::runtime_error("bad label at " + where);
    Sample s;
    s.is_sparse = true;
    s.label = static_cast<uint32_t>(label);
    max_label = std::max(max_label, s.label);
    std::string tok;
    long last_idx = -1;
    while (ss >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error("missing ':' in feature at " + where);
      long idx;
      double val;
      try {
        idx = std::stol(tok.substr(0, colon));
        val = std::stod(tok.substr(colon + 1));
      } catch (const std::exception&) {
        throw std::runtime_error("malformed feature '" + tok + "' at " +
                                 where);
      }
      if (idx < 0) throw std::runtime_error("negative index at " + where);
      if (idx == last_idx)
        throw std::runtime_error("duplicate index " + std::to_string(idx) +
                                 " at " + where);
      if (idx < last_idx)
        throw std::runtime_error("indices not ascending at " + where);
      if (expected_features &&
          static_cast<std::size_t>(idx) >= expected_features)
        throw std::runtime_error("index " + std::to_string(idx) +
                                 " out of range at " + where);
      last_idx = idx;
      s.sparse.emplace_back(static_cast<uint32_t>(idx),
                            static_cast<float>(val));
      if (!expected_features)
        ds.n_features =
            std::max(ds.n_features, static_cast<std::size_t>(idx) + 1);
    }
    ds.samples.push_back(std::move(s));
  }
  ds.n_classes = ds.samples.empty() ? 0 : max_label + 1;
  return ds;
}

// Deterministic seeded shuffle, then a floor(n * ratio) / remainder split.
inline std::pair<Dataset, Dataset> split_and_shuffle(const Dataset& ds,
                                                     double ratio,
                                                     uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw std::invalid_argument("split ratio must be in (0, 1)");
  std::vector<std::size_t> perm(ds.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  const std::size_t n_train =
      static_cast<std::size_t>(ds.size() * ratio);
  Dataset train, test;
  train.n_features = test.n_features = ds.n_features;
  train.n_classes = test.n_classes = ds.n_classes;
  for (std::size_t k = 0; k < perm.size(); ++k)
    (k < n_train ? train : test).samples.push_back(ds.samples[perm[k]]);
  return {std::move(train), std::move(test)};
}

}  // namespace smlp
