#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smlp/oracle.hpp"

namespace smlp {

// Weight checkpoint: little-endian binary container plus a JSON sidecar
// (<path>.json) holding the run configuration.  Round-trips bit-exactly,
// so weights can be transplanted between the spiking net and the dense
// oracle in either direction.
//
// Layout: magic "SMLPCKPT" | u32 version | u32 n_matrices |
//         (n_matrices + 1) x u32 layer sizes | row-major f64 matrices.
namespace ckpt {

constexpr char kMagic[8] = {'S', 'M', 'L', 'P', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

struct Checkpoint {
  std::vector<std::size_t> layer_sizes;
  std::vector<WeightMatrix> weights;
  nlohmann::json sidecar;
};

inline void save(const std::string& path,
                 const std::vector<std::size_t>& layer_sizes,
                 const std::vector<WeightMatrix>& weights,
                 const nlohmann::json& sidecar = {}) {
  if (weights.size() + 1 != layer_sizes.size())
    throw std::invalid_argument("checkpoint: sizes/weights mismatch");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  f.write(kMagic, sizeof kMagic);
  auto put_u32 = [&](uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    f.write(reinterpret_cast<const char*>(b), 4);
  };
  put_u32(kVersion);
  put_u32(static_cast<uint32_t>(weights.size()));
  for (auto s : layer_sizes) put_u32(static_cast<uint32_t>(s));
  for (const auto& m : weights)
    f.write(reinterpret_cast<const char*>(m.w.data()),
            static_cast<std::streamsize>(m.w.size() * sizeof(double)));
  if (!f) throw std::runtime_error("checkpoint: write failed: " + path);
  f.close();

  std::ofstream side(path + ".json", std::ios::trunc);
  side << sidecar.dump(2) << '\n';
}

inline Checkpoint load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, sizeof magic);
  if (!f || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  auto get_u32 = [&]() -> uint32_t {
    unsigned char b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw std::runtime_error("checkpoint: truncated file " + path);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) |
           (static_cast<uint32_t>(b[3]) << 24);
  };
  const uint32_t version = get_u32();
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version");
  const uint32_t n = get_u32();

  Checkpoint c;
  for (uint32_t i = 0; i <= n; ++i) c.layer_sizes.push_back(get_u32());
  for (uint32_t l = 0; l < n; ++l) {
    WeightMatrix m(c.layer_sizes[l], c.layer_sizes[l + 1]);
    f.read(reinterpret_cast<char*>(m.w.data()),
           static_cast<std::streamsize>(m.w.size() * sizeof(double)));
    if (!f) throw std::runtime_error("checkpoint: truncated file " + path);
    c.weights.push_back(std::move(m));
  }

  std::ifstream side(path + ".json");
  if (side) {
    try {
      side >> c.sidecar;
    } catch (const nlohmann::json::exception&) {
      c.sidecar = nlohmann::json{};
    }
  }
  return c;
}

}  // namespace ckpt
}  // namespace smlp
