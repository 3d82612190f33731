#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace smlp {

// Logical (instrumented) operation counts.  One counter per network.
// Flop accounting convention, recorded in output metadata: one addition
// or comparison = 1 flop, one multiply-add = 2 flops.
struct OpCounter {
  uint64_t additions = 0;
  uint64_t multiply_adds = 0;
  uint64_t comparisons = 0;

  // Cost of one spike landing on a layer of the given fanout: one row add.
  void count_spike_cost(std::size_t fanout, std::size_t drain_checks) {
    additions += fanout;
    comparisons += drain_checks;
  }

  void merge(const OpCounter& o) {
    additions += o.additions;
    multiply_adds += o.multiply_adds;
    comparisons += o.comparisons;
  }

  uint64_t flops() const {
    return additions + comparisons + 2 * multiply_adds;
  }
};

inline bool operator==(const OpCounter& a, const OpCounter& b) {
  return a.additions == b.additions && a.multiply_adds == b.multiply_adds &&
         a.comparisons == b.comparisons;
}

// Multiply-adds of one dense forward pass.  Without activations this is
// sum over layers of N_{l-1} * N_l; with cached activations, source units
// whose activation is zero are skipped.
inline uint64_t count_dense_cost(
    const std::vector<std::size_t>& layer_sizes,
    const std::vector<std::vector<double>>* activations = nullptr) {
  uint64_t madds = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    std::size_t active = layer_sizes[l];
    if (activations) {
      active = 0;
      for (double a : (*activations)[l])
        if (a != 0.0) ++active;
    }
    madds += static_cast<uint64_t>(active) * layer_sizes[l + 1];
  }
  return madds;
}

// One (cumulative ops, test error) point of an early-guess curve.
struct CurvePoint {
  uint32_t t = 0;
  uint64_t flops = 0;
  double error = 0.0;
};

// Serialized output of one experiment run.
struct ExperimentRecord {
  nlohmann::json config;
  std::vector<double> train_error;  // per epoch
  std::vector<double> test_error;   // per epoch
  std::vector<CurvePoint> curve;    // optional (ops, error) checkpoints
  double wall_seconds = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["config"] = config;
    j["train_error"] = train_error;
    j["test_error"] = test_error;
    j["wall_seconds"] = wall_seconds;
    j["flop_convention"] = "add=1, compare=1, multiply-add=2";
    auto& c = j["curve"] = nlohmann::json::array();
    for (const auto& p : curve)
      c.push_back({{"t", p.t}, {"flops", p.flops}, {"error", p.error}});
    return j;
  }

  static ExperimentRecord from_json(const nlohmann::json& j) {
    ExperimentRecord r;
    r.config = j.at("config");
    r.train_error = j.at("train_error").get<std::vector<double>>();
    r.test_error = j.at("test_error").get<std::vector<double>>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    for (const auto& p : j.at("curve"))
      r.curve.push_back({p.at("t").get<uint32_t>(),
                         p.at("flops").get<uint64_t>(),
                         p.at("error").get<double>()});
    return r;
  }
};

inline void write_curve_csv(std::ostream& os,
                            const std::vector<CurvePoint>& curve) {
  os << "ops,error\n";
  for (const auto& p : curve) os << p.flops << ',' << p.error << '\n';
}

}  // namespace smlp
