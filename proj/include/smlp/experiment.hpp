#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "smlp/dataio.hpp"
#include "smlp/metrics.hpp"
#include "smlp/network.hpp"
#include "smlp/oracle.hpp"

namespace smlp {

// FNV-1a hash of a config dump; stamped on every output so records are
// attributable to the exact configuration that produced them.
inline std::string config_hash(const std::string& text) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Per-epoch sample order shared by both engines so runs are comparable.
inline std::vector<std::size_t> epoch_order(std::size_t n, uint64_t seed,
                                            std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ull * (epoch + 1)));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

inline std::vector<double> one_hot(std::size_t label, std::size_t n_classes) {
  std::vector<double> y(n_classes, 0.0);
  y[label] = 1.0;
  return y;
}

inline double evaluate_spiking(SpikingNetwork& net, const Dataset& ds,
                               uint32_t T, std::size_t limit = 0) {
  const std::size_t n = limit ? std::min(limit, ds.size()) : ds.size();
  std::size_t wrong = 0;
  std::vector<double> x;
  for (std::size_t k = 0; k < n; ++k) {
    ds.samples[k].to_dense(x, ds.n_features);
    if (net.predict(x, T) != ds.samples[k].label) ++wrong;
  }
  return n ? static_cast<double>(wrong) / n : 0.0;
}

inline double evaluate_dense(const DenseNet& net, const Dataset& ds,
                             std::size_t limit = 0) {
  const std::size_t n = limit ? std::min(limit, ds.size()) : ds.size();
  std::size_t wrong = 0;
  std::vector<double> x;
  for (std::size_t k = 0; k < n; ++k) {
    ds.samples[k].to_dense(x, ds.n_features);
    if (net.predict(x) != ds.samples[k].label) ++wrong;
  }
  return n ? static_cast<double>(wrong) / n : 0.0;
}

inline void train_epoch_spiking(SpikingNetwork& net, const Dataset& ds,
                                const std::vector<std::size_t>& order) {
  std::vector<double> x;
  for (std::size_t k : order) {
    ds.samples[k].to_dense(x, ds.n_features);
    net.train_iteration(x, one_hot(ds.samples[k].label, ds.n_classes));
  }
}

inline void train_epoch_dense(DenseNet& net, const Dataset& ds, double eta,
                              const std::vector<std::size_t>& order) {
  std::vector<double> x;
  for (std::size_t k : order) {
    ds.samples[k].to_dense(x, ds.n_features);
    net.sgd_step(x, one_hot(ds.samples[k].label, ds.n_classes), eta);
  }
}

// Early-guess curve: run prediction timestep by timestep, snapshotting
// argmax(u) and the instrumented flop totals at each checkpoint.
// include_input_layer selects whether the input quantizer and the
// input -> first-hidden row adds are billed.
inline std::vector<CurvePoint> early_guess_curve(
    SpikingNetwork& net, const Dataset& ds, uint32_t T_max,
    const std::vector<uint32_t>& checkpoints, bool include_input_layer = true,
    std::size_t limit = 0) {
  const std::size_t n = limit ? std::min(limit, ds.size()) : ds.size();
  std::vector<std::size_t> wrong(checkpoints.size(), 0);
  std::vector<uint64_t> flops(checkpoints.size(), 0);
  std::vector<double> x;
  for (std::size_t k = 0; k < n; ++k) {
    ds.samples[k].to_dense(x, ds.n_features);
    net.reset_counters();
    net.reset_forward();
    std::size_t next = 0;
    for (uint32_t t = 1; t <= T_max && next < checkpoints.size(); ++t) {
      net.step_forward(x);
      if (t == checkpoints[next]) {
        const auto& u = net.output_sum();
        std::size_t best = 0;
        for (std::size_t j = 1; j < u.size(); ++j)
          if (u[j] > u[best]) best = j;
        if (best != ds.samples[k].label) ++wrong[next];
        flops[next] += net.counters().totals(include_input_layer).flops();
        ++next;
      }
    }
  }
  std::vector<CurvePoint> curve;
  for (std::size_t c = 0; c < checkpoints.size(); ++c)
    curve.push_back({checkpoints[c], flops[c],
                     n ? static_cast<double>(wrong[c]) / n : 0.0});
  return curve;
}

// Least-squares slope of log(err) vs log(T); the convergence-rate fit.
inline double loglog_slope(const std::vector<double>& T,
                           const std::vector<double>& err) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const std::size_t n = T.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(T[i]);
    const double ly = std::log(err[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace smlp
