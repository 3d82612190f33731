#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "smlp/spikes.hpp"

namespace smlp {

enum class QuantizerMode {
  signed_spikes,  // fires on |phi| > 1/2, spike sign follows phi
  rectified       // fires on phi > 1/2 only, positive spikes
};

enum class ResetPolicy {
  zero_reset,  // phi <- 0
  no_reset,    // phi kept across iterations
  random_init  // phi_i ~ U[-1/2, 1/2]
};

// Delta-sigma style quantizer over an array of units.  Accumulates real
// input into per-unit potentials and drains them into signed unit spikes
// whenever a potential exceeds 1/2 in magnitude (signed mode) or value
// (rectified mode).  Ties in the drain argmax go to the lowest index.
class Quantizer {
 public:
  Quantizer() = default;
  Quantizer(std::size_t width, QuantizerMode mode,
            ResetPolicy reset = ResetPolicy::zero_reset)
      : phi_(width, 0.0), mode_(mode), reset_(reset) {}

  std::size_t width() const { return phi_.size(); }
  QuantizerMode mode() const { return mode_; }
  ResetPolicy reset_policy() const { return reset_; }
  const std::vector<double>& potentials() const { return phi_; }

  // Applies the reset policy at the start of a training iteration.
  // no_reset leaves phi untouched; random_init needs the caller's rng.
  void reset(std::mt19937_64* rng = nullptr) {
    switch (reset_) {
      case ResetPolicy::zero_reset:
        std::fill(phi_.begin(), phi_.end(), 0.0);
        break;
      case ResetPolicy::no_reset:
        break;
      case ResetPolicy::random_init: {
        if (!rng) throw std::invalid_argument("random_init reset needs an rng");
        std::uniform_real_distribution<double> d(-0.5, 0.5);
        for (auto& p : phi_) p = d(*rng);
        break;
      }
    }
  }

  void hard_zero() { std::fill(phi_.begin(), phi_.end(), 0.0); }

  void accumulate(std::span<const double> v) {
    check_width(v.size());
    for (std::size_t i = 0; i < phi_.size(); ++i) {
      if (!std::isfinite(v[i]))
        throw std::invalid_argument("quantizer input is not finite");
      phi_[i] += v[i];
    }
  }

  // phi += s * row, used when an incoming spike selects a weight row.
  void accumulate_scaled(std::span<const double> row, double s) {
    check_width(row.size());
    for (std::size_t i = 0; i < phi_.size(); ++i) phi_[i] += s * row[i];
  }

  void accumulate_at(std::size_t i, double dv) {
    if (i >= phi_.size()) throw std::out_of_range("quantizer index");
    phi_[i] += dv;
  }

  // Drains the potentials: repeatedly fires from the argmax unit until no
  // potential exceeds the 1/2 threshold (strictly).  Emits every fired
  // spike through `emit`.  Returns the number of while-condition checks,
  // i.e. emitted spikes + 1, for cost accounting.
  template <typename EmitFn>
  std::size_t drain(EmitFn&& emit) {
    std::size_t checks = 0;
    for (;;) {
      ++checks;
      std::size_t best = 0;
      double best_mag = 0.0;
      if (mode_ == QuantizerMode::signed_spikes) {
        for (std::size_t i = 0; i < phi_.size(); ++i) {
          const double m = std::fabs(phi_[i]);
          if (m > best_mag) {
            best_mag = m;
            best = i;
          }
        }
      } else {
        for (std::size_t i = 0; i < phi_.size(); ++i) {
          if (phi_[i] > best_mag) {
            best_mag = phi_[i];
            best = i;
          }
        }
      }
      if (best_mag <= 0.5) return checks;
      int s = +1;
      if (mode_ == QuantizerMode::signed_spikes && phi_[best] < 0.0) s = -1;
      phi_[best] -= s;
      emit(SignedSpike{static_cast<uint32_t>(best), s});
    }
  }

  // One timestep of (stream) quantization: phi += v, then drain.
  std::vector<SignedSpike> step(std::span<const double> v) {
    accumulate(v);
    std::vector<SignedSpike> out;
    drain([&](SignedSpike s) { out.push_back(s); });
    return out;
  }

 private:
  void check_width(std::size_t n) const {
    if (n != phi_.size())
      throw std::invalid_argument("quantizer width mismatch: got " +
                                  std::to_string(n) + ", expected " +
                                  std::to_string(phi_.size()));
  }

  std::vector<double> phi_;
  QuantizerMode mode_ = QuantizerMode::signed_spikes;
  ResetPolicy reset_ = ResetPolicy::zero_reset;
};

// Encodes a fixed vector as T timesteps of spikes on a fresh quantizer.
inline SpikeTrain quantize_vector(std::span<const double> v, uint32_t T,
                                  QuantizerMode mode) {
  if (T < 1) throw std::invalid_argument("quantize_vector: T must be >= 1");
  Quantizer q(v.size(), mode);
  SpikeTrain train;
  for (uint32_t t = 1; t <= T; ++t) {
    q.accumulate(v);
    q.drain([&](SignedSpike s) { train.spikes.push_back({t, s}); });
  }
  return train;
}

// Poisson baseline: per step draws N ~ Poisson(sum |v|) spikes with index
// probabilities |v_i| / sum |v| and sign taken from v_i.
inline SpikeTrain stochastic_sample_vector(std::span<const double> v,
                                           uint32_t T, uint64_t seed) {
  if (T < 1) throw std::invalid_argument("stochastic_sample: T must be >= 1");
  double mag = 0.0;
  for (double x : v) {
    if (!std::isfinite(x))
      throw std::invalid_argument("stochastic_sample: input is not finite");
    mag += std::fabs(x);
  }
  SpikeTrain train;
  if (mag == 0.0) return train;

  std::mt19937_64 rng(seed);
  std::poisson_distribution<int> n_events(mag);
  std::vector<double> weights(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) weights[i] = std::fabs(v[i]);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());

  for (uint32_t t = 1; t <= T; ++t) {
    const int n = n_events(rng);
    for (int k = 0; k < n; ++k) {
      const std::size_t i = pick(rng);
      train.spikes.push_back(
          {t, SignedSpike{static_cast<uint32_t>(i), v[i] >= 0.0 ? +1 : -1}});
    }
  }
  return train;
}

// v_hat = (1/T) * sum_n e_{i_n} s_n
inline std::vector<double> reconstruct(const SpikeTrain& train,
                                       std::size_t width, uint32_t T) {
  if (T == 0) throw std::invalid_argument("reconstruct: T must be positive");
  std::vector<double> out(width, 0.0);
  for (const auto& ts : train.spikes) {
    if (ts.spike.source >= width)
      throw std::out_of_range("reconstruct: spike source out of range");
    out[ts.spike.source] += ts.spike.sign;
  }
  for (auto& x : out) x /= T;
  return out;
}

// Closed-form rectified spike count for unit j over a vector stream:
//   N = max(0, floor(max over prefixes of (cumulative sum + 1/2)))
// Independent of the drain simulation; used as an oracle against it.
inline std::size_t rect_spike_count_closed_form(
    const std::vector<std::vector<double>>& v_stream, std::size_t j) {
  if (v_stream.empty())
    throw std::invalid_argument("rect_spike_count: empty stream");
  double cum = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : v_stream) {
    if (j >= v.size())
      throw std::out_of_range("rect_spike_count: unit index out of range");
    cum += v[j];
    best = std::max(best, cum);
  }
  const double n = std::floor(best + 0.5);
  return n <= 0.0 ? 0 : static_cast<std::size_t>(n);
}

}  // namespace smlp
