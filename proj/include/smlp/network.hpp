#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smlp/metrics.hpp"
#include "smlp/oracle.hpp"
#include "smlp/quantize.hpp"
#include "smlp/routing.hpp"
#include "smlp/spikes.hpp"

namespace smlp {

enum class UpdateRule { sgd, fsgd };
enum class ErrorSignal {
  increment,  // per-step increment of u minus the target
  cumulative  // running u minus the target (grows with t)
};

struct TrainConfig {
  uint32_t T = 10;
  double eta = 0.01;
  UpdateRule rule = UpdateRule::sgd;
  RoutingScheme routing = RoutingScheme::breadth_first;
  ResetPolicy bwd_reset = ResetPolicy::no_reset;
  bool smooth_gradients = false;
  ErrorSignal error_signal = ErrorSignal::increment;
  uint64_t seed = 0;

  nlohmann::json to_json() const {
    return {{"T", T},
            {"eta", eta},
            {"rule", rule == UpdateRule::sgd ? "sgd" : "fsgd"},
            {"routing", routing == RoutingScheme::breadth_first
                            ? "breadth-first"
                            : "depth-first"},
            {"bwd_reset", bwd_reset == ResetPolicy::no_reset ? "no-reset"
                          : bwd_reset == ResetPolicy::zero_reset
                              ? "zero-reset"
                              : "random"},
            {"smooth_gradients", smooth_gradients},
            {"error_signal", error_signal == ErrorSignal::increment
                                 ? "increment"
                                 : "cumulative"},
            {"seed", seed}};
  }

  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.T = j.value("T", 10u);
    c.eta = j.value("eta", 0.01);
    c.rule = j.value("rule", "sgd") == std::string("fsgd") ? UpdateRule::fsgd
                                                           : UpdateRule::sgd;
    c.routing = j.value("routing", "breadth-first") ==
                        std::string("depth-first")
                    ? RoutingScheme::depth_first
                    : RoutingScheme::breadth_first;
    const std::string br = j.value("bwd_reset", "no-reset");
    c.bwd_reset = br == "zero-reset" ? ResetPolicy::zero_reset
                  : br == "random"   ? ResetPolicy::random_init
                                     : ResetPolicy::no_reset;
    c.smooth_gradients = j.value("smooth_gradients", false);
    c.error_signal = j.value("error_signal", "increment") ==
                             std::string("cumulative")
                         ? ErrorSignal::cumulative
                         : ErrorSignal::increment;
    c.seed = j.value("seed", uint64_t{0});
    return c;
  }
};

// One fully-connected spiking layer.  Hidden layers own a rectified
// forward quantizer; the output layer is a plain accumulator (c_preact
// doubles as the network output sum u).  Every layer owns a signed
// backward quantizer over its output units.
struct SpikingLayer {
  WeightMatrix W;
  bool is_output = false;
  Quantizer fwd;              // rectified, hidden layers only
  Quantizer bwd;              // signed error quantizer, width d_out
  std::vector<double> c_in;   // signed input spike counts this iteration
  std::vector<double> c_preact;  // cumulative pre-activation (sum s * W_row)
  std::vector<double> c_error;   // signed backward spike counts
};

// Per-network instrumented cost tallies, split so the early-guess curves
// can include or exclude the input layer.
struct NetCounters {
  std::vector<uint64_t> fwd_additions;  // per target layer, row adds
  uint64_t input_accum_additions = 0;   // input quantizer phi += x
  uint64_t input_comparisons = 0;       // input quantizer drain checks
  std::vector<uint64_t> layer_comparisons;  // hidden drain checks per layer
  uint64_t bwd_additions = 0;
  uint64_t bwd_comparisons = 0;

  void reset() {
    std::fill(fwd_additions.begin(), fwd_additions.end(), 0);
    std::fill(layer_comparisons.begin(), layer_comparisons.end(), 0);
    input_accum_additions = input_comparisons = 0;
    bwd_additions = bwd_comparisons = 0;
  }

  OpCounter totals(bool include_input_layer = true) const {
    OpCounter c;
    for (std::size_t l = include_input_layer ? 0 : 1;
         l < fwd_additions.size(); ++l)
      c.additions += fwd_additions[l];
    for (std::size_t l = 0; l < layer_comparisons.size(); ++l)
      c.comparisons += layer_comparisons[l];
    c.additions += bwd_additions;
    c.comparisons += bwd_comparisons;
    if (include_input_layer) {
      c.additions += input_accum_additions;
      c.comparisons += input_comparisons;
    }
    return c;
  }
};

struct LoggedSpike {
  uint32_t t;
  int target_layer;
  SignedSpike spike;
};

// The event-driven spiking MLP.  Single-owner, single-threaded; run many
// instances in parallel above this class, never share one.
class SpikingNetwork {
 public:
  SpikingNetwork(std::vector<std::size_t> layer_sizes, TrainConfig config)
      : sizes_(std::move(layer_sizes)), cfg_(config), rng_(config.seed) {
    if (sizes_.size() < 2)
      throw std::invalid_argument("network needs at least two layer sizes");
    const std::size_t L = sizes_.size() - 1;
    for (std::size_t l = 0; l < L; ++l) {
      SpikingLayer layer;
      layer.W = WeightMatrix(sizes_[l], sizes_[l + 1]);
      layer.is_output = (l + 1 == L);
      if (!layer.is_output)
        layer.fwd = Quantizer(sizes_[l + 1], QuantizerMode::rectified);
      layer.bwd = Quantizer(sizes_[l + 1], QuantizerMode::signed_spikes,
                            cfg_.bwd_reset);
      layer.c_in.assign(sizes_[l], 0.0);
      layer.c_preact.assign(sizes_[l + 1], 0.0);
      layer.c_error.assign(sizes_[l + 1], 0.0);
      layers_.push_back(std::move(layer));
    }
    input_q_ = Quantizer(sizes_.front(), QuantizerMode::signed_spikes);
    x_cumsum_.assign(sizes_.front(), 0.0);
    delta_u_.assign(sizes_.back(), 0.0);
    counters_.fwd_additions.assign(L, 0);
    counters_.layer_comparisons.assign(L, 0);
    build_routers();
  }

  SpikingNetwork(const SpikingNetwork&) = delete;
  SpikingNetwork& operator=(const SpikingNetwork&) = delete;

  // Movable: the routers capture `this`, so they are rebuilt against the
  // new address instead of being moved.
  SpikingNetwork(SpikingNetwork&& other) noexcept
      : sizes_(std::move(other.sizes_)),
        cfg_(other.cfg_),
        rng_(other.rng_),
        layers_(std::move(other.layers_)),
        input_q_(std::move(other.input_q_)),
        x_cumsum_(std::move(other.x_cumsum_)),
        delta_u_(std::move(other.delta_u_)),
        u_before_(std::move(other.u_before_)),
        t_(other.t_),
        counters_(std::move(other.counters_)),
        log_spikes_(other.log_spikes_),
        spike_log_(std::move(other.spike_log_)),
        bwd_hook_(std::move(other.bwd_hook_)) {
    build_routers();
  }
  SpikingNetwork& operator=(SpikingNetwork&&) = delete;

  static SpikingNetwork random(std::vector<std::size_t> layer_sizes,
                               double sigma, TrainConfig config) {
    SpikingNetwork net(std::move(layer_sizes), config);
    std::mt19937_64 rng(config.seed);
    for (auto& layer : net.layers_) fill_normal(layer.W, sigma, rng);
    return net;
  }

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  const TrainConfig& config() const { return cfg_; }
  std::vector<SpikingLayer>& layers() { return layers_; }
  const std::vector<SpikingLayer>& layers() const { return layers_; }
  const Quantizer& input_quantizer() const { return input_q_; }
  const NetCounters& counters() const { return counters_; }
  void reset_counters() { counters_.reset(); }
  uint32_t timestep() const { return t_; }

  // The output accumulator u is the output layer's cumulative
  // pre-activation: every output spike contribution lands there.
  const std::vector<double>& output_sum() const {
    return layers_.back().c_preact;
  }
  const std::vector<double>& last_delta_u() const { return delta_u_; }

  // Test/audit hook: observes every backward spike with the effective
  // c_in at the moment the spike is processed (before the update).
  using BackwardSpikeHook = std::function<void(
      std::size_t layer, SignedSpike spike, const std::vector<double>& c_in)>;
  void set_backward_spike_hook(BackwardSpikeHook h) {
    bwd_hook_ = std::move(h);
  }

  void set_spike_logging(bool on) { log_spikes_ = on; }
  const std::vector<LoggedSpike>& spike_log() const { return spike_log_; }
  void clear_spike_log() { spike_log_.clear(); }

  std::vector<WeightMatrix> export_weights() const {
    std::vector<WeightMatrix> out;
    for (const auto& layer : layers_) out.push_back(layer.W);
    return out;
  }

  void import_weights(const std::vector<WeightMatrix>& ws) {
    if (ws.size() != layers_.size())
      throw std::invalid_argument("import_weights: layer count mismatch");
    for (std::size_t l = 0; l < ws.size(); ++l) {
      if (ws[l].d_in != layers_[l].W.d_in ||
          ws[l].d_out != layers_[l].W.d_out)
        throw std::invalid_argument("import_weights: shape mismatch");
      layers_[l].W = ws[l];
    }
  }

  // Clears all forward state for a new sample: quantizer potentials,
  // spike counts, cumulative pre-activations and the output sum.
  // Backward quantizers are left alone here; their reset policy is
  // applied in train_iteration.
  void reset_forward() {
    input_q_.hard_zero();
    std::fill(x_cumsum_.begin(), x_cumsum_.end(), 0.0);
    for (auto& layer : layers_) {
      if (!layer.is_output) layer.fwd.hard_zero();
      std::fill(layer.c_in.begin(), layer.c_in.end(), 0.0);
      std::fill(layer.c_preact.begin(), layer.c_preact.end(), 0.0);
    }
    std::fill(delta_u_.begin(), delta_u_.end(), 0.0);
    t_ = 0;
  }

  // One timestep of the forward phase: quantize x into spikes and route
  // them through the layer cascade.  Records delta_u for the error signal.
  void step_forward(std::span<const double> x) {
    if (x.size() != sizes_.front())
      throw std::invalid_argument("step_forward: input size mismatch");
    ++t_;
    input_q_.accumulate(x);
    counters_.input_accum_additions += x.size();
    for (std::size_t i = 0; i < x.size(); ++i) x_cumsum_[i] += x[i];

    std::vector<SignedSpike> spikes;
    counters_.input_comparisons +=
        input_q_.drain([&](SignedSpike s) { spikes.push_back(s); });
    if (log_spikes_)
      for (const auto& s : spikes) spike_log_.push_back({t_, 0, s});

    u_before_ = layers_.back().c_preact;
    fwd_router_.dispatch(fwd_source_, spikes);
    const auto& u = layers_.back().c_preact;
    for (std::size_t j = 0; j < u.size(); ++j)
      delta_u_[j] = u[j] - u_before_[j];
  }

  // One timestep of the backward phase.  The raw error vector goes into
  // the output layer's signed quantizer (no gate: the output is linear);
  // the resulting error spikes cascade back through the layers.
  void backward_step(std::span<const double> error_increment) {
    fwd_router_.phase_barrier();
    auto& out_layer = layers_.back();
    out_layer.bwd.accumulate(error_increment);
    counters_.bwd_additions += error_increment.size();
    std::vector<SignedSpike> spikes;
    counters_.bwd_comparisons +=
        out_layer.bwd.drain([&](SignedSpike s) { spikes.push_back(s); });
    bwd_router_.dispatch(bwd_source_, spikes);
  }

  // Full T-step forward pass on a fresh state; returns u / T.
  std::vector<double> forward_sample(std::span<const double> x, uint32_t T) {
    if (T < 1) throw std::invalid_argument("forward_sample: T must be >= 1");
    reset_forward();
    for (uint32_t t = 0; t < T; ++t) step_forward(x);
    std::vector<double> out = layers_.back().c_preact;
    for (auto& v : out) v /= T;
    return out;
  }

  std::size_t predict(std::span<const double> x, uint32_t T) {
    const auto out = forward_sample(x, T);
    std::size_t best = 0;
    for (std::size_t j = 1; j < out.size(); ++j)
      if (out[j] > out[best]) best = j;  // ties -> lowest index
    return best;
  }

  // One training iteration on a single sample: T interleaved forward and
  // backward phases, then the end-of-iteration update for the SGD rule
  // (FSGD already applied its updates spike by spike).
  void train_iteration(std::span<const double> x, std::span<const double> y) {
    if (y.size() != sizes_.back())
      throw std::invalid_argument("train_iteration: target size mismatch");
    reset_forward();
    for (auto& layer : layers_) {
      layer.bwd.reset(&rng_);
      std::fill(layer.c_error.begin(), layer.c_error.end(), 0.0);
    }
    std::vector<double> err(y.size());
    for (uint32_t t = 0; t < cfg_.T; ++t) {
      step_forward(x);
      const auto& u = layers_.back().c_preact;
      for (std::size_t j = 0; j < y.size(); ++j) {
        const double signal =
            cfg_.error_signal == ErrorSignal::increment ? delta_u_[j] : u[j];
        err[j] = signal - y[j];
      }
      backward_step(err);
    }
    if (cfg_.rule == UpdateRule::sgd)
      for (std::size_t l = 0; l < layers_.size(); ++l) apply_sgd_update(l);
  }

  // W += -(eta / T) * outer(c_in_eff, c_error)
  void apply_sgd_update(std::size_t l) {
    auto& layer = layers_[l];
    const std::vector<double> cin = effective_c_in(l);
    const double scale = -cfg_.eta / cfg_.T;
    for (std::size_t i = 0; i < layer.W.d_in; ++i) {
      const double ci = cin[i];
      if (ci == 0.0) continue;
      double* row = layer.W.w.data() + i * layer.W.d_out;
      for (std::size_t j = 0; j < layer.W.d_out; ++j)
        row[j] += scale * ci * layer.c_error[j];
    }
  }

  // W[:, j] += -(eta / T) * s * c_in_eff, applied the moment an error
  // spike is processed; later spikes in the same iteration see the
  // updated weights.
  void apply_fsgd_update(std::size_t l, const SignedSpike& err_spike) {
    auto& layer = layers_[l];
    const std::vector<double> cin = effective_c_in(l);
    const double scale = -cfg_.eta / cfg_.T * err_spike.sign;
    const std::size_t j = err_spike.source;
    for (std::size_t i = 0; i < layer.W.d_in; ++i)
      layer.W.w[i * layer.W.d_out + j] += scale * cin[i];
  }

  // Input side of the update rule: raw signed spike counts, or with
  // smooth gradients the rectified cumulative pre-quantization sums of
  // the upstream layer.
  std::vector<double> effective_c_in(std::size_t l) const {
    if (!cfg_.smooth_gradients) return layers_[l].c_in;
    const std::vector<double>& pre =
        l == 0 ? x_cumsum_ : layers_[l - 1].c_preact;
    std::vector<double> out(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) out[i] = std::max(0.0, pre[i]);
    return out;
  }

  Router<SignedSpike>& forward_router() { return fwd_router_; }
  Router<SignedSpike>& backward_router() { return bwd_router_; }

 private:
  void build_routers() {
    fwd_router_.set_scheme(cfg_.routing);
    bwd_router_.set_scheme(cfg_.routing);

    auto never = [](const SignedSpike&) -> std::vector<SignedSpike> {
      throw std::logic_error("source module cannot receive events");
    };
    fwd_source_ = fwd_router_.add_module("input_quantizer", never);
    std::vector<int> fwd_ids;
    for (std::size_t l = 0; l < layers_.size(); ++l)
      fwd_ids.push_back(fwd_router_.add_module(
          "layer" + std::to_string(l),
          [this, l](const SignedSpike& s) { return forward_spike(l, s); }));
    fwd_router_.connect(fwd_source_, fwd_ids.front());
    for (std::size_t l = 0; l + 1 < fwd_ids.size(); ++l)
      fwd_router_.connect(fwd_ids[l], fwd_ids[l + 1]);

    bwd_source_ = bwd_router_.add_module("loss", never);
    std::vector<int> bwd_ids;
    for (std::size_t l = 0; l < layers_.size(); ++l)
      bwd_ids.push_back(bwd_router_.add_module(
          "bwd_layer" + std::to_string(l),
          [this, l](const SignedSpike& s) { return backward_spike(l, s); }));
    bwd_router_.set_phase("bwd");
    bwd_router_.connect(bwd_source_, bwd_ids.back());
    for (std::size_t l = layers_.size(); l-- > 1;)
      bwd_router_.connect(bwd_ids[l], bwd_ids[l - 1]);
  }

  // Delivers one forward spike into layer l: count it, add the selected
  // weight row to the layer's potentials (or straight to u for the
  // output layer) and drain any resulting spikes.
  std::vector<SignedSpike> forward_spike(std::size_t l,
                                         const SignedSpike& sp) {
    auto& layer = layers_[l];
    if (sp.source >= layer.W.d_in)
      throw std::out_of_range("forward_spike: source index out of range");
    layer.c_in[sp.source] += sp.sign;
    const double* row = layer.W.w.data() + sp.source * layer.W.d_out;
    for (std::size_t j = 0; j < layer.W.d_out; ++j)
      layer.c_preact[j] += sp.sign * row[j];
    // One row add per delivered spike; c_preact is training bookkeeping
    // and is not billed.
    counters_.fwd_additions[l] += layer.W.d_out;

    std::vector<SignedSpike> out;
    if (!layer.is_output) {
      layer.fwd.accumulate_scaled({row, layer.W.d_out},
                                  static_cast<double>(sp.sign));
      counters_.layer_comparisons[l] +=
          layer.fwd.drain([&](SignedSpike s) { out.push_back(s); });
      if (log_spikes_)
        for (const auto& s : out)
          spike_log_.push_back({t_, static_cast<int>(l) + 1, s});
    }
    return out;
  }

  // Processes one error spike (j, s) at layer l: apply the FSGD column
  // update if configured, then push the (updated) j-th weight column,
  // gated by the upstream layer's [c_preact > 0], into the upstream
  // error quantizer and drain it.  No error flows past the first layer.
  std::vector<SignedSpike> backward_spike(std::size_t l,
                                          const SignedSpike& sp) {
    auto& layer = layers_[l];
    if (sp.source >= layer.W.d_out)
      throw std::out_of_range("backward_spike: source index out of range");
    layer.c_error[sp.source] += sp.sign;
    if (bwd_hook_) bwd_hook_(l, sp, effective_c_in(l));
    if (cfg_.rule == UpdateRule::fsgd) {
      apply_fsgd_update(l, sp);
      counters_.bwd_additions += layer.W.d_in;
    }
    if (l == 0) return {};

    auto& upstream = layers_[l - 1];
    const std::size_t j = sp.source;
    for (std::size_t i = 0; i < layer.W.d_in; ++i) {
      if (upstream.c_preact[i] <= 0.0) continue;  // ReLU derivative gate
      upstream.bwd.accumulate_at(i, sp.sign * layer.W.at(i, j));
    }
    counters_.bwd_additions += layer.W.d_in;

    std::vector<SignedSpike> out;
    counters_.bwd_comparisons +=
        upstream.bwd.drain([&](SignedSpike s) { out.push_back(s); });
    return out;
  }

  std::vector<std::size_t> sizes_;
  TrainConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<SpikingLayer> layers_;
  Quantizer input_q_;
  std::vector<double> x_cumsum_;
  std::vector<double> delta_u_;
  std::vector<double> u_before_;
  uint32_t t_ = 0;
  NetCounters counters_;
  bool log_spikes_ = false;
  std::vector<LoggedSpike> spike_log_;
  BackwardSpikeHook bwd_hook_;

  Router<SignedSpike> fwd_router_{RoutingScheme::breadth_first};
  Router<SignedSpike> bwd_router_{RoutingScheme::breadth_first};
  int fwd_source_ = -1;
  int bwd_source_ = -1;
};

}  // namespace smlp
