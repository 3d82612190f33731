#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace smlp {

// Row-major d_in x d_out weight matrix.
struct WeightMatrix {
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  std::vector<double> w;  // w[i * d_out + j]

  WeightMatrix() = default;
  WeightMatrix(std::size_t in, std::size_t out)
      : d_in(in), d_out(out), w(in * out, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return w[i * d_out + j]; }
  double at(std::size_t i, std::size_t j) const { return w[i * d_out + j]; }
  std::span<const double> row(std::size_t i) const {
    return {w.data() + i * d_out, d_out};
  }
};

inline void fill_normal(WeightMatrix& m, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, sigma);
  for (auto& x : m.w) x = d(rng);
}

struct DenseForward {
  std::vector<std::vector<double>> activations;  // h_0 = x ... h_{L-1}
  std::vector<double> output;                    // linear, no rectification
};

// Dense rectified-linear MLP with a linear output layer; the ground truth
// the spiking network approaches as T grows.  Plain loops, no biases.
class DenseNet {
 public:
  DenseNet() = default;

  explicit DenseNet(std::vector<std::size_t> layer_sizes)
      : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2)
      throw std::invalid_argument("DenseNet needs at least two layer sizes");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l)
      weights_.emplace_back(sizes_[l], sizes_[l + 1]);
  }

  static DenseNet random(std::vector<std::size_t> layer_sizes, double sigma,
                         uint64_t seed) {
    DenseNet net(std::move(layer_sizes));
    std::mt19937_64 rng(seed);
    for (auto& w : net.weights_) fill_normal(w, sigma, rng);
    return net;
  }

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t n_layers() const { return weights_.size(); }
  std::vector<WeightMatrix>& weights() { return weights_; }
  const std::vector<WeightMatrix>& weights() const { return weights_; }

  DenseForward forward(std::span<const double> x) const {
    if (x.size() != sizes_.front())
      throw std::invalid_argument("DenseNet::forward: input size mismatch");
    DenseForward f;
    f.activations.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      const auto& W = weights_[l];
      std::vector<double> pre(W.d_out, 0.0);
      const auto& h = f.activations.back();
      for (std::size_t i = 0; i < W.d_in; ++i) {
        const double hi = h[i];
        if (hi == 0.0) continue;
        const double* row = W.w.data() + i * W.d_out;
        for (std::size_t j = 0; j < W.d_out; ++j) pre[j] += hi * row[j];
      }
      if (l + 1 == weights_.size()) {
        f.output = std::move(pre);  // linear output
      } else {
        for (auto& p : pre) p = std::max(0.0, p);
        f.activations.push_back(std::move(pre));
      }
    }
    return f;
  }

  // Exact gradients of L = 1/2 ||forward(x) - y||^2 w.r.t. every weight
  // matrix.  ReLU derivative is the step function [pre > 0], evaluated on
  // the cached post-activation (equal signs, since relu(p) > 0 iff p > 0).
  std::vector<WeightMatrix> backward(std::span<const double> x,
                                     std::span<const double> y) const {
    const DenseForward f = forward(x);
    if (y.size() != f.output.size())
      throw std::invalid_argument("DenseNet::backward: target size mismatch");

    std::vector<WeightMatrix> grads;
    grads.reserve(weights_.size());
    for (const auto& w : weights_) grads.emplace_back(w.d_in, w.d_out);

    std::vector<double> delta(f.output.size());
    for (std::size_t j = 0; j < delta.size(); ++j)
      delta[j] = f.output[j] - y[j];

    for (std::size_t l = weights_.size(); l-- > 0;) {
      const auto& W = weights_[l];
      auto& G = grads[l];
      const auto& h = f.activations[l];
      for (std::size_t i = 0; i < W.d_in; ++i) {
        const double hi = h[i];
        if (hi == 0.0) continue;
        double* grow = G.w.data() + i * W.d_out;
        for (std::size_t j = 0; j < W.d_out; ++j) grow[j] = hi * delta[j];
      }
      if (l == 0) break;
      std::vector<double> prev(W.d_in, 0.0);
      for (std::size_t i = 0; i < W.d_in; ++i) {
        if (h[i] <= 0.0) continue;  // ReLU gate
        const double* row = W.w.data() + i * W.d_out;
        double acc = 0.0;
        for (std::size_t j = 0; j < W.d_out; ++j) acc += row[j] * delta[j];
        prev[i] = acc;
      }
      delta = std::move(prev);
    }
    return grads;
  }

  double loss(std::span<const double> x, std::span<const double> y) const {
    const auto out = forward(x).output;
    double acc = 0.0;
    for (std::size_t j = 0; j < out.size(); ++j)
      acc += (out[j] - y[j]) * (out[j] - y[j]);
    return 0.5 * acc;
  }

  void sgd_step(std::span<const double> x, std::span<const double> y,
                double eta) {
    auto grads = backward(x, y);
    for (std::size_t l = 0; l < weights_.size(); ++l)
      for (std::size_t k = 0; k < weights_[l].w.size(); ++k)
        weights_[l].w[k] -= eta * grads[l].w[k];
  }

  std::size_t predict(std::span<const double> x) const {
    const auto out = forward(x).output;
    std::size_t best = 0;
    for (std::size_t j = 1; j < out.size(); ++j)
      if (out[j] > out[best]) best = j;  // ties -> lowest index
    return best;
  }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<WeightMatrix> weights_;
};

}  // namespace smlp
