// smlp: experiment driver for the spiking MLP.
//
// Subcommands: quant-convergence, forward-equivalence, train, ablation,
// early-guess.  Every run is deterministic under a fixed --seed and every
// output carries a config-hash header.  Exit codes: 0 ok, 1 usage/data
// error, 2 property violated.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "smlp/checkpoint.hpp"
#include "smlp/dataio.hpp"
#include "smlp/experiment.hpp"
#include "smlp/metrics.hpp"
#include "smlp/network.hpp"
#include "smlp/oracle.hpp"
#include "smlp/quantize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace smlp;

namespace {

std::vector<std::size_t> parse_arch(const std::string& s) {
  std::vector<std::size_t> sizes;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) sizes.push_back(std::stoul(tok));
  if (sizes.size() < 2)
    throw CLI::ValidationError("--arch needs at least two sizes");
  return sizes;
}

std::string data_root() {
  if (const char* env = std::getenv("SMLP_DATA")) return env;
  if (const char* env = std::getenv("SMLP_GENERATED_DATA")) return env;
  return ".";
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open output file " + path);
  return f;
}

double l1_distance(const std::vector<double>& a,
                   const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::fabs(a[i] - b[i]);
  return d;
}

struct QuantConvergenceOpts {
  std::size_t width = 64;
  std::vector<uint32_t> T_list{10, 100, 1000, 10000};
  int seeds = 20;
  uint64_t seed = 0;
  std::string out;
};

int cmd_quant_convergence(const QuantConvergenceOpts& o) {
  json cfg = {{"cmd", "quant-convergence"}, {"width", o.width},
              {"T", o.T_list}, {"seeds", o.seeds}, {"seed", o.seed}};
  const std::string hash = config_hash(cfg.dump());

  std::vector<double> Ts(o.T_list.begin(), o.T_list.end());
  std::vector<double> det_err(Ts.size(), 0.0), sto_err(Ts.size(), 0.0);
  for (int s = 0; s < o.seeds; ++s) {
    std::mt19937_64 rng(o.seed + s);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    std::vector<double> v(o.width);
    for (auto& x : v) x = val(rng);
    for (std::size_t k = 0; k < Ts.size(); ++k) {
      const auto T = o.T_list[k];
      auto dt = quantize_vector(v, T, QuantizerMode::signed_spikes);
      det_err[k] += l1_distance(reconstruct(dt, o.width, T), v);
      auto st = stochastic_sample_vector(v, T, o.seed + 1000 + s);
      sto_err[k] += l1_distance(reconstruct(st, o.width, T), v);
    }
  }
  for (auto& e : det_err) e /= o.seeds;
  for (auto& e : sto_err) e /= o.seeds;

  std::ostream* osp = &std::cout;
  std::ofstream file;
  if (!o.out.empty()) {
    file = open_out(o.out);
    osp = &file;
  }
  *osp << "# config " << hash << "\n" << "method,T,l1_error\n";
  for (std::size_t k = 0; k < Ts.size(); ++k)
    *osp << "deterministic," << o.T_list[k] << ',' << det_err[k] << '\n';
  for (std::size_t k = 0; k < Ts.size(); ++k)
    *osp << "stochastic," << o.T_list[k] << ',' << sto_err[k] << '\n';

  const double det_slope = loglog_slope(Ts, det_err);
  const double sto_slope = loglog_slope(Ts, sto_err);
  std::cerr << "deterministic slope " << det_slope << " (want [-1.15,-0.85])\n"
            << "stochastic slope " << sto_slope << " (want [-0.65,-0.35])\n";
  const bool ok = det_slope >= -1.15 && det_slope <= -0.85 &&
                  sto_slope >= -0.65 && sto_slope <= -0.35;
  return ok ? 0 : 2;
}

struct ForwardEquivalenceOpts {
  std::string arch = "784,500,500,10";
  std::vector<uint32_t> T_list{10, 100, 1000, 10000};
  uint64_t seed = 0;
  double sigma = 0.1;
  std::string out;
};

int cmd_forward_equivalence(const ForwardEquivalenceOpts& o) {
  const auto sizes = parse_arch(o.arch);
  json cfg = {{"cmd", "forward-equivalence"}, {"arch", sizes},
              {"T", o.T_list}, {"seed", o.seed}, {"sigma", o.sigma}};
  const std::string hash = config_hash(cfg.dump());

  TrainConfig tc;
  tc.seed = o.seed;
  auto net = SpikingNetwork::random(sizes, o.sigma, tc);
  DenseNet oracle(sizes);
  oracle.weights() = net.export_weights();

  std::mt19937_64 rng(o.seed + 1);
  std::uniform_real_distribution<double> val(0.0, 1.0);
  std::vector<double> x(sizes.front());
  for (auto& v : x) v = val(rng);
  const auto ref = oracle.forward(x);

  // per-layer reference: hidden activations and the linear output
  std::vector<std::vector<double>> ref_layers(ref.activations.begin() + 1,
                                              ref.activations.end());
  ref_layers.push_back(ref.output);

  std::ostream* osp = &std::cout;
  std::ofstream file;
  if (!o.out.empty()) {
    file = open_out(o.out);
    osp = &file;
  }
  *osp << "# config " << hash << "\nlayer,T,rel_l1_error\n";

  int rc = 0;
  std::vector<std::vector<double>> errs(ref_layers.size());
  // one continuous run with snapshots at each requested T
  net.reset_forward();
  uint32_t t_done = 0;
  for (uint32_t T : o.T_list) {
    for (; t_done < T; ++t_done) net.step_forward(x);
    for (std::size_t l = 0; l < ref_layers.size(); ++l) {
      // hidden response = spike counts / T; output = u / T
      std::vector<double> approx(ref_layers[l].size(), 0.0);
      if (l + 1 == ref_layers.size()) {
        approx = net.output_sum();
      } else {
        // rectified spike counts equal c_error-free positive drains:
        // reconstruct from the layer's forward quantizer bookkeeping
        const auto& layer = net.layers()[l];
        for (std::size_t j = 0; j < approx.size(); ++j)
          approx[j] = layer.c_preact[j] - layer.fwd.potentials()[j];
      }
      double norm = 0.0;
      for (double v : ref_layers[l]) norm += std::fabs(v);
      for (auto& v : approx) v /= T;
      const double rel = l1_distance(approx, ref_layers[l]) /
                         (norm > 0 ? norm : 1.0);
      errs[l].push_back(rel);
      *osp << l << ',' << T << ',' << rel << '\n';
    }
  }
  for (std::size_t l = 0; l < errs.size(); ++l)
    for (std::size_t k = 1; k < errs[l].size(); ++k)
      if (errs[l][k] >= errs[l][k - 1]) rc = 2;
  return rc;
}

struct TrainOpts {
  std::string arch = "784,200,200,10";
  std::string images, labels, test_images, test_labels, sparse;
  double split_ratio = 7.0 / 8.0;
  std::string rule = "sgd";
  std::string routing = "breadth-first";
  std::string bwd_reset = "no-reset";
  std::string error_signal = "increment";
  bool smooth = false;
  bool oracle = false;
  bool eval_only = false;
  uint32_t T = 10;
  double eta = 0.002;
  int epochs = 1;
  uint64_t seed = 0;
  std::size_t limit_train = 0, limit_test = 0;
  std::string init_from;
  std::string out_dir = ".";
  std::string preset;
};

void apply_preset(TrainOpts& o) {
  if (o.preset.empty()) return;
  if (o.preset == "table2") {
    // full-scale run targeting the FSGD MNIST row; long-running
    o.arch = "784,300,300,10";
    o.rule = "fsgd";
    o.T = 10;
    o.epochs = 50;
    o.limit_train = o.limit_test = 0;
  } else if (o.preset == "table3") {
    o.arch = "784,200,200,10";
    o.rule = "sgd";
    o.T = 10;
    o.epochs = 50;
  } else if (o.preset == "desk") {
    o.arch = "784,200,200,10";
    o.epochs = 1;
    o.limit_train = 10000;
    o.limit_test = 1000;
  } else {
    throw CLI::ValidationError("unknown preset " + o.preset);
  }
}

Dataset subset(const Dataset& ds, std::size_t limit) {
  if (!limit || limit >= ds.size()) return ds;
  Dataset out;
  out.n_features = ds.n_features;
  out.n_classes = ds.n_classes;
  out.samples.assign(ds.samples.begin(), ds.samples.begin() + limit);
  return out;
}

TrainConfig to_train_config(const TrainOpts& o) {
  TrainConfig c;
  c.T = o.T;
  c.eta = o.eta;
  c.rule = o.rule == "fsgd" ? UpdateRule::fsgd : UpdateRule::sgd;
  c.routing = o.routing == "depth-first" ? RoutingScheme::depth_first
                                         : RoutingScheme::breadth_first;
  c.bwd_reset = o.bwd_reset == "zero-reset" ? ResetPolicy::zero_reset
                : o.bwd_reset == "random"   ? ResetPolicy::random_init
                                            : ResetPolicy::no_reset;
  c.smooth_gradients = o.smooth;
  c.error_signal = o.error_signal == "cumulative" ? ErrorSignal::cumulative
                                                  : ErrorSignal::increment;
  c.seed = o.seed;
  return c;
}

std::pair<Dataset, Dataset> load_train_test(const TrainOpts& o) {
  if (!o.sparse.empty()) {
    auto ds = load_sparse(o.sparse);
    return split_and_shuffle(ds, o.split_ratio, o.seed);
  }
  const std::string root = data_root();
  auto pick = [&](const std::string& given, const std::string& fallback) {
    return given.empty() ? (fs::path(root) / fallback).string() : given;
  };
  auto train = load_mnist_idx(pick(o.images, "train-images-idx3-ubyte"),
                              pick(o.labels, "train-labels-idx1-ubyte"));
  auto test = load_mnist_idx(pick(o.test_images, "t10k-images-idx3-ubyte"),
                             pick(o.test_labels, "t10k-labels-idx1-ubyte"));
  // class count must cover both splits
  train.n_classes = test.n_classes = std::max(train.n_classes,
                                              test.n_classes);
  return {std::move(train), std::move(test)};
}

int cmd_train(TrainOpts o) {
  apply_preset(o);
  const auto sizes = parse_arch(o.arch);
  auto [train_full, test_full] = load_train_test(o);
  const auto train = subset(train_full, o.limit_train);
  const auto test = subset(test_full, o.limit_test);
  if (train.n_features != sizes.front())
    throw std::runtime_error("arch input width " +
                             std::to_string(sizes.front()) +
                             " != dataset features " +
                             std::to_string(train.n_features));

  TrainConfig tc = to_train_config(o);
  json cfg = tc.to_json();
  cfg["cmd"] = "train";
  cfg["arch"] = sizes;
  cfg["oracle"] = o.oracle;
  cfg["epochs"] = o.epochs;
  cfg["train_samples"] = train.size();
  cfg["test_samples"] = test.size();
  const std::string hash = config_hash(cfg.dump());

  ExperimentRecord rec;
  rec.config = cfg;
  rec.config["config_hash"] = hash;

  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(o.out_dir);
  const std::string ckpt_path = (fs::path(o.out_dir) / "model.ckpt").string();

  auto initial_weights = [&]() -> std::vector<WeightMatrix> {
    if (!o.init_from.empty()) return ckpt::load(o.init_from).weights;
    std::vector<WeightMatrix> ws;
    std::mt19937_64 rng(o.seed);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      WeightMatrix m(sizes[l], sizes[l + 1]);
      fill_normal(m, 0.01, rng);
      ws.push_back(std::move(m));
    }
    return ws;
  };

  if (o.oracle) {
    DenseNet net(sizes);
    net.weights() = initial_weights();
    for (int e = 0; e < (o.eval_only ? 0 : o.epochs); ++e) {
      train_epoch_dense(net, train, o.eta,
                        epoch_order(train.size(), o.seed, e));
      rec.train_error.push_back(evaluate_dense(net, train));
      rec.test_error.push_back(evaluate_dense(net, test));
      std::cerr << "epoch " << e + 1 << ": train "
                << rec.train_error.back() * 100 << "% test "
                << rec.test_error.back() * 100 << "%\n";
    }
    if (o.eval_only) {
      rec.test_error.push_back(evaluate_dense(net, test));
      std::cerr << "eval: test " << rec.test_error.back() * 100 << "%\n";
    }
    ckpt::save(ckpt_path, sizes, net.weights(), rec.config);
  } else {
    SpikingNetwork net(sizes, tc);
    net.import_weights(initial_weights());
    for (int e = 0; e < (o.eval_only ? 0 : o.epochs); ++e) {
      train_epoch_spiking(net, train, epoch_order(train.size(), o.seed, e));
      rec.train_error.push_back(evaluate_spiking(net, train, tc.T));
      rec.test_error.push_back(evaluate_spiking(net, test, tc.T));
      std::cerr << "epoch " << e + 1 << ": train "
                << rec.train_error.back() * 100 << "% test "
                << rec.test_error.back() * 100 << "%\n";
    }
    if (o.eval_only) {
      rec.test_error.push_back(evaluate_spiking(net, test, tc.T));
      std::cerr << "eval: test " << rec.test_error.back() * 100 << "%\n";
    }
    ckpt::save(ckpt_path, sizes, net.export_weights(), rec.config);
  }

  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  auto rf = open_out((fs::path(o.out_dir) / "record.json").string());
  rf << rec.to_json().dump(2) << '\n';
  return 0;
}

struct AblationOpts {
  TrainOpts base;
};

int cmd_ablation(AblationOpts o) {
  // Baseline: [784,200,200,10], SGD, breadth-first, no smoothing,
  // no-reset backward quantizers, T = 10; variants change one knob.
  struct Variant {
    std::string name;
    std::function<void(TrainOpts&)> tweak;
  };
  const std::vector<Variant> variants = {
      {"Baseline", [](TrainOpts&) {}},
      {"Fractional Updates", [](TrainOpts& t) { t.rule = "fsgd"; }},
      {"Depth-First Propagation",
       [](TrainOpts& t) { t.routing = "depth-first"; }},
      {"Smooth Gradients", [](TrainOpts& t) { t.smooth = true; }},
      {"Smooth & Fractional",
       [](TrainOpts& t) {
         t.smooth = true;
         t.rule = "fsgd";
       }},
      {"Back-Quantization = Zero-Reset",
       [](TrainOpts& t) { t.bwd_reset = "zero-reset"; }},
      {"Back-Quantization = Random",
       [](TrainOpts& t) { t.bwd_reset = "random"; }},
      {"5 Time Steps", [](TrainOpts& t) { t.T = 5; }},
      {"20 Time Steps", [](TrainOpts& t) { t.T = 20; }},
  };

  auto [train_full, test_full] = load_train_test(o.base);
  const auto train = subset(train_full, o.base.limit_train);
  const auto test = subset(test_full, o.base.limit_test);

  json cfg = to_train_config(o.base).to_json();
  cfg["cmd"] = "ablation";
  std::cout << "# config " << config_hash(cfg.dump()) << '\n';
  std::printf("%-32s %10s\n", "Variant", "% Error");

  const auto sizes = parse_arch(o.base.arch);
  for (const auto& v : variants) {
    TrainOpts t = o.base;
    t.rule = "sgd";
    v.tweak(t);
    TrainConfig tc = to_train_config(t);
    SpikingNetwork net(sizes, tc);
    {
      std::vector<WeightMatrix> ws;
      std::mt19937_64 rng(t.seed);
      for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        WeightMatrix m(sizes[l], sizes[l + 1]);
        fill_normal(m, 0.01, rng);
        ws.push_back(std::move(m));
      }
      net.import_weights(ws);
    }
    for (int e = 0; e < t.epochs; ++e)
      train_epoch_spiking(net, train, epoch_order(train.size(), t.seed, e));
    const double err = evaluate_spiking(net, test, tc.T);
    std::printf("%-32s %10.2f\n", v.name.c_str(), err * 100.0);
    std::fflush(stdout);
  }
  return 0;
}

struct EarlyGuessOpts {
  std::vector<std::string> ckpts;
  TrainOpts data;
  uint32_t T_max = 100;
  std::vector<uint32_t> checkpoints{1, 2, 5, 10, 20, 50, 100};
  bool exclude_input = false;
  std::size_t limit = 1000;
  std::string out;
};

int cmd_early_guess(EarlyGuessOpts o) {
  for (uint32_t c : o.checkpoints)
    if (c == 0 || c > o.T_max)
      throw CLI::ValidationError("--checkpoints must lie in [1, --T-max]");
  auto [train, test_full] = load_train_test(o.data);
  (void)train;
  const auto test = subset(test_full, o.limit);

  json cfg = {{"cmd", "early-guess"}, {"T_max", o.T_max},
              {"checkpoints", o.checkpoints},
              {"exclude_input", o.exclude_input}, {"ckpts", o.ckpts}};
  std::ostream* osp = &std::cout;
  std::ofstream file;
  if (!o.out.empty()) {
    file = open_out(o.out);
    osp = &file;
  }
  *osp << "# config " << config_hash(cfg.dump()) << '\n'
       << "source,ops,error\n";

  for (const auto& path : o.ckpts) {
    const auto c = ckpt::load(path);
    TrainConfig tc = TrainConfig::from_json(
        c.sidecar.is_object() && c.sidecar.contains("T") ? c.sidecar
                                                         : json::object());
    SpikingNetwork net(c.layer_sizes, tc);
    net.import_weights(c.weights);
    const auto curve = early_guess_curve(net, test, o.T_max, o.checkpoints,
                                         !o.exclude_input);
    const std::string name = fs::path(path).stem().string();
    for (const auto& p : curve)
      *osp << name << ',' << p.flops << ',' << p.error << '\n';

    // dense reference dots from the same weights: full cost and the cost
    // with zero-activation source units removed
    DenseNet oracle(c.layer_sizes);
    oracle.weights() = c.weights;
    uint64_t full = 0, sparse_cost = 0;
    std::size_t wrong = 0;
    std::vector<double> x;
    auto sizes = c.layer_sizes;
    if (o.exclude_input) sizes.erase(sizes.begin());
    for (const auto& s : test.samples) {
      s.to_dense(x, test.n_features);
      const auto f = oracle.forward(x);
      full += count_dense_cost(sizes);
      auto acts = f.activations;
      if (o.exclude_input) acts.erase(acts.begin());
      sparse_cost += count_dense_cost(sizes, &acts);
      if (oracle.predict(x) != s.label) ++wrong;
    }
    const double dense_err = static_cast<double>(wrong) / test.size();
    *osp << name << "_dense_full," << 2 * full << ',' << dense_err << '\n';
    *osp << name << "_dense_sparse," << 2 * sparse_cost << ',' << dense_err
         << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-driven spiking MLP experiments"};
  app.require_subcommand(1);

  QuantConvergenceOpts qc;
  auto* sc_qc = app.add_subcommand("quant-convergence",
                                   "Reconstruction error vs T for "
                                   "deterministic and stochastic spiking");
  sc_qc->add_option("--width", qc.width);
  sc_qc->add_option("--T", qc.T_list)->delimiter(',');
  sc_qc->add_option("--seeds", qc.seeds);
  sc_qc->add_option("--seed", qc.seed);
  sc_qc->add_option("--out", qc.out);

  ForwardEquivalenceOpts fe;
  auto* sc_fe = app.add_subcommand("forward-equivalence",
                                   "Spiking vs dense ReLU forward pass on "
                                   "a random network");
  sc_fe->add_option("--arch", fe.arch);
  sc_fe->add_option("--T", fe.T_list)->delimiter(',');
  sc_fe->add_option("--seed", fe.seed);
  sc_fe->add_option("--sigma", fe.sigma);
  sc_fe->add_option("--out", fe.out);

  TrainOpts tr;
  auto* sc_tr = app.add_subcommand("train", "Train or evaluate a network");
  auto add_data_opts = [](CLI::App* sc, TrainOpts& t) {
    sc->add_option("--arch", t.arch);
    sc->add_option("--images", t.images);
    sc->add_option("--labels", t.labels);
    sc->add_option("--test-images", t.test_images);
    sc->add_option("--test-labels", t.test_labels);
    sc->add_option("--sparse", t.sparse);
    sc->add_option("--split-ratio", t.split_ratio);
    sc->add_option("--T", t.T);
    sc->add_option("--eta", t.eta);
    sc->add_option("--epochs", t.epochs);
    sc->add_option("--seed", t.seed);
    sc->add_option("--rule", t.rule)
        ->check(CLI::IsMember({"sgd", "fsgd"}));
    sc->add_option("--routing", t.routing)
        ->check(CLI::IsMember({"breadth-first", "depth-first"}));
    sc->add_option("--bwd-reset", t.bwd_reset)
        ->check(CLI::IsMember({"no-reset", "zero-reset", "random"}));
    sc->add_option("--error-signal", t.error_signal)
        ->check(CLI::IsMember({"increment", "cumulative"}));
    sc->add_flag("--smooth", t.smooth);
    sc->add_option("--limit-train", t.limit_train);
    sc->add_option("--limit-test", t.limit_test);
  };
  add_data_opts(sc_tr, tr);
  sc_tr->add_flag("--oracle", tr.oracle);
  sc_tr->add_flag("--eval-only", tr.eval_only);
  sc_tr->add_option("--init-from", tr.init_from);
  sc_tr->add_option("--out", tr.out_dir);
  sc_tr->add_option("--preset", tr.preset);

  AblationOpts ab;
  auto* sc_ab = app.add_subcommand("ablation",
                                   "One-at-a-time hyperparameter table");
  add_data_opts(sc_ab, ab.base);

  EarlyGuessOpts eg;
  auto* sc_eg = app.add_subcommand("early-guess",
                                   "Ops-vs-error curves from checkpoints");
  sc_eg->add_option("--ckpt", eg.ckpts)->required();
  sc_eg->add_option("--images", eg.data.images);
  sc_eg->add_option("--labels", eg.data.labels);
  sc_eg->add_option("--test-images", eg.data.test_images);
  sc_eg->add_option("--test-labels", eg.data.test_labels);
  sc_eg->add_option("--T-max", eg.T_max);
  sc_eg->add_option("--checkpoints", eg.checkpoints)->delimiter(',');
  sc_eg->add_flag("--exclude-input-layer", eg.exclude_input);
  sc_eg->add_option("--limit", eg.limit);
  sc_eg->add_option("--out", eg.out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sc_qc->parsed()) return cmd_quant_convergence(qc);
    if (sc_fe->parsed()) return cmd_forward_equivalence(fe);
    if (sc_tr->parsed()) return cmd_train(tr);
    if (sc_ab->parsed()) return cmd_ablation(ab);
    if (sc_eg->parsed()) return cmd_early_guess(eg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
