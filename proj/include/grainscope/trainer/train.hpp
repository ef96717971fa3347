#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "grainscope/nn/network.hpp"
#include "grainscope/nn/optimizer.hpp"
#include "grainscope/trainer/dataset.hpp"
#include "grainscope/trainer/metrics.hpp"

namespace grainscope::train {

using Net = nn::Network<float>;
using Params = nn::Weights<float>;

struct TrainConfig {
  int epochs = 35;
  nn::Hyperparams hyper;
  std::uint64_t seed = 0;
  bool fine_tune = false;  // freeze conv1 and conv2
  unsigned threads = 1;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0, train_acc = 0;
  double val_loss = 0, val_acc = 0;
};

struct TrainResult {
  std::vector<EpochRecord> epochs;
  Params best;
  int best_epoch = 0;  // 0 when no epoch ran
  double best_val_acc = -1;
  int iterations_per_epoch = 0;
  double wall_seconds = 0;
};

inline int iterations_per_epoch(std::size_t train_n, int batch) {
  return static_cast<int>((train_n + batch - 1) / batch);
}

/// Index of the first layer that still trains: conv3 when fine-tuning.
inline std::size_t lowest_trainable_layer(const nn::ModelSpec& spec, bool fine_tune) {
  if (!fine_tune) return 0;
  const int conv3 = spec.find_nth(nn::LayerKind::conv2d, 2);
  if (conv3 < 0) throw ConfigError("fine-tuning needs three convolution layers");
  return static_cast<std::size_t>(conv3);
}

inline std::vector<bool> trainable_mask(const nn::ModelSpec& spec, bool fine_tune) {
  const auto lo = lowest_trainable_layer(spec, fine_tune);
  std::vector<bool> m(spec.layers.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = i >= lo;
  return m;
}

inline std::size_t trainable_parameter_count(const nn::ModelSpec& spec, bool fine_tune) {
  const auto mask = trainable_mask(spec, fine_tune);
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) n += spec.layer_parameter_count(i);
  return n;
}

struct SetScore {
  double loss = 0, acc = 0;
  std::vector<float> p;
};

inline SetScore score(const Net& net, const Params& w, const LabeledSet& s, unsigned threads) {
  SetScore r;
  if (s.size() == 0) return r;
  r.p = nn::predict_batched(net, w, s.x, threads);
  std::size_t correct = 0;
  double loss = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double pc = std::clamp<double>(r.p[i], nn::kBceEpsilon, 1 - nn::kBceEpsilon);
    loss += -(s.y[i] * std::log(pc) + (1 - s.y[i]) * std::log(1 - pc));
    correct += predicts_good(r.p[i]) == (s.y[i] >= 0.5f);
  }
  r.loss = loss / s.size();
  r.acc = static_cast<double>(correct) / s.size();
  return r;
}

inline ConfusionMatrix evaluate(const Net& net, const Params& w, const LabeledSet& test, unsigned threads = 1) {
  const auto p = nn::predict_batched(net, w, test.x, threads);
  return count_confusion(p, test.y);
}

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch training from `init`. Each epoch reshuffles with a seed derived
/// from (seed, epoch); dropout masks derive from (seed, epoch, iteration).
/// The returned weights are those of the first epoch reaching the highest
/// validation accuracy.
inline TrainResult train(const Net& net, Params init, const LabeledSet& trn, const LabeledSet& val,
                         const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& spec = net.spec();
  if (!init.matches(spec)) throw ConfigError("initial weights do not match the model");
  if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (trn.x.sample_shape() != spec.input && trn.size() > 0)
    throw ConfigError("training tiles are " + trn.x.sample_shape().str() + ", model expects " + spec.input.str());
  const int batch = cfg.hyper.batch;
  const auto lowest = lowest_trainable_layer(spec, cfg.fine_tune);
  const auto mask = trainable_mask(spec, cfg.fine_tune);
  nn::OptimizerConfig opt;
  opt.kind = cfg.hyper.optimizer;
  opt.learning_rate = cfg.hyper.learning_rate;
  auto state = nn::OptimizerState<float>::for_weights(init);

  TrainResult res;
  res.iterations_per_epoch = iterations_per_epoch(trn.size(), batch);
  res.best = init;
  Params w = std::move(init);
  std::vector<std::size_t> order = all_indices(trn.size());
  for (int e = 1; e <= cfg.epochs; ++e) {
    Rng shuffle_rng(derive_seed({cfg.seed, 0x5eedu, static_cast<std::uint64_t>(e)}));
    shuffle_rng.shuffle(order);
    double loss_sum = 0;
    std::size_t correct = 0;
    for (int it = 0; it < res.iterations_per_epoch; ++it) {
      const std::size_t b = static_cast<std::size_t>(it) * batch;
      const std::size_t n = std::min<std::size_t>(batch, trn.size() - b);
      nn::Tensor4<float> xb(static_cast<int>(n), trn.x.sample_shape());
      std::vector<float> yb(n);
      for (std::size_t k = 0; k < n; ++k) {
        auto src = trn.x.sample(static_cast<int>(order[b + k]));
        std::copy(src.begin(), src.end(), xb.sample(static_cast<int>(k)).begin());
        yb[k] = trn.y[order[b + k]];
      }
      const auto where = "epoch " + std::to_string(e) + " iteration " + std::to_string(it + 1);
      try {
        auto g = nn::batch_gradients(net, w, xb, yb,
                                     derive_seed({cfg.seed, static_cast<std::uint64_t>(e), static_cast<std::uint64_t>(it)}),
                                     cfg.threads, lowest);
        if (!std::isfinite(g.data_loss)) throw TrainingFault("non-finite loss");
        loss_sum += g.data_loss * n;
        correct += g.correct;
        nn::optimizer_step(opt, spec, w, g.grads, state, mask);
      } catch (const TrainingFault& f) {
        throw TrainingFault(where + ": " + f.what(), f.layer());
      }
    }
    EpochRecord rec;
    rec.epoch = e;
    rec.train_loss = trn.size() ? loss_sum / trn.size() : 0;
    rec.train_acc = trn.size() ? static_cast<double>(correct) / trn.size() : 0;
    const auto v = score(net, w, val, cfg.threads);
    rec.val_loss = v.loss;
    rec.val_acc = v.acc;
    if (!std::isfinite(rec.val_loss)) throw TrainingFault("epoch " + std::to_string(e) + ": non-finite validation loss");
    if (rec.val_acc > res.best_val_acc) {
      res.best_val_acc = rec.val_acc;
      res.best_epoch = e;
      res.best = w;
    }
    res.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

/// Continues training `pretrained` with conv1 and conv2 frozen.
inline TrainResult fine_tune(const Net& net, Params pretrained, const LabeledSet& trn, const LabeledSet& val,
                             TrainConfig cfg, const EpochCallback& on_epoch = {}) {
  if (!pretrained.matches(net.spec())) throw ConfigError("pretrained weights do not match the model");
  cfg.fine_tune = true;
  return train(net, std::move(pretrained), trn, val, cfg, on_epoch);
}

/// Mean of the last five epochs (all epochs when fewer ran).
inline std::pair<double, double> last_five_means(const std::vector<EpochRecord>& ep) {
  if (ep.empty()) return {std::nan(""), std::nan("")};
  const std::size_t from = ep.size() > 5 ? ep.size() - 5 : 0;
  double t = 0, v = 0;
  for (std::size_t i = from; i < ep.size(); ++i) {
    t += ep[i].train_acc;
    v += ep[i].val_acc;
  }
  const double n = static_cast<double>(ep.size() - from);
  return {t / n, v / n};
}

}  // namespace grainscope::train
