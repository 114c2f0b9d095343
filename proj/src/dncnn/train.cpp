#include "polsar/dncnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "polsar/rng.hpp"

namespace polsar::nn {

void TrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0 || lr_decay_every == 0) {
    throw InvalidArgument("epochs, batch_size and lr_decay_every must be positive");
  }
  if (!(lr0 > 0.0) || !(lr_decay_factor > 0.0)) throw InvalidArgument("learning rate and decay factor must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.eps > 0.0)) {
    throw InvalidArgument("invalid Adam hyperparameters");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction <= 0.5)) {
    throw InvalidArgument("validation_fraction must lie in [0, 0.5]");
  }
}

double learning_rate(const TrainConfig& cfg, std::size_t epoch) {
  return cfg.lr0 / std::pow(cfg.lr_decay_factor, static_cast<double>(epoch / cfg.lr_decay_every));
}

void assemble_batch(const PatchDataset& ds, std::span<const std::size_t> indices, Tensor4<float>& noisy,
                    Tensor4<float>& clean) {
  const std::size_t p = ds.patch_size;
  const std::size_t per = ds.pair_floats();
  noisy = Tensor4<float>(indices.size(), 4, p, p);
  clean = Tensor4<float>(indices.size(), 4, p, p);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& pair = ds.pairs.at(indices[b]);
    std::copy_n(pair.noisy.begin(), per, noisy.data() + b * per);
    std::copy_n(pair.clean.begin(), per, clean.data() + b * per);
  }
}

namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

double mean_loss(Network<float>& net, const PatchDataset& ds, const std::vector<std::size_t>& idx, std::size_t batch,
                 Mode mode) {
  if (idx.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  Tensor4<float> noisy, clean;
  for (std::size_t s = 0; s < idx.size(); s += batch) {
    const std::size_t e = std::min(idx.size(), s + batch);
    assemble_batch(ds, std::span(idx).subspan(s, e - s), noisy, clean);
    total += residual_loss(net, noisy, clean, mode);
  }
  return total / static_cast<double>(idx.size());
}

double baseline_loss(const PatchDataset& ds, const std::vector<std::size_t>& idx) {
  if (idx.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (auto i : idx) {
    const auto& p = ds.pairs[i];
    for (std::size_t j = 0; j < p.noisy.size(); ++j) {
      const double d = static_cast<double>(p.noisy[j]) - p.clean[j];
      total += d * d;
    }
  }
  return total / static_cast<double>(idx.size());
}

}  // namespace

TrainResult train(const PatchDataset& ds, const NetConfig& net_cfg, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  net_cfg.validate();
  if (net_cfg.in_channels != ds.channels() || net_cfg.out_channels != ds.channels()) {
    throw InvalidArgument("network channel counts must match the dataset (4)");
  }
  std::vector<std::size_t> order(ds.pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(substream(cfg.seed, {0x73706c6974ULL}));
  shuffle(order, split_rng);
  std::size_t n_val = static_cast<std::size_t>(std::llround(cfg.validation_fraction * static_cast<double>(order.size())));
  if (cfg.validation_fraction > 0.0 && n_val == 0 && order.size() > 1) n_val = 1;
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(train_idx.begin(), train_idx.end());
  if (train_idx.size() < cfg.batch_size) {
    throw InvalidArgument("training split has " + std::to_string(train_idx.size()) + " pairs, fewer than one batch of " +
                          std::to_string(cfg.batch_size));
  }

  TrainResult result;
  result.train_pairs = train_idx.size();
  result.val_pairs = val.size();
  result.baseline_val_loss = baseline_loss(ds, val.empty() ? train_idx : val);

  Network<float> net = Network<float>::kaiming(net_cfg, substream(cfg.seed, {0x696e6974ULL}));
  if (cfg.identity_init) {
    auto& out = net.conv.back();
    std::fill(out.weight.values().begin(), out.weight.values().end(), 0.0f);
  }
  AdamOptimizer<float> adam(net, cfg.adam);
  double best = std::numeric_limits<double>::infinity();
  Tensor4<float> noisy, clean;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = learning_rate(cfg, epoch);
    std::vector<std::size_t> perm = train_idx;
    Rng rng(substream(cfg.seed, {0x65706f6368ULL, epoch}));
    shuffle(perm, rng);
    double total = 0.0;
    for (std::size_t s = 0; s < perm.size(); s += cfg.batch_size) {
      const std::size_t e = std::min(perm.size(), s + cfg.batch_size);
      assemble_batch(ds, std::span(perm).subspan(s, e - s), noisy, clean);
      auto lg = loss_and_grad(net, noisy, clean);
      total += lg.loss;
      adam.step(net, lg.grads, lr);
    }
    EpochLog entry{epoch, lr, total / static_cast<double>(perm.size()), 0.0};
    entry.val_loss = val.empty() ? entry.train_loss : mean_loss(net, ds, val, cfg.batch_size, Mode::infer);
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    if (entry.val_loss < best) {
      best = entry.val_loss;
      result.best_epoch = epoch;
      result.model.net = net;
    }
  }
  if (result.model.net.conv.empty()) result.model.net = net;  // every validation loss was NaN
  result.model.norm = ds.norm;
  return result;
}

void write_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "epoch,lr,train_loss,val_loss\n";
  char line[160];
  for (const auto& e : log) {
    std::snprintf(line, sizeof line, "%zu,%.9g,%.17g,%.17g\n", e.epoch, e.lr, e.train_loss, e.val_loss);
    out << line;
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace polsar::nn
