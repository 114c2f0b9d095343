#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "polsar/dataset.hpp"
#include "polsar/dncnn/adam.hpp"
#include "polsar/dncnn/model.hpp"

namespace polsar::nn {

struct TrainConfig {
  std::size_t epochs = 140;
  std::size_t batch_size = 32;
  double lr0 = 1e-3;
  std::size_t lr_decay_every = 20;
  double lr_decay_factor = 10.0;
  AdamConfig adam;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  /// Zero the output conv after Kaiming init so training starts from R = 0 (the identity
  /// despeckler). Plain Kaiming on the last layer starts tens of times above the baseline.
  bool identity_init = true;

  void validate() const;
};

/// Step schedule: lr0 / decay_factor^floor(epoch / decay_every).
double learning_rate(const TrainConfig& cfg, std::size_t epoch);

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  ///< mean per-pair residual loss over the epoch's batches
  double val_loss = 0.0;    ///< mean per-pair residual loss on the validation split, inference mode
};

struct TrainResult {
  NetworkModel model;  ///< parameters of the best-validation epoch
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double baseline_val_loss = 0.0;  ///< mean per-pair sum ||y - x||^2 (a zero-residual model)
  std::size_t train_pairs = 0;
  std::size_t val_pairs = 0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Mini-batch Adam on the residual loss. The validation split is drawn once from the
/// seed; batches are reshuffled every epoch from (seed, epoch). Fully deterministic for
/// a given seed. Throws InvalidArgument when the training split is smaller than a batch.
TrainResult train(const PatchDataset& ds, const NetConfig& net_cfg, const TrainConfig& train_cfg,
                  const EpochCallback& on_epoch = {});

/// Stacks the given pairs into noisy and clean N x 4 x P x P tensors.
void assemble_batch(const PatchDataset& ds, std::span<const std::size_t> indices, Tensor4<float>& noisy,
                    Tensor4<float>& clean);

/// CSV with header "epoch,lr,train_loss,val_loss".
void write_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& path);

}  // namespace polsar::nn
