#pragma once

#include <functional>

#include "dtxnet/data.hpp"
#include "dtxnet/loss.hpp"
#include "numcore/adam.hpp"

namespace dtxnet {

struct TrainOptions {
  int epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 1;
  numcore::AdamConfig adam{};
  double val_fraction = 0.2;  // temporal tail held out
};

struct EpochStats {
  double train_total = 0, train_j = 0, train_i = 0, train_o = 0;
  double val_total = 0, val_j = 0, val_i = 0, val_o = 0;
};

struct TrainResult {
  int best_epoch = 0;         // 1-based
  double best_val_task = 0;   // the minimum validation task loss
  std::vector<EpochStats> curve;
};

using EpochCallback = std::function<void(int epoch, const EpochStats&)>;

// Minibatch training over sliding windows of t_train+1 consecutive ticks.
// The model is left holding the parameters of the epoch with the lowest
// validation task loss.
TrainResult train(Model& model, const EpisodeData& data, const TrainOptions& opt,
                  const EpochCallback& on_epoch = {});

// Builds the [B,...] tensors for the windows starting at the given ticks.
WindowBatch make_window_batch(const EpisodeData& data, const NetConfig& cfg,
                              const std::vector<int>& starts);

}  // namespace dtxnet
