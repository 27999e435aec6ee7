#pragma once

// Mini-batch SGDM training with per-epoch validation, and batched evaluation.

#include <functional>
#include <string>
#include <vector>

#include "ervc/augment.hpp"
#include "ervc/checkpoint.hpp"
#include "ervc/optim.hpp"

namespace ervc {

struct LabeledImages {
  std::vector<Image16> images;
  std::vector<std::size_t> labels;

  std::size_t size() const { return images.size(); }
};

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 32;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  AugmentConfig augment;
  bool augment_enabled = true;
  std::size_t threads = 1;

  /// Throws BadConfig.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;  // on the augmented training batches, train mode
  double val_acc = 0.0;
  double seconds = 0.0;  // wall clock; never written to report files
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_acc = -1.0;
};

struct TrainOutcome {
  TrainingHistory history;
  std::vector<CheckpointTensor> best_state;  // model state after best_epoch
};

/// Model input [C,S,S]: samples are augmented (or center-cropped) to S and the
/// single image channel is replicated C times.
template <typename T>
Tensor<T> image_to_input(const Image16& img, std::size_t channels, std::size_t side);

/// Trains `model` in place (it ends in its final-epoch state). The best
/// validation epoch (earliest on ties) is kept in the outcome. Throws
/// EmptyDataset, BadConfig, NonFiniteLoss.
template <typename T>
TrainOutcome train(Model<T>& model, const LabeledImages& train_data, const LabeledImages& val_data,
                   const TrainConfig& cfg,
                   const std::function<void(const EpochRecord&)>& on_epoch = {});

struct Evaluation {
  std::vector<std::size_t> predictions;
  std::vector<std::vector<double>> scores;  // softmax rows
};

/// Eval-mode inference over center crops; argmax with lowest-index tie-break.
/// Results are ordered as the input regardless of `threads`.
template <typename T>
Evaluation evaluate(const Model<T>& model, const std::vector<Image16>& images,
                    std::size_t threads = 1, std::size_t batch_size = 64);

std::size_t argmax_lowest(std::span<const double> row);

std::string history_jsonl(const TrainingHistory& history);
std::string history_csv(const TrainingHistory& history);

}  // namespace ervc
