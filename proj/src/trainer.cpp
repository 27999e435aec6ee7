#include "ervc/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "ervc/io.hpp"
#include "ervc/parallel.hpp"
#include "ervc/rng.hpp"
#include "json.hpp"

namespace ervc {

void TrainConfig::validate() const {
  if (epochs == 0) fail(Errc::BadConfig, "epochs must be >= 1");
  if (batch_size == 0) fail(Errc::BadConfig, "batch size must be >= 1");
  if (threads == 0) fail(Errc::BadConfig, "threads must be >= 1");
  optimizer.validate();
  augment.validate();
}

namespace {

template <typename T>
void replicate_into(const Tensor<T>& plane, std::size_t channels, T* dst) {
  for (std::size_t c = 0; c < channels; ++c)
    std::copy(plane.data(), plane.data() + plane.size(), dst + c * plane.size());
}

template <typename T>
void check_model_input(const Model<T>& model) {
  const Shape& s = model.sample_shape();
  if (s.size() != 3 || s[1] != s[2]) fail(Errc::BadInputShape, "model input must be [C,S,S]");
}

// Epoch permutation stream is keyed apart from per-sample augmentation seeds.
constexpr std::uint64_t kShuffleIndex = ~std::uint64_t{0};

}  // namespace

template <typename T>
Tensor<T> image_to_input(const Image16& img, std::size_t channels, std::size_t side) {
  const Tensor<T> plane = center_crop_normalized<T>(img, side);
  Tensor<T> out({channels, side, side});
  replicate_into(plane, channels, out.data());
  return out;
}

std::size_t argmax_lowest(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

template <typename T>
Evaluation evaluate(const Model<T>& model, const std::vector<Image16>& images, std::size_t threads,
                    std::size_t batch_size) {
  check_model_input(model);
  const std::size_t ch = model.sample_shape()[0], side = model.sample_shape()[1];
  const std::size_t per = ch * side * side;
  Evaluation ev;
  ev.predictions.resize(images.size());
  ev.scores.resize(images.size());
  const std::size_t batches = (images.size() + batch_size - 1) / batch_size;
  parallel_for(batches, threads, [&](std::size_t b) {
    const std::size_t lo = b * batch_size, hi = std::min(images.size(), lo + batch_size);
    Tensor<T> x({hi - lo, ch, side, side});
    for (std::size_t i = lo; i < hi; ++i)
      replicate_into(center_crop_normalized<T>(images[i], side), ch, x.data() + (i - lo) * per);
    const Tensor<T> probs = softmax(model.infer(x));
    const std::size_t k = probs.dim(1);
    for (std::size_t i = lo; i < hi; ++i) {
      auto& row = ev.scores[i];
      row.assign(probs.data() + (i - lo) * k, probs.data() + (i - lo + 1) * k);
      ev.predictions[i] = argmax_lowest(row);
    }
  });
  return ev;
}

template <typename T>
TrainOutcome train(Model<T>& model, const LabeledImages& train_data, const LabeledImages& val_data,
                   const TrainConfig& cfg, const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  check_model_input(model);
  if (train_data.size() == 0) fail(Errc::EmptyDataset, "training set is empty");
  if (val_data.size() == 0) fail(Errc::EmptyDataset, "validation set is empty");
  if (train_data.labels.size() != train_data.size() || val_data.labels.size() != val_data.size())
    fail(Errc::ShapeMismatch, "image and label counts differ");

  const std::size_t ch = model.sample_shape()[0], side = model.sample_shape()[1];
  const std::size_t per = ch * side * side;
  AugmentConfig aug = cfg.augment;
  aug.out_side = side;

  Sgdm<T> opt(cfg.optimizer);
  TrainOutcome outcome;
  const std::size_t n = train_data.size();
  std::vector<std::size_t> order(n);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(derive_seed(cfg.seed, epoch, kShuffleIndex));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t lo = 0; lo < n; lo += cfg.batch_size) {
      const std::size_t hi = std::min(n, lo + cfg.batch_size);
      Tensor<T> x({hi - lo, ch, side, side});
      std::vector<std::size_t> targets(hi - lo);
      parallel_for(hi - lo, cfg.threads, [&](std::size_t j) {
        const std::size_t idx = order[lo + j];
        const Image16& img = train_data.images[idx];
        const Tensor<T> plane = cfg.augment_enabled
                                    ? augment_sample<T>(img, aug, derive_seed(cfg.seed, epoch, idx))
                                    : center_crop_normalized<T>(img, side);
        replicate_into(plane, ch, x.data() + j * per);
        targets[j] = train_data.labels[idx];
      });
      Tape<T> tape;
      const Tensor<T> logits = model.forward(x, Mode::Train, &tape);
      const LossResult<T> lr = softmax_cross_entropy<T>(logits, targets);
      if (!std::isfinite(static_cast<double>(lr.loss)))
        fail(Errc::NonFiniteLoss, "loss " + format_real(static_cast<double>(lr.loss)) + " at epoch " +
                                      std::to_string(epoch) + ", batch starting at " +
                                      std::to_string(lo));
      loss_sum += static_cast<double>(lr.loss) * static_cast<double>(hi - lo);
      const std::size_t k = logits.dim(1);
      for (std::size_t j = 0; j < hi - lo; ++j) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c)
          if (logits[j * k + c] > logits[j * k + best]) best = c;
        hits += best == targets[j];
      }
      opt.step(model, model.backward(tape, lr.grad_logits));
    }

    const Evaluation ev = evaluate(model, val_data.images, cfg.threads);
    std::size_t val_hits = 0;
    for (std::size_t i = 0; i < val_data.size(); ++i) val_hits += ev.predictions[i] == val_data.labels[i];

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.train_acc = static_cast<double>(hits) / static_cast<double>(n);
    rec.val_acc = static_cast<double>(val_hits) / static_cast<double>(val_data.size());
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    outcome.history.epochs.push_back(rec);
    if (rec.val_acc > outcome.history.best_val_acc) {
      outcome.history.best_val_acc = rec.val_acc;
      outcome.history.best_epoch = epoch;
      outcome.best_state = model_state(model);
    }
    if (on_epoch) on_epoch(rec);
  }
  return outcome;
}

std::string history_jsonl(const TrainingHistory& history) {
  std::string out;
  for (const auto& r : history.epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["train_loss"] = r.train_loss;
    j["train_acc"] = r.train_acc;
    j["val_acc"] = r.val_acc;
    out += j.dump() + "\n";
  }
  return out;
}

std::string history_csv(const TrainingHistory& history) {
  std::string out = "epoch,train_loss,train_acc,val_acc\n";
  for (const auto& r : history.epochs)
    out += std::to_string(r.epoch) + "," + format_real(r.train_loss) + "," +
           format_real(r.train_acc) + "," + format_real(r.val_acc) + "\n";
  return out;
}

template Tensor<float> image_to_input<float>(const Image16&, std::size_t, std::size_t);
template Tensor<double> image_to_input<double>(const Image16&, std::size_t, std::size_t);
template Evaluation evaluate<float>(const Model<float>&, const std::vector<Image16>&, std::size_t,
                                    std::size_t);
template Evaluation evaluate<double>(const Model<double>&, const std::vector<Image16>&, std::size_t,
                                     std::size_t);
template TrainOutcome train<float>(Model<float>&, const LabeledImages&, const LabeledImages&,
                                   const TrainConfig&, const std::function<void(const EpochRecord&)>&);
template TrainOutcome train<double>(Model<double>&, const LabeledImages&, const LabeledImages&,
                                    const TrainConfig&, const std::function<void(const EpochRecord&)>&);

}  // namespace ervc
