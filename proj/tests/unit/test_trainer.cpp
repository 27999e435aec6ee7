#include "doctest.h"
#include "ervc/archzoo.hpp"
#include "ervc/checkpoint.hpp"
#include "ervc/error.hpp"
#include "ervc/metrics.hpp"
#include "ervc/synthgen.hpp"
#include "ervc/trainer.hpp"

#include <cmath>

using namespace ervc;

static Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::Io;
}

static LabeledImages phantoms(std::size_t sets, std::size_t side, std::uint64_t seed) {
  PhantomConfig cfg;
  cfg.side = side;
  cfg.asymmetry = 0.3;
  cfg.seed = seed;
  LabeledImages out;
  for (auto& p : generate_corpus(sets, cfg)) {
    out.labels.push_back(class_index(p.record.label));
    out.images.push_back(std::move(p.image));
  }
  return out;
}

static MiniResNetConfig tiny(std::size_t side) {
  MiniResNetConfig m;
  m.stage_blocks = {1, 1};
  m.base_channels = 8;
  m.input_side = side;
  return m;
}

static TrainConfig quick(std::size_t epochs, std::size_t side) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 16;
  cfg.optimizer.lr = 0.05;
  cfg.augment.out_side = side;
  cfg.seed = 3;
  return cfg;
}

TEST_CASE("memorizes one image per class") {
  const LabeledImages data = phantoms(1, 32, 1);
  MiniResNetConfig mc = tiny(32);
  mc.base_channels = 16;
  Model<Real> model = build_mini_resnet<Real>(mc, 1);
  TrainConfig cfg = quick(150, 32);
  cfg.batch_size = 48;
  cfg.optimizer.lr = 0.2;
  cfg.augment_enabled = false;
  const TrainOutcome out = train(model, data, data, cfg);
  CHECK(out.history.epochs.back().train_loss < 0.01);
  CHECK(out.history.epochs.back().train_acc == 1.0);
  const Evaluation ev = evaluate(model, data.images);
  CHECK(top1_accuracy(ev.predictions, data.labels) == 1.0);
}

TEST_CASE("training is deterministic and the history is well-formed") {
  const LabeledImages train_set = phantoms(2, 36, 2);
  const LabeledImages val_set = phantoms(1, 36, 3);
  TrainConfig cfg = quick(5, 32);
  cfg.batch_size = 32;
  Model<Real> a = build_mini_resnet<Real>(tiny(32), 4);
  Model<Real> b = build_mini_resnet<Real>(tiny(32), 4);
  std::size_t calls = 0;
  const auto ha = train(a, train_set, val_set, cfg, [&](const EpochRecord&) { ++calls; });
  const auto hb = train(b, train_set, val_set, cfg);
  CHECK(calls == 5);
  CHECK(history_jsonl(ha.history) == history_jsonl(hb.history));
  CHECK(history_csv(ha.history) == history_csv(hb.history));
  CHECK(model_state(a) == model_state(b));
  CHECK(ha.best_state == hb.best_state);
  REQUIRE(ha.history.epochs.size() == 5);
  for (const auto& e : ha.history.epochs) {
    CHECK(std::isfinite(e.train_loss));
    CHECK(std::isfinite(e.val_acc));
  }
  CHECK(ha.history.epochs.back().train_loss < ha.history.epochs.front().train_loss);
  CHECK(ha.history.best_epoch >= 1);
  CHECK(ha.history.best_val_acc == ha.history.epochs[ha.history.best_epoch - 1].val_acc);
  for (const auto& e : ha.history.epochs) CHECK(e.val_acc <= ha.history.best_val_acc);

  TrainConfig threaded = cfg;
  threaded.threads = 3;
  Model<Real> c = build_mini_resnet<Real>(tiny(32), 4);
  CHECK(history_jsonl(train(c, train_set, val_set, threaded).history) == history_jsonl(ha.history));
}

TEST_CASE("training preconditions") {
  const LabeledImages data = phantoms(1, 36, 1);
  Model<Real> m = build_mini_resnet<Real>(tiny(32), 1);
  TrainConfig cfg = quick(0, 32);
  CHECK(code_of([&] { train(m, data, data, cfg); }) == Errc::BadConfig);
  cfg.epochs = 1;
  CHECK(code_of([&] { train(m, LabeledImages{}, data, cfg); }) == Errc::EmptyDataset);
  cfg.batch_size = 0;
  CHECK(code_of([&] { cfg.validate(); }) == Errc::BadConfig);
}

TEST_CASE("evaluate with a zero head gives uniform scores and class 0") {
  const LabeledImages data = phantoms(1, 32, 5);
  Model<Real> m = build_mini_resnet<Real>(tiny(32), 1);
  auto& head = m.params(m.nodes().size() - 1);
  head.weight.fill(0);
  head.bias.fill(0);
  const Evaluation ev = evaluate(m, data.images);
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(ev.predictions[i] == 0);
    for (double s : ev.scores[i]) CHECK(s == doctest::Approx(1.0 / 48).epsilon(1e-6));
  }
}

TEST_CASE("evaluate is repeatable, order-stable and never mutates the model") {
  const LabeledImages data = phantoms(2, 32, 6);
  Model<Real> m = build_mini_resnet<Real>(tiny(32), 2);
  m.params(1).running_mean.fill(static_cast<Real>(0.1));
  const auto before = model_state(m);
  const Evaluation a = evaluate(m, data.images, 1, 16);
  const Evaluation b = evaluate(m, data.images, 3, 7);
  CHECK(a.predictions == b.predictions);
  CHECK(a.scores == b.scores);
  CHECK(model_state(m) == before);
}

TEST_CASE("argmax ties go to the lowest index") {
  const double row[] = {0.1, 0.4, 0.4, 0.1};
  CHECK(argmax_lowest(row) == 1);
}

TEST_CASE("image_to_input replicates channels") {
  Image16 img(8, 8);
  for (std::size_t i = 0; i < 64; ++i) img.pixels()[i] = static_cast<std::uint16_t>(i);
  const auto x = image_to_input<double>(img, 3, 6);
  CHECK(x.shape() == Shape{3, 6, 6});
  for (std::size_t k = 0; k < 36; ++k) {
    CHECK(x[k] == x[36 + k]);
    CHECK(x[k] == x[72 + k]);
  }
  CHECK(x[0] == img.at(1, 1) / 63.0);
}

TEST_CASE("history file formats") {
  TrainingHistory h;
  h.epochs.push_back({1, 2.5, 0.25, 0.5, 12.0});
  h.best_epoch = 1;
  h.best_val_acc = 0.5;
  CHECK(history_jsonl(h) == "{\"epoch\":1,\"train_loss\":2.5,\"train_acc\":0.25,\"val_acc\":0.5}\n");
  CHECK(history_csv(h) == "epoch,train_loss,train_acc,val_acc\n1,2.5,0.25,0.5\n");
}
