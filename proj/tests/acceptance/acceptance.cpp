// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.
#include "ervc/archzoo.hpp"
#include "ervc/checkpoint.hpp"
#include "ervc/cam.hpp"
#include "ervc/dicom.hpp"
#include "ervc/error.hpp"
#include "ervc/gradcheck.hpp"
#include "ervc/image.hpp"
#include "ervc/io.hpp"
#include "ervc/metrics.hpp"
#include "ervc/rng.hpp"
#include "ervc/dataset.hpp"
#include "ervc/stats.hpp"
#include "ervc/synthgen.hpp"
#include "ervc/trainer.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace ervc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  std::string cli;
  fs::path work;
  bool skip_desk = false;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

int run_cli(const Context& ctx, const std::string& args, const fs::path& log) {
  const std::string cmd = quote(ctx.cli) + " " + args + " > " + quote(log.string()) + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

template <typename T>
Tensor<T> random_tensor(Shape shape, std::uint64_t seed) {
  Tensor<T> t(std::move(shape));
  SplitMix64 rng(seed);
  for (auto& v : t.values()) v = static_cast<T>(rng.normal());
  return t;
}

constexpr bool kDouble = std::is_same_v<Real, double>;

// 1 ---------------------------------------------------------------------------
Outcome arch_info(const Context& ctx) {
  const fs::path out = ctx.work / "arch_info";
  if (run_cli(ctx, "arch-info --out " + quote(out.string()), ctx.work / "arch_info.log") != 0)
    return {false, "arch-info exited with an error"};
  const std::string expect =
      "architecture,parameters,relative\n"
      "DenseNet-121,7978856,0.29\n"
      "Inception V3,27161264,1.00\n"
      "MobileNet V3,5483032,0.20\n"
      "ResNet-18,11689512,0.43\n"
      "ResNet-34,21797672,0.80\n"
      "ResNet-50,25557032,0.94\n";
  const std::string got = read_text(out / "arch_info.csv");
  return {got == expect, got == expect ? "six counts and ratios exact" : "table differs:\n" + got};
}

// 2 ---------------------------------------------------------------------------
Outcome chi2_mapping(const Context&) {
  const double p1 = chi2_sf(16.3), p2 = chi2_sf(102.0);
  const double e1 = std::abs(p1 / 5.4e-05 - 1), e2 = std::abs(p2 / 5.7e-24 - 1);
  return {e1 <= 0.02 && e2 <= 0.05,
          "sf(16.3)=" + fmt("%.4g", p1) + " (rel " + fmt("%.3f", e1) + "), sf(102)=" + fmt("%.4g", p2) +
              " (rel " + fmt("%.3f", e2) + ")"};
}

// 3 ---------------------------------------------------------------------------
Outcome split_counts(const Context&) {
  std::vector<std::string> ids;
  for (int i = 0; i < 198; ++i) ids.push_back("H" + std::to_string(1000 + i));
  std::size_t n[3] = {};
  const auto a = split_sets(ids, proportional_counts(198), 0);
  for (const auto& [id, s] : a) ++n[static_cast<int>(s)];
  const bool ok = a.size() == 198 && n[0] == 116 && n[1] == 40 && n[2] == 42;
  return {ok, std::to_string(n[0]) + "/" + std::to_string(n[1]) + "/" + std::to_string(n[2])};
}

// 4 ---------------------------------------------------------------------------
template <typename T>
double check_model(Model<T>& m, std::size_t batch, std::uint64_t seed, bool eval_too) {
  m.init(seed);
  for (std::size_t i = 0; i < m.nodes().size(); ++i) {
    auto& p = m.params(i);
    if (!p.bias.empty()) p.bias = random_tensor<T>(p.bias.shape(), seed + 100 + i);
    if (m.node(i).spec.kind == LayerKind::BatchNorm2d) {
      for (auto& v : p.weight.values()) v = static_cast<T>(1.0 + 0.3 * std::tanh(static_cast<double>(v)));
      for (auto& v : p.running_var.values()) v = static_cast<T>(1.5);
    }
  }
  Shape s = m.sample_shape();
  s.insert(s.begin(), batch);
  const auto x = random_tensor<T>(s, seed + 1);
  Shape out = m.node_shape(m.nodes().size() - 1);
  out.insert(out.begin(), batch);
  GradCheckOptions opt;
  opt.eps = 1e-5;
  opt.floor = kDouble ? 1e-6 : 1e-4;
  opt.max_coords_per_tensor = 32;
  opt.seed = seed;
  // 32-bit builds: 32-bit backprop against difference quotients of a 64-bit copy.
  const auto run = [&](std::uint64_t loss_seed) {
    const OutputLoss<T> loss = projection_loss<T>(out, loss_seed);
    if constexpr (std::is_same_v<T, double>) {
      return finite_diff_check(m, x, loss, opt).max_rel_error;
    } else {
      const Tensor<double> w = cast_tensor<double>(loss(Tensor<T>(out)).grad);
      const OutputLoss<double> ref = [w](const Tensor<double>& o) {
        double l = 0.0;
        for (std::size_t i = 0; i < o.size(); ++i) l += o[i] * w[i];
        return Objective<double>{l, w};
      };
      return finite_diff_check_reference(m, x, loss, ref, opt).max_rel_error;
    }
  };
  double worst = run(seed + 2);
  if (eval_too) {
    opt.mode = Mode::Eval;
    worst = std::max(worst, run(seed + 3));
  }
  return worst;
}

Outcome gradcheck(const Context&) {
  const double tol = kDouble ? 1e-6 : 1e-3;
  std::ostringstream detail;
  double worst = 0;
  SplitMix64 rng(44);
  const auto dim = [&](std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); };
  for (int trial = 0; trial < 3; ++trial) {
    const std::size_t c = dim(1, 4), h = dim(5, 9), w = dim(5, 9), o = dim(1, 5);
    std::vector<std::pair<std::string, Model<Real>>> models;
    const auto single = [&](const char* name, Shape sample, LayerSpec spec) {
      Model<Real> m(std::move(sample));
      m.add(name, spec, -1);
      models.emplace_back(name, std::move(m));
    };
    single("conv2d", {c, h, w}, LayerSpec::conv2d(c, o, 3, 1 + trial % 2, 1, trial == 1));
    single("conv2d_1x1", {c, h, w}, LayerSpec::conv2d(c, o, 1, 2, 0));
    single("relu", {c, h, w}, LayerSpec::relu());
    single("maxpool2d", {c, h, w}, LayerSpec::maxpool2d(3, 2, 1));
    single("global_avg_pool", {c, h, w}, LayerSpec::global_avg_pool());
    single("linear", {h}, LayerSpec::linear(h, o));
    single("batchnorm2d", {c, h, w}, LayerSpec::batchnorm2d(c));
    single("flatten", {c, h, w}, LayerSpec::flatten());
    {
      Model<Real> m({c, h, w});
      const int conv = m.add("conv", LayerSpec::conv2d(c, c, 3, 1, 1, true), -1);
      m.add("add", LayerSpec::add(), {-1, conv});
      models.emplace_back("add", std::move(m));
    }
    {
      MiniResNetConfig cfg;
      cfg.stage_blocks = {1, 1};
      cfg.base_channels = 4;
      cfg.input_side = 8;
      models.emplace_back("mini_resnet_2_blocks", build_mini_resnet<Real>(cfg, 0));
    }
    for (auto& [name, m] : models) {
      const double e = check_model(m, 3, 1000 * trial + 7, name != "mini_resnet_2_blocks");
      if (trial == 0) detail << name << "=" << fmt("%.1e", e) << " ";
      worst = std::max(worst, e);
    }
  }
  detail << "worst=" << fmt("%.2e", worst) << " tol=" << fmt("%.0e", tol);
  return {worst <= tol, detail.str()};
}

// 5 ---------------------------------------------------------------------------
Outcome cam_identity(const Context&) {
  const double tol = kDouble ? 1e-8 : 1e-4;
  SplitMix64 rng(5);
  double worst = 0;
  for (int t = 0; t < 100; ++t) {
    MiniResNetConfig cfg;
    cfg.stage_blocks = {1 + rng.below(2), 1 + rng.below(2)};
    cfg.base_channels = 4 + 2 * rng.below(3);
    cfg.input_side = 12 + 4 * rng.below(4);
    cfg.input_channels = 1 + 2 * rng.below(2);
    Model<Real> m = build_mini_resnet<Real>(cfg, 500 + t);
    Tensor<Real> x({cfg.input_channels, cfg.input_side, cfg.input_side});
    for (auto& v : x.values()) v = static_cast<Real>(rng.uniform());
    const std::size_t c = rng.below(48);
    const CamMap cam = compute_cam(m, x, c);
    double mean = 0;
    for (double v : cam.grid) mean += v;
    mean /= static_cast<double>(cam.grid.size());
    worst = std::max(worst, std::abs(mean + cam.bias - cam.logit) / std::max(1.0, std::abs(cam.logit)));
  }
  return {worst <= tol, "100 nets, worst relative gap " + fmt("%.2e", worst)};
}

// 6 ---------------------------------------------------------------------------
Outcome desk_run(const Context& ctx) {
  if (ctx.skip_desk) return {false, "skipped (--skip-desk)"};
  const fs::path dir = ctx.work / "desk";
  fs::remove_all(dir);
  const std::string d = dir.string();
  const auto start = std::chrono::steady_clock::now();
  const std::string steps[] = {
      "synth --out " + quote(d + "/synth") +
          " --sets 100 --side 72 --asymmetry 0.05 --marker-prob 0.193 --seed 1",
      "split --out " + quote(d + "/split") + " --metadata " + quote(d + "/synth/metadata.csv") + " --seed 1",
      "train --out " + quote(d + "/model") + " --metadata " + quote(d + "/split/metadata.csv") + " --images " +
          quote(d + "/synth/images") + " --epochs 40 --lr 0.05 --seed 1",
      "evaluate --out " + quote(d + "/eval") + " --metadata " + quote(d + "/split/metadata.csv") +
          " --images " + quote(d + "/synth/images") + " --model " + quote(d + "/model") + " --split TEST",
  };
  fs::create_directories(dir);
  int k = 0;
  for (const auto& s : steps)
    if (run_cli(ctx, s, dir / ("step" + std::to_string(++k) + ".log")) != 0)
      return {false, "step failed: " + s};
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  const auto j = nlohmann::json::parse(read_text(dir / "eval" / "metrics.json"));
  const double collapsed = j.at("collapsed_accuracy"), top1 = j.at("top1_accuracy");
  const double lat = j.at("laterality_error_fraction").is_null() ? 0.0 : double(j.at("laterality_error_fraction"));
  const bool ok = collapsed >= 0.90 && collapsed > top1 && lat >= 0.5 && minutes <= 30.0;
  return {ok, "collapsed=" + fmt("%.4f", collapsed) + " top1=" + fmt("%.4f", top1) +
                  " laterality_error_fraction=" + fmt("%.4f", lat) + " wall=" + fmt("%.1f", minutes) + "min"};
}

// 7 ---------------------------------------------------------------------------
Outcome memorization(const Context&) {
  PhantomConfig pc;
  pc.side = 32;
  pc.asymmetry = 0.3;
  pc.seed = 1;
  LabeledImages data;
  for (auto& p : generate_corpus(1, pc)) {
    data.labels.push_back(class_index(p.record.label));
    data.images.push_back(std::move(p.image));
  }
  MiniResNetConfig mc;
  mc.stage_blocks = {1, 1};
  mc.base_channels = 16;
  mc.input_side = 32;
  Model<Real> model = build_mini_resnet<Real>(mc, 1);
  TrainConfig cfg;
  cfg.epochs = 150;
  cfg.batch_size = 48;
  cfg.optimizer.lr = 0.2;
  cfg.augment.out_side = 32;
  cfg.augment_enabled = false;
  cfg.seed = 3;
  const TrainOutcome out = train(model, data, data, cfg);
  const double loss = out.history.epochs.back().train_loss;
  const double acc = top1_accuracy(evaluate(model, data.images).predictions, data.labels);
  return {acc == 1.0 && loss < 0.01, "48 images, top1=" + fmt("%.4f", acc) + " final loss=" + fmt("%.2e", loss)};
}

// 8 ---------------------------------------------------------------------------
Outcome round_trips(const Context&) {
  SplitMix64 rng(8);
  std::size_t pgm_ok = 0, ckpt_ok = 0;
  for (int t = 0; t < 100; ++t) {
    Image16 img(1 + rng.below(40), 1 + rng.below(40));
    for (auto& v : img.pixels()) v = static_cast<std::uint16_t>(rng());
    pgm_ok += read_pgm16(write_pgm16(img)) == img;

    std::vector<CheckpointTensor> ts;
    for (std::size_t i = 0, n = 1 + rng.below(4); i < n; ++i) {
      CheckpointTensor c{"t" + std::to_string(i), {1 + rng.below(5), 1 + rng.below(5)}, {}};
      if (rng.bernoulli(0.5)) {
        std::vector<float> v(c.shape[0] * c.shape[1]);
        for (auto& x : v) x = static_cast<float>(rng.normal());
        c.values = v;
      } else {
        std::vector<double> v(c.shape[0] * c.shape[1]);
        for (auto& x : v) x = rng.normal();
        c.values = v;
      }
      ts.push_back(c);
    }
    ckpt_ok += read_checkpoint(write_checkpoint(ts)) == ts;
  }
  std::size_t fixtures = 0, parsed = 0, typed = 0;
  bool pixels_ok = true;
  for (const auto& e : fs::directory_iterator(fs::path(ERVC_FIXTURE_DIR) / "dicom")) {
    ++fixtures;
    try {
      const auto obj = dicom::load_dicom(e.path());
      dicom::extract_meta(obj);
      const Image16 img = dicom::extract_pixels(obj);
      ++parsed;
      if (e.path().filename() == "valid_mono2.dcm") {
        const std::vector<std::uint16_t> expect = {0, 1, 2, 4095, 100, 200, 300, 400, 1000, 2000, 3000, 4000};
        pixels_ok &= std::equal(expect.begin(), expect.end(), img.pixels().begin(), img.pixels().end());
      }
    } catch (const Error&) {
      ++typed;
    }
  }
  const bool ok = pgm_ok == 100 && ckpt_ok == 100 && fixtures > 0 && parsed + typed == fixtures && pixels_ok;
  return {ok, "pgm " + std::to_string(pgm_ok) + "/100, checkpoint " + std::to_string(ckpt_ok) + "/100, dicom " +
                  std::to_string(fixtures) + " fixtures (" + std::to_string(parsed) + " parsed, " +
                  std::to_string(typed) + " typed errors)"};
}

// 9 ---------------------------------------------------------------------------
Outcome metric_oracles(const Context&) {
  SplitMix64 rng(9);
  double auc_gap = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 6 + rng.below(60), k = 2 + rng.below(6);
    std::vector<std::size_t> labels(n);
    std::vector<std::vector<double>> s(n, std::vector<double>(k));
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = i < 2 ? i : rng.below(k);
      for (auto& v : s[i]) v = static_cast<double>(rng.below(8)) / 7.0;
    }
    double sum = 0;
    std::size_t used = 0;
    for (std::size_t c = 0; c < k; ++c) {
      double wins = 0, pairs = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (labels[i] == c && labels[j] != c) {
            pairs += 1;
            wins += s[i][c] > s[j][c] ? 1.0 : s[i][c] == s[j][c] ? 0.5 : 0.0;
          }
      if (pairs > 0) {
        sum += wins / pairs;
        ++used;
      }
    }
    auc_gap = std::max(auc_gap, std::abs(roc_auc_macro_ovr(s, labels).macro - sum / used));
  }

  ConfusionMatrix a, b;
  a.at(0, 0) = 8;
  a.at(1, mirror_class(1)) = 1;
  a.at(2, 30) = 1;
  b.at(4, mirror_class(4)) = 8;
  b.at(4, 5) = 2;
  ConfusionMatrix diag;
  for (std::size_t c = 0; c < 48; ++c) diag.at(c, c) = 1;
  const bool toys = collapsed_accuracy(a) == 0.9 && *laterality_error_fraction(b) == 0.8 &&
                    collapsed_accuracy(diag) == 1.0 && !laterality_error_fraction(diag).has_value();

  double phi_gap = 0;
  for (int t = 0; t < 200; ++t) {
    const Table2x2 tb{double(1 + rng.below(400)), double(1 + rng.below(400)), double(1 + rng.below(400)),
                      double(1 + rng.below(400))};
    const double x = chi2_statistic(tb, false).statistic, phi = phi_coefficient(tb);
    phi_gap = std::max(phi_gap, std::abs(phi * phi * tb.n() - x) / std::max(1.0, x));
  }
  return {auc_gap <= 1e-12 && toys && phi_gap <= 1e-10,
          "auc gap " + fmt("%.1e", auc_gap) + ", toy matrices " + (toys ? "exact" : "wrong") +
              ", phi^2 N vs chi2 gap " + fmt("%.1e", phi_gap)};
}

// 10 --------------------------------------------------------------------------
Outcome determinism(const Context& ctx) {
  const auto pipeline = [&](const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string d = dir.string();
    const std::string common = " --threads 1 --seed 5";
    const std::string steps[] = {
        "synth --out " + quote(d + "/synth") + " --sets 6 --side 40" + common,
        "split --out " + quote(d + "/split") + " --metadata " + quote(d + "/synth/metadata.csv") + common,
        "train --out " + quote(d + "/model") + " --metadata " + quote(d + "/split/metadata.csv") + " --images " +
            quote(d + "/synth/images") + " --epochs 2 --input-side 32" + common,
        "evaluate --out " + quote(d + "/eval") + " --metadata " + quote(d + "/split/metadata.csv") +
            " --images " + quote(d + "/synth/images") + " --model " + quote(d + "/model") + common,
    };
    int k = 0;
    for (const auto& s : steps)
      if (run_cli(ctx, s, dir / ("step" + std::to_string(++k) + ".log")) != 0) return false;
    return true;
  };
  const fs::path a = ctx.work / "det_a", b = ctx.work / "det_b";
  if (!pipeline(a) || !pipeline(b)) return {false, "pipeline step failed"};
  const char* files[] = {"eval/metrics.json", "eval/confusion.csv", "eval/predictions.csv", "model/history.jsonl",
                         "model/checkpoint.ervc", "model/model.json", "split/metadata.csv"};
  std::string differing;
  for (const char* f : files)
    if (read_file(a / f) != read_file(b / f)) differing += std::string(" ") + f;
  return {differing.empty(), differing.empty() ? "7 report files byte-identical" : "differ:" + differing};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  Context ctx;
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--cli", ctx.cli, "path to the ervc executable")->required();
  app.add_option("--work", work, "scratch directory");
  app.add_option("--only", only, "run only these criteria")->delimiter(',');
  app.add_flag("--skip-desk", ctx.skip_desk, "do not run the 40-epoch desk run");
  CLI11_PARSE(app, argc, argv);
  ctx.work = fs::absolute(work);
  fs::create_directories(ctx.work);

  const std::pair<const char*, std::function<Outcome(const Context&)>> criteria[] = {
      {"architecture parameter table", arch_info},
      {"chi-squared p-value mapping", chi2_mapping},
      {"198-set split", split_counts},
      {"gradient check", gradcheck},
      {"CAM GAP-linearity", cam_identity},
      {"desk-scale laterality findings", desk_run},
      {"memorization", memorization},
      {"PGM, checkpoint and DICOM round-trips", round_trips},
      {"metric oracles", metric_oracles},
      {"pipeline determinism", determinism},
  };
  int failed = 0;
  for (int i = 0; i < 10; ++i) {
    if (!only.empty() && std::find(only.begin(), only.end(), i + 1) == only.end()) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("criterion %2d %-38s %s  %s (%.1fs)\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed;
}
