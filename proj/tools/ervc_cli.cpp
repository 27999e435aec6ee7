// ervc: command line front end for the radiograph view classification pipeline.

#include <cmath>
#include <malloc.h>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "ervc/archzoo.hpp"
#include "ervc/cam.hpp"
#include "ervc/config.hpp"
#include "ervc/dataset.hpp"
#include "ervc/dicom.hpp"
#include "ervc/io.hpp"
#include "ervc/metrics.hpp"
#include "ervc/plots.hpp"
#include "ervc/stats.hpp"
#include "ervc/synthgen.hpp"
#include "ervc/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace ervc;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct Common {
  std::string config_path;
  std::string out;
  std::map<std::string, std::string> overrides;  // config key -> flag value
};

// Registers --flag for config key `key`; a given flag overrides the config file.
void key_option(CLI::App* app, Common& common, const std::string& flag, const std::string& key) {
  app->add_option_function<std::string>(
      flag, [&common, key](const std::string& v) { common.overrides[key] = v; },
      "config key " + key);
}

void common_options(CLI::App* app, Common& common, bool needs_out) {
  app->add_option("--config", common.config_path, "INI-style config file");
  auto* out = app->add_option("--out", common.out, "output directory");
  if (needs_out) out->required();
  key_option(app, common, "--seed", "seed");
  key_option(app, common, "--threads", "threads");
}

RunConfig load_config(const Common& common) {
  RunConfig cfg;
  if (!common.config_path.empty()) cfg.load_ini(read_text(common.config_path));
  for (const auto& [k, v] : common.overrides) cfg.set(k, v);
  if (cfg.get_size("threads") == 0) fail(Errc::BadConfig, "threads must be >= 1");
  return cfg;
}

std::vector<RadiographRecord> load_metadata(const std::string& path) {
  return read_metadata_csv(read_text(path));
}

// ---------------------------------------------------------------------------
// Model bundle: checkpoint + JSON sidecar.

MiniResNetConfig model_config(const RunConfig& cfg) {
  MiniResNetConfig mc;
  mc.stage_blocks = cfg.get_size_list("model.stage_blocks");
  mc.base_channels = cfg.get_size("model.base_channels");
  mc.input_side = cfg.get_size("model.input_side");
  mc.input_channels = cfg.get_size("model.input_channels");
  mc.num_classes = kNumClasses;
  return mc;
}

std::size_t source_side(const RunConfig& cfg) {
  if (cfg.is_set("model.source_side")) return cfg.get_size("model.source_side");
  const std::size_t s = cfg.get_size("model.input_side");
  return (s * 250 + 223) / 224;
}

struct Bundle {
  MiniResNetConfig config;
  std::size_t source_side = 0;
  Model<Real> model;
};

void save_bundle(const fs::path& dir, const MiniResNetConfig& mc, std::size_t src_side,
                 std::span<const CheckpointTensor> state, const nlohmann::ordered_json& extra) {
  const auto bytes = write_checkpoint(state);
  write_file(dir / "checkpoint.ervc", bytes);
  nlohmann::ordered_json j;
  j["architecture"] = "mini-resnet";
  j["stage_blocks"] = mc.stage_blocks;
  j["base_channels"] = mc.base_channels;
  j["input_side"] = mc.input_side;
  j["input_channels"] = mc.input_channels;
  j["num_classes"] = mc.num_classes;
  j["source_side"] = src_side;
  for (const auto& [k, v] : extra.items()) j[k] = v;
  write_text(dir / "model.json", j.dump(2) + "\n");
}

Bundle load_bundle(const fs::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(dir / "model.json"));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::BadCheckpoint, std::string("model.json: ") + e.what());
  }
  Bundle b;
  try {
    b.config.stage_blocks = j.at("stage_blocks").get<std::vector<std::size_t>>();
    b.config.base_channels = j.at("base_channels").get<std::size_t>();
    b.config.input_side = j.at("input_side").get<std::size_t>();
    b.config.input_channels = j.at("input_channels").get<std::size_t>();
    b.config.num_classes = j.at("num_classes").get<std::size_t>();
    b.source_side = j.at("source_side").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::BadCheckpoint, std::string("model.json: ") + e.what());
  }
  b.model = build_mini_resnet<Real>(b.config, 0);
  const auto state = read_checkpoint(read_file(dir / "checkpoint.ervc"));
  load_model_state(b.model, state);
  return b;
}

// ---------------------------------------------------------------------------
// Image loading for training/evaluation.

Image16 fit_to_side(Image16 img, std::size_t side) {
  if (img.width() != img.height())
    fail(Errc::NotSquare, "images must be preprocessed to squares");
  if (img.width() == side) return img;
  if (img.width() < side)
    fail(Errc::BadInputShape, "image side " + std::to_string(img.width()) + " below " + std::to_string(side));
  return downsample_nn(img, side);
}

struct Selection {
  std::vector<RadiographRecord> records;
  LabeledImages data;
};

Selection select_split(const std::vector<RadiographRecord>& all, Split split, const fs::path& images,
                       std::size_t side) {
  Selection s;
  for (const auto& r : all)
    if (r.split == split) {
      s.records.push_back(r);
      s.data.images.push_back(fit_to_side(load_pgm16(images / r.file), side));
      s.data.labels.push_back(class_index(r.label));
    }
  return s;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_synth(const Common& common) {
  const RunConfig cfg = load_config(common);
  PhantomConfig pc;
  pc.side = cfg.get_size("synth.side");
  pc.marker_prob = cfg.get_double("synth.marker_prob");
  pc.redact_prob = cfg.get_double("synth.redact_prob");
  pc.asymmetry = cfg.get_double("synth.asymmetry");
  pc.noise = cfg.get_double("synth.noise");
  pc.seed = cfg.get_u64("seed");
  const auto corpus = generate_corpus(cfg.get_size("synth.sets"), pc);
  const fs::path out(common.out);
  std::vector<RadiographRecord> records;
  for (const auto& r : corpus) {
    save_pgm16(out / "images" / r.record.file, r.image);
    records.push_back(r.record);
  }
  write_text(out / "metadata.csv", write_metadata_csv(records));
  std::cerr << "synth: " << records.size() << " images in " << cfg.get_size("synth.sets") << " sets\n";
  return 0;
}

int cmd_ingest(const Common& common, const std::string& in_dir, bool skip_bad) {
  load_config(common);
  const fs::path in(in_dir), out(common.out);
  if (!fs::is_directory(in)) fail(Errc::Io, "not a directory: " + in_dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(in))
    if (e.is_regular_file() && e.path().extension() == ".dcm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<RadiographRecord> records;
  std::string rejected = "file,error\n";
  std::map<std::string, std::size_t> per_set;
  for (const auto& f : files) {
    const fs::path rel = fs::relative(f, in);
    try {
      const auto obj = dicom::load_dicom(f);
      const auto meta = dicom::extract_meta(obj);
      const Image16 img = dicom::extract_pixels(obj);
      RadiographRecord r;
      r.set_id = rel.has_parent_path() ? rel.begin()->string() : "unsorted";
      r.raw_view = meta.raw_view;
      r.label = standardize_view_name(meta.raw_view);
      r.file = r.set_id + "/" + std::to_string(per_set[r.set_id]++) + ".pgm";
      save_pgm16(out / "images" / r.file, img);
      records.push_back(r);
    } catch (const Error& e) {
      if (!skip_bad) throw Error(e.code(), rel.string() + ": " + e.what());
      std::cerr << "ingest: skipped " << rel.string() << ": " << e.what() << "\n";
      rejected += csv_escape(rel.string()) + "," + csv_escape(e.what()) + "\n";
    }
  }
  write_text(out / "metadata.csv", write_metadata_csv(records));
  write_text(out / "rejected.csv", rejected);
  std::cerr << "ingest: " << records.size() << " of " << files.size() << " files\n";
  return 0;
}

int cmd_audit(const Common& common, const std::string& metadata) {
  load_config(common);
  const auto audits = audit_all(load_metadata(metadata));
  std::string csv = "set_id,status,missing,duplicated\n";
  std::size_t complete = 0;
  auto join = [](const std::vector<ViewLabel>& ls) {
    std::string s;
    for (const auto& l : ls) s += (s.empty() ? "" : ";") + render(l);
    return s;
  };
  for (const auto& a : audits) {
    complete += a.status == SetStatus::Complete;
    csv += csv_escape(a.set_id) + "," + (a.status == SetStatus::Complete ? "COMPLETE" : "INCOMPLETE") + "," +
           csv_escape(join(a.missing)) + "," + csv_escape(join(a.duplicated)) + "\n";
  }
  write_text(fs::path(common.out) / "audit.csv", csv);
  std::cout << complete << " of " << audits.size() << " sets COMPLETE\n";
  return 0;
}

int cmd_preprocess(const Common& common, const std::string& metadata, const std::string& images) {
  const RunConfig cfg = load_config(common);
  const std::size_t side = cfg.get_size("preprocess.side");
  auto records = load_metadata(metadata);
  const fs::path out(common.out);
  for (auto& r : records) {
    const Image16 img = preprocess(load_pgm16(fs::path(images) / r.file), r.orientation, side);
    save_pgm16(out / "images" / r.file, img);
    r.orientation = {};
  }
  write_text(out / "metadata.csv", write_metadata_csv(records));
  return 0;
}

int cmd_split(const Common& common, const std::string& metadata) {
  const RunConfig cfg = load_config(common);
  auto records = load_metadata(metadata);
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.set_id);
  SplitCounts counts = proportional_counts(ids.size());
  if (cfg.is_set("split.train") || cfg.is_set("split.val") || cfg.is_set("split.test")) {
    counts.train = cfg.get_size("split.train");
    counts.val = cfg.get_size("split.val");
    counts.test = cfg.get_size("split.test");
  }
  const auto assignment = split_sets({ids.begin(), ids.end()}, counts, cfg.get_u64("seed"));
  for (auto& r : records) r.split = assignment.at(r.set_id);
  write_text(fs::path(common.out) / "metadata.csv", write_metadata_csv(records));
  std::cerr << "split: " << counts.train << "/" << counts.val << "/" << counts.test << " sets\n";
  return 0;
}

int cmd_train(const Common& common, const std::string& metadata, const std::string& images) {
  const RunConfig cfg = load_config(common);
  const MiniResNetConfig mc = model_config(cfg);
  const std::size_t src = source_side(cfg);
  TrainConfig tc;
  tc.epochs = cfg.get_size("train.epochs");
  tc.batch_size = cfg.get_size("train.batch_size");
  tc.optimizer.lr = cfg.get_double("train.lr");
  tc.optimizer.momentum = cfg.get_double("train.momentum");
  tc.augment_enabled = cfg.get_bool("train.augment");
  tc.augment.zoom_lo = cfg.get_double("augment.zoom_lo");
  tc.augment.zoom_hi = cfg.get_double("augment.zoom_hi");
  tc.augment.hist_points = cfg.get_size("augment.hist_points");
  tc.augment.hist_mag = cfg.get_double("augment.hist_mag");
  tc.augment.out_side = mc.input_side;
  tc.seed = cfg.get_u64("seed");
  tc.threads = cfg.get_size("threads");
  tc.validate();
  if (tc.augment_enabled && src < tc.augment.min_input_side())
    fail(Errc::BadConfig, "model.source_side must be >= " + std::to_string(tc.augment.min_input_side()));

  const auto records = load_metadata(metadata);
  const Selection train_sel = select_split(records, Split::Train, images, src);
  const Selection val_sel = select_split(records, Split::Val, images, src);
  Model<Real> model = build_mini_resnet<Real>(mc, tc.seed);

  const fs::path out(common.out);
  const TrainOutcome outcome = train(model, train_sel.data, val_sel.data, tc, [](const EpochRecord& r) {
    std::cerr << "epoch " << r.epoch << " loss " << r.train_loss << " train_acc " << r.train_acc
              << " val_acc " << r.val_acc << " (" << r.seconds << " s)\n";
  });
  nlohmann::ordered_json extra;
  extra["best_epoch"] = outcome.history.best_epoch;
  extra["best_val_acc"] = outcome.history.best_val_acc;
  extra["seed"] = tc.seed;
  save_bundle(out, mc, src, outcome.best_state, extra);
  write_text(out / "history.jsonl", history_jsonl(outcome.history));
  write_text(out / "history.csv", history_csv(outcome.history));
  write_text(out / "training_curves.svg", training_curves_svg(outcome.history));
  write_text(out / "config.ini", cfg.dump());
  return 0;
}

Split parse_split_flag(const std::string& s) {
  try {
    return parse_split(s);
  } catch (const Error& e) {
    fail(Errc::BadConfig, e.what());
  }
}

int cmd_evaluate(const Common& common, const std::string& metadata, const std::string& images,
                 const std::string& model_dir, const std::string& split_name) {
  const RunConfig cfg = load_config(common);
  const Split split = parse_split_flag(split_name);
  const Bundle b = load_bundle(model_dir);
  const Selection sel = select_split(load_metadata(metadata), split, images, b.source_side);
  if (sel.records.empty()) fail(Errc::EmptyDataset, "no records in split " + split_name);
  const Evaluation ev = evaluate(b.model, sel.data.images, cfg.get_size("threads"));
  const MetricsReport report = make_report(ev.predictions, ev.scores, sel.data.labels);
  const ConfusionMatrix cm = confusion(ev.predictions, sel.data.labels);

  const fs::path out(common.out);
  write_text(out / "metrics.json", report_json(report));
  write_text(out / "confusion.csv", confusion_csv(cm));
  write_text(out / "confusion.svg", confusion_svg(cm));
  std::string preds = "set_id,file,label,predicted,correct,has_marker,redacted\n";
  for (std::size_t i = 0; i < sel.records.size(); ++i) {
    const auto& r = sel.records[i];
    preds += csv_escape(r.set_id) + "," + csv_escape(r.file) + "," + render(r.label) + "," +
             render(label_at(ev.predictions[i])) + "," + (ev.predictions[i] == sel.data.labels[i] ? "1" : "0") +
             "," + (r.has_marker ? "1" : "0") + "," + (r.redacted ? "1" : "0") + "\n";
  }
  write_text(out / "predictions.csv", preds);
  std::cout << "top1 " << report.top1 << " auc " << report.auc_macro << " collapsed " << report.collapsed << "\n";
  return 0;
}

int cmd_stats(const Common& common, const std::string& predictions) {
  const RunConfig cfg = load_config(common);
  const bool yates = cfg.get_bool("stats.yates");
  const auto rows = parse_csv(read_text(predictions));
  const std::vector<std::string> header = {"set_id", "file", "label", "predicted", "correct", "has_marker", "redacted"};
  if (rows.empty() || rows.front() != header) fail(Errc::BadCsv, "unexpected predictions header");
  std::vector<FlaggedOutcome> marker, redaction;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != header.size()) fail(Errc::BadCsv, "row " + std::to_string(i) + ": wrong field count");
    auto flag = [&](const std::string& v) {
      if (v != "0" && v != "1") fail(Errc::BadCsv, "row " + std::to_string(i) + ": flag must be 0 or 1");
      return v == "1";
    };
    const ViewLabel label = parse_label(r[2]);
    const bool correct = flag(r[4]);
    marker.push_back({label, flag(r[5]), correct});
    redaction.push_back({label, flag(r[6]), correct});
  }
  const fs::path out(common.out);
  write_text(out / "association_marker.csv", association_csv(association_by_label(marker, yates)));
  write_text(out / "association_redaction.csv", association_csv(association_by_label(redaction, yates)));
  nlohmann::ordered_json j;
  for (const auto& [name, data] : {std::pair{"side_marker", &marker}, std::pair{"redaction", &redaction}}) {
    const OverallAssociation o = overall_association(*data, yates);
    nlohmann::ordered_json e;
    const auto count = [](double v) { return static_cast<long long>(std::llround(v)); };
    e["n"] = count(o.table.n());
    e["table"] = {count(o.table.a), count(o.table.b), count(o.table.c), count(o.table.d)};
    e["yates"] = yates;
    e["chi2"] = o.chi2;
    e["p_value"] = o.p_value ? nlohmann::ordered_json(*o.p_value) : nullptr;
    e["phi"] = o.phi ? nlohmann::ordered_json(*o.phi) : nullptr;
    j[name] = e;
  }
  write_text(out / "association_summary.json", j.dump(2) + "\n");
  return 0;
}

int cmd_cam(const Common& common, const std::string& metadata, const std::string& images,
            const std::string& model_dir, const std::string& split_name) {
  const RunConfig cfg = load_config(common);
  const Split split = parse_split_flag(split_name);
  const Bundle b = load_bundle(model_dir);
  const std::size_t count = cfg.get_size("cam.count");
  const std::size_t side = b.config.input_side, ch = b.config.input_channels;
  const fs::path out(common.out);
  std::size_t done = 0;
  std::string index = "file,label,predicted,overlay,grid\n";
  for (const auto& r : load_metadata(metadata)) {
    if (done == count) break;
    if (r.split != split) continue;
    const Image16 img = fit_to_side(load_pgm16(fs::path(images) / r.file), b.source_side);
    const Tensor<Real> x = image_to_input<Real>(img, ch, side);
    const Tensor<Real> probs = softmax(b.model.infer([&] {
      Tensor<Real> batch = x;
      batch.reshape({1, ch, side, side});
      return batch;
    }()));
    std::vector<double> row(probs.data(), probs.data() + probs.size());
    const std::size_t pred = argmax_lowest(row);
    const CamMap cam = compute_cam(b.model, x, pred);
    const Tensor<double> gray = center_crop_normalized<double>(img, side);
    const std::string stem = "cam_" + std::to_string(done);
    write_file(out / (stem + ".ppm"),
               write_ppm(render_overlay(cam, std::span<const double>(gray.data(), gray.size()), side)));
    write_text(out / (stem + ".csv"), cam_grid_csv(cam));
    index += csv_escape(r.file) + "," + render(r.label) + "," + render(label_at(pred)) + "," + stem + ".ppm," +
             stem + ".csv\n";
    ++done;
  }
  write_text(out / "cam_index.csv", index);
  return 0;
}

int cmd_arch_info(const Common& common, std::size_t classes, std::size_t channels) {
  load_config(common);
  const std::string csv = arch_info_csv(classes, channels);
  if (!common.out.empty()) write_text(fs::path(common.out) / "arch_info.csv", csv);
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // Large activation buffers are allocated and freed every step; keep them on
  // the heap instead of round-tripping through mmap.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);

  CLI::App app{"Equine radiograph view classification pipeline"};
  app.require_subcommand(1);
  Common common;
  std::string in_dir, metadata, images, model_dir, predictions, split_name = "TEST";
  bool skip_bad = false;
  std::size_t classes = 1000, channels = 3;

  auto* ingest = app.add_subcommand("ingest", "DICOM directory -> PGM images + metadata CSV");
  common_options(ingest, common, true);
  ingest->add_option("--in", in_dir, "directory of .dcm files, one subdirectory per set")->required();
  ingest->add_flag("--skip-bad", skip_bad, "skip unreadable files instead of failing");

  auto* audit = app.add_subcommand("audit", "set completeness report");
  common_options(audit, common, true);
  audit->add_option("--metadata", metadata)->required();

  auto* prep = app.add_subcommand("preprocess", "orient, square and downsample images");
  common_options(prep, common, true);
  prep->add_option("--metadata", metadata)->required();
  prep->add_option("--images", images)->required();
  key_option(prep, common, "--side", "preprocess.side");

  auto* split = app.add_subcommand("split", "assign sets to TRAIN/VAL/TEST");
  common_options(split, common, true);
  split->add_option("--metadata", metadata)->required();
  key_option(split, common, "--train", "split.train");
  key_option(split, common, "--val", "split.val");
  key_option(split, common, "--test", "split.test");

  auto* synth = app.add_subcommand("synth", "generate a phantom corpus");
  common_options(synth, common, true);
  key_option(synth, common, "--sets", "synth.sets");
  key_option(synth, common, "--side", "synth.side");
  key_option(synth, common, "--marker-prob", "synth.marker_prob");
  key_option(synth, common, "--redact-prob", "synth.redact_prob");
  key_option(synth, common, "--asymmetry", "synth.asymmetry");
  key_option(synth, common, "--noise", "synth.noise");

  auto* trn = app.add_subcommand("train", "train a mini-ResNet");
  common_options(trn, common, true);
  trn->add_option("--metadata", metadata)->required();
  trn->add_option("--images", images)->required();
  key_option(trn, common, "--epochs", "train.epochs");
  key_option(trn, common, "--batch-size", "train.batch_size");
  key_option(trn, common, "--lr", "train.lr");
  key_option(trn, common, "--momentum", "train.momentum");
  key_option(trn, common, "--augment", "train.augment");
  key_option(trn, common, "--stage-blocks", "model.stage_blocks");
  key_option(trn, common, "--base-channels", "model.base_channels");
  key_option(trn, common, "--input-side", "model.input_side");
  key_option(trn, common, "--input-channels", "model.input_channels");
  key_option(trn, common, "--source-side", "model.source_side");

  auto* eval = app.add_subcommand("evaluate", "metrics report for one split");
  common_options(eval, common, true);
  eval->add_option("--metadata", metadata)->required();
  eval->add_option("--images", images)->required();
  eval->add_option("--model", model_dir, "directory written by train")->required();
  eval->add_option("--split", split_name, "TRAIN, VAL or TEST");

  auto* cam = app.add_subcommand("cam", "class activation map overlays");
  common_options(cam, common, true);
  cam->add_option("--metadata", metadata)->required();
  cam->add_option("--images", images)->required();
  cam->add_option("--model", model_dir)->required();
  cam->add_option("--split", split_name);
  key_option(cam, common, "--count", "cam.count");

  auto* stats = app.add_subcommand("stats", "marker/redaction association tests");
  common_options(stats, common, true);
  stats->add_option("--predictions", predictions, "predictions.csv from evaluate")->required();
  key_option(stats, common, "--yates", "stats.yates");

  auto* arch = app.add_subcommand("arch-info", "parameter counts of the reference architectures");
  common_options(arch, common, false);
  arch->add_option("--classes", classes);
  arch->add_option("--channels", channels);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*ingest) return cmd_ingest(common, in_dir, skip_bad);
    if (*audit) return cmd_audit(common, metadata);
    if (*prep) return cmd_preprocess(common, metadata, images);
    if (*split) return cmd_split(common, metadata);
    if (*synth) return cmd_synth(common);
    if (*trn) return cmd_train(common, metadata, images);
    if (*eval) return cmd_evaluate(common, metadata, images, model_dir, split_name);
    if (*cam) return cmd_cam(common, metadata, images, model_dir, split_name);
    if (*stats) return cmd_stats(common, predictions);
    if (*arch) return cmd_arch_info(common, classes, channels);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const bool usage = e.code() == Errc::BadConfig || e.code() == Errc::UnknownArchitecture;
    return usage ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
