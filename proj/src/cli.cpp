#include "detkit/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "detkit/augment.hpp"
#include "detkit/ensemble.hpp"
#include "detkit/error.hpp"
#include "detkit/eval.hpp"
#include "detkit/fusion.hpp"
#include "detkit/image.hpp"
#include "detkit/io.hpp"
#include "detkit/util.hpp"

namespace detkit {

namespace {

namespace fs = std::filesystem;

// Prediction and label files carry normalized coordinates. Fusing and
// evaluating in the unit frame matches any pixel frame: IoU and the fused
// weighted means are invariant under per-axis scaling.
constexpr ImageSize kUnitFrame{1, 1};

std::string dir_label(const fs::path& dir) {
  fs::path clean = dir.lexically_normal();
  if (clean.filename().empty()) clean = clean.parent_path();
  const std::string name = clean.filename().string();
  return name.empty() ? clean.string() : name;
}

std::map<std::string, fs::path> list_txt_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    fail(ErrorKind::IoError, "'" + dir.string() + "' is not a directory");
  }
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      out[entry.path().stem().string()] = entry.path();
    }
  }
  return out;
}

GroundTruthByImage load_gt_dir(const fs::path& dir, const ClassRegistry& registry) {
  GroundTruthByImage out;
  for (const auto& [stem, path] : list_txt_files(dir)) {
    try {
      out[stem] = parse_yolo_labels(read_text_file(path), kUnitFrame, registry, stem);
    } catch (const Error& e) {
      fail(e.kind(), path.string() + ": " + e.message());
    }
  }
  return out;
}

PredictionsByImage load_pred_dir(const fs::path& dir, const ClassRegistry& registry,
                                 const std::string& model_id) {
  PredictionsByImage out;
  for (const auto& [stem, path] : list_txt_files(dir)) {
    try {
      out[stem] = parse_predictions(read_text_file(path), kUnitFrame, registry, model_id);
    } catch (const Error& e) {
      fail(e.kind(), path.string() + ": " + e.message());
    }
  }
  return out;
}

std::map<std::string, double> parse_weight_flags(const std::vector<std::string>& flags) {
  std::map<std::string, double> out;
  for (const std::string& flag : flags) {
    const std::size_t eq = flag.find('=');
    if (eq == std::string::npos || eq == 0) {
      fail(ErrorKind::InvalidParams, "--weight expects model=value, got '" + flag + "'");
    }
    try {
      out[flag.substr(0, eq)] = std::stod(flag.substr(eq + 1));
    } catch (const std::exception&) {
      fail(ErrorKind::InvalidParams, "bad weight value in '" + flag + "'");
    }
  }
  return out;
}

ClassRegistry registry_from_flag(const std::string& classes_csv) {
  if (classes_csv.empty()) return ClassRegistry::default_registry();
  std::vector<std::string> names;
  std::string token;
  std::istringstream stream(classes_csv);
  while (std::getline(stream, token, ',')) {
    if (!token.empty()) names.push_back(token);
  }
  return ClassRegistry(std::move(names));
}

void print_report(const EvalReport& report, const ClassRegistry& registry) {
  std::printf("IoU threshold %s\n", format_fixed(report.iou_threshold, 3).c_str());
  for (const ClassAp& entry : report.per_class) {
    std::printf("AP %-16s %s  (gt %d, preds %d)\n",
                registry.name_of(entry.class_id).c_str(),
                format_fixed(entry.ap, 3).c_str(), entry.gt_count, entry.prediction_count);
  }
  std::printf("mAP %s\n", format_fixed(report.map, 3).c_str());
}

void write_report_outputs(const EvalReport& report, const ClassRegistry& registry,
                          Interpolation interp, const std::string& label,
                          const std::string& json_path, const std::string& md_path,
                          const std::string& csv_path) {
  if (!json_path.empty()) {
    write_text_file(json_path, report_to_json(report, registry, interp));
  }
  if (!md_path.empty() || !csv_path.empty()) {
    const RenderedReport rendered =
        render_report({ReportDoc{label, report}}, label, registry);
    if (!md_path.empty()) write_text_file(md_path, rendered.markdown);
    if (!csv_path.empty()) write_text_file(csv_path, rendered.csv);
  }
}

// ---- fuse -------------------------------------------------------------------

struct FuseOptions {
  std::string method = "nms";
  double iou = -1.0;  // <0: method default
  double skip = 0.0;
  std::vector<std::string> pred_dirs;
  std::vector<std::string> weight_flags;
  std::string out_dir;
  std::string classes;
};

int run_fuse(const FuseOptions& opt) {
  const ClassRegistry registry = registry_from_flag(opt.classes);
  FusionParams params;
  params.method = opt.method == "wbf" ? FusionMethod::Wbf : FusionMethod::Nms;
  params.iou_threshold = opt.iou >= 0.0 ? opt.iou
                         : params.method == FusionMethod::Wbf ? kDefaultWbfIouThreshold
                                                              : kDefaultNmsIouThreshold;
  params.skip_confidence = opt.skip;
  params.model_weights = parse_weight_flags(opt.weight_flags);
  params.model_count = static_cast<int>(opt.pred_dirs.size());
  validate_params(params);

  std::vector<std::pair<std::string, PredictionsByImage>> models;
  std::set<std::string> images;
  for (const std::string& dir : opt.pred_dirs) {
    const std::string model_id = dir_label(dir);
    PredictionsByImage preds = load_pred_dir(dir, registry, model_id);
    for (const auto& [image, list] : preds) images.insert(image);
    models.emplace_back(model_id, std::move(preds));
  }

  fs::create_directories(opt.out_dir);
  for (const std::string& image : images) {
    std::vector<Detection> pooled;
    for (const auto& [model_id, preds] : models) {
      auto it = preds.find(image);
      if (it != preds.end()) pooled.insert(pooled.end(), it->second.begin(), it->second.end());
    }
    const std::vector<Detection> fused = combine(std::move(pooled), params);
    write_text_file(fs::path(opt.out_dir) / (image + ".txt"),
                    serialize_predictions(fused, kUnitFrame));
  }
  std::printf("fused %zu image(s) from %zu model(s) -> %s\n", images.size(), models.size(),
              opt.out_dir.c_str());
  return 0;
}

// ---- eval ---------------------------------------------------------------------

struct EvalOptions {
  std::string pred_dir;
  std::string coco_json;
  std::string gt_dir;
  double iou = 0.5;
  std::string interp = "all-point";
  std::string classes;
  std::string label = "model";
  std::string json_path;
  std::string md_path;
  std::string csv_path;
};

int run_eval(const EvalOptions& opt) {
  const ClassRegistry registry = registry_from_flag(opt.classes);
  const Interpolation interp = interpolation_from_string(opt.interp);
  const GroundTruthByImage gts = load_gt_dir(opt.gt_dir, registry);

  PredictionsByImage preds;
  if (!opt.coco_json.empty()) {
    preds = parse_coco_predictions(read_text_file(opt.coco_json), registry, opt.label);
  } else if (!opt.pred_dir.empty()) {
    preds = load_pred_dir(opt.pred_dir, registry, "");
  } else {
    fail(ErrorKind::InvalidParams, "eval needs --preds or --coco");
  }

  const EvalReport report = evaluate(preds, gts, opt.iou, registry.ids(), interp);
  print_report(report, registry);
  write_report_outputs(report, registry, interp, opt.label, opt.json_path, opt.md_path,
                       opt.csv_path);
  return 0;
}

// ---- ensemble -------------------------------------------------------------------

struct EnsembleOptions {
  std::vector<std::string> pred_dirs;
  std::string gt_dir;
  std::string method = "wbf";
  double iou = -1.0;
  double skip = 0.0;
  std::vector<std::string> weight_flags;
  double eval_iou = 0.5;
  std::string interp = "all-point";
  std::string classes;
  std::string label = "ensemble";
  std::string json_path;
  std::string md_path;
  std::string csv_path;
  std::string dump_dir;
};

int run_ensemble(const EnsembleOptions& opt) {
  const ClassRegistry registry = registry_from_flag(opt.classes);
  const Interpolation interp = interpolation_from_string(opt.interp);
  const GroundTruthByImage gts = load_gt_dir(opt.gt_dir, registry);

  EnsembleSpec spec;
  spec.fusion.method = opt.method == "nms" ? FusionMethod::Nms : FusionMethod::Wbf;
  spec.fusion.iou_threshold = opt.iou >= 0.0 ? opt.iou
                              : spec.fusion.method == FusionMethod::Wbf
                                  ? kDefaultWbfIouThreshold
                                  : kDefaultNmsIouThreshold;
  spec.fusion.skip_confidence = opt.skip;
  spec.fusion.model_weights = parse_weight_flags(opt.weight_flags);
  spec.fusion.model_count = static_cast<int>(opt.pred_dirs.size());
  validate_params(spec.fusion);

  std::vector<ModelRun> runs;
  std::set<std::string> images;
  for (const auto& [image, list] : gts) images.insert(image);
  for (const std::string& dir : opt.pred_dirs) {
    ModelRun run;
    run.model_id = dir_label(dir);
    run.predictions = load_pred_dir(dir, registry, run.model_id);
    for (const auto& [image, list] : run.predictions) images.insert(image);
    spec.member_ids.push_back(run.model_id);
    runs.push_back(std::move(run));
  }
  // Align every run on the full image set so pooling sees an entry (possibly
  // empty) for each image.
  for (ModelRun& run : runs) {
    for (const std::string& image : images) run.predictions.try_emplace(image);
  }

  const EvalReport report =
      evaluate_ensemble(spec, runs, gts, opt.eval_iou, registry.ids(), interp);
  print_report(report, registry);
  write_report_outputs(report, registry, interp, opt.label, opt.json_path, opt.md_path,
                       opt.csv_path);

  if (!opt.dump_dir.empty()) {
    fs::create_directories(opt.dump_dir);
    for (const std::string& image : images) {
      const std::vector<Detection> fused =
          combine(pool_predictions(runs, image), spec.fusion);
      write_text_file(fs::path(opt.dump_dir) / (image + ".txt"),
                      serialize_predictions(fused, kUnitFrame));
    }
  }
  return 0;
}

// ---- select ----------------------------------------------------------------------

struct SelectOptions {
  std::string sweep_path;
  std::string baseline;
  double margin = 0.005;
  std::string split = "prefer-test";
  std::string out_path;
};

int run_select(const SelectOptions& opt) {
  const SweepManifest manifest = load_sweep_manifest(opt.sweep_path);
  SelectionSplit split = SelectionSplit::PreferTest;
  if (opt.split == "test") {
    split = SelectionSplit::Test;
  } else if (opt.split == "validation") {
    split = SelectionSplit::Validation;
  } else if (opt.split != "prefer-test") {
    fail(ErrorKind::InvalidParams, "unknown split '" + opt.split + "'");
  }

  const std::vector<ModelRun> runs = sweep_model_runs(manifest);
  const SelectionResult result =
      select_per_class_best(runs, SelectionPolicy{opt.margin, opt.baseline}, split);

  std::printf("per-class winners (margin %s over baseline '%s'):\n",
              format_fixed(opt.margin, 3).c_str(), opt.baseline.c_str());
  for (const ClassWinner& winner : result.winners) {
    std::printf("  %-16s %-24s AP %s vs baseline %s -> %s\n",
                manifest.registry.name_of(winner.class_id).c_str(),
                winner.model_id.c_str(), format_fixed(winner.ap, 3).c_str(),
                format_fixed(winner.baseline_ap, 3).c_str(),
                winner.selected ? "selected" : "kept baseline");
  }
  std::printf("members:");
  for (const std::string& id : result.spec.member_ids) std::printf(" %s", id.c_str());
  std::printf("\n");

  if (!opt.out_path.empty()) {
    write_text_file(opt.out_path, ensemble_spec_to_json(result.spec));
  }
  return 0;
}

// ---- stats -----------------------------------------------------------------------

struct StatsOptions {
  std::string manifest_path;
  std::string md_path;
  std::string csv_path;
};

int run_stats(const StatsOptions& opt) {
  const DatasetManifest manifest = load_dataset_manifest(opt.manifest_path);
  const auto stats = dataset_stats(manifest);
  const std::string markdown = render_stats_markdown(stats, manifest.registry);
  std::fputs(markdown.c_str(), stdout);
  if (!opt.md_path.empty()) write_text_file(opt.md_path, markdown);
  if (!opt.csv_path.empty()) {
    write_text_file(opt.csv_path, render_stats_csv(stats, manifest.registry));
  }
  return 0;
}

// ---- report ------------------------------------------------------------------------

struct ReportOptions {
  std::vector<std::string> entries;  // label=report.json
  std::string baseline;
  std::string classes;
  std::string md_path;
  std::string csv_path;
};

int run_report(const ReportOptions& opt) {
  const ClassRegistry registry = registry_from_flag(opt.classes);
  std::vector<ReportDoc> docs;
  for (const std::string& entry : opt.entries) {
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos || eq == 0) {
      fail(ErrorKind::InvalidParams, "expected label=report.json, got '" + entry + "'");
    }
    ReportDoc doc;
    doc.label = entry.substr(0, eq);
    doc.report = report_from_json(read_text_file(entry.substr(eq + 1)), registry);
    docs.push_back(std::move(doc));
  }
  const std::string baseline = opt.baseline.empty() ? docs.front().label : opt.baseline;
  const RenderedReport rendered = render_report(docs, baseline, registry);
  std::fputs(rendered.markdown.c_str(), stdout);
  if (!opt.md_path.empty()) write_text_file(opt.md_path, rendered.markdown);
  if (!opt.csv_path.empty()) write_text_file(opt.csv_path, rendered.csv);
  return 0;
}

// ---- augment ------------------------------------------------------------------------

struct AugmentOptions {
  std::string manifest_path;
  std::string split = "train";
  std::string pipeline_path;
  std::string out_dir;
  long long seed = -1;  // <0: pipeline file seed
  std::string resample = "nearest";
};

std::string serialize_box_labels(const std::vector<BoxLabel>& labels) {
  std::string out;
  char line[160];
  for (const BoxLabel& label : labels) {
    std::snprintf(line, sizeof(line), "%d %.6f %.6f %.6f %.6f\n", label.class_id,
                  label.box.cx, label.box.cy, label.box.w, label.box.h);
    out += line;
  }
  return out;
}

int run_augment(const AugmentOptions& opt) {
  const DatasetManifest manifest = load_dataset_manifest(opt.manifest_path);
  AugmentPipeline pipeline = pipeline_from_json(read_text_file(opt.pipeline_path));
  if (opt.seed >= 0) pipeline.seed = static_cast<std::uint64_t>(opt.seed);
  const Resample resample =
      opt.resample == "bilinear" ? Resample::Bilinear : Resample::Nearest;

  const Split split = split_from_string(opt.split);
  auto split_it = manifest.splits.find(split);
  if (split_it == manifest.splits.end() || split_it->second.empty()) {
    fail(ErrorKind::EmptyDataset, "split '" + opt.split + "' has no entries");
  }

  std::vector<LabeledImage> dataset;
  dataset.reserve(split_it->second.size());
  for (const DatasetEntry& entry : split_it->second) {
    LabeledImage item;
    item.image = read_png(entry.image);
    if (item.image.width != entry.size.width || item.image.height != entry.size.height) {
      fail(ErrorKind::SizeMismatch, entry.image.string() + " is " +
                                        std::to_string(item.image.width) + "x" +
                                        std::to_string(item.image.height) +
                                        " but the manifest says " +
                                        std::to_string(entry.size.width) + "x" +
                                        std::to_string(entry.size.height));
    }
    item.image_id = entry.image.stem().string();
    const auto gts =
        parse_yolo_labels(read_text_file(entry.labels), entry.size, manifest.registry);
    for (const GroundTruth& gt : gts) {
      item.labels.push_back(BoxLabel{gt.class_id, to_normalized(gt.box, entry.size)});
    }
    dataset.push_back(std::move(item));
  }

  const std::vector<LabeledImage> augmented = apply_pipeline(dataset, pipeline, resample);

  const fs::path out_root(opt.out_dir);
  fs::create_directories(out_root / "images");
  fs::create_directories(out_root / "labels");
  DatasetManifest out_manifest;
  out_manifest.registry = manifest.registry;
  for (const LabeledImage& item : augmented) {
    const fs::path image_path = out_root / "images" / (item.image_id + ".png");
    const fs::path label_path = out_root / "labels" / (item.image_id + ".txt");
    write_png(item.image, image_path);
    write_text_file(label_path, serialize_box_labels(item.labels));
    out_manifest.splits[split].push_back(
        DatasetEntry{image_path, label_path, ImageSize{item.image.width, item.image.height}});
  }
  save_dataset_manifest(out_manifest, out_root / "manifest.json");
  std::printf("augmented %zu image(s) with seed %llu -> %s\n", augmented.size(),
              static_cast<unsigned long long>(pipeline.seed), opt.out_dir.c_str());
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Detection post-processing toolkit: prediction fusion, evaluation, "
               "ensembling, and label-aware augmentation"};
  app.require_subcommand(1);

  FuseOptions fuse_opt;
  CLI::App* fuse_cmd = app.add_subcommand("fuse", "Combine predictions with NMS or WBF");
  fuse_cmd->add_option("--method", fuse_opt.method, "nms or wbf")
      ->check(CLI::IsMember({"nms", "wbf"}));
  fuse_cmd->add_option("--iou", fuse_opt.iou, "IoU threshold (default 0.45 nms / 0.55 wbf)");
  fuse_cmd->add_option("--skip", fuse_opt.skip, "WBF skip confidence");
  fuse_cmd->add_option("--preds", fuse_opt.pred_dirs, "prediction directories, one per model")
      ->required();
  fuse_cmd->add_option("--weight", fuse_opt.weight_flags, "model=weight (repeatable)");
  fuse_cmd->add_option("--out", fuse_opt.out_dir, "output directory")->required();
  fuse_cmd->add_option("--classes", fuse_opt.classes, "comma-separated class names");

  EvalOptions eval_opt;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Per-class AP and mAP against labels");
  eval_cmd->add_option("--preds", eval_opt.pred_dir, "prediction directory");
  eval_cmd->add_option("--coco", eval_opt.coco_json, "COCO-style detection JSON file");
  eval_cmd->add_option("--gt", eval_opt.gt_dir, "ground-truth label directory")->required();
  eval_cmd->add_option("--iou", eval_opt.iou, "matching IoU threshold (default 0.5)");
  eval_cmd->add_option("--interp", eval_opt.interp, "all-point or voc11")
      ->check(CLI::IsMember({"all-point", "voc11"}));
  eval_cmd->add_option("--classes", eval_opt.classes, "comma-separated class names");
  eval_cmd->add_option("--label", eval_opt.label, "row label for rendered tables");
  eval_cmd->add_option("--json", eval_opt.json_path, "write report JSON here");
  eval_cmd->add_option("--md,--report", eval_opt.md_path, "write markdown table here");
  eval_cmd->add_option("--csv", eval_opt.csv_path, "write CSV table here");

  EnsembleOptions ens_opt;
  CLI::App* ens_cmd =
      app.add_subcommand("ensemble", "Pool N models, fuse, and evaluate the ensemble");
  ens_cmd->add_option("--preds", ens_opt.pred_dirs, "prediction directories, one per member")
      ->required();
  ens_cmd->add_option("--gt", ens_opt.gt_dir, "ground-truth label directory")->required();
  ens_cmd->add_option("--method", ens_opt.method, "nms or wbf")
      ->check(CLI::IsMember({"nms", "wbf"}));
  ens_cmd->add_option("--iou", ens_opt.iou, "fusion IoU threshold");
  ens_cmd->add_option("--skip", ens_opt.skip, "WBF skip confidence");
  ens_cmd->add_option("--weight", ens_opt.weight_flags, "model=weight (repeatable)");
  ens_cmd->add_option("--eval-iou", ens_opt.eval_iou, "matching IoU threshold (default 0.5)");
  ens_cmd->add_option("--interp", ens_opt.interp, "all-point or voc11")
      ->check(CLI::IsMember({"all-point", "voc11"}));
  ens_cmd->add_option("--classes", ens_opt.classes, "comma-separated class names");
  ens_cmd->add_option("--label", ens_opt.label, "row label for rendered tables");
  ens_cmd->add_option("--json", ens_opt.json_path, "write report JSON here");
  ens_cmd->add_option("--md,--report", ens_opt.md_path, "write markdown table here");
  ens_cmd->add_option("--csv", ens_opt.csv_path, "write CSV table here");
  ens_cmd->add_option("--dump", ens_opt.dump_dir, "also write fused predictions here");

  SelectOptions sel_opt;
  CLI::App* sel_cmd =
      app.add_subcommand("select", "Pick ensemble members by per-class-best AP");
  sel_cmd->add_option("--sweep", sel_opt.sweep_path, "sweep manifest JSON")->required();
  sel_cmd->add_option("--baseline", sel_opt.baseline, "baseline model id")->required();
  sel_cmd->add_option("--margin", sel_opt.margin, "AP advantage required (default 0.005)");
  sel_cmd->add_option("--split", sel_opt.split, "prefer-test, test, or validation")
      ->check(CLI::IsMember({"prefer-test", "test", "validation"}));
  sel_cmd->add_option("--out", sel_opt.out_path, "write the ensemble spec JSON here");

  StatsOptions stats_opt;
  CLI::App* stats_cmd = app.add_subcommand("stats", "Dataset statistics per split");
  stats_cmd->add_option("--manifest", stats_opt.manifest_path, "dataset manifest JSON")
      ->required();
  stats_cmd->add_option("--md", stats_opt.md_path, "write markdown table here");
  stats_cmd->add_option("--csv", stats_opt.csv_path, "write CSV table here");

  ReportOptions rep_opt;
  CLI::App* rep_cmd = app.add_subcommand("report", "Render stored reports as one table");
  rep_cmd->add_option("entries", rep_opt.entries, "label=report.json (repeatable)")
      ->required();
  rep_cmd->add_option("--baseline", rep_opt.baseline, "baseline label (default: first)");
  rep_cmd->add_option("--classes", rep_opt.classes, "comma-separated class names");
  rep_cmd->add_option("--md", rep_opt.md_path, "write markdown table here");
  rep_cmd->add_option("--csv", rep_opt.csv_path, "write CSV table here");

  AugmentOptions aug_opt;
  CLI::App* aug_cmd = app.add_subcommand("augment", "Generate an augmented dataset");
  aug_cmd->add_option("--manifest", aug_opt.manifest_path, "dataset manifest JSON")
      ->required();
  aug_cmd->add_option("--split", aug_opt.split, "split to augment (default train)");
  aug_cmd->add_option("--pipeline", aug_opt.pipeline_path, "pipeline config JSON")
      ->required();
  aug_cmd->add_option("--out", aug_opt.out_dir, "output directory")->required();
  aug_cmd->add_option("--seed", aug_opt.seed, "override the pipeline seed");
  aug_cmd->add_option("--resample", aug_opt.resample, "nearest or bilinear")
      ->check(CLI::IsMember({"nearest", "bilinear"}));

  try {
    app.parse(argc, argv);
    if (app.got_subcommand(fuse_cmd)) return run_fuse(fuse_opt);
    if (app.got_subcommand(eval_cmd)) return run_eval(eval_opt);
    if (app.got_subcommand(ens_cmd)) return run_ensemble(ens_opt);
    if (app.got_subcommand(sel_cmd)) return run_select(sel_opt);
    if (app.got_subcommand(stats_cmd)) return run_stats(stats_opt);
    if (app.got_subcommand(rep_cmd)) return run_report(rep_opt);
    if (app.got_subcommand(aug_cmd)) return run_augment(aug_opt);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace detkit
