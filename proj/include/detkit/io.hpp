#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "detkit/augment.hpp"
#include "detkit/ensemble.hpp"
#include "detkit/eval.hpp"
#include "detkit/fusion.hpp"
#include "detkit/geometry.hpp"

namespace detkit {

/// Ordered class names <-> ids. "p-gap" and "probable gap" are aliases of
/// one class; lookups normalize case, spaces, and hyphens.
class ClassRegistry {
 public:
  explicit ClassRegistry(std::vector<std::string> names);

  /// The five line-space-pattern defect classes, ids 0-4.
  static ClassRegistry default_registry();

  int id_of(const std::string& name) const;       // throws UnknownClass
  const std::string& name_of(int class_id) const; // throws UnknownClass
  bool contains(int class_id) const noexcept;
  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::vector<int> ids() const;

 private:
  std::vector<std::string> names_;
  std::map<std::string, int> index_;  // normalized name -> id
};

// ---- YOLO text formats ----------------------------------------------------

/// Parses `class cx cy w h` lines into ground truth in absolute pixels.
std::vector<GroundTruth> parse_yolo_labels(const std::string& text, ImageSize size,
                                           const ClassRegistry& registry,
                                           const std::string& image_id = "");

/// Parses `class cx cy w h confidence` lines into detections.
std::vector<Detection> parse_predictions(const std::string& text, ImageSize size,
                                         const ClassRegistry& registry,
                                         const std::string& model_id = "");

std::string serialize_labels(const std::vector<GroundTruth>& gts, ImageSize size);
std::string serialize_predictions(const std::vector<Detection>& dets, ImageSize size);

/// COCO-style detection JSON: [ {image_id, category_id, bbox:[x,y,w,h],
/// score} ] with absolute-pixel boxes; category_id is the registry class id.
PredictionsByImage parse_coco_predictions(const std::string& json_text,
                                          const ClassRegistry& registry,
                                          const std::string& model_id = "");

// ---- dataset manifest ------------------------------------------------------

enum class Split { Train, Validation, Test };

const char* to_string(Split split) noexcept;
Split split_from_string(const std::string& name);

struct DatasetEntry {
  std::filesystem::path image;
  std::filesystem::path labels;
  ImageSize size;
};

/// Versioned JSON document listing images, label files, and sizes per split.
struct DatasetManifest {
  ClassRegistry registry = ClassRegistry::default_registry();
  std::map<Split, std::vector<DatasetEntry>> splits;
};

DatasetManifest load_dataset_manifest(const std::filesystem::path& path);
void save_dataset_manifest(const DatasetManifest& manifest,
                           const std::filesystem::path& path);

// ---- dataset statistics ----------------------------------------------------

struct SplitStats {
  int image_count = 0;
  std::map<int, int> instances_by_class;
  int total_instances = 0;
};

/// Reads every label file in the manifest and counts images and per-class
/// instances per split, the shape of a dataset-statistics table.
std::map<Split, SplitStats> dataset_stats(const DatasetManifest& manifest);

std::string render_stats_markdown(const std::map<Split, SplitStats>& stats,
                                  const ClassRegistry& registry);
std::string render_stats_csv(const std::map<Split, SplitStats>& stats,
                             const ClassRegistry& registry);

// ---- sweep manifest ---------------------------------------------------------

/// One trained variant in a hyperparameter sweep. The hyperparameter/value
/// fields are metadata strings; reports carry the per-class APs selection
/// operates on.
struct SweepRun {
  std::string model_id;
  std::string category;        // "baseline", "weights-learning", "data-augmentation"
  std::string hyperparameter;
  std::string value;
  std::string prediction_dir;
  std::string notes;
  std::optional<EvalReport> validation_report;
  std::optional<EvalReport> test_report;
};

struct SweepManifest {
  ClassRegistry registry = ClassRegistry::default_registry();
  std::vector<SweepRun> runs;
};

SweepManifest load_sweep_manifest(const std::filesystem::path& path);

/// Model runs (reports only, no predictions) for ensemble selection.
std::vector<ModelRun> sweep_model_runs(const SweepManifest& manifest);

// ---- report serialization and rendering -------------------------------------

std::string report_to_json(const EvalReport& report, const ClassRegistry& registry,
                           Interpolation interp = Interpolation::AllPoint);
EvalReport report_from_json(const std::string& json_text, const ClassRegistry& registry);

/// EvalReport plus the row label used in rendered tables.
struct ReportDoc {
  std::string label;
  EvalReport report;
};

struct RenderedReport {
  std::string markdown;
  std::string csv;
};

/// One row per run, per-class AP columns then mAP, 3-decimal values.
/// In markdown, a baseline value is bold when no other row beats it and any
/// other value is bold when it strictly beats the baseline (compared at the
/// rendered precision). Throws MixedThresholds when the reports disagree on
/// the IoU threshold.
RenderedReport render_report(const std::vector<ReportDoc>& reports,
                             const std::string& baseline_label,
                             const ClassRegistry& registry);

// ---- ensemble spec ----------------------------------------------------------

std::string ensemble_spec_to_json(const EnsembleSpec& spec);
EnsembleSpec ensemble_spec_from_json(const std::string& json_text);

// ---- augmentation pipeline config ---------------------------------------------

std::string pipeline_to_json(const AugmentPipeline& pipeline);
AugmentPipeline pipeline_from_json(const std::string& json_text);

// ---- plain file helpers --------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace detkit
