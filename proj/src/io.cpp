#include "detkit/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "detkit/error.hpp"
#include "detkit/util.hpp"
#include "json.hpp"

namespace detkit {

namespace {

using nlohmann::json;

std::string normalize_class_name(const std::string& name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    if (c == ' ' || c == '-') {
      out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

// Alternate spellings that must resolve to one class.
const std::map<std::string, std::string>& class_aliases() {
  static const std::map<std::string, std::string> aliases = {
      {"probable_gap", "p_gap"},
  };
  return aliases;
}

}  // namespace

ClassRegistry::ClassRegistry(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) fail(ErrorKind::InvalidParams, "class registry cannot be empty");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const std::string key = normalize_class_name(names_[i]);
    if (!index_.emplace(key, static_cast<int>(i)).second) {
      fail(ErrorKind::InvalidParams, "duplicate class name '" + names_[i] + "'");
    }
  }
}

ClassRegistry ClassRegistry::default_registry() {
  return ClassRegistry({"microbridge", "gap", "bridge", "line_collapse", "p_gap"});
}

int ClassRegistry::id_of(const std::string& name) const {
  std::string key = normalize_class_name(name);
  if (auto alias = class_aliases().find(key); alias != class_aliases().end()) {
    key = alias->second;
  }
  auto it = index_.find(key);
  if (it == index_.end()) fail(ErrorKind::UnknownClass, "no class named '" + name + "'");
  return it->second;
}

const std::string& ClassRegistry::name_of(int class_id) const {
  if (!contains(class_id)) {
    fail(ErrorKind::UnknownClass, "no class with id " + std::to_string(class_id));
  }
  return names_[static_cast<std::size_t>(class_id)];
}

bool ClassRegistry::contains(int class_id) const noexcept {
  return class_id >= 0 && static_cast<std::size_t>(class_id) < names_.size();
}

std::vector<int> ClassRegistry::ids() const {
  std::vector<int> out(names_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<int>(i);
  return out;
}

// ---- YOLO text formats ----------------------------------------------------

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream stream(line);
  std::string token;
  while (stream >> token) out.push_back(token);
  return out;
}

double parse_double(const std::string& token, int line_no, const char* what) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    fail(ErrorKind::ParseError,
         "line " + std::to_string(line_no) + ": bad " + what + " '" + token + "'");
  }
  return value;
}

int parse_class_id(const std::string& token, int line_no) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    fail(ErrorKind::ParseError,
         "line " + std::to_string(line_no) + ": bad class id '" + token + "'");
  }
  return value;
}

struct ParsedLine {
  int class_id = 0;
  NormBox box;
  double confidence = 1.0;
};

ParsedLine parse_line(const std::string& line, int line_no, const ClassRegistry& registry,
                      bool with_confidence) {
  const std::vector<std::string> tokens = split_ws(line);
  const std::size_t expected = with_confidence ? 6 : 5;
  if (tokens.size() != expected) {
    fail(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                    std::to_string(expected) + " fields, got " +
                                    std::to_string(tokens.size()));
  }
  ParsedLine out;
  out.class_id = parse_class_id(tokens[0], line_no);
  if (!registry.contains(out.class_id)) {
    fail(ErrorKind::UnknownClass, "line " + std::to_string(line_no) + ": class id " +
                                      std::to_string(out.class_id) +
                                      " not in the registry");
  }
  out.box.cx = parse_double(tokens[1], line_no, "cx");
  out.box.cy = parse_double(tokens[2], line_no, "cy");
  out.box.w = parse_double(tokens[3], line_no, "w");
  out.box.h = parse_double(tokens[4], line_no, "h");
  if (!is_valid(out.box)) {
    fail(ErrorKind::MalformedBox,
         "line " + std::to_string(line_no) + ": normalized box outside its domain");
  }
  if (with_confidence) {
    out.confidence = parse_double(tokens[5], line_no, "confidence");
    if (!(out.confidence >= 0.0 && out.confidence <= 1.0)) {
      fail(ErrorKind::ConfidenceOutOfRange,
           "line " + std::to_string(line_no) + ": confidence " + tokens[5] +
               " outside [0,1]");
    }
  }
  return out;
}

template <typename Fn>
void for_each_nonempty_line(const std::string& text, Fn&& fn) {
  std::istringstream stream(text);
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    fn(line, line_no);
  }
}

}  // namespace

std::vector<GroundTruth> parse_yolo_labels(const std::string& text, ImageSize size,
                                           const ClassRegistry& registry,
                                           const std::string& image_id) {
  if (!is_valid(size)) fail(ErrorKind::InvalidParams, "image size must be positive");
  std::vector<GroundTruth> out;
  for_each_nonempty_line(text, [&](const std::string& line, int line_no) {
    const ParsedLine parsed = parse_line(line, line_no, registry, false);
    GroundTruth gt{to_absolute(parsed.box, size), parsed.class_id, image_id};
    validate_ground_truth(gt);
    out.push_back(std::move(gt));
  });
  return out;
}

std::vector<Detection> parse_predictions(const std::string& text, ImageSize size,
                                         const ClassRegistry& registry,
                                         const std::string& model_id) {
  if (!is_valid(size)) fail(ErrorKind::InvalidParams, "image size must be positive");
  std::vector<Detection> out;
  for_each_nonempty_line(text, [&](const std::string& line, int line_no) {
    const ParsedLine parsed = parse_line(line, line_no, registry, true);
    Detection det{to_absolute(parsed.box, size), parsed.class_id, parsed.confidence,
                  model_id};
    validate_detection(det);
    out.push_back(std::move(det));
  });
  return out;
}

namespace {

std::string format_norm_box(const NormBox& box) {
  char buffer[128];
  std::snprintf(buffer, sizeof(buffer), "%.6f %.6f %.6f %.6f", box.cx, box.cy, box.w,
                box.h);
  return buffer;
}

}  // namespace

std::string serialize_labels(const std::vector<GroundTruth>& gts, ImageSize size) {
  std::string out;
  for (const GroundTruth& gt : gts) {
    out += std::to_string(gt.class_id);
    out += ' ';
    out += format_norm_box(to_normalized(gt.box, size));
    out += '\n';
  }
  return out;
}

std::string serialize_predictions(const std::vector<Detection>& dets, ImageSize size) {
  std::string out;
  char conf[32];
  for (const Detection& det : dets) {
    out += std::to_string(det.class_id);
    out += ' ';
    out += format_norm_box(to_normalized(det.box, size));
    std::snprintf(conf, sizeof(conf), " %.6f", det.confidence);
    out += conf;
    out += '\n';
  }
  return out;
}

PredictionsByImage parse_coco_predictions(const std::string& json_text,
                                          const ClassRegistry& registry,
                                          const std::string& model_id) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) fail(ErrorKind::ParseError, "expected a top-level JSON array");

  PredictionsByImage out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& item = doc[i];
    const std::string where = "entry " + std::to_string(i);
    if (!item.is_object() || !item.contains("image_id") || !item.contains("category_id") ||
        !item.contains("bbox") || !item.contains("score")) {
      fail(ErrorKind::ParseError, where + ": need image_id, category_id, bbox, score");
    }
    std::string image_id;
    if (item["image_id"].is_string()) {
      image_id = item["image_id"].get<std::string>();
    } else if (item["image_id"].is_number_integer()) {
      image_id = std::to_string(item["image_id"].get<long long>());
    } else {
      fail(ErrorKind::ParseError, where + ": image_id must be a string or integer");
    }
    const int class_id = item["category_id"].get<int>();
    if (!registry.contains(class_id)) {
      fail(ErrorKind::UnknownClass,
           where + ": class id " + std::to_string(class_id) + " not in the registry");
    }
    const json& bbox = item["bbox"];
    if (!bbox.is_array() || bbox.size() != 4) {
      fail(ErrorKind::ParseError, where + ": bbox must be [x,y,w,h]");
    }
    const double x = bbox[0].get<double>();
    const double y = bbox[1].get<double>();
    const double w = bbox[2].get<double>();
    const double h = bbox[3].get<double>();
    if (!(w > 0.0 && h > 0.0)) fail(ErrorKind::MalformedBox, where + ": nonpositive size");
    const double score = item["score"].get<double>();
    if (!(score >= 0.0 && score <= 1.0)) {
      fail(ErrorKind::ConfidenceOutOfRange, where + ": score outside [0,1]");
    }
    Detection det{AbsBox{x, y, x + w, y + h}, class_id, score, model_id};
    validate_detection(det);
    out[image_id].push_back(std::move(det));
  }
  return out;
}

// ---- dataset manifest ------------------------------------------------------

const char* to_string(Split split) noexcept {
  switch (split) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  return "unknown";
}

Split split_from_string(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "validation" || name == "val") return Split::Validation;
  if (name == "test") return Split::Test;
  fail(ErrorKind::InvalidParams, "unknown split '" + name + "'");
}

namespace {

constexpr int kManifestSchemaVersion = 1;

json require_object(const json& doc, const char* what) {
  if (!doc.is_object()) fail(ErrorKind::ParseError, std::string(what) + " must be an object");
  return doc;
}

void check_schema_version(const json& doc, const char* what) {
  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer() ||
      doc["schema_version"].get<int>() != kManifestSchemaVersion) {
    fail(ErrorKind::ParseError,
         std::string(what) + " needs schema_version " + std::to_string(kManifestSchemaVersion));
  }
}

ClassRegistry registry_from_json(const json& doc) {
  if (!doc.contains("classes")) return ClassRegistry::default_registry();
  std::vector<std::string> names;
  for (const json& name : doc["classes"]) names.push_back(name.get<std::string>());
  return ClassRegistry(std::move(names));
}

}  // namespace

DatasetManifest load_dataset_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  require_object(doc, "dataset manifest");
  check_schema_version(doc, "dataset manifest");

  DatasetManifest manifest;
  manifest.registry = registry_from_json(doc);
  const std::filesystem::path base = path.parent_path();
  if (!doc.contains("splits") || !doc["splits"].is_object()) {
    fail(ErrorKind::ParseError, path.string() + ": missing splits object");
  }
  for (const auto& [split_name, entries] : doc["splits"].items()) {
    const Split split = split_from_string(split_name);
    std::set<std::string> seen;
    for (const json& entry : entries) {
      DatasetEntry parsed;
      parsed.image = base / entry.at("image").get<std::string>();
      parsed.labels = base / entry.at("labels").get<std::string>();
      parsed.size = ImageSize{entry.at("width").get<int>(), entry.at("height").get<int>()};
      if (!is_valid(parsed.size)) {
        fail(ErrorKind::ParseError, path.string() + ": nonpositive image size");
      }
      if (!seen.insert(parsed.image.string()).second) {
        fail(ErrorKind::ParseError,
             path.string() + ": duplicate image path '" + parsed.image.string() + "'");
      }
      manifest.splits[split].push_back(std::move(parsed));
    }
  }
  return manifest;
}

void save_dataset_manifest(const DatasetManifest& manifest,
                           const std::filesystem::path& path) {
  json doc;
  doc["schema_version"] = kManifestSchemaVersion;
  doc["classes"] = manifest.registry.names();
  const std::filesystem::path base = path.parent_path();
  json splits = json::object();
  for (const auto& [split, entries] : manifest.splits) {
    json list = json::array();
    for (const DatasetEntry& entry : entries) {
      list.push_back({{"image", entry.image.lexically_relative(base).string()},
                      {"labels", entry.labels.lexically_relative(base).string()},
                      {"width", entry.size.width},
                      {"height", entry.size.height}});
    }
    splits[to_string(split)] = std::move(list);
  }
  doc["splits"] = std::move(splits);
  write_text_file(path, doc.dump(2) + "\n");
}

// ---- dataset statistics ----------------------------------------------------

std::map<Split, SplitStats> dataset_stats(const DatasetManifest& manifest) {
  std::map<Split, SplitStats> out;
  for (const auto& [split, entries] : manifest.splits) {
    SplitStats stats;
    for (int id : manifest.registry.ids()) stats.instances_by_class[id] = 0;
    for (const DatasetEntry& entry : entries) {
      stats.image_count += 1;
      std::vector<GroundTruth> gts;
      try {
        gts = parse_yolo_labels(read_text_file(entry.labels), entry.size,
                                manifest.registry);
      } catch (const Error& e) {
        fail(e.kind(), entry.labels.string() + ": " + e.message());
      }
      for (const GroundTruth& gt : gts) stats.instances_by_class[gt.class_id] += 1;
    }
    for (const auto& [cls, count] : stats.instances_by_class) stats.total_instances += count;
    out[split] = std::move(stats);
  }
  return out;
}

namespace {

const std::array<Split, 3> kSplitOrder{Split::Train, Split::Validation, Split::Test};

}  // namespace

std::string render_stats_markdown(const std::map<Split, SplitStats>& stats,
                                  const ClassRegistry& registry) {
  std::ostringstream out;
  out << "| Sample counts |";
  for (Split split : kSplitOrder) {
    if (stats.count(split)) out << ' ' << to_string(split) << " |";
  }
  out << "\n|---|";
  for (Split split : kSplitOrder) {
    if (stats.count(split)) out << "---|";
  }
  out << '\n';
  for (int id : registry.ids()) {
    out << "| " << registry.name_of(id) << " |";
    for (Split split : kSplitOrder) {
      auto it = stats.find(split);
      if (it == stats.end()) continue;
      const auto& by_class = it->second.instances_by_class;
      out << ' ' << (by_class.count(id) ? by_class.at(id) : 0) << " |";
    }
    out << '\n';
  }
  out << "| total instances |";
  for (Split split : kSplitOrder) {
    auto it = stats.find(split);
    if (it != stats.end()) out << ' ' << it->second.total_instances << " |";
  }
  out << "\n| total images |";
  for (Split split : kSplitOrder) {
    auto it = stats.find(split);
    if (it != stats.end()) out << ' ' << it->second.image_count << " |";
  }
  out << '\n';
  return out.str();
}

std::string render_stats_csv(const std::map<Split, SplitStats>& stats,
                             const ClassRegistry& registry) {
  std::ostringstream out;
  out << "class";
  for (Split split : kSplitOrder) {
    if (stats.count(split)) out << ',' << to_string(split);
  }
  out << '\n';
  for (int id : registry.ids()) {
    out << registry.name_of(id);
    for (Split split : kSplitOrder) {
      auto it = stats.find(split);
      if (it == stats.end()) continue;
      const auto& by_class = it->second.instances_by_class;
      out << ',' << (by_class.count(id) ? by_class.at(id) : 0);
    }
    out << '\n';
  }
  out << "total_instances";
  for (Split split : kSplitOrder) {
    auto it = stats.find(split);
    if (it != stats.end()) out << ',' << it->second.total_instances;
  }
  out << "\ntotal_images";
  for (Split split : kSplitOrder) {
    auto it = stats.find(split);
    if (it != stats.end()) out << ',' << it->second.image_count;
  }
  out << '\n';
  return out.str();
}

// ---- report serialization ----------------------------------------------------

namespace {

EvalReport report_from_json_value(const json& doc, const ClassRegistry& registry,
                                  const std::string& where) {
  if (!doc.is_object() || !doc.contains("iou_threshold") || !doc.contains("classes")) {
    fail(ErrorKind::ParseError, where + ": report needs iou_threshold and classes");
  }
  const double iou_threshold = doc["iou_threshold"].get<double>();
  std::vector<ClassAp> per_class;
  for (const json& entry : doc["classes"]) {
    ClassAp parsed;
    if (entry.contains("id")) {
      parsed.class_id = entry["id"].get<int>();
      if (!registry.contains(parsed.class_id)) {
        fail(ErrorKind::UnknownClass,
             where + ": class id " + std::to_string(parsed.class_id));
      }
    } else if (entry.contains("name")) {
      parsed.class_id = registry.id_of(entry["name"].get<std::string>());
    } else {
      fail(ErrorKind::ParseError, where + ": class entry needs id or name");
    }
    parsed.ap = entry.at("ap").get<double>();
    if (!(parsed.ap >= 0.0 && parsed.ap <= 1.0)) {
      fail(ErrorKind::ParseError, where + ": ap outside [0,1]");
    }
    parsed.gt_count = entry.value("gt_count", 0);
    parsed.prediction_count = entry.value("prediction_count", 0);
    per_class.push_back(parsed);
  }
  EvalReport report = make_eval_report(iou_threshold, std::move(per_class));
  if (doc.contains("map")) {
    const double stored = doc["map"].get<double>();
    if (std::abs(stored - report.map) > 5e-4) {
      fail(ErrorKind::ParseError,
           where + ": stored map " + format_fixed(stored, 3) +
               " disagrees with the per-class mean " + format_fixed(report.map, 3));
    }
  }
  return report;
}

json report_to_json_value(const EvalReport& report, const ClassRegistry& registry,
                          Interpolation interp) {
  json doc;
  doc["schema_version"] = kManifestSchemaVersion;
  doc["iou_threshold"] = report.iou_threshold;
  doc["interpolation"] = to_string(interp);
  json classes = json::array();
  for (const ClassAp& entry : report.per_class) {
    classes.push_back({{"id", entry.class_id},
                       {"name", registry.name_of(entry.class_id)},
                       {"ap", entry.ap},
                       {"gt_count", entry.gt_count},
                       {"prediction_count", entry.prediction_count}});
  }
  doc["classes"] = std::move(classes);
  doc["map"] = report.map;
  return doc;
}

}  // namespace

std::string report_to_json(const EvalReport& report, const ClassRegistry& registry,
                           Interpolation interp) {
  return report_to_json_value(report, registry, interp).dump(2) + "\n";
}

EvalReport report_from_json(const std::string& json_text, const ClassRegistry& registry) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, std::string("invalid JSON: ") + e.what());
  }
  return report_from_json_value(doc, registry, "report");
}

// ---- sweep manifest -----------------------------------------------------------

SweepManifest load_sweep_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  require_object(doc, "sweep manifest");
  check_schema_version(doc, "sweep manifest");

  SweepManifest manifest;
  manifest.registry = registry_from_json(doc);
  if (!doc.contains("runs") || !doc["runs"].is_array()) {
    fail(ErrorKind::ParseError, path.string() + ": missing runs array");
  }
  std::set<std::string> ids;
  for (const json& entry : doc["runs"]) {
    SweepRun run;
    run.model_id = entry.at("model_id").get<std::string>();
    if (!ids.insert(run.model_id).second) {
      fail(ErrorKind::ParseError,
           path.string() + ": duplicate model id '" + run.model_id + "'");
    }
    run.category = entry.value("category", "");
    run.hyperparameter = entry.value("hyperparameter", "");
    run.value = entry.value("value", "");
    run.prediction_dir = entry.value("prediction_dir", "");
    run.notes = entry.value("notes", "");
    const std::string where = path.string() + " run '" + run.model_id + "'";
    if (entry.contains("validation_report") && !entry["validation_report"].is_null()) {
      run.validation_report =
          report_from_json_value(entry["validation_report"], manifest.registry, where);
    }
    if (entry.contains("test_report") && !entry["test_report"].is_null()) {
      run.test_report =
          report_from_json_value(entry["test_report"], manifest.registry, where);
    }
    manifest.runs.push_back(std::move(run));
  }
  return manifest;
}

std::vector<ModelRun> sweep_model_runs(const SweepManifest& manifest) {
  std::vector<ModelRun> out;
  out.reserve(manifest.runs.size());
  for (const SweepRun& run : manifest.runs) {
    ModelRun model;
    model.model_id = run.model_id;
    model.validation_report = run.validation_report;
    model.test_report = run.test_report;
    out.push_back(std::move(model));
  }
  return out;
}

// ---- report rendering -----------------------------------------------------------

namespace {

// Comparison at the displayed precision: 0.9674 and 0.9671 render alike, so
// neither counts as better.
long rendered_milli(double value) { return std::lround(value * 1000.0); }

}  // namespace

RenderedReport render_report(const std::vector<ReportDoc>& reports,
                             const std::string& baseline_label,
                             const ClassRegistry& registry) {
  if (reports.empty()) fail(ErrorKind::InvalidParams, "nothing to render");
  for (const ReportDoc& doc : reports) {
    if (doc.report.iou_threshold != reports.front().report.iou_threshold) {
      fail(ErrorKind::MixedThresholds, "reports evaluated at different IoU thresholds");
    }
  }
  auto baseline_it =
      std::find_if(reports.begin(), reports.end(),
                   [&](const ReportDoc& doc) { return doc.label == baseline_label; });
  if (baseline_it == reports.end()) {
    fail(ErrorKind::InvalidParams, "baseline '" + baseline_label + "' not among the reports");
  }

  const std::vector<int> class_ids = registry.ids();
  auto value_of = [&](const ReportDoc& doc, std::size_t column) -> double {
    if (column < class_ids.size()) {
      const int cls = class_ids[column];
      auto it = std::find_if(
          doc.report.per_class.begin(), doc.report.per_class.end(),
          [&](const ClassAp& entry) { return entry.class_id == cls; });
      if (it == doc.report.per_class.end()) {
        fail(ErrorKind::MissingReport, "report '" + doc.label + "' lacks class '" +
                                           registry.name_of(cls) + "'");
      }
      return it->ap;
    }
    return doc.report.map;
  };
  const std::size_t columns = class_ids.size() + 1;

  std::ostringstream md;
  md << "IoU threshold: " << format_fixed(reports.front().report.iou_threshold, 3)
     << "\n\n";
  md << "| Model |";
  for (int cls : class_ids) md << ' ' << registry.name_of(cls) << " |";
  md << " mAP |\n|---|";
  for (std::size_t c = 0; c < columns; ++c) md << "---|";
  md << '\n';

  std::ostringstream csv;
  csv << "model,iou_threshold";
  for (int cls : class_ids) csv << ',' << registry.name_of(cls);
  csv << ",map\n";

  for (const ReportDoc& doc : reports) {
    md << "| " << doc.label << " |";
    csv << doc.label << ',' << format_fixed(doc.report.iou_threshold, 3);
    for (std::size_t c = 0; c < columns; ++c) {
      const double value = value_of(doc, c);
      const long milli = rendered_milli(value);
      bool bold = false;
      if (doc.label == baseline_label) {
        bold = true;
        for (const ReportDoc& other : reports) {
          if (rendered_milli(value_of(other, c)) > milli) {
            bold = false;
            break;
          }
        }
      } else {
        bold = milli > rendered_milli(value_of(*baseline_it, c));
      }
      const std::string text = format_fixed(value, 3);
      md << ' ' << (bold ? "**" + text + "**" : text) << " |";
      if (c < class_ids.size()) csv << ',' << text;
    }
    csv << ',' << format_fixed(doc.report.map, 3) << '\n';
    md << '\n';
  }
  return RenderedReport{md.str(), csv.str()};
}

// ---- ensemble spec ---------------------------------------------------------------

std::string ensemble_spec_to_json(const EnsembleSpec& spec) {
  json doc;
  doc["schema_version"] = kManifestSchemaVersion;
  doc["members"] = spec.member_ids;
  json fusion;
  fusion["method"] = spec.fusion.method == FusionMethod::Nms ? "nms" : "wbf";
  fusion["iou_threshold"] = spec.fusion.iou_threshold;
  fusion["skip_confidence"] = spec.fusion.skip_confidence;
  fusion["model_count"] = spec.fusion.model_count;
  json weights = json::object();
  for (const auto& [id, weight] : spec.fusion.model_weights) weights[id] = weight;
  fusion["model_weights"] = std::move(weights);
  doc["fusion"] = std::move(fusion);
  return doc.dump(2) + "\n";
}

EnsembleSpec ensemble_spec_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, std::string("invalid JSON: ") + e.what());
  }
  require_object(doc, "ensemble spec");
  check_schema_version(doc, "ensemble spec");
  EnsembleSpec spec;
  for (const json& id : doc.at("members")) spec.member_ids.push_back(id.get<std::string>());
  const json& fusion = doc.at("fusion");
  const std::string method = fusion.at("method").get<std::string>();
  if (method == "nms") {
    spec.fusion.method = FusionMethod::Nms;
  } else if (method == "wbf") {
    spec.fusion.method = FusionMethod::Wbf;
  } else {
    fail(ErrorKind::ParseError, "unknown fusion method '" + method + "'");
  }
  spec.fusion.iou_threshold = fusion.at("iou_threshold").get<double>();
  spec.fusion.skip_confidence = fusion.value("skip_confidence", 0.0);
  spec.fusion.model_count =
      fusion.value("model_count", static_cast<int>(spec.member_ids.size()));
  if (fusion.contains("model_weights")) {
    for (const auto& [id, weight] : fusion["model_weights"].items()) {
      spec.fusion.model_weights[id] = weight.get<double>();
    }
  }
  validate_params(spec.fusion);
  return spec;
}

// ---- augmentation pipeline config ---------------------------------------------

std::string pipeline_to_json(const AugmentPipeline& pipeline) {
  json doc;
  doc["schema_version"] = kManifestSchemaVersion;
  doc["seed"] = pipeline.seed;
  json ops = json::array();
  for (const AugmentOp& op : pipeline.ops) {
    json entry;
    entry["kind"] = to_string(op.kind);
    entry["probability"] = op.probability;
    if (op.kind == AugmentKind::HsvJitter) {
      entry["h"] = op.hsv_gain_h;
      entry["s"] = op.hsv_gain_s;
      entry["v"] = op.hsv_gain_v;
    } else if (op.kind != AugmentKind::VFlip && op.kind != AugmentKind::HFlip &&
               op.kind != AugmentKind::Mosaic) {
      entry["magnitude"] = op.magnitude;
    }
    ops.push_back(std::move(entry));
  }
  doc["ops"] = std::move(ops);
  return doc.dump(2) + "\n";
}

AugmentPipeline pipeline_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, std::string("invalid JSON: ") + e.what());
  }
  require_object(doc, "pipeline config");
  check_schema_version(doc, "pipeline config");
  AugmentPipeline pipeline;
  pipeline.seed = doc.value("seed", 0ull);
  for (const json& entry : doc.at("ops")) {
    AugmentOp op;
    op.kind = augment_kind_from_string(entry.at("kind").get<std::string>());
    op.probability = entry.value("probability", 1.0);
    op.magnitude = entry.value("magnitude", 0.0);
    op.hsv_gain_h = entry.value("h", 0.0);
    op.hsv_gain_s = entry.value("s", 0.0);
    op.hsv_gain_v = entry.value("v", 0.0);
    validate_op(op);
    pipeline.ops.push_back(op);
  }
  return pipeline;
}

// ---- plain file helpers -----------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) fail(ErrorKind::IoError, "cannot read '" + path.string() + "'");
  std::ostringstream out;
  out << stream.rdbuf();
  return out.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream stream(path, std::ios::binary);
  if (!stream) fail(ErrorKind::IoError, "cannot write '" + path.string() + "'");
  stream << content;
  if (!stream) fail(ErrorKind::IoError, "failed while writing '" + path.string() + "'");
}

}  // namespace detkit
