#pragma once

#include <optional>
#include <string>
#include <vector>

#include "detkit/eval.hpp"
#include "detkit/fusion.hpp"

namespace detkit {

/// One trained model's contribution to an ensemble: its per-image final
/// (post-NMS) predictions and the reports used for member selection.
struct ModelRun {
  std::string model_id;
  PredictionsByImage predictions;
  std::optional<EvalReport> validation_report;
  std::optional<EvalReport> test_report;
};

/// Member list plus fusion settings: the machine form of one ensemble row.
struct EnsembleSpec {
  std::vector<std::string> member_ids;
  FusionParams fusion;
};

/// Controls per-class-best member selection. A run joins the ensemble only
/// when its best-class AP exceeds the baseline's AP for that class by more
/// than margin.
struct SelectionPolicy {
  double margin = 0.005;
  std::string baseline_id;
};

/// Which report select_per_class_best consults. PreferTest reads the test
/// report when present and falls back to validation.
enum class SelectionSplit { PreferTest, Test, Validation };

/// Concatenates every run's predictions for one image, model tags preserved.
/// Throws UnknownImage when a run has no entry for the image.
std::vector<Detection> pool_predictions(const std::vector<ModelRun>& runs,
                                        const std::string& image_id);

/// Pool -> combine -> evaluate over every image the members predict on.
EvalReport evaluate_ensemble(const EnsembleSpec& spec, const std::vector<ModelRun>& runs,
                             const GroundTruthByImage& gts, double iou_threshold,
                             const std::vector<int>& class_ids = {},
                             Interpolation interp = Interpolation::AllPoint);

/// Per-class winner of the selection for diagnostics/reporting.
struct ClassWinner {
  int class_id = 0;
  std::string model_id;
  double ap = 0.0;
  double baseline_ap = 0.0;
  bool selected = false;
};

struct SelectionResult {
  EnsembleSpec spec;
  std::vector<ClassWinner> winners;
};

/// For each class, finds the run with maximal AP (ties: baseline first, then
/// lexicographic model_id) and adds it as a member when it clears the margin
/// over the baseline. The baseline is always a member.
SelectionResult select_per_class_best(const std::vector<ModelRun>& runs,
                                      const SelectionPolicy& policy,
                                      SelectionSplit split = SelectionSplit::PreferTest);

struct ClassImprovement {
  int class_id = 0;
  std::optional<double> percent;  // empty when the baseline AP is zero
};

/// Relative mAP change of candidate over baseline, in percent, plus the
/// per-class breakdown. Throws ZeroBaseline when baseline.map is zero.
struct ImprovementReport {
  double map_percent = 0.0;
  std::vector<ClassImprovement> per_class;
};

ImprovementReport relative_improvement(const EvalReport& candidate,
                                       const EvalReport& baseline);

/// "9.87" style two-decimal rendering of a percentage.
std::string format_percent(double percent);

/// Integer-percent rounding used for headline comparisons.
long round_percent(double percent) noexcept;

}  // namespace detkit
