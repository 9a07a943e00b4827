#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "synloc/raster.hpp"

namespace synloc {

// Per-image (or aggregated) pixel-level evaluation result.
struct EvalResult {
  double auc = 0.0;
  double max_ba = 0.0;
  double best_tau = 0.0;
  std::string group;
};

// ROC AUC from flat score/label arrays via the rank statistic; ties get
// half credit. Equals exhaustive pair counting exactly.
double auc_from_scores(std::span<const double> scores,
                       std::span<const std::uint8_t> labels);

struct BaResult {
  double ba = 0.0;
  double tau = 0.0;
};

// Max of (TPR+TNR)/2 over thresholds drawn from the score values (plus a
// value above the max for the all-negative classifier), classification
// rule score >= tau; returns the smallest maximizing tau.
BaResult max_ba_from_scores(std::span<const double> scores,
                            std::span<const std::uint8_t> labels);

// Heatmap-vs-mask wrappers. Both classes must be present in the mask.
double pixel_auc(const FloatMap& heatmap, const BinaryMask& mask);
BaResult max_balanced_accuracy(const FloatMap& heatmap, const BinaryMask& mask);

struct ScoredImage {
  FloatMap heatmap;
  BinaryMask mask;
  std::string group;
};

struct GroupSummary {
  std::string group;
  int count = 0;
  double mean_auc = 0.0;
  double mean_max_ba = 0.0;
  double mean_best_tau = 0.0;
};

struct DatasetEvalResult {
  std::vector<EvalResult> per_image;  // input order
  std::vector<GroupSummary> groups;   // sorted by group name
  GroupSummary overall;
};

// Per-image metrics averaged within each group and over all images.
DatasetEvalResult dataset_eval(const std::vector<ScoredImage>& pairs,
                               int workers = 1);

// Pools every pixel across all pairs and returns the smallest tau
// maximizing pooled balanced accuracy.
double calibrate_threshold(const std::vector<ScoredImage>& pairs);

// Fraction of pixels with H < tau over pristine heatmaps: the correct
// detection rate. Its complement is the false-alarm rate.
double correct_detection_rate(const std::vector<FloatMap>& pristine, double tau);
double false_alarm_rate(const std::vector<FloatMap>& pristine, double tau);

}  // namespace synloc
