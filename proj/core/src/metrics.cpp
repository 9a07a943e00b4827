#include "synloc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "synloc/parallel.hpp"

namespace synloc {

namespace {

void check_pair(const FloatMap& h, const BinaryMask& m) {
  if (h.width != m.width || h.height != m.height)
    fail(Errc::dimension_mismatch,
         "heatmap " + std::to_string(h.width) + "x" + std::to_string(h.height) +
             " vs mask " + std::to_string(m.width) + "x" +
             std::to_string(m.height));
}

std::pair<std::int64_t, std::int64_t> class_counts(
    std::span<const std::uint8_t> labels) {
  std::int64_t n1 = 0;
  for (std::uint8_t l : labels) n1 += l;
  return {static_cast<std::int64_t>(labels.size()) - n1, n1};
}

}  // namespace

double auc_from_scores(std::span<const double> scores,
                       std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size())
    fail(Errc::dimension_mismatch, "scores and labels differ in length");
  if (scores.empty()) fail(Errc::empty_input, "empty score set");
  const auto [n0, n1] = class_counts(labels);
  if (n0 == 0 || n1 == 0)
    fail(Errc::single_class, "AUC undefined with a single class");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks over tie groups; the positive rank-sum gives the U statistic.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += midrank;
    i = j;
  }
  const double u =
      rank_sum_pos - 0.5 * static_cast<double>(n1) * (static_cast<double>(n1) + 1.0);
  return u / (static_cast<double>(n0) * static_cast<double>(n1));
}

BaResult max_ba_from_scores(std::span<const double> scores,
                            std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size())
    fail(Errc::dimension_mismatch, "scores and labels differ in length");
  if (scores.empty()) fail(Errc::empty_input, "empty score set");
  const auto [n0, n1] = class_counts(labels);
  if (n0 == 0 || n1 == 0)
    fail(Errc::single_class, "balanced accuracy undefined with a single class");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sweep thresholds upward. At tau = value v, predictions >= v are
  // positive, so TP counts positives at or above v and TN negatives
  // strictly below. below0/below1 track counts strictly below the group.
  BaResult best{-1.0, 0.0};
  std::int64_t below0 = 0, below1 = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::int64_t g0 = 0, g1 = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] == 1)
        ++g1;
      else
        ++g0;
      ++j;
    }
    const double tau = scores[order[i]];
    const double tpr =
        static_cast<double>(n1 - below1) / static_cast<double>(n1);
    const double tnr = static_cast<double>(below0) / static_cast<double>(n0);
    const double ba = 0.5 * (tpr + tnr);
    if (ba > best.ba) best = {ba, tau};
    below0 += g0;
    below1 += g1;
    i = j;
  }
  // All-negative classifier (tau above the max) scores exactly 0.5 and can
  // never exceed the tau = min sweep entry, which also yields >= 0.5; it is
  // included for completeness of the sweep.
  const double all_neg_ba = 0.5;
  if (all_neg_ba > best.ba)
    best = {all_neg_ba, std::nextafter(scores[order.back()], 2.0)};
  return best;
}

double pixel_auc(const FloatMap& heatmap, const BinaryMask& mask) {
  check_pair(heatmap, mask);
  return auc_from_scores(heatmap.values, mask.labels);
}

BaResult max_balanced_accuracy(const FloatMap& heatmap, const BinaryMask& mask) {
  check_pair(heatmap, mask);
  return max_ba_from_scores(heatmap.values, mask.labels);
}

DatasetEvalResult dataset_eval(const std::vector<ScoredImage>& pairs,
                               int workers) {
  if (pairs.empty()) fail(Errc::empty_input, "dataset_eval: no pairs");
  for (const ScoredImage& p : pairs) check_pair(p.heatmap, p.mask);

  DatasetEvalResult result;
  result.per_image.resize(pairs.size());
  parallel_chunks(pairs.size(), 1, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const ScoredImage& p = pairs[i];
      const double auc = pixel_auc(p.heatmap, p.mask);
      const BaResult ba = max_balanced_accuracy(p.heatmap, p.mask);
      result.per_image[i] = {auc, ba.ba, ba.tau, p.group};
    }
  });

  std::map<std::string, GroupSummary> groups;
  GroupSummary overall;
  overall.group = "overall";
  for (const EvalResult& r : result.per_image) {
    GroupSummary& g = groups[r.group];
    g.group = r.group;
    g.count++;
    g.mean_auc += r.auc;
    g.mean_max_ba += r.max_ba;
    g.mean_best_tau += r.best_tau;
    overall.count++;
    overall.mean_auc += r.auc;
    overall.mean_max_ba += r.max_ba;
    overall.mean_best_tau += r.best_tau;
  }
  const auto normalize = [](GroupSummary& g) {
    g.mean_auc /= g.count;
    g.mean_max_ba /= g.count;
    g.mean_best_tau /= g.count;
  };
  for (auto& [name, g] : groups) {
    normalize(g);
    result.groups.push_back(g);
  }
  normalize(overall);
  result.overall = overall;
  return result;
}

double calibrate_threshold(const std::vector<ScoredImage>& pairs) {
  if (pairs.empty()) fail(Errc::empty_input, "calibrate_threshold: no pairs");
  std::size_t total = 0;
  for (const ScoredImage& p : pairs) {
    check_pair(p.heatmap, p.mask);
    total += p.heatmap.values.size();
  }
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  scores.reserve(total);
  labels.reserve(total);
  for (const ScoredImage& p : pairs) {
    scores.insert(scores.end(), p.heatmap.values.begin(), p.heatmap.values.end());
    labels.insert(labels.end(), p.mask.labels.begin(), p.mask.labels.end());
  }
  return max_ba_from_scores(scores, labels).tau;
}

double correct_detection_rate(const std::vector<FloatMap>& pristine,
                              double tau) {
  if (pristine.empty()) fail(Errc::empty_input, "no pristine heatmaps");
  if (!(tau >= 0.0 && tau <= 1.0))
    fail(Errc::out_of_range, "threshold outside [0,1]");
  std::int64_t below = 0, total = 0;
  for (const FloatMap& h : pristine) {
    h.validate();
    for (double v : h.values)
      if (v < tau) ++below;
    total += static_cast<std::int64_t>(h.values.size());
  }
  return static_cast<double>(below) / static_cast<double>(total);
}

double false_alarm_rate(const std::vector<FloatMap>& pristine, double tau) {
  return 1.0 - correct_detection_rate(pristine, tau);
}

}  // namespace synloc
