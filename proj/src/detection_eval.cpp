#include "selftrain/detection_eval.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace selftrain {

MatchResult match_detections(std::span<const Detection> detections,
                             std::span<const GroundTruthBox> ground_truth,
                             double iou_thresh) {
  // Ground truth grouped per frame.
  std::map<FrameRef, std::vector<std::size_t>> gt_by_frame;
  for (std::size_t g = 0; g < ground_truth.size(); ++g) {
    gt_by_frame[ground_truth[g].frame].push_back(g);
  }

  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (detections[a].score != detections[b].score) {
      return detections[a].score > detections[b].score;
    }
    if (detections[a].frame != detections[b].frame) {
      return detections[a].frame < detections[b].frame;
    }
    return a < b;
  });

  MatchResult result;
  result.is_tp.assign(detections.size(), false);
  result.matched_gt.assign(detections.size(), -1);
  std::vector<bool> gt_used(ground_truth.size(), false);

  for (std::size_t idx : order) {
    const Detection& det = detections[idx];
    const auto it = gt_by_frame.find(det.frame);
    if (it == gt_by_frame.end()) continue;
    double best_iou = 0.0;
    std::int64_t best_gt = -1;
    for (std::size_t g : it->second) {
      if (gt_used[g]) continue;
      const double v = iou(det.box, ground_truth[g].box);
      if (v >= iou_thresh && v > best_iou) {
        best_iou = v;
        best_gt = static_cast<std::int64_t>(g);
      }
    }
    if (best_gt >= 0) {
      gt_used[static_cast<std::size_t>(best_gt)] = true;
      result.is_tp[idx] = true;
      result.matched_gt[idx] = best_gt;
      ++result.num_matched_gt;
    }
  }
  return result;
}

PrCurve compute_pr_curve(std::span<const Detection> detections,
                         std::span<const GroundTruthBox> ground_truth,
                         double iou_thresh) {
  const MatchResult matches =
      match_detections(detections, ground_truth, iou_thresh);

  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (detections[a].score != detections[b].score) {
      return detections[a].score > detections[b].score;
    }
    if (detections[a].frame != detections[b].frame) {
      return detections[a].frame < detections[b].frame;
    }
    return a < b;
  });

  PrCurve curve;
  curve.recall.reserve(order.size());
  curve.precision.reserve(order.size());
  curve.threshold.reserve(order.size());
  const double num_gt = static_cast<double>(ground_truth.size());
  std::size_t tp = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (matches.is_tp[order[rank]]) ++tp;
    curve.recall.push_back(num_gt > 0.0 ? static_cast<double>(tp) / num_gt
                                        : 0.0);
    curve.precision.push_back(static_cast<double>(tp) /
                              static_cast<double>(rank + 1));
    curve.threshold.push_back(detections[order[rank]].score);
  }
  return curve;
}

double ap_from_curve(const PrCurve& curve) {
  // Max precision at recall >= r, swept once from the high-recall end.
  const std::size_t n = curve.recall.size();
  std::vector<double> max_prec_from(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    max_prec_from[i] = std::max(max_prec_from[i + 1], curve.precision[i]);
  }
  double total = 0.0;
  std::size_t point = 0;  // first curve point with recall >= grid value
  for (int grid = 0; grid <= 100; ++grid) {
    const double r = static_cast<double>(grid) / 100.0;
    while (point < n && curve.recall[point] < r) ++point;
    total += max_prec_from[point];
  }
  return total / 101.0;
}

double average_precision_50(std::span<const Detection> detections,
                            std::span<const GroundTruthBox> ground_truth,
                            double iou_thresh) {
  if (ground_truth.empty()) {
    throw std::invalid_argument("average precision needs ground truth");
  }
  if (detections.empty()) return 0.0;
  return ap_from_curve(compute_pr_curve(detections, ground_truth, iou_thresh));
}

GroupedApReport average_precision_by_tag(
    std::span<const Detection> detections,
    std::span<const GroundTruthBox> ground_truth, double iou_thresh) {
  GroupedApReport report;
  report.overall_ap = average_precision_50(detections, ground_truth, iou_thresh);

  // Frame-level grouping: a frame carries every tag its ground truth does.
  std::map<std::string, std::set<FrameRef>> tag_frames;
  for (const GroundTruthBox& gt : ground_truth) {
    for (const std::string& tag : gt.tags) {
      tag_frames[tag].insert(gt.frame);
    }
  }

  for (const auto& [tag, frames] : tag_frames) {
    std::vector<GroundTruthBox> group_gt;
    for (const GroundTruthBox& gt : ground_truth) {
      if (frames.contains(gt.frame)) group_gt.push_back(gt);
    }
    if (group_gt.empty()) {
      report.warnings.push_back("tag \"" + tag + "\" has no ground truth; skipped");
      continue;
    }
    std::vector<Detection> group_dets;
    for (const Detection& det : detections) {
      if (frames.contains(det.frame)) group_dets.push_back(det);
    }
    TagGroupAp entry;
    entry.tag = tag;
    entry.num_gt = group_gt.size();
    entry.num_detections = group_dets.size();
    entry.ap = average_precision_50(group_dets, group_gt, iou_thresh);
    report.per_tag.push_back(std::move(entry));
  }
  return report;
}

double ks_statistic(std::span<const double> scores_a,
                    std::span<const double> scores_b) {
  if (scores_a.empty() || scores_b.empty()) {
    throw std::invalid_argument("ks_statistic needs non-empty samples");
  }
  std::vector<double> a(scores_a.begin(), scores_a.end());
  std::vector<double> b(scores_b.begin(), scores_b.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());

  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  double best = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na -
                                   static_cast<double>(j) / nb));
  }
  return best;
}

}  // namespace selftrain
