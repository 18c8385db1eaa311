#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "selftrain/geometry.hpp"

namespace selftrain {

struct MatchResult {
  std::vector<bool> is_tp;               // parallel to the input detections
  std::vector<std::int64_t> matched_gt;  // index into ground truth, -1 if FP
  std::size_t num_matched_gt = 0;
};

/// Greedy matching: detections in descending score order (ties by video,
/// frame, then input order) each claim the unmatched ground-truth box with
/// the highest IoU >= iou_thresh in the same frame. A ground-truth box
/// matches at most one detection.
MatchResult match_detections(std::span<const Detection> detections,
                             std::span<const GroundTruthBox> ground_truth,
                             double iou_thresh = 0.5);

/// Precision/recall after each detection in descending score order.
struct PrCurve {
  std::vector<double> recall;     // non-decreasing
  std::vector<double> precision;
  std::vector<double> threshold;  // score of the detection adding the point
};

PrCurve compute_pr_curve(std::span<const Detection> detections,
                         std::span<const GroundTruthBox> ground_truth,
                         double iou_thresh = 0.5);

/// 101-point interpolated average precision: mean over the recall grid
/// 0.00, 0.01, ..., 1.00 of the maximum precision at recall >= grid point.
double ap_from_curve(const PrCurve& curve);

/// AP at the given IoU threshold. Throws std::invalid_argument when the
/// ground truth is empty; zero detections give AP 0.
double average_precision_50(std::span<const Detection> detections,
                            std::span<const GroundTruthBox> ground_truth,
                            double iou_thresh = 0.5);

struct TagGroupAp {
  std::string tag;
  double ap = 0.0;
  std::size_t num_gt = 0;
  std::size_t num_detections = 0;
};

struct GroupedApReport {
  double overall_ap = 0.0;
  std::vector<TagGroupAp> per_tag;        // sorted by tag
  std::vector<std::string> warnings;      // skipped groups etc.
};

/// Overall AP plus one AP per observed ground-truth tag. Grouping is
/// frame-level: a frame belongs to tag t when any of its ground-truth boxes
/// carries t, and the group evaluates all detections and ground truth of
/// those frames.
GroupedApReport average_precision_by_tag(
    std::span<const Detection> detections,
    std::span<const GroundTruthBox> ground_truth, double iou_thresh = 0.5);

/// Two-sample Kolmogorov-Smirnov statistic: sup-norm distance between the
/// empirical CDFs. Throws std::invalid_argument on empty input.
double ks_statistic(std::span<const double> scores_a,
                    std::span<const double> scores_b);

}  // namespace selftrain
