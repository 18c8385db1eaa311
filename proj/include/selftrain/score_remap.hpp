#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "selftrain/geometry.hpp"

namespace selftrain {

enum class DomainTag { source, target };

std::string to_string(DomainTag tag);

/// Empirical distribution of detector scores for one domain.
///
/// Two evaluation conventions coexist and are both needed:
///   - cdf(x): the step ECDF, (#samples <= x) / n.
///   - cdf_interp(x) / quantile(q): a piecewise-linear CDF through the nodes
///     (v_i, (i+1)/n) over the sorted samples v_0..v_{n-1}, and its exact
///     inverse. quantile uses the plateau convention at the ends (q <= 1/n
///     maps to v_0, q >= 1 maps to v_{n-1}).
///
/// Score remapping and threshold transfer both use the interpolated pair so
/// that mapping a score across domains and back reproduces it at every
/// sample point.
class ScoreCdf {
 public:
  ScoreCdf(std::vector<double> scores, DomainTag domain);

  /// Step ECDF: fraction of samples <= x.
  double cdf(double x) const;

  /// Piecewise-linear CDF through the order-statistic nodes; inverse of
  /// quantile() wherever the samples are strictly increasing.
  double cdf_interp(double x) const;

  /// Linear-interpolation quantile with plateau ends.
  double quantile(double q) const;

  std::size_t size() const { return sorted_.size(); }
  DomainTag domain() const { return domain_; }
  const std::vector<double>& samples() const { return sorted_; }

 private:
  std::vector<double> sorted_;
  DomainTag domain_;
};

/// Builds the empirical CDF of a non-empty score sample set. Scores outside
/// [0,1] are a hard error.
ScoreCdf build_empirical_cdf(std::vector<double> scores, DomainTag domain);

/// Histogram specification: replaces a target-domain score x with
/// G^-1(F(x)), where F is the target CDF and G the source CDF. Monotone
/// non-decreasing in x; result clamped to [0,1].
double remap_score(double x, const ScoreCdf& target_cdf,
                   const ScoreCdf& source_cdf);

/// Maps a source-domain threshold into the target domain: F^-1(G(theta_S)).
/// Inverse direction of remap_score under the same interpolation convention.
double transfer_threshold(double theta_source, const ScoreCdf& target_cdf,
                          const ScoreCdf& source_cdf);

/// Smallest detection-score threshold whose precision (TP / (TP+FP) under
/// greedy IoU matching) reaches target_precision on a labeled set; 1.0 when
/// no threshold reaches it. Candidate thresholds are the detection scores.
double threshold_at_precision(std::span<const Detection> detections,
                              std::span<const GroundTruthBox> ground_truth,
                              double target_precision,
                              double iou_thresh = 0.5);

struct ThresholdTransfer {
  double theta_source = 0.0;
  double theta_target = 0.0;
  double precision = 0.0;           // requested precision level
  double achieved_precision = 0.0;  // precision actually reached at theta_source
};

/// Full automatic threshold selection: picks theta_S at the requested
/// precision on the labeled source set, then maps it to the target domain
/// through the score CDFs of the two detection sets.
ThresholdTransfer auto_threshold(std::span<const Detection> source_detections,
                                 std::span<const GroundTruthBox> source_gt,
                                 std::span<const Detection> target_detections,
                                 double target_precision,
                                 double iou_thresh = 0.5);

}  // namespace selftrain
