#include "selftrain/score_remap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "selftrain/detection_eval.hpp"

namespace selftrain {

std::string to_string(DomainTag tag) {
  return tag == DomainTag::source ? "source" : "target";
}

ScoreCdf::ScoreCdf(std::vector<double> scores, DomainTag domain)
    : sorted_(std::move(scores)), domain_(domain) {
  if (sorted_.empty()) {
    throw std::invalid_argument("a score CDF needs at least one sample");
  }
  for (double s : sorted_) {
    if (!(std::isfinite(s) && s >= 0.0 && s <= 1.0)) {
      throw std::invalid_argument("score sample outside [0,1]");
    }
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double ScoreCdf::cdf(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) /
         static_cast<double>(sorted_.size());
}

double ScoreCdf::cdf_interp(double x) const {
  const double n = static_cast<double>(sorted_.size());
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - sorted_.begin());
  if (k == 0) return 0.0;                       // below every sample
  if (x == sorted_[k - 1]) return static_cast<double>(k) / n;  // on a sample
  if (k == sorted_.size()) return 1.0;          // above every sample
  // Strictly between sorted_[k-1] and sorted_[k]: the linear segment from
  // node (v_{k-1}, k/n) to node (v_k, (k+1)/n).
  const double lo = sorted_[k - 1];
  const double hi = sorted_[k];
  return (static_cast<double>(k) + (x - lo) / (hi - lo)) / n;
}

double ScoreCdf::quantile(double q) const {
  const double n = static_cast<double>(sorted_.size());
  if (q <= 1.0 / n) return sorted_.front();  // no previous node: plateau
  if (q >= 1.0) return sorted_.back();
  // First node with CDF >= q is ceil(q*n - 1); interpolate from the previous.
  const double pos = q * n;  // in (1, n)
  std::size_t i = static_cast<std::size_t>(std::ceil(pos)) - 1;
  i = std::min(i, sorted_.size() - 1);
  const double q_lo = static_cast<double>(i) / n;
  const double q_hi = static_cast<double>(i + 1) / n;
  const double v_lo = sorted_[i - 1];
  const double v_hi = sorted_[i];
  return v_lo + (q - q_lo) / (q_hi - q_lo) * (v_hi - v_lo);
}

ScoreCdf build_empirical_cdf(std::vector<double> scores, DomainTag domain) {
  return ScoreCdf(std::move(scores), domain);
}

double remap_score(double x, const ScoreCdf& target_cdf,
                   const ScoreCdf& source_cdf) {
  const double mapped = source_cdf.quantile(target_cdf.cdf_interp(x));
  return std::clamp(mapped, 0.0, 1.0);
}

double transfer_threshold(double theta_source, const ScoreCdf& target_cdf,
                          const ScoreCdf& source_cdf) {
  const double mapped = target_cdf.quantile(source_cdf.cdf_interp(theta_source));
  return std::clamp(mapped, 0.0, 1.0);
}

double threshold_at_precision(std::span<const Detection> detections,
                              std::span<const GroundTruthBox> ground_truth,
                              double target_precision, double iou_thresh) {
  if (detections.empty()) {
    throw std::invalid_argument("threshold_at_precision needs detections");
  }
  if (!(target_precision > 0.0 && target_precision <= 1.0)) {
    throw std::invalid_argument("target precision must lie in (0,1]");
  }

  // Greedy matching is prefix-stable in descending score order, so one match
  // pass gives the TP flags for every threshold.
  const MatchResult matches =
      match_detections(detections, ground_truth, iou_thresh);

  struct Scored {
    double score;
    bool tp;
  };
  std::vector<Scored> scored;
  scored.reserve(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    scored.push_back({detections[i].score, matches.is_tp[i]});
  }
  std::sort(scored.begin(), scored.end(),
            [](const Scored& a, const Scored& b) { return a.score > b.score; });

  double best = 1.0;
  bool found = false;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (scored[i].tp) ++tp;
    // Evaluate only at the last detection of a tied score group, where the
    // counts reflect every detection with score >= that value.
    if (i + 1 < scored.size() && scored[i + 1].score == scored[i].score) {
      continue;
    }
    const double precision =
        static_cast<double>(tp) / static_cast<double>(i + 1);
    if (precision >= target_precision) {
      best = scored[i].score;  // descending scan: last hit is the smallest
      found = true;
    }
  }
  return found ? best : 1.0;
}

ThresholdTransfer auto_threshold(std::span<const Detection> source_detections,
                                 std::span<const GroundTruthBox> source_gt,
                                 std::span<const Detection> target_detections,
                                 double target_precision, double iou_thresh) {
  const double theta_source = threshold_at_precision(
      source_detections, source_gt, target_precision, iou_thresh);

  std::vector<double> source_scores;
  source_scores.reserve(source_detections.size());
  for (const Detection& det : source_detections) {
    source_scores.push_back(det.score);
  }
  std::vector<double> target_scores;
  target_scores.reserve(target_detections.size());
  for (const Detection& det : target_detections) {
    target_scores.push_back(det.score);
  }
  const ScoreCdf source_cdf =
      build_empirical_cdf(std::move(source_scores), DomainTag::source);
  const ScoreCdf target_cdf =
      build_empirical_cdf(std::move(target_scores), DomainTag::target);

  ThresholdTransfer out;
  out.theta_source = theta_source;
  out.theta_target = transfer_threshold(theta_source, target_cdf, source_cdf);
  out.precision = target_precision;

  const MatchResult matches =
      match_detections(source_detections, source_gt, iou_thresh);
  std::size_t kept = 0, tp = 0;
  for (std::size_t i = 0; i < source_detections.size(); ++i) {
    if (source_detections[i].score >= theta_source) {
      ++kept;
      if (matches.is_tp[i]) ++tp;
    }
  }
  out.achieved_precision =
      kept == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(kept);
  return out;
}

}  // namespace selftrain
