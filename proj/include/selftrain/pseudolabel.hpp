#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selftrain/geometry.hpp"
#include "selftrain/score_remap.hpp"
#include "selftrain/tracklet.hpp"

namespace selftrain {

/// One automatically labeled target-domain training region.
struct PseudoLabel {
  FrameRef frame;
  BoundingBox box;
  Origin origin = Origin::detector;
  std::optional<double> detector_score;  // d_i; absent only for tracker boxes
                                         // with no underlying detection
  std::int64_t tracklet_id = -1;         // -1 when not tracklet-filtered
  double hard_label = 1.0;               // y_i; 1 for every positive
  double soft_score = 1.0;               // s_i
  double soft_label = 1.0;               // y~_i = lambda*s_i + (1-lambda)*y_i

  bool operator==(const PseudoLabel&) const = default;
};

/// Label-assignment schemes. det/track/hp train with hard labels; the last
/// three produce soft labels (label_smooth via the lambda interpolation
/// weight, hp_cons and score_remap parameter-free).
enum class Scheme { det, track, hp, label_smooth, hp_cons, score_remap };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& text);

struct SchemeConfig {
  Scheme scheme = Scheme::hp;
  double theta = 0.5;
  std::optional<double> lambda;            // required iff label_smooth
  std::optional<ScoreCdf> source_cdf;      // required iff score_remap
  std::optional<ScoreCdf> target_cdf;      // required iff score_remap

  /// Throws std::invalid_argument on missing or out-of-range parameters.
  void validate() const;
};

/// Exactly the detections with score >= theta, order preserved.
std::vector<Detection> select_high_confidence(
    std::span<const Detection> detections, double theta);

enum class AssembleMode { det, track, hp };

/// Turns pruned tracklets into pseudo-labels. Origin is re-derived from each
/// entry's detector score against `theta` (entries without a score stay
/// tracker-origin), so the stored labels always reflect the theta used at
/// assembly. hp keeps every entry, det keeps detector-origin entries only,
/// track keeps tracker-origin entries only. Every label gets hard_label 1.
std::vector<PseudoLabel> assemble_pseudolabels(
    std::span<const Tracklet> tracklets, AssembleMode mode, double theta);

/// Escape hatch matching plain detection-based self-training: every
/// detection with score >= theta becomes its own detector-origin label with
/// no tracklet association (tracklet_id -1).
std::vector<PseudoLabel> detections_as_pseudolabels(
    std::span<const Detection> detections, double theta);

/// Sets s_i per the configured scheme:
///   label_smooth: d_i for detector origin, theta for tracker origin
///   hp_cons:      d_i for detector origin, 1 for tracker origin
///   score_remap:  remap_score(d_i) for detector origin, theta for tracker
///   det/track/hp: s_i = hard label (soft scores unused)
std::vector<PseudoLabel> assign_soft_scores(std::vector<PseudoLabel> labels,
                                            const SchemeConfig& config);

/// Sets y~_i = lambda*s_i + (1-lambda)*y_i for every label.
std::vector<PseudoLabel> interpolate_labels(std::vector<PseudoLabel> labels,
                                            double lambda);

/// Full scheme application over pruned tracklets: assemble, assign soft
/// scores, interpolate. det/track/hp yield hard labels (y~ = y = 1);
/// label_smooth uses the configured lambda; hp_cons and score_remap fix
/// lambda = 1 internally.
std::vector<PseudoLabel> apply_scheme(std::span<const Tracklet> tracklets,
                                      const SchemeConfig& config);

}  // namespace selftrain
