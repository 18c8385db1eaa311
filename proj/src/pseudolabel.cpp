#include "selftrain/pseudolabel.hpp"

#include <algorithm>
#include <stdexcept>

namespace selftrain {

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::det: return "det";
    case Scheme::track: return "track";
    case Scheme::hp: return "hp";
    case Scheme::label_smooth: return "label-smooth";
    case Scheme::hp_cons: return "hp-cons";
    case Scheme::score_remap: return "score-remap";
  }
  throw std::logic_error("unreachable");
}

Scheme scheme_from_string(const std::string& text) {
  if (text == "det") return Scheme::det;
  if (text == "track") return Scheme::track;
  if (text == "hp") return Scheme::hp;
  if (text == "label-smooth") return Scheme::label_smooth;
  if (text == "hp-cons") return Scheme::hp_cons;
  if (text == "score-remap") return Scheme::score_remap;
  throw std::invalid_argument("unknown scheme \"" + text + "\"");
}

void SchemeConfig::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw std::invalid_argument("theta must lie in (0,1)");
  }
  if (scheme == Scheme::label_smooth) {
    if (!lambda) {
      throw std::invalid_argument("scheme label-smooth requires lambda");
    }
    if (!(*lambda >= 0.0 && *lambda <= 1.0)) {
      throw std::invalid_argument("lambda must lie in [0,1]");
    }
  } else if (lambda) {
    throw std::invalid_argument("lambda applies to label-smooth only");
  }
  if (scheme == Scheme::score_remap) {
    if (!source_cdf || !target_cdf) {
      throw std::invalid_argument(
          "scheme score-remap requires source and target score CDFs");
    }
  } else if (source_cdf || target_cdf) {
    throw std::invalid_argument("score CDFs apply to score-remap only");
  }
}

std::vector<Detection> select_high_confidence(
    std::span<const Detection> detections, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw std::invalid_argument("theta must lie in (0,1)");
  }
  std::vector<Detection> kept;
  for (const Detection& det : detections) {
    if (det.score >= theta) kept.push_back(det);
  }
  return kept;
}

std::vector<PseudoLabel> assemble_pseudolabels(
    std::span<const Tracklet> tracklets, AssembleMode mode, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) {
    throw std::invalid_argument("theta must lie in (0,1)");
  }
  std::vector<PseudoLabel> labels;
  for (const Tracklet& tk : tracklets) {
    for (const TrackletEntry& entry : tk.entries) {
      const Origin origin = entry.score && *entry.score >= theta
                                ? Origin::detector
                                : Origin::tracker;
      if (mode == AssembleMode::det && origin != Origin::detector) continue;
      if (mode == AssembleMode::track && origin != Origin::tracker) continue;
      PseudoLabel label;
      label.frame = {tk.video, entry.frame};
      label.box = entry.box;
      label.origin = origin;
      label.detector_score = entry.score;
      label.tracklet_id = tk.id;
      label.hard_label = 1.0;
      label.soft_score = 1.0;
      label.soft_label = 1.0;
      labels.push_back(std::move(label));
    }
  }
  return labels;
}

std::vector<PseudoLabel> detections_as_pseudolabels(
    std::span<const Detection> detections, double theta) {
  std::vector<PseudoLabel> labels;
  for (const Detection& det : select_high_confidence(detections, theta)) {
    PseudoLabel label;
    label.frame = det.frame;
    label.box = det.box;
    label.origin = Origin::detector;
    label.detector_score = det.score;
    label.tracklet_id = -1;
    labels.push_back(std::move(label));
  }
  return labels;
}

std::vector<PseudoLabel> assign_soft_scores(std::vector<PseudoLabel> labels,
                                            const SchemeConfig& config) {
  config.validate();
  for (PseudoLabel& label : labels) {
    if (label.origin == Origin::detector && !label.detector_score) {
      throw std::invalid_argument(
          "detector-origin label without a detector score");
    }
    switch (config.scheme) {
      case Scheme::det:
      case Scheme::track:
      case Scheme::hp:
        label.soft_score = label.hard_label;  // soft scores unused
        break;
      case Scheme::label_smooth:
        label.soft_score = label.origin == Origin::detector
                               ? *label.detector_score
                               : config.theta;
        break;
      case Scheme::hp_cons:
        label.soft_score = label.origin == Origin::detector
                               ? *label.detector_score
                               : 1.0;
        break;
      case Scheme::score_remap:
        label.soft_score =
            label.origin == Origin::detector
                ? remap_score(*label.detector_score, *config.target_cdf,
                              *config.source_cdf)
                : config.theta;
        break;
    }
  }
  return labels;
}

std::vector<PseudoLabel> interpolate_labels(std::vector<PseudoLabel> labels,
                                            double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("lambda must lie in [0,1]");
  }
  for (PseudoLabel& label : labels) {
    label.soft_label =
        lambda * label.soft_score + (1.0 - lambda) * label.hard_label;
  }
  return labels;
}

std::vector<PseudoLabel> apply_scheme(std::span<const Tracklet> tracklets,
                                      const SchemeConfig& config) {
  config.validate();
  AssembleMode mode = AssembleMode::hp;
  if (config.scheme == Scheme::det) mode = AssembleMode::det;
  if (config.scheme == Scheme::track) mode = AssembleMode::track;

  std::vector<PseudoLabel> labels =
      assemble_pseudolabels(tracklets, mode, config.theta);
  labels = assign_soft_scores(std::move(labels), config);

  double lambda = 1.0;  // hp-cons and score-remap are parameter-free
  switch (config.scheme) {
    case Scheme::det:
    case Scheme::track:
    case Scheme::hp:
      lambda = 0.0;  // hard labels: y~ = y
      break;
    case Scheme::label_smooth:
      lambda = *config.lambda;
      break;
    case Scheme::hp_cons:
    case Scheme::score_remap:
      lambda = 1.0;
      break;
  }
  return interpolate_labels(std::move(labels), lambda);
}

}  // namespace selftrain
