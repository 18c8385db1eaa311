#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selftrain/geometry.hpp"

namespace selftrain {

/// Provenance of a box: scored above threshold by the detector, or kept
/// alive below threshold by temporal linking.
enum class Origin { detector, tracker };

std::string to_string(Origin origin);
Origin origin_from_string(const std::string& text);

struct TrackletEntry {
  std::int64_t frame = 0;
  BoundingBox box;
  Origin origin = Origin::detector;
  std::optional<double> score;  // detector confidence; absent for boxes with
                                // no underlying detection

  bool operator==(const TrackletEntry&) const = default;
};

/// A temporally consecutive chain of boxes following one object through one
/// video. Frames increase by exactly 1 between adjacent entries.
struct Tracklet {
  std::int64_t id = 0;
  std::string video;
  std::vector<TrackletEntry> entries;

  std::int64_t start_frame() const {
    return entries.empty() ? 0 : entries.front().frame;
  }
  std::size_t length() const { return entries.size(); }

  bool operator==(const Tracklet&) const = default;
};

struct LinkConfig {
  double link_iou = 0.5;      // minimum IoU between consecutive boxes
  double theta = 0.5;         // detector-confidence threshold
  double recall_floor = 0.05; // detections below this never enter linking
};

/// Greedy frame-to-frame association for the detections of a single video.
///
/// At each frame, candidate (active tracklet, detection) pairs with
/// IoU >= link_iou are taken in descending IoU order, ties broken by lower
/// detection index within the frame, then lower tracklet id. Unmatched
/// detections with score >= theta start new tracklets; a tracklet that finds
/// no match terminates (no gap tolerance). Entries with score >= theta are
/// flagged Origin::detector, entries that joined only through continuity are
/// flagged Origin::tracker.
///
/// Detections must be sorted by frame and belong to one video; otherwise an
/// std::invalid_argument is thrown. Empty input yields an empty result.
std::vector<Tracklet> link_tracklets(std::span<const Detection> detections,
                                     const LinkConfig& config);

/// Links every video in a (video, frame)-sorted detection stream and returns
/// all tracklets in canonical order (video, start frame, creation order) with
/// ids renumbered sequentially. Videos are processed independently, so the
/// result does not depend on the thread count.
std::vector<Tracklet> link_all_videos(std::span<const Detection> detections,
                                      const LinkConfig& config,
                                      unsigned threads = 1);

/// Keeps exactly the tracklets with length >= min_len, order preserved.
std::vector<Tracklet> prune_tracklets(std::vector<Tracklet> tracklets,
                                      int min_len);

}  // namespace selftrain
