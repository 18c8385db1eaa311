#include "selftrain/tracklet.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <tuple>

#include "selftrain/parallel.hpp"

namespace selftrain {

std::string to_string(Origin origin) {
  return origin == Origin::detector ? "detector" : "tracker";
}

Origin origin_from_string(const std::string& text) {
  if (text == "detector") return Origin::detector;
  if (text == "tracker") return Origin::tracker;
  throw std::invalid_argument("unknown origin \"" + text + "\"");
}

namespace {

void check_link_config(const LinkConfig& config) {
  if (!(config.link_iou > 0.0 && config.link_iou < 1.0)) {
    throw std::invalid_argument("link_iou must lie in (0,1)");
  }
  if (!(config.theta > 0.0 && config.theta < 1.0)) {
    throw std::invalid_argument("theta must lie in (0,1)");
  }
}

struct ActiveTrack {
  std::size_t index;  // into the result vector
  BoundingBox last_box;
};

}  // namespace

std::vector<Tracklet> link_tracklets(std::span<const Detection> detections,
                                     const LinkConfig& config) {
  check_link_config(config);
  if (detections.empty()) return {};

  const std::string& video = detections.front().frame.video;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].frame.video != video) {
      throw std::invalid_argument(
          "link_tracklets expects detections of a single video");
    }
    if (i > 0 && detections[i].frame.frame < detections[i - 1].frame.frame) {
      throw std::invalid_argument("detections must be sorted by frame");
    }
  }

  // Group the above-floor detections by frame, keeping input order within a
  // frame as the frame-local index.
  std::map<std::int64_t, std::vector<const Detection*>> by_frame;
  for (const Detection& det : detections) {
    if (det.score < config.recall_floor) continue;
    by_frame[det.frame.frame].push_back(&det);
  }

  std::vector<Tracklet> result;
  std::vector<ActiveTrack> active;

  for (const auto& [frame, dets] : by_frame) {
    // Tracklets not extended at the previous frame terminate.
    std::erase_if(active, [&](const ActiveTrack& t) {
      const Tracklet& tk = result[t.index];
      return tk.entries.back().frame != frame - 1;
    });

    // Candidate pairs in descending IoU, ties by detection index then
    // tracklet id.
    struct Pair {
      double iou_value;
      std::size_t det_idx;
      std::size_t active_idx;
    };
    std::vector<Pair> pairs;
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t d = 0; d < dets.size(); ++d) {
        const double v = iou(active[a].last_box, dets[d]->box);
        if (v >= config.link_iou) pairs.push_back({v, d, a});
      }
    }
    std::sort(pairs.begin(), pairs.end(), [&](const Pair& l, const Pair& r) {
      if (l.iou_value != r.iou_value) return l.iou_value > r.iou_value;
      if (l.det_idx != r.det_idx) return l.det_idx < r.det_idx;
      return result[active[l.active_idx].index].id <
             result[active[r.active_idx].index].id;
    });

    std::vector<bool> det_taken(dets.size(), false);
    std::vector<bool> track_taken(active.size(), false);
    for (const Pair& p : pairs) {
      if (det_taken[p.det_idx] || track_taken[p.active_idx]) continue;
      det_taken[p.det_idx] = true;
      track_taken[p.active_idx] = true;
      const Detection& det = *dets[p.det_idx];
      Tracklet& tk = result[active[p.active_idx].index];
      tk.entries.push_back({det.frame.frame, det.box,
                            det.score >= config.theta ? Origin::detector
                                                      : Origin::tracker,
                            det.score});
      active[p.active_idx].last_box = det.box;
    }

    // Unmatched high-confidence detections start new tracklets.
    for (std::size_t d = 0; d < dets.size(); ++d) {
      if (det_taken[d]) continue;
      const Detection& det = *dets[d];
      if (det.score < config.theta) continue;
      Tracklet tk;
      tk.id = static_cast<std::int64_t>(result.size());
      tk.video = video;
      tk.entries.push_back(
          {det.frame.frame, det.box, Origin::detector, det.score});
      result.push_back(std::move(tk));
      active.push_back({result.size() - 1, det.box});
    }
  }

  // Creation order equals (start frame, frame-local index), which is already
  // the canonical order within one video.
  return result;
}

std::vector<Tracklet> link_all_videos(std::span<const Detection> detections,
                                      const LinkConfig& config,
                                      unsigned threads) {
  check_link_config(config);

  for (std::size_t i = 1; i < detections.size(); ++i) {
    if (detections[i].frame < detections[i - 1].frame &&
        detections[i].frame.video != detections[i - 1].frame.video) {
      throw std::invalid_argument("detections must be sorted by (video, frame)");
    }
  }

  // Contiguous per-video slices; the sort guarantees grouping.
  std::vector<std::pair<std::size_t, std::size_t>> slices;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= detections.size(); ++i) {
    if (i == detections.size() ||
        detections[i].frame.video != detections[begin].frame.video) {
      slices.emplace_back(begin, i);
      begin = i;
    }
  }

  std::vector<std::vector<Tracklet>> per_video(slices.size());
  parallel_for(slices.size(), threads, [&](std::size_t s) {
    per_video[s] = link_tracklets(
        detections.subspan(slices[s].first, slices[s].second - slices[s].first),
        config);
  });

  std::vector<Tracklet> all;
  for (auto& group : per_video) {
    for (Tracklet& tk : group) {
      tk.id = static_cast<std::int64_t>(all.size());
      all.push_back(std::move(tk));
    }
  }
  return all;
}

std::vector<Tracklet> prune_tracklets(std::vector<Tracklet> tracklets,
                                      int min_len) {
  if (min_len < 1) throw std::invalid_argument("min_len must be >= 1");
  std::erase_if(tracklets, [&](const Tracklet& tk) {
    return tk.length() < static_cast<std::size_t>(min_len);
  });
  return tracklets;
}

}  // namespace selftrain
