#include "selftrain/jsonl.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace selftrain {

using nlohmann::ordered_json;

ParseError::ParseError(const std::string& source, std::size_t line,
                       const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
      line_(line) {}

namespace {

[[noreturn]] void fail(const std::string& source, std::size_t line,
                       const std::string& what) {
  throw ParseError(source, line, what);
}

ordered_json parse_object(const std::string& text, const std::string& source,
                          std::size_t line) {
  ordered_json value;
  try {
    value = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(source, line, std::string("malformed JSON: ") + e.what());
  }
  if (!value.is_object()) fail(source, line, "expected a JSON object");
  return value;
}

void check_keys(const ordered_json& obj,
                const std::vector<std::string>& required,
                const std::vector<std::string>& optional,
                const std::string& source, std::size_t line) {
  for (const std::string& key : required) {
    if (!obj.contains(key)) fail(source, line, "missing field \"" + key + "\"");
  }
  for (const auto& item : obj.items()) {
    const std::string& key = item.key();
    if (std::find(required.begin(), required.end(), key) == required.end() &&
        std::find(optional.begin(), optional.end(), key) == optional.end()) {
      fail(source, line, "unknown field \"" + key + "\"");
    }
  }
}

std::string get_string(const ordered_json& obj, const std::string& key,
                       const std::string& source, std::size_t line) {
  if (!obj.at(key).is_string()) {
    fail(source, line, "field \"" + key + "\" must be a string");
  }
  return obj.at(key).get<std::string>();
}

std::int64_t get_integer(const ordered_json& obj, const std::string& key,
                         const std::string& source, std::size_t line) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    fail(source, line, "field \"" + key + "\" must be an integer");
  }
  return v.get<std::int64_t>();
}

double get_number(const ordered_json& obj, const std::string& key,
                  const std::string& source, std::size_t line) {
  const auto& v = obj.at(key);
  if (!v.is_number()) {
    fail(source, line, "field \"" + key + "\" must be a number");
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(source, line, "field \"" + key + "\" must be finite");
  return d;
}

double get_unit_interval(const ordered_json& obj, const std::string& key,
                         const std::string& source, std::size_t line) {
  const double d = get_number(obj, key, source, line);
  if (d < 0.0 || d > 1.0) {
    std::ostringstream msg;
    msg << "field \"" << key << "\" value " << d << " outside [0,1]";
    fail(source, line, msg.str());
  }
  return d;
}

BoundingBox get_bbox(const ordered_json& obj, const std::string& source,
                     std::size_t line) {
  const auto& v = obj.at("bbox");
  if (!v.is_array() || v.size() != 4) {
    fail(source, line, "field \"bbox\" must be an array [x,y,w,h]");
  }
  double vals[4];
  for (std::size_t i = 0; i < 4; ++i) {
    if (!v[i].is_number()) fail(source, line, "bbox entries must be numbers");
    vals[i] = v[i].get<double>();
    if (!std::isfinite(vals[i])) fail(source, line, "bbox entries must be finite");
  }
  const BoundingBox box{vals[0], vals[1], vals[2], vals[3]};
  if (!box.valid()) fail(source, line, "bbox width and height must be > 0");
  return box;
}

FrameRef get_frame_ref(const ordered_json& obj, const std::string& source,
                       std::size_t line) {
  FrameRef ref;
  ref.video = get_string(obj, "video", source, line);
  ref.frame = get_integer(obj, "frame", source, line);
  if (ref.frame < 0) fail(source, line, "field \"frame\" must be >= 0");
  return ref;
}

ordered_json bbox_json(const BoundingBox& box) {
  return ordered_json::array({box.x, box.y, box.w, box.h});
}

template <typename Record, typename ParseLine>
std::vector<Record> parse_lines(std::istream& in, const std::string& source,
                                ParseLine&& parse_line) {
  std::vector<Record> records;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    records.push_back(parse_line(parse_object(text, source, line), line));
  }
  return records;
}

template <typename Record>
void sort_stream(std::vector<Record>& records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const Record& a, const Record& b) {
                     return a.frame < b.frame;
                   });
}

}  // namespace

RecordStream<Detection> parse_detections(std::istream& in, std::string source) {
  RecordStream<Detection> stream;
  stream.source = std::move(source);
  stream.records = parse_lines<Detection>(
      in, stream.source, [&](const ordered_json& obj, std::size_t line) {
        check_keys(obj, {"video", "frame", "bbox", "score"}, {}, stream.source,
                   line);
        Detection det;
        det.frame = get_frame_ref(obj, stream.source, line);
        det.box = get_bbox(obj, stream.source, line);
        det.score = get_unit_interval(obj, "score", stream.source, line);
        return det;
      });
  sort_stream(stream.records);
  return stream;
}

RecordStream<GroundTruthBox> parse_ground_truth(std::istream& in,
                                                std::string source) {
  RecordStream<GroundTruthBox> stream;
  stream.source = std::move(source);
  stream.records = parse_lines<GroundTruthBox>(
      in, stream.source, [&](const ordered_json& obj, std::size_t line) {
        check_keys(obj, {"video", "frame", "bbox"}, {"tags"}, stream.source,
                   line);
        GroundTruthBox gt;
        gt.frame = get_frame_ref(obj, stream.source, line);
        gt.box = get_bbox(obj, stream.source, line);
        if (obj.contains("tags")) {
          const auto& tags = obj.at("tags");
          if (!tags.is_array()) {
            fail(stream.source, line, "field \"tags\" must be a string array");
          }
          for (const auto& t : tags) {
            if (!t.is_string()) {
              fail(stream.source, line, "field \"tags\" must be a string array");
            }
            gt.tags.push_back(t.get<std::string>());
          }
          std::sort(gt.tags.begin(), gt.tags.end());
          gt.tags.erase(std::unique(gt.tags.begin(), gt.tags.end()),
                        gt.tags.end());
        }
        return gt;
      });
  sort_stream(stream.records);
  return stream;
}

RecordStream<PseudoLabel> parse_pseudolabels(std::istream& in,
                                             std::string source) {
  RecordStream<PseudoLabel> stream;
  stream.source = std::move(source);
  stream.records = parse_lines<PseudoLabel>(
      in, stream.source, [&](const ordered_json& obj, std::size_t line) {
        check_keys(obj,
                   {"video", "frame", "bbox", "origin", "tracklet_id",
                    "hard_label", "soft_score", "soft_label"},
                   {"score"}, stream.source, line);
        PseudoLabel label;
        label.frame = get_frame_ref(obj, stream.source, line);
        label.box = get_bbox(obj, stream.source, line);
        try {
          label.origin = origin_from_string(
              get_string(obj, "origin", stream.source, line));
        } catch (const std::invalid_argument& e) {
          fail(stream.source, line, e.what());
        }
        label.tracklet_id = get_integer(obj, "tracklet_id", stream.source, line);
        if (label.tracklet_id < -1) {
          fail(stream.source, line, "field \"tracklet_id\" must be >= -1");
        }
        if (obj.contains("score")) {
          label.detector_score =
              get_unit_interval(obj, "score", stream.source, line);
        } else if (label.origin == Origin::detector) {
          fail(stream.source, line,
               "detector-origin labels must carry a \"score\"");
        }
        label.hard_label = get_unit_interval(obj, "hard_label", stream.source, line);
        label.soft_score = get_unit_interval(obj, "soft_score", stream.source, line);
        label.soft_label = get_unit_interval(obj, "soft_label", stream.source, line);
        const double lo = std::min(label.soft_score, label.hard_label);
        const double hi = std::max(label.soft_score, label.hard_label);
        if (label.soft_label < lo - 1e-12 || label.soft_label > hi + 1e-12) {
          fail(stream.source, line,
               "soft_label must lie between soft_score and hard_label");
        }
        return label;
      });
  sort_stream(stream.records);
  return stream;
}

std::vector<Tracklet> parse_tracklets(std::istream& in, std::string source) {
  std::vector<Tracklet> tracklets;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    const ordered_json obj = parse_object(text, source, line);
    check_keys(obj, {"id", "video", "entries"}, {}, source, line);
    Tracklet tk;
    tk.id = get_integer(obj, "id", source, line);
    if (tk.id < 0) fail(source, line, "field \"id\" must be >= 0");
    tk.video = get_string(obj, "video", source, line);
    const auto& entries = obj.at("entries");
    if (!entries.is_array() || entries.empty()) {
      fail(source, line, "field \"entries\" must be a non-empty array");
    }
    for (const auto& e : entries) {
      if (!e.is_object()) fail(source, line, "tracklet entries must be objects");
      check_keys(e, {"frame", "bbox", "origin"}, {"score"}, source, line);
      TrackletEntry entry;
      entry.frame = get_integer(e, "frame", source, line);
      if (entry.frame < 0) fail(source, line, "entry frame must be >= 0");
      entry.box = get_bbox(e, source, line);
      try {
        entry.origin = origin_from_string(get_string(e, "origin", source, line));
      } catch (const std::invalid_argument& err) {
        fail(source, line, err.what());
      }
      if (e.contains("score")) {
        entry.score = get_unit_interval(e, "score", source, line);
      }
      if (!tk.entries.empty() && entry.frame != tk.entries.back().frame + 1) {
        fail(source, line, "tracklet frames must be consecutive");
      }
      tk.entries.push_back(std::move(entry));
    }
    tracklets.push_back(std::move(tk));
  }
  return tracklets;
}

namespace {

ordered_json detection_json(const Detection& det) {
  ordered_json obj;
  obj["video"] = det.frame.video;
  obj["frame"] = det.frame.frame;
  obj["bbox"] = bbox_json(det.box);
  obj["score"] = det.score;
  return obj;
}

}  // namespace

void serialize_detections(std::span<const Detection> records,
                          std::ostream& out) {
  for (const Detection& det : records) {
    out << detection_json(det).dump() << '\n';
  }
}

void serialize_ground_truth(std::span<const GroundTruthBox> records,
                            std::ostream& out) {
  for (const GroundTruthBox& gt : records) {
    ordered_json obj;
    obj["video"] = gt.frame.video;
    obj["frame"] = gt.frame.frame;
    obj["bbox"] = bbox_json(gt.box);
    if (!gt.tags.empty()) obj["tags"] = gt.tags;
    out << obj.dump() << '\n';
  }
}

void serialize_pseudolabels(std::span<const PseudoLabel> records,
                            std::ostream& out) {
  for (const PseudoLabel& label : records) {
    ordered_json obj;
    obj["video"] = label.frame.video;
    obj["frame"] = label.frame.frame;
    obj["bbox"] = bbox_json(label.box);
    if (label.detector_score) obj["score"] = *label.detector_score;
    obj["origin"] = to_string(label.origin);
    obj["tracklet_id"] = label.tracklet_id;
    obj["hard_label"] = label.hard_label;
    obj["soft_score"] = label.soft_score;
    obj["soft_label"] = label.soft_label;
    out << obj.dump() << '\n';
  }
}

void serialize_tracklets(std::span<const Tracklet> records, std::ostream& out) {
  for (const Tracklet& tk : records) {
    ordered_json obj;
    obj["id"] = tk.id;
    obj["video"] = tk.video;
    ordered_json entries = ordered_json::array();
    for (const TrackletEntry& e : tk.entries) {
      ordered_json entry;
      entry["frame"] = e.frame;
      entry["bbox"] = bbox_json(e.box);
      entry["origin"] = to_string(e.origin);
      if (e.score) entry["score"] = *e.score;
      entries.push_back(std::move(entry));
    }
    obj["entries"] = std::move(entries);
    out << obj.dump() << '\n';
  }
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string() + " for reading");
  }
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  return out;
}

}  // namespace

RecordStream<Detection> load_detections(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_detections(in, path.string());
}

RecordStream<GroundTruthBox> load_ground_truth(
    const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_ground_truth(in, path.string());
}

RecordStream<PseudoLabel> load_pseudolabels(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_pseudolabels(in, path.string());
}

std::vector<Tracklet> load_tracklets(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_tracklets(in, path.string());
}

void write_detections(std::span<const Detection> records,
                      const std::filesystem::path& path) {
  auto out = open_output(path);
  serialize_detections(records, out);
}

void write_ground_truth(std::span<const GroundTruthBox> records,
                        const std::filesystem::path& path) {
  auto out = open_output(path);
  serialize_ground_truth(records, out);
}

void write_pseudolabels(std::span<const PseudoLabel> records,
                        const std::filesystem::path& path) {
  auto out = open_output(path);
  serialize_pseudolabels(records, out);
}

void write_tracklets(std::span<const Tracklet> records,
                     const std::filesystem::path& path) {
  auto out = open_output(path);
  serialize_tracklets(records, out);
}

std::vector<double> parse_scores(std::istream& in, std::string source) {
  std::vector<double> scores;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    try {
      std::size_t consumed = 0;
      const double value = std::stod(text, &consumed);
      while (consumed < text.size() &&
             (text[consumed] == ' ' || text[consumed] == '\t' ||
              text[consumed] == '\r')) {
        ++consumed;
      }
      if (consumed != text.size()) {
        fail(source, line, "trailing characters after score");
      }
      if (!(std::isfinite(value) && value >= 0.0 && value <= 1.0)) {
        fail(source, line, "score outside [0,1]");
      }
      scores.push_back(value);
    } catch (const std::invalid_argument&) {
      fail(source, line, "not a number");
    } catch (const std::out_of_range&) {
      fail(source, line, "number out of range");
    }
  }
  return scores;
}

std::vector<double> load_scores(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_scores(in, path.string());
}

}  // namespace selftrain
