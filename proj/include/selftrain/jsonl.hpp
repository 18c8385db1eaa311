#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "selftrain/geometry.hpp"
#include "selftrain/pseudolabel.hpp"
#include "selftrain/tracklet.hpp"

namespace selftrain {

/// Raised on the first malformed or invalid line; `line` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line,
             const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A parsed record sequence together with where it came from. Records are
/// sorted by (video, frame) with the original line order preserved within a
/// frame.
template <typename Record>
struct RecordStream {
  std::vector<Record> records;
  std::string source;  // file path, or "<memory>" for in-memory streams
};

// Line-oriented JSON parsers. Parsing is total: either every line is valid
// or a ParseError names the first bad line. Unknown keys are rejected.
RecordStream<Detection> parse_detections(std::istream& in,
                                         std::string source = "<memory>");
RecordStream<GroundTruthBox> parse_ground_truth(std::istream& in,
                                                std::string source = "<memory>");
RecordStream<PseudoLabel> parse_pseudolabels(std::istream& in,
                                             std::string source = "<memory>");
std::vector<Tracklet> parse_tracklets(std::istream& in,
                                      std::string source = "<memory>");

// One record per line; numeric fields use the shortest decimal encoding that
// parses back to the same double, so serialize/parse round-trips are
// bit-exact.
void serialize_detections(std::span<const Detection> records,
                          std::ostream& out);
void serialize_ground_truth(std::span<const GroundTruthBox> records,
                            std::ostream& out);
void serialize_pseudolabels(std::span<const PseudoLabel> records,
                            std::ostream& out);
void serialize_tracklets(std::span<const Tracklet> records, std::ostream& out);

// File convenience wrappers.
RecordStream<Detection> load_detections(const std::filesystem::path& path);
RecordStream<GroundTruthBox> load_ground_truth(
    const std::filesystem::path& path);
RecordStream<PseudoLabel> load_pseudolabels(const std::filesystem::path& path);
std::vector<Tracklet> load_tracklets(const std::filesystem::path& path);

void write_detections(std::span<const Detection> records,
                      const std::filesystem::path& path);
void write_ground_truth(std::span<const GroundTruthBox> records,
                        const std::filesystem::path& path);
void write_pseudolabels(std::span<const PseudoLabel> records,
                        const std::filesystem::path& path);
void write_tracklets(std::span<const Tracklet> records,
                     const std::filesystem::path& path);

/// Plain text scores, one per line; used by the remap tooling. Validates
/// every score lies in [0,1].
std::vector<double> load_scores(const std::filesystem::path& path);
std::vector<double> parse_scores(std::istream& in,
                                 std::string source = "<memory>");

}  // namespace selftrain
