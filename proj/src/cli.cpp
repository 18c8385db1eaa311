#include "selftrain/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "selftrain/detection_eval.hpp"
#include "selftrain/jsonl.hpp"
#include "selftrain/pseudolabel.hpp"
#include "selftrain/score_remap.hpp"
#include "selftrain/sim.hpp"
#include "selftrain/tracklet.hpp"

namespace selftrain::cli {

namespace {

using nlohmann::ordered_json;

enum class LogLevel { quiet = 0, warn = 1, info = 2 };

LogLevel log_level() {
  const char* env = std::getenv("SELFTRAIN_LOG");
  if (env == nullptr) return LogLevel::warn;
  const std::string value(env);
  if (value == "quiet") return LogLevel::quiet;
  if (value == "info" || value == "debug") return LogLevel::info;
  return LogLevel::warn;
}

void log_info(std::ostream& err, const std::string& message) {
  if (log_level() >= LogLevel::info) err << "[selftrain] " << message << '\n';
}

void log_warn(std::ostream& err, const std::string& message) {
  if (log_level() >= LogLevel::warn) err << "[selftrain] warning: " << message << '\n';
}

std::string shortest(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void emit(std::ostream& out, const ordered_json& summary) {
  out << summary.dump(2) << '\n';
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  return out;
}

// ---------------------------------------------------------------- track ---

struct TrackArgs {
  std::string in;
  std::string out;
  double theta = 0.5;
  double link_iou = 0.5;
  int min_len = 10;
  unsigned threads = 0;
};

int run_track(const TrackArgs& args, std::ostream& out, std::ostream& err) {
  const unsigned threads =
      args.threads > 0 ? args.threads : std::thread::hardware_concurrency();
  const auto stream = load_detections(args.in);

  LinkConfig config;
  config.link_iou = args.link_iou;
  config.theta = args.theta;
  const std::vector<Tracklet> linked =
      link_all_videos(stream.records, config, threads);
  const std::vector<Tracklet> kept = prune_tracklets(linked, args.min_len);
  write_tracklets(kept, args.out);

  std::size_t entries = 0, detector_entries = 0;
  std::set<std::string> videos;
  for (const Tracklet& tk : kept) {
    videos.insert(tk.video);
    entries += tk.entries.size();
    for (const TrackletEntry& e : tk.entries) {
      if (e.origin == Origin::detector) ++detector_entries;
    }
  }
  log_info(err, "kept " + std::to_string(kept.size()) + " of " +
                    std::to_string(linked.size()) + " tracklets");

  ordered_json summary;
  summary["command"] = "track";
  summary["input"] = args.in;
  summary["output"] = args.out;
  summary["theta"] = args.theta;
  summary["link_iou"] = args.link_iou;
  summary["min_len"] = args.min_len;
  summary["detections"] = stream.records.size();
  summary["tracklets_linked"] = linked.size();
  summary["tracklets_kept"] = kept.size();
  summary["videos_with_tracklets"] = videos.size();
  summary["entries"] = entries;
  summary["detector_entries"] = detector_entries;
  summary["tracker_entries"] = entries - detector_entries;
  emit(out, summary);
  return 0;
}

// ---------------------------------------------------------- pseudolabel ---

struct PseudolabelArgs {
  std::string in;
  std::string out;
  std::string scheme;
  double theta = 0.5;
  std::optional<double> lambda;
  std::string source_scores;
  std::string target_scores;
  bool no_tracklet_filter = false;
};

int run_pseudolabel(const PseudolabelArgs& args, std::ostream& out,
                    std::ostream& err) {
  const Scheme scheme = scheme_from_string(args.scheme);

  SchemeConfig config;
  config.scheme = scheme;
  config.theta = args.theta;
  if (scheme == Scheme::label_smooth) {
    config.lambda = args.lambda.value_or(0.5);
  } else if (args.lambda) {
    throw std::invalid_argument("--lambda applies to --scheme label-smooth only");
  }
  if (scheme == Scheme::score_remap) {
    if (args.source_scores.empty()) {
      throw std::invalid_argument(
          "scheme score-remap requires --source-scores");
    }
    if (args.target_scores.empty()) {
      throw std::invalid_argument(
          "scheme score-remap requires --target-scores");
    }
    config.source_cdf =
        build_empirical_cdf(load_scores(args.source_scores), DomainTag::source);
    config.target_cdf =
        build_empirical_cdf(load_scores(args.target_scores), DomainTag::target);
  } else if (!args.source_scores.empty() || !args.target_scores.empty()) {
    throw std::invalid_argument(
        "--source-scores/--target-scores apply to --scheme score-remap only");
  }
  config.validate();

  std::vector<PseudoLabel> labels;
  if (args.no_tracklet_filter) {
    if (scheme != Scheme::det) {
      throw std::invalid_argument("--no-tracklet-filter requires --scheme det");
    }
    const auto dets = load_detections(args.in);
    labels = detections_as_pseudolabels(dets.records, args.theta);
    labels = assign_soft_scores(std::move(labels), config);
    labels = interpolate_labels(std::move(labels), 0.0);
  } else {
    const std::vector<Tracklet> tracklets = load_tracklets(args.in);
    labels = apply_scheme(tracklets, config);
  }

  std::stable_sort(labels.begin(), labels.end(),
                   [](const PseudoLabel& a, const PseudoLabel& b) {
                     return a.frame < b.frame;
                   });
  write_pseudolabels(labels, args.out);

  std::size_t detector_origin = 0;
  for (const PseudoLabel& label : labels) {
    if (label.origin == Origin::detector) ++detector_origin;
  }
  log_info(err, "wrote " + std::to_string(labels.size()) + " pseudo-labels");

  ordered_json summary;
  summary["command"] = "pseudolabel";
  summary["input"] = args.in;
  summary["output"] = args.out;
  summary["scheme"] = args.scheme;
  summary["theta"] = args.theta;
  if (config.lambda) summary["lambda"] = *config.lambda;
  summary["tracklet_filter"] = !args.no_tracklet_filter;
  summary["labels"] = labels.size();
  summary["detector_origin"] = detector_origin;
  summary["tracker_origin"] = labels.size() - detector_origin;
  emit(out, summary);
  return 0;
}

// ---------------------------------------------------------------- remap ---

struct RemapArgs {
  std::string source_scores;
  std::string target_scores;
  std::string out;
  std::optional<double> theta;  // optional high-confidence filter
};

int run_remap(const RemapArgs& args, std::ostream& out, std::ostream& err) {
  auto filter = [&](std::vector<double> scores, const char* which) {
    if (args.theta) {
      std::erase_if(scores, [&](double s) { return s < *args.theta; });
    }
    if (scores.empty()) {
      throw std::invalid_argument(std::string(which) +
                                  " scores are empty after filtering");
    }
    return scores;
  };
  const std::vector<double> source_raw = load_scores(args.source_scores);
  const std::vector<double> target_raw = load_scores(args.target_scores);
  const ScoreCdf source_cdf = build_empirical_cdf(
      filter(source_raw, "source"), DomainTag::source);
  const ScoreCdf target_cdf = build_empirical_cdf(
      filter(target_raw, "target"), DomainTag::target);

  {
    auto csv = open_output(args.out);
    csv << "x,remapped\n";
    for (int i = 0; i <= 100; ++i) {
      const double x = static_cast<double>(i) / 100.0;
      char xbuf[8];
      std::snprintf(xbuf, sizeof(xbuf), "%.2f", x);
      csv << xbuf << ',' << shortest(remap_score(x, target_cdf, source_cdf))
          << '\n';
    }
  }
  log_info(err, "wrote remapping table to " + args.out);

  ordered_json summary;
  summary["command"] = "remap";
  summary["source_scores"] = args.source_scores;
  summary["target_scores"] = args.target_scores;
  summary["output"] = args.out;
  if (args.theta) summary["theta"] = *args.theta;
  summary["source_samples"] = source_cdf.size();
  summary["target_samples"] = target_cdf.size();
  summary["table_points"] = 101;
  emit(out, summary);
  return 0;
}

// ------------------------------------------------------- auto-threshold ---

struct AutoThresholdArgs {
  std::string source_dets;
  std::string source_gt;
  std::string target_dets;
  double precision = 0.95;
  double iou = 0.5;
};

int run_auto_threshold(const AutoThresholdArgs& args, std::ostream& out,
                       std::ostream& err) {
  const auto source_dets = load_detections(args.source_dets);
  const auto source_gt = load_ground_truth(args.source_gt);
  const auto target_dets = load_detections(args.target_dets);

  const ThresholdTransfer transfer =
      auto_threshold(source_dets.records, source_gt.records,
                     target_dets.records, args.precision, args.iou);
  if (transfer.theta_source >= 1.0) {
    log_warn(err, "requested precision unreachable; theta_source is 1.0");
  }

  ordered_json summary;
  summary["command"] = "auto-threshold";
  summary["source_detections"] = source_dets.records.size();
  summary["target_detections"] = target_dets.records.size();
  summary["precision"] = transfer.precision;
  summary["achieved_precision"] = transfer.achieved_precision;
  summary["iou"] = args.iou;
  summary["theta_source"] = transfer.theta_source;
  summary["theta_target"] = transfer.theta_target;
  emit(out, summary);
  return 0;
}

// ----------------------------------------------------------------- eval ---

struct EvalArgs {
  std::string dets;
  std::string gt;
  bool group_by_tags = false;
  std::string csv;
  double iou = 0.5;
};

int run_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  const auto dets = load_detections(args.dets);
  const auto gt = load_ground_truth(args.gt);

  ordered_json summary;
  summary["command"] = "eval";
  summary["detections"] = dets.records.size();
  summary["ground_truth"] = gt.records.size();
  summary["iou"] = args.iou;

  std::vector<TagGroupAp> groups;
  std::vector<std::string> warnings;
  double overall = 0.0;
  if (args.group_by_tags) {
    const GroupedApReport report =
        average_precision_by_tag(dets.records, gt.records, args.iou);
    overall = report.overall_ap;
    groups = report.per_tag;
    warnings = report.warnings;
  } else {
    overall = average_precision_50(dets.records, gt.records, args.iou);
  }
  summary["ap"] = overall;
  if (args.group_by_tags) {
    ordered_json per_tag = ordered_json::array();
    for (const TagGroupAp& group : groups) {
      ordered_json row;
      row["tag"] = group.tag;
      row["ap"] = group.ap;
      row["ground_truth"] = group.num_gt;
      row["detections"] = group.num_detections;
      per_tag.push_back(std::move(row));
    }
    summary["per_tag"] = std::move(per_tag);
    summary["warnings"] = warnings;
    for (const std::string& w : warnings) log_warn(err, w);
  }

  if (!args.csv.empty()) {
    auto csv = open_output(args.csv);
    csv << "tag,ap,ground_truth,detections\n";
    csv << "overall," << shortest(overall) << ',' << gt.records.size() << ','
        << dets.records.size() << '\n';
    for (const TagGroupAp& group : groups) {
      csv << group.tag << ',' << shortest(group.ap) << ',' << group.num_gt
          << ',' << group.num_detections << '\n';
    }
  }
  emit(out, summary);
  return 0;
}

// ------------------------------------------------------------------ sim ---

struct SimArgs {
  std::string config_path;
  std::string scheme = "hp";
  int rounds = 5;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  double theta = 0.5;
  double link_iou = 0.5;
  int min_len = 10;
  std::string csv;
  std::string dump_dir;
  unsigned threads = 0;
};

ScenarioConfig scenario_config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");
  ordered_json obj;
  try {
    obj = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": malformed JSON: " + e.what());
  }
  if (!obj.is_object()) throw std::runtime_error(path + ": expected an object");

  ScenarioConfig config;
  auto read_int = [&](const char* key, int& field) {
    if (obj.contains(key)) field = obj.at(key).get<int>();
  };
  auto read_double = [&](const char* key, double& field) {
    if (obj.contains(key)) field = obj.at(key).get<double>();
  };
  read_int("feature_dim", config.feature_dim);
  read_int("num_source_images", config.num_source_images);
  read_int("num_target_videos", config.num_target_videos);
  read_int("frames_per_video", config.frames_per_video);
  read_int("num_target_test_images", config.num_target_test_images);
  read_int("background_regions_per_image", config.background_regions_per_image);
  read_double("object_density", config.object_density);
  read_double("distractor_density", config.distractor_density);
  read_double("distractor_jump_rate", config.distractor_jump_rate);
  read_double("signal_strength", config.signal_strength);
  read_double("distractor_strength", config.distractor_strength);
  read_double("noise_sigma", config.noise_sigma);
  read_double("shift_magnitude", config.shift_magnitude);
  read_double("score_degradation", config.score_degradation);
  read_double("occlusion_rate", config.occlusion_rate);
  read_double("occlusion_run_length", config.occlusion_run_length);
  read_double("occlusion_attenuation", config.occlusion_attenuation);
  if (obj.contains("seed")) config.seed = obj.at("seed").get<std::uint64_t>();

  static const std::set<std::string> known = {
      "feature_dim", "num_source_images", "num_target_videos",
      "frames_per_video", "num_target_test_images",
      "background_regions_per_image", "object_density", "distractor_density",
      "distractor_jump_rate",
      "signal_strength", "distractor_strength", "noise_sigma",
      "shift_magnitude", "score_degradation", "occlusion_rate",
      "occlusion_run_length", "occlusion_attenuation", "seed"};
  for (const auto& item : obj.items()) {
    if (!known.contains(item.key())) {
      throw std::runtime_error(path + ": unknown field \"" + item.key() + "\"");
    }
  }
  return config;
}

void dump_scenario(const Scenario& scenario, const ExperimentOptions& options,
                   const std::filesystem::path& dir, std::ostream& err) {
  std::filesystem::create_directories(dir);
  const std::vector<TrainingSample> source_samples =
      training_samples_of(scenario.source_images, Domain::source);
  const ToyDetector baseline =
      train_toy_detector(source_samples, options.baseline_epochs,
                         options.baseline_learning_rate, scenario.config.seed);

  write_ground_truth(ground_truth_of(scenario.source_images),
                     dir / "source_ground_truth.jsonl");
  write_detections(
      run_detector(baseline, scenario.source_images, options.emission_floor),
      dir / "source_detections.jsonl");
  write_detections(
      run_detector(baseline, scenario.target_train, options.emission_floor),
      dir / "target_detections.jsonl");
  write_ground_truth(ground_truth_of(scenario.target_test),
                     dir / "target_test_ground_truth.jsonl");
  write_detections(
      run_detector(baseline, scenario.target_test, options.eval_floor),
      dir / "target_test_detections.jsonl");
  log_info(err, "wrote scenario files to " + dir.string());
}

int run_sim(const SimArgs& args, std::ostream& out, std::ostream& err) {
  ScenarioConfig config;
  if (!args.config_path.empty()) {
    config = scenario_config_from_file(args.config_path);
  }
  if (args.seed) config.seed = *args.seed;

  ExperimentOptions options;
  options.rounds = args.rounds;
  options.theta = args.theta;
  options.link_iou = args.link_iou;
  options.min_tracklet_len = args.min_len;
  options.threads =
      args.threads > 0 ? args.threads : std::thread::hardware_concurrency();

  ExperimentScheme scheme;
  scheme.name = args.scheme;
  scheme.lambda = args.lambda;
  if (args.lambda && args.scheme != "label-smooth") {
    throw std::invalid_argument("--lambda applies to --scheme label-smooth only");
  }

  const Scenario scenario = generate_scenario(config);
  if (!args.dump_dir.empty()) {
    dump_scenario(scenario, options, args.dump_dir, err);
  }
  const ExperimentResult result = run_experiment(scenario, scheme, options);

  if (!args.csv.empty()) {
    auto csv = open_output(args.csv);
    csv << "round,ap\n";
    for (std::size_t i = 0; i < result.round_aps.size(); ++i) {
      csv << i << ',' << shortest(result.round_aps[i]) << '\n';
    }
  }

  ordered_json summary;
  summary["command"] = "sim";
  summary["scheme"] = result.scheme;
  if (args.scheme == "label-smooth") {
    summary["lambda"] = args.lambda.value_or(0.5);
  }
  summary["rounds"] = args.rounds;
  summary["seed"] = config.seed;
  summary["theta"] = args.theta;
  summary["mean_ap"] = result.mean_ap;
  summary["std_ap"] = result.std_ap;
  summary["round_aps"] = result.round_aps;
  summary["pseudo_label_precision"] = result.pseudo_label_precision;
  summary["pseudo_label_recall"] = result.pseudo_label_recall;
  summary["mean_labels_per_round"] = result.mean_labels_per_round;
  summary["mean_tracker_origin_per_round"] =
      result.mean_tracker_origin_per_round;
  emit(out, summary);
  return 0;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-training adaptation toolkit for object detectors"};
  app.require_subcommand(1);

  TrackArgs track_args;
  CLI::App* track = app.add_subcommand(
      "track", "Link detections into tracklets and prune short ones");
  track->add_option("--in", track_args.in, "Detection JSONL file")
      ->required()
      ->check(CLI::ExistingFile);
  track->add_option("--out", track_args.out, "Tracklet JSONL output")
      ->required();
  track->add_option("--theta", track_args.theta,
                    "Detector confidence threshold");
  track->add_option("--link-iou", track_args.link_iou,
                    "Minimum IoU between consecutive boxes");
  track->add_option("--min-len", track_args.min_len,
                    "Minimum tracklet length kept");
  track->add_option("--threads", track_args.threads, "Worker thread cap");

  PseudolabelArgs pl_args;
  CLI::App* pseudolabel = app.add_subcommand(
      "pseudolabel", "Build a soft-labeled training set from tracklets");
  pseudolabel->add_option("--in", pl_args.in,
                          "Tracklet JSONL file (detections with "
                          "--no-tracklet-filter)")
      ->required()
      ->check(CLI::ExistingFile);
  pseudolabel->add_option("--out", pl_args.out, "Pseudo-label JSONL output")
      ->required();
  pseudolabel->add_option("--scheme", pl_args.scheme,
                          "det|track|hp|label-smooth|hp-cons|score-remap")
      ->required();
  pseudolabel->add_option("--theta", pl_args.theta,
                          "Detector confidence threshold");
  pseudolabel->add_option("--lambda", pl_args.lambda,
                          "Interpolation weight for label-smooth");
  pseudolabel->add_option("--source-scores", pl_args.source_scores,
                          "Source-domain score file for score-remap");
  pseudolabel->add_option("--target-scores", pl_args.target_scores,
                          "Target-domain score file for score-remap");
  pseudolabel->add_flag("--no-tracklet-filter", pl_args.no_tracklet_filter,
                        "Label raw high-confidence detections (det only)");

  RemapArgs remap_args;
  CLI::App* remap = app.add_subcommand(
      "remap", "Emit the cross-domain score remapping table");
  remap->add_option("--source-scores", remap_args.source_scores,
                    "Source-domain score file")
      ->required()
      ->check(CLI::ExistingFile);
  remap->add_option("--target-scores", remap_args.target_scores,
                    "Target-domain score file")
      ->required()
      ->check(CLI::ExistingFile);
  remap->add_option("--out", remap_args.out, "CSV output path")->required();
  remap->add_option("--theta", remap_args.theta,
                    "Keep only scores >= theta when building the CDFs");

  AutoThresholdArgs at_args;
  CLI::App* auto_thresh = app.add_subcommand(
      "auto-threshold",
      "Pick a source threshold at a precision level and map it to the target");
  auto_thresh->add_option("--source-dets", at_args.source_dets,
                          "Labeled source detections (JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  auto_thresh->add_option("--source-gt", at_args.source_gt,
                          "Source ground truth (JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  auto_thresh->add_option("--target-dets", at_args.target_dets,
                          "Target detections (JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  auto_thresh->add_option("--precision", at_args.precision,
                          "Desired precision level");
  auto_thresh->add_option("--iou", at_args.iou, "Matching IoU threshold");

  EvalArgs eval_args;
  CLI::App* eval =
      app.add_subcommand("eval", "Average precision at an IoU threshold");
  eval->add_option("--dets", eval_args.dets, "Detection JSONL file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--gt", eval_args.gt, "Ground-truth JSONL file")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_flag("--group-by-tags", eval_args.group_by_tags,
                 "Also report AP per ground-truth tag");
  eval->add_option("--csv", eval_args.csv, "Optional CSV output path");
  eval->add_option("--iou", eval_args.iou, "Matching IoU threshold");

  SimArgs sim_args;
  CLI::App* sim = app.add_subcommand(
      "sim", "End-to-end adaptation experiment on a synthetic scenario");
  sim->add_option("--config", sim_args.config_path,
                  "Scenario config JSON (defaults when omitted)")
      ->check(CLI::ExistingFile);
  sim->add_option("--scheme", sim_args.scheme,
                  "baseline|det|track|hp|label-smooth|hp-cons|score-remap");
  sim->add_option("--rounds", sim_args.rounds, "Training rounds");
  sim->add_option("--seed", sim_args.seed, "Scenario seed override");
  sim->add_option("--lambda", sim_args.lambda,
                  "Interpolation weight for label-smooth");
  sim->add_option("--theta", sim_args.theta, "Detector confidence threshold");
  sim->add_option("--link-iou", sim_args.link_iou, "Tracklet linking IoU");
  sim->add_option("--min-len", sim_args.min_len, "Minimum tracklet length");
  sim->add_option("--csv", sim_args.csv, "Per-round AP CSV output path");
  sim->add_option("--dump-dir", sim_args.dump_dir,
                  "Write the scenario's detection/ground-truth files here");
  sim->add_option("--threads", sim_args.threads, "Worker thread cap");

  std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (track->parsed()) return run_track(track_args, out, err);
    if (pseudolabel->parsed()) return run_pseudolabel(pl_args, out, err);
    if (remap->parsed()) return run_remap(remap_args, out, err);
    if (auto_thresh->parsed()) return run_auto_threshold(at_args, out, err);
    if (eval->parsed()) return run_eval(eval_args, out, err);
    if (sim->parsed()) return run_sim(sim_args, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << "error: no subcommand given\n";
  return 2;
}

}  // namespace selftrain::cli
