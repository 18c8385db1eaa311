#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "selftrain/cli.hpp"
#include "selftrain/detection_eval.hpp"
#include "selftrain/jsonl.hpp"
#include "selftrain/loss.hpp"
#include "selftrain/pseudolabel.hpp"
#include "selftrain/rng.hpp"
#include "selftrain/score_remap.hpp"
#include "selftrain/sim.hpp"
#include "selftrain/tracklet.hpp"

namespace py = pybind11;
using namespace selftrain;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Self-training adaptation toolkit for object detectors";

  // ---- core types ----
  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init<>())
      .def(py::init([](double x, double y, double w, double h) {
             return BoundingBox{x, y, w, h};
           }),
           py::arg("x"), py::arg("y"), py::arg("w"), py::arg("h"))
      .def_readwrite("x", &BoundingBox::x)
      .def_readwrite("y", &BoundingBox::y)
      .def_readwrite("w", &BoundingBox::w)
      .def_readwrite("h", &BoundingBox::h)
      .def("area", &BoundingBox::area)
      .def("valid", &BoundingBox::valid)
      .def("__repr__", [](const BoundingBox& b) {
        std::ostringstream os;
        os << "BoundingBox(" << b.x << ", " << b.y << ", " << b.w << ", "
           << b.h << ")";
        return os.str();
      });

  py::class_<FrameRef>(m, "FrameRef")
      .def(py::init<>())
      .def(py::init([](std::string video, std::int64_t frame) {
             return FrameRef{std::move(video), frame};
           }),
           py::arg("video"), py::arg("frame"))
      .def_readwrite("video", &FrameRef::video)
      .def_readwrite("frame", &FrameRef::frame);

  py::class_<Detection>(m, "Detection")
      .def(py::init<>())
      .def(py::init([](FrameRef frame, BoundingBox box, double score) {
             return Detection{std::move(frame), box, score};
           }),
           py::arg("frame"), py::arg("box"), py::arg("score"))
      .def_readwrite("frame", &Detection::frame)
      .def_readwrite("box", &Detection::box)
      .def_readwrite("score", &Detection::score);

  py::class_<GroundTruthBox>(m, "GroundTruthBox")
      .def(py::init<>())
      .def(py::init([](FrameRef frame, BoundingBox box,
                       std::vector<std::string> tags) {
             return GroundTruthBox{std::move(frame), box, std::move(tags)};
           }),
           py::arg("frame"), py::arg("box"),
           py::arg("tags") = std::vector<std::string>{})
      .def_readwrite("frame", &GroundTruthBox::frame)
      .def_readwrite("box", &GroundTruthBox::box)
      .def_readwrite("tags", &GroundTruthBox::tags);

  m.def("iou", &iou, py::arg("a"), py::arg("b"),
        "Intersection-over-union of two boxes");

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", py::overload_cast<>(&Rng::uniform))
      .def("normal", py::overload_cast<>(&Rng::normal));

  // ---- tracklets ----
  py::enum_<Origin>(m, "Origin")
      .value("detector", Origin::detector)
      .value("tracker", Origin::tracker);

  py::class_<TrackletEntry>(m, "TrackletEntry")
      .def(py::init<>())
      .def_readwrite("frame", &TrackletEntry::frame)
      .def_readwrite("box", &TrackletEntry::box)
      .def_readwrite("origin", &TrackletEntry::origin)
      .def_readwrite("score", &TrackletEntry::score);

  py::class_<Tracklet>(m, "Tracklet")
      .def(py::init<>())
      .def_readwrite("id", &Tracklet::id)
      .def_readwrite("video", &Tracklet::video)
      .def_readwrite("entries", &Tracklet::entries)
      .def("start_frame", &Tracklet::start_frame)
      .def("__len__", &Tracklet::length);

  py::class_<LinkConfig>(m, "LinkConfig")
      .def(py::init<>())
      .def_readwrite("link_iou", &LinkConfig::link_iou)
      .def_readwrite("theta", &LinkConfig::theta)
      .def_readwrite("recall_floor", &LinkConfig::recall_floor);

  m.def(
      "link_tracklets",
      [](const std::vector<Detection>& dets, const LinkConfig& config) {
        return link_tracklets(dets, config);
      },
      py::arg("detections"), py::arg("config") = LinkConfig{},
      "Greedy IoU linking of one video's detections");
  m.def(
      "link_all_videos",
      [](const std::vector<Detection>& dets, const LinkConfig& config,
         unsigned threads) { return link_all_videos(dets, config, threads); },
      py::arg("detections"), py::arg("config") = LinkConfig{},
      py::arg("threads") = 1);
  m.def("prune_tracklets", &prune_tracklets, py::arg("tracklets"),
        py::arg("min_len"));

  // ---- pseudo-labels ----
  py::enum_<Scheme>(m, "Scheme")
      .value("det", Scheme::det)
      .value("track", Scheme::track)
      .value("hp", Scheme::hp)
      .value("label_smooth", Scheme::label_smooth)
      .value("hp_cons", Scheme::hp_cons)
      .value("score_remap", Scheme::score_remap);

  py::enum_<AssembleMode>(m, "AssembleMode")
      .value("det", AssembleMode::det)
      .value("track", AssembleMode::track)
      .value("hp", AssembleMode::hp);

  py::class_<PseudoLabel>(m, "PseudoLabel")
      .def(py::init<>())
      .def_readwrite("frame", &PseudoLabel::frame)
      .def_readwrite("box", &PseudoLabel::box)
      .def_readwrite("origin", &PseudoLabel::origin)
      .def_readwrite("detector_score", &PseudoLabel::detector_score)
      .def_readwrite("tracklet_id", &PseudoLabel::tracklet_id)
      .def_readwrite("hard_label", &PseudoLabel::hard_label)
      .def_readwrite("soft_score", &PseudoLabel::soft_score)
      .def_readwrite("soft_label", &PseudoLabel::soft_label);

  py::class_<SchemeConfig>(m, "SchemeConfig")
      .def(py::init<>())
      .def_readwrite("scheme", &SchemeConfig::scheme)
      .def_readwrite("theta", &SchemeConfig::theta)
      .def_readwrite("lambda_", &SchemeConfig::lambda)
      .def_readwrite("source_cdf", &SchemeConfig::source_cdf)
      .def_readwrite("target_cdf", &SchemeConfig::target_cdf)
      .def("validate", &SchemeConfig::validate);

  m.def(
      "select_high_confidence",
      [](const std::vector<Detection>& dets, double theta) {
        return select_high_confidence(dets, theta);
      },
      py::arg("detections"), py::arg("theta"));
  m.def(
      "assemble_pseudolabels",
      [](const std::vector<Tracklet>& tracklets, AssembleMode mode,
         double theta) { return assemble_pseudolabels(tracklets, mode, theta); },
      py::arg("tracklets"), py::arg("mode"), py::arg("theta"));
  m.def(
      "detections_as_pseudolabels",
      [](const std::vector<Detection>& dets, double theta) {
        return detections_as_pseudolabels(dets, theta);
      },
      py::arg("detections"), py::arg("theta"));
  m.def("assign_soft_scores", &assign_soft_scores, py::arg("labels"),
        py::arg("config"));
  m.def("interpolate_labels", &interpolate_labels, py::arg("labels"),
        py::arg("lambda_"));
  m.def(
      "apply_scheme",
      [](const std::vector<Tracklet>& tracklets, const SchemeConfig& config) {
        return apply_scheme(tracklets, config);
      },
      py::arg("tracklets"), py::arg("config"));

  // ---- score remapping ----
  py::enum_<DomainTag>(m, "DomainTag")
      .value("source", DomainTag::source)
      .value("target", DomainTag::target);

  py::class_<ScoreCdf>(m, "ScoreCdf")
      .def(py::init<std::vector<double>, DomainTag>(), py::arg("scores"),
           py::arg("domain"))
      .def("cdf", &ScoreCdf::cdf, py::arg("x"))
      .def("cdf_interp", &ScoreCdf::cdf_interp, py::arg("x"))
      .def("quantile", &ScoreCdf::quantile, py::arg("q"))
      .def("samples", &ScoreCdf::samples)
      .def("__len__", &ScoreCdf::size);

  m.def("build_empirical_cdf", &build_empirical_cdf, py::arg("scores"),
        py::arg("domain"));
  m.def("remap_score", &remap_score, py::arg("x"), py::arg("target_cdf"),
        py::arg("source_cdf"));
  m.def("transfer_threshold", &transfer_threshold, py::arg("theta_source"),
        py::arg("target_cdf"), py::arg("source_cdf"));
  m.def(
      "threshold_at_precision",
      [](const std::vector<Detection>& dets,
         const std::vector<GroundTruthBox>& gts, double precision,
         double iou_thresh) {
        return threshold_at_precision(dets, gts, precision, iou_thresh);
      },
      py::arg("detections"), py::arg("ground_truth"), py::arg("precision"),
      py::arg("iou_thresh") = 0.5);

  py::class_<ThresholdTransfer>(m, "ThresholdTransfer")
      .def_readonly("theta_source", &ThresholdTransfer::theta_source)
      .def_readonly("theta_target", &ThresholdTransfer::theta_target)
      .def_readonly("precision", &ThresholdTransfer::precision)
      .def_readonly("achieved_precision",
                    &ThresholdTransfer::achieved_precision);

  m.def(
      "auto_threshold",
      [](const std::vector<Detection>& source_dets,
         const std::vector<GroundTruthBox>& source_gt,
         const std::vector<Detection>& target_dets, double precision,
         double iou_thresh) {
        return auto_threshold(source_dets, source_gt, target_dets, precision,
                              iou_thresh);
      },
      py::arg("source_detections"), py::arg("source_gt"),
      py::arg("target_detections"), py::arg("precision"),
      py::arg("iou_thresh") = 0.5);

  // ---- loss ----
  py::enum_<Domain>(m, "Domain")
      .value("source", Domain::source)
      .value("target", Domain::target);

  m.def("binary_cross_entropy", &binary_cross_entropy, py::arg("y"),
        py::arg("p"));

  py::class_<TrainingSample>(m, "TrainingSample")
      .def(py::init<>())
      .def_readwrite("domain", &TrainingSample::domain)
      .def_readwrite("label", &TrainingSample::label)
      .def_readwrite("feature", &TrainingSample::feature)
      .def_readwrite("weight", &TrainingSample::weight);

  m.def("distillation_loss", &distillation_loss, py::arg("sample"),
        py::arg("p"));

  py::class_<ImageSamples>(m, "ImageSamples")
      .def(py::init<>())
      .def_readwrite("positives", &ImageSamples::positives)
      .def_readwrite("negatives", &ImageSamples::negatives);

  py::class_<BatchSpec>(m, "BatchSpec")
      .def(py::init<>())
      .def_readwrite("regions_per_image", &BatchSpec::regions_per_image)
      .def_readwrite("positive_fraction", &BatchSpec::positive_fraction);

  m.def(
      "compose_mixed_batch",
      [](const std::vector<ImageSamples>& source_pool,
         const std::vector<ImageSamples>& target_pool, const BatchSpec& spec,
         Rng& rng) {
        return compose_mixed_batch(source_pool, target_pool, spec, rng);
      },
      py::arg("source_pool"), py::arg("target_pool"), py::arg("spec"),
      py::arg("rng"));

  // ---- evaluation ----
  py::class_<MatchResult>(m, "MatchResult")
      .def_readonly("is_tp", &MatchResult::is_tp)
      .def_readonly("matched_gt", &MatchResult::matched_gt)
      .def_readonly("num_matched_gt", &MatchResult::num_matched_gt);

  m.def(
      "match_detections",
      [](const std::vector<Detection>& dets,
         const std::vector<GroundTruthBox>& gts, double iou_thresh) {
        return match_detections(dets, gts, iou_thresh);
      },
      py::arg("detections"), py::arg("ground_truth"),
      py::arg("iou_thresh") = 0.5);
  m.def(
      "average_precision_50",
      [](const std::vector<Detection>& dets,
         const std::vector<GroundTruthBox>& gts, double iou_thresh) {
        return average_precision_50(dets, gts, iou_thresh);
      },
      py::arg("detections"), py::arg("ground_truth"),
      py::arg("iou_thresh") = 0.5);

  py::class_<TagGroupAp>(m, "TagGroupAp")
      .def_readonly("tag", &TagGroupAp::tag)
      .def_readonly("ap", &TagGroupAp::ap)
      .def_readonly("num_gt", &TagGroupAp::num_gt)
      .def_readonly("num_detections", &TagGroupAp::num_detections);

  py::class_<GroupedApReport>(m, "GroupedApReport")
      .def_readonly("overall_ap", &GroupedApReport::overall_ap)
      .def_readonly("per_tag", &GroupedApReport::per_tag)
      .def_readonly("warnings", &GroupedApReport::warnings);

  m.def(
      "average_precision_by_tag",
      [](const std::vector<Detection>& dets,
         const std::vector<GroundTruthBox>& gts, double iou_thresh) {
        return average_precision_by_tag(dets, gts, iou_thresh);
      },
      py::arg("detections"), py::arg("ground_truth"),
      py::arg("iou_thresh") = 0.5);
  m.def(
      "ks_statistic",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return ks_statistic(a, b);
      },
      py::arg("scores_a"), py::arg("scores_b"));

  // ---- simulation ----
  py::class_<ScenarioConfig>(m, "ScenarioConfig")
      .def(py::init<>())
      .def_readwrite("feature_dim", &ScenarioConfig::feature_dim)
      .def_readwrite("num_source_images", &ScenarioConfig::num_source_images)
      .def_readwrite("num_target_videos", &ScenarioConfig::num_target_videos)
      .def_readwrite("frames_per_video", &ScenarioConfig::frames_per_video)
      .def_readwrite("num_target_test_images",
                     &ScenarioConfig::num_target_test_images)
      .def_readwrite("object_density", &ScenarioConfig::object_density)
      .def_readwrite("distractor_density", &ScenarioConfig::distractor_density)
      .def_readwrite("distractor_jump_rate",
                     &ScenarioConfig::distractor_jump_rate)
      .def_readwrite("background_regions_per_image",
                     &ScenarioConfig::background_regions_per_image)
      .def_readwrite("signal_strength", &ScenarioConfig::signal_strength)
      .def_readwrite("distractor_strength",
                     &ScenarioConfig::distractor_strength)
      .def_readwrite("noise_sigma", &ScenarioConfig::noise_sigma)
      .def_readwrite("shift_magnitude", &ScenarioConfig::shift_magnitude)
      .def_readwrite("score_degradation", &ScenarioConfig::score_degradation)
      .def_readwrite("occlusion_rate", &ScenarioConfig::occlusion_rate)
      .def_readwrite("occlusion_run_length",
                     &ScenarioConfig::occlusion_run_length)
      .def_readwrite("occlusion_attenuation",
                     &ScenarioConfig::occlusion_attenuation)
      .def_readwrite("seed", &ScenarioConfig::seed)
      .def("validate", &ScenarioConfig::validate);

  py::class_<Region>(m, "Region")
      .def_readonly("box", &Region::box)
      .def_readonly("feature", &Region::feature)
      .def_readonly("is_object", &Region::is_object)
      .def_readonly("occluded", &Region::occluded);

  py::class_<SimFrame>(m, "SimFrame")
      .def_readonly("ref", &SimFrame::ref)
      .def_readonly("regions", &SimFrame::regions);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("config", &Scenario::config)
      .def_readonly("source_images", &Scenario::source_images)
      .def_readonly("target_train", &Scenario::target_train)
      .def_readonly("target_test", &Scenario::target_test);

  m.def("generate_scenario", &generate_scenario, py::arg("config"));
  m.def(
      "ground_truth_of",
      [](const std::vector<SimFrame>& frames) { return ground_truth_of(frames); },
      py::arg("frames"));
  m.def(
      "training_samples_of",
      [](const std::vector<SimFrame>& frames, Domain domain) {
        return training_samples_of(frames, domain);
      },
      py::arg("frames"), py::arg("domain"));

  py::class_<ToyDetector>(m, "ToyDetector")
      .def(py::init<>())
      .def(py::init<std::vector<double>, double>(), py::arg("weights"),
           py::arg("bias"))
      .def_static("seeded_init", &ToyDetector::seeded_init,
                  py::arg("feature_dim"), py::arg("seed"))
      .def(
          "score",
          [](const ToyDetector& d, const std::vector<double>& f) {
            return d.score(f);
          },
          py::arg("feature"))
      .def("weights", &ToyDetector::weights)
      .def("bias", &ToyDetector::bias);

  m.def(
      "train_toy_detector",
      [](const std::vector<TrainingSample>& samples, int epochs, double lr,
         std::uint64_t seed) {
        return train_toy_detector(samples, epochs, lr, seed);
      },
      py::arg("samples"), py::arg("epochs"), py::arg("learning_rate"),
      py::arg("seed"));
  m.def(
      "run_detector",
      [](const ToyDetector& detector, const std::vector<SimFrame>& frames,
         double floor) { return run_detector(detector, frames, floor); },
      py::arg("detector"), py::arg("frames"), py::arg("emission_floor") = 0.05);

  py::class_<ExperimentOptions>(m, "ExperimentOptions")
      .def(py::init<>())
      .def_readwrite("rounds", &ExperimentOptions::rounds)
      .def_readwrite("theta", &ExperimentOptions::theta)
      .def_readwrite("link_iou", &ExperimentOptions::link_iou)
      .def_readwrite("min_tracklet_len", &ExperimentOptions::min_tracklet_len)
      .def_readwrite("emission_floor", &ExperimentOptions::emission_floor)
      .def_readwrite("eval_floor", &ExperimentOptions::eval_floor)
      .def_readwrite("baseline_epochs", &ExperimentOptions::baseline_epochs)
      .def_readwrite("baseline_learning_rate",
                     &ExperimentOptions::baseline_learning_rate)
      .def_readwrite("adapt_steps", &ExperimentOptions::adapt_steps)
      .def_readwrite("adapt_learning_rate",
                     &ExperimentOptions::adapt_learning_rate)
      .def_readwrite("threads", &ExperimentOptions::threads);

  py::class_<ExperimentScheme>(m, "ExperimentScheme")
      .def(py::init<>())
      .def(py::init([](std::string name, std::optional<double> lambda) {
             ExperimentScheme s;
             s.name = std::move(name);
             s.lambda = lambda;
             return s;
           }),
           py::arg("name"), py::arg("lambda_") = std::nullopt)
      .def_readwrite("name", &ExperimentScheme::name)
      .def_readwrite("lambda_", &ExperimentScheme::lambda);

  py::class_<ExperimentResult>(m, "ExperimentResult")
      .def_readonly("scheme", &ExperimentResult::scheme)
      .def_readonly("round_aps", &ExperimentResult::round_aps)
      .def_readonly("mean_ap", &ExperimentResult::mean_ap)
      .def_readonly("std_ap", &ExperimentResult::std_ap)
      .def_readonly("pseudo_label_precision",
                    &ExperimentResult::pseudo_label_precision)
      .def_readonly("pseudo_label_recall",
                    &ExperimentResult::pseudo_label_recall)
      .def_readonly("mean_labels_per_round",
                    &ExperimentResult::mean_labels_per_round)
      .def_readonly("mean_tracker_origin_per_round",
                    &ExperimentResult::mean_tracker_origin_per_round);

  m.def("run_experiment", &run_experiment, py::arg("scenario"),
        py::arg("scheme"), py::arg("options") = ExperimentOptions{});

  // ---- file I/O ----
  m.def("load_detections", [](const std::filesystem::path& p) {
    return load_detections(p).records;
  });
  m.def("load_ground_truth", [](const std::filesystem::path& p) {
    return load_ground_truth(p).records;
  });
  m.def("load_pseudolabels", [](const std::filesystem::path& p) {
    return load_pseudolabels(p).records;
  });
  m.def("load_tracklets",
        [](const std::filesystem::path& p) { return load_tracklets(p); });
  m.def("write_detections",
        [](const std::vector<Detection>& records,
           const std::filesystem::path& p) { write_detections(records, p); });
  m.def("write_ground_truth", [](const std::vector<GroundTruthBox>& records,
                                 const std::filesystem::path& p) {
    write_ground_truth(records, p);
  });
  m.def("write_pseudolabels", [](const std::vector<PseudoLabel>& records,
                                 const std::filesystem::path& p) {
    write_pseudolabels(records, p);
  });
  m.def("write_tracklets",
        [](const std::vector<Tracklet>& records,
           const std::filesystem::path& p) { write_tracklets(records, p); });
  m.def("load_scores",
        [](const std::filesystem::path& p) { return load_scores(p); });

  // ---- CLI passthrough ----
  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        return selftrain::cli::run(std::move(args));
      },
      py::arg("args"), "Run a CLI subcommand; returns the exit status");
}
