#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selftrain/geometry.hpp"
#include "selftrain/loss.hpp"
#include "selftrain/pseudolabel.hpp"
#include "selftrain/rng.hpp"

namespace selftrain {

/// Synthetic two-domain detection world. The source domain is a labeled
/// image set; the target domain is a set of unlabeled videos whose object
/// features are translated and attenuated relative to the source, plus a
/// labeled target test set. Objects move smoothly across frames so temporal
/// linking is meaningful, and occlusion runs degrade an object's feature for
/// a few consecutive frames so the baseline detector genuinely misses it.
/// Persistent "distractor" structures score moderately and provide the label
/// noise that self-training has to survive. The target-domain distractors
/// live in a different feature direction than the source ones, so the
/// baseline has no defense against them until it re-trains.
struct ScenarioConfig {
  int feature_dim = 64;
  int num_source_images = 200;
  int num_target_videos = 40;
  int frames_per_video = 30;
  int num_target_test_images = 120;
  double object_density = 3.0;      // mean objects per image/frame
  double distractor_density = 1.5;  // mean distractors per image/frame
  int background_regions_per_image = 40;
  double signal_strength = 3.0;     // |feature| of a clean source object
  double distractor_strength = 0.6;
  double distractor_jump_rate = 0.25;  // chance per frame a distractor box
                                       // teleports (breaking temporal links)
  double noise_sigma = 0.45;
  double shift_magnitude = 1.0;     // length of the domain feature translation
  double score_degradation = 0.3;   // target-domain object signal attenuation
  double occlusion_rate = 0.1;      // chance per frame that a run starts
  double occlusion_run_length = 5.0;  // mean run length in frames
  double occlusion_attenuation = 0.6; // extra attenuation while occluded
  std::uint64_t seed = 42;

  void validate() const;  // throws std::invalid_argument
};

struct Region {
  BoundingBox box;
  std::vector<double> feature;
  bool is_object = false;  // hidden ground truth for target-train frames
  bool occluded = false;
};

struct SimFrame {
  FrameRef ref;
  std::vector<Region> regions;  // objects, distractors, then backgrounds
};

struct Scenario {
  ScenarioConfig config;
  std::vector<SimFrame> source_images;
  std::vector<SimFrame> target_train;  // is_object flags are hidden ground
                                       // truth: only diagnostics and final
                                       // evaluation may look at them
  std::vector<SimFrame> target_test;
};

/// Deterministic under config.seed: the same config produces a bit-identical
/// scenario.
Scenario generate_scenario(const ScenarioConfig& config);

/// Ground truth of a labeled frame set; boxes are tagged "occluded" or
/// "clear" for sub-domain breakdowns.
std::vector<GroundTruthBox> ground_truth_of(std::span<const SimFrame> frames);

/// Flattened labeled training samples of a frame set: objects become
/// positives (label 1), everything else negatives (label 0).
std::vector<TrainingSample> training_samples_of(std::span<const SimFrame> frames,
                                                Domain domain);

/// Linear logistic scorer over region features.
class ToyDetector {
 public:
  ToyDetector() = default;
  ToyDetector(std::vector<double> weights, double bias);
  static ToyDetector seeded_init(int feature_dim, std::uint64_t seed);

  /// Posterior in (0,1).
  double score(std::span<const double> feature) const;

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
};

/// Full-batch gradient descent on the weighted mean distillation loss.
/// Initialization is a small seeded gaussian; zero epochs returns it
/// unchanged.
ToyDetector train_toy_detector(std::span<const TrainingSample> samples,
                               int epochs, double learning_rate,
                               std::uint64_t seed);

/// Gradient of the weighted mean distillation loss at the detector's current
/// parameters; last element is the bias derivative. Exposed for testing.
std::vector<double> loss_gradient(const ToyDetector& detector,
                                  std::span<const TrainingSample> samples);

/// Joint re-training: `steps` mixed source/target batches, gradients summed
/// over both halves before each update.
ToyDetector adapt_detector(ToyDetector detector,
                           std::span<const ImageSamples> source_pool,
                           std::span<const ImageSamples> target_pool,
                           int steps, double learning_rate,
                           const BatchSpec& spec, Rng& rng);

/// Scores every candidate region of every frame and emits detections with
/// posterior >= emission_floor.
std::vector<Detection> run_detector(const ToyDetector& detector,
                                    std::span<const SimFrame> frames,
                                    double emission_floor = 0.05);

struct ExperimentOptions {
  int rounds = 5;
  double theta = 0.5;
  double link_iou = 0.5;
  int min_tracklet_len = 10;
  double emission_floor = 0.05;
  double eval_floor = 0.01;    // emission floor when scoring the test set
  int baseline_epochs = 600;
  double baseline_learning_rate = 2.0;
  int adapt_steps = 600;
  double adapt_learning_rate = 0.5;
  BatchSpec batch;
  unsigned threads = 1;
};

/// Scheme selector for an experiment: "baseline" (no adaptation) or any
/// pseudo-label scheme name; lambda applies to label-smooth only.
struct ExperimentScheme {
  std::string name = "hp";
  std::optional<double> lambda;
};

struct ExperimentResult {
  std::string scheme;
  std::vector<double> round_aps;  // AP@0.5 on the target test set per round
  double mean_ap = 0.0;
  double std_ap = 0.0;
  // Diagnostics against hidden target-train ground truth (zero for baseline).
  double pseudo_label_precision = 0.0;
  double pseudo_label_recall = 0.0;
  double mean_labels_per_round = 0.0;
  double mean_tracker_origin_per_round = 0.0;
};

/// Full pipeline, `rounds` times: train the baseline on source, run it on
/// the target videos, link and prune tracklets, apply the scheme, jointly
/// re-train with mixed batches, and evaluate AP@0.5 on the target test set.
/// Deterministic under (scenario, options, scheme); rounds may run in
/// parallel.
ExperimentResult run_experiment(const Scenario& scenario,
                                const ExperimentScheme& scheme,
                                const ExperimentOptions& options);

}  // namespace selftrain
