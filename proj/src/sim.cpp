#include "selftrain/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <stdexcept>

#include "selftrain/detection_eval.hpp"
#include "selftrain/parallel.hpp"
#include "selftrain/tracklet.hpp"

namespace selftrain {

namespace {

constexpr double kWorldSize = 256.0;
constexpr double kMinBoxSize = 24.0;
constexpr double kMaxBoxSize = 40.0;
constexpr double kMaxSpeed = 1.5;         // px per frame per axis
constexpr double kDistractorSideAmplitude = 0.8;  // relative to signal
constexpr double kBackgroundOverlapCap = 0.3;
constexpr double kNegativeOverlapCap = 0.3;

std::string indexed_name(const char* prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%03d", prefix, index);
  return buf;
}

std::vector<double> random_unit(Rng& rng, int dim) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm2 = 0.0;
  for (double& x : v) {
    x = rng.normal();
    norm2 += x * x;
  }
  const double norm = std::sqrt(norm2);
  for (double& x : v) x /= norm;
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += a[i] * b[i];
  return total;
}

void subtract_projection(std::vector<double>& v,
                         std::span<const double> direction) {
  const double d = dot(v, direction);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= d * direction[i];
}

void normalize(std::vector<double>& v) {
  const double norm = std::sqrt(dot(v, v));
  for (double& x : v) x /= norm;
}

struct FeatureModel {
  const ScenarioConfig* config;
  std::vector<double> object_dir;           // u
  std::vector<double> source_clutter_dir;   // distractor side direction, source
  std::vector<double> target_clutter_dir;   // distractor side direction, target
  std::vector<double> shift;                // domain translation

  std::vector<double> noise(Rng& rng) const {
    std::vector<double> f(static_cast<std::size_t>(config->feature_dim));
    for (double& x : f) x = rng.normal(0.0, config->noise_sigma);
    return f;
  }

  void add_scaled(std::vector<double>& f, std::span<const double> dir,
                  double scale) const {
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += scale * dir[i];
  }

  std::vector<double> source_object(Rng& rng) const {
    auto f = noise(rng);
    add_scaled(f, object_dir, config->signal_strength);
    return f;
  }

  std::vector<double> source_distractor(Rng& rng) const {
    auto f = noise(rng);
    add_scaled(f, object_dir,
               config->distractor_strength * config->signal_strength);
    add_scaled(f, source_clutter_dir,
               kDistractorSideAmplitude * config->signal_strength);
    return f;
  }

  std::vector<double> source_background(Rng& rng) const { return noise(rng); }

  std::vector<double> target_object(Rng& rng, bool occluded) const {
    auto f = noise(rng);
    double amplitude = config->signal_strength * (1.0 - config->score_degradation);
    if (occluded) amplitude *= config->occlusion_attenuation;
    add_scaled(f, object_dir, amplitude);
    add_scaled(f, shift, 1.0);
    return f;
  }

  std::vector<double> target_distractor(Rng& rng) const {
    auto f = noise(rng);
    add_scaled(f, object_dir,
               config->distractor_strength * config->signal_strength);
    add_scaled(f, target_clutter_dir,
               kDistractorSideAmplitude * config->signal_strength);
    add_scaled(f, shift, 1.0);
    return f;
  }

  std::vector<double> target_background(Rng& rng) const {
    auto f = noise(rng);
    add_scaled(f, shift, 1.0);
    return f;
  }
};

BoundingBox random_box(Rng& rng) {
  const double w = rng.uniform(kMinBoxSize, kMaxBoxSize);
  const double h = rng.uniform(kMinBoxSize, kMaxBoxSize);
  const double x = rng.uniform(0.0, kWorldSize - w);
  const double y = rng.uniform(0.0, kWorldSize - h);
  return {x, y, w, h};
}

BoundingBox random_clear_box(Rng& rng, const std::vector<BoundingBox>& taken) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    const BoundingBox candidate = random_box(rng);
    bool clear = true;
    for (const BoundingBox& other : taken) {
      if (iou(candidate, other) >= kBackgroundOverlapCap) {
        clear = false;
        break;
      }
    }
    if (clear) return candidate;
  }
  return random_box(rng);  // crowded frame: accept overlap
}

struct MovingBox {
  BoundingBox box;
  double vx = 0.0;
  double vy = 0.0;

  void step(Rng& rng) {
    box.x += vx + rng.normal(0.0, 0.1);
    box.y += vy + rng.normal(0.0, 0.1);
    if (box.x < 0.0 || box.x + box.w > kWorldSize) {
      vx = -vx;
      box.x = std::clamp(box.x, 0.0, kWorldSize - box.w);
    }
    if (box.y < 0.0 || box.y + box.h > kWorldSize) {
      vy = -vy;
      box.y = std::clamp(box.y, 0.0, kWorldSize - box.h);
    }
  }
};

MovingBox random_moving_box(Rng& rng) {
  MovingBox m;
  m.box = random_box(rng);
  m.vx = rng.uniform(-kMaxSpeed, kMaxSpeed);
  m.vy = rng.uniform(-kMaxSpeed, kMaxSpeed);
  return m;
}

std::vector<bool> occlusion_mask(Rng& rng, const ScenarioConfig& config) {
  std::vector<bool> mask(static_cast<std::size_t>(config.frames_per_video),
                         false);
  if (config.occlusion_rate <= 0.0 || config.occlusion_run_length <= 0.0) {
    return mask;
  }
  std::size_t frame = 0;
  while (frame < mask.size()) {
    if (rng.bernoulli(config.occlusion_rate)) {
      const int run = rng.geometric_length(config.occlusion_run_length);
      for (int i = 0; i < run && frame < mask.size(); ++i, ++frame) {
        mask[frame] = true;
      }
    } else {
      ++frame;
    }
  }
  return mask;
}

double steady_occlusion_fraction(const ScenarioConfig& config) {
  if (config.occlusion_rate <= 0.0 || config.occlusion_run_length <= 0.0) {
    return 0.0;
  }
  const double load = config.occlusion_rate * config.occlusion_run_length;
  return load / (1.0 + load);
}

void append_backgrounds(SimFrame& frame, const FeatureModel& model, Rng& rng,
                        bool target_domain,
                        const std::vector<BoundingBox>& taken) {
  for (int i = 0; i < model.config->background_regions_per_image; ++i) {
    Region region;
    region.box = random_clear_box(rng, taken);
    region.feature = target_domain ? model.target_background(rng)
                                   : model.source_background(rng);
    frame.regions.push_back(std::move(region));
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  if (feature_dim < 1) throw std::invalid_argument("feature_dim must be >= 1");
  if (num_source_images < 1 || num_target_videos < 1 ||
      frames_per_video < 1 || num_target_test_images < 1) {
    throw std::invalid_argument("all scenario counts must be >= 1");
  }
  if (background_regions_per_image < 1) {
    throw std::invalid_argument("background_regions_per_image must be >= 1");
  }
  if (object_density <= 0.0) {
    throw std::invalid_argument("object_density must be > 0");
  }
  if (distractor_density < 0.0 || signal_strength <= 0.0 ||
      noise_sigma <= 0.0 || distractor_strength < 0.0) {
    throw std::invalid_argument("invalid feature model parameters");
  }
  if (shift_magnitude < 0.0 || score_degradation < 0.0 ||
      score_degradation >= 1.0) {
    throw std::invalid_argument("invalid domain shift parameters");
  }
  if (occlusion_rate < 0.0 || occlusion_rate >= 1.0 ||
      occlusion_run_length < 0.0 || occlusion_attenuation <= 0.0 ||
      occlusion_attenuation > 1.0) {
    throw std::invalid_argument("invalid occlusion parameters");
  }
  if (distractor_jump_rate < 0.0 || distractor_jump_rate >= 1.0) {
    throw std::invalid_argument("distractor_jump_rate must lie in [0,1)");
  }
}

Scenario generate_scenario(const ScenarioConfig& config) {
  config.validate();

  Rng root(config.seed);
  FeatureModel model;
  model.config = &config;
  {
    Rng dirs = root.fork(1);
    model.object_dir = random_unit(dirs, config.feature_dim);
    model.source_clutter_dir = random_unit(dirs, config.feature_dim);
    subtract_projection(model.source_clutter_dir, model.object_dir);
    normalize(model.source_clutter_dir);
    model.target_clutter_dir = random_unit(dirs, config.feature_dim);
    subtract_projection(model.target_clutter_dir, model.object_dir);
    subtract_projection(model.target_clutter_dir, model.source_clutter_dir);
    normalize(model.target_clutter_dir);
    model.shift = random_unit(dirs, config.feature_dim);
    for (double& x : model.shift) x *= config.shift_magnitude;
  }

  Scenario scenario;
  scenario.config = config;

  // Labeled source images.
  {
    Rng rng = root.fork(2);
    for (int i = 0; i < config.num_source_images; ++i) {
      SimFrame frame;
      frame.ref = {indexed_name("source", i), 0};
      const int objects = rng.poisson(config.object_density);
      const int distractors = rng.poisson(config.distractor_density);
      std::vector<BoundingBox> taken;
      for (int o = 0; o < objects; ++o) {
        Region region;
        region.box = random_clear_box(rng, taken);
        region.feature = model.source_object(rng);
        region.is_object = true;
        taken.push_back(region.box);
        frame.regions.push_back(std::move(region));
      }
      for (int d = 0; d < distractors; ++d) {
        Region region;
        region.box = random_clear_box(rng, taken);
        region.feature = model.source_distractor(rng);
        taken.push_back(region.box);
        frame.regions.push_back(std::move(region));
      }
      append_backgrounds(frame, model, rng, false, taken);
      scenario.source_images.push_back(std::move(frame));
    }
  }

  // Unlabeled target videos with smooth motion and occlusion runs.
  {
    Rng rng = root.fork(3);
    for (int v = 0; v < config.num_target_videos; ++v) {
      const std::string video = indexed_name("target", v);
      const int objects = std::max(1, rng.poisson(config.object_density));
      const int distractors = rng.poisson(config.distractor_density);

      std::vector<MovingBox> object_boxes;
      std::vector<std::vector<bool>> object_occlusion;
      for (int o = 0; o < objects; ++o) {
        object_boxes.push_back(random_moving_box(rng));
        object_occlusion.push_back(occlusion_mask(rng, config));
      }
      std::vector<MovingBox> distractor_boxes;
      for (int d = 0; d < distractors; ++d) {
        distractor_boxes.push_back(random_moving_box(rng));
      }

      for (int f = 0; f < config.frames_per_video; ++f) {
        SimFrame frame;
        frame.ref = {video, f};
        std::vector<BoundingBox> taken;
        for (int o = 0; o < objects; ++o) {
          Region region;
          region.box = object_boxes[static_cast<std::size_t>(o)].box;
          region.occluded = object_occlusion[static_cast<std::size_t>(o)]
                                            [static_cast<std::size_t>(f)];
          region.feature = model.target_object(rng, region.occluded);
          region.is_object = true;
          taken.push_back(region.box);
          frame.regions.push_back(std::move(region));
          object_boxes[static_cast<std::size_t>(o)].step(rng);
        }
        for (auto& mb : distractor_boxes) {
          Region region;
          region.box = mb.box;
          region.feature = model.target_distractor(rng);
          taken.push_back(region.box);
          frame.regions.push_back(std::move(region));
          // Spurious structures are temporally unstable: an occasional jump
          // breaks the IoU chain so short-tracklet pruning can drop them.
          if (rng.bernoulli(config.distractor_jump_rate)) {
            mb = random_moving_box(rng);
          } else {
            mb.step(rng);
          }
        }
        append_backgrounds(frame, model, rng, true, taken);
        scenario.target_train.push_back(std::move(frame));
      }
    }
  }

  // Labeled target test images.
  {
    Rng rng = root.fork(4);
    const double occluded_fraction = steady_occlusion_fraction(config);
    for (int i = 0; i < config.num_target_test_images; ++i) {
      SimFrame frame;
      frame.ref = {indexed_name("test", i), 0};
      const int objects = rng.poisson(config.object_density);
      const int distractors = rng.poisson(config.distractor_density);
      std::vector<BoundingBox> taken;
      for (int o = 0; o < objects; ++o) {
        Region region;
        region.box = random_clear_box(rng, taken);
        region.occluded = rng.bernoulli(occluded_fraction);
        region.feature = model.target_object(rng, region.occluded);
        region.is_object = true;
        taken.push_back(region.box);
        frame.regions.push_back(std::move(region));
      }
      for (int d = 0; d < distractors; ++d) {
        Region region;
        region.box = random_clear_box(rng, taken);
        region.feature = model.target_distractor(rng);
        taken.push_back(region.box);
        frame.regions.push_back(std::move(region));
      }
      append_backgrounds(frame, model, rng, true, taken);
      scenario.target_test.push_back(std::move(frame));
    }
  }

  return scenario;
}

std::vector<GroundTruthBox> ground_truth_of(std::span<const SimFrame> frames) {
  std::vector<GroundTruthBox> gts;
  for (const SimFrame& frame : frames) {
    for (const Region& region : frame.regions) {
      if (!region.is_object) continue;
      GroundTruthBox gt;
      gt.frame = frame.ref;
      gt.box = region.box;
      gt.tags.push_back(region.occluded ? "occluded" : "clear");
      gts.push_back(std::move(gt));
    }
  }
  return gts;
}

std::vector<TrainingSample> training_samples_of(std::span<const SimFrame> frames,
                                                Domain domain) {
  std::vector<TrainingSample> samples;
  for (const SimFrame& frame : frames) {
    for (const Region& region : frame.regions) {
      TrainingSample sample;
      sample.domain = domain;
      sample.label = region.is_object ? 1.0 : 0.0;
      sample.feature = region.feature;
      samples.push_back(std::move(sample));
    }
  }
  return samples;
}

ToyDetector::ToyDetector(std::vector<double> weights, double bias)
    : weights_(std::move(weights)), bias_(bias) {}

ToyDetector ToyDetector::seeded_init(int feature_dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> weights(static_cast<std::size_t>(feature_dim));
  for (double& w : weights) w = rng.normal(0.0, 0.01);
  return ToyDetector(std::move(weights), 0.0);
}

double ToyDetector::score(std::span<const double> feature) const {
  if (feature.size() != weights_.size()) {
    throw std::invalid_argument("feature dimension mismatch");
  }
  const double z = dot(weights_, feature) + bias_;
  return 1.0 / (1.0 + std::exp(-z));
}

std::vector<double> loss_gradient(const ToyDetector& detector,
                                  std::span<const TrainingSample> samples) {
  const std::size_t dim = detector.weights().size();
  std::vector<double> grad(dim + 1, 0.0);
  double total_weight = 0.0;
  for (const TrainingSample& sample : samples) {
    const double p = detector.score(sample.feature);
    const double pull = sample.weight * (p - sample.label);
    for (std::size_t j = 0; j < dim; ++j) {
      grad[j] += pull * sample.feature[j];
    }
    grad[dim] += pull;
    total_weight += sample.weight;
  }
  if (total_weight > 0.0) {
    for (double& g : grad) g /= total_weight;
  }
  return grad;
}

namespace {

ToyDetector gradient_step(ToyDetector detector,
                          std::span<const TrainingSample> samples,
                          double learning_rate) {
  const std::vector<double> grad = loss_gradient(detector, samples);
  std::vector<double> weights = detector.weights();
  for (std::size_t j = 0; j < weights.size(); ++j) {
    weights[j] -= learning_rate * grad[j];
  }
  const double bias = detector.bias() - learning_rate * grad.back();
  return ToyDetector(std::move(weights), bias);
}

}  // namespace

ToyDetector train_toy_detector(std::span<const TrainingSample> samples,
                               int epochs, double learning_rate,
                               std::uint64_t seed) {
  if (samples.empty()) {
    throw std::invalid_argument("training needs at least one sample");
  }
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  ToyDetector detector = ToyDetector::seeded_init(
      static_cast<int>(samples.front().feature.size()), seed);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    detector = gradient_step(std::move(detector), samples, learning_rate);
  }
  return detector;
}

ToyDetector adapt_detector(ToyDetector detector,
                           std::span<const ImageSamples> source_pool,
                           std::span<const ImageSamples> target_pool,
                           int steps, double learning_rate,
                           const BatchSpec& spec, Rng& rng) {
  for (int step = 0; step < steps; ++step) {
    const std::vector<TrainingSample> batch =
        compose_mixed_batch(source_pool, target_pool, spec, rng);
    detector = gradient_step(std::move(detector), batch, learning_rate);
  }
  return detector;
}

std::vector<Detection> run_detector(const ToyDetector& detector,
                                    std::span<const SimFrame> frames,
                                    double emission_floor) {
  std::vector<Detection> detections;
  for (const SimFrame& frame : frames) {
    for (const Region& region : frame.regions) {
      const double p = detector.score(region.feature);
      if (p >= emission_floor) {
        detections.push_back({frame.ref, region.box, p});
      }
    }
  }
  return detections;
}

namespace {

std::vector<TrainingSample> flatten_source_samples(
    std::span<const ImageSamples> pool) {
  std::vector<TrainingSample> samples;
  for (const ImageSamples& image : pool) {
    samples.insert(samples.end(), image.positives.begin(),
                   image.positives.end());
    samples.insert(samples.end(), image.negatives.begin(),
                   image.negatives.end());
  }
  return samples;
}

std::vector<ImageSamples> build_source_pool(const Scenario& scenario) {
  std::vector<ImageSamples> pool;
  pool.reserve(scenario.source_images.size());
  for (const SimFrame& frame : scenario.source_images) {
    ImageSamples image;
    for (const Region& region : frame.regions) {
      TrainingSample sample;
      sample.domain = Domain::source;
      sample.label = region.is_object ? 1.0 : 0.0;
      sample.feature = region.feature;
      (region.is_object ? image.positives : image.negatives)
          .push_back(std::move(sample));
    }
    pool.push_back(std::move(image));
  }
  return pool;
}

const Region* find_region(const SimFrame& frame, const BoundingBox& box) {
  for (const Region& region : frame.regions) {
    if (iou(region.box, box) >= 0.999) return &region;
  }
  return nullptr;
}

/// Target-domain training pool from pseudo-labels: positives carry the soft
/// label, negatives are the frame's regions that overlap neither a
/// pseudo-label nor a confident detection (regions the baseline already
/// scores above theta are ignored rather than contradicted). Only the
/// pipeline's own outputs are consulted, never the hidden is_object flags.
std::vector<ImageSamples> build_target_pool(
    const std::map<FrameRef, const SimFrame*>& frames,
    std::span<const PseudoLabel> labels,
    std::span<const Detection> detections, double theta) {
  std::map<FrameRef, std::vector<const PseudoLabel*>> by_frame;
  for (const PseudoLabel& label : labels) {
    by_frame[label.frame].push_back(&label);
  }
  std::map<FrameRef, std::vector<const Detection*>> confident_by_frame;
  for (const Detection& det : detections) {
    if (det.score >= theta) confident_by_frame[det.frame].push_back(&det);
  }

  std::vector<ImageSamples> pool;
  for (const auto& [ref, frame_labels] : by_frame) {
    const auto it = frames.find(ref);
    if (it == frames.end()) {
      throw std::logic_error("pseudo-label references an unknown frame");
    }
    const SimFrame& frame = *it->second;
    ImageSamples image;
    for (const PseudoLabel* label : frame_labels) {
      const Region* region = find_region(frame, label->box);
      if (region == nullptr) {
        throw std::logic_error("pseudo-label box matches no candidate region");
      }
      TrainingSample sample;
      sample.domain = Domain::target;
      sample.label = label->soft_label;
      sample.feature = region->feature;
      image.positives.push_back(std::move(sample));
    }
    const auto confident = confident_by_frame.find(ref);
    for (const Region& region : frame.regions) {
      bool skip = false;
      for (const PseudoLabel* label : frame_labels) {
        if (iou(region.box, label->box) >= kNegativeOverlapCap) {
          skip = true;
          break;
        }
      }
      if (!skip && confident != confident_by_frame.end()) {
        for (const Detection* det : confident->second) {
          if (iou(region.box, det->box) >= kNegativeOverlapCap) {
            skip = true;
            break;
          }
        }
      }
      if (skip) continue;
      TrainingSample sample;
      sample.domain = Domain::target;
      sample.label = 0.0;
      sample.feature = region.feature;
      image.negatives.push_back(std::move(sample));
    }
    pool.push_back(std::move(image));
  }
  return pool;
}

std::vector<double> high_confidence_scores(
    std::span<const Detection> detections, double theta) {
  std::vector<double> scores;
  for (const Detection& det : detections) {
    if (det.score >= theta) scores.push_back(det.score);
  }
  return scores;
}

struct RoundOutcome {
  double ap = 0.0;
  double label_precision = 0.0;
  double label_recall = 0.0;
  std::size_t num_labels = 0;
  std::size_t num_tracker_origin = 0;
};

}  // namespace

ExperimentResult run_experiment(const Scenario& scenario,
                                const ExperimentScheme& scheme,
                                const ExperimentOptions& options) {
  if (options.rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  const bool is_baseline = scheme.name == "baseline";
  if (!is_baseline) {
    scheme_from_string(scheme.name);  // throws on unknown names
  }

  const std::vector<ImageSamples> source_pool = build_source_pool(scenario);
  const std::vector<TrainingSample> source_samples =
      flatten_source_samples(source_pool);
  const std::vector<GroundTruthBox> test_gt =
      ground_truth_of(scenario.target_test);
  const std::vector<GroundTruthBox> hidden_train_gt =
      ground_truth_of(scenario.target_train);

  std::map<FrameRef, const SimFrame*> train_frames;
  for (const SimFrame& frame : scenario.target_train) {
    train_frames[frame.ref] = &frame;
  }

  const Rng base(scenario.config.seed);
  std::vector<RoundOutcome> outcomes(static_cast<std::size_t>(options.rounds));

  parallel_for(
      static_cast<std::size_t>(options.rounds), options.threads,
      [&](std::size_t round) {
        Rng round_rng = base.fork(1000 + round);
        RoundOutcome outcome;

        ToyDetector detector = train_toy_detector(
            source_samples, options.baseline_epochs,
            options.baseline_learning_rate, round_rng.fork(1).seed());

        if (!is_baseline) {
          const std::vector<Detection> target_dets = run_detector(
              detector, scenario.target_train, options.emission_floor);

          LinkConfig link;
          link.link_iou = options.link_iou;
          link.theta = options.theta;
          link.recall_floor = options.emission_floor;
          std::vector<Tracklet> tracklets =
              link_all_videos(target_dets, link, 1);
          tracklets =
              prune_tracklets(std::move(tracklets), options.min_tracklet_len);

          SchemeConfig config;
          config.scheme = scheme_from_string(scheme.name);
          config.theta = options.theta;
          if (config.scheme == Scheme::label_smooth) {
            config.lambda = scheme.lambda.value_or(0.5);
          }
          if (config.scheme == Scheme::score_remap) {
            const std::vector<Detection> source_dets = run_detector(
                detector, scenario.source_images, options.emission_floor);
            config.source_cdf = build_empirical_cdf(
                high_confidence_scores(source_dets, options.theta),
                DomainTag::source);
            config.target_cdf = build_empirical_cdf(
                high_confidence_scores(target_dets, options.theta),
                DomainTag::target);
          }

          const std::vector<PseudoLabel> labels =
              apply_scheme(tracklets, config);
          outcome.num_labels = labels.size();
          for (const PseudoLabel& label : labels) {
            if (label.origin == Origin::tracker) ++outcome.num_tracker_origin;
          }

          // Diagnostics only: pseudo-label quality against hidden truth.
          if (!labels.empty()) {
            std::vector<Detection> as_dets;
            as_dets.reserve(labels.size());
            for (const PseudoLabel& label : labels) {
              as_dets.push_back({label.frame, label.box, label.soft_label});
            }
            const MatchResult match =
                match_detections(as_dets, hidden_train_gt, 0.5);
            std::size_t tp = 0;
            for (bool flag : match.is_tp) tp += flag ? 1 : 0;
            outcome.label_precision =
                static_cast<double>(tp) / static_cast<double>(labels.size());
            outcome.label_recall = static_cast<double>(match.num_matched_gt) /
                                   static_cast<double>(hidden_train_gt.size());
          }

          const std::vector<ImageSamples> target_pool = build_target_pool(
              train_frames, labels, target_dets, options.theta);
          if (!target_pool.empty()) {
            Rng adapt_rng = round_rng.fork(2);
            detector = adapt_detector(
                std::move(detector), source_pool, target_pool,
                options.adapt_steps, options.adapt_learning_rate,
                options.batch, adapt_rng);
          }
        }

        const std::vector<Detection> test_dets =
            run_detector(detector, scenario.target_test, options.eval_floor);
        outcome.ap = average_precision_50(test_dets, test_gt);
        outcomes[round] = std::move(outcome);
      });

  ExperimentResult result;
  result.scheme = scheme.name;
  for (const RoundOutcome& outcome : outcomes) {
    result.round_aps.push_back(outcome.ap);
    result.pseudo_label_precision += outcome.label_precision;
    result.pseudo_label_recall += outcome.label_recall;
    result.mean_labels_per_round += static_cast<double>(outcome.num_labels);
    result.mean_tracker_origin_per_round +=
        static_cast<double>(outcome.num_tracker_origin);
  }
  const double n = static_cast<double>(options.rounds);
  result.pseudo_label_precision /= n;
  result.pseudo_label_recall /= n;
  result.mean_labels_per_round /= n;
  result.mean_tracker_origin_per_round /= n;
  result.mean_ap =
      std::accumulate(result.round_aps.begin(), result.round_aps.end(), 0.0) /
      n;
  double var = 0.0;
  for (double ap : result.round_aps) {
    var += (ap - result.mean_ap) * (ap - result.mean_ap);
  }
  result.std_ap = std::sqrt(var / n);
  return result;
}

}  // namespace selftrain
