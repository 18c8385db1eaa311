#pragma once

#include <span>
#include <string>
#include <vector>

#include "selftrain/rng.hpp"

namespace selftrain {

/// Posterior clamp applied before taking logs.
inline constexpr double kPosteriorEpsilon = 1e-7;

/// -[y log p + (1-y) log(1-p)] with p clamped to
/// [kPosteriorEpsilon, 1 - kPosteriorEpsilon]. y must lie in [0,1].
double binary_cross_entropy(double y, double p);

enum class Domain { source, target };

std::string to_string(Domain domain);

/// One training region with its resolved label: y_i for source samples and
/// hard schemes, y~_i for soft-labeled target positives, 0 for negatives.
struct TrainingSample {
  Domain domain = Domain::source;
  double label = 0.0;
  std::vector<double> feature;
  double weight = 1.0;
};

/// Distillation loss of one sample: binary cross-entropy against the
/// sample's stored label (the source/target label dispatch happens at
/// label-assignment time).
double distillation_loss(const TrainingSample& sample, double p);

/// Candidate training regions of one image: labeled positives plus
/// background negatives (label 0) that overlap no positive.
struct ImageSamples {
  std::vector<TrainingSample> positives;
  std::vector<TrainingSample> negatives;
};

/// Region-sampling contract for joint re-training: one source image and one
/// target image per step, regions_per_image regions each, gradients summed
/// over both halves before any parameter update.
struct BatchSpec {
  int regions_per_image = 64;
  double positive_fraction = 0.25;  // positives capped at 1:3 pos:neg
};

/// Draws one mixed batch: regions_per_image regions from one random source
/// image followed by regions_per_image regions from one random target image.
/// Positives are capped at positive_fraction of the regions (fewer when the
/// image has fewer), negatives fill the rest (drawn with replacement when
/// the image has too few). Throws std::invalid_argument on an empty pool.
std::vector<TrainingSample> compose_mixed_batch(
    std::span<const ImageSamples> source_pool,
    std::span<const ImageSamples> target_pool, const BatchSpec& spec,
    Rng& rng);

/// Weighted mean distillation loss of a batch at the given posteriors.
double mean_distillation_loss(std::span<const TrainingSample> batch,
                              std::span<const double> posteriors);

}  // namespace selftrain
