#include "selftrain/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace selftrain {

double binary_cross_entropy(double y, double p) {
  if (!(y >= 0.0 && y <= 1.0)) {
    throw std::invalid_argument("label must lie in [0,1]");
  }
  p = std::clamp(p, kPosteriorEpsilon, 1.0 - kPosteriorEpsilon);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

std::string to_string(Domain domain) {
  return domain == Domain::source ? "source" : "target";
}

double distillation_loss(const TrainingSample& sample, double p) {
  return binary_cross_entropy(sample.label, p);
}

namespace {

void take_regions(const ImageSamples& image, Domain domain,
                  const BatchSpec& spec, Rng& rng,
                  std::vector<TrainingSample>& batch) {
  const int regions = spec.regions_per_image;
  const int pos_cap = static_cast<int>(
      static_cast<double>(regions) * spec.positive_fraction);
  const int num_pos =
      std::min<int>(pos_cap, static_cast<int>(image.positives.size()));
  const int num_neg = regions - num_pos;

  if (num_neg > 0 && image.negatives.empty()) {
    throw std::invalid_argument("image has no negative regions to sample");
  }

  // Positives: a random subset without replacement when over the cap.
  std::vector<std::size_t> pos_idx(image.positives.size());
  std::iota(pos_idx.begin(), pos_idx.end(), 0);
  if (num_pos < static_cast<int>(image.positives.size())) {
    rng.shuffle(pos_idx);
  }
  for (int i = 0; i < num_pos; ++i) {
    TrainingSample s = image.positives[pos_idx[static_cast<std::size_t>(i)]];
    s.domain = domain;
    batch.push_back(std::move(s));
  }

  // Negatives: without replacement while they last, then with replacement.
  std::vector<std::size_t> neg_idx(image.negatives.size());
  std::iota(neg_idx.begin(), neg_idx.end(), 0);
  rng.shuffle(neg_idx);
  for (int i = 0; i < num_neg; ++i) {
    const std::size_t k =
        i < static_cast<int>(neg_idx.size())
            ? neg_idx[static_cast<std::size_t>(i)]
            : rng.uniform_index(image.negatives.size());
    TrainingSample s = image.negatives[k];
    s.domain = domain;
    batch.push_back(std::move(s));
  }
}

}  // namespace

std::vector<TrainingSample> compose_mixed_batch(
    std::span<const ImageSamples> source_pool,
    std::span<const ImageSamples> target_pool, const BatchSpec& spec,
    Rng& rng) {
  if (source_pool.empty() || target_pool.empty()) {
    throw std::invalid_argument("mixed batches need both pools non-empty");
  }
  if (spec.regions_per_image < 1) {
    throw std::invalid_argument("regions_per_image must be >= 1");
  }
  std::vector<TrainingSample> batch;
  batch.reserve(static_cast<std::size_t>(2 * spec.regions_per_image));
  const ImageSamples& src = source_pool[rng.uniform_index(source_pool.size())];
  const ImageSamples& tgt = target_pool[rng.uniform_index(target_pool.size())];
  take_regions(src, Domain::source, spec, rng, batch);
  take_regions(tgt, Domain::target, spec, rng, batch);
  return batch;
}

double mean_distillation_loss(std::span<const TrainingSample> batch,
                              std::span<const double> posteriors) {
  if (batch.size() != posteriors.size()) {
    throw std::invalid_argument("one posterior per sample required");
  }
  if (batch.empty()) return 0.0;
  double total = 0.0;
  double total_weight = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total += batch[i].weight * distillation_loss(batch[i], posteriors[i]);
    total_weight += batch[i].weight;
  }
  return total / total_weight;
}

}  // namespace selftrain
