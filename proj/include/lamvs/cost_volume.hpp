#pragma once

#include <vector>

#include "lamvs/geometry.hpp"
#include "lamvs/types.hpp"

namespace lamvs {

// Handcrafted matching features: mean-subtracted intensity plus horizontal
// and vertical gradients, each divided by its local standard deviation.
struct FeatureMap {
  std::vector<ImageF> channels;
  int stage = 0;

  int height() const { return channels.empty() ? 0 : static_cast<int>(channels[0].rows()); }
  int width() const { return channels.empty() ? 0 : static_cast<int>(channels[0].cols()); }
  int channel_count() const { return static_cast<int>(channels.size()); }
};

// `scale` must be 1, 1/2 or 1/4; the image is area-downsampled first.
FeatureMap extract_features(const ImageF& image, int stage, double scale);

// Per-pixel depth hypothesis grid, strictly increasing along the
// hypothesis axis.
struct DepthHypotheses {
  int height = 0;
  int width = 0;
  int count = 0;
  double interval = 0.0;
  std::vector<float> values;

  float at(int y, int x, int j) const {
    return values[(static_cast<size_t>(y) * width + x) * count + j];
  }
  float& at(int y, int x, int j) {
    return values[(static_cast<size_t>(y) * width + x) * count + j];
  }
};

// Coarse stage: d_j = d_min + j * interval, identical for all pixels.
DepthHypotheses sample_hypotheses_global(int height, int width, double d_min,
                                         double interval, int count);

// Finer stages: hypotheses centered per pixel on the previous prediction
// (already upsampled to this resolution); the whole set is shifted up when
// needed so every value stays >= interval/2.
DepthHypotheses sample_hypotheses_refined(const ImageF& prev_depth, int count,
                                          double interval);

struct PairwiseCostVolume {
  Volume volume;
  int source_id = -1;
};

// Plane-sweep dot-product cost: per pixel and hypothesis, warp the source
// features and take the channel mean of the Hadamard product with the
// reference features. Invalid warps give cost 0 with validity false.
PairwiseCostVolume pairwise_cost(const FeatureMap& ref_features,
                                 const FeatureMap& src_features,
                                 const Camera& ref_cam, const Camera& src_cam,
                                 const DepthHypotheses& hyps, int source_id);

// Masked 3x3x3 box filter (spatial x spatial x depth) with edge replication;
// invalid cells contribute nothing and the kernel renormalizes over the
// valid support. The validity mask is unchanged.
Volume masked_box_filter(const Volume& v);

inline PairwiseCostVolume pre_regularize(const PairwiseCostVolume& v) {
  return {masked_box_filter(v.volume), v.source_id};
}

// Pairwise volumes stacked along a trailing view axis (H' x W' x D x (N-1)).
struct ViewPreservedCost {
  std::vector<Volume> channels;
  std::vector<int> channel_order;  // channel -> source id

  int view_count() const { return static_cast<int>(channels.size()); }
};

ViewPreservedCost assemble_view_preserved(
    const std::vector<PairwiseCostVolume>& volumes);

// Deterministic uniformly random permutation of 0..n-1.
std::vector<int> random_permutation(int n, uint64_t seed);

ViewPreservedCost apply_view_permutation(const ViewPreservedCost& cvp,
                                         const std::vector<int>& perm);

ViewPreservedCost shuffle_views(const ViewPreservedCost& cvp, uint64_t seed);

}  // namespace lamvs
