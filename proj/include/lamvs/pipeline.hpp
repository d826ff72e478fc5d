#pragma once

#include <optional>
#include <vector>

#include "lamvs/aggregation.hpp"
#include "lamvs/cost_volume.hpp"
#include "lamvs/geometry.hpp"
#include "lamvs/types.hpp"

namespace lamvs {

struct StageConfig {
  double scale = 1.0;   // 1/4, 1/2 or 1
  int hypothesis_count = 8;
  double interval = 0.5;
};

struct CascadeConfig {
  std::vector<StageConfig> stages = {
      {0.25, 48, 4.0}, {0.5, 32, 1.0}, {1.0, 8, 0.5}};
  AggregationStrategy aggregation;
  std::optional<uint64_t> shuffle_seed;
  int view_count = 5;  // training-time N; pairwise slots = N-1
  // Per-pixel z-score gain applied to the regularized profile before the
  // softmax; raw matching contrast is O(1), which would leave the softmax
  // nearly uniform over dozens of hypotheses and drag the expected depth
  // toward the range center. The default is high enough that the soft
  // argmax concentrates on the best bin at every stage.
  double softmax_sharpness = 200.0;
};

struct ProbabilityVolume {
  Volume probs;
};

enum class DepthMode { soft_argmax, wta };

// Index-space smoothing for volumes whose hypothesis grid is shared by all
// pixels (two box-filter passes, spatial radius 6, depth radius 1).
Volume regularize_cost(const Volume& volume);

// Smoothing for refined stages, where every pixel has its own hypothesis
// grid: neighbor profiles are resampled at matching depths, offset by the
// locally smoothed grid centers so averaging follows the estimated surface.
Volume regularize_cost(const Volume& volume, const DepthHypotheses& hyps,
                       double interval);

// Standardizes each pixel's profile over its valid cells and multiplies by
// `gain`; monotone per pixel, so WTA results are unchanged.
Volume sharpen_profile(const Volume& volume, double gain);

struct RegressionResult {
  DepthEstimate estimate;  // confidence left empty
  ProbabilityVolume probs;
};

RegressionResult softmax_depth(const Volume& volume, const DepthHypotheses& hyps,
                               DepthMode mode);

ImageF confidence_map(const ProbabilityVolume& probs);

// Duplicate an existing pairwise slot to fill missing view channels
// (flexible-view path, fewer testing views than training slots).
struct PadSpec {
  int source_pos = 0;  // index into the volume list to duplicate
  int copies = 0;
};

struct StageResult {
  DepthHypotheses hypotheses;
  std::vector<PairwiseCostVolume> raw_pairwise;
  Volume aggregated;   // after aggregation, before final regularization
  Volume regularized;
  ProbabilityVolume probs;
  DepthEstimate estimate;
};

struct CascadeResult {
  std::vector<StageResult> stages;
  const DepthEstimate& final_estimate() const { return stages.back().estimate; }
};

// Full three-stage cascade for one reference view. `images[0]` is the
// reference; `cameras` are full-resolution and aligned with `images`.
CascadeResult run_cascade(const std::vector<ImageF>& images,
                          const std::vector<Camera>& cameras, double depth_min,
                          const CascadeConfig& config,
                          const std::optional<PadSpec>& pad = std::nullopt);

// Bilinear upsampling used to seed the next stage; invalid pixels take
// `fill` before interpolation.
ImageF upsample_depth(const DepthEstimate& est, int out_height, int out_width,
                      float fill);

}  // namespace lamvs
