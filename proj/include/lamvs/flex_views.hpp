#pragma once

#include <vector>

#include "lamvs/pipeline.hpp"
#include "lamvs/scene.hpp"

namespace lamvs {

// Per-source geometric usefulness: sum over anchor points of a piecewise
// Gaussian of the baseline angle, peaked at 5 deg (sigma 1 below, 10 above).
struct UsefulnessConfig {
  double peak_deg = 5.0;
  double sigma_below_deg = 1.0;
  double sigma_above_deg = 10.0;
};

std::vector<double> usefulness_scores(const Camera& ref_cam,
                                      const std::vector<Camera>& src_cams,
                                      const std::vector<Vec3>& anchor_points,
                                      const UsefulnessConfig& cfg = {});

// Iteration plan for more testing views than training slots: the top N-2
// sources stay fixed, the rest rotate one per iteration (N'-N+1 iterations).
struct IterationPlan {
  std::vector<int> fixed_set;               // N-2 always-included source ids
  std::vector<std::vector<int>> iterations; // each inner list has N-1 ids
};

IterationPlan plan_iterations(const std::vector<double>& scores, int n_train,
                              int n_test);

// Fewer testing views: keep all N'-1 volumes and append N-N' copies of the
// highest-scoring one.
std::vector<PairwiseCostVolume> pad_fewer_views(
    const std::vector<PairwiseCostVolume>& volumes,
    const std::vector<double>& scores, int n_train);

// Position (into the volume list) of the highest-scoring source;
// ties break to the lower position.
int top_score_position(const std::vector<double>& scores);

// Per-pixel winner-takes-all over iteration estimates by confidence;
// ties go to the lowest iteration index.
DepthEstimate fuse_by_confidence(const std::vector<DepthEstimate>& estimates);

struct FlexibleRunResult {
  DepthEstimate fused;
  std::vector<CascadeResult> runs;
  IterationPlan plan;                 // populated when n_test > n_train
  std::vector<double> scores;
};

// Test-time entry point: dispatches between the plain cascade (N'=N), the
// iterate-and-fuse path (N'>N) and the duplication path (N'<N).
FlexibleRunResult run_flexible(const std::vector<ImageF>& images,
                               const std::vector<Camera>& cameras,
                               double depth_min, const CascadeConfig& config,
                               const std::vector<Vec3>& anchor_points);

}  // namespace lamvs
