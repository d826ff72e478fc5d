#pragma once

#include <array>
#include <vector>

#include "lamvs/geometry.hpp"
#include "lamvs/types.hpp"

namespace lamvs {

struct FilterConfig {
  double conf_threshold = 0.3;
  double reproj_px_threshold = 1.0;
  double abs_depth_threshold = 0.5;  // finest-stage interval
  std::array<double, 4> dyn_view_weights{1.0, 0.5, 0.25, 0.125};
  double dyn_score_threshold = 1.5;

  enum class DepthCriterion { absolute, relative };
  DepthCriterion criterion = DepthCriterion::absolute;
  double rel_depth_threshold = 1e-3;  // only used by the relative variant
};

struct PhotometricResult {
  MaskImage mask;
  bool reference_only = false;  // no source estimates: only clause (a) applied
};

// A pixel passes iff its own confidence clears the threshold AND at least
// one source view is confident at the reprojected location.
PhotometricResult photometric_filter(const DepthEstimate& ref_est,
                                     const std::vector<DepthEstimate>& src_ests,
                                     const Camera& ref_cam,
                                     const std::vector<Camera>& src_cams,
                                     const FilterConfig& cfg);

// Smallest tier k in {1..4} at which a source view agrees with the
// reference pixel: forward-backward reprojection error <= k * px threshold
// and source-frame depth difference <= k * depth threshold (absolute by
// default). 0 = inconsistent.
int consistency_tier(const PixelCoord& p, double ref_depth,
                     const Camera& ref_cam, const Camera& src_cam,
                     const DepthEstimate& src_est, const FilterConfig& cfg);

struct GeometricResult {
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> consistent_views;
  ImageF dynamic_score;
  MaskImage mask;
  // tier per source view (0 = inconsistent)
  std::vector<Eigen::Matrix<int8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> tiers;
};

GeometricResult geometric_consistency(const DepthEstimate& ref_est,
                                      const std::vector<DepthEstimate>& src_ests,
                                      const Camera& ref_cam,
                                      const std::vector<Camera>& src_cams,
                                      const FilterConfig& cfg);

Vec3 back_project(const PixelCoord& p, double depth, const Camera& cam);

// Multi-view fusion: every surviving reference pixel becomes one point,
// averaged with its consistent source observations; consumed source pixels
// are skipped when their own view acts as reference.
FusedCloud fuse_point_cloud(const std::vector<DepthEstimate>& estimates,
                            const std::vector<MaskImage>& masks,
                            const std::vector<Camera>& cameras,
                            const std::vector<ImageF>& images,
                            const FilterConfig& cfg);

}  // namespace lamvs
