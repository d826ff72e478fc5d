#include "lamvs/fusion.hpp"

#include <cmath>
#include <stdexcept>

namespace lamvs {

namespace {

bool round_to_pixel(const PixelCoord& p, int width, int height, int* x, int* y) {
  const int xi = static_cast<int>(std::lround(p.u));
  const int yi = static_cast<int>(std::lround(p.v));
  if (xi < 0 || yi < 0 || xi >= width || yi >= height) return false;
  *x = xi;
  *y = yi;
  return true;
}

}  // namespace

PhotometricResult photometric_filter(const DepthEstimate& ref_est,
                                     const std::vector<DepthEstimate>& src_ests,
                                     const Camera& ref_cam,
                                     const std::vector<Camera>& src_cams,
                                     const FilterConfig& cfg) {
  if (src_ests.size() != src_cams.size())
    throw std::invalid_argument("photometric_filter: estimates/cameras mismatch");
  const int h = ref_est.height(), w = ref_est.width();
  PhotometricResult out;
  out.mask = MaskImage::Zero(h, w);
  out.reference_only = src_ests.empty();

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!ref_est.valid(y, x)) continue;
      if (ref_est.confidence(y, x) < cfg.conf_threshold) continue;
      if (out.reference_only) {
        out.mask(y, x) = 1;
        continue;
      }
      for (size_t i = 0; i < src_ests.size(); ++i) {
        const Projection pr = project_to_source(
            {double(x), double(y)}, ref_est.depth(y, x), ref_cam, src_cams[i]);
        if (!pr.valid) continue;
        int sx, sy;
        if (!round_to_pixel(pr.pixel, src_ests[i].width(), src_ests[i].height(),
                            &sx, &sy))
          continue;
        if (src_ests[i].valid(sy, sx) &&
            src_ests[i].confidence(sy, sx) >= cfg.conf_threshold) {
          out.mask(y, x) = 1;
          break;
        }
      }
    }
  }
  return out;
}

int consistency_tier(const PixelCoord& p, double ref_depth,
                     const Camera& ref_cam, const Camera& src_cam,
                     const DepthEstimate& src_est, const FilterConfig& cfg) {
  const Projection fwd = project_to_source(p, ref_depth, ref_cam, src_cam);
  if (!fwd.valid) return 0;
  int sx, sy;
  if (!round_to_pixel(fwd.pixel, src_est.width(), src_est.height(), &sx, &sy))
    return 0;
  if (!src_est.valid(sy, sx)) return 0;
  const double d_src = src_est.depth(sy, sx);
  if (!(d_src > 0.0)) return 0;

  const Projection back =
      project_to_source({double(sx), double(sy)}, d_src, src_cam, ref_cam);
  if (!back.valid) return 0;
  const double err_px = std::hypot(back.pixel.u - p.u, back.pixel.v - p.v);
  const double err_depth =
      cfg.criterion == FilterConfig::DepthCriterion::absolute
          ? std::abs(fwd.source_depth - d_src)
          : std::abs(fwd.source_depth - d_src) / fwd.source_depth;
  const double depth_thr = cfg.criterion == FilterConfig::DepthCriterion::absolute
                               ? cfg.abs_depth_threshold
                               : cfg.rel_depth_threshold;
  for (int k = 1; k <= 4; ++k) {
    if (err_px <= k * cfg.reproj_px_threshold && err_depth <= k * depth_thr)
      return k;
  }
  return 0;
}

GeometricResult geometric_consistency(const DepthEstimate& ref_est,
                                      const std::vector<DepthEstimate>& src_ests,
                                      const Camera& ref_cam,
                                      const std::vector<Camera>& src_cams,
                                      const FilterConfig& cfg) {
  if (src_ests.size() != src_cams.size())
    throw std::invalid_argument("geometric_consistency: estimates/cameras mismatch");
  const int h = ref_est.height(), w = ref_est.width();
  GeometricResult out;
  out.consistent_views.setZero(h, w);
  out.dynamic_score = ImageF::Zero(h, w);
  out.mask = MaskImage::Zero(h, w);
  out.tiers.resize(src_ests.size());
  for (auto& t : out.tiers) t.setZero(h, w);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!ref_est.valid(y, x)) continue;
      double score = 0.0;
      int count = 0;
      for (size_t i = 0; i < src_ests.size(); ++i) {
        const int tier = consistency_tier({double(x), double(y)},
                                          ref_est.depth(y, x), ref_cam,
                                          src_cams[i], src_ests[i], cfg);
        out.tiers[i](y, x) = static_cast<int8_t>(tier);
        if (tier > 0) {
          score += cfg.dyn_view_weights[tier - 1];
          ++count;
        }
      }
      out.consistent_views(y, x) = count;
      out.dynamic_score(y, x) = static_cast<float>(score);
      if (score >= cfg.dyn_score_threshold) out.mask(y, x) = 1;
    }
  }
  return out;
}

Vec3 back_project(const PixelCoord& p, double depth, const Camera& cam) {
  const CameraIntrinsics& k = cam.intrinsics;
  const Vec3 x_cam((p.u - k.cx) / k.fx * depth, (p.v - k.cy) / k.fy * depth, depth);
  return cam.pose.inverse().apply(x_cam);
}

FusedCloud fuse_point_cloud(const std::vector<DepthEstimate>& estimates,
                            const std::vector<MaskImage>& masks,
                            const std::vector<Camera>& cameras,
                            const std::vector<ImageF>& images,
                            const FilterConfig& cfg) {
  const size_t n = estimates.size();
  if (masks.size() != n || cameras.size() != n || images.size() != n)
    throw std::invalid_argument("fuse_point_cloud: input lists misaligned");

  FusedCloud cloud;
  std::vector<MaskImage> consumed(n);
  for (size_t v = 0; v < n; ++v)
    consumed[v] = MaskImage::Zero(estimates[v].height(), estimates[v].width());

  for (size_t v = 0; v < n; ++v) {
    const DepthEstimate& est = estimates[v];
    for (int y = 0; y < est.height(); ++y) {
      for (int x = 0; x < est.width(); ++x) {
        if (!masks[v](y, x) || !est.valid(y, x) || consumed[v](y, x)) continue;
        Vec3 acc = back_project({double(x), double(y)}, est.depth(y, x), cameras[v]);
        int support = 1;
        for (size_t s = 0; s < n; ++s) {
          if (s == v) continue;
          const int tier =
              consistency_tier({double(x), double(y)}, est.depth(y, x),
                               cameras[v], cameras[s], estimates[s], cfg);
          if (tier == 0) continue;
          const Projection pr = project_to_source(
              {double(x), double(y)}, est.depth(y, x), cameras[v], cameras[s]);
          int sx, sy;
          if (!round_to_pixel(pr.pixel, estimates[s].width(),
                              estimates[s].height(), &sx, &sy))
            continue;
          if (consumed[s](sy, sx)) continue;
          acc += back_project({double(sx), double(sy)},
                              estimates[s].depth(sy, sx), cameras[s]);
          consumed[s](sy, sx) = 1;
          ++support;
        }
        CloudPoint pt;
        pt.position = acc / support;
        pt.support = support;
        const float g = std::clamp(images[v](y, x), 0.0f, 1.0f);
        pt.r = pt.g = pt.b = static_cast<uint8_t>(std::lround(g * 255.0f));
        cloud.points.push_back(pt);
      }
    }
  }
  return cloud;
}

}  // namespace lamvs
