#include "lamvs/flex_views.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lamvs {

std::vector<double> usefulness_scores(const Camera& ref_cam,
                                      const std::vector<Camera>& src_cams,
                                      const std::vector<Vec3>& anchor_points,
                                      const UsefulnessConfig& cfg) {
  if (anchor_points.empty())
    throw std::invalid_argument("usefulness_scores: no anchor points");
  const Vec3 ref_c = ref_cam.center();
  std::vector<double> scores;
  scores.reserve(src_cams.size());
  const double peak = cfg.peak_deg * M_PI / 180.0;
  const double s_lo = cfg.sigma_below_deg * M_PI / 180.0;
  const double s_hi = cfg.sigma_above_deg * M_PI / 180.0;
  for (const Camera& src : src_cams) {
    const Vec3 src_c = src.center();
    double score = 0.0;
    for (const Vec3& p : anchor_points) {
      const Vec3 a = (ref_c - p).normalized();
      const Vec3 b = (src_c - p).normalized();
      const double theta = std::acos(std::clamp(a.dot(b), -1.0, 1.0));
      const double sigma = theta < peak ? s_lo : s_hi;
      const double t = (theta - peak) / sigma;
      score += std::exp(-0.5 * t * t);
    }
    scores.push_back(score);
  }
  return scores;
}

namespace {

// View ids sorted by descending score, ties to the lower id.
std::vector<int> rank_by_score(const std::vector<double>& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

int top_score_position(const std::vector<double>& scores) {
  if (scores.empty()) throw std::invalid_argument("top_score_position: empty");
  return rank_by_score(scores).front();
}

IterationPlan plan_iterations(const std::vector<double>& scores, int n_train,
                              int n_test) {
  if (!(n_test > n_train && n_train >= 3))
    throw std::invalid_argument("plan_iterations: requires N' > N >= 3");
  if (static_cast<int>(scores.size()) != n_test - 1)
    throw std::invalid_argument("plan_iterations: need one score per source view");

  const std::vector<int> order = rank_by_score(scores);
  IterationPlan plan;
  plan.fixed_set.assign(order.begin(), order.begin() + (n_train - 2));
  for (size_t k = n_train - 2; k < order.size(); ++k) {
    std::vector<int> it = plan.fixed_set;
    it.push_back(order[k]);
    plan.iterations.push_back(std::move(it));
  }
  return plan;
}

std::vector<PairwiseCostVolume> pad_fewer_views(
    const std::vector<PairwiseCostVolume>& volumes,
    const std::vector<double>& scores, int n_train) {
  const int n_test = static_cast<int>(volumes.size()) + 1;
  if (!(n_test >= 2 && n_test < n_train))
    throw std::invalid_argument("pad_fewer_views: requires 2 <= N' < N");
  if (scores.size() != volumes.size())
    throw std::invalid_argument("pad_fewer_views: need one score per volume");
  std::vector<PairwiseCostVolume> out = volumes;
  const int best = top_score_position(scores);
  for (int c = 0; c < n_train - n_test; ++c) out.push_back(volumes[best]);
  return out;
}

DepthEstimate fuse_by_confidence(const std::vector<DepthEstimate>& estimates) {
  if (estimates.empty())
    throw std::invalid_argument("fuse_by_confidence: no estimates");
  const int h = estimates[0].height(), w = estimates[0].width();
  for (const DepthEstimate& e : estimates)
    if (e.height() != h || e.width() != w)
      throw std::invalid_argument("fuse_by_confidence: shape mismatch");

  DepthEstimate out;
  out.depth = ImageF::Zero(h, w);
  out.confidence = ImageF::Zero(h, w);
  out.valid = MaskImage::Zero(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int best = -1;
      float best_conf = -1.0f;
      for (size_t q = 0; q < estimates.size(); ++q) {
        if (!estimates[q].valid(y, x)) continue;
        if (estimates[q].confidence(y, x) > best_conf) {
          best_conf = estimates[q].confidence(y, x);
          best = static_cast<int>(q);
        }
      }
      if (best < 0) continue;
      out.depth(y, x) = estimates[best].depth(y, x);
      out.confidence(y, x) = best_conf;
      out.valid(y, x) = 1;
    }
  }
  return out;
}

FlexibleRunResult run_flexible(const std::vector<ImageF>& images,
                               const std::vector<Camera>& cameras,
                               double depth_min, const CascadeConfig& config,
                               const std::vector<Vec3>& anchor_points) {
  const int n_test = static_cast<int>(images.size());
  const int n_train = config.view_count;
  FlexibleRunResult result;

  if (n_test == n_train) {
    result.runs.push_back(run_cascade(images, cameras, depth_min, config));
    result.fused = result.runs[0].final_estimate();
    return result;
  }

  std::vector<Camera> src_cams(cameras.begin() + 1, cameras.end());
  result.scores = usefulness_scores(cameras[0], src_cams, anchor_points);

  if (n_test > n_train) {
    result.plan = plan_iterations(result.scores, n_train, n_test);
    std::vector<DepthEstimate> finals;
    for (const std::vector<int>& ids : result.plan.iterations) {
      std::vector<ImageF> sub_images{images[0]};
      std::vector<Camera> sub_cams{cameras[0]};
      for (int id : ids) {
        sub_images.push_back(images[id + 1]);
        sub_cams.push_back(cameras[id + 1]);
      }
      result.runs.push_back(run_cascade(sub_images, sub_cams, depth_min, config));
      finals.push_back(result.runs.back().final_estimate());
    }
    result.fused = fuse_by_confidence(finals);
    return result;
  }

  // Fewer views: duplicate the top-scoring pairwise slot inside the cascade.
  PadSpec pad;
  pad.source_pos = top_score_position(result.scores);
  pad.copies = n_train - n_test;
  result.runs.push_back(run_cascade(images, cameras, depth_min, config, pad));
  result.fused = result.runs[0].final_estimate();
  return result;
}

}  // namespace lamvs
