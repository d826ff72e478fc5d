#include "lamvs/cost_volume.hpp"

#include <cmath>
#include <random>

#include "lamvs/parallel.hpp"

namespace lamvs {

namespace {

ImageF area_downsample(const ImageF& img, int factor) {
  if (factor == 1) return img;
  const int h = static_cast<int>(img.rows()) / factor;
  const int w = static_cast<int>(img.cols()) / factor;
  ImageF out(h, w);
  const float norm = 1.0f / (factor * factor);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int dy = 0; dy < factor; ++dy)
        for (int dx = 0; dx < factor; ++dx) acc += img(y * factor + dy, x * factor + dx);
      out(y, x) = acc * norm;
    }
  }
  return out;
}

// 5x5 window mean with clamped borders.
ImageF window_mean5(const ImageF& img) {
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());
  ImageF out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int dy = -2; dy <= 2; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -2; dx <= 2; ++dx)
          acc += img(yy, std::clamp(x + dx, 0, w - 1));
      }
      out(y, x) = acc / 25.0f;
    }
  }
  return out;
}

ImageF local_std_normalize(const ImageF& raw) {
  const ImageF m = window_mean5(raw);
  const ImageF m2 = window_mean5(raw.cwiseProduct(raw));
  ImageF out(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    const float var = std::max(0.0f, m2.data()[i] - m.data()[i] * m.data()[i]);
    out.data()[i] = raw.data()[i] / (std::sqrt(var) + 1e-4f);
  }
  return out;
}

}  // namespace

FeatureMap extract_features(const ImageF& image, int stage, double scale) {
  const int factor = static_cast<int>(std::lround(1.0 / scale));
  if (factor != 1 && factor != 2 && factor != 4)
    throw std::invalid_argument("extract_features: scale must be 1, 1/2 or 1/4");
  const ImageF img = area_downsample(image, factor);
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());

  ImageF centered = img - window_mean5(img);
  ImageF gx(h, w), gy(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      gx(y, x) = 0.5f * (img(y, std::min(x + 1, w - 1)) - img(y, std::max(x - 1, 0)));
      gy(y, x) = 0.5f * (img(std::min(y + 1, h - 1), x) - img(std::max(y - 1, 0), x));
    }
  }

  FeatureMap fm;
  fm.stage = stage;
  fm.channels.push_back(local_std_normalize(centered));
  fm.channels.push_back(local_std_normalize(gx));
  fm.channels.push_back(local_std_normalize(gy));
  return fm;
}

DepthHypotheses sample_hypotheses_global(int height, int width, double d_min,
                                         double interval, int count) {
  if (count < 2) throw std::invalid_argument("sample_hypotheses: count must be >= 2");
  if (!(interval > 0.0) || !(d_min > 0.0))
    throw std::invalid_argument("sample_hypotheses: range must be positive");
  DepthHypotheses hyps;
  hyps.height = height;
  hyps.width = width;
  hyps.count = count;
  hyps.interval = interval;
  hyps.values.resize(static_cast<size_t>(height) * width * count);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int j = 0; j < count; ++j)
        hyps.at(y, x, j) = static_cast<float>(d_min + j * interval);
  return hyps;
}

DepthHypotheses sample_hypotheses_refined(const ImageF& prev_depth, int count,
                                          double interval) {
  if (count < 2) throw std::invalid_argument("sample_hypotheses: count must be >= 2");
  if (!(interval > 0.0))
    throw std::invalid_argument("sample_hypotheses: interval must be positive");
  DepthHypotheses hyps;
  hyps.height = static_cast<int>(prev_depth.rows());
  hyps.width = static_cast<int>(prev_depth.cols());
  hyps.count = count;
  hyps.interval = interval;
  hyps.values.resize(static_cast<size_t>(hyps.height) * hyps.width * count);
  const double half_span = (count - 1) / 2.0 * interval;
  for (int y = 0; y < hyps.height; ++y) {
    for (int x = 0; x < hyps.width; ++x) {
      double lo = prev_depth(y, x) - half_span;
      if (lo < interval / 2.0) lo = interval / 2.0;
      for (int j = 0; j < count; ++j)
        hyps.at(y, x, j) = static_cast<float>(lo + j * interval);
    }
  }
  return hyps;
}

PairwiseCostVolume pairwise_cost(const FeatureMap& ref_features,
                                 const FeatureMap& src_features,
                                 const Camera& ref_cam, const Camera& src_cam,
                                 const DepthHypotheses& hyps, int source_id) {
  if (ref_features.channel_count() != src_features.channel_count() ||
      ref_features.stage != src_features.stage)
    throw std::invalid_argument("pairwise_cost: feature maps do not match");
  if (ref_features.height() != hyps.height || ref_features.width() != hyps.width)
    throw std::invalid_argument("pairwise_cost: hypothesis grid does not match features");

  const int h = hyps.height, w = hyps.width, d = hyps.count;
  const int c = ref_features.channel_count();
  PairwiseCostVolume out;
  out.source_id = source_id;
  out.volume = Volume(h, w, d);

  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      for (int j = 0; j < d; ++j) {
        const Projection pr = project_to_source({double(x), double(y)},
                                                hyps.at(y, x, j), ref_cam, src_cam);
        if (!pr.valid) continue;
        float acc = 0.0f;
        bool ok = true;
        for (int ch = 0; ch < c; ++ch) {
          const Sample s = bilinear_sample(src_features.channels[ch], pr.pixel);
          if (!s.valid) {
            ok = false;
            break;
          }
          acc += ref_features.channels[ch](y, x) * s.value;
        }
        if (!ok) continue;
        out.volume.at(y, x, j) = acc / c;
        out.volume.valid_at(y, x, j) = 1;
      }
    }
  });
  return out;
}

Volume masked_box_filter(const Volume& v) {
  Volume out(v.height, v.width, v.depth);
  for (int y = 0; y < v.height; ++y) {
    for (int x = 0; x < v.width; ++x) {
      for (int j = 0; j < v.depth; ++j) {
        float acc = 0.0f;
        int support = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int yy = std::clamp(y + dy, 0, v.height - 1);
          for (int dx = -1; dx <= 1; ++dx) {
            const int xx = std::clamp(x + dx, 0, v.width - 1);
            for (int dj = -1; dj <= 1; ++dj) {
              const int jj = std::clamp(j + dj, 0, v.depth - 1);
              if (!v.valid_at(yy, xx, jj)) continue;
              acc += v.at(yy, xx, jj);
              ++support;
            }
          }
        }
        if (v.valid_at(y, x, j) && support > 0) {
          out.at(y, x, j) = acc / support;
          out.valid_at(y, x, j) = 1;
        }
      }
    }
  }
  return out;
}

ViewPreservedCost assemble_view_preserved(
    const std::vector<PairwiseCostVolume>& volumes) {
  if (volumes.empty())
    throw std::invalid_argument("assemble_view_preserved: no volumes");
  ViewPreservedCost cvp;
  for (const PairwiseCostVolume& v : volumes) {
    if (!v.volume.same_shape(volumes.front().volume))
      throw std::invalid_argument("assemble_view_preserved: shape mismatch");
    cvp.channels.push_back(v.volume);
    cvp.channel_order.push_back(v.source_id);
  }
  return cvp;
}

namespace {

uint32_t bounded_draw(std::mt19937& gen, uint32_t n) {
  const uint32_t limit = UINT32_MAX - UINT32_MAX % n;
  uint32_t r;
  do {
    r = gen();
  } while (r >= limit);
  return r % n;
}

}  // namespace

std::vector<int> random_permutation(int n, uint64_t seed) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  std::mt19937 gen(static_cast<uint32_t>(seed ^ (seed >> 32)));
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(bounded_draw(gen, i + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

ViewPreservedCost apply_view_permutation(const ViewPreservedCost& cvp,
                                         const std::vector<int>& perm) {
  if (perm.size() != cvp.channels.size())
    throw std::invalid_argument("apply_view_permutation: size mismatch");
  ViewPreservedCost out;
  for (int src : perm) {
    out.channels.push_back(cvp.channels[src]);
    out.channel_order.push_back(cvp.channel_order[src]);
  }
  return out;
}

ViewPreservedCost shuffle_views(const ViewPreservedCost& cvp, uint64_t seed) {
  return apply_view_permutation(cvp, random_permutation(cvp.view_count(), seed));
}

}  // namespace lamvs
