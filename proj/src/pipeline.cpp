#include "lamvs/pipeline.hpp"

#include <cmath>
#include <stdexcept>

namespace lamvs {

namespace {

Volume masked_box_filter_wide(const Volume& v, int r, int rd = 1) {
  Volume out(v.height, v.width, v.depth);
  for (int y = 0; y < v.height; ++y) {
    for (int x = 0; x < v.width; ++x) {
      for (int j = 0; j < v.depth; ++j) {
        float acc = 0.0f;
        int support = 0;
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = std::clamp(y + dy, 0, v.height - 1);
          for (int dx = -r; dx <= r; ++dx) {
            const int xx = std::clamp(x + dx, 0, v.width - 1);
            for (int dj = -rd; dj <= rd; ++dj) {
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

// Box filter that averages neighbors at equal depth rather than equal bin
// index. Refined-stage hypothesis grids are centered per pixel, so the same
// bin index maps to different depths at neighboring pixels; averaging by
// index blurs across depth and biases the filtered profile.
Volume depth_aligned_box_filter(const Volume& v, const DepthHypotheses& hyps,
                                double interval, int r, int rd = 1) {
  // Smoothed grid-center map: its differences give the local surface slope,
  // so neighbor profiles are compared along the surface instead of at a
  // constant depth, which would flatten the peak on slanted geometry.
  ImageF centers(v.height, v.width);
  const int mid = v.depth / 2;
  for (int y = 0; y < v.height; ++y)
    for (int x = 0; x < v.width; ++x)
      centers(y, x) = hyps.at(y, x, mid);
  ImageF smoothed(v.height, v.width);
  for (int y = 0; y < v.height; ++y) {
    for (int x = 0; x < v.width; ++x) {
      double acc = 0.0;
      int n = 0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = std::clamp(y + dy, 0, v.height - 1);
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = std::clamp(x + dx, 0, v.width - 1);
          acc += centers(yy, xx);
          ++n;
        }
      }
      smoothed(y, x) = static_cast<float>(acc / n);
    }
  }

  Volume out(v.height, v.width, v.depth);
  for (int y = 0; y < v.height; ++y) {
    for (int x = 0; x < v.width; ++x) {
      for (int j = 0; j < v.depth; ++j) {
        if (!v.valid_at(y, x, j)) continue;
        double acc = 0.0, support = 0.0;
        for (int dj = -rd; dj <= rd; ++dj) {
          const double d = hyps.at(y, x, j) + dj * interval;
          for (int dy = -r; dy <= r; ++dy) {
            const int yy = std::clamp(y + dy, 0, v.height - 1);
            for (int dx = -r; dx <= r; ++dx) {
              const int xx = std::clamp(x + dx, 0, v.width - 1);
              const double ds = d + smoothed(yy, xx) - smoothed(y, x);
              const double g = std::clamp((ds - hyps.at(yy, xx, 0)) / interval, 0.0,
                                          v.depth - 1.000001);
              const int j0 = static_cast<int>(std::floor(g));
              const double a = g - j0;
              if (!v.valid_at(yy, xx, j0) || !v.valid_at(yy, xx, j0 + 1)) continue;
              acc += (1.0 - a) * v.at(yy, xx, j0) + a * v.at(yy, xx, j0 + 1);
              support += 1.0;
            }
          }
        }
        if (support > 0.0) {
          out.at(y, x, j) = static_cast<float>(acc / support);
          out.valid_at(y, x, j) = 1;
        }
      }
    }
  }
  return out;
}

}  // namespace

Volume regularize_cost(const Volume& volume) {
  return masked_box_filter_wide(masked_box_filter_wide(volume, 6), 6);
}

Volume regularize_cost(const Volume& volume, const DepthHypotheses& hyps,
                       double interval) {
  return depth_aligned_box_filter(volume, hyps, interval, 6);
}

Volume sharpen_profile(const Volume& volume, double gain) {
  Volume out = volume;
  for (int y = 0; y < volume.height; ++y) {
    for (int x = 0; x < volume.width; ++x) {
      double sum = 0.0, sum2 = 0.0;
      int n = 0;
      for (int j = 0; j < volume.depth; ++j) {
        if (!volume.valid_at(y, x, j)) continue;
        const double v = volume.at(y, x, j);
        sum += v;
        sum2 += v * v;
        ++n;
      }
      if (n == 0) continue;
      const double mean = sum / n;
      const double sd = std::sqrt(std::max(0.0, sum2 / n - mean * mean));
      const double scale = gain / (sd + 1e-6);
      for (int j = 0; j < volume.depth; ++j)
        if (volume.valid_at(y, x, j))
          out.at(y, x, j) = static_cast<float>((volume.at(y, x, j) - mean) * scale);
    }
  }
  return out;
}

RegressionResult softmax_depth(const Volume& volume, const DepthHypotheses& hyps,
                               DepthMode mode) {
  if (volume.height != hyps.height || volume.width != hyps.width ||
      volume.depth != hyps.count)
    throw std::invalid_argument("softmax_depth: volume/hypothesis shape mismatch");

  RegressionResult out;
  out.probs.probs = Volume(volume.height, volume.width, volume.depth);
  out.estimate.depth = ImageF::Zero(volume.height, volume.width);
  out.estimate.confidence = ImageF::Zero(volume.height, volume.width);
  out.estimate.valid = MaskImage::Zero(volume.height, volume.width);

  Volume& probs = out.probs.probs;
  for (int y = 0; y < volume.height; ++y) {
    for (int x = 0; x < volume.width; ++x) {
      double max_val = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < volume.depth; ++j)
        if (volume.valid_at(y, x, j))
          max_val = std::max<double>(max_val, volume.at(y, x, j));

      if (!std::isfinite(max_val)) {
        // No valid cell: uniform distribution, pixel marked invalid.
        for (int j = 0; j < volume.depth; ++j) {
          probs.at(y, x, j) = 1.0f / volume.depth;
          probs.valid_at(y, x, j) = 1;
        }
        continue;
      }

      double z = 0.0;
      for (int j = 0; j < volume.depth; ++j)
        if (volume.valid_at(y, x, j)) z += std::exp(volume.at(y, x, j) - max_val);
      double expect = 0.0;
      int argmax = -1;
      double best = -1.0;
      for (int j = 0; j < volume.depth; ++j) {
        if (!volume.valid_at(y, x, j)) continue;
        const double p = std::exp(volume.at(y, x, j) - max_val) / z;
        probs.at(y, x, j) = static_cast<float>(p);
        probs.valid_at(y, x, j) = 1;
        expect += p * hyps.at(y, x, j);
        if (p > best) {
          best = p;
          argmax = j;
        }
      }
      out.estimate.depth(y, x) = mode == DepthMode::soft_argmax
                                     ? static_cast<float>(expect)
                                     : hyps.at(y, x, argmax);
      out.estimate.valid(y, x) = 1;
    }
  }
  return out;
}

ImageF confidence_map(const ProbabilityVolume& pv) {
  const Volume& p = pv.probs;
  ImageF conf = ImageF::Zero(p.height, p.width);
  const int window = std::min(4, p.depth);
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      int argmax = 0;
      float best = -1.0f;
      for (int j = 0; j < p.depth; ++j) {
        if (p.at(y, x, j) > best) {
          best = p.at(y, x, j);
          argmax = j;
        }
      }
      const int start = std::clamp(argmax - 1, 0, p.depth - window);
      float acc = 0.0f;
      for (int j = start; j < start + window; ++j) acc += p.at(y, x, j);
      conf(y, x) = std::min(acc, 1.0f);
    }
  }
  return conf;
}

ImageF upsample_depth(const DepthEstimate& est, int out_height, int out_width,
                      float fill) {
  const int h = est.height(), w = est.width();
  ImageF src = est.depth;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!est.valid(y, x)) src(y, x) = fill;

  ImageF out(out_height, out_width);
  const double sy = static_cast<double>(h) / out_height;
  const double sx = static_cast<double>(w) / out_width;
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const double u = std::clamp((x + 0.5) * sx - 0.5, 0.0, w - 1.0);
      const double v = std::clamp((y + 0.5) * sy - 0.5, 0.0, h - 1.0);
      out(y, x) = bilinear_sample(src, {u, v}).value;
    }
  }
  return out;
}

CascadeResult run_cascade(const std::vector<ImageF>& images,
                          const std::vector<Camera>& cameras, double depth_min,
                          const CascadeConfig& config,
                          const std::optional<PadSpec>& pad) {
  if (images.size() < 2)
    throw std::invalid_argument("run_cascade: need a reference and at least one source");
  if (images.size() != cameras.size())
    throw std::invalid_argument("run_cascade: images/cameras mismatch");
  for (const StageConfig& st : config.stages)
    if (!(st.interval > 0.0))
      throw std::invalid_argument("run_cascade: degenerate depth interval");

  const int n_src = static_cast<int>(images.size()) - 1;
  CascadeResult result;
  ImageF prev_depth;  // previous-stage estimate at previous resolution

  for (size_t s = 0; s < config.stages.size(); ++s) {
    const StageConfig& st = config.stages[s];
    StageResult stage;

    std::vector<FeatureMap> feats;
    feats.reserve(images.size());
    for (const ImageF& img : images)
      feats.push_back(extract_features(img, static_cast<int>(s), st.scale));

    std::vector<Camera> cams;
    cams.reserve(cameras.size());
    for (const Camera& c : cameras) cams.push_back(c.scaled(st.scale));

    const int sh = feats[0].height(), sw = feats[0].width();
    if (s == 0) {
      stage.hypotheses =
          sample_hypotheses_global(sh, sw, depth_min, st.interval, st.hypothesis_count);
    } else {
      const StageConfig& st0 = config.stages[0];
      const float fill = static_cast<float>(
          depth_min + (st0.hypothesis_count - 1) / 2.0 * st0.interval);
      DepthEstimate prev = result.stages.back().estimate;
      ImageF seeded = upsample_depth(prev, sh, sw, fill);
      stage.hypotheses =
          sample_hypotheses_refined(seeded, st.hypothesis_count, st.interval);
    }

    stage.raw_pairwise.reserve(n_src);
    for (int i = 0; i < n_src; ++i)
      stage.raw_pairwise.push_back(pairwise_cost(feats[0], feats[i + 1], cams[0],
                                                 cams[i + 1], stage.hypotheses, i));

    if (config.aggregation.kind == AggregationKind::late_preserved) {
      std::vector<PairwiseCostVolume> prereg;
      prereg.reserve(n_src + (pad ? pad->copies : 0));
      for (const auto& v : stage.raw_pairwise) prereg.push_back(pre_regularize(v));
      if (pad)
        for (int c = 0; c < pad->copies; ++c) prereg.push_back(prereg[pad->source_pos]);
      ViewPreservedCost cvp = assemble_view_preserved(prereg);
      if (config.shuffle_seed)
        cvp = shuffle_views(cvp, *config.shuffle_seed + 0x9e3779b97f4a7c15ull * s);
      stage.aggregated = reduce_views(cvp, config.aggregation.reducer);
    } else {
      std::vector<PairwiseCostVolume> inputs = stage.raw_pairwise;
      if (pad)
        for (int c = 0; c < pad->copies; ++c) inputs.push_back(inputs[pad->source_pos]);
      if (config.aggregation.kind == AggregationKind::early_variance) {
        Volume var = early_variance(inputs);
        // Variance is a dissimilarity; negate so softmax peaks at agreement.
        for (float& v : var.values) v = -v;
        stage.aggregated = var;
      } else {
        stage.aggregated = early_weighted(inputs, compute_view_weights(inputs));
      }
    }

    // Stage 0 shares one hypothesis grid across pixels, so plain index-space
    // smoothing is already depth-aligned there; refined stages need the
    // per-pixel grid offsets taken into account.
    stage.regularized =
        s == 0 ? regularize_cost(stage.aggregated)
               : regularize_cost(stage.aggregated, stage.hypotheses, st.interval);
    const DepthMode mode =
        s + 1 == config.stages.size() ? DepthMode::wta : DepthMode::soft_argmax;
    const Volume sharpened =
        sharpen_profile(stage.regularized, config.softmax_sharpness);
    RegressionResult reg = softmax_depth(sharpened, stage.hypotheses, mode);
    stage.probs = std::move(reg.probs);
    stage.estimate = std::move(reg.estimate);
    stage.estimate.confidence = confidence_map(stage.probs);

    result.stages.push_back(std::move(stage));
  }
  return result;
}

}  // namespace lamvs
