#include "lamvs/aggregation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lamvs {

std::string to_string(const AggregationStrategy& s) {
  switch (s.kind) {
    case AggregationKind::early_variance:
      return "early_variance";
    case AggregationKind::early_weighted:
      return "early_weighted";
    case AggregationKind::late_preserved:
      switch (s.reducer) {
        case LateReducer::mean:
          return "late_preserved/mean";
        case LateReducer::best_peak:
          return "late_preserved/best_peak";
        case LateReducer::entropy_weighted:
          return "late_preserved/entropy_weighted";
      }
  }
  return "unknown";
}

AggregationStrategy parse_strategy(const std::string& kind,
                                   const std::string& reducer) {
  AggregationStrategy s;
  if (kind == "early_variance")
    s.kind = AggregationKind::early_variance;
  else if (kind == "early_weighted")
    s.kind = AggregationKind::early_weighted;
  else if (kind == "late_preserved")
    s.kind = AggregationKind::late_preserved;
  else
    throw std::invalid_argument("unknown aggregation strategy: " + kind);
  if (s.kind == AggregationKind::late_preserved) {
    if (reducer == "mean")
      s.reducer = LateReducer::mean;
    else if (reducer == "best_peak")
      s.reducer = LateReducer::best_peak;
    else if (reducer == "entropy_weighted")
      s.reducer = LateReducer::entropy_weighted;
    else
      throw std::invalid_argument("unknown late reducer: " + reducer);
  }
  return s;
}

namespace {

void check_shapes(const std::vector<PairwiseCostVolume>& volumes) {
  if (volumes.empty()) throw std::invalid_argument("aggregation: no volumes");
  for (const auto& v : volumes)
    if (!v.volume.same_shape(volumes.front().volume))
      throw std::invalid_argument("aggregation: volume shape mismatch");
}

}  // namespace

Volume early_variance(const std::vector<PairwiseCostVolume>& volumes) {
  check_shapes(volumes);
  const Volume& first = volumes.front().volume;
  Volume out(first.height, first.width, first.depth);
  for (size_t cell = 0; cell < out.values.size(); ++cell) {
    double sum = 0.0, sum2 = 0.0;
    int n = 0;
    for (const auto& v : volumes) {
      if (!v.volume.valid[cell]) continue;
      const double x = v.volume.values[cell];
      sum += x;
      sum2 += x * x;
      ++n;
    }
    if (n == 0) continue;
    const double mean = sum / n;
    out.values[cell] = static_cast<float>(std::max(0.0, sum2 / n - mean * mean));
    out.valid[cell] = 1;
  }
  return out;
}

double profile_entropy(const Volume& v, int y, int x) {
  double max_val = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  int n_valid = 0;
  for (int j = 0; j < v.depth; ++j)
    if (v.valid_at(y, x, j)) {
      max_val = std::max<double>(max_val, v.at(y, x, j));
      sum += v.at(y, x, j);
      ++n_valid;
    }
  if (!std::isfinite(max_val)) return std::numeric_limits<double>::infinity();
  // Invalid cells carry no evidence; scoring them at the profile mean keeps
  // the softmax over the full depth axis, so a profile observed on only a
  // few cells cannot look sharper than a fully observed one.
  const double fill = sum / n_valid;
  double z = 0.0;
  for (int j = 0; j < v.depth; ++j) {
    const double val = v.valid_at(y, x, j) ? v.at(y, x, j) : fill;
    z += std::exp(val - max_val);
  }
  double h = 0.0;
  for (int j = 0; j < v.depth; ++j) {
    const double val = v.valid_at(y, x, j) ? v.at(y, x, j) : fill;
    const double p = std::exp(val - max_val) / z;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

ViewWeights compute_view_weights(const std::vector<PairwiseCostVolume>& volumes) {
  check_shapes(volumes);
  if (volumes.size() < 2)
    throw std::invalid_argument("compute_view_weights: need at least 2 volumes");
  const Volume& first = volumes.front().volume;
  const int n = static_cast<int>(volumes.size());
  ViewWeights w;
  w.height = first.height;
  w.width = first.width;
  w.views = n;
  w.weights.assign(static_cast<size_t>(w.height) * w.width * n, 0.0f);
  w.degenerate = MaskImage::Zero(w.height, w.width);

  for (int y = 0; y < w.height; ++y) {
    for (int x = 0; x < w.width; ++x) {
      double total = 0.0;
      std::vector<double> conf(n, 0.0);
      for (int i = 0; i < n; ++i) {
        const Volume& v = volumes[i].volume;
        double max_val = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < v.depth; ++j)
          if (v.valid_at(y, x, j)) max_val = std::max<double>(max_val, v.at(y, x, j));
        if (!std::isfinite(max_val)) continue;  // all-invalid view: weight 0
        double z = 0.0;
        for (int j = 0; j < v.depth; ++j)
          if (v.valid_at(y, x, j)) z += std::exp(v.at(y, x, j) - max_val);
        conf[i] = 1.0 / z;  // max of the softmax
        total += conf[i];
      }
      if (total <= 0.0) {
        w.degenerate(y, x) = 1;
        for (int i = 0; i < n; ++i) w.at(y, x, i) = 1.0f / n;
      } else {
        for (int i = 0; i < n; ++i)
          w.at(y, x, i) = static_cast<float>(conf[i] / total);
      }
    }
  }
  return w;
}

Volume early_weighted(const std::vector<PairwiseCostVolume>& volumes,
                      const ViewWeights& weights) {
  check_shapes(volumes);
  const Volume& first = volumes.front().volume;
  if (weights.views != static_cast<int>(volumes.size()) ||
      weights.height != first.height || weights.width != first.width)
    throw std::invalid_argument("early_weighted: weight shape mismatch");
  Volume out(first.height, first.width, first.depth);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int j = 0; j < out.depth; ++j) {
        double acc = 0.0;
        bool any = false;
        for (int i = 0; i < weights.views; ++i) {
          const Volume& v = volumes[i].volume;
          if (!v.valid_at(y, x, j)) continue;
          acc += weights.at(y, x, i) * v.at(y, x, j);
          any = true;
        }
        if (!any) continue;
        out.at(y, x, j) = static_cast<float>(acc);
        out.valid_at(y, x, j) = 1;
      }
    }
  }
  return out;
}

Volume reduce_views(const ViewPreservedCost& cvp, LateReducer reducer) {
  if (cvp.channels.empty())
    throw std::invalid_argument("reduce_views: empty preserved cost");
  const Volume& first = cvp.channels.front();
  const int n = cvp.view_count();
  Volume out(first.height, first.width, first.depth);

  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      if (reducer == LateReducer::mean) {
        for (int j = 0; j < out.depth; ++j) {
          double acc = 0.0;
          int cnt = 0;
          for (int k = 0; k < n; ++k) {
            if (!cvp.channels[k].valid_at(y, x, j)) continue;
            acc += cvp.channels[k].at(y, x, j);
            ++cnt;
          }
          if (cnt == 0) continue;
          out.at(y, x, j) = static_cast<float>(acc / cnt);
          out.valid_at(y, x, j) = 1;
        }
      } else if (reducer == LateReducer::best_peak) {
        int best = -1;
        double best_entropy = std::numeric_limits<double>::infinity();
        for (int k = 0; k < n; ++k) {
          const double h = profile_entropy(cvp.channels[k], y, x);
          if (h < best_entropy) {
            best_entropy = h;
            best = k;
          }
        }
        if (best < 0) continue;  // all channels invalid: zero profile
        for (int j = 0; j < out.depth; ++j) {
          out.at(y, x, j) = cvp.channels[best].at(y, x, j);
          out.valid_at(y, x, j) = cvp.channels[best].valid_at(y, x, j);
        }
      } else {  // entropy_weighted
        std::vector<double> cw(n, 0.0);
        double total = 0.0;
        for (int k = 0; k < n; ++k) {
          const double h = profile_entropy(cvp.channels[k], y, x);
          if (!std::isfinite(h)) continue;
          cw[k] = std::exp(-h);
          total += cw[k];
        }
        if (total <= 0.0) continue;
        for (int j = 0; j < out.depth; ++j) {
          double acc = 0.0;
          bool any = false;
          for (int k = 0; k < n; ++k) {
            if (!cvp.channels[k].valid_at(y, x, j)) continue;
            acc += cw[k] / total * cvp.channels[k].at(y, x, j);
            any = true;
          }
          if (!any) continue;
          out.at(y, x, j) = static_cast<float>(acc);
          out.valid_at(y, x, j) = 1;
        }
      }
    }
  }
  return out;
}

}  // namespace lamvs
