#include "lamvs/metrics.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace lamvs {

namespace {

// Nearest hypothesis bin to gt, ties to the lower index.
int gt_bin(const DepthHypotheses& hyps, int y, int x, float gt) {
  int best = 0;
  double best_dist = std::abs(double(hyps.at(y, x, 0)) - gt);
  for (int j = 1; j < hyps.count; ++j) {
    const double dist = std::abs(double(hyps.at(y, x, j)) - gt);
    if (dist < best_dist) {
      best_dist = dist;
      best = j;
    }
  }
  return best;
}

int volume_argmax(const Volume& v, int y, int x) {
  int best = -1;
  float best_val = 0.0f;
  for (int j = 0; j < v.depth; ++j) {
    if (!v.valid_at(y, x, j)) continue;
    if (best < 0 || v.at(y, x, j) > best_val) {
      best_val = v.at(y, x, j);
      best = j;
    }
  }
  return best;
}

}  // namespace

PreservationResult preservation_ratio(
    const std::vector<PairwiseCostVolume>& pairwise_costs,
    const DepthEstimate& final_depth, const ImageF& gt_depth,
    const DepthHypotheses& hyps) {
  if (pairwise_costs.empty())
    throw std::invalid_argument("preservation_ratio: no pairwise costs");
  const int h = hyps.height, w = hyps.width;
  if (final_depth.height() != h || final_depth.width() != w ||
      gt_depth.rows() != h || gt_depth.cols() != w)
    throw std::invalid_argument("preservation_ratio: shape mismatch");

  long informative = 0, preserved = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float gt = gt_depth(y, x);
      if (!(gt > 0.0f)) continue;
      const int bin = gt_bin(hyps, y, x, gt);
      bool has_informative = false;
      for (const PairwiseCostVolume& v : pairwise_costs) {
        if (volume_argmax(v.volume, y, x) == bin) {
          has_informative = true;
          break;
        }
      }
      if (!has_informative) continue;
      ++informative;
      if (final_depth.valid(y, x) &&
          std::abs(final_depth.depth(y, x) - hyps.at(y, x, bin)) <=
              hyps.interval / 2.0)
        ++preserved;
    }
  }
  PreservationResult res;
  res.informative_pixels = informative;
  if (informative > 0) {
    res.defined = true;
    res.ratio = static_cast<double>(preserved) / informative;
  }
  return res;
}

AccuracyResult depth_accuracy(const DepthEstimate& pred, const ImageF& gt,
                              double threshold) {
  if (pred.height() != gt.rows() || pred.width() != gt.cols())
    throw std::invalid_argument("depth_accuracy: shape mismatch");
  long total = 0, within = 0;
  for (int y = 0; y < gt.rows(); ++y) {
    for (int x = 0; x < gt.cols(); ++x) {
      if (!(gt(y, x) > 0.0f)) continue;
      ++total;
      if (pred.valid(y, x) && std::abs(pred.depth(y, x) - gt(y, x)) <= threshold)
        ++within;
    }
  }
  AccuracyResult res;
  if (total > 0) {
    res.defined = true;
    res.fraction = static_cast<double>(within) / total;
  }
  return res;
}

namespace {

// Uniform hash grid for capped nearest-neighbor queries.
class PointGrid {
 public:
  PointGrid(const std::vector<Vec3>& points, double cell)
      : points_(points), cell_(cell) {
    for (size_t i = 0; i < points.size(); ++i)
      cells_[key(points[i])].push_back(static_cast<int>(i));
  }

  double nearest_distance(const Vec3& q, double cap) const {
    double best = cap;
    const Eigen::Vector3i c0 = cell_of(q);
    const int max_ring = static_cast<int>(std::ceil(cap / cell_)) + 1;
    for (int ring = 0; ring <= max_ring; ++ring) {
      if ((ring - 1) * cell_ > best) break;
      for (int dx = -ring; dx <= ring; ++dx) {
        for (int dy = -ring; dy <= ring; ++dy) {
          for (int dz = -ring; dz <= ring; ++dz) {
            if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring)
              continue;
            const auto it = cells_.find(pack(c0.x() + dx, c0.y() + dy, c0.z() + dz));
            if (it == cells_.end()) continue;
            for (int idx : it->second)
              best = std::min(best, (points_[idx] - q).norm());
          }
        }
      }
    }
    return best;
  }

 private:
  Eigen::Vector3i cell_of(const Vec3& p) const {
    return Eigen::Vector3i(static_cast<int>(std::floor(p.x() / cell_)),
                           static_cast<int>(std::floor(p.y() / cell_)),
                           static_cast<int>(std::floor(p.z() / cell_)));
  }
  static int64_t pack(int x, int y, int z) {
    return (static_cast<int64_t>(x) & 0x1fffff) |
           ((static_cast<int64_t>(y) & 0x1fffff) << 21) |
           ((static_cast<int64_t>(z) & 0x1fffff) << 42);
  }
  int64_t key(const Vec3& p) const {
    const Eigen::Vector3i c = cell_of(p);
    return pack(c.x(), c.y(), c.z());
  }

  const std::vector<Vec3>& points_;
  double cell_;
  std::unordered_map<int64_t, std::vector<int>> cells_;
};

double mean_capped_distance(const std::vector<Vec3>& from,
                            const std::vector<Vec3>& to, double cap) {
  const PointGrid grid(to, std::max(cap, 1e-9));
  double acc = 0.0;
  for (const Vec3& p : from) acc += grid.nearest_distance(p, cap);
  return acc / from.size();
}

}  // namespace

CloudMetrics cloud_metrics(const std::vector<Vec3>& pred,
                           const std::vector<Vec3>& gt, double dist_cap) {
  if (pred.empty() || gt.empty())
    throw std::invalid_argument("cloud_metrics: clouds must be non-empty");
  CloudMetrics m;
  m.accuracy = mean_capped_distance(pred, gt, dist_cap);
  m.completeness = mean_capped_distance(gt, pred, dist_cap);
  m.overall = 0.5 * (m.accuracy + m.completeness);
  return m;
}

void write_report(const std::string& path, const MetricsReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out.precision(17);
  out << "lamvs_report 1\n";
  out << "strategy " << r.strategy << "\n";
  out << "preservation_volume_defined " << r.preservation_volume.defined << "\n";
  out << "preservation_volume_ratio " << r.preservation_volume.ratio << "\n";
  out << "preservation_volume_informative " << r.preservation_volume.informative_pixels << "\n";
  out << "preservation_final_defined " << r.preservation_final.defined << "\n";
  out << "preservation_final_ratio " << r.preservation_final.ratio << "\n";
  out << "preservation_final_informative " << r.preservation_final.informative_pixels << "\n";
  out << "accuracy_defined " << r.accuracy.defined << "\n";
  out << "depth_accuracy " << r.accuracy.fraction << "\n";
  out << "cloud_defined " << r.cloud_defined << "\n";
  out << "cloud_accuracy " << r.cloud.accuracy << "\n";
  out << "cloud_completeness " << r.cloud.completeness << "\n";
  out << "cloud_overall " << r.cloud.overall << "\n";
  out << "runtime_sec " << r.runtime_sec << "\n";
  for (const auto& [k, v] : r.config_echo) out << "config." << k << " " << v << "\n";
}

MetricsReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report: " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "lamvs_report" || version != 1)
    throw std::runtime_error("report: unsupported format/version");
  MetricsReport r;
  std::string key;
  while (in >> key) {
    std::string value;
    std::getline(in, value);
    const size_t start = value.find_first_not_of(' ');
    value = start == std::string::npos ? "" : value.substr(start);
    if (key == "strategy") r.strategy = value;
    else if (key == "preservation_volume_defined") r.preservation_volume.defined = value == "1";
    else if (key == "preservation_volume_ratio") r.preservation_volume.ratio = std::stod(value);
    else if (key == "preservation_volume_informative") r.preservation_volume.informative_pixels = std::stol(value);
    else if (key == "preservation_final_defined") r.preservation_final.defined = value == "1";
    else if (key == "preservation_final_ratio") r.preservation_final.ratio = std::stod(value);
    else if (key == "preservation_final_informative") r.preservation_final.informative_pixels = std::stol(value);
    else if (key == "accuracy_defined") r.accuracy.defined = value == "1";
    else if (key == "depth_accuracy") r.accuracy.fraction = std::stod(value);
    else if (key == "cloud_defined") r.cloud_defined = value == "1";
    else if (key == "cloud_accuracy") r.cloud.accuracy = std::stod(value);
    else if (key == "cloud_completeness") r.cloud.completeness = std::stod(value);
    else if (key == "cloud_overall") r.cloud.overall = std::stod(value);
    else if (key == "runtime_sec") r.runtime_sec = std::stod(value);
    else if (key.rfind("config.", 0) == 0) r.config_echo.emplace_back(key.substr(7), value);
    else throw std::runtime_error("report: unknown key '" + key + "'");
  }
  return r;
}

std::vector<CompareRow> compare_strategies(
    const std::vector<std::pair<SceneDefinition, CameraRig>>& scenes,
    const std::vector<AggregationStrategy>& strategies,
    const CascadeConfig& base_config, double depth_min) {
  if (scenes.empty()) throw std::invalid_argument("compare_strategies: empty suite");
  std::vector<CompareRow> rows;
  for (size_t si = 0; si < scenes.size(); ++si) {
    const auto& [scene, rig] = scenes[si];
    const std::vector<Camera> cams = rig.cameras();
    std::vector<ImageF> images;
    ImageF ref_gt;
    for (size_t v = 0; v < cams.size(); ++v) {
      RenderedView view = render_view(scene, cams[v]);
      if (v == 0) ref_gt = view.gt_depth;
      images.push_back(std::move(view.image));
    }
    for (const AggregationStrategy& strat : strategies) {
      CascadeConfig cfg = base_config;
      cfg.aggregation = strat;
      const auto t0 = std::chrono::steady_clock::now();
      const CascadeResult run = run_cascade(images, cams, depth_min, cfg);
      const auto t1 = std::chrono::steady_clock::now();

      const StageResult& fine = run.stages.back();
      CompareRow row;
      row.scene = static_cast<int>(si);
      row.strategy = to_string(strat);
      row.runtime_sec = std::chrono::duration<double>(t1 - t0).count();

      RegressionResult vol_wta =
          softmax_depth(fine.aggregated, fine.hypotheses, DepthMode::wta);
      row.preservation_volume = preservation_ratio(
          fine.raw_pairwise, vol_wta.estimate, ref_gt, fine.hypotheses);
      row.preservation_final = preservation_ratio(
          fine.raw_pairwise, fine.estimate, ref_gt, fine.hypotheses);
      row.accuracy = depth_accuracy(fine.estimate, ref_gt,
                                    2.0 * base_config.stages.back().interval);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_compare_csv(const std::string& path,
                       const std::vector<CompareRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write csv: " + path);
  out.precision(17);
  out << "scene,strategy,preservation_volume,preservation_final,"
         "informative_pixels,depth_accuracy,runtime_sec\n";
  for (const CompareRow& r : rows) {
    out << r.scene << "," << r.strategy << ","
        << (r.preservation_volume.defined ? std::to_string(r.preservation_volume.ratio) : "undefined") << ","
        << (r.preservation_final.defined ? std::to_string(r.preservation_final.ratio) : "undefined") << ","
        << r.preservation_final.informative_pixels << ","
        << (r.accuracy.defined ? std::to_string(r.accuracy.fraction) : "undefined") << ","
        << r.runtime_sec << "\n";
  }
}

std::vector<StrategySummary> summarize_compare(const std::vector<CompareRow>& rows) {
  std::map<std::string, StrategySummary> acc;
  std::map<std::string, std::pair<double, long>> extras;  // accuracy sum, scene count
  for (const CompareRow& r : rows) {
    StrategySummary& s = acc[r.strategy];
    s.strategy = r.strategy;
    if (r.preservation_volume.defined)
      s.preservation_volume +=
          r.preservation_volume.ratio * r.preservation_volume.informative_pixels;
    if (r.preservation_final.defined) {
      s.preservation_final +=
          r.preservation_final.ratio * r.preservation_final.informative_pixels;
      s.informative_pixels += r.preservation_final.informative_pixels;
    }
    if (r.accuracy.defined) {
      extras[r.strategy].first += r.accuracy.fraction;
      extras[r.strategy].second += 1;
    }
  }
  std::vector<StrategySummary> out;
  for (auto& [name, s] : acc) {
    if (s.informative_pixels > 0) {
      s.preservation_volume /= s.informative_pixels;
      s.preservation_final /= s.informative_pixels;
    }
    const auto& [acc_sum, n] = extras[name];
    s.depth_accuracy = n > 0 ? acc_sum / n : 0.0;
    out.push_back(s);
  }
  return out;
}

}  // namespace lamvs
