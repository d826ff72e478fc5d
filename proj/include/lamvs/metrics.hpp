#pragma once

#include <string>
#include <utility>
#include <vector>

#include "lamvs/cost_volume.hpp"
#include "lamvs/fusion.hpp"
#include "lamvs/pipeline.hpp"
#include "lamvs/scene.hpp"

namespace lamvs {

struct PreservationResult {
  bool defined = false;
  double ratio = 0.0;
  long informative_pixels = 0;
};

// Step 1: pixels where any raw pairwise cost peaks at the ground-truth
// hypothesis bin (nearest bin, ties to the lower index). Step 2: fraction
// of those whose final depth lies within half an interval of the bin center.
PreservationResult preservation_ratio(
    const std::vector<PairwiseCostVolume>& pairwise_costs,
    const DepthEstimate& final_depth, const ImageF& gt_depth,
    const DepthHypotheses& hyps);

struct AccuracyResult {
  bool defined = false;
  double fraction = 0.0;
};

AccuracyResult depth_accuracy(const DepthEstimate& pred, const ImageF& gt,
                              double threshold);

struct CloudMetrics {
  double accuracy = 0.0;      // mean capped distance, predicted -> GT
  double completeness = 0.0;  // mean capped distance, GT -> predicted
  double overall = 0.0;
};

CloudMetrics cloud_metrics(const std::vector<Vec3>& pred,
                           const std::vector<Vec3>& gt, double dist_cap);

// Single-run report; serializes to a versioned key=value document.
struct MetricsReport {
  std::string strategy;
  PreservationResult preservation_volume;  // WTA on the aggregated volume
  PreservationResult preservation_final;
  AccuracyResult accuracy;
  bool cloud_defined = false;
  CloudMetrics cloud;
  double runtime_sec = 0.0;
  std::vector<std::pair<std::string, std::string>> config_echo;
};

void write_report(const std::string& path, const MetricsReport& report);
MetricsReport read_report(const std::string& path);

struct CompareRow {
  int scene = 0;
  std::string strategy;
  PreservationResult preservation_volume;
  PreservationResult preservation_final;
  AccuracyResult accuracy;
  double runtime_sec = 0.0;
};

// Runs the full pipeline per strategy per scene and evaluates the
// preservation ratio (on the aggregated volume's WTA and on the final
// depth) plus depth accuracy at 2x the finest interval.
std::vector<CompareRow> compare_strategies(
    const std::vector<std::pair<SceneDefinition, CameraRig>>& scenes,
    const std::vector<AggregationStrategy>& strategies,
    const CascadeConfig& base_config, double depth_min);

void write_compare_csv(const std::string& path,
                       const std::vector<CompareRow>& rows);

// Aggregates rows of one strategy: informative-pixel-weighted preservation
// ratios and mean depth accuracy.
struct StrategySummary {
  std::string strategy;
  double preservation_volume = 0.0;
  double preservation_final = 0.0;
  double depth_accuracy = 0.0;
  long informative_pixels = 0;
};

std::vector<StrategySummary> summarize_compare(const std::vector<CompareRow>& rows);

}  // namespace lamvs
