#pragma once

#include <string>
#include <vector>

#include "lamvs/cost_volume.hpp"
#include "lamvs/types.hpp"

namespace lamvs {

enum class AggregationKind { early_variance, early_weighted, late_preserved };
enum class LateReducer { mean, best_peak, entropy_weighted };

struct AggregationStrategy {
  AggregationKind kind = AggregationKind::late_preserved;
  LateReducer reducer = LateReducer::best_peak;  // meaningful for late_preserved only
};

std::string to_string(const AggregationStrategy& s);
AggregationStrategy parse_strategy(const std::string& kind,
                                   const std::string& reducer);

// Per-pixel view weights on the simplex.
struct ViewWeights {
  int height = 0, width = 0, views = 0;
  std::vector<float> weights;
  MaskImage degenerate;  // pixels where every view was invalid

  float at(int y, int x, int i) const {
    return weights[(static_cast<size_t>(y) * width + x) * views + i];
  }
  float& at(int y, int x, int i) {
    return weights[(static_cast<size_t>(y) * width + x) * views + i];
  }
};

// Population variance across views, per cell; invalid cells are excluded
// from the statistics.
Volume early_variance(const std::vector<PairwiseCostVolume>& volumes);

// Surrogate weight module: confidence of a view at a pixel is the maximum
// of the softmax of its cost profile along depth; weights are the
// confidences normalized across views.
ViewWeights compute_view_weights(const std::vector<PairwiseCostVolume>& volumes);

Volume early_weighted(const std::vector<PairwiseCostVolume>& volumes,
                      const ViewWeights& weights);

// Late-path view reduction over the preserved cost.
Volume reduce_views(const ViewPreservedCost& cvp, LateReducer reducer);

// Shannon entropy (natural log) of the softmax of a cost profile over the
// full depth axis. Invalid cells are scored at the mean of the valid cells
// so partially observed profiles compare fairly with fully observed ones;
// infinity when no cell is valid.
double profile_entropy(const Volume& v, int y, int x);

}  // namespace lamvs
