#include "lamvs/config.hpp"

#include <fstream>
#include <sstream>

namespace lamvs {

namespace {

std::string join_stages(const std::vector<StageConfig>& stages,
                        double StageConfig::* field) {
  std::ostringstream out;
  out.precision(17);
  for (size_t i = 0; i < stages.size(); ++i)
    out << stages[i].*field << (i + 1 == stages.size() ? "" : ",");
  return out.str();
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> e;
  std::ostringstream counts;
  for (size_t i = 0; i < cascade.stages.size(); ++i)
    counts << cascade.stages[i].hypothesis_count
           << (i + 1 == cascade.stages.size() ? "" : ",");
  e.emplace_back("stage_scales", join_stages(cascade.stages, &StageConfig::scale));
  e.emplace_back("stage_hypotheses", counts.str());
  e.emplace_back("stage_intervals", join_stages(cascade.stages, &StageConfig::interval));
  e.emplace_back("strategy", to_string(cascade.aggregation));
  e.emplace_back("shuffle_seed", cascade.shuffle_seed
                                     ? std::to_string(*cascade.shuffle_seed)
                                     : std::string("none"));
  e.emplace_back("view_count", std::to_string(cascade.view_count));
  auto fmt = [](double v) {
    std::ostringstream o;
    o.precision(17);
    o << v;
    return o.str();
  };
  e.emplace_back("softmax_sharpness", fmt(cascade.softmax_sharpness));
  e.emplace_back("conf_threshold", fmt(filter.conf_threshold));
  e.emplace_back("reproj_px_threshold", fmt(filter.reproj_px_threshold));
  e.emplace_back("abs_depth_threshold", fmt(filter.abs_depth_threshold));
  std::ostringstream wts;
  wts.precision(17);
  for (size_t i = 0; i < filter.dyn_view_weights.size(); ++i)
    wts << filter.dyn_view_weights[i] << (i + 1 == filter.dyn_view_weights.size() ? "" : ",");
  e.emplace_back("dyn_view_weights", wts.str());
  e.emplace_back("dyn_score_threshold", fmt(filter.dyn_score_threshold));
  e.emplace_back("depth_criterion",
                 filter.criterion == FilterConfig::DepthCriterion::absolute
                     ? "absolute"
                     : "relative");
  e.emplace_back("rel_depth_threshold", fmt(filter.rel_depth_threshold));
  e.emplace_back("threads", std::to_string(threads));
  // The confidence definition (4-bin window around the argmax) is an
  // engine convention, not a dataset-given quantity.
  e.emplace_back("confidence_definition", "sum_4_bins_around_argmax");
  return e;
}

void write_config_file(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config: " + path);
  out << "lamvs_config 1\n";
  for (const auto& [k, v] : cfg.echo())
    if (k != "confidence_definition") out << k << " " << v << "\n";
}

RunConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "lamvs_config" || version != 1)
    throw std::runtime_error("config: unsupported format/version: " + path);
  RunConfig cfg;
  std::string key, value;
  std::string strategy_kind = "late_preserved", strategy_reducer = "best_peak";
  while (in >> key >> value) {
    if (key == "stage_scales") {
      const auto vals = split_doubles(value);
      cfg.cascade.stages.resize(vals.size());
      for (size_t i = 0; i < vals.size(); ++i) cfg.cascade.stages[i].scale = vals[i];
    } else if (key == "stage_hypotheses") {
      const auto vals = split_doubles(value);
      if (vals.size() != cfg.cascade.stages.size())
        throw std::runtime_error("config: stage list length mismatch");
      for (size_t i = 0; i < vals.size(); ++i)
        cfg.cascade.stages[i].hypothesis_count = static_cast<int>(vals[i]);
    } else if (key == "stage_intervals") {
      const auto vals = split_doubles(value);
      if (vals.size() != cfg.cascade.stages.size())
        throw std::runtime_error("config: stage list length mismatch");
      for (size_t i = 0; i < vals.size(); ++i)
        cfg.cascade.stages[i].interval = vals[i];
    } else if (key == "strategy") {
      const size_t slash = value.find('/');
      strategy_kind = value.substr(0, slash);
      strategy_reducer = slash == std::string::npos ? "best_peak" : value.substr(slash + 1);
    } else if (key == "shuffle_seed") {
      if (value == "none")
        cfg.cascade.shuffle_seed.reset();
      else
        cfg.cascade.shuffle_seed = std::stoull(value);
    } else if (key == "view_count") {
      cfg.cascade.view_count = std::stoi(value);
    } else if (key == "softmax_sharpness") {
      cfg.cascade.softmax_sharpness = std::stod(value);
    } else if (key == "conf_threshold") {
      cfg.filter.conf_threshold = std::stod(value);
    } else if (key == "reproj_px_threshold") {
      cfg.filter.reproj_px_threshold = std::stod(value);
    } else if (key == "abs_depth_threshold") {
      cfg.filter.abs_depth_threshold = std::stod(value);
    } else if (key == "dyn_view_weights") {
      const auto vals = split_doubles(value);
      if (vals.size() != 4) throw std::runtime_error("config: need 4 tier weights");
      for (size_t i = 0; i < 4; ++i) cfg.filter.dyn_view_weights[i] = vals[i];
    } else if (key == "dyn_score_threshold") {
      cfg.filter.dyn_score_threshold = std::stod(value);
    } else if (key == "depth_criterion") {
      cfg.filter.criterion = value == "relative"
                                 ? FilterConfig::DepthCriterion::relative
                                 : FilterConfig::DepthCriterion::absolute;
    } else if (key == "rel_depth_threshold") {
      cfg.filter.rel_depth_threshold = std::stod(value);
    } else if (key == "threads") {
      cfg.threads = std::stoi(value);
    } else {
      throw std::runtime_error("config: unknown key '" + key + "'");
    }
  }
  cfg.cascade.aggregation = parse_strategy(strategy_kind, strategy_reducer);
  return cfg;
}

void write_manifest(const std::string& path, const RunConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << "lamvs_manifest 1\n";
  for (const auto& [k, v] : cfg.echo()) out << k << " " << v << "\n";
  for (const auto& [k, v] : extra) out << k << " " << v << "\n";
}

}  // namespace lamvs
