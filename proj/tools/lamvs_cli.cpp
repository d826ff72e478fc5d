#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lamvs/config.hpp"
#include "lamvs/flex_views.hpp"
#include "lamvs/io.hpp"
#include "lamvs/metrics.hpp"
#include "lamvs/parallel.hpp"
#include "lamvs/scene.hpp"

namespace fs = std::filesystem;
using namespace lamvs;

namespace {

struct SceneData {
  SceneDefinition scene;
  CameraRig rig;
  std::vector<Camera> cameras;
  std::vector<ImageF> images;
  std::vector<ImageF> gt_depths;
};

SceneData load_and_render(const std::string& scene_path) {
  SceneData d;
  std::tie(d.scene, d.rig) = read_scene_file(scene_path);
  d.cameras = d.rig.cameras();
  for (const Camera& cam : d.cameras) {
    RenderedView rv = render_view(d.scene, cam);
    d.images.push_back(std::move(rv.image));
    d.gt_depths.push_back(std::move(rv.gt_depth));
  }
  return d;
}

std::string two_digits(int v) {
  std::ostringstream out;
  if (v < 10) out << '0';
  out << v;
  return out.str();
}

// FilterConfig CLI flags, shared by `fuse`. The bound values are staged in
// `staged`; flags the user actually passed are copied over the config-file
// values afterwards.
struct FilterFlags {
  FilterConfig staged;
  std::string criterion;
  std::vector<double> weights;
  CLI::Option* conf = nullptr;
  CLI::Option* reproj = nullptr;
  CLI::Option* abs_depth = nullptr;
  CLI::Option* dyn_weights = nullptr;
  CLI::Option* dyn_score = nullptr;
  CLI::Option* crit = nullptr;
  CLI::Option* rel_depth = nullptr;

  void add_to(CLI::App* cmd) {
    conf = cmd->add_option("--conf-threshold", staged.conf_threshold,
                           "photometric confidence threshold in [0,1]");
    reproj = cmd->add_option("--reproj-px-threshold", staged.reproj_px_threshold,
                             "tier-1 reprojection error threshold in pixels");
    abs_depth = cmd->add_option("--abs-depth-threshold", staged.abs_depth_threshold,
                                "tier-1 absolute depth difference threshold");
    dyn_weights = cmd->add_option("--dyn-view-weights", weights,
                                  "four per-tier consistency weights")
                      ->expected(4);
    dyn_score = cmd->add_option("--dyn-score-threshold", staged.dyn_score_threshold,
                                "minimal dynamic consistency score");
    crit = cmd->add_option("--criterion", criterion,
                           "depth consistency criterion: absolute or relative")
               ->check(CLI::IsMember({"absolute", "relative"}));
    rel_depth = cmd->add_option("--rel-depth-threshold", staged.rel_depth_threshold,
                                "tier-1 relative depth threshold");
  }

  void apply_to(FilterConfig& out) const {
    if (conf->count()) out.conf_threshold = staged.conf_threshold;
    if (reproj->count()) out.reproj_px_threshold = staged.reproj_px_threshold;
    if (abs_depth->count()) out.abs_depth_threshold = staged.abs_depth_threshold;
    if (dyn_weights->count())
      for (int i = 0; i < 4; ++i) out.dyn_view_weights[i] = weights[i];
    if (dyn_score->count()) out.dyn_score_threshold = staged.dyn_score_threshold;
    if (crit->count())
      out.criterion = criterion == "relative"
                          ? FilterConfig::DepthCriterion::relative
                          : FilterConfig::DepthCriterion::absolute;
    if (rel_depth->count()) out.rel_depth_threshold = staged.rel_depth_threshold;
  }
};

std::vector<Vec3> anchor_points(const SceneDefinition& scene) {
  std::vector<Vec3> anchors;
  for (const SurfacePoint& p : sample_gt_cloud(scene, 1e-5))
    anchors.push_back(p.position);
  if (anchors.empty()) anchors.push_back(Vec3::Zero());
  return anchors;
}

int run_synth(const std::string& scene_path, const std::string& out_dir,
              double depth_min_flag, double gt_density) {
  const SceneData d = load_and_render(scene_path);
  fs::create_directories(out_dir);
  const double depth_min =
      depth_min_flag > 0.0 ? depth_min_flag : d.rig.radius - 75.0;
  for (size_t v = 0; v < d.cameras.size(); ++v) {
    const std::string id = two_digits(static_cast<int>(v));
    write_pgm(out_dir + "/view_" + id + ".pgm", d.images[v]);
    write_pfm(out_dir + "/gt_depth_" + id + ".pfm", d.gt_depths[v]);
    write_camera_file(out_dir + "/cam_" + id + ".txt", d.cameras[v], depth_min,
                      4.0);
  }
  if (gt_density > 0.0) {
    FusedCloud cloud;
    for (const SurfacePoint& p : sample_gt_cloud(d.scene, gt_density)) {
      CloudPoint pt;
      pt.position = p.position;
      pt.r = pt.g = pt.b = 255;
      cloud.points.push_back(pt);
    }
    write_ply(out_dir + "/gt_cloud.ply", cloud);
  }
  std::cout << "wrote " << d.cameras.size() << " views to " << out_dir << "\n";
  return 0;
}

int run_depth(const std::string& scene_path, const std::string& out_dir,
              RunConfig cfg, int views, double depth_min_flag) {
  SceneData d = load_and_render(scene_path);
  if (views > 0) {
    if (views < 2 || views > static_cast<int>(d.cameras.size()))
      throw std::invalid_argument("--views must be in [2, rig view count]");
    d.cameras.resize(views);
    d.images.resize(views);
  }
  const double depth_min =
      depth_min_flag > 0.0 ? depth_min_flag : d.rig.radius - 75.0;

  set_worker_count(cfg.threads);
  const auto t0 = std::chrono::steady_clock::now();
  const FlexibleRunResult res = run_flexible(d.images, d.cameras, depth_min,
                                             cfg.cascade, anchor_points(d.scene));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  fs::create_directories(out_dir);
  write_pfm(out_dir + "/depth.pfm", res.fused.depth);
  write_pfm(out_dir + "/confidence.pfm", res.fused.confidence);
  write_pfm(out_dir + "/gt_depth.pfm", d.gt_depths[0]);

  std::vector<std::pair<std::string, std::string>> extra;
  extra.emplace_back("command", "depth");
  extra.emplace_back("scene_file", scene_path);
  extra.emplace_back("scene_seed", std::to_string(d.scene.seed));
  extra.emplace_back("depth_min", std::to_string(depth_min));
  extra.emplace_back("testing_views", std::to_string(d.cameras.size()));
  extra.emplace_back("runtime_sec", std::to_string(secs));
  if (!res.plan.iterations.empty()) {
    std::ostringstream plan;
    for (size_t i = 0; i < res.plan.iterations.size(); ++i) {
      if (i) plan << ";";
      for (size_t k = 0; k < res.plan.iterations[i].size(); ++k)
        plan << (k ? "," : "") << res.plan.iterations[i][k];
    }
    extra.emplace_back("iteration_plan", plan.str());
  }
  if (!res.scores.empty()) {
    std::ostringstream sc;
    sc.precision(17);
    for (size_t i = 0; i < res.scores.size(); ++i)
      sc << (i ? "," : "") << res.scores[i];
    extra.emplace_back("usefulness_scores", sc.str());
  }
  write_manifest(out_dir + "/manifest.txt", cfg, extra);
  std::cout << "depth map written to " << out_dir << " (" << secs << " s)\n";
  return 0;
}

int run_fuse(const std::string& scene_path, const std::string& out_dir,
             RunConfig cfg, double depth_min_flag, bool ascii) {
  SceneData d = load_and_render(scene_path);
  const double depth_min =
      depth_min_flag > 0.0 ? depth_min_flag : d.rig.radius - 75.0;
  set_worker_count(cfg.threads);

  const size_t n = d.cameras.size();
  std::vector<DepthEstimate> estimates(n);
  for (size_t v = 0; v < n; ++v) {
    std::vector<ImageF> imgs{d.images[v]};
    std::vector<Camera> cams{d.cameras[v]};
    for (size_t s = 0; s < n; ++s) {
      if (s == v) continue;
      imgs.push_back(d.images[s]);
      cams.push_back(d.cameras[s]);
    }
    estimates[v] =
        run_cascade(imgs, cams, depth_min, cfg.cascade).final_estimate();
  }

  std::vector<MaskImage> masks(n);
  for (size_t v = 0; v < n; ++v) {
    std::vector<DepthEstimate> src_ests;
    std::vector<Camera> src_cams;
    for (size_t s = 0; s < n; ++s) {
      if (s == v) continue;
      src_ests.push_back(estimates[s]);
      src_cams.push_back(d.cameras[s]);
    }
    const PhotometricResult ph = photometric_filter(
        estimates[v], src_ests, d.cameras[v], src_cams, cfg.filter);
    const GeometricResult ge = geometric_consistency(
        estimates[v], src_ests, d.cameras[v], src_cams, cfg.filter);
    MaskImage m(estimates[v].height(), estimates[v].width());
    for (int y = 0; y < m.rows(); ++y)
      for (int x = 0; x < m.cols(); ++x)
        m(y, x) = ph.mask(y, x) && ge.mask(y, x);
    masks[v] = std::move(m);
  }

  const FusedCloud cloud =
      fuse_point_cloud(estimates, masks, d.cameras, d.images, cfg.filter);
  fs::create_directories(out_dir);
  write_ply(out_dir + "/cloud.ply", cloud, ascii);

  std::vector<std::pair<std::string, std::string>> extra;
  extra.emplace_back("command", "fuse");
  extra.emplace_back("scene_file", scene_path);
  extra.emplace_back("depth_min", std::to_string(depth_min));
  extra.emplace_back("point_count", std::to_string(cloud.points.size()));
  extra.emplace_back("ply_format", ascii ? "ascii" : "binary_little_endian");
  write_manifest(out_dir + "/manifest.txt", cfg, extra);
  std::cout << "fused " << cloud.points.size() << " points to " << out_dir
            << "/cloud.ply\n";
  return 0;
}

int run_eval(const std::string& pred_path, const std::string& gt_path,
             double threshold, const std::string& pred_cloud_path,
             const std::string& gt_cloud_path, double dist_cap,
             const std::string& report_path) {
  MetricsReport report;
  report.strategy = "eval";
  if (!pred_path.empty()) {
    const ImageF pred = read_pfm(pred_path);
    const ImageF gt = read_pfm(gt_path);
    DepthEstimate est;
    est.depth = pred;
    est.confidence = ImageF::Zero(pred.rows(), pred.cols());
    est.valid = MaskImage::Ones(pred.rows(), pred.cols());
    for (int y = 0; y < pred.rows(); ++y)
      for (int x = 0; x < pred.cols(); ++x)
        if (!(pred(y, x) > 0.0f)) est.valid(y, x) = 0;
    report.accuracy = depth_accuracy(est, gt, threshold);
    std::cout << "depth_accuracy ";
    if (report.accuracy.defined)
      std::cout << report.accuracy.fraction << "\n";
    else
      std::cout << "undefined\n";
  }
  if (!pred_cloud_path.empty()) {
    std::vector<Vec3> pred_pts, gt_pts;
    for (const CloudPoint& p : read_ply(pred_cloud_path).points)
      pred_pts.push_back(p.position);
    for (const CloudPoint& p : read_ply(gt_cloud_path).points)
      gt_pts.push_back(p.position);
    report.cloud = cloud_metrics(pred_pts, gt_pts, dist_cap);
    report.cloud_defined = true;
    std::cout << "cloud_accuracy " << report.cloud.accuracy
              << "\ncloud_completeness " << report.cloud.completeness
              << "\ncloud_overall " << report.cloud.overall << "\n";
  }
  if (!report_path.empty()) write_report(report_path, report);
  return 0;
}

int run_compare(const std::vector<std::string>& scene_paths,
                const std::vector<std::string>& strategy_names,
                const RunConfig& cfg, double depth_min_flag,
                const std::string& csv_path) {
  std::vector<std::pair<SceneDefinition, CameraRig>> scenes;
  for (const std::string& path : scene_paths)
    scenes.push_back(read_scene_file(path));

  std::vector<AggregationStrategy> strategies;
  for (const std::string& name : strategy_names) {
    const size_t slash = name.find('/');
    strategies.push_back(parse_strategy(
        name.substr(0, slash),
        slash == std::string::npos ? "best_peak" : name.substr(slash + 1)));
  }

  set_worker_count(cfg.threads);
  const double depth_min = depth_min_flag > 0.0
                               ? depth_min_flag
                               : scenes.front().second.radius - 75.0;
  const std::vector<CompareRow> rows =
      compare_strategies(scenes, strategies, cfg.cascade, depth_min);
  if (!csv_path.empty()) write_compare_csv(csv_path, rows);

  std::cout << "strategy preservation_volume preservation_final depth_accuracy\n";
  for (const StrategySummary& s : summarize_compare(rows)) {
    std::cout << s.strategy << " ";
    if (s.informative_pixels > 0)
      std::cout << s.preservation_volume << " " << s.preservation_final << " ";
    else
      std::cout << "undefined undefined ";
    std::cout << s.depth_accuracy << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plane-sweep multi-view stereo engine with late cost aggregation"};
  app.require_subcommand(1);

  std::string scene_path, out_dir = "out", config_path;
  std::string pred_path, gt_path, pred_cloud_path, gt_cloud_path, report_path;
  std::string strategy = "late_preserved", reducer = "best_peak";
  std::vector<std::string> scene_paths, strategy_names;
  double depth_min = 0.0, gt_density = 0.0, threshold = 1.0, dist_cap = 2.0;
  int views = 0, threads = 1;
  uint64_t shuffle_seed = 0;
  bool ascii = false;

  CLI::App* synth = app.add_subcommand("synth", "render a scene suite to disk");
  synth->add_option("--scene", scene_path, "scene definition file")->required();
  synth->add_option("--out", out_dir, "output directory");
  synth->add_option("--depth-min", depth_min, "depth range start for cam files");
  synth->add_option("--gt-cloud-density", gt_density,
                    "surface sample density for a ground-truth cloud");

  CLI::App* depth = app.add_subcommand("depth", "estimate a reference depth map");
  depth->add_option("--scene", scene_path, "scene definition file")->required();
  depth->add_option("--out", out_dir, "output directory");
  depth->add_option("--config", config_path, "run configuration file");
  depth->add_option("--views", views, "number of testing views (N')");
  depth->add_option("--strategy", strategy,
                    "aggregation kind: early_variance, early_weighted, "
                    "late_preserved");
  depth->add_option("--reducer", reducer,
                    "late-path reducer: mean, best_peak, entropy_weighted");
  CLI::Option* seed_opt =
      depth->add_option("--shuffle-seed", shuffle_seed, "view shuffle seed");
  depth->add_option("--threads", threads, "worker count");
  depth->add_option("--depth-min", depth_min, "depth range start");

  CLI::App* fuse = app.add_subcommand("fuse", "filter depth maps and fuse a cloud");
  fuse->add_option("--scene", scene_path, "scene definition file")->required();
  fuse->add_option("--out", out_dir, "output directory");
  fuse->add_option("--config", config_path, "run configuration file");
  fuse->add_option("--threads", threads, "worker count");
  fuse->add_option("--depth-min", depth_min, "depth range start");
  fuse->add_flag("--ascii", ascii, "write the PLY in ASCII");
  FilterFlags filter_flags;
  filter_flags.add_to(fuse);

  CLI::App* eval = app.add_subcommand("eval", "score predictions against GT");
  eval->add_option("--pred", pred_path, "predicted depth PFM");
  eval->add_option("--gt", gt_path, "ground-truth depth PFM");
  eval->add_option("--threshold", threshold, "depth accuracy threshold");
  eval->add_option("--pred-cloud", pred_cloud_path, "predicted cloud PLY");
  eval->add_option("--gt-cloud", gt_cloud_path, "ground-truth cloud PLY");
  eval->add_option("--dist-cap", dist_cap, "cloud distance cap");
  eval->add_option("--report", report_path, "write a metrics report here");

  CLI::App* compare = app.add_subcommand("compare", "strategy comparison table");
  compare->add_option("--scene", scene_paths, "scene definition files")
      ->required();
  compare->add_option("--strategies", strategy_names,
                      "strategy names, e.g. late_preserved/mean");
  compare->add_option("--out", report_path, "output CSV path");
  compare->add_option("--threads", threads, "worker count");
  compare->add_option("--depth-min", depth_min, "depth range start");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (*synth) return run_synth(scene_path, out_dir, depth_min, gt_density);

    RunConfig cfg;
    if (!config_path.empty()) cfg = read_config_file(config_path);
    cfg.threads = threads;

    if (*depth) {
      if (depth->count("--strategy") || depth->count("--reducer") ||
          config_path.empty())
        cfg.cascade.aggregation = parse_strategy(strategy, reducer);
      if (seed_opt->count()) cfg.cascade.shuffle_seed = shuffle_seed;
      return run_depth(scene_path, out_dir, cfg, views, depth_min);
    }
    if (*fuse) {
      // flags the user passed override the config-file values
      filter_flags.apply_to(cfg.filter);
      return run_fuse(scene_path, out_dir, cfg, depth_min, ascii);
    }
    if (*eval) {
      if (pred_path.empty() && pred_cloud_path.empty())
        throw std::invalid_argument("eval: need --pred and/or --pred-cloud");
      if (!pred_path.empty() && gt_path.empty())
        throw std::invalid_argument("eval: --pred requires --gt");
      if (!pred_cloud_path.empty() && gt_cloud_path.empty())
        throw std::invalid_argument("eval: --pred-cloud requires --gt-cloud");
      return run_eval(pred_path, gt_path, threshold, pred_cloud_path,
                      gt_cloud_path, dist_cap, report_path);
    }
    if (*compare) {
      if (strategy_names.empty())
        strategy_names = {"late_preserved/best_peak", "late_preserved/mean",
                          "late_preserved/entropy_weighted", "early_weighted",
                          "early_variance"};
      return run_compare(scene_paths, strategy_names, cfg, depth_min,
                         report_path);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
