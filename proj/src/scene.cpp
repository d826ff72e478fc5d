#include "lamvs/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lamvs {

namespace {

uint32_t mix32(uint32_t x) {
  x ^= x >> 16;
  x *= 0x7feb352dU;
  x ^= x >> 15;
  x *= 0x846ca68bU;
  x ^= x >> 16;
  return x;
}

uint32_t lattice_hash(int32_t ix, int32_t iy, uint32_t seed) {
  uint32_t h = seed;
  h = mix32(h ^ static_cast<uint32_t>(ix) * 0x9e3779b9U);
  h = mix32(h ^ static_cast<uint32_t>(iy) * 0x85ebca6bU);
  return h;
}

double lattice_value(int32_t ix, int32_t iy, uint32_t seed) {
  return lattice_hash(ix, iy, seed) * (1.0 / 4294967295.0);
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(double u, double v, uint32_t seed) {
  const double fu = std::floor(u), fv = std::floor(v);
  const int32_t iu = static_cast<int32_t>(fu), iv = static_cast<int32_t>(fv);
  const double tu = smoothstep(u - fu), tv = smoothstep(v - fv);
  const double a = lattice_value(iu, iv, seed);
  const double b = lattice_value(iu + 1, iv, seed);
  const double c = lattice_value(iu, iv + 1, seed);
  const double d = lattice_value(iu + 1, iv + 1, seed);
  return (1.0 - tv) * ((1.0 - tu) * a + tu * b) + tv * ((1.0 - tu) * c + tu * d);
}

}  // namespace

double texture_value(const Texture& tex, double u, double v) {
  if (tex.kind == TextureKind::checker) {
    const int32_t cu = static_cast<int32_t>(std::floor(u / tex.cell));
    const int32_t cv = static_cast<int32_t>(std::floor(v / tex.cell));
    const bool on = ((cu + cv) & 1) == 0;
    return 0.5 + (on ? tex.contrast : -tex.contrast);
  }
  double acc = 0.0, amp = 1.0, amp_sum = 0.0;
  double su = u / tex.cell, sv = v / tex.cell;
  for (int o = 0; o < std::max(1, tex.octaves); ++o) {
    acc += amp * value_noise(su, sv, tex.seed + 131u * o);
    amp_sum += amp;
    amp *= 0.5;
    su *= 2.0;
    sv *= 2.0;
  }
  const double n = acc / amp_sum;  // in [0,1]
  return std::clamp(0.5 + 2.0 * tex.contrast * (n - 0.5), 0.0, 1.0);
}

std::vector<Camera> CameraRig::cameras() const {
  if (count < 2) throw std::invalid_argument("CameraRig: count must be >= 2");
  std::vector<Camera> cams;
  cams.reserve(count);
  const double spacing = spacing_deg * M_PI / 180.0;
  for (int i = 0; i < count; ++i) {
    // 0, +1, -1, +2, -2, ... in units of spacing
    const int k = (i + 1) / 2;
    const double angle = (i == 0) ? 0.0 : (i % 2 == 1 ? k : -k) * spacing;
    const Vec3 center = target + radius * Vec3(-std::sin(angle), 0.0, -std::cos(angle));
    const Vec3 z = (target - center).normalized();
    const Vec3 x = Vec3::UnitY().cross(z).normalized();
    const Vec3 y = z.cross(x);
    Camera cam;
    cam.intrinsics = intrinsics;
    cam.width = width;
    cam.height = height;
    cam.pose.rotation.row(0) = x;
    cam.pose.rotation.row(1) = y;
    cam.pose.rotation.row(2) = z;
    cam.pose.translation = -(cam.pose.rotation * center);
    cams.push_back(cam);
  }
  return cams;
}

namespace {

std::optional<RayHit> intersect_plane(const PlanePrimitive& p, const Vec3& o,
                                      const Vec3& dir) {
  const Vec3 n = p.axis_u.cross(p.axis_v);
  const double denom = n.dot(dir);
  if (std::abs(denom) < 1e-14) return std::nullopt;
  const double t = n.dot(p.center - o) / denom;
  if (t <= 1e-9) return std::nullopt;
  const Vec3 hit = o + t * dir;
  const double u = (hit - p.center).dot(p.axis_u);
  const double v = (hit - p.center).dot(p.axis_v);
  if (std::abs(u) > p.half_u || std::abs(v) > p.half_v) return std::nullopt;
  RayHit h;
  h.depth = t;
  h.u = u;
  h.v = v;
  return h;
}

std::optional<RayHit> intersect_box(const BoxPrimitive& b, const Vec3& o,
                                    const Vec3& dir) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int near_axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-14) {
      if (o[a] < b.box_min[a] || o[a] > b.box_max[a]) return std::nullopt;
      continue;
    }
    double t0 = (b.box_min[a] - o[a]) / dir[a];
    double t1 = (b.box_max[a] - o[a]) / dir[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_near) {
      t_near = t0;
      near_axis = a;
    }
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_near <= 1e-9 || near_axis < 0) return std::nullopt;
  const Vec3 hit = o + t_near * dir;
  RayHit h;
  h.depth = t_near;
  h.u = hit[(near_axis + 1) % 3];
  h.v = hit[(near_axis + 2) % 3];
  return h;
}

}  // namespace

std::optional<RayHit> cast_ray(const SceneDefinition& scene, const Vec3& origin,
                               const Vec3& dir) {
  std::optional<RayHit> best;
  for (size_t i = 0; i < scene.primitives.size(); ++i) {
    const Primitive& pr = scene.primitives[i];
    std::optional<RayHit> h = pr.kind == Primitive::Kind::plane
                                  ? intersect_plane(pr.plane, origin, dir)
                                  : intersect_box(pr.box, origin, dir);
    if (h && (!best || h->depth < best->depth)) {
      h->primitive = static_cast<int>(i);
      best = h;
    }
  }
  return best;
}

RenderedView render_view(const SceneDefinition& scene, const Camera& cam,
                         int supersample) {
  if (scene.primitives.empty())
    throw std::invalid_argument("render_view: scene has no primitives");
  if (cam.width <= 0 || cam.height <= 0)
    throw std::invalid_argument("render_view: camera resolution must be positive");
  if (supersample < 1)
    throw std::invalid_argument("render_view: supersample must be >= 1");
  RenderedView view;
  view.camera = cam;
  view.image = ImageF::Constant(cam.height, cam.width,
                                static_cast<float>(scene.background));
  view.gt_depth = ImageF::Zero(cam.height, cam.width);

  const Vec3 origin = cam.center();
  const Mat3 rt = cam.pose.rotation.transpose();
  const CameraIntrinsics& k = cam.intrinsics;
  const int ss = supersample;
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      // dir has unit z in the camera frame, so the ray parameter is the depth
      const Vec3 dir_cam((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      const Vec3 dir = rt * dir_cam;
      const auto hit = cast_ray(scene, origin, dir);
      if (!hit) continue;
      view.gt_depth(y, x) = static_cast<float>(hit->depth);
      const Texture& tex = scene.primitives[hit->primitive].kind == Primitive::Kind::plane
                               ? scene.primitives[hit->primitive].plane.texture
                               : scene.primitives[hit->primitive].box.texture;
      if (ss == 1) {
        view.image(y, x) = static_cast<float>(texture_value(tex, hit->u, hit->v));
        continue;
      }
      // Average sub-pixel rays so every view sees the same band-limited
      // signal; point sampling aliases the texture differently per view.
      double acc = 0.0;
      int n = 0;
      for (int sy = 0; sy < ss; ++sy) {
        for (int sx = 0; sx < ss; ++sx) {
          const double ox = (sx + 0.5) / ss - 0.5, oy = (sy + 0.5) / ss - 0.5;
          const Vec3 sub_cam((x + ox - k.cx) / k.fx, (y + oy - k.cy) / k.fy, 1.0);
          const auto sub = cast_ray(scene, origin, rt * sub_cam);
          if (!sub || sub->primitive != hit->primitive) continue;
          const Texture& st = scene.primitives[sub->primitive].kind == Primitive::Kind::plane
                                  ? scene.primitives[sub->primitive].plane.texture
                                  : scene.primitives[sub->primitive].box.texture;
          acc += texture_value(st, sub->u, sub->v);
          ++n;
        }
      }
      view.image(y, x) = n > 0
                             ? static_cast<float>(acc / n)
                             : static_cast<float>(texture_value(tex, hit->u, hit->v));
    }
  }
  return view;
}

OcclusionCase make_occlusion_case(uint64_t seed, double base_depth,
                                  int occluder_count) {
  OcclusionCase oc;
  oc.base_depth = base_depth;
  oc.region_half = 0.14 * base_depth;

  oc.rig.radius = base_depth;
  oc.rig.spacing_deg = 16.0;
  oc.rig.count = 5;
  oc.rig.width = 160;
  oc.rig.height = 128;
  oc.rig.intrinsics.fx = oc.rig.intrinsics.fy = 500.0;
  oc.rig.intrinsics.cx = (oc.rig.width - 1) / 2.0;
  oc.rig.intrinsics.cy = (oc.rig.height - 1) / 2.0;

  const int source_count = oc.rig.count - 1;
  if (occluder_count < 0 || occluder_count >= source_count)
    throw std::invalid_argument(
        "make_occlusion_case: occluder_count must be < source-view count");

  const uint32_t s32 = static_cast<uint32_t>(seed ^ (seed >> 32));
  oc.scene.seed = seed;

  PlanePrimitive bg;
  bg.center = Vec3::Zero();
  bg.axis_u = Vec3::UnitX();
  bg.axis_v = Vec3::UnitY();
  bg.half_u = 0.58 * base_depth;
  bg.half_v = 0.48 * base_depth;
  bg.texture.kind = TextureKind::noise;
  bg.texture.cell = 0.0096 * base_depth;
  bg.texture.contrast = 0.45;
  bg.texture.seed = s32 * 2654435761u + 1u;
  bg.texture.octaves = 2;
  oc.scene.primitives.push_back(Primitive::make_plane(bg));

  const std::vector<Camera> cams = oc.rig.cameras();
  // Occlude the sources farthest from the reference first; the nearest
  // source stays informative.
  for (int q = 0; q < occluder_count; ++q) {
    const int src_index = source_count - q;  // rig camera id, 1-based sources
    oc.occluded_sources.push_back(src_index - 1);
    const Vec3 cam_c = cams[src_index].center();
    const double f = 0.2;  // occluder placed at this fraction from the camera
    const Vec3 box_c = cam_c + f * (Vec3::Zero() - cam_c);
    const double b = f * oc.region_half * 1.45 + 0.012 * base_depth;
    BoxPrimitive box;
    box.box_min = box_c - Vec3::Constant(b);
    box.box_max = box_c + Vec3::Constant(b);
    box.texture.kind = TextureKind::noise;
    box.texture.cell = 0.008 * base_depth;
    box.texture.contrast = 0.48;
    box.texture.seed = s32 * 0x9e3779b9u + 97u * (q + 1);
    box.texture.octaves = 2;
    oc.scene.primitives.push_back(Primitive::make_box(box));
  }

  // Verify: region blocked exactly in the designated views, open elsewhere.
  const double r = oc.region_half;
  const Vec3 probes[5] = {Vec3(0, 0, 0), Vec3(r, r, 0), Vec3(-r, r, 0),
                          Vec3(r, -r, 0), Vec3(-r, -r, 0)};
  for (int i = 0; i < oc.rig.count; ++i) {
    const bool should_block =
        i > 0 && std::find(oc.occluded_sources.begin(), oc.occluded_sources.end(),
                           i - 1) != oc.occluded_sources.end();
    const Vec3 c = cams[i].center();
    for (const Vec3& p : probes) {
      const auto hit = cast_ray(oc.scene, c, (p - c).normalized());
      const bool blocked = hit && hit->primitive != 0;
      if (blocked != should_block)
        throw std::runtime_error(
            "make_occlusion_case: infeasible occluder placement");
    }
  }
  return oc;
}

std::vector<SurfacePoint> sample_gt_cloud(const SceneDefinition& scene,
                                          double density) {
  if (!(density > 0.0)) throw std::invalid_argument("sample_gt_cloud: density <= 0");
  std::vector<SurfacePoint> points;

  auto sample_rect = [&](const Vec3& center, const Vec3& au, const Vec3& av,
                         double hu, double hv, int prim, uint32_t face_seed) {
    const double area = 4.0 * hu * hv;
    const long n = std::max<long>(1, std::lround(density * area));
    long nu = std::max<long>(1, std::lround(std::sqrt(n * hu / hv)));
    long nv = std::max<long>(1, (n + nu - 1) / nu);
    for (long iu = 0; iu < nu; ++iu) {
      for (long iv = 0; iv < nv; ++iv) {
        const double ju =
            lattice_value(static_cast<int32_t>(iu), static_cast<int32_t>(iv),
                          face_seed) - 0.5;
        const double jv =
            lattice_value(static_cast<int32_t>(iv), static_cast<int32_t>(iu),
                          face_seed ^ 0x5bd1e995u) - 0.5;
        const double u = (-hu) + (iu + 0.5 + 0.9 * ju) * (2.0 * hu / nu);
        const double v = (-hv) + (iv + 0.5 + 0.9 * jv) * (2.0 * hv / nv);
        points.push_back({center + u * au + v * av, prim});
      }
    }
  };

  for (size_t i = 0; i < scene.primitives.size(); ++i) {
    const Primitive& pr = scene.primitives[i];
    const uint32_t base =
        mix32(static_cast<uint32_t>(scene.seed) ^ (0x100u + static_cast<uint32_t>(i)));
    if (pr.kind == Primitive::Kind::plane) {
      sample_rect(pr.plane.center, pr.plane.axis_u, pr.plane.axis_v,
                  pr.plane.half_u, pr.plane.half_v, static_cast<int>(i), base);
    } else {
      const Vec3 c = 0.5 * (pr.box.box_min + pr.box.box_max);
      const Vec3 h = 0.5 * (pr.box.box_max - pr.box.box_min);
      for (int a = 0; a < 3; ++a) {
        const int u = (a + 1) % 3, v = (a + 2) % 3;
        Vec3 au = Vec3::Zero(), av = Vec3::Zero();
        au[u] = 1.0;
        av[v] = 1.0;
        for (int side = 0; side < 2; ++side) {
          Vec3 fc = c;
          fc[a] = side == 0 ? pr.box.box_min[a] : pr.box.box_max[a];
          sample_rect(fc, au, av, h[u], h[v], static_cast<int>(i),
                      base + 7u * (2 * a + side + 1));
        }
      }
    }
  }
  return points;
}

void write_scene_file(const std::string& path, const SceneDefinition& scene,
                      const CameraRig& rig) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scene file: " + path);
  out.precision(17);
  out << "lamvs_scene 1\n";
  out << "seed " << scene.seed << "\n";
  out << "background " << scene.background << "\n";
  out << "rig arc " << rig.radius << " " << rig.spacing_deg << " " << rig.count
      << " " << rig.intrinsics.fx << " " << rig.intrinsics.fy << " "
      << rig.intrinsics.cx << " " << rig.intrinsics.cy << " " << rig.width << " "
      << rig.height << " " << rig.target.x() << " " << rig.target.y() << " "
      << rig.target.z() << "\n";
  auto write_tex = [&](const Texture& t) {
    out << (t.kind == TextureKind::checker ? "checker" : "noise") << " " << t.cell
        << " " << t.contrast << " " << t.seed << " " << t.octaves;
  };
  for (const Primitive& pr : scene.primitives) {
    if (pr.kind == Primitive::Kind::plane) {
      const PlanePrimitive& p = pr.plane;
      out << "plane " << p.center.transpose() << " " << p.axis_u.transpose()
          << " " << p.axis_v.transpose() << " " << p.half_u << " " << p.half_v
          << " ";
      write_tex(p.texture);
      out << "\n";
    } else {
      const BoxPrimitive& b = pr.box;
      out << "box " << b.box_min.transpose() << " " << b.box_max.transpose()
          << " ";
      write_tex(b.texture);
      out << "\n";
    }
  }
}

std::pair<SceneDefinition, CameraRig> read_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file: " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "lamvs_scene" || version != 1)
    throw std::runtime_error("scene file: unsupported format/version: " + path);

  SceneDefinition scene;
  CameraRig rig;
  auto read_tex = [&](std::istream& s) {
    Texture t;
    std::string kind;
    s >> kind >> t.cell >> t.contrast >> t.seed >> t.octaves;
    t.kind = kind == "checker" ? TextureKind::checker : TextureKind::noise;
    return t;
  };
  std::string tok;
  while (in >> tok) {
    if (tok == "seed") {
      in >> scene.seed;
    } else if (tok == "background") {
      in >> scene.background;
    } else if (tok == "rig") {
      std::string layout;
      in >> layout >> rig.radius >> rig.spacing_deg >> rig.count >>
          rig.intrinsics.fx >> rig.intrinsics.fy >> rig.intrinsics.cx >>
          rig.intrinsics.cy >> rig.width >> rig.height >> rig.target.x() >>
          rig.target.y() >> rig.target.z();
      if (layout != "arc")
        throw std::runtime_error("scene file: unknown rig layout " + layout);
    } else if (tok == "plane") {
      PlanePrimitive p;
      in >> p.center.x() >> p.center.y() >> p.center.z() >> p.axis_u.x() >>
          p.axis_u.y() >> p.axis_u.z() >> p.axis_v.x() >> p.axis_v.y() >>
          p.axis_v.z() >> p.half_u >> p.half_v;
      p.texture = read_tex(in);
      scene.primitives.push_back(Primitive::make_plane(p));
    } else if (tok == "box") {
      BoxPrimitive b;
      in >> b.box_min.x() >> b.box_min.y() >> b.box_min.z() >> b.box_max.x() >>
          b.box_max.y() >> b.box_max.z();
      b.texture = read_tex(in);
      scene.primitives.push_back(Primitive::make_box(b));
    } else {
      throw std::runtime_error("scene file: unknown record '" + tok + "'");
    }
  }
  if (scene.primitives.empty())
    throw std::runtime_error("scene file: no primitives: " + path);
  return {scene, rig};
}

}  // namespace lamvs
