#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lamvs/geometry.hpp"
#include "lamvs/types.hpp"

namespace lamvs {

enum class TextureKind { checker, noise };

// Deterministic procedural texture over surface (u, v) coordinates.
struct Texture {
  TextureKind kind = TextureKind::noise;
  double cell = 10.0;      // cell size in scene units
  double contrast = 0.45;  // amplitude around mid gray
  uint32_t seed = 0;
  int octaves = 2;
};

double texture_value(const Texture& tex, double u, double v);

// Finite textured rectangle: center, orthonormal in-plane axes, half extents.
struct PlanePrimitive {
  Vec3 center = Vec3::Zero();
  Vec3 axis_u = Vec3::UnitX();
  Vec3 axis_v = Vec3::UnitY();
  double half_u = 1.0;
  double half_v = 1.0;
  Texture texture;
};

// Axis-aligned textured box.
struct BoxPrimitive {
  Vec3 box_min = Vec3::Zero();
  Vec3 box_max = Vec3::Ones();
  Texture texture;
};

struct Primitive {
  enum class Kind { plane, box };
  Kind kind = Kind::plane;
  PlanePrimitive plane;
  BoxPrimitive box;

  static Primitive make_plane(const PlanePrimitive& p) {
    Primitive pr;
    pr.kind = Kind::plane;
    pr.plane = p;
    return pr;
  }
  static Primitive make_box(const BoxPrimitive& b) {
    Primitive pr;
    pr.kind = Kind::box;
    pr.box = b;
    return pr;
  }
};

struct SceneDefinition {
  std::vector<Primitive> primitives;
  uint64_t seed = 0;
  double background = 0.02;  // image value where rays miss everything
};

// Arc of cameras in the x-z plane looking at `target`; camera 0 (angle 0)
// is the reference, sources alternate +/- spacing outwards.
struct CameraRig {
  double radius = 500.0;
  double spacing_deg = 10.0;
  int count = 5;
  CameraIntrinsics intrinsics;
  int width = 160;
  int height = 128;
  Vec3 target = Vec3::Zero();

  std::vector<Camera> cameras() const;
};

struct RenderedView {
  ImageF image;
  ImageF gt_depth;  // 0 where no primitive is hit
  Camera camera;
};

struct RayHit {
  double depth = 0.0;  // distance along the (unit-z-in-camera) ray
  int primitive = -1;
  double u = 0.0, v = 0.0;  // surface coordinates for texturing
};

// Nearest intersection of the world-space ray with the scene.
std::optional<RayHit> cast_ray(const SceneDefinition& scene, const Vec3& origin,
                               const Vec3& dir);

// `supersample` casts supersample^2 sub-pixel rays per pixel and averages
// their texture values, giving view-consistent band-limited images; 1 keeps
// plain center sampling.
RenderedView render_view(const SceneDefinition& scene, const Camera& cam,
                         int supersample = 1);

struct OcclusionCase {
  SceneDefinition scene;
  CameraRig rig;
  // Ids (into rig.cameras(), reference excluded) of the occluded sources.
  std::vector<int> occluded_sources;
  double region_half = 0.0;  // target region half extent on the background plane
  double base_depth = 0.0;
};

// Background plane + boxes occluding a central target region in exactly
// `occluder_count` source views; throws if the construction is infeasible.
OcclusionCase make_occlusion_case(uint64_t seed, double base_depth,
                                  int occluder_count);

struct SurfacePoint {
  Vec3 position;
  int primitive = -1;
};

// Deterministic stratified sampling of all primitive surfaces,
// `density` points per unit area.
std::vector<SurfacePoint> sample_gt_cloud(const SceneDefinition& scene,
                                          double density);

// Structured-text scene document (versioned).
void write_scene_file(const std::string& path, const SceneDefinition& scene,
                      const CameraRig& rig);
std::pair<SceneDefinition, CameraRig> read_scene_file(const std::string& path);

}  // namespace lamvs
