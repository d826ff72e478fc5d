#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "lamvs/types.hpp"

namespace lamvs {

struct CameraIntrinsics {
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;

  Mat3 matrix() const {
    Mat3 k = Mat3::Identity();
    k(0, 0) = fx;
    k(1, 1) = fy;
    k(0, 2) = cx;
    k(1, 2) = cy;
    return k;
  }

  static CameraIntrinsics from_matrix(const Mat3& k);

  // Intrinsics of the same camera after resampling the image by `scale`,
  // with pixel centers at integer coordinates.
  CameraIntrinsics scaled(double scale) const {
    CameraIntrinsics s;
    s.fx = fx * scale;
    s.fy = fy * scale;
    s.cx = (cx + 0.5) * scale - 0.5;
    s.cy = (cy + 0.5) * scale - 0.5;
    return s;
  }
};

// Rigid transform X_out = R * X_in + t.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  CameraPose inverse() const {
    CameraPose p;
    p.rotation = rotation.transpose();
    p.translation = -(rotation.transpose() * translation);
    return p;
  }

  // Composition: (*this) after `first`.
  CameraPose compose(const CameraPose& first) const {
    CameraPose p;
    p.rotation = rotation * first.rotation;
    p.translation = rotation * first.translation + translation;
    return p;
  }

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }

  bool is_rigid(double tol = 1e-9) const;
};

// Full camera: intrinsics + world-to-camera pose + image size.
struct Camera {
  CameraIntrinsics intrinsics;
  CameraPose pose;  // world -> camera
  int width = 0;
  int height = 0;

  Vec3 center() const { return pose.inverse().translation; }

  Camera scaled(double scale) const {
    Camera c = *this;
    c.intrinsics = intrinsics.scaled(scale);
    c.width = static_cast<int>(std::lround(width * scale));
    c.height = static_cast<int>(std::lround(height * scale));
    return c;
  }
};

// Pose mapping reference-camera coordinates to source-camera coordinates.
CameraPose relative_pose(const Camera& ref, const Camera& src);

struct Projection {
  PixelCoord pixel;
  double source_depth = 0.0;  // z in the source camera frame
  bool valid = false;         // false when the point lands behind the source camera
};

// Back-project reference pixel p at depth d, transform into the source frame
// and project with the source intrinsics.
Projection project_to_source(const PixelCoord& p, double d, const Camera& ref,
                             const Camera& src);

struct Sample {
  float value = 0.0f;
  bool valid = false;
};

// Bilinear interpolation; coordinates outside [0,W-1]x[0,H-1] are invalid.
Sample bilinear_sample(const ImageF& map, const PixelCoord& p);

struct WarpedMap {
  ImageF values;
  MaskImage valid;
};

// Resample `src_map` onto the reference pixel grid at hypothesized depth d.
WarpedMap homography_warp(const ImageF& src_map, const Camera& ref,
                          const Camera& src, double d);

// MVSNet-style cam.txt: extrinsic 4x4, intrinsic 3x3, depth range line.
struct CameraFile {
  Camera camera;
  double depth_min = 0.0;
  double depth_interval = 0.0;
};

CameraFile read_camera_file(const std::string& path, int width, int height);
void write_camera_file(const std::string& path, const Camera& cam,
                       double depth_min, double depth_interval);

}  // namespace lamvs
