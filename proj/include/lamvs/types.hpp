#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>
#include <vector>

namespace lamvs {

using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

// Image-shaped grids, (row, col) = (y, x). Geometry runs in double,
// feature/cost storage in float.
using ImageF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ImageD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskImage = Eigen::Matrix<uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Continuous pixel coordinate (column u, row v).
struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

// Dense H x W x D grid of matching costs with a per-cell validity mask.
// Invalid cells hold exactly 0.
struct Volume {
  int height = 0;
  int width = 0;
  int depth = 0;
  std::vector<float> values;
  std::vector<uint8_t> valid;

  Volume() = default;
  Volume(int h, int w, int d)
      : height(h), width(w), depth(d),
        values(static_cast<size_t>(h) * w * d, 0.0f),
        valid(static_cast<size_t>(h) * w * d, 0) {}

  size_t index(int y, int x, int j) const {
    return (static_cast<size_t>(y) * width + x) * depth + j;
  }
  float& at(int y, int x, int j) { return values[index(y, x, j)]; }
  float at(int y, int x, int j) const { return values[index(y, x, j)]; }
  uint8_t& valid_at(int y, int x, int j) { return valid[index(y, x, j)]; }
  uint8_t valid_at(int y, int x, int j) const { return valid[index(y, x, j)]; }

  bool same_shape(const Volume& o) const {
    return height == o.height && width == o.width && depth == o.depth;
  }
};

// Per-pixel depth map with confidence and validity.
struct DepthEstimate {
  ImageF depth;
  ImageF confidence;
  MaskImage valid;

  int height() const { return static_cast<int>(depth.rows()); }
  int width() const { return static_cast<int>(depth.cols()); }
};

struct CloudPoint {
  Vec3 position = Vec3::Zero();
  uint8_t r = 0, g = 0, b = 0;
  int support = 1;
};

struct FusedCloud {
  std::vector<CloudPoint> points;
};

}  // namespace lamvs
