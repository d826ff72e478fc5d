#include "lamvs/geometry.hpp"

#include <Eigen/LU>

#include <cmath>
#include <fstream>
#include <sstream>

namespace lamvs {

CameraIntrinsics CameraIntrinsics::from_matrix(const Mat3& k) {
  CameraIntrinsics in;
  in.fx = k(0, 0);
  in.fy = k(1, 1);
  in.cx = k(0, 2);
  in.cy = k(1, 2);
  if (in.fx <= 0.0 || in.fy <= 0.0)
    throw std::invalid_argument("intrinsics: focal lengths must be positive");
  return in;
}

bool CameraPose::is_rigid(double tol) const {
  const Mat3 rtr = rotation.transpose() * rotation;
  if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

CameraPose relative_pose(const Camera& ref, const Camera& src) {
  return src.pose.compose(ref.pose.inverse());
}

Projection project_to_source(const PixelCoord& p, double d, const Camera& ref,
                             const Camera& src) {
  if (!(d > 0.0)) throw std::invalid_argument("project_to_source: depth must be positive");

  const CameraIntrinsics& ki = ref.intrinsics;
  const Vec3 x_ref((p.u - ki.cx) / ki.fx * d, (p.v - ki.cy) / ki.fy * d, d);
  const Vec3 x_src = relative_pose(ref, src).apply(x_ref);

  Projection out;
  out.source_depth = x_src.z();
  if (x_src.z() <= 0.0) return out;  // behind the source camera

  const CameraIntrinsics& ks = src.intrinsics;
  out.pixel.u = ks.fx * x_src.x() / x_src.z() + ks.cx;
  out.pixel.v = ks.fy * x_src.y() / x_src.z() + ks.cy;
  out.valid = std::isfinite(out.pixel.u) && std::isfinite(out.pixel.v);
  return out;
}

Sample bilinear_sample(const ImageF& map, const PixelCoord& p) {
  const int w = static_cast<int>(map.cols());
  const int h = static_cast<int>(map.rows());
  Sample s;
  if (w == 0 || h == 0) throw std::invalid_argument("bilinear_sample: empty map");
  if (!(p.u >= 0.0) || !(p.v >= 0.0) || !(p.u <= w - 1.0) || !(p.v <= h - 1.0))
    return s;

  const int x0 = std::min(static_cast<int>(std::floor(p.u)), w - 2 >= 0 ? w - 2 : 0);
  const int y0 = std::min(static_cast<int>(std::floor(p.v)), h - 2 >= 0 ? h - 2 : 0);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double ax = p.u - x0;
  const double ay = p.v - y0;

  const double v00 = map(y0, x0), v01 = map(y0, x1);
  const double v10 = map(y1, x0), v11 = map(y1, x1);
  s.value = static_cast<float>((1.0 - ay) * ((1.0 - ax) * v00 + ax * v01) +
                               ay * ((1.0 - ax) * v10 + ax * v11));
  s.valid = true;
  return s;
}

WarpedMap homography_warp(const ImageF& src_map, const Camera& ref,
                          const Camera& src, double d) {
  WarpedMap out;
  out.values = ImageF::Zero(ref.height, ref.width);
  out.valid = MaskImage::Zero(ref.height, ref.width);
  for (int y = 0; y < ref.height; ++y) {
    for (int x = 0; x < ref.width; ++x) {
      const Projection pr = project_to_source({double(x), double(y)}, d, ref, src);
      if (!pr.valid) continue;
      const Sample s = bilinear_sample(src_map, pr.pixel);
      if (!s.valid) continue;
      out.values(y, x) = s.value;
      out.valid(y, x) = 1;
    }
  }
  return out;
}

CameraFile read_camera_file(const std::string& path, int width, int height) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open camera file: " + path);
  std::string tok;
  in >> tok;
  if (tok != "extrinsic") throw std::runtime_error("camera file: expected 'extrinsic'");
  Mat4 e;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) in >> e(r, c);
  in >> tok;
  if (tok != "intrinsic") throw std::runtime_error("camera file: expected 'intrinsic'");
  Mat3 k;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) in >> k(r, c);
  CameraFile cf;
  in >> cf.depth_min >> cf.depth_interval;
  if (!in) throw std::runtime_error("camera file: truncated: " + path);

  cf.camera.intrinsics = CameraIntrinsics::from_matrix(k);
  cf.camera.pose.rotation = e.topLeftCorner<3, 3>();
  cf.camera.pose.translation = e.topRightCorner<3, 1>();
  cf.camera.width = width;
  cf.camera.height = height;
  if (!cf.camera.pose.is_rigid(1e-6))
    throw std::runtime_error("camera file: extrinsic rotation is not rigid: " + path);
  return cf;
}

void write_camera_file(const std::string& path, const Camera& cam,
                       double depth_min, double depth_interval) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write camera file: " + path);
  out.precision(17);
  out << "extrinsic\n";
  Mat4 e = Mat4::Identity();
  e.topLeftCorner<3, 3>() = cam.pose.rotation;
  e.topRightCorner<3, 1>() = cam.pose.translation;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out << e(r, c) << (c == 3 ? '\n' : ' ');
  }
  out << "\nintrinsic\n";
  const Mat3 k = cam.intrinsics.matrix();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out << k(r, c) << (c == 2 ? '\n' : ' ');
  }
  out << "\n" << depth_min << " " << depth_interval << "\n";
}

}  // namespace lamvs
