#include "lamvs/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lamvs {

void write_pfm(const std::string& path, const ImageF& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write pfm: " + path);
  out << "Pf\n" << image.cols() << " " << image.rows() << "\n-1.0\n";
  // bottom-to-top row order
  for (Eigen::Index y = image.rows() - 1; y >= 0; --y)
    out.write(reinterpret_cast<const char*>(image.data() + y * image.cols()),
              image.cols() * sizeof(float));
}

ImageF read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open pfm: " + path);
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  if (magic != "Pf" || w <= 0 || h <= 0)
    throw std::runtime_error("pfm: bad header: " + path);
  if (scale >= 0.0)
    throw std::runtime_error("pfm: big-endian files not supported: " + path);
  in.get();  // single whitespace after the header
  ImageF img(h, w);
  for (int y = h - 1; y >= 0; --y)
    in.read(reinterpret_cast<char*>(img.data() + static_cast<Eigen::Index>(y) * w),
            w * sizeof(float));
  if (!in) throw std::runtime_error("pfm: truncated: " + path);
  return img;
}

void write_pgm(const std::string& path, const ImageF& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write pgm: " + path);
  out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
  for (Eigen::Index y = 0; y < image.rows(); ++y) {
    for (Eigen::Index x = 0; x < image.cols(); ++x) {
      const float v = std::clamp(image(y, x), 0.0f, 1.0f);
      out.put(static_cast<char>(std::lround(v * 255.0f)));
    }
  }
}

ImageF read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open pgm: " + path);
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  in >> magic >> w >> h >> maxv;
  if (magic != "P5" || w <= 0 || h <= 0 || maxv != 255)
    throw std::runtime_error("pgm: bad header: " + path);
  in.get();
  ImageF img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int c = in.get();
      if (c < 0) throw std::runtime_error("pgm: truncated: " + path);
      img(y, x) = static_cast<float>(c) / 255.0f;
    }
  }
  return img;
}

void write_ppm(const std::string& path, const ImageF& r, const ImageF& g,
               const ImageF& b) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write ppm: " + path);
  out << "P6\n" << r.cols() << " " << r.rows() << "\n255\n";
  for (Eigen::Index y = 0; y < r.rows(); ++y) {
    for (Eigen::Index x = 0; x < r.cols(); ++x) {
      for (const ImageF* ch : {&r, &g, &b}) {
        const float v = std::clamp((*ch)(y, x), 0.0f, 1.0f);
        out.put(static_cast<char>(std::lround(v * 255.0f)));
      }
    }
  }
}

void write_ply(const std::string& path, const FusedCloud& cloud, bool ascii) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write ply: " + path);
  out << "ply\nformat " << (ascii ? "ascii" : "binary_little_endian")
      << " 1.0\n";
  out << "element vertex " << cloud.points.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  for (const CloudPoint& p : cloud.points) {
    if (ascii) {
      out << static_cast<float>(p.position.x()) << " "
          << static_cast<float>(p.position.y()) << " "
          << static_cast<float>(p.position.z()) << " " << int(p.r) << " "
          << int(p.g) << " " << int(p.b) << "\n";
    } else {
      const float xyz[3] = {static_cast<float>(p.position.x()),
                            static_cast<float>(p.position.y()),
                            static_cast<float>(p.position.z())};
      out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
      out.put(static_cast<char>(p.r));
      out.put(static_cast<char>(p.g));
      out.put(static_cast<char>(p.b));
    }
  }
}

FusedCloud read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open ply: " + path);
  std::string line;
  bool ascii = false;
  size_t count = 0;
  std::getline(in, line);
  if (line != "ply") throw std::runtime_error("ply: bad magic: " + path);
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = fmt == "ascii";
      if (!ascii && fmt != "binary_little_endian")
        throw std::runtime_error("ply: unsupported format: " + fmt);
    } else if (tok == "element") {
      std::string kind;
      ls >> kind >> count;
      if (kind != "vertex") throw std::runtime_error("ply: unsupported element");
    } else if (tok == "end_header") {
      break;
    }
  }
  FusedCloud cloud;
  cloud.points.resize(count);
  for (CloudPoint& p : cloud.points) {
    if (ascii) {
      float x, y, z;
      int r, g, b;
      in >> x >> y >> z >> r >> g >> b;
      p.position = Vec3(x, y, z);
      p.r = static_cast<uint8_t>(r);
      p.g = static_cast<uint8_t>(g);
      p.b = static_cast<uint8_t>(b);
    } else {
      float xyz[3];
      in.read(reinterpret_cast<char*>(xyz), sizeof(xyz));
      p.position = Vec3(xyz[0], xyz[1], xyz[2]);
      p.r = static_cast<uint8_t>(in.get());
      p.g = static_cast<uint8_t>(in.get());
      p.b = static_cast<uint8_t>(in.get());
    }
  }
  if (!in) throw std::runtime_error("ply: truncated: " + path);
  return cloud;
}

void write_volume_dump(const std::string& path,
                       const std::vector<Volume>& channels,
                       const std::vector<int>& channel_order) {
  if (channels.empty()) throw std::invalid_argument("volume dump: empty");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write volume dump: " + path);
  const Volume& v = channels.front();
  out << "lamvs_volume 1\n"
      << v.height << " " << v.width << " " << v.depth << " " << channels.size()
      << "\n";
  for (size_t i = 0; i < channel_order.size(); ++i)
    out << channel_order[i] << (i + 1 == channel_order.size() ? '\n' : ' ');
  for (const Volume& ch : channels) {
    out.write(reinterpret_cast<const char*>(ch.values.data()),
              ch.values.size() * sizeof(float));
    out.write(reinterpret_cast<const char*>(ch.valid.data()), ch.valid.size());
  }
}

}  // namespace lamvs
